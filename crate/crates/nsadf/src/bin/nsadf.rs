fn main() {
    std::process::exit(nsadf::cli::main());
}
