use nsadf::adf::{fit_bernstein, lambda_qr_average, BernsteinFitConfig, QuantileSchedule, RayGrid};
use nsadf::basis::BasisSpec;
use nsadf::copula::{sample, CopulaFamily, CopulaSpec};
use std::time::Instant;

fn main() {
    let n = 10_000;
    let spec = CopulaSpec::new(CopulaFamily::InvLogistic, n, 1);
    let t0 = Instant::now();
    let out = sample(&spec, None).unwrap();
    println!("sample: {:.2?}", t0.elapsed());

    let t0 = Instant::now();
    let grid = lambda_qr_average(
        &out.series,
        &RayGrid::default(),
        &QuantileSchedule::standard(),
        &BasisSpec::poly(3),
    )
    .unwrap();
    println!("grid (101 rays x 60 fits, rayon): {:.2?}", t0.elapsed());
    println!("unconverged fits: {}", grid.unconverged_fits);

    let t0 = Instant::now();
    let bp = fit_bernstein(&grid, &BernsteinFitConfig::default()).unwrap();
    println!("bernstein fit: {:.2?} objective {:.6} converged {}", t0.elapsed(), bp.objective, bp.converged);
}
