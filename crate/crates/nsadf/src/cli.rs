//! Command-line front end: subcommand routing, config parsing, artifact
//! emission, and the run manifest.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure
//! (with the failing stage named), 4 I/O error. Every run directory gets a
//! `manifest.json` echoing the configuration, the seed, and SHA-256 hashes
//! of all artifacts; rerunning with the same configuration reproduces the
//! artifacts byte for byte.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::adf::{
    fit_bernstein, lambda_qr_average, AdfGrid, BernsteinFitConfig, BernsteinModel,
    QuantileSchedule, RayGrid,
};
use crate::basis::BasisSpec;
use crate::copula::{CopulaFamily, CopulaSpec, McmcConfig};
use crate::curve::{averaged_exp_curve, back_transform, AdfEstimator};
use crate::error::{Error, Result};
use crate::evaluation::{envelope, run_family_study, FamilyStudy, StudyConfig};
use crate::io::{self, RunWriter};
use crate::margins::{fit_marginal_model, to_exponential, MarginalFitConfig, MarginalModel};
use crate::surrogate::{
    generate_surrogate, run_case_pipeline, CasePipelineConfig, CaseStage, SurrogateSpec,
};
use crate::svg::{time_ramp, SvgPlot};

#[derive(Parser, Debug)]
#[command(
    name = "nsadf",
    version,
    about = "Non-stationary bivariate extremal dependence: ADF and return-curve estimation"
)]
struct Cli {
    /// Worker threads (default: all cores; the NSADF_WORKERS environment
    /// variable overrides the default). `--workers 1` is the sequential
    /// reference path.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one of the six dependence structures on exponential margins
    Simulate(SimulateArgs),
    /// Fit marginal models (location-scale body + GPD residual tail) to raw data
    FitMargins(FitMarginsArgs),
    /// Transform raw data to standard exponential margins through fitted models
    Transform(TransformArgs),
    /// Estimate the non-stationary ADF (quantile-regression grid + smooth fit)
    FitAdf(FitAdfArgs),
    /// Build return curves from fitted ADF artifacts
    ReturnCurve(ReturnCurveArgs),
    /// Replication study: MISE/ISE tables and envelope bands per family
    Evaluate(EvaluateArgs),
    /// End-to-end synthetic case study (or real data with the same schema)
    CaseStudy(CaseStudyArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// gaussian_pos | gaussian_neg | inv_logistic | inv_alog | inv_husler_reiss | gauge_model12
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Asymmetry masses for inv_alog
    #[arg(long, default_value_t = 0.3)]
    kappa1: f64,
    #[arg(long, default_value_t = 0.7)]
    kappa2: f64,
    #[arg(long, default_value_t = 1.4)]
    mcmc_proposal_sd: f64,
    #[arg(long, default_value_t = 10_000)]
    mcmc_burn_in: usize,
    #[arg(long, default_value_t = 10)]
    mcmc_thin: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FitMarginsArgs {
    /// Raw series CSV (t,day,x,y)
    #[arg(long)]
    data: PathBuf,
    /// JSON config: {"x": MarginalFitConfig, "y": MarginalFitConfig}
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TransformArgs {
    #[arg(long)]
    data: PathBuf,
    /// margins.json produced by fit-margins
    #[arg(long)]
    margins: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FitAdfArgs {
    /// Exponential-margin series CSV
    #[arg(long)]
    data: PathBuf,
    /// JSON config overriding the ADF fit settings
    #[arg(long)]
    config: Option<PathBuf>,
    /// Emit an SVG of λ(w|z_t) at these comma-separated t values
    #[arg(long, value_delimiter = ',')]
    plot_t: Vec<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReturnCurveArgs {
    /// adf_grid.json from fit-adf
    #[arg(long)]
    adf: PathBuf,
    /// bernstein.json from fit-adf; when given the smooth estimator drives
    /// the curve, otherwise the quantile-regression grid does
    #[arg(long)]
    bernstein: Option<PathBuf>,
    #[arg(long)]
    p: f64,
    /// Time value(s) at which to build curves (repeatable)
    #[arg(long, required = true)]
    t: Vec<u32>,
    #[arg(long, value_parser = ["exp", "original"], default_value = "exp")]
    margin: String,
    /// margins.json; required for --margin original
    #[arg(long)]
    margins: Option<PathBuf>,
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Comma-separated families (default: all six)
    #[arg(long, value_delimiter = ',')]
    families: Vec<String>,
    #[arg(long, default_value_t = 50)]
    replicates: usize,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 7)]
    degree: usize,
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CaseStudyArgs {
    /// JSON config: {"surrogate": SurrogateSpec, "pipeline": CasePipelineConfig}
    #[arg(long)]
    config: Option<PathBuf>,
    /// Real-data override: raw CSV with the t,day,x,y schema
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
struct MarginalPairConfig {
    x: MarginalFitConfig,
    y: MarginalFitConfig,
}

impl Default for MarginalPairConfig {
    fn default() -> Self {
        MarginalPairConfig {
            x: MarginalFitConfig::default(),
            y: MarginalFitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
struct AdfCliConfig {
    rays: usize,
    qr_basis: BasisSpec,
    bernstein: BernsteinFitConfig,
}

impl Default for AdfCliConfig {
    fn default() -> Self {
        AdfCliConfig {
            rays: 101,
            qr_basis: BasisSpec::poly(3),
            bernstein: BernsteinFitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CaseStudyConfig {
    surrogate: SurrogateSpec,
    pipeline: CasePipelineConfig,
}

impl Default for CaseStudyConfig {
    fn default() -> Self {
        CaseStudyConfig {
            surrogate: SurrogateSpec::default(),
            pipeline: CasePipelineConfig::default(),
        }
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers.or_else(|| {
        std::env::var("NSADF_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    }) {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build_global();
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::FitMargins(a) => fit_margins(a),
        Command::Transform(a) => transform(a),
        Command::FitAdf(a) => fit_adf(a),
        Command::ReturnCurve(a) => return_curve(a),
        Command::Evaluate(a) => evaluate(a),
        Command::CaseStudy(a) => case_study(a),
    }
}

fn load_config_or_default<T: serde::de::DeserializeOwned + Default>(
    path: &Option<PathBuf>,
) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let family = CopulaFamily::parse(&a.family)?;
    let spec = CopulaSpec {
        family,
        n: a.n,
        asymmetry: (family == CopulaFamily::InvALog).then_some((a.kappa1, a.kappa2)),
        seed: a.seed,
    };
    let mcmc = McmcConfig {
        proposal_sd: a.mcmc_proposal_sd,
        burn_in: a.mcmc_burn_in,
        thin: a.mcmc_thin,
        chain_seed: 0,
    };
    let mcmc_opt = (family == CopulaFamily::GaugeModel12).then_some(&mcmc);
    let out = crate::copula::sample(&spec, mcmc_opt)?;
    let mut w = RunWriter::new(
        &a.out,
        "simulate",
        Some(a.seed),
        serde_json::to_value(&spec)?,
    )?;
    w.write_text(
        "series.csv",
        &io::series_to_csv(out.series.t(), out.series.day(), out.series.x(), out.series.y()),
    )?;
    #[derive(Serialize)]
    struct Sidecar<'a> {
        spec: &'a CopulaSpec,
        mcmc: Option<&'a McmcConfig>,
        diagnostics: Option<&'a crate::copula::McmcDiagnostics>,
    }
    w.write_json(
        "simulate.json",
        "nsadf/simulate",
        &Sidecar {
            spec: &spec,
            mcmc: mcmc_opt,
            diagnostics: out.mcmc.as_ref(),
        },
    )?;
    w.finish()
}

fn fit_margins(a: FitMarginsArgs) -> Result<()> {
    let cfg: MarginalPairConfig = load_config_or_default(&a.config)?;
    let raw = io::read_raw_csv(&a.data)?;
    let mx = fit_marginal_model(&raw.x, &raw.t, raw.day.as_deref(), &cfg.x)
        .map_err(|e| e.in_stage("margins-x"))?;
    let my = fit_marginal_model(&raw.y, &raw.t, raw.day.as_deref(), &cfg.y)
        .map_err(|e| e.in_stage("margins-y"))?;
    let mut w = RunWriter::new(&a.out, "fit-margins", None, serde_json::to_value(&cfg)?)?;
    write_margins(&mut w, &mx, &my)?;
    w.finish()
}

#[derive(Serialize, serde::Deserialize)]
struct MarginalPair {
    x: MarginalModel,
    y: MarginalModel,
}

fn write_margins(w: &mut RunWriter, mx: &MarginalModel, my: &MarginalModel) -> Result<()> {
    w.write_json(
        "margins.json",
        "nsadf/margins",
        &MarginalPair {
            x: mx.clone(),
            y: my.clone(),
        },
    )?;
    Ok(())
}

fn transform(a: TransformArgs) -> Result<()> {
    let raw = io::read_raw_csv(&a.data)?;
    let pair: MarginalPair = io::load_json(&a.margins, "nsadf/margins")?;
    let exp = to_exponential(&raw, &pair.x, &pair.y).map_err(|e| e.in_stage("transform"))?;
    let mut w = RunWriter::new(
        &a.out,
        "transform",
        None,
        serde_json::json!({"data": a.data.display().to_string()}),
    )?;
    w.write_text(
        "exponential.csv",
        &io::series_to_csv(exp.t(), exp.day(), exp.x(), exp.y()),
    )?;
    w.finish()
}

fn fit_adf(a: FitAdfArgs) -> Result<()> {
    let cfg: AdfCliConfig = load_config_or_default(&a.config)?;
    let series = io::read_exp_csv(&a.data)?;
    let rays = RayGrid::with_step(cfg.rays);
    let schedule = QuantileSchedule::standard();
    let grid = lambda_qr_average(&series, &rays, &schedule, &cfg.qr_basis)
        .map_err(|e| e.in_stage("adf-grid"))?;
    let bp = fit_bernstein(&grid, &cfg.bernstein).map_err(|e| e.in_stage("bernstein"))?;
    let mut w = RunWriter::new(&a.out, "fit-adf", Some(cfg.bernstein.seed), serde_json::to_value(&cfg)?)?;
    w.write_json("adf_grid.json", "nsadf/adf-grid", &grid)?;
    w.write_json("bernstein.json", "nsadf/bernstein", &bp.model)?;
    if !a.plot_t.is_empty() {
        let mut plot = SvgPlot::new("ADF over rays", "w", "lambda");
        for (i, &tv) in a.plot_t.iter().enumerate() {
            let t_idx = t_index(&grid, tv)?;
            let pts: Vec<(f64, f64)> = grid
                .rays
                .rays()
                .iter()
                .enumerate()
                .map(|(ri, &wv)| (wv, grid.lambda_star(ri, t_idx)))
                .collect();
            plot.polyline(&pts, &time_ramp(i, a.plot_t.len()), 1.5)?;
        }
        w.write_text("adf_curves.svg", &plot.render()?)?;
    }
    w.finish()
}

fn t_index(grid: &AdfGrid, t: u32) -> Result<usize> {
    grid.t
        .iter()
        .position(|&v| v == t)
        .ok_or_else(|| Error::invalid(format!("t = {t} not present in the fitted grid")))
}

fn return_curve(a: ReturnCurveArgs) -> Result<()> {
    let grid: AdfGrid = io::load_json(&a.adf, "nsadf/adf-grid")?;
    let smooth: Option<BernsteinModel> = match &a.bernstein {
        Some(p) => Some(io::load_json(p, "nsadf/bernstein")?),
        None => None,
    };
    let margins: Option<MarginalPair> = match &a.margins {
        Some(p) => Some(io::load_json(p, "nsadf/margins")?),
        None => None,
    };
    let want_original = a.margin == "original";
    if want_original && margins.is_none() {
        return Err(Error::Config(
            "--margin original requires --margins <margins.json>".into(),
        ));
    }
    let mut w = RunWriter::new(
        &a.out,
        "return-curve",
        None,
        serde_json::json!({
            "p": a.p, "t": a.t, "margin": a.margin,
            "estimator": if smooth.is_some() { "smooth" } else { "quantile-grid" },
        }),
    )?;
    let mut all = Vec::new();
    for &tv in &a.t {
        let t_idx = t_index(&grid, tv)?;
        let est = match &smooth {
            Some(m) => AdfEstimator::Smooth(m),
            None => AdfEstimator::QuantileGrid(&grid),
        };
        let mut curve = averaged_exp_curve(&grid, &est, a.p, t_idx)
            .map_err(|e| e.in_stage("return-curves"))?;
        if want_original {
            let pair = margins.as_ref().unwrap();
            curve = back_transform(&curve, &pair.x, &pair.y)
                .map_err(|e| e.in_stage("return-curves"))?;
        }
        w.write_text(&format!("curve_t{tv}.csv"), &io::curve_to_csv(&curve))?;
        all.push(curve);
    }
    if a.svg {
        let mut plot = SvgPlot::new(
            &format!("Return curves, p = {}", a.p),
            "x",
            "y",
        );
        for (i, c) in all.iter().enumerate() {
            let pts: Vec<(f64, f64)> = c.x.iter().cloned().zip(c.y.iter().cloned()).collect();
            plot.polyline(&pts, &time_ramp(i, all.len()), 1.5)?;
        }
        w.write_text("curves.svg", &plot.render()?)?;
    }
    w.finish()
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let families: Vec<CopulaFamily> = if a.families.is_empty() {
        CopulaFamily::ALL.to_vec()
    } else {
        a.families
            .iter()
            .map(|s| CopulaFamily::parse(s))
            .collect::<Result<_>>()?
    };
    if a.replicates < 2 {
        return Err(Error::Config("need at least 2 replicates".into()));
    }
    let mut w = RunWriter::new(
        &a.out,
        "evaluate",
        Some(a.seed),
        serde_json::json!({
            "families": families.iter().map(|f| f.name()).collect::<Vec<_>>(),
            "replicates": a.replicates, "n": a.n, "degree": a.degree,
        }),
    )?;

    let mut mise_rows = vec!["copula,time,mise_qr,mise_bp".to_string()];
    let mut ise_rows = vec!["copula,time,ise_qr,ise_bp".to_string()];
    let labels = ["start", "middle", "end"];
    for family in families {
        let mut cfg = StudyConfig::new(family, a.n, a.replicates, a.seed);
        cfg.bernstein.degree = a.degree;
        let study = run_family_study(&cfg).map_err(|e| e.in_stage("study"))?;
        for which in 0..3 {
            mise_rows.push(format!(
                "{},{},{},{}",
                family.name(),
                labels[which],
                study.mise_at(which, false)?,
                study.mise_at(which, true)?
            ));
            ise_rows.push(format!(
                "{},{},{},{}",
                family.name(),
                labels[which],
                study.median_ise_at(which, false)?,
                study.median_ise_at(which, true)?
            ));
        }
        write_family_envelopes(&mut w, &study)?;
        if a.svg {
            write_family_svgs(&mut w, &study)?;
        }
    }
    w.write_text("mise_table.csv", &(mise_rows.join("\n") + "\n"))?;
    w.write_text("ise_median_table.csv", &(ise_rows.join("\n") + "\n"))?;
    w.finish()
}

fn write_family_envelopes(w: &mut RunWriter, study: &FamilyStudy) -> Result<()> {
    let probs = [0.025, 0.5, 0.975];
    for (k, &ray) in study.trace_rays.iter().enumerate() {
        let qr: Vec<Vec<f64>> = study.qr_trace.iter().map(|r| r[k].clone()).collect();
        let bp: Vec<Vec<f64>> = study.bp_trace.iter().map(|r| r[k].clone()).collect();
        let env_qr = envelope(&qr, &probs)?;
        let env_bp = envelope(&bp, &probs)?;
        let mut rows = vec!["t,truth,qr_lo,qr_median,qr_hi,bp_lo,bp_median,bp_hi".to_string()];
        let n = study.truth_trace[k].len();
        let stride = (n / 400).max(1);
        for ti in (0..n).step_by(stride) {
            rows.push(format!(
                "{},{},{},{},{},{},{},{}",
                ti + 1,
                study.truth_trace[k][ti],
                env_qr.bands[0][ti],
                env_qr.bands[1][ti],
                env_qr.bands[2][ti],
                env_bp.bands[0][ti],
                env_bp.bands[1][ti],
                env_bp.bands[2][ti],
            ));
        }
        w.write_text(
            &format!("envelope_{}_w{}.csv", study.family.name(), ray),
            &(rows.join("\n") + "\n"),
        )?;
    }
    // over rays at the three evaluation times
    let labels = ["start", "middle", "end"];
    for which in 0..3 {
        let qr: Vec<Vec<f64>> = study.qr.iter().map(|r| r[which].clone()).collect();
        let bp: Vec<Vec<f64>> = study.bp.iter().map(|r| r[which].clone()).collect();
        let env_qr = envelope(&qr, &probs)?;
        let env_bp = envelope(&bp, &probs)?;
        let mut rows = vec!["w,truth,qr_lo,qr_median,qr_hi,bp_lo,bp_median,bp_hi".to_string()];
        for (ri, &ray) in study.rays.iter().enumerate() {
            rows.push(format!(
                "{},{},{},{},{},{},{},{}",
                ray,
                study.truth[which][ri],
                env_qr.bands[0][ri],
                env_qr.bands[1][ri],
                env_qr.bands[2][ri],
                env_bp.bands[0][ri],
                env_bp.bands[1][ri],
                env_bp.bands[2][ri],
            ));
        }
        w.write_text(
            &format!("adf_{}_{}.csv", study.family.name(), labels[which]),
            &(rows.join("\n") + "\n"),
        )?;
    }
    Ok(())
}

fn write_family_svgs(w: &mut RunWriter, study: &FamilyStudy) -> Result<()> {
    let probs = [0.025, 0.5, 0.975];
    for (k, &ray) in study.trace_rays.iter().enumerate() {
        let qr: Vec<Vec<f64>> = study.qr_trace.iter().map(|r| r[k].clone()).collect();
        let env = envelope(&qr, &probs)?;
        let n = study.truth_trace[k].len();
        let stride = (n / 400).max(1);
        let ts: Vec<f64> = (0..n).step_by(stride).map(|t| (t + 1) as f64).collect();
        let pick = |v: &[f64]| -> Vec<f64> { (0..n).step_by(stride).map(|t| v[t]).collect() };
        let mut plot = SvgPlot::new(
            &format!("{} at w = {ray}", study.family.name()),
            "t",
            "lambda",
        );
        plot.band(&ts, &pick(&env.bands[0]), &pick(&env.bands[2]), "rgb(120,140,220)")?;
        let med: Vec<(f64, f64)> = ts.iter().cloned().zip(pick(&env.bands[1])).collect();
        plot.polyline(&med, "rgb(0,0,0)", 1.3)?;
        let tr: Vec<(f64, f64)> = ts
            .iter()
            .cloned()
            .zip(pick(&study.truth_trace[k]))
            .collect();
        plot.polyline(&tr, "rgb(214,45,38)", 1.3)?;
        w.write_text(
            &format!("envelope_{}_w{}.svg", study.family.name(), ray),
            &plot.render()?,
        )?;
    }
    Ok(())
}

fn case_study(a: CaseStudyArgs) -> Result<()> {
    let cfg: CaseStudyConfig = load_config_or_default(&a.config)?;
    let mut w = RunWriter::new(
        &a.out,
        "case-study",
        Some(cfg.surrogate.seed),
        serde_json::to_value(&cfg)?,
    )?;
    let raw = match &a.data {
        Some(p) => io::read_raw_csv(p)?,
        None => {
            let raw = generate_surrogate(&cfg.surrogate)?;
            w.write_text(
                "surrogate.csv",
                &io::series_to_csv(&raw.t, raw.day.as_deref(), &raw.x, &raw.y),
            )?;
            raw
        }
    };

    let writer = std::cell::RefCell::new(&mut w);
    let mut sink = |stage: CaseStage| -> Result<()> {
        let mut w = writer.borrow_mut();
        match stage {
            CaseStage::Margins(mx, my) => write_margins(&mut w, mx, my),
            CaseStage::Transform(exp) => {
                w.write_text(
                    "exponential.csv",
                    &io::series_to_csv(exp.t(), exp.day(), exp.x(), exp.y()),
                )?;
                Ok(())
            }
            CaseStage::AdfGrid(grid) => {
                w.write_json("adf_grid.json", "nsadf/adf-grid", grid)?;
                Ok(())
            }
            CaseStage::Bernstein(model, objective) => {
                w.write_json("bernstein.json", "nsadf/bernstein", model)?;
                w.write_text("bernstein_objective.txt", &format!("{objective}\n"))?;
                Ok(())
            }
            CaseStage::ReturnCurves(exp_curves, orig_curves) => {
                let mut plot = SvgPlot::new("Return curves (original margins)", "x", "y");
                for (i, c) in exp_curves.iter().enumerate() {
                    w.write_text(&format!("curve_exp_t{}.csv", c.t), &io::curve_to_csv(c))?;
                    let _ = i;
                }
                for (i, c) in orig_curves.iter().enumerate() {
                    w.write_text(&format!("curve_original_t{}.csv", c.t), &io::curve_to_csv(c))?;
                    let pts: Vec<(f64, f64)> =
                        c.x.iter().cloned().zip(c.y.iter().cloned()).collect();
                    plot.polyline(&pts, &time_ramp(i, orig_curves.len()), 1.5)?;
                }
                w.write_text("curves.svg", &plot.render()?)?;
                Ok(())
            }
            CaseStage::RollingEta(rolling, model_eta) => {
                let mut rows =
                    vec!["center,empirical,lo,hi,model,n_exceedances".to_string()];
                for i in 0..rolling.centers.len() {
                    rows.push(format!(
                        "{},{},{},{},{},{}",
                        rolling.centers[i],
                        rolling.eta[i],
                        rolling.lo[i],
                        rolling.hi[i],
                        model_eta[i],
                        rolling.n_exceedances[i]
                    ));
                }
                w.write_text("eta_comparison.csv", &(rows.join("\n") + "\n"))?;
                Ok(())
            }
            CaseStage::Bootstrap(env) => {
                if let Some(env) = env {
                    let mut rows = vec!["w,lo,median,hi".to_string()];
                    let rays: Vec<f64> = (0..env.bands[0].len())
                        .map(|i| i as f64 / (env.bands[0].len() - 1) as f64)
                        .collect();
                    for (i, &ray) in rays.iter().enumerate() {
                        rows.push(format!(
                            "{},{},{},{}",
                            ray, env.bands[0][i], env.bands[1][i], env.bands[2][i]
                        ));
                    }
                    w.write_text("adf_bootstrap_band.csv", &(rows.join("\n") + "\n"))?;
                }
                Ok(())
            }
        }
    };
    run_case_pipeline(&raw, &cfg.pipeline, Some(&mut sink))?;
    w.finish()
}
