//! Simulation-study metrics and diagnostics: integrated squared error and
//! its mean over replications, pointwise quantile envelopes, rolling-window
//! tail-dependence (η) estimates, the empirical χ(u) coefficient, the
//! segment/block bootstrap, and Monte Carlo survival checks for return
//! curves.

use serde::{Deserialize, Serialize};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curve::ReturnCurve;
use crate::error::{Error, Result};
use crate::series::ExpSeries;

/// Trapezoidal `∫ (est − truth)² dw` over the ray grid.
pub fn ise(estimate: &[f64], truth: &[f64], rays: &[f64]) -> Result<f64> {
    if estimate.len() != rays.len() || truth.len() != rays.len() {
        return Err(Error::invalid("ISE inputs must share the ray grid"));
    }
    let sq: Vec<f64> = estimate
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t) * (e - t))
        .collect();
    let mut acc = 0.0;
    for i in 1..rays.len() {
        acc += 0.5 * (sq[i] + sq[i - 1]) * (rays[i] - rays[i - 1]);
    }
    Ok(acc)
}

/// Mean ISE across replicates, accumulated in replicate order.
pub fn mise(replicates: &[Vec<f64>], truth: &[f64], rays: &[f64]) -> Result<f64> {
    if replicates.len() < 2 {
        return Err(Error::invalid("MISE needs at least 2 replicates"));
    }
    let mut acc = 0.0;
    for rep in replicates {
        acc += ise(rep, truth, rays)?;
    }
    Ok(acc / replicates.len() as f64)
}

/// Pointwise quantile bands across replicates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope {
    pub probs: Vec<f64>,
    /// `bands[k][j]`: the probs[k] empirical quantile at position j.
    pub bands: Vec<Vec<f64>>,
    /// True when the replicate count was too small for the requested tails
    /// and the widest order statistics were substituted.
    pub order_statistic_fallback: bool,
}

/// Empirical type-7 quantile of a sorted slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Pointwise empirical quantiles across replicate curves. Tails beyond the
/// resolution of `R < 40` replicates fall back to the widest order
/// statistics, flagged in the result.
pub fn envelope(replicates: &[Vec<f64>], probs: &[f64]) -> Result<Envelope> {
    let r = replicates.len();
    if r < 2 {
        return Err(Error::invalid("envelopes need at least 2 replicates"));
    }
    let len = replicates[0].len();
    if replicates.iter().any(|c| c.len() != len) {
        return Err(Error::invalid("replicates must share the evaluation grid"));
    }
    let is_tail = |p: f64| p <= 0.025 || p >= 0.975;
    let fallback = r < 40 && probs.iter().any(|&p| is_tail(p));
    let mut bands = vec![vec![0.0; len]; probs.len()];
    let mut col = vec![0.0; r];
    for j in 0..len {
        for (i, rep) in replicates.iter().enumerate() {
            col[i] = rep[j];
        }
        col.sort_unstable_by(|a, b| a.total_cmp(b));
        for (k, &p) in probs.iter().enumerate() {
            bands[k][j] = if fallback && is_tail(p) {
                if p < 0.5 {
                    col[0]
                } else {
                    col[r - 1]
                }
            } else {
                quantile_sorted(&col, p)
            };
        }
    }
    Ok(Envelope {
        probs: probs.to_vec(),
        bands,
        order_statistic_fallback: fallback,
    })
}

/// Rolling-window Ledford–Tawn η estimates with delta-method 95% CIs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RollingEta {
    /// Window centers as indices into the series.
    pub centers: Vec<usize>,
    pub eta: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n_exceedances: Vec<usize>,
    /// False where a window had too few exceedances for a stable estimate.
    pub ok: Vec<bool>,
}

/// η per rolling window: exponential-rate MLE on threshold excesses of the
/// structure variable `T = min(X, Y)`, threshold at the window-empirical
/// `threshold_q` quantile.
pub fn rolling_eta(
    series: &ExpSeries,
    half_window: usize,
    threshold_q: f64,
    stride: usize,
) -> Result<RollingEta> {
    let n = series.len();
    if 2 * half_window + 1 < 200 {
        return Err(Error::invalid("window must contain at least 200 points"));
    }
    if half_window * 2 >= n {
        return Err(Error::invalid("window exceeds the series length"));
    }
    if !(0.5 < threshold_q && threshold_q < 1.0) {
        return Err(Error::invalid("threshold quantile must lie in (0.5, 1)"));
    }
    let stride = stride.max(1);
    let t_min: Vec<f64> = (0..n)
        .map(|i| series.x()[i].min(series.y()[i]))
        .collect();
    let mut out = RollingEta {
        centers: Vec::new(),
        eta: Vec::new(),
        lo: Vec::new(),
        hi: Vec::new(),
        n_exceedances: Vec::new(),
        ok: Vec::new(),
    };
    let mut window = Vec::with_capacity(2 * half_window + 1);
    let mut c = half_window;
    while c + half_window < n {
        window.clear();
        window.extend_from_slice(&t_min[c - half_window..=c + half_window]);
        window.sort_unstable_by(|a, b| a.total_cmp(b));
        let u = quantile_sorted(&window, threshold_q);
        let mut sum = 0.0;
        let mut m = 0usize;
        for &v in window.iter().rev() {
            if v > u {
                sum += v - u;
                m += 1;
            } else {
                break;
            }
        }
        let ok = m >= 30;
        let eta = if m > 0 { sum / m as f64 } else { f64::NAN };
        let half = if m > 0 {
            1.96 * eta / (m as f64).sqrt()
        } else {
            f64::NAN
        };
        out.centers.push(c);
        out.eta.push(eta);
        out.lo.push(eta - half);
        out.hi.push(eta + half);
        out.n_exceedances.push(m);
        out.ok.push(ok);
        c += stride;
    }
    if out.centers.is_empty() {
        return Err(Error::invalid("no complete windows fit the series"));
    }
    Ok(out)
}

/// Empirical `χ(u) = Pr(V > u | U > u)` from uniform-margin pairs.
pub fn chi_u(u_margin: &[f64], v_margin: &[f64], level: f64) -> Result<f64> {
    if u_margin.len() != v_margin.len() {
        return Err(Error::invalid("paired inputs differ in length"));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::invalid("level must lie in (0,1)"));
    }
    let mut cond = 0usize;
    let mut joint = 0usize;
    for (&a, &b) in u_margin.iter().zip(v_margin) {
        if a > level {
            cond += 1;
            if b > level {
                joint += 1;
            }
        }
    }
    if cond < 50 {
        return Err(Error::Degenerate(format!(
            "only {cond} exceedances of u = {level}"
        )));
    }
    Ok(joint as f64 / cond as f64)
}

/// Segment/block bootstrap plan. Defaults follow the case-study scheme:
/// five-year segments of 450 observations resampled in blocks of 15.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapPlan {
    pub segment_len: usize,
    pub block_len: usize,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapPlan {
    fn default() -> Self {
        BootstrapPlan {
            segment_len: 450,
            block_len: 15,
            resamples: 250,
            seed: 0,
        }
    }
}

impl BootstrapPlan {
    pub fn validate(&self) -> Result<()> {
        if self.block_len == 0 || self.segment_len == 0 {
            return Err(Error::invalid("segment and block lengths must be positive"));
        }
        if self.block_len > self.segment_len {
            return Err(Error::invalid("block longer than segment"));
        }
        if self.segment_len % self.block_len != 0 {
            return Err(Error::invalid(
                "segment length must be divisible by the block length",
            ));
        }
        Ok(())
    }
}

/// One bootstrap resample: within each consecutive segment, blocks of
/// `block_len` are drawn with replacement (uniform start offsets) and
/// concatenated; segments keep their original order and the time/day frame
/// is reused. A final short segment contributes proportionally fewer
/// blocks. Deterministic in `(plan.seed, resample_idx)`.
pub fn block_bootstrap(
    series: &ExpSeries,
    plan: &BootstrapPlan,
    resample_idx: usize,
) -> Result<ExpSeries> {
    plan.validate()?;
    let n = series.len();
    let mut rng = ChaCha8Rng::seed_from_u64(
        plan.seed ^ (resample_idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut seg_start = 0usize;
    while seg_start < n {
        let seg_len = plan.segment_len.min(n - seg_start);
        let usable = seg_len.saturating_sub(plan.block_len);
        let blocks = seg_len.div_ceil(plan.block_len);
        let mut filled = 0usize;
        for _ in 0..blocks {
            let start = seg_start + rng.random_range(0..=usable);
            let take = plan.block_len.min(seg_len - filled);
            for k in 0..take {
                x.push(series.x()[start + k]);
                y.push(series.y()[start + k]);
            }
            filled += take;
        }
        seg_start += seg_len;
    }
    ExpSeries::new(series.t().to_vec(), series.day().map(<[u32]>::to_vec), x, y)
}

/// Empirical joint survival of each curve point under fresh samples, with
/// binomial standard errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurvivalCheck {
    pub w: f64,
    pub survival: f64,
    pub se: f64,
}

pub fn curve_check(curve: &ReturnCurve, fresh: &ExpSeries) -> Vec<SurvivalCheck> {
    let n = fresh.len() as f64;
    curve
        .rays
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let hits = fresh
                .x()
                .iter()
                .zip(fresh.y())
                .filter(|&(&a, &b)| a > curve.x[i] && b > curve.y[i])
                .count() as f64;
            let p = hits / n;
            SurvivalCheck {
                w,
                survival: p,
                se: (p * (1.0 - p) / n).sqrt(),
            }
        })
        .collect()
}

/// Replication study configuration for one copula family: simulate, fit
/// both ADF estimators, and record constrained evaluations at the start,
/// middle, and end of the horizon plus full time traces at selected rays.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub family: crate::copula::CopulaFamily,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub rays: crate::adf::RayGrid,
    pub schedule: crate::adf::QuantileSchedule,
    pub qr_basis: crate::basis::BasisSpec,
    pub bernstein: crate::adf::BernsteinFitConfig,
    pub mcmc: crate::copula::McmcConfig,
    /// Rays whose full λ̄*(w|t) trace is retained per replicate.
    pub trace_rays: Vec<f64>,
    /// When set, per-replicate return curves at this probability are
    /// produced for both estimators at the three evaluation times.
    pub curve_p: Option<f64>,
}

impl StudyConfig {
    pub fn new(family: crate::copula::CopulaFamily, n: usize, replicates: usize, seed: u64) -> Self {
        StudyConfig {
            family,
            n,
            replicates,
            seed,
            rays: crate::adf::RayGrid::default(),
            schedule: crate::adf::QuantileSchedule::standard(),
            qr_basis: crate::basis::BasisSpec::poly(3),
            bernstein: crate::adf::BernsteinFitConfig::default(),
            mcmc: crate::copula::McmcConfig::default(),
            trace_rays: vec![0.1, 0.3, 0.5],
            curve_p: None,
        }
    }
}

/// Everything a replication study records for one family.
#[derive(Debug, Clone)]
pub struct FamilyStudy {
    pub family: crate::copula::CopulaFamily,
    pub rays: Vec<f64>,
    /// 0-based indices of the evaluation times t = 1, n/2, n.
    pub eval_t_idx: [usize; 3],
    /// True ADF over rays at the three evaluation times.
    pub truth: [Vec<f64>; 3],
    /// Constrained estimates over rays, per replicate and evaluation time.
    pub qr: Vec<[Vec<f64>; 3]>,
    pub bp: Vec<[Vec<f64>; 3]>,
    pub trace_rays: Vec<f64>,
    /// `[replicate][trace ray][t]` constrained estimates.
    pub qr_trace: Vec<Vec<Vec<f64>>>,
    pub bp_trace: Vec<Vec<Vec<f64>>>,
    /// `[trace ray][t]` truth.
    pub truth_trace: Vec<Vec<f64>>,
    /// Per-replicate curves at the evaluation times (when requested).
    pub qr_curves: Vec<Vec<ReturnCurve>>,
    pub bp_curves: Vec<Vec<ReturnCurve>>,
}

/// Run the replication study. Replicates are seeded `seed + index` and run
/// in parallel; all outputs are collected in replicate order.
pub fn run_family_study(cfg: &StudyConfig) -> Result<FamilyStudy> {
    use crate::adf::{fit_bernstein, lambda_qr_average};
    use crate::copula::{effective_param, sample, true_adf, CopulaFamily, CopulaSpec};
    use crate::curve::{averaged_exp_curve, AdfEstimator};
    use rayon::prelude::*;

    let n = cfg.n;
    let eval_t_idx = [0usize, n / 2 - 1, n - 1];
    let asym = (cfg.family == CopulaFamily::InvALog).then_some((0.3, 0.7));
    let rays = cfg.rays.rays().to_vec();
    let mut truth: [Vec<f64>; 3] = Default::default();
    for (k, &ti) in eval_t_idx.iter().enumerate() {
        let theta = effective_param(cfg.family, n, ti + 1)?;
        truth[k] = rays
            .iter()
            .map(|&w| true_adf(cfg.family, theta, asym, w))
            .collect::<Result<_>>()?;
    }
    let trace_idx: Vec<usize> = cfg.trace_rays.iter().map(|&w| cfg.rays.nearest(w)).collect();
    let mut truth_trace = vec![vec![0.0; n]; trace_idx.len()];
    for t in 1..=n {
        let theta = effective_param(cfg.family, n, t)?;
        for (k, &ri) in trace_idx.iter().enumerate() {
            truth_trace[k][t - 1] = true_adf(cfg.family, theta, asym, rays[ri])?;
        }
    }

    struct Rep {
        qr: [Vec<f64>; 3],
        bp: [Vec<f64>; 3],
        qr_trace: Vec<Vec<f64>>,
        bp_trace: Vec<Vec<f64>>,
        qr_curves: Vec<ReturnCurve>,
        bp_curves: Vec<ReturnCurve>,
    }

    let reps: Vec<Result<Rep>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|rep| {
            let spec = CopulaSpec {
                family: cfg.family,
                n,
                asymmetry: asym,
                seed: cfg.seed + rep as u64,
            };
            let mcmc = (cfg.family == CopulaFamily::GaugeModel12).then_some(&cfg.mcmc);
            let out = sample(&spec, mcmc)?;
            let grid = lambda_qr_average(&out.series, &cfg.rays, &cfg.schedule, &cfg.qr_basis)?;
            let bp_fit = fit_bernstein(&grid, &cfg.bernstein)?;
            let mut qr: [Vec<f64>; 3] = Default::default();
            let mut bp: [Vec<f64>; 3] = Default::default();
            for (k, &ti) in eval_t_idx.iter().enumerate() {
                qr[k] = (0..rays.len()).map(|ri| grid.lambda_star(ri, ti)).collect();
                bp[k] = rays
                    .iter()
                    .map(|&w| bp_fit.model.eval_star(w, (ti + 1) as f64, None))
                    .collect::<Result<_>>()?;
            }
            let mut qr_trace = vec![vec![0.0; n]; trace_idx.len()];
            let mut bp_trace = vec![vec![0.0; n]; trace_idx.len()];
            for (k, &ri) in trace_idx.iter().enumerate() {
                let w = rays[ri];
                for ti in 0..n {
                    qr_trace[k][ti] = grid.lambda_star(ri, ti);
                    bp_trace[k][ti] = bp_fit.model.eval_star(w, (ti + 1) as f64, None)?;
                }
            }
            let mut qr_curves = Vec::new();
            let mut bp_curves = Vec::new();
            if let Some(p) = cfg.curve_p {
                for &ti in &eval_t_idx {
                    qr_curves.push(averaged_exp_curve(
                        &grid,
                        &AdfEstimator::QuantileGrid(&grid),
                        p,
                        ti,
                    )?);
                    bp_curves.push(averaged_exp_curve(
                        &grid,
                        &AdfEstimator::Smooth(&bp_fit.model),
                        p,
                        ti,
                    )?);
                }
            }
            Ok(Rep {
                qr,
                bp,
                qr_trace,
                bp_trace,
                qr_curves,
                bp_curves,
            })
        })
        .collect();

    let mut study = FamilyStudy {
        family: cfg.family,
        rays,
        eval_t_idx,
        truth,
        qr: Vec::with_capacity(cfg.replicates),
        bp: Vec::with_capacity(cfg.replicates),
        trace_rays: cfg.trace_rays.clone(),
        qr_trace: Vec::with_capacity(cfg.replicates),
        bp_trace: Vec::with_capacity(cfg.replicates),
        truth_trace,
        qr_curves: Vec::new(),
        bp_curves: Vec::new(),
    };
    for r in reps {
        let r = r?;
        study.qr.push(r.qr);
        study.bp.push(r.bp);
        study.qr_trace.push(r.qr_trace);
        study.bp_trace.push(r.bp_trace);
        if cfg.curve_p.is_some() {
            study.qr_curves.push(r.qr_curves);
            study.bp_curves.push(r.bp_curves);
        }
    }
    Ok(study)
}

impl FamilyStudy {
    /// MISE of one estimator at one evaluation time (0 start, 1 middle,
    /// 2 end).
    pub fn mise_at(&self, which: usize, use_smooth: bool) -> Result<f64> {
        let reps: Vec<Vec<f64>> = self.estimates(use_smooth, which);
        mise(&reps, &self.truth[which], &self.rays)
    }

    /// ISE of the pointwise median estimator at an evaluation time.
    pub fn median_ise_at(&self, which: usize, use_smooth: bool) -> Result<f64> {
        let reps = self.estimates(use_smooth, which);
        let med = median_curve(&reps);
        ise(&med, &self.truth[which], &self.rays)
    }

    fn estimates(&self, use_smooth: bool, which: usize) -> Vec<Vec<f64>> {
        let source = if use_smooth { &self.bp } else { &self.qr };
        source.iter().map(|r| r[which].clone()).collect()
    }
}

/// Pointwise median across replicate curves.
pub fn median_curve(replicates: &[Vec<f64>]) -> Vec<f64> {
    let len = replicates[0].len();
    let mut out = vec![0.0; len];
    let mut col = vec![0.0; replicates.len()];
    for j in 0..len {
        for (i, r) in replicates.iter().enumerate() {
            col[i] = r[j];
        }
        col.sort_unstable_by(|a, b| a.total_cmp(b));
        out[j] = quantile_sorted(&col, 0.5);
    }
    out
}

/// Spearman rank correlation.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ra = ranks(a);
    let rb = ranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for i in 0..a.len() {
        let xa = ra[i] - ma;
        let xb = rb[i] - mb;
        num += xa * xb;
        da += xa * xa;
        db += xb * xb;
    }
    num / (da.sqrt() * db.sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_unstable_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[idx[k]] = avg;
        }
        i = j + 1;
    }
    out
}
