//! Generalized Pareto distribution: CDF/quantile, stationary maximum
//! likelihood fitting, and the covariate-scale extension with log-linear
//! scale and constant shape.
//!
//! Fitting strategy: profile the log-likelihood over a coarse shape grid
//! (the GPD likelihood is multimodal), polish with Nelder–Mead, then drive
//! the score to ~0 with Newton steps on the analytic gradient.

use serde::{Deserialize, Serialize};

use crate::basis::{dot, BasisSpec, Design};
use crate::error::{Error, Result};
use crate::linalg;
use crate::optim::{golden_section, NelderMead};

/// Shape values closer to zero than this are evaluated with exponential /
/// series limits.
pub const XI_EPS: f64 = 1e-8;

/// Stationary GPD tail: scale `tau`, shape `xi`, and the threshold it was
/// fitted above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    pub tau: f64,
    pub xi: f64,
    pub threshold: f64,
    pub threshold_quantile: f64,
}

impl GpdParams {
    pub fn new(tau: f64, xi: f64, threshold: f64, threshold_quantile: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::invalid(format!("GPD scale must be positive, got {tau}")));
        }
        if !(threshold_quantile > 0.0 && threshold_quantile < 1.0) {
            return Err(Error::invalid("threshold quantile must lie in (0,1)"));
        }
        Ok(GpdParams {
            tau,
            xi,
            threshold,
            threshold_quantile,
        })
    }

    /// Upper endpoint `threshold − tau/xi` for bounded tails (`xi < 0`).
    pub fn upper_endpoint(&self) -> Option<f64> {
        (self.xi < 0.0).then(|| self.threshold - self.tau / self.xi)
    }

    pub fn cdf(&self, excess: f64) -> Result<f64> {
        gpd_cdf(excess, self.tau, self.xi)
    }
}

/// GPD distribution function `1 − {1 + ξx/τ}₊^(−1/ξ)` on excesses `x ≥ 0`;
/// exponential limit for `|ξ| < 1e−8`, and 1 beyond a finite upper endpoint.
pub fn gpd_cdf(x: f64, tau: f64, xi: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("GPD scale must be positive, got {tau}")));
    }
    if x < 0.0 {
        return Err(Error::invalid("GPD excess must be nonnegative"));
    }
    if xi.abs() < XI_EPS {
        return Ok(1.0 - (-x / tau).exp());
    }
    let t = 1.0 + xi * x / tau;
    if t <= 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - t.powf(-1.0 / xi))
}

/// GPD quantile on excesses, `p ∈ (0,1)`.
pub fn gpd_quantile(p: f64, tau: f64, xi: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::invalid("GPD scale must be positive"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("quantile level must lie in (0,1)"));
    }
    if xi.abs() < XI_EPS {
        Ok(-tau * (1.0 - p).ln())
    } else {
        Ok(tau / xi * ((1.0 - p).powf(-xi) - 1.0))
    }
}

/// Result of a stationary GPD fit.
#[derive(Debug, Clone)]
pub struct GpdFit {
    pub tau: f64,
    pub xi: f64,
    pub log_lik: f64,
    pub converged: bool,
}

/// GPD log-likelihood of excesses; `-inf` when infeasible.
pub fn gpd_loglik(excesses: &[f64], tau: f64, xi: f64) -> f64 {
    if !(tau > 0.0) || !tau.is_finite() || !xi.is_finite() {
        return f64::NEG_INFINITY;
    }
    let n = excesses.len() as f64;
    if xi.abs() < XI_EPS {
        let s: f64 = excesses.iter().sum();
        return -n * tau.ln() - s / tau;
    }
    let mut acc = -n * tau.ln();
    let c = 1.0 + 1.0 / xi;
    for &x in excesses {
        let t = 1.0 + xi * x / tau;
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc -= c * t.ln();
    }
    acc
}

/// Analytic score `(∂ℓ/∂τ, ∂ℓ/∂ξ)`.
fn gpd_score(excesses: &[f64], tau: f64, xi: f64) -> [f64; 2] {
    let n = excesses.len() as f64;
    let mut d_tau = -n / tau;
    let mut d_xi = 0.0;
    if xi.abs() < 1e-6 {
        // ξ → 0 limit of the score: ∂ℓ/∂ξ → Σ (z²/2 − z)
        for &x in excesses {
            let z = x / tau;
            d_tau += (1.0 + xi) * (x / (tau * tau)) / (1.0 + xi * z);
            d_xi += z * z / 2.0 - z;
        }
    } else {
        for &x in excesses {
            let z = x / tau;
            let t = 1.0 + xi * z;
            d_tau += (1.0 + xi) * (x / (tau * tau)) / t;
            d_xi += t.ln() / (xi * xi) - (1.0 + 1.0 / xi) * z / t;
        }
    }
    [d_tau, d_xi]
}

fn newton_polish(excesses: &[f64], tau0: f64, xi0: f64) -> (f64, f64, f64, bool) {
    let mut tau = tau0;
    let mut xi = xi0;
    let mut ll = gpd_loglik(excesses, tau, xi);
    let mut converged = false;
    for _ in 0..60 {
        let g = gpd_score(excesses, tau, xi);
        let scale = excesses.len() as f64;
        if (g[0] * tau).abs() + g[1].abs() < 1e-9 * scale.max(1.0) {
            converged = true;
            break;
        }
        // finite-difference Hessian of the analytic score
        let h_t = 1e-5 * tau.abs().max(1e-8);
        let h_x = 1e-5 * xi.abs().max(1e-3);
        let gt = gpd_score(excesses, tau + h_t, xi);
        let gx = gpd_score(excesses, tau, xi + h_x);
        let hess = vec![
            (gt[0] - g[0]) / h_t,
            (gx[0] - g[0]) / h_x,
            (gt[1] - g[1]) / h_t,
            (gx[1] - g[1]) / h_x,
        ];
        let step = match linalg::solve(hess, vec![-g[0], -g[1]]) {
            Ok(s) => s,
            Err(_) => break,
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let t_new = tau + alpha * step[0];
            let x_new = xi + alpha * step[1];
            if t_new > 0.0 && x_new > -1.0 {
                let ll_new = gpd_loglik(excesses, t_new, x_new);
                if ll_new >= ll {
                    tau = t_new;
                    xi = x_new;
                    ll = ll_new;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (tau, xi, ll, converged)
}

/// Maximum-likelihood GPD fit to positive excesses (needs at least 10).
///
/// Shape is profiled on a coarse grid over `[-0.9, 1.5]`, the best point is
/// polished with Nelder–Mead and Newton; the returned shape lies in
/// `(-1, ∞)`. Non-convergence after restarts is reported through
/// `converged = false` on the best point found.
pub fn gpd_fit(excesses: &[f64]) -> Result<GpdFit> {
    if excesses.len() < 10 {
        return Err(Error::invalid(format!(
            "need at least 10 excesses, got {}",
            excesses.len()
        )));
    }
    if excesses.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::invalid("excesses must be positive and finite"));
    }
    let n = excesses.len() as f64;
    let mean = excesses.iter().sum::<f64>() / n;
    let max = excesses.iter().cloned().fold(f64::MIN, f64::max);
    let min = excesses.iter().cloned().fold(f64::MAX, f64::min);
    if (max - min).abs() < 1e-12 * max.abs() {
        return Err(Error::Degenerate(
            "all excesses equal; GPD scale is not identifiable".into(),
        ));
    }

    // Profile over the shape grid: for each ξ, maximize over log τ.
    let mut best = (mean, 0.0, gpd_loglik(excesses, mean, 0.0));
    for k in 0..=24 {
        let xi = -0.9 + 2.4 * k as f64 / 24.0;
        let lo = if xi < 0.0 {
            // feasibility: τ > −ξ·max(x)
            ((-xi) * max * (1.0 + 1e-9)).ln()
        } else {
            (mean * 1e-3).ln()
        };
        let hi = (mean * 1e3).ln().max(lo + 1e-6);
        let (log_tau, neg_ll) =
            golden_section(|lt| -gpd_loglik(excesses, lt.exp(), xi), lo, hi, 60);
        if -neg_ll > best.2 {
            best = (log_tau.exp(), xi, -neg_ll);
        }
    }

    // Nelder–Mead polish in (log τ, ξ), then Newton on the score.
    let nm = NelderMead {
        max_evals: 4000,
        ftol: 1e-12,
        init_step: 0.1,
    };
    let mut overall: Option<(f64, f64, f64, bool)> = None;
    let starts = [
        vec![best.0.ln(), best.1],
        vec![best.0.ln() + 0.3, best.1 + 0.15],
        vec![best.0.ln() - 0.3, (best.1 - 0.15).max(-0.95)],
    ];
    for s in starts {
        let r = nm.minimize(
            |p| {
                if p[1] <= -1.0 + 1e-9 || p[1] > 10.0 {
                    return f64::INFINITY;
                }
                -gpd_loglik(excesses, p[0].exp(), p[1])
            },
            &s,
        );
        let (tau, xi, ll, conv) = newton_polish(excesses, r.x[0].exp(), r.x[1]);
        let better = overall.map_or(true, |o| ll > o.2);
        if better {
            overall = Some((tau, xi, ll, conv));
        }
        if conv {
            break;
        }
    }
    let (tau, xi, log_lik, converged) = overall.unwrap();
    Ok(GpdFit {
        tau,
        xi,
        log_lik,
        converged,
    })
}

/// Covariate-scale GPD tail: `log τ(z) = z'·tau_coeffs` on a raw-basis row,
/// constant shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsGpdParams {
    pub tau_coeffs: Vec<f64>,
    pub xi: f64,
    pub threshold: f64,
    pub threshold_quantile: f64,
    pub basis: BasisSpec,
}

impl NsGpdParams {
    pub fn tau(&self, row: &[f64]) -> f64 {
        dot(row, &self.tau_coeffs).exp()
    }

    pub fn tau_at(&self, t: f64, day: Option<f64>) -> Result<f64> {
        Ok(self.tau(&self.basis.row(t, day)?))
    }
}

/// Result of a covariate-scale GPD fit.
#[derive(Debug, Clone)]
pub struct NsGpdFit {
    /// Raw-basis coefficients for `log τ(z)`.
    pub tau_coeffs: Vec<f64>,
    pub xi: f64,
    pub log_lik: f64,
    pub converged: bool,
}

fn ns_loglik(x: &[f64], design: &Design, coeffs: &[f64], xi: f64) -> f64 {
    if !xi.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let mut acc = 0.0;
    if xi.abs() < XI_EPS {
        for i in 0..x.len() {
            let eta = dot(design.row(i), coeffs);
            acc += -eta - x[i] * (-eta).exp();
        }
        return acc;
    }
    let c = 1.0 + 1.0 / xi;
    for i in 0..x.len() {
        let eta = dot(design.row(i), coeffs);
        let t = 1.0 + xi * x[i] * (-eta).exp();
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += -eta - c * t.ln();
    }
    acc
}

fn ns_score(x: &[f64], design: &Design, coeffs: &[f64], xi: f64) -> Vec<f64> {
    let p = coeffs.len();
    let mut g = vec![0.0; p + 1];
    let small_xi = xi.abs() < 1e-6;
    for i in 0..x.len() {
        let row = design.row(i);
        let eta = dot(row, coeffs);
        let u = x[i] * (-eta).exp();
        let t = 1.0 + xi * u;
        let w = u / t;
        for j in 0..p {
            g[j] += row[j] * (-1.0 + (1.0 + xi) * w);
        }
        if small_xi {
            g[p] += u * u / 2.0 - u;
        } else {
            g[p] += t.ln() / (xi * xi) - (1.0 + 1.0 / xi) * u / t;
        }
    }
    g
}

/// MLE of the covariate-scale GPD. With an intercept-only design this
/// delegates to [`gpd_fit`], so the two agree exactly.
pub fn gpd_fit_ns(excesses: &[f64], design: &Design) -> Result<NsGpdFit> {
    if design.nrows() != excesses.len() {
        return Err(Error::invalid(
            "design rows must align one-to-one with excesses",
        ));
    }
    if design.ncols() == 0 {
        return Err(Error::invalid("zero-length basis row"));
    }
    if !design.has_intercept() {
        return Err(Error::invalid("design must include an intercept column"));
    }
    if design.ncols() == 1 {
        let f = gpd_fit(excesses)?;
        return Ok(NsGpdFit {
            tau_coeffs: vec![f.tau.ln()],
            xi: f.xi,
            log_lik: f.log_lik,
            converged: f.converged,
        });
    }
    let (std_design, standardizer) = design.standardize()?;
    let stationary = gpd_fit(excesses)?;
    let p = design.ncols();
    let mut theta0 = vec![0.0; p + 1];
    theta0[0] = stationary.tau.ln();
    theta0[p] = stationary.xi;

    let nm = NelderMead {
        max_evals: 20_000,
        ftol: 1e-12,
        init_step: 0.1,
    };
    let obj = |th: &[f64]| {
        if th[p] <= -1.0 + 1e-9 || th[p] > 10.0 {
            return f64::INFINITY;
        }
        -ns_loglik(excesses, &std_design, &th[..p], th[p])
    };
    let mut best: Option<(Vec<f64>, f64, f64, bool)> = None;
    for attempt in 0..3 {
        let mut start = theta0.clone();
        if attempt > 0 {
            for (j, v) in start.iter_mut().enumerate() {
                *v += 0.05 * attempt as f64 * if j % 2 == 0 { 1.0 } else { -1.0 };
            }
            start[p] = start[p].max(-0.9);
        }
        let r = nm.minimize(obj, &start);
        let (coeffs, xi, ll, conv) =
            ns_newton_polish(excesses, &std_design, &r.x[..p], r.x[p]);
        if best.as_ref().map_or(true, |b| ll > b.2) {
            best = Some((coeffs, xi, ll, conv));
        }
        if best.as_ref().unwrap().3 {
            break;
        }
    }
    let (coeffs_std, xi, log_lik, converged) = best.unwrap();
    Ok(NsGpdFit {
        tau_coeffs: standardizer.to_raw(&coeffs_std),
        xi,
        log_lik,
        converged,
    })
}

fn ns_newton_polish(
    x: &[f64],
    design: &Design,
    coeffs0: &[f64],
    xi0: f64,
) -> (Vec<f64>, f64, f64, bool) {
    let p = coeffs0.len();
    let mut th: Vec<f64> = coeffs0.iter().cloned().chain([xi0]).collect();
    let mut ll = ns_loglik(x, design, &th[..p], th[p]);
    let mut converged = false;
    let score = |th: &[f64]| ns_score(x, design, &th[..p], th[p]);
    for _ in 0..60 {
        let g = score(&th);
        let gn: f64 = g.iter().map(|v| v.abs()).sum();
        if gn < 1e-9 * (x.len() as f64).max(1.0) {
            converged = true;
            break;
        }
        let d = p + 1;
        let mut hess = vec![0.0; d * d];
        for j in 0..d {
            let h = 1e-5 * th[j].abs().max(1e-3);
            let mut th_h = th.clone();
            th_h[j] += h;
            let gj = score(&th_h);
            for i in 0..d {
                hess[i * d + j] = (gj[i] - g[i]) / h;
            }
        }
        let step = match linalg::solve(hess, g.iter().map(|v| -v).collect()) {
            Ok(s) => s,
            Err(_) => break,
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand: Vec<f64> = th.iter().zip(&step).map(|(a, s)| a + alpha * s).collect();
            if cand[p] > -1.0 {
                let ll_new = ns_loglik(x, design, &cand[..p], cand[p]);
                if ll_new >= ll {
                    th = cand;
                    ll = ll_new;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (th[..p].to_vec(), th[p], ll, converged)
}
