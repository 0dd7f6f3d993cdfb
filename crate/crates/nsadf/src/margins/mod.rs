//! Marginal non-stationarity: location-scale pre-processing, GPD residual
//! tails (optionally with covariate-dependent scale), the semi-empirical
//! marginal CDF and its inverse, and probability integral transforms to and
//! from standard exponential margins.

mod gpd;
mod locscale;

pub use gpd::{
    gpd_cdf, gpd_fit, gpd_fit_ns, gpd_loglik, gpd_quantile, GpdFit, GpdParams, NsGpdFit,
    NsGpdParams, XI_EPS,
};
pub use locscale::{locscale_fit, select_ridge_penalty, LocScaleFit};

use serde::{Deserialize, Serialize};

use crate::basis::{dot, BasisSpec};
use crate::error::{Error, Result};
use crate::series::{ExpSeries, RawSeries};

/// A fitted marginal model: body location/scale regression, sorted residual
/// sample for the empirical CDF, and a GPD upper tail on the residuals.
///
/// The semi-empirical residual CDF is
/// rank-based `Σ𝟙(r_t ≤ r)/(n+1)` below the threshold `u = r_(k)` and
/// `1 − (1 − q)·{1 + ξ(r−u)/τ(z)}^(−1/ξ)` above it, with `q = k/(n+1)` so
/// the two branches match at the seam exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalModel {
    pub loc_coeffs: Vec<f64>,
    pub scale_coeffs: Vec<f64>,
    pub loc_basis: BasisSpec,
    pub scale_basis: BasisSpec,
    pub tail: NsGpdParams,
    /// Sorted residual sample of length n.
    pub residual_sample: Vec<f64>,
    /// 1-based rank of the threshold order statistic: `u = r_(k)`,
    /// `q = k/(n+1)`.
    pub threshold_rank: usize,
}

/// Configuration for [`fit_marginal_model`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarginalFitConfig {
    pub loc_basis: BasisSpec,
    pub scale_basis: BasisSpec,
    pub tail_basis: BasisSpec,
    pub threshold_quantile: f64,
    /// Ridge penalty for the body fit; `None` selects by GCV.
    pub penalty: Option<f64>,
}

impl Default for MarginalFitConfig {
    fn default() -> Self {
        MarginalFitConfig {
            loc_basis: BasisSpec::poly(1),
            scale_basis: BasisSpec::poly(1),
            tail_basis: BasisSpec::constant(),
            threshold_quantile: 0.9,
            penalty: Some(0.0),
        }
    }
}

impl MarginalModel {
    pub fn n(&self) -> usize {
        self.residual_sample.len()
    }

    /// Effective threshold quantile `k/(n+1)`.
    pub fn threshold_q(&self) -> f64 {
        self.threshold_rank as f64 / (self.n() as f64 + 1.0)
    }

    /// Threshold on the residual scale, the k-th order statistic.
    pub fn threshold_u(&self) -> f64 {
        self.residual_sample[self.threshold_rank - 1]
    }

    pub fn mu(&self, t: f64, day: Option<f64>) -> Result<f64> {
        Ok(dot(&self.loc_basis.row(t, day)?, &self.loc_coeffs))
    }

    pub fn sigma(&self, t: f64, day: Option<f64>) -> Result<f64> {
        Ok(dot(&self.scale_basis.row(t, day)?, &self.scale_coeffs).exp())
    }

    /// Residual `(y − μ(z))/σ(z)` of a raw observation.
    pub fn residual(&self, y: f64, t: f64, day: Option<f64>) -> Result<f64> {
        Ok((y - self.mu(t, day)?) / self.sigma(t, day)?)
    }

    /// Inverse of [`MarginalModel::residual`].
    pub fn from_residual(&self, r: f64, t: f64, day: Option<f64>) -> Result<f64> {
        Ok(self.mu(t, day)? + self.sigma(t, day)? * r)
    }

    /// Semi-empirical CDF of a residual at covariate `(t, day)`.
    ///
    /// Ties in the empirical branch are broken by average rank; output is
    /// kept inside (0,1).
    pub fn semi_empirical_cdf(&self, r: f64, t: f64, day: Option<f64>) -> Result<f64> {
        let n = self.n() as f64;
        let u = self.threshold_u();
        if r > u {
            let q = self.threshold_q();
            let tau = self.tail.tau_at(t, day)?;
            let p = 1.0 - (1.0 - q) * (1.0 - gpd_cdf(r - u, tau, self.tail.xi)?);
            return Ok(p.min(1.0 - 0.5 / (n + 1.0)).max(q));
        }
        let lt = self.residual_sample.partition_point(|&v| v < r);
        let le = self.residual_sample.partition_point(|&v| v <= r);
        let ties = le - lt;
        let f = if ties > 0 {
            (lt as f64 + (ties as f64 + 1.0) / 2.0) / (n + 1.0)
        } else {
            lt as f64 / (n + 1.0)
        };
        Ok(f.max(0.5 / (n + 1.0)))
    }

    /// Inverse of the semi-empirical CDF. The boolean flags a value clamped
    /// at a finite upper endpoint (bounded tails, ξ < 0).
    pub fn semi_empirical_quantile(
        &self,
        p: f64,
        t: f64,
        day: Option<f64>,
    ) -> Result<(f64, bool)> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid("probability must lie in (0,1)"));
        }
        let n = self.n();
        let q = self.threshold_q();
        let u = self.threshold_u();
        if p > q {
            let tau = self.tail.tau_at(t, day)?;
            let xi = self.tail.xi;
            let ratio = (1.0 - p) / (1.0 - q);
            let excess = if xi.abs() < XI_EPS {
                -tau * ratio.ln()
            } else {
                tau / xi * (ratio.powf(-xi) - 1.0)
            };
            if xi < 0.0 {
                let endpoint = tau / (-xi);
                if !(excess < endpoint) {
                    return Ok((u + endpoint, true));
                }
            }
            if !excess.is_finite() {
                return Err(Error::numerical("tail quantile overflowed"));
            }
            return Ok((u + excess, false));
        }
        // body: interpolate between order statistics at rank p(n+1)
        let rho = p * (n as f64 + 1.0);
        let j = (rho.floor() as usize).clamp(1, n.max(2) - 1);
        let frac = rho - j as f64;
        let lo = self.residual_sample[j - 1];
        let hi = self.residual_sample[j.min(n - 1)];
        Ok((lo + frac.clamp(0.0, 1.0) * (hi - lo), false))
    }

    /// Marginal CDF of a raw observation.
    pub fn cdf(&self, y: f64, t: f64, day: Option<f64>) -> Result<f64> {
        self.semi_empirical_cdf(self.residual(y, t, day)?, t, day)
    }

    /// Marginal quantile on the raw scale.
    pub fn quantile(&self, p: f64, t: f64, day: Option<f64>) -> Result<(f64, bool)> {
        let (r, clamped) = self.semi_empirical_quantile(p, t, day)?;
        Ok((self.from_residual(r, t, day)?, clamped))
    }

    /// One coordinate of the PIT to standard exponential margins.
    pub fn to_exponential_value(&self, y: f64, t: f64, day: Option<f64>) -> Result<f64> {
        let f = self.cdf(y, t, day)?;
        Ok(-(-f).ln_1p())
    }

    /// Inverse PIT from an exponential-margin value back to the raw scale.
    pub fn from_exponential_value(&self, v: f64, t: f64, day: Option<f64>) -> Result<(f64, bool)> {
        let p = -(-v).exp_m1();
        self.quantile(p.clamp(f64::MIN_POSITIVE, 1.0 - 1e-16), t, day)
    }
}

/// Fit the full marginal model for one series: penalized location-scale
/// body, residual threshold at the configured quantile, and a
/// covariate-scale GPD on threshold excesses.
pub fn fit_marginal_model(
    y: &[f64],
    t: &[u32],
    day: Option<&[u32]>,
    cfg: &MarginalFitConfig,
) -> Result<MarginalModel> {
    if !(cfg.threshold_quantile > 0.0 && cfg.threshold_quantile < 1.0) {
        return Err(Error::Config("threshold quantile must lie in (0,1)".into()));
    }
    let loc_design = cfg.loc_basis.design(t, day)?;
    let scale_design = cfg.scale_basis.design(t, day)?;
    let penalty = match cfg.penalty {
        Some(p) => p,
        None => select_ridge_penalty(y, &loc_design, &scale_design)?,
    };
    let body = locscale_fit(y, &loc_design, &scale_design, penalty)?;

    let n = y.len();
    let mut sorted = body.residuals.clone();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    let k = ((cfg.threshold_quantile * (n as f64 + 1.0)).round() as usize).clamp(1, n - 1);
    let u = sorted[k - 1];

    let mut exc = Vec::new();
    let mut exc_t = Vec::new();
    let mut exc_day = day.map(|_| Vec::new());
    for (i, &r) in body.residuals.iter().enumerate() {
        if r > u {
            exc.push(r - u);
            exc_t.push(t[i]);
            if let (Some(ds), Some(d)) = (exc_day.as_mut(), day) {
                ds.push(d[i]);
            }
        }
    }
    let tail_design = cfg.tail_basis.design(&exc_t, exc_day.as_deref())?;
    let tail_fit = gpd_fit_ns(&exc, &tail_design)?;

    Ok(MarginalModel {
        loc_coeffs: body.loc_coeffs,
        scale_coeffs: body.scale_coeffs,
        loc_basis: cfg.loc_basis.clone(),
        scale_basis: cfg.scale_basis.clone(),
        tail: NsGpdParams {
            tau_coeffs: tail_fit.tau_coeffs,
            xi: tail_fit.xi,
            threshold: u,
            threshold_quantile: k as f64 / (n as f64 + 1.0),
            basis: cfg.tail_basis.clone(),
        },
        residual_sample: sorted,
        threshold_rank: k,
    })
}

/// Transform a raw bivariate series to standard exponential margins through
/// the fitted marginal pair.
pub fn to_exponential(
    raw: &RawSeries,
    model_x: &MarginalModel,
    model_y: &MarginalModel,
) -> Result<ExpSeries> {
    let mut xe = Vec::with_capacity(raw.len());
    let mut ye = Vec::with_capacity(raw.len());
    for i in 0..raw.len() {
        let t = raw.t[i] as f64;
        let d = raw.day.as_ref().map(|d| d[i] as f64);
        xe.push(model_x.to_exponential_value(raw.x[i], t, d)?);
        ye.push(model_y.to_exponential_value(raw.y[i], t, d)?);
    }
    ExpSeries::new(raw.t.clone(), raw.day.clone(), xe, ye)
}
