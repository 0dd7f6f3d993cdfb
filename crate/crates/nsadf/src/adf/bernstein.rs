//! Smooth non-stationary ADF estimation with Bernstein-Bézier polynomials
//! whose coefficients are covariate functions:
//!
//! `λ_BP(w | z_t) = Σ_{i=0}^k β_i(z_t) C(k,i) w^i (1−w)^{k−i}`,
//! `β_0 = β_k = 1`, `β_i(z) = h(z'ψ_i)` with an exponential or logit link.
//!
//! The parameters minimize the mean absolute deviation from the
//! quantile-regression grid over all rays and times (floored cells carry
//! weight zero). The objective is non-smooth, so a multi-start Nelder–Mead
//! simplex does the minimization; the first start makes each `β_i` constant
//! and equal to the time-averaged grid at ray `i/k`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adf::AdfGrid;
use crate::basis::{dot, BasisSpec};
use crate::error::{Error, Result};
use crate::optim::NelderMead;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Coefficient link function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// `β = exp(z'ψ) ∈ (0, ∞)`.
    Exponential,
    /// `β = logistic(z'ψ) ∈ (0, 1)`; keeps the fitted ADF ≤ 1.
    Logit,
}

impl Link {
    #[inline]
    pub fn apply(&self, eta: f64) -> f64 {
        match self {
            Link::Exponential => eta.exp(),
            Link::Logit => {
                if eta >= 0.0 {
                    1.0 / (1.0 + (-eta).exp())
                } else {
                    let e = eta.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    pub fn inverse(&self, beta: f64) -> f64 {
        match self {
            Link::Exponential => beta.max(1e-8).ln(),
            Link::Logit => {
                let b = beta.clamp(1e-6, 1.0 - 1e-6);
                (b / (1.0 - b)).ln()
            }
        }
    }
}

/// Fitted smooth ADF model. Coefficient vectors `psi[i]` are stored on the
/// raw covariate basis so the model is self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinModel {
    pub degree: usize,
    pub link: Link,
    pub basis: BasisSpec,
    /// `psi[i]`, `i = 1..=k−1`, each of length `basis.ncols()`.
    pub psi: Vec<Vec<f64>>,
}

impl BernsteinModel {
    /// Coefficient function `β_i(z)` for `i ∈ 0..=k`.
    pub fn beta(&self, i: usize, row: &[f64]) -> f64 {
        if i == 0 || i == self.degree {
            1.0
        } else {
            self.link.apply(dot(row, &self.psi[i - 1]))
        }
    }

    /// Evaluate `λ_BP(w | z_t)`; exact at `w ∈ {0, 1}`.
    pub fn eval(&self, w: f64, t: f64, day: Option<f64>) -> Result<f64> {
        let row = self.basis.row(t, day)?;
        Ok(self.eval_row(w, &row))
    }

    pub fn eval_row(&self, w: f64, row: &[f64]) -> f64 {
        let k = self.degree;
        let mut acc = 0.0;
        for (i, &c) in binomials(k).iter().enumerate() {
            let b = c * w.powi(i as i32) * (1.0 - w).powi((k - i) as i32);
            if b != 0.0 {
                acc += self.beta(i, row) * b;
            }
        }
        acc
    }

    /// Constrained evaluation `max{λ_BP, max(w, 1−w)}`.
    pub fn eval_star(&self, w: f64, t: f64, day: Option<f64>) -> Result<f64> {
        Ok(super::bound_value(self.eval(w, t, day)?, w))
    }
}

fn binomials(k: usize) -> Vec<f64> {
    let mut c = vec![1.0; k + 1];
    for i in 1..=k {
        c[i] = c[i - 1] * (k - i + 1) as f64 / i as f64;
    }
    c
}

/// Fit configuration; defaults follow the simulation-study setup
/// (degree 7, exponential link, coefficient basis {1, t}).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BernsteinFitConfig {
    pub degree: usize,
    pub link: Link,
    pub basis: BasisSpec,
    pub starts: usize,
    pub max_evals: usize,
    pub ftol: f64,
    pub seed: u64,
}

impl Default for BernsteinFitConfig {
    fn default() -> Self {
        BernsteinFitConfig {
            degree: 7,
            link: Link::Exponential,
            basis: BasisSpec::poly(1),
            starts: 5,
            max_evals: 50_000,
            ftol: 1e-7,
            seed: 0,
        }
    }
}

/// Result of a smooth fit.
#[derive(Debug, Clone)]
pub struct BernsteinFit {
    pub model: BernsteinModel,
    /// Achieved mean absolute deviation from the grid.
    pub objective: f64,
    pub converged: bool,
}

/// Minimize the mean absolute deviation between the smooth family and a
/// quantile-regression grid. Deterministic given `cfg.seed`; multi-starts
/// run in parallel and ties break toward the lowest start index.
pub fn fit_bernstein(grid: &AdfGrid, cfg: &BernsteinFitConfig) -> Result<BernsteinFit> {
    if !(2..=15).contains(&cfg.degree) {
        return Err(Error::Config(format!(
            "degree must lie in 2..=15, got {}",
            cfg.degree
        )));
    }
    if cfg.starts == 0 {
        return Err(Error::Config("need at least one start".into()));
    }
    let k = cfg.degree;
    let n = grid.n();
    let rays = grid.rays.rays();
    let nw = rays.len();

    // coefficient design, standardized for the optimizer
    let design = cfg.basis.design(&grid.t, grid.day.as_deref())?;
    let (std_design, standardizer) = design.standardize_or_intercept()?;
    let p = std_design.ncols();
    let dim = (k - 1) * p;

    // Bernstein basis matrix, ray-major
    let binom = binomials(k);
    let mut bmat = vec![0.0; nw * (k + 1)];
    for (wi, &w) in rays.iter().enumerate() {
        for i in 0..=k {
            bmat[wi * (k + 1) + i] =
                binom[i] * w.powi(i as i32) * (1.0 - w).powi((k - i) as i32);
        }
    }

    // grid transposed to time-major with weight-zero flags folded in
    let mut target = vec![0.0; n * nw];
    let mut include = vec![true; n * nw];
    for wi in 0..nw {
        for ti in 0..n {
            target[ti * nw + wi] = grid.value(wi, ti);
            include[ti * nw + wi] = !grid.is_floored(wi, ti);
        }
    }
    let denom = (nw * n) as f64;

    let link = cfg.link;
    let objective = |theta: &[f64]| -> f64 {
        let mut acc = 0.0;
        let mut betas = vec![1.0; k + 1];
        for ti in 0..n {
            let row = std_design.row(ti);
            for i in 1..k {
                betas[i] = link.apply(dot(row, &theta[(i - 1) * p..i * p]));
            }
            let trow = &target[ti * nw..(ti + 1) * nw];
            let irow = &include[ti * nw..(ti + 1) * nw];
            for wi in 0..nw {
                if !irow[wi] {
                    continue;
                }
                let brow = &bmat[wi * (k + 1)..(wi + 1) * (k + 1)];
                let mut lam = 0.0;
                for i in 0..=k {
                    lam += betas[i] * brow[i];
                }
                acc += (trow[wi] - lam).abs();
            }
        }
        acc / denom
    };

    // start 0: constant β_i matching the time-averaged grid at ray i/k
    let mut theta0 = vec![0.0; dim];
    for i in 1..k {
        let ray_idx = grid.rays.nearest(i as f64 / k as f64);
        let avg = grid.time_average(ray_idx);
        theta0[(i - 1) * p] = link.inverse(avg.clamp(0.02, 50.0));
    }

    let starts: Vec<Vec<f64>> = (0..cfg.starts)
        .map(|s| {
            if s == 0 {
                theta0.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(s as u64));
                theta0
                    .iter()
                    .map(|&v| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        v + 0.3 * z
                    })
                    .collect()
            }
        })
        .collect();

    let nm = NelderMead {
        max_evals: cfg.max_evals,
        ftol: cfg.ftol,
        init_step: 0.25,
    };
    let results: Vec<_> = starts
        .par_iter()
        .map(|s| nm.minimize(&objective, s))
        .collect();
    let best = results
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.fx.total_cmp(&b.fx).then(ia.cmp(ib)))
        .map(|(_, r)| r)
        .unwrap();

    let psi: Vec<Vec<f64>> = (0..k - 1)
        .map(|i| standardizer.to_raw(&best.x[i * p..(i + 1) * p]))
        .collect();
    Ok(BernsteinFit {
        model: BernsteinModel {
            degree: k,
            link: cfg.link,
            basis: cfg.basis.clone(),
            psi,
        },
        objective: best.fx,
        converged: best.converged,
    })
}
