//! Non-stationary bivariate extremal dependence modelling.
//!
//! This crate estimates angular dependence functions (ADFs) and return curves
//! for bivariate series whose dependence structure drifts with covariates,
//! under asymptotic independence. The workflow is:
//!
//! 1. [`margins`] — remove marginal non-stationarity (location-scale
//!    pre-processing with covariate bases, GPD residual tails, semi-empirical
//!    CDFs) and transform to standard exponential margins.
//! 2. [`adf`] — estimate the non-stationary ADF `λ(w | z_t)` over a grid of
//!    rays, either pointwise via quantile regression of min-projections
//!    ([`qreg`]) or smoothly via covariate-dependent Bernstein-Bézier
//!    polynomials.
//! 3. [`curve`] — turn constrained ADF estimates into return curves at small
//!    joint survival probabilities, on exponential or original margins.
//!
//! [`copula`] provides seeded simulators with known (oracle-validated) true
//! ADFs, [`evaluation`] the bias/variance/diagnostic harness, and
//! [`surrogate`] a synthetic end-to-end case study. The `nsadf` binary exposes
//! all of it as CLI subcommands; see [`cli`].

pub mod adf;
pub mod basis;
pub mod cli;
pub mod copula;
pub mod curve;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod margins;
pub mod optim;
pub mod qreg;
pub mod series;
pub mod surrogate;
pub mod svg;

mod linalg;

pub use basis::BasisSpec;
pub use error::{Error, Result};
pub use series::{ExpSeries, RawSeries};

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    use statrs::distribution::ContinuousCDF;
    use std::sync::OnceLock;
    static N: OnceLock<statrs::distribution::Normal> = OnceLock::new();
    N.get_or_init(|| statrs::distribution::Normal::new(0.0, 1.0).unwrap())
        .cdf(x)
}

/// Standard normal quantile function.
pub fn norm_quantile(p: f64) -> f64 {
    use statrs::distribution::ContinuousCDF;
    use std::sync::OnceLock;
    static N: OnceLock<statrs::distribution::Normal> = OnceLock::new();
    N.get_or_init(|| statrs::distribution::Normal::new(0.0, 1.0).unwrap())
        .inverse_cdf(p)
}
