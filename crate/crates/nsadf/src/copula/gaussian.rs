//! Bivariate normal copula on standard exponential margins.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::norm_cdf;

/// One pair from the Gaussian copula with correlation `rho`, mapped to
/// exponential margins. Large normal values map to large exponential values.
pub(super) fn draw_exp_pair(rho: f64, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let z1: f64 = StandardNormal.sample(rng);
    let z2: f64 = StandardNormal.sample(rng);
    let z2c = rho * z1 + (1.0 - rho * rho).max(0.0).sqrt() * z2;
    (exp_margin(z1), exp_margin(z2c))
}

/// `−log Pr(Z > z)` computed from the survival side for stability.
fn exp_margin(z: f64) -> f64 {
    let sf = norm_cdf(-z);
    if sf <= 0.0 {
        // beyond f64 resolution of Φ; exponentially negligible region
        708.0
    } else {
        -sf.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn exp_margin_is_monotone_and_positive() {
        let mut prev = exp_margin(-10.0);
        assert!(prev >= 0.0);
        for i in -99..=100 {
            let v = exp_margin(i as f64 * 0.1);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn strong_correlation_gives_high_kendall_tau() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let (x, y) = draw_exp_pair(0.8, &mut rng);
            xs.push(x);
            ys.push(y);
        }
        // Kendall tau of a Gaussian copula: (2/π) asin(ρ)
        let tau = crate::copula::kendall_tau(&xs, &ys);
        let want = 2.0 / std::f64::consts::PI * 0.8f64.asin();
        assert!((tau - want).abs() < 0.02, "tau {tau} vs {want}");
    }
}
