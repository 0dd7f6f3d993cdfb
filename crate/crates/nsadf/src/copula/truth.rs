//! True ADFs for the simulated families and the Monte Carlo Hill oracle
//! used to validate them.
//!
//! Closed forms (all satisfy `λ(0) = λ(1) = 1` and `λ(w) ≥ max(w, 1−w)`):
//!
//! * inverted EV copulas: `λ(w) = V(1/w, 1/(1−w))` with `V` the exponent
//!   function — exact, since the inverted construction has
//!   `Pr(K_w > u) = exp(−λ(w)·u)` with no slowly varying factor;
//! * Gaussian: corner value `(1 − 2ρ√(w(1−w)))/(1−ρ²)` capped by the
//!   marginal rates `w` and `1−w` for ρ ≥ 0 (for ρ < 0 the corner always
//!   attains the infimum);
//! * gauge model: `max{w, 1−w, 1/(2−c)}` — the infimum of the gauge over
//!   the joint survival region `[w,∞)×[1−w,∞)`; on-ray evaluation of the
//!   gauge itself exceeds this near the endpoints and fails the endpoint
//!   conditions, so the region infimum is the form validated against the
//!   oracle below.

use crate::copula::inverted::husler_reiss_exponent;
use crate::copula::CopulaFamily;
use crate::error::{Error, Result};
use crate::series::ExpSeries;

/// True ADF `λ(w)` of a family frozen at `param`.
pub fn true_adf(
    family: CopulaFamily,
    param: f64,
    asymmetry: Option<(f64, f64)>,
    w: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::invalid("ray must lie in [0,1]"));
    }
    match family {
        CopulaFamily::GaussianPos | CopulaFamily::GaussianNeg => {
            if !(-1.0 < param && param < 1.0) {
                return Err(Error::invalid(format!(
                    "gaussian correlation must lie in (−1,1), got {param}"
                )));
            }
            Ok(gaussian_adf(param, w))
        }
        CopulaFamily::InvLogistic => {
            if !(param > 0.0 && param < 1.0) {
                return Err(Error::invalid(format!(
                    "logistic parameter must lie in (0,1), got {param}"
                )));
            }
            if w == 0.0 || w == 1.0 {
                return Ok(1.0);
            }
            Ok((w.powf(1.0 / param) + (1.0 - w).powf(1.0 / param)).powf(param))
        }
        CopulaFamily::InvALog => {
            let (k1, k2) = asymmetry
                .ok_or_else(|| Error::invalid("inv_alog needs asymmetry masses"))?;
            if !(param > 0.0 && param < 1.0) {
                return Err(Error::invalid("logistic parameter must lie in (0,1)"));
            }
            if !(0.0..=1.0).contains(&k1) || !(0.0..=1.0).contains(&k2) {
                return Err(Error::invalid("asymmetry masses must lie in [0,1]"));
            }
            let tail = ((k1 * w).powf(1.0 / param) + (k2 * (1.0 - w)).powf(1.0 / param))
                .powf(param);
            Ok((1.0 - k1) * w + (1.0 - k2) * (1.0 - w) + tail)
        }
        CopulaFamily::InvHuslerReiss => {
            if !(param > 0.0) {
                return Err(Error::invalid("Hüsler–Reiss parameter must be positive"));
            }
            if w == 0.0 || w == 1.0 {
                return Ok(1.0);
            }
            Ok(husler_reiss_exponent(1.0 / w, 1.0 / (1.0 - w), param))
        }
        CopulaFamily::GaugeModel12 => {
            if !(param > 0.0 && param < 1.0) {
                return Err(Error::invalid("gauge parameter must lie in (0,1)"));
            }
            Ok(w.max(1.0 - w).max(1.0 / (2.0 - param)))
        }
    }
}

fn gaussian_adf(rho: f64, w: f64) -> f64 {
    // Endpoints are the marginal rates; for ρ < 0 the interior value
    // (1 − 2ρ√(w(1−w)))/(1−ρ²) exceeds 1 and the ADF jumps at w ∈ {0,1}.
    if w == 0.0 || w == 1.0 {
        return 1.0;
    }
    let corner = (1.0 - 2.0 * rho * (w * (1.0 - w)).sqrt()) / (1.0 - rho * rho);
    if rho < 0.0 {
        return corner;
    }
    // For ρ ≥ 0 one constraint stops binding beyond w = 1/(1+ρ²) and the
    // rate collapses to the active margin.
    let split = rho * rho / (1.0 + rho * rho);
    if w <= split {
        1.0 - w
    } else if w >= 1.0 - split {
        w
    } else {
        corner
    }
}

/// Hill-type oracle estimate of `λ(w)` from a frozen sample: the reciprocal
/// mean excess of the min-projection above its empirical `q`-quantile
/// (exponential-rate MLE on the exponential scale).
#[derive(Debug, Clone, Copy)]
pub struct OracleAdf {
    pub lambda: f64,
    /// Asymptotic standard error `λ̂ / √n_exc`.
    pub se: f64,
    pub n_exceedances: usize,
}

pub fn oracle_adf_mc(frozen: &ExpSeries, w: f64, q: f64) -> Result<OracleAdf> {
    let n = frozen.len();
    if n < 100_000 {
        return Err(Error::invalid(format!(
            "oracle needs at least 1e5 samples, got {n}"
        )));
    }
    if !(q > 0.9 && q < 0.999) {
        return Err(Error::invalid("oracle threshold quantile must lie in (0.9, 0.999)"));
    }
    let mut k: Vec<f64> = (0..n)
        .map(|i| crate::adf::min_projection(frozen.x()[i], frozen.y()[i], w))
        .collect();
    let cut = ((n as f64) * q).ceil() as usize - 1;
    k.select_nth_unstable_by(cut, |a, b| a.total_cmp(b));
    let u = k[cut];
    let mut sum = 0.0;
    let mut m = 0usize;
    for &v in &k[cut + 1..] {
        sum += v - u;
        m += 1;
    }
    // values tied with the threshold stayed left of the partition point;
    // exceedances are strictly above u
    if m < 100 {
        return Err(Error::Degenerate(format!(
            "only {m} exceedances above the oracle threshold"
        )));
    }
    let lambda = m as f64 / sum;
    Ok(OracleAdf {
        lambda,
        se: lambda / (m as f64).sqrt(),
        n_exceedances: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::{sample_frozen, McmcConfig};

    #[test]
    fn endpoints_and_lower_bound_hold_everywhere() {
        let cases: Vec<(CopulaFamily, f64)> = vec![
            (CopulaFamily::GaussianPos, 0.3),
            (CopulaFamily::GaussianPos, 0.9),
            (CopulaFamily::GaussianNeg, -0.6),
            (CopulaFamily::InvLogistic, 0.2),
            (CopulaFamily::InvLogistic, 0.8),
            (CopulaFamily::InvALog, 0.5),
            (CopulaFamily::InvHuslerReiss, 0.4),
            (CopulaFamily::InvHuslerReiss, 6.0),
            (CopulaFamily::GaugeModel12, 0.25),
            (CopulaFamily::GaugeModel12, 0.75),
        ];
        for (fam, p) in cases {
            let asym = (fam == CopulaFamily::InvALog).then_some((0.3, 0.7));
            assert!((true_adf(fam, p, asym, 0.0).unwrap() - 1.0).abs() < 1e-12, "{fam}");
            assert!((true_adf(fam, p, asym, 1.0).unwrap() - 1.0).abs() < 1e-12, "{fam}");
            for i in 0..=100 {
                let w = i as f64 / 100.0;
                let lam = true_adf(fam, p, asym, w).unwrap();
                assert!(
                    lam >= w.max(1.0 - w) - 1e-12,
                    "{fam} param {p} w {w}: λ = {lam}"
                );
            }
        }
    }

    #[test]
    fn paper_examples() {
        // gauge at c = 0.5, w = 0.5 → 1/1.5
        let lam = true_adf(CopulaFamily::GaugeModel12, 0.5, None, 0.5).unwrap();
        assert!((lam - 2.0 / 3.0).abs() < 1e-12);
        // independence Gaussian: λ ≡ 1
        let lam = true_adf(CopulaFamily::GaussianPos, 1e-12, None, 0.5).unwrap();
        assert!((lam - 1.0).abs() < 1e-9);
        // inverted logistic at r = 0.5: λ(0.5) = 2^(r−1) = 2^(−1/2)
        let lam = true_adf(CopulaFamily::InvLogistic, 0.5, None, 0.5).unwrap();
        assert!((lam - 2f64.powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_approaches_dependence_bound() {
        let lam = true_adf(CopulaFamily::GaussianPos, 1.0 - 1e-9, None, 0.5).unwrap();
        assert!((lam - 0.5).abs() < 1e-6);
    }

    #[test]
    fn oracle_independent_pairs() {
        let s = sample_frozen(CopulaFamily::GaussianPos, 1e-12, None, 1_000_000, 3, None).unwrap();
        let est = oracle_adf_mc(&s, 0.5, 0.95).unwrap();
        assert!(
            (0.98..=1.02).contains(&est.lambda),
            "λ̂ = {} (se {})",
            est.lambda,
            est.se
        );
    }

    #[test]
    fn oracle_perfect_dependence() {
        // X = Y: K_{0.5} = 2X exponential with rate 1/2 → λ(0.5) = 1/2.
        let s = sample_frozen(CopulaFamily::GaussianPos, 1e-12, None, 200_000, 4, None).unwrap();
        let x: Vec<f64> = s.x().to_vec();
        let dup = ExpSeries::new(
            (1..=x.len() as u32).collect(),
            None,
            x.clone(),
            x,
        )
        .unwrap();
        let est = oracle_adf_mc(&dup, 0.5, 0.95).unwrap();
        assert!(
            (0.49..=0.51).contains(&est.lambda),
            "λ̂ = {}",
            est.lambda
        );
    }

    #[test]
    fn oracle_matches_inverted_logistic_truth() {
        let s = sample_frozen(CopulaFamily::InvLogistic, 0.5, None, 1_000_000, 5, None).unwrap();
        let est = oracle_adf_mc(&s, 0.5, 0.95).unwrap();
        let truth = 2f64.powf(-0.5);
        assert!(
            (est.lambda - truth).abs() < 0.02,
            "λ̂ = {} vs {}",
            est.lambda,
            truth
        );
    }

    #[test]
    fn oracle_self_consistency_husler_reiss() {
        // estimates at N and 4N agree within combined tolerance, s = 10
        let a = sample_frozen(CopulaFamily::InvHuslerReiss, 10.0, None, 250_000, 6, None).unwrap();
        let b = sample_frozen(CopulaFamily::InvHuslerReiss, 10.0, None, 1_000_000, 7, None).unwrap();
        let ea = oracle_adf_mc(&a, 0.5, 0.95).unwrap();
        let eb = oracle_adf_mc(&b, 0.5, 0.95).unwrap();
        let truth = true_adf(CopulaFamily::InvHuslerReiss, 10.0, None, 0.5).unwrap();
        assert!((ea.lambda - truth).abs() < 0.03, "N: {} vs {truth}", ea.lambda);
        assert!((eb.lambda - truth).abs() < 0.03, "4N: {} vs {truth}", eb.lambda);
    }

    #[test]
    fn oracle_matches_gauge_truth() {
        let cfg = McmcConfig::default();
        let s = sample_frozen(CopulaFamily::GaugeModel12, 0.5, None, 400_000, 8, Some(&cfg))
            .unwrap();
        let truth = true_adf(CopulaFamily::GaugeModel12, 0.5, None, 0.5).unwrap();
        let est = oracle_adf_mc(&s, 0.5, 0.95).unwrap();
        // MCMC autocorrelation widens the effective error beyond the iid se
        assert!(
            (est.lambda - truth).abs() < 0.05,
            "λ̂ = {} vs {}",
            est.lambda,
            truth
        );
    }

    #[test]
    fn oracle_rejects_small_samples_and_bad_q() {
        let s = sample_frozen(CopulaFamily::GaussianPos, 0.2, None, 120_000, 9, None).unwrap();
        assert!(oracle_adf_mc(&s, 0.5, 0.8999).is_err());
        assert!(oracle_adf_mc(&s, 0.5, 0.9995).is_err());
        let small = sample_frozen(CopulaFamily::GaussianPos, 0.2, None, 1_000, 9, None).unwrap();
        assert!(oracle_adf_mc(&small, 0.5, 0.95).is_err());
    }
}
