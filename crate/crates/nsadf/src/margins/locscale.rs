//! Location-scale pre-processing: `Y_t = μ(z_t) + σ(z_t)·R_t` with
//! `μ = z'a`, `log σ = z'b` and standard normal residuals, fitted by
//! (optionally ridge-penalized) Gaussian maximum likelihood.
//!
//! Estimation alternates a weighted ridge least-squares step for the
//! location with Newton steps for the log-scale; both stages are concave
//! given the other, and the intercept-only case converges to the sample
//! mean and MLE standard deviation exactly.

use crate::basis::{dot, Design};
use crate::error::{Error, Result};
use crate::linalg;

/// Fitted location/scale coefficient vectors on the raw basis.
#[derive(Debug, Clone)]
pub struct LocScaleFit {
    pub loc_coeffs: Vec<f64>,
    pub scale_coeffs: Vec<f64>,
    pub penalty: f64,
    pub log_lik: f64,
    /// Standardized residuals `(y − μ)/σ` in observation order.
    pub residuals: Vec<f64>,
}

/// Penalized Gaussian log-likelihood (up to the `-n/2·log 2π` constant).
fn loglik(
    y: &[f64],
    loc_design: &Design,
    scale_design: &Design,
    a: &[f64],
    b: &[f64],
    penalty: f64,
) -> f64 {
    let mut ll = 0.0;
    for i in 0..y.len() {
        let mu = dot(loc_design.row(i), a);
        let lsig = dot(scale_design.row(i), b);
        let e = y[i] - mu;
        ll -= 0.5 * e * e * (-2.0 * lsig).exp() + lsig;
    }
    for c in a.iter().skip(1) {
        ll -= penalty * c * c;
    }
    for c in b.iter().skip(1) {
        ll -= penalty * c * c;
    }
    ll
}

/// Fit location and scale coefficient functions.
///
/// `scale_design` may differ from `loc_design` (e.g. harmonic terms in the
/// location only); pass the same design for the common case. The ridge
/// `penalty` applies to non-intercept coefficients of both parts.
pub fn locscale_fit(
    y: &[f64],
    loc_design: &Design,
    scale_design: &Design,
    penalty: f64,
) -> Result<LocScaleFit> {
    let n = y.len();
    if n == 0 || loc_design.nrows() != n || scale_design.nrows() != n {
        return Err(Error::invalid("design rows must match the series length"));
    }
    if !loc_design.has_intercept() || !scale_design.has_intercept() {
        return Err(Error::invalid("designs must include an intercept column"));
    }
    if penalty < 0.0 {
        return Err(Error::invalid("penalty must be nonnegative"));
    }
    let (xl, std_l) = loc_design.standardize_or_intercept()?;
    let (xs, std_s) = scale_design.standardize_or_intercept()?;
    let ps = xs.ncols();

    // init: unweighted ridge LS for a, constant variance for b
    let mut a = weighted_ridge(&xl, y, None, penalty)?;
    let mut resid_var = {
        let mut v = 0.0;
        for i in 0..n {
            let e = y[i] - dot(xl.row(i), &a);
            v += e * e;
        }
        v / n as f64
    };
    if resid_var < 1e-20 {
        return Err(Error::Degenerate(
            "zero residual variance; scale is not identifiable".into(),
        ));
    }
    let mut b = vec![0.0; ps];
    b[0] = 0.5 * resid_var.ln();

    let mut ll = loglik(y, &xl, &xs, &a, &b, penalty);
    for _outer in 0..200 {
        // location step: weights 1/σ² from the current scale
        let w: Vec<f64> = (0..n)
            .map(|i| (-2.0 * dot(xs.row(i), &b)).exp())
            .collect();
        a = weighted_ridge(&xl, y, Some(&w), penalty)?;

        // scale step: Newton on b with step halving
        for _ in 0..50 {
            let mut g = vec![0.0; ps];
            let mut h = vec![0.0; ps * ps];
            for i in 0..n {
                let row = xs.row(i);
                let e = y[i] - dot(xl.row(i), &a);
                let q = e * e * (-2.0 * dot(row, &b)).exp();
                for j in 0..ps {
                    g[j] += row[j] * (q - 1.0);
                    for k in 0..ps {
                        h[j * ps + k] += 2.0 * row[j] * row[k] * q;
                    }
                }
            }
            for j in 1..ps {
                g[j] -= 2.0 * penalty * b[j];
                h[j * ps + j] += 2.0 * penalty;
            }
            let gn: f64 = g.iter().map(|v| v.abs()).sum();
            if gn < 1e-11 * n as f64 {
                break;
            }
            let step = linalg::solve(h, g.clone())?;
            let mut alpha = 1.0;
            let base = loglik(y, &xl, &xs, &a, &b, penalty);
            loop {
                let cand: Vec<f64> = b.iter().zip(&step).map(|(x, s)| x + alpha * s).collect();
                if loglik(y, &xl, &xs, &a, &cand, penalty) >= base {
                    b = cand;
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-12 {
                    break;
                }
            }
        }

        let ll_new = loglik(y, &xl, &xs, &a, &b, penalty);
        if (ll_new - ll).abs() <= 1e-12 * (1.0 + ll.abs()) {
            ll = ll_new;
            break;
        }
        ll = ll_new;
    }

    let mut residuals = Vec::with_capacity(n);
    let mut min_sig = f64::MAX;
    for i in 0..n {
        let mu = dot(xl.row(i), &a);
        let sig = dot(xs.row(i), &b).exp();
        min_sig = min_sig.min(sig);
        residuals.push((y[i] - mu) / sig);
    }
    if !(min_sig > 0.0) || !min_sig.is_finite() {
        return Err(Error::numerical("fitted scale collapsed"));
    }
    resid_var = residuals.iter().map(|r| r * r).sum::<f64>() / n as f64;
    if resid_var < 1e-20 {
        return Err(Error::Degenerate("zero residual variance".into()));
    }

    Ok(LocScaleFit {
        loc_coeffs: std_l.to_raw(&a),
        scale_coeffs: std_s.to_raw(&b),
        penalty,
        log_lik: ll,
        residuals,
    })
}

/// Generalized cross-validation over a logarithmic grid of 20 penalties
/// (plus the unpenalized fit); returns the winning penalty.
///
/// GCV score: `n·D / (n − edf)²` with `D` the model deviance and `edf` the
/// summed effective degrees of freedom of the location and scale stages.
pub fn select_ridge_penalty(
    y: &[f64],
    loc_design: &Design,
    scale_design: &Design,
) -> Result<f64> {
    let n = y.len() as f64;
    let mut best = (0.0f64, f64::INFINITY);
    let mut grid = vec![0.0];
    for k in 0..20 {
        grid.push(10f64.powf(-4.0 + 8.0 * k as f64 / 19.0));
    }
    for &pen in &grid {
        let fit = match locscale_fit(y, loc_design, scale_design, pen) {
            Ok(f) => f,
            Err(_) => continue,
        };
        let deviance = -2.0 * fit.log_lik;
        let edf = edf_for(loc_design, scale_design, &fit, pen)?;
        let denom = (n - edf).max(1.0);
        let score = n * deviance / (denom * denom);
        if score < best.1 {
            best = (pen, score);
        }
    }
    if best.1.is_infinite() {
        return Err(Error::numerical("GCV failed at every penalty"));
    }
    Ok(best.0)
}

fn edf_for(
    loc_design: &Design,
    scale_design: &Design,
    fit: &LocScaleFit,
    penalty: f64,
) -> Result<f64> {
    // Location stage: tr((X'WX + 2λD)⁻¹ X'WX) with W = 1/σ²; scale stage
    // analogous with the Fisher weight 2 (since E[e²/σ²] = 1 at the fit).
    let n = loc_design.nrows();
    let (xl, _) = loc_design.standardize_or_intercept()?;
    let (xs, std_s) = scale_design.standardize_or_intercept()?;
    let b_std = std_s.to_standardized(&fit.scale_coeffs);
    let pl = xl.ncols();
    let ps = xs.ncols();
    let mut xtwx = vec![0.0; pl * pl];
    for i in 0..n {
        let w = (-2.0 * dot(xs.row(i), &b_std)).exp();
        let row = xl.row(i);
        for j in 0..pl {
            for k in 0..pl {
                xtwx[j * pl + k] += w * row[j] * row[k];
            }
        }
    }
    let mut d = vec![1.0; pl];
    d[0] = 0.0;
    let edf_loc = linalg::ridge_edf(&xtwx, &d, 2.0 * penalty)?;
    let mut xtx = vec![0.0; ps * ps];
    for i in 0..n {
        let row = xs.row(i);
        for j in 0..ps {
            for k in 0..ps {
                xtx[j * ps + k] += 2.0 * row[j] * row[k];
            }
        }
    }
    let mut ds = vec![1.0; ps];
    ds[0] = 0.0;
    let edf_scale = linalg::ridge_edf(&xtx, &ds, 2.0 * penalty)?;
    Ok(edf_loc + edf_scale)
}

fn weighted_ridge(
    x: &Design,
    y: &[f64],
    w: Option<&[f64]>,
    penalty: f64,
) -> Result<Vec<f64>> {
    let n = x.nrows();
    let p = x.ncols();
    let mut xtx = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    for i in 0..n {
        let wi = w.map_or(1.0, |w| w[i]);
        let row = x.row(i);
        for j in 0..p {
            xty[j] += wi * row[j] * y[i];
            for k in j..p {
                xtx[j * p + k] += wi * row[j] * row[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            xtx[j * p + k] = xtx[k * p + j];
        }
    }
    for j in 1..p {
        xtx[j * p + j] += 2.0 * penalty;
    }
    linalg::solve(xtx, xty)
}

impl Design {
    /// Standardize, but let a pure-intercept design through unchanged.
    pub(crate) fn standardize_or_intercept(
        &self,
    ) -> Result<(Design, crate::basis::Standardizer)> {
        if self.ncols() == 1 {
            Ok((
                self.clone(),
                crate::basis::Standardizer {
                    means: vec![0.0],
                    sds: vec![1.0],
                },
            ))
        } else {
            self.standardize()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn intercept_only_recovers_mean_and_mle_sd() {
        let y: Vec<f64> = normals(500, 1).iter().map(|z| 3.0 + 2.0 * z).collect();
        let n = y.len() as f64;
        let design = BasisSpec::constant()
            .design(&(1..=500u32).collect::<Vec<_>>(), None)
            .unwrap();
        let fit = locscale_fit(&y, &design, &design, 0.0).unwrap();
        let mean = y.iter().sum::<f64>() / n;
        let sd_mle = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((fit.loc_coeffs[0] - mean).abs() < 1e-8);
        assert!((fit.scale_coeffs[0].exp() - sd_mle).abs() < 1e-8);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let y = vec![4.2; 100];
        let design = BasisSpec::constant()
            .design(&(1..=100u32).collect::<Vec<_>>(), None)
            .unwrap();
        assert!(matches!(
            locscale_fit(&y, &design, &design, 0.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn recovers_linear_trend() {
        // y_t = 2 + 0.003 t + ε, n = 9000
        let n = 9000u32;
        let t: Vec<u32> = (1..=n).collect();
        let eps = normals(n as usize, 5);
        let y: Vec<f64> = t
            .iter()
            .zip(&eps)
            .map(|(&ti, e)| 2.0 + 0.003 * ti as f64 + e)
            .collect();
        let design = BasisSpec::poly(1).design(&t, None).unwrap();
        let fit = locscale_fit(&y, &design, &design, 0.0).unwrap();
        assert!((fit.loc_coeffs[0] - 2.0).abs() < 0.1, "{:?}", fit.loc_coeffs);
        assert!(
            (fit.loc_coeffs[1] - 0.003).abs() < 0.0003,
            "{:?}",
            fit.loc_coeffs
        );
    }

    #[test]
    fn recovers_harmonic_coefficient() {
        // y_t = sin(2π d/90) + ε with a harmonic basis
        let n = 9000u32;
        let t: Vec<u32> = (1..=n).collect();
        let day: Vec<u32> = t.iter().map(|&ti| ((ti - 1) % 90) + 1).collect();
        let eps = normals(n as usize, 9);
        let y: Vec<f64> = day
            .iter()
            .zip(&eps)
            .map(|(&d, e)| (2.0 * std::f64::consts::PI * d as f64 / 90.0).sin() + e)
            .collect();
        let basis = BasisSpec::with_harmonics(0, 1, 90.0);
        let design = basis.design(&t, Some(&day)).unwrap();
        let fit = locscale_fit(&y, &design, &design, 0.0).unwrap();
        assert!((fit.loc_coeffs[1] - 1.0).abs() < 0.05, "{:?}", fit.loc_coeffs);
    }

    #[test]
    fn recovers_scale_trend() {
        let n = 9000u32;
        let t: Vec<u32> = (1..=n).collect();
        let eps = normals(n as usize, 13);
        let y: Vec<f64> = t
            .iter()
            .zip(&eps)
            .map(|(&ti, e)| 1.0 + (0.2 + 0.5 * ti as f64 / n as f64).exp() * e)
            .collect();
        let design = BasisSpec::poly(1).design(&t, None).unwrap();
        let fit = locscale_fit(&y, &design, &design, 0.0).unwrap();
        assert!((fit.scale_coeffs[0] - 0.2).abs() < 0.05, "{:?}", fit.scale_coeffs);
        assert!(
            (fit.scale_coeffs[1] - 0.5 / n as f64).abs() < 0.2 / n as f64,
            "{:?}",
            fit.scale_coeffs
        );
    }

    #[test]
    fn residuals_are_standardized() {
        let n = 4000u32;
        let t: Vec<u32> = (1..=n).collect();
        let eps = normals(n as usize, 21);
        let y: Vec<f64> = t
            .iter()
            .zip(&eps)
            .map(|(&ti, e)| 5.0 - 0.001 * ti as f64 + 1.5 * e)
            .collect();
        let design = BasisSpec::poly(1).design(&t, None).unwrap();
        let fit = locscale_fit(&y, &design, &design, 0.0).unwrap();
        let m = fit.residuals.iter().sum::<f64>() / n as f64;
        let v = fit.residuals.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / n as f64;
        assert!(m.abs() < 0.05, "mean {m}");
        assert!((v - 1.0).abs() < 0.05, "var {v}");
    }

    #[test]
    fn gcv_penalty_is_finite_and_small_for_clean_signal() {
        let n = 2000u32;
        let t: Vec<u32> = (1..=n).collect();
        let eps = normals(n as usize, 33);
        let y: Vec<f64> = t
            .iter()
            .zip(&eps)
            .map(|(&ti, e)| 1.0 + 0.002 * ti as f64 + e)
            .collect();
        let design = BasisSpec::poly(2).design(&t, None).unwrap();
        let pen = select_ridge_penalty(&y, &design, &design).unwrap();
        assert!(pen.is_finite());
        let fit = locscale_fit(&y, &design, &design, pen).unwrap();
        assert!((fit.loc_coeffs[1] - 0.002).abs() < 5e-4);
    }
}
