//! Return-curve estimation: for a small joint survival probability `p` and
//! a fixed time, each ray `w` contributes a point
//! `(w(r+u), (1−w)(r+u))` with `u = u_{w,t}` the fitted q1-quantile of the
//! min-projection and `r = −log{p/(1−q1)}/λ*(w|z_t)`. Per-pair curves are
//! averaged coordinatewise over the quantile schedule, isotonic ordering is
//! imposed, and curves can be mapped back to the original data scale
//! through the fitted marginal models.

use serde::{Deserialize, Serialize};

use crate::adf::{bound_value, AdfGrid, BernsteinModel};
use crate::error::{Error, Result};
use crate::margins::MarginalModel;
use crate::qreg::predict_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Margin {
    Exponential,
    Original,
}

/// An estimated return curve: one `(x, y)` point per ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnCurve {
    pub p: f64,
    pub t: u32,
    pub day: Option<u32>,
    pub margin: Margin,
    pub rays: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Coordinates clamped at a finite marginal upper endpoint during
    /// back-transformation.
    pub clamped: Vec<bool>,
}

impl ReturnCurve {
    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }

    /// x nondecreasing and y nonincreasing in w.
    pub fn is_ordered(&self) -> bool {
        self.x.windows(2).all(|v| v[0] <= v[1] + 1e-12)
            && self.y.windows(2).all(|v| v[0] >= v[1] - 1e-12)
    }
}

/// Constrained ADF evaluator backing a return curve.
#[derive(Debug, Clone, Copy)]
pub enum AdfEstimator<'a> {
    /// The bounded quantile-regression grid itself.
    QuantileGrid(&'a AdfGrid),
    /// A fitted Bernstein-Bézier model (bounded at evaluation).
    Smooth(&'a BernsteinModel),
    /// Fixed value; diagnostics and tests.
    Constant(f64),
}

impl AdfEstimator<'_> {
    fn lambda_star(&self, grid: &AdfGrid, ray_idx: usize, t_idx: usize) -> Result<f64> {
        let w = grid.rays.rays()[ray_idx];
        match self {
            AdfEstimator::QuantileGrid(g) => Ok(g.lambda_star(ray_idx, t_idx)),
            AdfEstimator::Smooth(m) => {
                let t = grid.t[t_idx] as f64;
                let day = grid.day.as_ref().map(|d| d[t_idx] as f64);
                Ok(bound_value(m.eval(w, t, day)?, w))
            }
            AdfEstimator::Constant(v) => Ok(bound_value(*v, w)),
        }
    }
}

/// Return curve on exponential margins for a single quantile pair
/// (`pair_idx` indexes the grid's schedule).
pub fn exp_curve(
    grid: &AdfGrid,
    estimator: &AdfEstimator,
    p: f64,
    t_idx: usize,
    pair_idx: usize,
) -> Result<ReturnCurve> {
    if t_idx >= grid.n() {
        return Err(Error::invalid("time index outside the fitted grid"));
    }
    let (q1, _) = grid.schedule.pairs()[pair_idx];
    if !(p > 0.0 && p < 1.0 - q1) {
        return Err(Error::invalid(format!(
            "p = {p} must lie in (0, 1−q1) = (0, {})",
            1.0 - q1
        )));
    }
    let t = grid.t[t_idx];
    let day = grid.day.as_ref().map(|d| d[t_idx]);
    let row = grid.basis.row(t as f64, day.map(f64::from))?;
    let log_factor = ((1.0 - q1) / p).ln();
    let rays = grid.rays.rays();
    let mut x = Vec::with_capacity(rays.len());
    let mut y = Vec::with_capacity(rays.len());
    for (ri, &w) in rays.iter().enumerate() {
        let u = predict_quantile(&grid.threshold_fits[ri][pair_idx], &row)?;
        let lam = estimator.lambda_star(grid, ri, t_idx)?;
        let r = log_factor / lam;
        x.push(w * (r + u));
        y.push((1.0 - w) * (r + u));
    }
    Ok(ReturnCurve {
        p,
        t,
        day,
        margin: Margin::Exponential,
        rays: rays.to_vec(),
        x,
        y,
        clamped: vec![false; rays.len()],
    })
}

/// Coordinatewise mean of per-pair curves sharing a ray grid.
pub fn average_curves(curves: &[ReturnCurve]) -> Result<ReturnCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::invalid("no curves to average"))?;
    let m = curves.len() as f64;
    let mut out = first.clone();
    for c in &curves[1..] {
        if c.rays != first.rays {
            return Err(Error::invalid("curves live on different ray grids"));
        }
        if c.margin != first.margin || c.t != first.t {
            return Err(Error::invalid("curves describe different targets"));
        }
        for i in 0..out.len() {
            out.x[i] += c.x[i];
            out.y[i] += c.y[i];
            out.clamped[i] |= c.clamped[i];
        }
    }
    for i in 0..out.len() {
        out.x[i] /= m;
        out.y[i] /= m;
    }
    Ok(out)
}

/// The full estimator: per-pair curves averaged over the grid's schedule,
/// with ordering imposed.
pub fn averaged_exp_curve(
    grid: &AdfGrid,
    estimator: &AdfEstimator,
    p: f64,
    t_idx: usize,
) -> Result<ReturnCurve> {
    let per_pair: Vec<ReturnCurve> = (0..grid.schedule.len())
        .map(|j| exp_curve(grid, estimator, p, t_idx, j))
        .collect::<Result<_>>()?;
    Ok(enforce_ordering(&average_curves(&per_pair)?))
}

/// L2 isotonic projection (pool adjacent violators) of the x coordinates
/// onto nondecreasing and y onto nonincreasing sequences, keeping the
/// `w = 0` and `w = 1` points fixed. Idempotent.
pub fn enforce_ordering(curve: &ReturnCurve) -> ReturnCurve {
    let mut out = curve.clone();
    let n = out.len();
    if n <= 2 {
        return out;
    }
    let project = |v: &mut Vec<f64>| {
        let (lo, hi) = (v[0], v[n - 1]);
        for q in v[1..n - 1].iter_mut() {
            *q = q.clamp(lo.min(hi), hi.max(lo));
        }
        pav_nondecreasing(&mut v[1..n - 1]);
    };
    project(&mut out.x);
    for q in out.y.iter_mut() {
        *q = -*q;
    }
    project(&mut out.y);
    for q in out.y.iter_mut() {
        *q = -*q;
    }
    out
}

/// In-place pool-adjacent-violators for the nondecreasing L2 projection.
fn pav_nondecreasing(v: &mut [f64]) {
    let n = v.len();
    if n <= 1 {
        return;
    }
    let mut means: Vec<f64> = Vec::with_capacity(n);
    let mut counts: Vec<usize> = Vec::with_capacity(n);
    for &val in v.iter() {
        means.push(val);
        counts.push(1);
        while means.len() > 1 && means[means.len() - 2] > means[means.len() - 1] {
            let m2 = means.pop().unwrap();
            let c2 = counts.pop().unwrap();
            let m1 = *means.last().unwrap();
            let c1 = *counts.last().unwrap();
            *means.last_mut().unwrap() = (m1 * c1 as f64 + m2 * c2 as f64) / (c1 + c2) as f64;
            *counts.last_mut().unwrap() = c1 + c2;
        }
    }
    let mut pos = 0;
    for (m, c) in means.into_iter().zip(counts) {
        for _ in 0..c {
            v[pos] = m;
            pos += 1;
        }
    }
}

/// Transform an exponential-margin curve to the original data scale:
/// `v ↦ 1 − e^{−v}` per coordinate, then the semi-empirical quantile, then
/// the location-scale map.
pub fn back_transform(
    curve: &ReturnCurve,
    model_x: &MarginalModel,
    model_y: &MarginalModel,
) -> Result<ReturnCurve> {
    if curve.margin != Margin::Exponential {
        return Err(Error::invalid("curve is not on exponential margins"));
    }
    let t = curve.t as f64;
    let day = curve.day.map(f64::from);
    let mut out = curve.clone();
    out.margin = Margin::Original;
    for i in 0..curve.len() {
        let (xv, cx) = model_x.from_exponential_value(curve.x[i], t, day)?;
        let (yv, cy) = model_y.from_exponential_value(curve.y[i], t, day)?;
        out.x[i] = xv;
        out.y[i] = yv;
        out.clamped[i] = curve.clamped[i] || cx || cy;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adf::{lambda_qr_average, QuantileSchedule, RayGrid};
    use crate::basis::BasisSpec;
    use crate::series::ExpSeries;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn independent_series(n: usize, seed: u64) -> ExpSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> Vec<f64> {
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    -(-u).ln_1p()
                })
                .collect()
        };
        let x = draw();
        let y = draw();
        ExpSeries::new((1..=n as u32).collect(), None, x, y).unwrap()
    }

    fn small_grid(n: usize, seed: u64) -> AdfGrid {
        let s = independent_series(n, seed);
        lambda_qr_average(
            &s,
            &RayGrid::with_step(21),
            &QuantileSchedule::single(0.9, 0.94).unwrap(),
            &BasisSpec::poly(1),
        )
        .unwrap()
    }

    #[test]
    fn unit_adf_radius_formula() {
        // λ* ≡ 1, q1 = 0.9, p = 0.001 → r = log 100 at every ray
        let grid = small_grid(3_000, 1);
        let c = exp_curve(&grid, &AdfEstimator::Constant(1.0), 0.001, 1_500, 0).unwrap();
        let t_row = [1.0, 1_501.0];
        let r = 100f64.ln();
        for (ri, &w) in grid.rays.rays().iter().enumerate() {
            let u = predict_quantile(&grid.threshold_fits[ri][0], &t_row).unwrap();
            assert!((c.x[ri] - w * (r + u)).abs() < 1e-10);
            assert!((c.y[ri] - (1.0 - w) * (r + u)).abs() < 1e-10);
        }
        // symmetric ray: x = y at w = 0.5
        let mid = grid.rays.nearest(0.5);
        assert!((c.x[mid] - c.y[mid]).abs() < 1e-12);
        // endpoint rays are degenerate
        assert_eq!(c.x[0], 0.0);
        assert_eq!(c.y[c.len() - 1], 0.0);
    }

    #[test]
    fn rejects_p_beyond_extrapolation_range() {
        let grid = small_grid(1_000, 2);
        assert!(exp_curve(&grid, &AdfEstimator::Constant(1.0), 0.2, 10, 0).is_err());
        assert!(exp_curve(&grid, &AdfEstimator::Constant(1.0), 0.0, 10, 0).is_err());
    }

    #[test]
    fn averaging_identities() {
        let grid = small_grid(1_000, 3);
        let c = exp_curve(&grid, &AdfEstimator::Constant(1.0), 0.001, 500, 0).unwrap();
        let single = average_curves(std::slice::from_ref(&c)).unwrap();
        assert_eq!(single, c);
        let dup = average_curves(&[c.clone(), c.clone()]).unwrap();
        assert_eq!(dup, c);
        // two curves differing by ±δ average to the midpoint
        let mut up = c.clone();
        let mut dn = c.clone();
        for i in 0..c.len() {
            up.x[i] += 0.25;
            dn.x[i] -= 0.25;
        }
        let mid = average_curves(&[up, dn]).unwrap();
        for i in 0..c.len() {
            assert!((mid.x[i] - c.x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn ordering_projection() {
        let base = ReturnCurve {
            p: 0.001,
            t: 1,
            day: None,
            margin: Margin::Exponential,
            rays: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            x: vec![0.0, 2.0, 1.0, 3.0, 4.0],
            y: vec![4.0, 3.0, 3.5, 1.0, 0.0],
            clamped: vec![false; 5],
        };
        let fixed = enforce_ordering(&base);
        assert!(fixed.is_ordered());
        // single interior violation pooled to the mean
        assert!((fixed.x[1] - 1.5).abs() < 1e-12);
        assert!((fixed.x[2] - 1.5).abs() < 1e-12);
        assert!((fixed.y[1] - 3.25).abs() < 1e-12);
        // endpoints never move
        assert_eq!(fixed.x[0], 0.0);
        assert_eq!(fixed.x[4], 4.0);
        assert_eq!(fixed.y[0], 4.0);
        assert_eq!(fixed.y[4], 0.0);
        // idempotent
        assert_eq!(enforce_ordering(&fixed), fixed);
    }

    #[test]
    fn ordering_on_random_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let n = 21;
            let rays: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
            let mut x: Vec<f64> = rays.iter().map(|w| 6.0 * w).collect();
            let mut y: Vec<f64> = rays.iter().map(|w| 6.0 * (1.0 - w)).collect();
            for i in 1..n - 1 {
                x[i] += rng.random::<f64>() - 0.5;
                y[i] += rng.random::<f64>() - 0.5;
            }
            let c = ReturnCurve {
                p: 0.001,
                t: 1,
                day: None,
                margin: Margin::Exponential,
                rays,
                x,
                y,
                clamped: vec![false; n],
            };
            assert!(enforce_ordering(&c).is_ordered());
        }
    }

    #[test]
    fn dominance_under_pointwise_adf_ordering() {
        // smaller λ* pushes every point outward along its ray
        let grid = small_grid(1_000, 5);
        let strong = averaged_exp_curve(&grid, &AdfEstimator::Constant(0.7), 0.001, 500).unwrap();
        let weak = averaged_exp_curve(&grid, &AdfEstimator::Constant(1.0), 0.001, 500).unwrap();
        for i in 0..strong.len() {
            assert!(strong.x[i] >= weak.x[i] - 1e-9);
            assert!(strong.y[i] >= weak.y[i] - 1e-9);
        }
    }

    #[test]
    fn averaged_curve_within_pair_hull() {
        let s = independent_series(3_000, 6);
        let grid = lambda_qr_average(
            &s,
            &RayGrid::with_step(11),
            &QuantileSchedule::new(vec![(0.9, 0.94), (0.93, 0.97)]).unwrap(),
            &BasisSpec::poly(1),
        )
        .unwrap();
        let est = AdfEstimator::QuantileGrid(&grid);
        let a = exp_curve(&grid, &est, 0.001, 1_000, 0).unwrap();
        let b = exp_curve(&grid, &est, 0.001, 1_000, 1).unwrap();
        let avg = average_curves(&[a.clone(), b.clone()]).unwrap();
        for i in 0..avg.len() {
            let (lo, hi) = (a.x[i].min(b.x[i]), a.x[i].max(b.x[i]));
            assert!(avg.x[i] >= lo - 1e-12 && avg.x[i] <= hi + 1e-12);
        }
    }

    #[test]
    fn exp_curve_survival_calibration_independence() {
        // Monte Carlo check at interior rays under the true (independent)
        // copula; the acceptance suite runs the full-scale version.
        let s = independent_series(10_000, 7);
        let grid = lambda_qr_average(
            &s,
            &RayGrid::with_step(21),
            &QuantileSchedule::standard(),
            &BasisSpec::poly(1),
        )
        .unwrap();
        let p = 0.001;
        let curve =
            averaged_exp_curve(&grid, &AdfEstimator::QuantileGrid(&grid), p, 5_000).unwrap();
        let fresh = independent_series(400_000, 8);
        for (ri, &w) in curve.rays.iter().enumerate() {
            if !(0.2..=0.8).contains(&w) {
                continue;
            }
            let hits = fresh
                .x()
                .iter()
                .zip(fresh.y())
                .filter(|&(&x, &y)| x > curve.x[ri] && y > curve.y[ri])
                .count();
            let phat = hits as f64 / fresh.len() as f64;
            assert!(
                phat > p / 2.0 && phat < 2.0 * p,
                "w={w}: survival {phat} vs target {p}"
            );
        }
    }

    #[test]
    fn back_transform_round_trip_and_order() {
        use crate::margins::{fit_marginal_model, MarginalFitConfig};
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 3_000u32;
        let t: Vec<u32> = (1..=n).collect();
        let mut mk = |base: f64| -> Vec<f64> {
            t.iter()
                .map(|&ti| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    base + 0.001 * ti as f64 + e
                })
                .collect()
        };
        let xv = mk(5.0);
        let yv = mk(20.0);
        let cfg = MarginalFitConfig::default();
        let mx = fit_marginal_model(&xv, &t, None, &cfg).unwrap();
        let my = fit_marginal_model(&yv, &t, None, &cfg).unwrap();

        let grid = small_grid(3_000, 14);
        let exp = averaged_exp_curve(&grid, &AdfEstimator::Constant(1.0), 0.001, 1_500).unwrap();
        let orig = back_transform(&exp, &mx, &my).unwrap();
        assert_eq!(orig.margin, Margin::Original);
        // strictly monotone maps preserve the ordering invariant
        assert!(orig.is_ordered());
        // tail coordinates invert back to the exponential scale
        for i in 0..orig.len() {
            if exp.x[i] > 3.0 && !orig.clamped[i] {
                let back = mx
                    .to_exponential_value(orig.x[i], orig.t as f64, None)
                    .unwrap();
                assert!((back - exp.x[i]).abs() < 1e-6, "{} vs {}", back, exp.x[i]);
            }
        }
        assert!(back_transform(&orig, &mx, &my).is_err());
    }
}
