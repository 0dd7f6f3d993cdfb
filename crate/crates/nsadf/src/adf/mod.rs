//! Non-stationary angular dependence function estimation.
//!
//! For each ray `w` the min-projection `K_{w,t} = min(X_t/w, Y_t/(1−w))`
//! has conditional tail rate `λ(w | z_t)`. Two covariate-varying quantile
//! fits at levels `q1 < q2` give the spacing
//! `v_{w,t} = Q(q2|z_t) − Q(q1|z_t)` and the pointwise estimate
//! `λ̂ = −log{(1−q2)/(1−q1)} / v_{w,t}`; averaging over a schedule of
//! quantile pairs yields the aggregated estimator, and
//! [`bernstein::fit_bernstein`] smooths that grid with covariate-dependent
//! Bernstein-Bézier coefficient functions.

pub mod bernstein;

pub use bernstein::{fit_bernstein, BernsteinFit, BernsteinFitConfig, BernsteinModel, Link};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::qreg::{
    fit_quantile_prepared, predict_quantile, warm_coeffs, PreparedDesign, QuantileFit,
};
use crate::series::ExpSeries;

/// Spacings smaller than this are floored and the cell flagged; flagged
/// cells carry weight zero in the Bernstein objective.
pub const V_FLOOR: f64 = 1e-6;

/// Ordered set of rays spanning [0,1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayGrid {
    rays: Vec<f64>,
}

impl Default for RayGrid {
    fn default() -> Self {
        RayGrid::with_step(101)
    }
}

impl RayGrid {
    /// `count` equally spaced rays from 0 to 1 inclusive (default 101).
    pub fn with_step(count: usize) -> Self {
        let rays = (0..count)
            .map(|i| i as f64 / (count - 1) as f64)
            .collect();
        RayGrid { rays }
    }

    pub fn new(rays: Vec<f64>) -> Result<Self> {
        if rays.len() < 2 || rays[0] != 0.0 || *rays.last().unwrap() != 1.0 {
            return Err(Error::invalid("ray grid must span [0,1]"));
        }
        if rays.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("rays must be strictly increasing"));
        }
        Ok(RayGrid { rays })
    }

    pub fn rays(&self) -> &[f64] {
        &self.rays
    }

    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }

    /// Index of the ray closest to `w`.
    pub fn nearest(&self, w: f64) -> usize {
        let mut best = 0;
        let mut dist = f64::MAX;
        for (i, &r) in self.rays.iter().enumerate() {
            let d = (r - w).abs();
            if d < dist {
                dist = d;
                best = i;
            }
        }
        best
    }
}

/// Quantile-pair schedule `{(q1_j, q2_j)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSchedule {
    pairs: Vec<(f64, f64)>,
}

impl QuantileSchedule {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::invalid("quantile schedule must be nonempty"));
        }
        for &(q1, q2) in &pairs {
            if !(0.0 < q1 && q1 < q2 && q2 < 1.0) {
                return Err(Error::invalid(format!(
                    "invalid quantile pair ({q1}, {q2})"
                )));
            }
        }
        Ok(QuantileSchedule { pairs })
    }

    /// The default schedule: m = 30 equally spaced `q1 ∈ [0.9, 0.95]`,
    /// `q2 = q1 + 0.04`.
    pub fn standard() -> Self {
        let m = 30;
        let pairs = (0..m)
            .map(|j| {
                let q1 = 0.9 + 0.05 * j as f64 / (m - 1) as f64;
                (q1, q1 + 0.04)
            })
            .collect();
        QuantileSchedule { pairs }
    }

    pub fn single(q1: f64, q2: f64) -> Result<Self> {
        QuantileSchedule::new(vec![(q1, q2)])
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Min-projection `min(x/w, y/(1−w))` with the limit conventions
/// `w = 0 → y`, `w = 1 → x`.
pub fn min_projection(x: f64, y: f64, w: f64) -> f64 {
    if w <= 0.0 {
        y
    } else if w >= 1.0 {
        x
    } else {
        (x / w).min(y / (1.0 - w))
    }
}

/// Pointwise ADF estimate along one ray for one quantile pair.
#[derive(Debug, Clone)]
pub struct PointwiseLambda {
    pub w: f64,
    pub q1: f64,
    pub q2: f64,
    /// `λ̂(w | z_t)` per observation.
    pub values: Vec<f64>,
    /// Cells where the quantile spacing was floored at [`V_FLOOR`].
    pub floored: Vec<bool>,
    /// The q1 fit: the covariate-varying threshold sequence `u_{w,t}`.
    pub u_fit: QuantileFit,
    pub v_fit: QuantileFit,
}

/// Estimate `λ̂(w | z_t)` for a single ray and quantile pair.
pub fn lambda_qr_pointwise(
    series: &ExpSeries,
    w: f64,
    pair: (f64, f64),
    basis: &BasisSpec,
) -> Result<PointwiseLambda> {
    let design = basis.design(series.t(), series.day())?;
    let prepared = PreparedDesign::new(&design)?;
    let k: Vec<f64> = (0..series.len())
        .map(|i| min_projection(series.x()[i], series.y()[i], w))
        .collect();
    pointwise_with_prepared(series, &prepared, basis, &k, w, pair)
}

fn pointwise_with_prepared(
    series: &ExpSeries,
    prepared: &PreparedDesign,
    basis: &BasisSpec,
    k: &[f64],
    w: f64,
    (q1, q2): (f64, f64),
) -> Result<PointwiseLambda> {
    if !(0.0 < q1 && q1 < q2 && q2 < 1.0) {
        return Err(Error::invalid("need 0 < q1 < q2 < 1"));
    }
    let u_fit = fit_quantile_prepared(prepared, k, q1, None)?;
    let warm = warm_coeffs(prepared, &u_fit);
    let v_fit = fit_quantile_prepared(prepared, k, q2, Some(&warm))?;
    let log_ratio = ((1.0 - q1) / (1.0 - q2)).ln();
    let mut values = Vec::with_capacity(k.len());
    let mut floored = Vec::with_capacity(k.len());
    for i in 0..k.len() {
        let row = basis.row(series.t()[i] as f64, series.day_at(i).map(f64::from))?;
        let v = predict_quantile(&v_fit, &row)? - predict_quantile(&u_fit, &row)?;
        let clipped = v.max(V_FLOOR);
        floored.push(v < V_FLOOR);
        values.push(log_ratio / clipped);
    }
    Ok(PointwiseLambda {
        w,
        q1,
        q2,
        values,
        floored,
        u_fit,
        v_fit,
    })
}

/// All per-pair pointwise estimates along one ray, computed exactly as the
/// grid builder computes them (quantile levels fitted in ascending order,
/// each warm-started from its neighbour). [`lambda_qr_average`] is the
/// schedule-order arithmetic mean of these.
pub fn lambda_qr_pairs(
    series: &ExpSeries,
    w: f64,
    schedule: &QuantileSchedule,
    basis: &BasisSpec,
) -> Result<Vec<PointwiseLambda>> {
    let design = basis.design(series.t(), series.day())?;
    let prepared = PreparedDesign::new(&design)?;
    let k: Vec<f64> = (0..series.len())
        .map(|i| min_projection(series.x()[i], series.y()[i], w))
        .collect();
    let (per_pair, _) = ray_per_pair(&design, &prepared, &k, w, schedule)?;
    Ok(per_pair)
}

/// Shared per-ray worker: fits every schedule level once (ascending, warm
/// started) and assembles per-pair estimates.
fn ray_per_pair(
    design: &crate::basis::Design,
    prepared: &PreparedDesign,
    k: &[f64],
    w: f64,
    schedule: &QuantileSchedule,
) -> Result<(Vec<PointwiseLambda>, usize)> {
    let n = k.len();
    let mut levels: Vec<(f64, usize, bool)> = Vec::new();
    for (j, &(q1, q2)) in schedule.pairs().iter().enumerate() {
        levels.push((q1, j, false));
        levels.push((q2, j, true));
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut preds: Vec<Vec<f64>> = vec![Vec::new(); schedule.len() * 2];
    let mut fits: Vec<Option<QuantileFit>> = vec![None; schedule.len() * 2];
    let mut unconverged = 0usize;
    let mut warm: Option<Vec<f64>> = None;
    for &(level, j, is_q2) in &levels {
        let fit = fit_quantile_prepared(prepared, k, level, warm.as_deref())?;
        if !fit.converged {
            unconverged += 1;
        }
        warm = Some(warm_coeffs(prepared, &fit));
        let slot = j * 2 + usize::from(is_q2);
        let mut pred = Vec::with_capacity(n);
        for i in 0..n {
            pred.push(predict_quantile(&fit, design.row(i))?);
        }
        preds[slot] = pred;
        fits[slot] = Some(fit);
    }

    let mut out = Vec::with_capacity(schedule.len());
    for (j, &(q1, q2)) in schedule.pairs().iter().enumerate() {
        let log_ratio = ((1.0 - q1) / (1.0 - q2)).ln();
        let lo = &preds[j * 2];
        let hi = &preds[j * 2 + 1];
        let mut values = Vec::with_capacity(n);
        let mut floored = Vec::with_capacity(n);
        for i in 0..n {
            let v = hi[i] - lo[i];
            floored.push(v < V_FLOOR);
            values.push(log_ratio / v.max(V_FLOOR));
        }
        out.push(PointwiseLambda {
            w,
            q1,
            q2,
            values,
            floored,
            u_fit: fits[j * 2].take().unwrap(),
            v_fit: fits[j * 2 + 1].take().unwrap(),
        });
    }
    Ok((out, unconverged))
}

/// The quantile-averaged ADF estimator over a ray × time grid, with the
/// per-(ray, q1) threshold fits retained for return-curve construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdfGrid {
    pub rays: RayGrid,
    pub schedule: QuantileSchedule,
    pub basis: BasisSpec,
    pub t: Vec<u32>,
    pub day: Option<Vec<u32>>,
    /// `λ̄(w | z_t)`, ray-major: `values[w_idx * n + t_idx]`.
    pub values: Vec<f64>,
    /// Cells where any schedule pair was floored.
    pub floored: Vec<bool>,
    /// `threshold_fits[w_idx][j]` is the q1_j fit at ray `w_idx`.
    pub threshold_fits: Vec<Vec<QuantileFit>>,
    /// Count of quantile fits that did not reach the convergence tolerance.
    pub unconverged_fits: usize,
    /// Whether [`apply_bounds`] has pinned endpoints and the lower bound.
    pub bounded: bool,
}

impl AdfGrid {
    pub fn n(&self) -> usize {
        self.t.len()
    }

    pub fn value(&self, ray_idx: usize, t_idx: usize) -> f64 {
        self.values[ray_idx * self.n() + t_idx]
    }

    pub fn is_floored(&self, ray_idx: usize, t_idx: usize) -> bool {
        self.floored[ray_idx * self.n() + t_idx]
    }

    /// Constrained evaluation: lower bound `max(w, 1−w)` and exact
    /// endpoints, regardless of whether the grid was bounded in place.
    pub fn lambda_star(&self, ray_idx: usize, t_idx: usize) -> f64 {
        let w = self.rays.rays()[ray_idx];
        if w == 0.0 || w == 1.0 {
            return 1.0;
        }
        self.value(ray_idx, t_idx).max(w.max(1.0 - w))
    }

    /// Time-averaged `λ̄(w)` at one ray.
    pub fn time_average(&self, ray_idx: usize) -> f64 {
        let n = self.n();
        self.values[ray_idx * n..(ray_idx + 1) * n].iter().sum::<f64>() / n as f64
    }
}

/// Build the quantile-averaged ADF grid. Rays run in parallel; the result
/// is identical to the sequential order (fits are pure, the average is
/// accumulated in schedule order).
pub fn lambda_qr_average(
    series: &ExpSeries,
    rays: &RayGrid,
    schedule: &QuantileSchedule,
    basis: &BasisSpec,
) -> Result<AdfGrid> {
    let n = series.len();
    let design = basis.design(series.t(), series.day())?;
    let prepared = PreparedDesign::new(&design)?;
    let m = schedule.len() as f64;

    struct RayResult {
        values: Vec<f64>,
        floored: Vec<bool>,
        u_fits: Vec<QuantileFit>,
        unconverged: usize,
    }

    let ray_results: Vec<Result<RayResult>> = rays
        .rays()
        .par_iter()
        .map(|&w| {
            let k: Vec<f64> = (0..n)
                .map(|i| min_projection(series.x()[i], series.y()[i], w))
                .collect();
            let (per_pair, unconverged) = ray_per_pair(&design, &prepared, &k, w, schedule)?;
            let mut values = vec![0.0; n];
            let mut floored = vec![false; n];
            for pw in &per_pair {
                for i in 0..n {
                    values[i] += pw.values[i];
                    floored[i] |= pw.floored[i];
                }
            }
            for v in values.iter_mut() {
                *v /= m;
            }
            Ok(RayResult {
                values,
                floored,
                u_fits: per_pair.into_iter().map(|p| p.u_fit).collect(),
                unconverged,
            })
        })
        .collect();

    let mut values = Vec::with_capacity(rays.len() * n);
    let mut floored = Vec::with_capacity(rays.len() * n);
    let mut threshold_fits = Vec::with_capacity(rays.len());
    let mut unconverged_fits = 0;
    for r in ray_results {
        let r = r?;
        values.extend_from_slice(&r.values);
        floored.extend_from_slice(&r.floored);
        threshold_fits.push(r.u_fits);
        unconverged_fits += r.unconverged;
    }
    Ok(AdfGrid {
        rays: rays.clone(),
        schedule: schedule.clone(),
        basis: basis.clone(),
        t: series.t().to_vec(),
        day: series.day().map(<[u32]>::to_vec),
        values,
        floored,
        threshold_fits,
        unconverged_fits,
        bounded: false,
    })
}

/// Lower bound `max(w, 1−w)` applied to a pointwise value.
pub fn bound_value(lambda: f64, w: f64) -> f64 {
    if w <= 0.0 || w >= 1.0 {
        1.0
    } else {
        lambda.max(w.max(1.0 - w))
    }
}

/// Impose the theoretical constraints on a grid in place: pointwise
/// maximum with `max(w, 1−w)` and exact endpoints `λ(0|·) = λ(1|·) = 1`.
/// Idempotent.
pub fn apply_bounds(grid: &mut AdfGrid) {
    let n = grid.n();
    for (ri, &w) in grid.rays.rays().to_vec().iter().enumerate() {
        for ti in 0..n {
            let v = &mut grid.values[ri * n + ti];
            *v = bound_value(*v, w);
        }
    }
    grid.bounded = true;
}

/// Tail dependence coefficient from the ADF at the diagonal ray:
/// `η = 1/(2λ(1/2))`.
pub fn eta_from_adf(lambda_at_half: f64) -> Result<f64> {
    if !(lambda_at_half > 0.0) {
        return Err(Error::invalid("λ(1/2) must be positive"));
    }
    Ok(1.0 / (2.0 * lambda_at_half))
}

#[cfg(test)]
mod tests {
    use super::*;
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

    #[test]
    fn min_projection_values() {
        assert_eq!(min_projection(2.0, 3.0, 0.4), 5.0);
        assert_eq!(min_projection(2.0, 3.0, 0.0), 3.0);
        assert_eq!(min_projection(2.0, 3.0, 1.0), 2.0);
        assert_eq!(min_projection(1.0, 1.0, 0.5), 2.0);
    }

    #[test]
    fn ray_grid_default_is_101_point() {
        let g = RayGrid::default();
        assert_eq!(g.len(), 101);
        assert_eq!(g.rays()[0], 0.0);
        assert_eq!(g.rays()[100], 1.0);
        assert!((g.rays()[37] - 0.37).abs() < 1e-15);
        assert!(RayGrid::new(vec![0.1, 0.5, 1.0]).is_err());
        assert!(RayGrid::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
    }

    #[test]
    fn standard_schedule_matches_study_design() {
        let s = QuantileSchedule::standard();
        assert_eq!(s.len(), 30);
        assert!((s.pairs()[0].0 - 0.9).abs() < 1e-15);
        assert!((s.pairs()[29].0 - 0.95).abs() < 1e-15);
        for &(q1, q2) in s.pairs() {
            assert!((q2 - q1 - 0.04).abs() < 1e-12);
        }
    }

    #[test]
    fn pointwise_independence_gives_unit_rate() {
        // stationary Exp(1) min-projection at w = 0.5 has rate exactly 1
        let s = independent_series(10_000, 4);
        let res =
            lambda_qr_pointwise(&s, 0.5, (0.9, 0.94), &BasisSpec::poly(3)).unwrap();
        let mean = res.values.iter().sum::<f64>() / res.values.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean λ̂ = {mean}");
        assert!(!res.floored.iter().any(|&f| f));
    }

    #[test]
    fn pointwise_rate_two() {
        // x = y = e/4 with e ~ Exp(1): K_{1/2} = e/2 has rate exactly 2
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 10_000;
        let e: Vec<f64> = (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                -(-u).ln_1p()
            })
            .collect();
        let x: Vec<f64> = e.iter().map(|v| v / 4.0).collect();
        let s = ExpSeries::new((1..=n as u32).collect(), None, x.clone(), x).unwrap();
        let res = lambda_qr_pointwise(&s, 0.5, (0.9, 0.94), &BasisSpec::poly(1)).unwrap();
        let mean = res.values.iter().sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 0.1, "mean λ̂ = {mean}");
    }

    #[test]
    fn floored_spacing_is_flagged() {
        // constant K forces zero spacing → floor and flag
        let n = 600;
        let x = vec![1.0; n];
        let y = vec![1.0; n];
        let s = ExpSeries::new((1..=n as u32).collect(), None, x, y).unwrap();
        let res = lambda_qr_pointwise(&s, 0.5, (0.9, 0.94), &BasisSpec::constant()).unwrap();
        assert!(res.floored.iter().all(|&f| f));
        let expect = ((1.0 - 0.9) / (1.0 - 0.94f64)).ln() / V_FLOOR;
        assert!((res.values[0] - expect).abs() < 1e-6 * expect);
    }

    #[test]
    fn average_of_single_pair_is_pointwise() {
        let s = independent_series(2_000, 3);
        let basis = BasisSpec::poly(1);
        let grid = lambda_qr_average(
            &s,
            &RayGrid::with_step(5),
            &QuantileSchedule::single(0.9, 0.94).unwrap(),
            &basis,
        )
        .unwrap();
        let pw = lambda_qr_pointwise(&s, 0.5, (0.9, 0.94), &basis).unwrap();
        let ridx = grid.rays.nearest(0.5);
        for i in (0..s.len()).step_by(113) {
            assert!((grid.value(ridx, i) - pw.values[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn average_is_mean_of_stored_pair_estimates() {
        let s = independent_series(1_500, 4);
        let basis = BasisSpec::poly(1);
        let schedule =
            QuantileSchedule::new(vec![(0.9, 0.94), (0.92, 0.96), (0.94, 0.98)]).unwrap();
        let grid = lambda_qr_average(&s, &RayGrid::with_step(3), &schedule, &basis).unwrap();
        let per_pair = lambda_qr_pairs(&s, 0.5, &schedule, &basis).unwrap();
        assert_eq!(per_pair.len(), schedule.len());
        let ridx = 1; // w = 0.5
        for i in 0..s.len() {
            let mut acc = 0.0;
            for pw in &per_pair {
                acc += pw.values[i];
            }
            let mean = acc / schedule.len() as f64;
            assert!(
                (grid.value(ridx, i) - mean).abs() < 1e-12,
                "cell {i}: {} vs {}",
                grid.value(ridx, i),
                mean
            );
        }
    }

    #[test]
    fn bounds_pin_endpoints_and_floor() {
        assert_eq!(bound_value(0.3, 0.5), 0.5);
        assert_eq!(bound_value(0.9, 0.5), 0.9);
        assert_eq!(bound_value(0.2, 0.0), 1.0);
        let s = independent_series(800, 5);
        let mut grid = lambda_qr_average(
            &s,
            &RayGrid::with_step(11),
            &QuantileSchedule::single(0.9, 0.94).unwrap(),
            &BasisSpec::poly(1),
        )
        .unwrap();
        apply_bounds(&mut grid);
        assert!(grid.bounded);
        let n = grid.n();
        for (ri, &w) in grid.rays.rays().iter().enumerate() {
            for ti in (0..n).step_by(37) {
                let v = grid.value(ri, ti);
                assert!(v >= w.max(1.0 - w) - 1e-15);
                if w == 0.0 || w == 1.0 {
                    assert_eq!(v, 1.0);
                }
            }
        }
        // idempotent
        let before = grid.values.clone();
        apply_bounds(&mut grid);
        assert_eq!(before, grid.values);
    }

    #[test]
    fn eta_mapping() {
        assert!((eta_from_adf(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((eta_from_adf(1.0).unwrap() - 0.5).abs() < 1e-15);
        let lam = 2f64.powf(-0.5);
        assert!((eta_from_adf(lam).unwrap() - 2f64.powf(-0.5)).abs() < 1e-12);
        assert!(eta_from_adf(0.0).is_err());
    }
}
