//! Derivative-free optimizers: Nelder–Mead simplex (with in-budget restarts)
//! and golden-section line search. Objectives may return `f64::INFINITY` to
//! mark infeasible points.

/// Result of a minimization run.
#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct NelderMead {
    pub max_evals: usize,
    pub ftol: f64,
    pub init_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            max_evals: 50_000,
            ftol: 1e-10,
            init_step: 0.25,
        }
    }
}

impl NelderMead {
    /// Minimize `f` from `x0`. After each simplex convergence the search
    /// restarts from the incumbent with a shrunken initial step until the
    /// restart no longer improves or the budget is spent.
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64]) -> OptimResult {
        let mut evals = 0usize;
        let mut best_x = x0.to_vec();
        let mut best_f = f(x0);
        evals += 1;
        let mut step = self.init_step;
        let mut converged = false;
        for _round in 0..6 {
            let r = self.run_simplex(&mut f, &best_x, step, self.max_evals - evals, &mut evals);
            let improved = r.fx < best_f - self.ftol * (1.0 + best_f.abs());
            if r.fx < best_f {
                best_f = r.fx;
                best_x = r.x;
            }
            converged = r.converged;
            if evals >= self.max_evals || (!improved && r.converged) {
                break;
            }
            step *= 0.3;
        }
        OptimResult {
            x: best_x,
            fx: best_f,
            evals,
            converged,
        }
    }

    fn run_simplex<F: FnMut(&[f64]) -> f64>(
        &self,
        f: &mut F,
        x0: &[f64],
        step: f64,
        budget: usize,
        evals: &mut usize,
    ) -> OptimResult {
        let n = x0.len();
        let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        let mut fs: Vec<f64> = Vec::with_capacity(n + 1);
        pts.push(x0.to_vec());
        fs.push(f(x0));
        *evals += 1;
        for i in 0..n {
            let mut p = x0.to_vec();
            let h = if p[i].abs() > 1.0 { step * p[i].abs() } else { step };
            p[i] += h;
            fs.push(f(&p));
            *evals += 1;
            pts.push(p);
        }
        let mut used = n + 1;
        let mut converged = false;
        loop {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]));
            let (lo, hi, hi2) = (order[0], order[n], order[n - 1]);
            let spread = fs[hi] - fs[lo];
            if spread.is_finite() && spread <= self.ftol * (1.0 + fs[lo].abs()) {
                converged = true;
                break;
            }
            if used >= budget {
                break;
            }
            let mut centroid = vec![0.0; n];
            for (k, p) in pts.iter().enumerate() {
                if k == hi {
                    continue;
                }
                for j in 0..n {
                    centroid[j] += p[j];
                }
            }
            for c in centroid.iter_mut() {
                *c /= n as f64;
            }
            let blend = |a: f64| -> Vec<f64> {
                (0..n)
                    .map(|j| centroid[j] + a * (pts[hi][j] - centroid[j]))
                    .collect()
            };
            let refl = blend(-1.0);
            let f_refl = f(&refl);
            used += 1;
            *evals += 1;
            if f_refl < fs[lo] {
                let exp = blend(-2.0);
                let f_exp = f(&exp);
                used += 1;
                *evals += 1;
                if f_exp < f_refl {
                    pts[hi] = exp;
                    fs[hi] = f_exp;
                } else {
                    pts[hi] = refl;
                    fs[hi] = f_refl;
                }
            } else if f_refl < fs[hi2] {
                pts[hi] = refl;
                fs[hi] = f_refl;
            } else {
                let contr = if f_refl < fs[hi] { blend(-0.5) } else { blend(0.5) };
                let f_contr = f(&contr);
                used += 1;
                *evals += 1;
                if f_contr < fs[hi].min(f_refl) {
                    pts[hi] = contr;
                    fs[hi] = f_contr;
                } else {
                    // shrink toward the best vertex
                    let lo_pt = pts[lo].clone();
                    for k in 0..=n {
                        if k == lo {
                            continue;
                        }
                        for j in 0..n {
                            pts[k][j] = lo_pt[j] + 0.5 * (pts[k][j] - lo_pt[j]);
                        }
                        fs[k] = f(&pts[k]);
                        used += 1;
                        *evals += 1;
                    }
                }
            }
        }
        let mut lo = 0;
        for k in 1..=n {
            if fs[k] < fs[lo] {
                lo = k;
            }
        }
        OptimResult {
            x: pts[lo].clone(),
            fx: fs[lo],
            evals: used,
            converged,
        }
    }
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
