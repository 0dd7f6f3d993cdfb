//! Small dense linear algebra helpers for the low-dimensional (p ≤ ~10)
//! regression problems in this crate.

use crate::error::{Error, Result};

/// Solve `A x = b` for a small square system by LU with partial pivoting.
/// `a` is row-major `n × n` and is consumed as scratch.
pub(crate) fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for r in (col + 1)..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-300 {
            return Err(Error::SingularDesign(format!(
                "pivot {best:.3e} at column {col}"
            )));
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in (col + 1)..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[r * n + k] -= f * a[col * n + k];
            }
            b[r] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in (col + 1)..n {
            s -= a[col * n + k] * b[k];
        }
        b[col] = s / a[col * n + col];
    }
    Ok(b)
}

/// Trace of `(A + λ D)^{-1} A` where `D = diag(d)`, used for effective
/// degrees of freedom in ridge fits. `a` is row-major symmetric `n × n`.
pub(crate) fn ridge_edf(a: &[f64], d: &[f64], lambda: f64) -> Result<f64> {
    let n = d.len();
    let mut edf = 0.0;
    for j in 0..n {
        let mut reg = a.to_vec();
        for i in 0..n {
            reg[i * n + i] += lambda * d[i];
        }
        let col: Vec<f64> = (0..n).map(|i| a[i * n + j]).collect();
        let x = solve(reg, col)?;
        edf += x[j];
    }
    Ok(edf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_identity() {
        let a = vec![1.0, 0.0, 0.0, 1.0];
        let x = solve(a, vec![3.0, -2.0]).unwrap();
        assert_eq!(x, vec![3.0, -2.0]);
    }

    #[test]
    fn solve_3x3() {
        // A = [[2,1,0],[1,3,1],[0,1,2]], x = [1,-1,2] -> b = [1, 0, 3]
        let a = vec![2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0];
        let x = solve(a, vec![1.0, 0.0, 3.0]).unwrap();
        for (got, want) in x.iter().zip([1.0, -1.0, 2.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn solve_rejects_singular() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(solve(a, vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn edf_unpenalized_is_dimension() {
        let a = vec![4.0, 1.0, 1.0, 3.0];
        let edf = ridge_edf(&a, &[0.0, 1.0], 0.0).unwrap();
        assert!((edf - 2.0).abs() < 1e-12);
    }
}
