//! Covariate bases: intercept + polynomial time terms + harmonic day terms.
//!
//! Raw basis columns can be badly conditioned (t³ reaches 1e12 for t = 10⁴),
//! so fitters standardize non-intercept columns internally and back-transform
//! coefficients to the raw basis for storage; serialized models always carry
//! raw-basis coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declarative description of a covariate basis.
///
/// Columns, in order: intercept, `t, t², …` up to `poly_degree`, then
/// `sin(2πk·d/period), cos(2πk·d/period)` for `k = 1..=harmonics`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub poly_degree: u32,
    pub harmonics: u32,
    pub period: f64,
}

impl BasisSpec {
    pub fn constant() -> Self {
        BasisSpec {
            poly_degree: 0,
            harmonics: 0,
            period: 90.0,
        }
    }

    /// Intercept + polynomial terms `t, …, t^degree`.
    pub fn poly(degree: u32) -> Self {
        BasisSpec {
            poly_degree: degree,
            harmonics: 0,
            period: 90.0,
        }
    }

    /// Intercept + polynomial + `harmonics` sin/cos pairs over `period`.
    pub fn with_harmonics(degree: u32, harmonics: u32, period: f64) -> Self {
        BasisSpec {
            poly_degree: degree,
            harmonics,
            period,
        }
    }

    pub fn ncols(&self) -> usize {
        1 + self.poly_degree as usize + 2 * self.harmonics as usize
    }

    pub fn needs_day(&self) -> bool {
        self.harmonics > 0
    }

    /// Evaluate one basis row.
    pub fn row(&self, t: f64, day: Option<f64>) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.ncols());
        out.push(1.0);
        let mut pw = 1.0;
        for _ in 0..self.poly_degree {
            pw *= t;
            out.push(pw);
        }
        if self.harmonics > 0 {
            let d = day.ok_or_else(|| {
                Error::invalid("basis has harmonic terms but no day covariate was supplied")
            })?;
            for k in 1..=self.harmonics {
                let ang = 2.0 * std::f64::consts::PI * k as f64 * d / self.period;
                out.push(ang.sin());
                out.push(ang.cos());
            }
        }
        Ok(out)
    }

    /// Build the full design matrix for a series of time indices.
    pub fn design(&self, t: &[u32], day: Option<&[u32]>) -> Result<Design> {
        let p = self.ncols();
        if p == 0 {
            return Err(Error::invalid("basis has zero columns"));
        }
        let mut data = Vec::with_capacity(t.len() * p);
        for (i, &ti) in t.iter().enumerate() {
            let d = day.map(|d| d[i] as f64);
            data.extend_from_slice(&self.row(ti as f64, d)?);
        }
        Ok(Design {
            data,
            nrows: t.len(),
            ncols: p,
        })
    }
}

/// Row-major dense design matrix with an intercept in column 0.
#[derive(Debug, Clone)]
pub struct Design {
    data: Vec<f64>,
    nrows: usize,
    ncols: usize,
}

impl Design {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nrows = rows.len();
        if nrows == 0 {
            return Err(Error::invalid("empty design"));
        }
        let ncols = rows[0].len();
        if ncols == 0 {
            return Err(Error::invalid("zero-length basis row"));
        }
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in &rows {
            if r.len() != ncols {
                return Err(Error::invalid("ragged design rows"));
            }
            data.extend_from_slice(r);
        }
        Ok(Design { data, nrows, ncols })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn has_intercept(&self) -> bool {
        (0..self.nrows).all(|i| self.row(i)[0] == 1.0)
    }

    /// Standardize non-intercept columns to zero mean / unit sd.
    /// Constant non-intercept columns are reported as singular.
    pub fn standardize(&self) -> Result<(Design, Standardizer)> {
        let n = self.nrows as f64;
        let p = self.ncols;
        let mut means = vec![0.0; p];
        let mut sds = vec![1.0; p];
        for j in 1..p {
            let mut m = 0.0;
            for i in 0..self.nrows {
                m += self.row(i)[j];
            }
            m /= n;
            let mut v = 0.0;
            for i in 0..self.nrows {
                let d = self.row(i)[j] - m;
                v += d * d;
            }
            let sd = (v / n).sqrt();
            if sd < 1e-12 * (1.0 + m.abs()) {
                return Err(Error::SingularDesign(format!(
                    "column {j} is constant after centering"
                )));
            }
            means[j] = m;
            sds[j] = sd;
        }
        let mut data = self.data.clone();
        for i in 0..self.nrows {
            for j in 1..p {
                data[i * p + j] = (data[i * p + j] - means[j]) / sds[j];
            }
        }
        Ok((
            Design {
                data,
                nrows: self.nrows,
                ncols: p,
            },
            Standardizer { means, sds },
        ))
    }
}

/// Column means/sds used to map coefficients between the standardized and
/// raw bases. Column 0 (intercept) is never rescaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardizer {
    /// Coefficients fit on the standardized design, expressed in the raw
    /// basis: `c_j = c'_j / s_j`, `c_0 = c'_0 − Σ c'_j m_j / s_j`.
    pub fn to_raw(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = coeffs.to_vec();
        for j in 1..coeffs.len() {
            out[j] = coeffs[j] / self.sds[j];
            out[0] -= coeffs[j] * self.means[j] / self.sds[j];
        }
        out
    }

    /// Inverse of [`Standardizer::to_raw`].
    pub fn to_standardized(&self, raw: &[f64]) -> Vec<f64> {
        let mut out = raw.to_vec();
        for j in 1..raw.len() {
            out[j] = raw[j] * self.sds[j];
            out[0] += raw[j] * self.means[j];
        }
        out
    }

    pub fn standardize_row(&self, row: &[f64]) -> Vec<f64> {
        let mut out = row.to_vec();
        for j in 1..row.len() {
            out[j] = (row[j] - self.means[j]) / self.sds[j];
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_layout() {
        let b = BasisSpec::with_harmonics(2, 1, 90.0);
        assert_eq!(b.ncols(), 5);
        let r = b.row(3.0, Some(45.0)).unwrap();
        assert_eq!(r[0], 1.0);
        assert_eq!(r[1], 3.0);
        assert_eq!(r[2], 9.0);
        assert!((r[3] - (std::f64::consts::PI).sin()).abs() < 1e-15);
        assert!((r[4] - (std::f64::consts::PI).cos()).abs() < 1e-15);
    }

    #[test]
    fn harmonics_require_day() {
        let b = BasisSpec::with_harmonics(0, 1, 90.0);
        assert!(b.row(1.0, None).is_err());
    }

    #[test]
    fn standardize_round_trips_coefficients() {
        let b = BasisSpec::poly(3);
        let t: Vec<u32> = (1..=500).collect();
        let d = b.design(&t, None).unwrap();
        let (ds, s) = d.standardize().unwrap();
        let raw = vec![2.0, 0.003, -1e-5, 2e-8];
        let std = s.to_standardized(&raw);
        let back = s.to_raw(&std);
        for (a, b) in raw.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        }
        // predictions agree between bases
        for i in [0usize, 123, 499] {
            let p_raw = dot(d.row(i), &raw);
            let p_std = dot(ds.row(i), &std);
            assert!((p_raw - p_std).abs() < 1e-9 * (1.0 + p_raw.abs()));
        }
    }

    #[test]
    fn constant_column_is_singular() {
        let d = Design::from_rows(vec![vec![1.0, 5.0], vec![1.0, 5.0], vec![1.0, 5.0]]).unwrap();
        assert!(matches!(
            d.standardize(),
            Err(Error::SingularDesign(_))
        ));
    }
}
