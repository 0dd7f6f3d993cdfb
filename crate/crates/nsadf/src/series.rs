//! Paired bivariate series with a time covariate and optional within-year
//! day index.

use crate::error::{Error, Result};

/// Raw-scale bivariate series (arbitrary real values).
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub t: Vec<u32>,
    pub day: Option<Vec<u32>>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl RawSeries {
    pub fn new(t: Vec<u32>, day: Option<Vec<u32>>, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        validate_common(&t, day.as_deref(), &x, &y)?;
        Ok(RawSeries { t, day, x, y })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Series on standard exponential margins: both coordinates nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSeries {
    t: Vec<u32>,
    day: Option<Vec<u32>>,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl ExpSeries {
    pub fn new(t: Vec<u32>, day: Option<Vec<u32>>, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        validate_common(&t, day.as_deref(), &x, &y)?;
        if x.iter().chain(y.iter()).any(|&v| v < 0.0) {
            return Err(Error::invalid(
                "exponential-margin series must be nonnegative",
            ));
        }
        Ok(ExpSeries { t, day, x, y })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t(&self) -> &[u32] {
        &self.t
    }

    pub fn day(&self) -> Option<&[u32]> {
        self.day.as_deref()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn day_at(&self, i: usize) -> Option<u32> {
        self.day.as_ref().map(|d| d[i])
    }

    pub fn into_parts(self) -> (Vec<u32>, Option<Vec<u32>>, Vec<f64>, Vec<f64>) {
        (self.t, self.day, self.x, self.y)
    }
}

fn validate_common(t: &[u32], day: Option<&[u32]>, x: &[f64], y: &[f64]) -> Result<()> {
    if t.is_empty() {
        return Err(Error::invalid("empty series"));
    }
    if t.len() != x.len() || t.len() != y.len() {
        return Err(Error::invalid("series column lengths differ"));
    }
    if let Some(d) = day {
        if d.len() != t.len() {
            return Err(Error::invalid("day column length differs"));
        }
    }
    if t.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("time indices must be strictly increasing"));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("series values must be finite"));
    }
    Ok(())
}
