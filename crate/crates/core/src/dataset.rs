//! Row-major regression samples `(x_i, y_i)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Dataset {
    /// `xs` is row-major with `ys.len()` rows of `dim` columns.
    pub fn new(dim: usize, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("covariate dimension must be >= 1".into()));
        }
        if ys.is_empty() {
            return Err(Error::EmptyInput("dataset has no rows"));
        }
        if xs.len() != dim * ys.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * ys.len(),
                got: xs.len(),
            });
        }
        if !ys.iter().all(|y| y.is_finite()) || !xs.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidConfig("dataset contains non-finite values".into()));
        }
        Ok(Self { dim, xs, ys })
    }

    pub fn from_rows(rows: &[Vec<f64>], ys: Vec<f64>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Self::new(dim, rows.concat(), ys)
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.ys[i]
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.xs.chunks_exact(self.dim)
    }

    /// Rows selected by `indices`, in the given order. Indices may repeat.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut xs = Vec::with_capacity(indices.len() * self.dim);
        let mut ys = Vec::with_capacity(indices.len());
        for &i in indices {
            xs.extend_from_slice(self.x(i));
            ys.push(self.ys[i]);
        }
        Self {
            dim: self.dim,
            xs,
            ys,
        }
    }

    /// Same covariates, new responses.
    pub fn with_responses(&self, ys: Vec<f64>) -> Result<Self> {
        Self::new(self.dim, self.xs.clone(), ys)
    }

    pub fn max_abs_response(&self) -> f64 {
        self.ys.iter().fold(0.0, |m, y| m.max(y.abs()))
    }

    /// Whether every covariate lies in the unit cube.
    pub fn in_unit_cube(&self) -> bool {
        self.xs.iter().all(|&x| (0.0..=1.0).contains(&x))
    }
}

/// A closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn centered(center: f64, half_width: f64) -> Self {
        Self {
            lower: center - half_width,
            upper: center + half_width,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}
