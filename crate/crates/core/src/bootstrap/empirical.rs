use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use crate::variance::{FittedMean, FittedVariance};

/// Floor applied to `|g_hat(x)|` before taking square roots in denominators.
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Slack for `ceil(level * m)`, so that products that are integral in exact
/// arithmetic are not pushed to the next order statistic by rounding.
const LEVEL_SLACK: f64 = 1e-9;

/// 1-based index `ceil(level * m)` clamped to `[1, m]`.
pub fn order_statistic_index(m: usize, level: f64) -> usize {
    let k = (level * m as f64 - LEVEL_SLACK).ceil();
    (k.max(1.0) as usize).min(m)
}

/// The `level`-quantile of `values` as an order statistic: sort ascending
/// and take the `ceil(level * m)`-th smallest (1-based, clamped to `[1, m]`).
pub fn order_statistic(values: &[f64], level: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("quantile of an empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted_order_statistic(&sorted, level))
}

/// [`order_statistic`] on data already sorted ascending.
pub fn sorted_order_statistic(sorted: &[f64], level: f64) -> f64 {
    sorted[order_statistic_index(sorted.len(), level) - 1]
}

/// Standardized residual atoms; sampling draws uniformly with replacement.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    atoms: Vec<f64>,
    degenerate: bool,
}

impl EmpiricalDistribution {
    /// Centers and scales `raw` to mean 0 and variance 1 (divisor `m`).
    pub fn standardize(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyInput("no residuals to standardize"));
        }
        let m = raw.len() as f64;
        let mean = raw.iter().sum::<f64>() / m;
        let var = raw.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / m;
        let sd = var.sqrt();
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::DegenerateDistribution(
                "standardized residuals have zero or non-finite spread",
            ));
        }
        Ok(Self {
            atoms: raw.iter().map(|e| (e - mean) / sd).collect(),
            degenerate: false,
        })
    }

    /// Atoms taken as given, without standardization.
    pub fn from_atoms(atoms: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyInput("empirical distribution needs atoms"));
        }
        Ok(Self {
            atoms,
            degenerate: false,
        })
    }

    /// Point mass at zero, used when the residuals carry no spread.
    pub fn degenerate() -> Self {
        Self {
            atoms: vec![0.0],
            degenerate: true,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().sum::<f64>() / self.atoms.len() as f64
    }

    /// Population variance (divisor `m`).
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms.iter().map(|a| (a - m).powi(2)).sum::<f64>() / self.atoms.len() as f64
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.atoms[rng.random_range(0..self.atoms.len())]
    }

    /// `count` i.i.d. draws.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        (0..count).map(|_| self.draw(&mut rng)).collect()
    }

    /// Empirical CDF `#{atoms <= t} / m`.
    pub fn cdf(&self, t: f64) -> f64 {
        self.atoms.iter().filter(|&&a| a <= t).count() as f64 / self.atoms.len() as f64
    }

    pub fn quantile(&self, level: f64) -> f64 {
        order_statistic(&self.atoms, level).expect("atoms are nonempty")
    }
}

/// `(y_i - f_A(x_i)) / sqrt(max(|g_A(x_i)|, floor))` on `block`.
pub fn raw_standardized_residuals(
    mean: &FittedMean,
    var: &FittedVariance,
    block: &Dataset,
) -> Result<Vec<f64>> {
    let f = mean.predict_all(block)?;
    let g = var.predict_all(block)?;
    Ok(block
        .ys()
        .iter()
        .zip(f.iter().zip(&g))
        .map(|(y, (f, g))| (y - f) / g.abs().max(VARIANCE_FLOOR).sqrt())
        .collect())
}

/// The empirical distribution of standardized residuals on `block`.
pub fn standardized_residuals(
    mean: &FittedMean,
    var: &FittedVariance,
    block: &Dataset,
) -> Result<EmpiricalDistribution> {
    EmpiricalDistribution::standardize(&raw_standardized_residuals(mean, var, block)?)
}

/// Free-function form of [`EmpiricalDistribution::sample`].
pub fn sample_noise(dist: &EmpiricalDistribution, count: usize, seed: u64) -> Vec<f64> {
    dist.sample(count, seed)
}
