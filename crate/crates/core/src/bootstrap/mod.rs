//! Residual-bootstrap confidence intervals for the conditional mean.
//!
//! The sample is split into four blocks. Block 1 fits the mean, block 2
//! the variance and the standardized residual distribution, block 3 hosts
//! `B + B~` refits on simulated responses, and block 4 scores the first
//! `B` refits to calibrate the half-width. The interval center averages
//! the last `B~` refits.
//!
//! ```no_run
//! use hetvar::bootstrap::{build_interval, CiConfig};
//! use hetvar::scenarios::ScenarioSpec;
//!
//! let spec = ScenarioSpec::new(1)?;
//! let sample = spec.sample_dataset(2000, 7)?;
//! let mut cfg = CiConfig::experiment_default(spec.dim())?;
//! cfg.b = 40;
//! cfg.b_tilde = 20;
//! let ci = build_interval(&cfg, &sample.dataset)?;
//! let iv = ci.interval(&[0.3, 0.6])?;
//! println!("[{}, {}]", iv.lower, iv.upper);
//! # Ok::<(), hetvar::Error>(())
//! ```

mod calibration;
mod competitors;
mod empirical;
mod pipeline;
mod split;

pub use calibration::{
    compute_a0, compute_a_alpha, compute_b_alpha, deviation_terms, empirical_b_factor, half_width,
    quantile_a1, A0Variant, BVariant, CalibrationContext,
};
pub use competitors::{naive_bootstrap_interval, naive_interval, standard_bootstrap_interval};
pub use empirical::{
    order_statistic, order_statistic_index, raw_standardized_residuals, sample_noise,
    sorted_order_statistic, standardized_residuals, EmpiricalDistribution, VARIANCE_FLOOR,
};
pub use pipeline::{
    assemble, build_interval, calibrate, fit_replicates, make_bootstrap_responses, prepare, BaseFit,
    CenterEvaluation, CiDiagnostics, CiRecord, CiResult, Replicates,
};
pub use split::{split_indices, SplitIndices, MIN_SPLIT_SIZE};

use crate::error::{Error, Result};
use crate::relu_net::{NetworkArch, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CiConfig {
    pub alpha: f64,
    /// Replicates scored on block 4.
    pub b: usize,
    /// Replicates averaged into the center.
    pub b_tilde: usize,
    /// Clip bound for every mean and variance fit; `None` uses `max |y_i|`.
    pub a_n: Option<f64>,
    pub a0_variant: A0Variant,
    pub b_variant: BVariant,
    /// Power `s` of `ln n` in the theoretical correction terms.
    pub log_power: f64,
    pub mean_arch: NetworkArch,
    pub mean_train: TrainConfig,
    pub var_arch: NetworkArch,
    pub var_train: TrainConfig,
    /// Training settings for the refits on simulated responses.
    pub replicate_train: TrainConfig,
    /// Resample count of the standard (pairs) bootstrap.
    pub standard_resamples: usize,
    pub seed: u64,
}

impl CiConfig {
    /// Two-layer width-64 networks, `alpha = 0.1`, `B = 1500`, `B~ = 1000`.
    pub fn experiment_default(input_dim: usize) -> Result<Self> {
        let arch = NetworkArch::experiment_default(input_dim)?;
        Ok(Self {
            alpha: 0.1,
            b: 1500,
            b_tilde: 1000,
            a_n: None,
            a0_variant: A0Variant::Theoretical,
            b_variant: BVariant::Theoretical,
            log_power: 2.0,
            mean_arch: arch,
            mean_train: TrainConfig::default(),
            var_arch: arch,
            var_train: TrainConfig::default(),
            replicate_train: TrainConfig::default().with_epochs(50),
            standard_resamples: 2500,
            seed: 0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.b_tilde == 0 || self.b_tilde >= self.b {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= B~ < B, got B = {}, B~ = {}",
                self.b, self.b_tilde
            )));
        }
        if let Some(a) = self.a_n {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidConfig(format!("A_n must be positive, got {a}")));
            }
        }
        if !(self.log_power.is_finite()) {
            return Err(Error::InvalidConfig("log_power must be finite".into()));
        }
        if self.mean_arch.input_dim() != self.var_arch.input_dim() {
            return Err(Error::InvalidConfig("mean and variance networks disagree on input dimension".into()));
        }
        self.mean_train.validate()?;
        self.var_train.validate()?;
        self.replicate_train.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let cfg = CiConfig::experiment_default(2).unwrap();
        assert!(cfg.validate().is_ok());
        assert!(CiConfig { b_tilde: 1500, ..cfg }.validate().is_err());
        assert!(CiConfig { b_tilde: 0, ..cfg }.validate().is_err());
        assert!(CiConfig { alpha: 1.0, ..cfg }.validate().is_err());
        assert!(CiConfig { a_n: Some(0.0), ..cfg }.validate().is_err());
    }
}
