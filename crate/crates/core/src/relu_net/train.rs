use rand::seq::SliceRandom;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

use super::{mse_loss, AdamConfig, AdamState, Network, Workspace};

/// Mini-batch Adam settings for fitting a network by least squares.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Values `>= n` mean full-batch gradient steps.
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Drives the per-epoch shuffle.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_epochs(self, epochs: usize) -> Self {
        Self { epochs, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Network,
    /// Full-data mean squared error after the last epoch.
    pub final_loss: f64,
}

/// Runs `cfg.epochs` epochs of mini-batch Adam on the mean squared error.
///
/// Rows are reshuffled each epoch from a stream seeded by `cfg.seed`, so
/// identical inputs give bitwise-identical parameters.
pub fn train(net: &Network, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut net = net.clone();
    let n = data.len();
    let arch = net.arch();
    if data.dim() != arch.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: arch.input_dim(),
            got: data.dim(),
        });
    }

    let mut adam = AdamState::new(
        arch.param_count(),
        AdamConfig {
            learning_rate: cfg.learning_rate,
            ..AdamConfig::default()
        },
    );
    let mut rng = rng_from_seed(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let batch = cfg.batch_size.min(n);
    let mut grad = vec![0.0; arch.param_count()];
    let mut ws = Workspace::new(&arch);

    for epoch in 0..cfg.epochs {
        if batch < n {
            order.shuffle(&mut rng);
        }
        let mut epoch_sse = 0.0;
        for chunk in order.chunks(batch) {
            let loss = net.loss_and_grad_on(data, chunk.iter().copied(), &mut ws, &mut grad);
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            epoch_sse += loss * chunk.len() as f64;
            adam.update(net.params_mut(), &grad)?;
        }
        if !epoch_sse.is_finite() || !net.params().iter().all(|p| p.is_finite()) {
            return Err(Error::TrainingDiverged { epoch });
        }
    }

    let final_loss = mse_loss(&net, data)?;
    if !final_loss.is_finite() {
        return Err(Error::TrainingDiverged { epoch: cfg.epochs });
    }
    Ok(TrainOutcome {
        network: net,
        final_loss,
    })
}
