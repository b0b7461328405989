use crate::error::{Error, Result};

use super::{Gradients, Network};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moment estimates for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step_count: u64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

impl AdamState {
    pub fn new(param_count: usize, config: AdamConfig) -> Self {
        Self {
            config,
            step_count: 0,
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::ShapeMismatch(format!(
                "adam state holds {} parameters, got {} params and {} gradients",
                self.first_moment.len(),
                params.len(),
                grads.len()
            )));
        }
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        self.step_count += 1;
        let t = self.step_count as i32;
        let correct1 = 1.0 - beta1.powi(t);
        let correct2 = 1.0 - beta2.powi(t);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(self.second_moment.iter_mut()))
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / correct1;
            let v_hat = *v / correct2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }
}

/// Functional form of [`AdamState::update`].
pub fn adam_step(net: &Network, grads: &Gradients, state: &AdamState) -> Result<(Network, AdamState)> {
    if grads.arch() != net.arch() {
        return Err(Error::ShapeMismatch("gradient arch differs from network arch".into()));
    }
    let mut net = net.clone();
    let mut state = state.clone();
    state.update(net.params_mut(), grads.values())?;
    Ok((net, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relu_net::NetworkArch;

    #[test]
    fn zero_gradient_from_fresh_state_is_identity() {
        let arch = NetworkArch::new(2, 2, 4).unwrap();
        let net = Network::init(arch, 1);
        let state = AdamState::new(arch.param_count(), AdamConfig::default());
        let (next, state) = adam_step(&net, &Gradients::zeros(arch), &state).unwrap();
        assert_eq!(next, net);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut state = AdamState::new(1, AdamConfig::default());
        for g in [3.7, -0.02] {
            let mut state = state.clone();
            let mut p = [0.5];
            state.update(&mut p, &[g]).unwrap();
            // m_hat = g, v_hat = g^2 after one step
            let want = 0.5 - 1e-3 * g / (g.abs() + 1e-8);
            assert!((p[0] - want).abs() < 1e-15);
            assert!(((p[0] - 0.5).abs() - 1e-3).abs() < 1e-8);
        }
        let mut p = [0.0];
        state.update(&mut p, &[1.0]).unwrap();
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn identical_inputs_identical_outputs() {
        let arch = NetworkArch::new(1, 1, 3).unwrap();
        let net = Network::init(arch, 9);
        let mut g = Gradients::zeros(arch);
        g.values.iter_mut().enumerate().for_each(|(i, v)| *v = i as f64 - 2.5);
        let state = AdamState::new(arch.param_count(), AdamConfig::default());
        assert_eq!(
            adam_step(&net, &g, &state).unwrap(),
            adam_step(&net, &g, &state).unwrap()
        );
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut state = AdamState::new(3, AdamConfig::default());
        assert!(state.update(&mut [0.0; 2], &[0.0; 2]).is_err());
    }
}
