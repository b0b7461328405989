//! Backprop vs. central finite differences.

use rand::Rng;

use crate::dataset::Dataset;
use crate::seed::{derive_seed, stream};

use super::{backprop_grads, mse_loss, Network, NetworkArch};

pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GradcheckReport {
    /// `max_k |backprop_k - fd_k| / max(1, |fd_k|)`.
    pub max_rel_error: f64,
    pub worst_param: usize,
    pub param_count: usize,
    pub n_samples: usize,
}

/// Checks a freshly initialized network of shape `arch` on `n_samples`
/// random points `x ~ U[0,1]^d`, `y ~ U(-1,1)`.
pub fn gradcheck(arch: NetworkArch, seed: u64, n_samples: usize) -> GradcheckReport {
    let net = Network::init(arch, derive_seed(seed, "gradcheck/init"));
    let mut rng = stream(seed, "gradcheck/data");
    let d = arch.input_dim();
    let xs: Vec<f64> = (0..n_samples * d).map(|_| rng.random()).collect();
    let ys: Vec<f64> = (0..n_samples).map(|_| rng.random_range(-1.0..1.0)).collect();
    let data = Dataset::new(d, xs, ys).expect("gradcheck needs n_samples >= 1");
    gradcheck_network(&net, &data, DEFAULT_STEP)
}

pub fn gradcheck_network(net: &Network, data: &Dataset, step: f64) -> GradcheckReport {
    let (_, grads) = backprop_grads(net, data).expect("data dimension matches network");
    let mut probe = net.clone();
    let mut worst = (0.0f64, 0usize);
    for k in 0..net.params().len() {
        let orig = net.params()[k];
        probe.params_mut()[k] = orig + step;
        let up = mse_loss(&probe, data).expect("dims checked");
        probe.params_mut()[k] = orig - step;
        let down = mse_loss(&probe, data).expect("dims checked");
        probe.params_mut()[k] = orig;
        let fd = (up - down) / (2.0 * step);
        let err = (grads.values()[k] - fd).abs() / fd.abs().max(1.0);
        if err > worst.0 {
            worst = (err, k);
        }
    }
    GradcheckReport {
        max_rel_error: worst.0,
        worst_param: worst.1,
        param_count: net.params().len(),
        n_samples: data.len(),
    }
}
