//! Dense ReLU feed-forward networks.
//!
//! A network in the class `F(L, nu)` maps `R^d -> R` through `L` hidden
//! layers of equal width `nu`, each an affine map followed by
//! `relu(t) = max(0, t)`, and a final affine read-out:
//!
//! ```text
//! h_1 = relu(W_1 x + b_1)                 W_1: nu x d
//! h_s = relu(W_s h_{s-1} + b_s)           W_s: nu x nu,  s = 2..L
//! f(x) = w_out . h_L + b_out              w_out: nu
//! ```
//!
//! All parameters live in one flat `Vec<f64>` laid out layer by layer
//! (row-major weights, then biases), ending with the read-out weights and
//! bias. Gradients and Adam moments share that layout.

mod adam;
mod format;
mod gradcheck;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use format::{read_network, write_network, FORMAT_HEADER};
pub use gradcheck::{gradcheck, gradcheck_network, GradcheckReport};
pub use train::{train, TrainConfig, TrainOutcome};

use rand_distr::{Distribution, Normal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Truncates `value` to `[-bound, bound]`.
#[inline]
pub fn clip(value: f64, bound: f64) -> f64 {
    debug_assert!(bound > 0.0);
    value.clamp(-bound, bound)
}

#[inline]
fn relu(t: f64) -> f64 {
    if t > 0.0 {
        t
    } else {
        0.0
    }
}

/// Depth and width of a dense network with scalar output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct NetworkArch {
    input_dim: usize,
    depth: usize,
    width: usize,
}

/// Which of the two theoretical depth/width scalings to use in
/// [`NetworkArch::theoretical`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchScaling {
    /// Depth `ceil(c3 log n)`, width `ceil(c4 max n^{K/(2(2p+K))})`.
    WideLogDepth,
    /// Depth `ceil(c3 max n^{K/(2(2p+K))} log n)`, width `ceil(c4)`.
    DeepConstantWidth,
}

impl NetworkArch {
    pub fn new(input_dim: usize, depth: usize, width: usize) -> Result<Self> {
        if input_dim == 0 || depth == 0 || width == 0 {
            return Err(Error::InvalidConfig(format!(
                "network arch needs input_dim, depth, width >= 1 (got {input_dim}, {depth}, {width})"
            )));
        }
        Ok(Self {
            input_dim,
            depth,
            width,
        })
    }

    /// Two hidden layers of 64 units, the architecture used in the experiments.
    pub fn experiment_default(input_dim: usize) -> Result<Self> {
        Self::new(input_dim, 2, 64)
    }

    /// Architecture from the theoretical rate-optimal scalings.
    ///
    /// `constraints` lists the `(smoothness p, input dimension K)` pairs of
    /// the hierarchical composition model; the exponent used is the maximum
    /// of `K / (2(2p + K))` over them.
    pub fn theoretical(
        input_dim: usize,
        n: usize,
        constraints: &[(f64, usize)],
        c3: f64,
        c4: f64,
        scaling: ArchScaling,
    ) -> Result<Self> {
        if constraints.is_empty() || n < 2 || c3 <= 0.0 || c4 <= 0.0 {
            return Err(Error::InvalidConfig(
                "theoretical arch needs n >= 2, positive constants and at least one (p, K)".into(),
            ));
        }
        let nf = n as f64;
        let growth = constraints
            .iter()
            .map(|&(p, k)| {
                let k = k as f64;
                nf.powf(k / (2.0 * (2.0 * p + k)))
            })
            .fold(f64::MIN, f64::max);
        let (depth, width) = match scaling {
            ArchScaling::WideLogDepth => ((c3 * nf.ln()).ceil(), (c4 * growth).ceil()),
            ArchScaling::DeepConstantWidth => ((c3 * growth * nf.ln()).ceil(), c4.ceil()),
        };
        Self::new(input_dim, depth as usize, width as usize)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn layer_in(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_dim
        } else {
            self.width
        }
    }

    /// Offset of hidden layer `layer`'s weight block (0-based layer index).
    fn layer_offset(&self, layer: usize) -> usize {
        if layer == 0 {
            0
        } else {
            let first = self.width * (self.input_dim + 1);
            first + (layer - 1) * self.width * (self.width + 1)
        }
    }

    fn output_offset(&self) -> usize {
        self.layer_offset(self.depth)
    }

    pub fn param_count(&self) -> usize {
        self.output_offset() + self.width + 1
    }
}

/// `(weights_start, biases_start)` of hidden layer `layer` in the flat layout.
fn split_layer(arch: &NetworkArch, layer: usize) -> (usize, usize) {
    let start = arch.layer_offset(layer);
    (start, start + arch.width * arch.layer_in(layer))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: NetworkArch,
    params: Vec<f64>,
}

/// Gradient of a scalar loss with respect to every network parameter,
/// in the network's flat layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    arch: NetworkArch,
    values: Vec<f64>,
}

macro_rules! layer_accessors {
    ($field:ident) => {
        /// Row-major `width x fan_in` weight matrix of hidden layer `layer` (0-based).
        pub fn layer_weights(&self, layer: usize) -> &[f64] {
            let (w, b) = split_layer(&self.arch, layer);
            &self.$field[w..b]
        }

        pub fn layer_biases(&self, layer: usize) -> &[f64] {
            let (_, b) = split_layer(&self.arch, layer);
            &self.$field[b..b + self.arch.width]
        }

        pub fn output_weights(&self) -> &[f64] {
            let o = self.arch.output_offset();
            &self.$field[o..o + self.arch.width]
        }

        pub fn output_bias(&self) -> f64 {
            self.$field[self.arch.param_count() - 1]
        }

        pub fn arch(&self) -> NetworkArch {
            self.arch
        }
    };
}

impl Gradients {
    layer_accessors!(values);

    pub fn zeros(arch: NetworkArch) -> Self {
        Self {
            arch,
            values: vec![0.0; arch.param_count()],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Per-sample activations reused across forward/backward passes.
#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    /// Pre-activations, `depth * width`.
    pre: Vec<f64>,
    /// Post-activations, `depth * width`.
    post: Vec<f64>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(arch: &NetworkArch) -> Self {
        let n = arch.depth * arch.width;
        Self {
            pre: vec![0.0; n],
            post: vec![0.0; n],
            delta: vec![0.0; arch.width],
            delta_prev: vec![0.0; arch.width],
        }
    }
}

impl Network {
    layer_accessors!(params);

    /// He-style initialization: weights `N(0, 2 / fan_in)`, biases zero.
    pub fn init(arch: NetworkArch, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut params = vec![0.0; arch.param_count()];
        for layer in 0..=arch.depth {
            let (start, fan_in, rows) = if layer < arch.depth {
                (arch.layer_offset(layer), arch.layer_in(layer), arch.width)
            } else {
                (arch.output_offset(), arch.width, 1)
            };
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt())
                .expect("fan-in scale is finite and positive");
            for w in &mut params[start..start + rows * fan_in] {
                *w = normal.sample(&mut rng);
            }
        }
        Self { arch, params }
    }

    /// All-zero parameters.
    pub fn zeros(arch: NetworkArch) -> Self {
        Self {
            arch,
            params: vec![0.0; arch.param_count()],
        }
    }

    /// Assembles a network from per-layer blocks; `layer_weights[s]` is
    /// row-major `width x fan_in`.
    pub fn from_parts(
        arch: NetworkArch,
        layer_weights: &[Vec<f64>],
        layer_biases: &[Vec<f64>],
        output_weights: &[f64],
        output_bias: f64,
    ) -> Result<Self> {
        if layer_weights.len() != arch.depth || layer_biases.len() != arch.depth {
            return Err(Error::ShapeMismatch(format!(
                "expected {} hidden layers, got {} weight and {} bias blocks",
                arch.depth,
                layer_weights.len(),
                layer_biases.len()
            )));
        }
        let mut params = Vec::with_capacity(arch.param_count());
        for (s, (w, b)) in layer_weights.iter().zip(layer_biases).enumerate() {
            let want = arch.width * arch.layer_in(s);
            if w.len() != want || b.len() != arch.width {
                return Err(Error::ShapeMismatch(format!(
                    "hidden layer {s}: expected {want} weights and {} biases, got {} and {}",
                    arch.width,
                    w.len(),
                    b.len()
                )));
            }
            params.extend_from_slice(w);
            params.extend_from_slice(b);
        }
        if output_weights.len() != arch.width {
            return Err(Error::ShapeMismatch(format!(
                "output layer: expected {} weights, got {}",
                arch.width,
                output_weights.len()
            )));
        }
        params.extend_from_slice(output_weights);
        params.push(output_bias);
        Self::from_flat(arch, params)
    }

    pub fn from_flat(arch: NetworkArch, params: Vec<f64>) -> Result<Self> {
        if params.len() != arch.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                arch.param_count(),
                params.len()
            )));
        }
        if !params.iter().all(|p| p.is_finite()) {
            return Err(Error::InvalidConfig("network parameters must be finite".into()));
        }
        Ok(Self { arch, params })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn into_params(self) -> Vec<f64> {
        self.params
    }

    /// Network output at `x`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.eval(x, &mut Workspace::new(&self.arch)))
    }

    /// Output truncated to `[-bound, bound]`.
    pub fn forward_clipped(&self, x: &[f64], bound: f64) -> Result<f64> {
        self.forward(x).map(|v| clip(v, bound))
    }

    /// Outputs at every row of `data`.
    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_input_dim(data.dim())?;
        let mut ws = Workspace::new(&self.arch);
        Ok(data.rows().map(|x| self.eval(x, &mut ws)).collect())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        self.check_input_dim(x.len())
    }

    fn check_input_dim(&self, dim: usize) -> Result<()> {
        if dim != self.arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.arch.input_dim,
                got: dim,
            });
        }
        Ok(())
    }

    /// Forward pass storing activations in `ws`. Caller guarantees `x.len() == d`.
    pub(crate) fn eval(&self, x: &[f64], ws: &mut Workspace) -> f64 {
        let arch = &self.arch;
        let width = arch.width;
        for layer in 0..arch.depth {
            let fan_in = arch.layer_in(layer);
            let (w0, b0) = split_layer(arch, layer);
            let weights = &self.params[w0..b0];
            let biases = &self.params[b0..b0 + width];
            let (before, current) = ws.post.split_at_mut(layer * width);
            let input: &[f64] = if layer == 0 {
                x
            } else {
                &before[(layer - 1) * width..]
            };
            let pre = &mut ws.pre[layer * width..(layer + 1) * width];
            for (i, (row, &b)) in weights.chunks_exact(fan_in).zip(biases).enumerate() {
                let z = b + dot(row, input);
                pre[i] = z;
                current[i] = relu(z);
            }
        }
        let o = arch.output_offset();
        let last = &ws.post[(arch.depth - 1) * width..arch.depth * width];
        self.params[o + width] + dot(&self.params[o..o + width], last)
    }

    /// Accumulates `d_out * df/dtheta` into `grad` using the activations
    /// from the preceding [`Network::eval`] on the same `x`.
    pub(crate) fn backward(&self, x: &[f64], d_out: f64, ws: &mut Workspace, grad: &mut [f64]) {
        let arch = &self.arch;
        let width = arch.width;
        let depth = arch.depth;
        let o = arch.output_offset();
        let last = &ws.post[(depth - 1) * width..depth * width];
        axpy(d_out, last, &mut grad[o..o + width]);
        grad[o + width] += d_out;

        // delta for the last hidden layer; relu'(0) := 0.
        let out_w = &self.params[o..o + width];
        let pre_last = &ws.pre[(depth - 1) * width..depth * width];
        for i in 0..width {
            ws.delta[i] = if pre_last[i] > 0.0 { d_out * out_w[i] } else { 0.0 };
        }

        for layer in (0..depth).rev() {
            let fan_in = arch.layer_in(layer);
            let (w0, b0) = split_layer(arch, layer);
            let input: &[f64] = if layer == 0 {
                x
            } else {
                &ws.post[(layer - 1) * width..layer * width]
            };
            if layer > 0 {
                ws.delta_prev.iter_mut().for_each(|d| *d = 0.0);
            }
            for i in 0..width {
                let d = ws.delta[i];
                if d == 0.0 {
                    continue;
                }
                let row = w0 + i * fan_in;
                axpy(d, input, &mut grad[row..row + fan_in]);
                grad[b0 + i] += d;
                if layer > 0 {
                    axpy(d, &self.params[row..row + fan_in], &mut ws.delta_prev);
                }
            }
            if layer > 0 {
                let pre = &ws.pre[(layer - 1) * width..layer * width];
                for j in 0..width {
                    ws.delta[j] = if pre[j] > 0.0 { ws.delta_prev[j] } else { 0.0 };
                }
            }
        }
    }

    /// Mean squared error and its gradient over the rows `indices` of `data`.
    pub(crate) fn loss_and_grad_on(
        &self,
        data: &Dataset,
        indices: impl ExactSizeIterator<Item = usize>,
        ws: &mut Workspace,
        grad: &mut [f64],
    ) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let m = indices.len() as f64;
        let mut sse = 0.0;
        for i in indices {
            let x = data.x(i);
            let r = self.eval(x, ws) - data.y(i);
            sse += r * r;
            self.backward(x, 2.0 * r / m, ws, grad);
        }
        sse / m
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `(1/n) sum (y_i - f(x_i))^2`.
pub fn mse_loss(net: &Network, data: &Dataset) -> Result<f64> {
    let preds = net.predict_all(data)?;
    let sse: f64 = preds.iter().zip(data.ys()).map(|(p, y)| (y - p).powi(2)).sum();
    Ok(sse / data.len() as f64)
}

/// Exact gradient of [`mse_loss`] with respect to every parameter.
pub fn backprop_grads(net: &Network, data: &Dataset) -> Result<(f64, Gradients)> {
    net.check_input_dim(data.dim())?;
    let mut grads = Gradients::zeros(net.arch);
    let mut ws = Workspace::new(&net.arch);
    let loss = net.loss_and_grad_on(data, 0..data.len(), &mut ws, &mut grads.values);
    Ok((loss, grads))
}
