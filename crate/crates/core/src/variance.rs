//! Mean fits and conditional-variance estimators.
//!
//! Three estimators of `g*(x) = Var(Y | X = x)` are provided:
//!
//! - **residual**: fit the mean `f`, then regress the squared residuals
//!   `(y_i - f(x_i))^2` on `x_i` with a second network;
//! - **direct**: fit `h(x) ~ E[Y^2 | X = x]` on `y_i^2` and report
//!   `h(x) - f(x)^2`;
//! - **homoscedastic**: the mean of the squared residuals projected onto
//!   `[0, B]`, i.e. the minimizer of `sum (e_i^2 - v)^2` over `v in [0, B]`.
//!
//! Every network prediction is clipped: the mean to `[-A, A]`, variance
//! networks to `[-B, B]`. Unless given explicitly, `A = max |y_i|` and `B`
//! is the largest regression target of the variance stage.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::relu_net::{clip, train, Network, NetworkArch, TrainConfig};
use crate::seed::derive_seed;

/// Which samples feed the mean stage and which feed the variance stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Both stages use every sample.
    Full,
    /// Mean on the first half, variance on the second.
    Split,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Full => "full",
            Strategy::Split => "split",
        }
    }

    /// `(mean block, variance block)`.
    pub fn blocks(self, data: &Dataset) -> Result<(Dataset, Dataset)> {
        match self {
            Strategy::Full => Ok((data.clone(), data.clone())),
            Strategy::Split => {
                let n = data.len();
                if n < 2 {
                    return Err(Error::SampleTooSmall { n, min: 2 });
                }
                let half = n / 2;
                let first: Vec<usize> = (0..half).collect();
                let second: Vec<usize> = (half..n).collect();
                Ok((data.subset(&first), data.subset(&second)))
            }
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Strategy::Full),
            "split" => Ok(Strategy::Split),
            other => Err(Error::InvalidConfig(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceKind {
    Residual,
    Direct,
    Homoscedastic,
}

impl VarianceKind {
    pub fn name(self) -> &'static str {
        match self {
            VarianceKind::Residual => "residual",
            VarianceKind::Direct => "direct",
            VarianceKind::Homoscedastic => "homoscedastic",
        }
    }
}

impl std::str::FromStr for VarianceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "residual" | "res" => Ok(VarianceKind::Residual),
            "direct" | "dir" => Ok(VarianceKind::Direct),
            "homoscedastic" | "hom" => Ok(VarianceKind::Homoscedastic),
            other => Err(Error::InvalidConfig(format!("unknown variance estimator `{other}`"))),
        }
    }
}

/// Largest absolute value, floored so it is usable as a clip bound.
pub fn data_bound(values: impl IntoIterator<Item = f64>) -> f64 {
    values
        .into_iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::EPSILON)
}

fn check_bound(bound: f64) -> Result<f64> {
    if bound > 0.0 && bound.is_finite() {
        Ok(bound)
    } else {
        Err(Error::InvalidConfig(format!("clip bound must be positive and finite, got {bound}")))
    }
}

/// Trains a freshly initialized network; the init stream is split off `cfg.seed`.
pub fn fit_network(data: &Dataset, arch: NetworkArch, cfg: &TrainConfig) -> Result<Network> {
    let init = Network::init(arch, derive_seed(cfg.seed, "init"));
    Ok(train(&init, data, cfg)?.network)
}

/// A mean network read through the clip `[-A, A]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedMean {
    net: Network,
    clip_bound: f64,
}

impl FittedMean {
    pub fn new(net: Network, clip_bound: f64) -> Result<Self> {
        Ok(Self {
            net,
            clip_bound: check_bound(clip_bound)?,
        })
    }

    pub fn net(&self) -> &Network {
        &self.net
    }

    pub fn clip_bound(&self) -> f64 {
        self.clip_bound
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.net.forward_clipped(x, self.clip_bound)
    }

    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<f64>> {
        let raw = self.net.predict_all(data)?;
        Ok(raw.into_iter().map(|v| clip(v, self.clip_bound)).collect())
    }
}

/// Least-squares mean fit, clipped to `[-A, A]`; `A` defaults to `max |y_i|`.
pub fn fit_mean(
    train_data: &Dataset,
    arch: NetworkArch,
    cfg: &TrainConfig,
    clip_bound: Option<f64>,
) -> Result<FittedMean> {
    let bound = clip_bound.unwrap_or_else(|| data_bound(train_data.ys().iter().copied()));
    check_bound(bound)?;
    FittedMean::new(fit_network(train_data, arch, cfg)?, bound)
}

/// `y_i - f_A(x_i)`.
pub fn residuals(mean: &FittedMean, data: &Dataset) -> Result<Vec<f64>> {
    let preds = mean.predict_all(data)?;
    Ok(data.ys().iter().zip(preds).map(|(y, p)| y - p).collect())
}

#[derive(Debug, Clone, PartialEq)]
enum Model {
    Residual(Network),
    Direct { second_moment: Network, mean: FittedMean },
    Homoscedastic(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedVariance {
    model: Model,
    clip_bound: f64,
}

impl FittedVariance {
    pub fn residual(net: Network, clip_bound: f64) -> Result<Self> {
        Ok(Self {
            model: Model::Residual(net),
            clip_bound: check_bound(clip_bound)?,
        })
    }

    pub fn direct(second_moment: Network, mean: FittedMean, clip_bound: f64) -> Result<Self> {
        Ok(Self {
            model: Model::Direct {
                second_moment,
                mean,
            },
            clip_bound: check_bound(clip_bound)?,
        })
    }

    /// Constant variance, projected onto `[0, B]`.
    pub fn homoscedastic(sigma2: f64, clip_bound: f64) -> Result<Self> {
        let clip_bound = check_bound(clip_bound)?;
        Ok(Self {
            model: Model::Homoscedastic(sigma2.clamp(0.0, clip_bound)),
            clip_bound,
        })
    }

    pub fn kind(&self) -> VarianceKind {
        match self.model {
            Model::Residual(_) => VarianceKind::Residual,
            Model::Direct { .. } => VarianceKind::Direct,
            Model::Homoscedastic(_) => VarianceKind::Homoscedastic,
        }
    }

    pub fn clip_bound(&self) -> f64 {
        self.clip_bound
    }

    pub fn sigma2(&self) -> Option<f64> {
        match self.model {
            Model::Homoscedastic(v) => Some(v),
            _ => None,
        }
    }

    /// The network behind a residual fit, or the second-moment network `h` of a direct fit.
    pub fn net(&self) -> Option<&Network> {
        match &self.model {
            Model::Residual(net) => Some(net),
            Model::Direct { second_moment, .. } => Some(second_moment),
            Model::Homoscedastic(_) => None,
        }
    }

    /// Variance estimate at `x`. The direct estimator may be negative.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match &self.model {
            Model::Residual(net) => net.forward_clipped(x, self.clip_bound),
            Model::Direct {
                second_moment,
                mean,
            } => {
                let h = second_moment.forward_clipped(x, self.clip_bound)?;
                let f = mean.predict(x)?;
                Ok(h - f * f)
            }
            Model::Homoscedastic(v) => Ok(*v),
        }
    }

    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<f64>> {
        match &self.model {
            Model::Residual(net) => Ok(net
                .predict_all(data)?
                .into_iter()
                .map(|v| clip(v, self.clip_bound))
                .collect()),
            Model::Direct {
                second_moment,
                mean,
            } => {
                let h = second_moment.predict_all(data)?;
                let f = mean.predict_all(data)?;
                Ok(h.into_iter()
                    .zip(f)
                    .map(|(h, f)| clip(h, self.clip_bound) - f * f)
                    .collect())
            }
            Model::Homoscedastic(v) => Ok(vec![*v; data.len()]),
        }
    }
}

/// Regresses the squared residuals of `mean` on `var_data` covariates.
/// `B` defaults to the largest squared residual.
pub fn fit_variance_residual(
    mean: &FittedMean,
    var_data: &Dataset,
    arch: NetworkArch,
    cfg: &TrainConfig,
    clip_bound: Option<f64>,
) -> Result<FittedVariance> {
    let targets: Vec<f64> = residuals(mean, var_data)?.into_iter().map(|e| e * e).collect();
    let bound = clip_bound.unwrap_or_else(|| data_bound(targets.iter().copied()));
    check_bound(bound)?;
    let net = fit_network(&var_data.with_responses(targets)?, arch, cfg)?;
    FittedVariance::residual(net, bound)
}

/// Fits `h` on `y_i^2` and reports `h_B(x) - f_A(x)^2`. `B` defaults to `max y_i^2`.
pub fn fit_variance_direct(
    mean: &FittedMean,
    data: &Dataset,
    arch: NetworkArch,
    cfg: &TrainConfig,
    clip_bound: Option<f64>,
) -> Result<FittedVariance> {
    let targets: Vec<f64> = data.ys().iter().map(|y| y * y).collect();
    let bound = clip_bound.unwrap_or_else(|| data_bound(targets.iter().copied()));
    check_bound(bound)?;
    let net = fit_network(&data.with_responses(targets)?, arch, cfg)?;
    FittedVariance::direct(net, mean.clone(), bound)
}

/// `argmin_{v in [0, B]} sum (e_i^2 - v)^2`, which is `mean(e_i^2)` clamped
/// to `[0, B]`.
pub fn sigma2_from_residuals(residuals: &[f64], clip_bound: f64) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::EmptyInput("no residuals"));
    }
    check_bound(clip_bound)?;
    let m = residuals.iter().map(|e| e * e).sum::<f64>() / residuals.len() as f64;
    Ok(m.clamp(0.0, clip_bound))
}

/// Homoscedastic estimate from the residuals of `mean` on `data`.
/// `B` defaults to the largest squared residual.
pub fn fit_sigma2_homoscedastic(
    mean: &FittedMean,
    data: &Dataset,
    clip_bound: Option<f64>,
) -> Result<FittedVariance> {
    let res = residuals(mean, data)?;
    let bound = clip_bound.unwrap_or_else(|| data_bound(res.iter().map(|e| e * e)));
    FittedVariance::homoscedastic(sigma2_from_residuals(&res, bound)?, bound)
}

/// `(1/n) sum (g_hat(x_i) - g*(x_i))^2` over the rows of `data`.
pub fn variance_mse<E, G>(estimate: E, data: &Dataset, g_star: G) -> f64
where
    E: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    let sse: f64 = data.rows().map(|x| (estimate(x) - g_star(x)).powi(2)).sum();
    sse / data.len() as f64
}

/// Network shapes and training settings for both stages.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VarianceFitConfig {
    pub mean_arch: NetworkArch,
    pub mean_train: TrainConfig,
    pub var_arch: NetworkArch,
    pub var_train: TrainConfig,
    pub mean_clip: Option<f64>,
    pub var_clip: Option<f64>,
}

impl VarianceFitConfig {
    /// Two-layer width-64 networks for both stages.
    pub fn experiment_default(input_dim: usize, train_cfg: TrainConfig) -> Result<Self> {
        let arch = NetworkArch::experiment_default(input_dim)?;
        Ok(Self {
            mean_arch: arch,
            mean_train: train_cfg,
            var_arch: arch,
            var_train: train_cfg,
            mean_clip: None,
            var_clip: None,
        })
    }

    /// Same settings, with both training seeds split off `master`.
    pub fn reseeded(&self, master: u64) -> Self {
        Self {
            mean_train: self.mean_train.with_seed(derive_seed(master, "mean")),
            var_train: self.var_train.with_seed(derive_seed(master, "variance")),
            ..*self
        }
    }
}

/// Runs both stages of one estimator under `strategy`.
pub fn fit_variance(
    kind: VarianceKind,
    data: &Dataset,
    strategy: Strategy,
    cfg: &VarianceFitConfig,
) -> Result<(FittedMean, FittedVariance)> {
    let (mean_block, var_block) = strategy.blocks(data)?;
    let mean = fit_mean(&mean_block, cfg.mean_arch, &cfg.mean_train, cfg.mean_clip)
        .map_err(Error::at_stage("mean fit"))?;
    let var = match kind {
        VarianceKind::Residual => {
            fit_variance_residual(&mean, &var_block, cfg.var_arch, &cfg.var_train, cfg.var_clip)
        }
        VarianceKind::Direct => {
            fit_variance_direct(&mean, &var_block, cfg.var_arch, &cfg.var_train, cfg.var_clip)
        }
        VarianceKind::Homoscedastic => fit_sigma2_homoscedastic(&mean, &var_block, cfg.var_clip),
    }
    .map_err(Error::at_stage("variance fit"))?;
    Ok((mean, var))
}
