use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::bootstrap::{
    assemble, fit_replicates, prepare, raw_standardized_residuals, sorted_order_statistic, CiConfig,
    VARIANCE_FLOOR,
};
use crate::dataset::{Dataset, Interval};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, stream};
use crate::variance::{
    fit_mean, fit_sigma2_homoscedastic, fit_variance_direct, fit_variance_residual, FittedMean,
    FittedVariance, Strategy, VarianceFitConfig, VarianceKind,
};

use super::benchmark::Estimator;
use super::mean_std;

/// A mean and variance fit plus the sorted training scores
/// `(y_i - f(x_i)) / sqrt(max(|g(x_i)|, floor))`.
#[derive(Debug, Clone)]
pub struct PredictionIntervalModel {
    mean: FittedMean,
    var: FittedVariance,
    scores: Vec<f64>,
}

impl PredictionIntervalModel {
    pub fn fit(mean: FittedMean, var: FittedVariance, train: &Dataset) -> Result<Self> {
        let mut scores = raw_standardized_residuals(&mean, &var, train)?;
        if scores.is_empty() {
            return Err(Error::EmptyInput("prediction intervals need training rows"));
        }
        scores.sort_by(f64::total_cmp);
        Ok(Self { mean, var, scores })
    }

    /// The `level`-quantile of the training scores.
    pub fn quantile(&self, level: f64) -> f64 {
        sorted_order_statistic(&self.scores, level)
    }

    /// `[f(x) + q_{alpha/2} s(x), f(x) + q_{1-alpha/2} s(x)]` with
    /// `s(x) = sqrt(max(|g(x)|, floor))` and signed score quantiles.
    pub fn interval(&self, x: &[f64], alpha: f64) -> Result<Interval> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let f = self.mean.predict(x)?;
        let s = self.var.predict(x)?.abs().max(VARIANCE_FLOOR).sqrt();
        Ok(Interval::new(
            f + self.quantile(alpha / 2.0) * s,
            f + self.quantile(1.0 - alpha / 2.0) * s,
        ))
    }

    /// Fraction of rows of `test` whose response falls in its interval.
    pub fn coverage(&self, test: &Dataset, alpha: f64) -> Result<f64> {
        let mut hits = 0usize;
        for (i, x) in test.rows().enumerate() {
            if self.interval(x, alpha)?.contains(test.y(i)) {
                hits += 1;
            }
        }
        Ok(hits as f64 / test.len() as f64)
    }
}

/// One-shot form of [`PredictionIntervalModel::interval`].
pub fn prediction_interval(
    mean: &FittedMean,
    var: &FittedVariance,
    train: &Dataset,
    x_test: &[f64],
    alpha: f64,
) -> Result<Interval> {
    PredictionIntervalModel::fit(mean.clone(), var.clone(), train)?.interval(x_test, alpha)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RealDataConfig {
    pub fit: VarianceFitConfig,
    pub methods: Vec<VarianceKind>,
    /// Under [`Strategy::Split`] the mean is fit on half of the training
    /// rows; the variance and the score quantiles use the other half.
    pub strategy: Strategy,
    /// When set, each split also builds bootstrap confidence intervals at
    /// every level and records their length `2 delta`.
    pub ci: Option<CiConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PiRecord {
    pub split: usize,
    pub method: VarianceKind,
    pub alpha: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CiLengthRecord {
    pub split: usize,
    pub alpha: f64,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PiSummary {
    pub method: VarianceKind,
    pub alpha: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RealDataReport {
    pub train_size: usize,
    pub test_size: usize,
    pub pi: Vec<PiRecord>,
    pub ci: Vec<CiLengthRecord>,
}

impl RealDataReport {
    /// Mean and std of test coverage over splits, per method and level.
    pub fn summary(&self) -> Vec<PiSummary> {
        let mut keys: Vec<(VarianceKind, f64)> = Vec::new();
        for r in &self.pi {
            if !keys.iter().any(|&(m, a)| m == r.method && a == r.alpha) {
                keys.push((r.method, r.alpha));
            }
        }
        keys.into_iter()
            .map(|(method, alpha)| {
                let vals: Vec<f64> = self
                    .pi
                    .iter()
                    .filter(|r| r.method == method && r.alpha == alpha)
                    .map(|r| r.coverage)
                    .collect();
                let (mean, std) = mean_std(&vals);
                PiSummary {
                    method,
                    alpha,
                    mean,
                    std,
                }
            })
            .collect()
    }

    /// Mean confidence-interval length over splits, per level.
    pub fn mean_ci_lengths(&self) -> Vec<(f64, f64)> {
        let mut alphas: Vec<f64> = Vec::new();
        for r in &self.ci {
            if !alphas.contains(&r.alpha) {
                alphas.push(r.alpha);
            }
        }
        alphas
            .into_iter()
            .map(|a| {
                let v: Vec<f64> = self.ci.iter().filter(|r| r.alpha == a).map(|r| r.length).collect();
                (a, mean_std(&v).0)
            })
            .collect()
    }
}

/// Repeats `splits` random train/test partitions with `train_size`
/// training rows. On each, fits the mean and every variance method on the
/// training rows and scores prediction intervals on the rest.
pub fn run_real_data_study(
    data: &Dataset,
    train_size: usize,
    splits: usize,
    alphas: &[f64],
    cfg: &RealDataConfig,
    seed: u64,
) -> Result<RealDataReport> {
    if splits == 0 || alphas.is_empty() || cfg.methods.is_empty() {
        return Err(Error::InvalidConfig("need at least one split, level and method".into()));
    }
    if train_size == 0 || train_size >= data.len() {
        return Err(Error::InvalidConfig(format!(
            "train_size must lie in 1..{}, got {train_size}",
            data.len()
        )));
    }
    let per_split: Vec<(Vec<PiRecord>, Vec<CiLengthRecord>)> = (0..splits)
        .into_par_iter()
        .map(|s| {
            run_split(data, train_size, alphas, cfg, s, derive_seed(seed, &format!("split/{s}"))).map_err(|e| {
                Error::Trial {
                    index: s,
                    source: Box::new(e),
                }
            })
        })
        .collect::<Result<_>>()?;
    let (mut pi, mut ci) = (Vec::new(), Vec::new());
    for (p, c) in per_split {
        pi.extend(p);
        ci.extend(c);
    }
    Ok(RealDataReport {
        train_size,
        test_size: data.len() - train_size,
        pi,
        ci,
    })
}

fn run_split(
    data: &Dataset,
    train_size: usize,
    alphas: &[f64],
    cfg: &RealDataConfig,
    split: usize,
    seed: u64,
) -> Result<(Vec<PiRecord>, Vec<CiLengthRecord>)> {
    let mut perm: Vec<usize> = (0..data.len()).collect();
    perm.shuffle(&mut stream(seed, "permutation"));
    let train = data.subset(&perm[..train_size]);
    let test = data.subset(&perm[train_size..]);

    let (mean_rows, var_rows) = cfg.strategy.blocks(&train)?;
    let fit = cfg.fit.reseeded(seed);
    let mean = fit_mean(&mean_rows, fit.mean_arch, &fit.mean_train, fit.mean_clip).map_err(Error::at_stage("mean fit"))?;
    let mut pi = Vec::new();
    for &method in &cfg.methods {
        let var = match method {
            VarianceKind::Residual => fit_variance_residual(&mean, &var_rows, fit.var_arch, &fit.var_train, fit.var_clip),
            VarianceKind::Direct => fit_variance_direct(&mean, &var_rows, fit.var_arch, &fit.var_train, fit.var_clip),
            VarianceKind::Homoscedastic => fit_sigma2_homoscedastic(&mean, &var_rows, fit.var_clip),
        }
        .map_err(Error::at_stage("variance fit"))?;
        let model = PredictionIntervalModel::fit(mean.clone(), var, &var_rows)?;
        for &alpha in alphas {
            pi.push(PiRecord {
                split,
                method,
                alpha,
                coverage: model.coverage(&test, alpha)?,
            });
        }
    }

    let mut ci = Vec::new();
    if let Some(ci_cfg) = &cfg.ci {
        let ci_cfg = CiConfig {
            seed: derive_seed(seed, "ci"),
            ..*ci_cfg
        };
        let base = prepare(&ci_cfg, &train)?;
        let reps = fit_replicates(&base, &ci_cfg).map_err(Error::at_stage("bootstrap refits"))?;
        for &alpha in alphas {
            let res = assemble(&CiConfig { alpha, ..ci_cfg }, &train, &base, &reps)?;
            ci.push(CiLengthRecord {
                split,
                alpha,
                length: 2.0 * res.half_width(),
            });
        }
    }
    Ok((pi, ci))
}

/// Columns `split,method,alpha,metric,value`. `metric` is `pi_coverage`
/// (method `NN_res`, ...) or `ci_length` (method `CI`); per-split rows
/// come first, then aggregate rows with `split` set to `mean` or `std`.
pub fn write_real_data_csv<W: Write>(report: &RealDataReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["split", "method", "alpha", "metric", "value"])?;
    let name = |m: VarianceKind| Estimator::Network(m).name();
    for r in &report.pi {
        w.write_record([r.split.to_string(), name(r.method).into(), r.alpha.to_string(), "pi_coverage".into(), r.coverage.to_string()])?;
    }
    for r in &report.ci {
        w.write_record([r.split.to_string(), "CI".into(), r.alpha.to_string(), "ci_length".into(), r.length.to_string()])?;
    }
    for s in report.summary() {
        for (label, v) in [("mean", s.mean), ("std", s.std)] {
            w.write_record([label.into(), name(s.method).into(), s.alpha.to_string(), "pi_coverage".into(), v.to_string()])?;
        }
    }
    for (alpha, len) in report.mean_ci_lengths() {
        w.write_record(["mean".into(), "CI".into(), alpha.to_string(), "ci_length".into(), len.to_string()])?;
    }
    w.flush().map_err(Error::io("<csv output>"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relu_net::{Network, NetworkArch, TrainConfig};

    fn constant_net(arch: NetworkArch, value: f64) -> Network {
        let mut net = Network::zeros(arch);
        *net.params_mut().last_mut().unwrap() = value;
        net
    }

    #[test]
    fn symmetric_scores() {
        let arch = NetworkArch::new(1, 1, 2).unwrap();
        let mean = FittedMean::new(Network::zeros(arch), 10.0).unwrap();
        let var = FittedVariance::residual(constant_net(arch, 1.0), 10.0).unwrap();
        let train = Dataset::new(1, vec![0.2, 0.8], vec![-1.0, 1.0]).unwrap();
        let iv = prediction_interval(&mean, &var, &train, &[0.5], 0.5).unwrap();
        // q_0.25 is the 1st of 2 scores, q_0.75 the 2nd.
        assert_eq!((iv.lower, iv.upper), (-1.0, 1.0));
    }

    #[test]
    fn zero_variance_collapses() {
        let arch = NetworkArch::new(1, 1, 2).unwrap();
        let mean = FittedMean::new(constant_net(arch, 0.5), 10.0).unwrap();
        let var = FittedVariance::residual(Network::zeros(arch), 10.0).unwrap();
        let train = Dataset::new(1, vec![0.1, 0.4, 0.9], vec![0.4, 0.5, 0.6]).unwrap();
        let iv = prediction_interval(&mean, &var, &train, &[0.3], 0.1).unwrap();
        assert!((iv.lower - 0.4).abs() < 1e-12 && (iv.upper - 0.6).abs() < 1e-12, "{iv:?}");
    }

    #[test]
    fn training_coverage_is_close_to_nominal() {
        let arch = NetworkArch::new(1, 1, 2).unwrap();
        let mean = FittedMean::new(Network::zeros(arch), 100.0).unwrap();
        let var = FittedVariance::residual(constant_net(arch, 1.0), 100.0).unwrap();
        let mut rng = stream(1, "pi");
        let xs: Vec<f64> = (0..4000).map(|_| rand::Rng::random(&mut rng)).collect();
        let ys: Vec<f64> = (0..4000).map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)).collect();
        let train = Dataset::new(1, xs, ys).unwrap();
        let model = PredictionIntervalModel::fit(mean, var, &train).unwrap();
        let cov = model.coverage(&train, 0.1).unwrap();
        assert!((cov - 0.9).abs() < 0.01, "{cov}");
    }

    fn tiny_fit() -> VarianceFitConfig {
        let arch = NetworkArch::new(1, 1, 4).unwrap();
        VarianceFitConfig::experiment_default(1, TrainConfig::default().with_epochs(3))
            .map(|c| VarianceFitConfig {
                mean_arch: arch,
                var_arch: arch,
                ..c
            })
            .unwrap()
    }

    #[test]
    fn constant_response_is_always_covered() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 / 29.0).collect();
        let data = Dataset::new(1, xs, vec![2.0; 30]).unwrap();
        let cfg = RealDataConfig {
            fit: tiny_fit(),
            methods: vec![VarianceKind::Residual],
            ci: None,
            strategy: Strategy::Full,
        };
        let report = run_real_data_study(&data, 20, 1, &[0.05], &cfg, 0).unwrap();
        assert_eq!(report.pi[0].coverage, 1.0);
    }

    #[test]
    fn summary_recomputes_from_records() {
        let mut rng = stream(2, "rd");
        let xs: Vec<f64> = (0..60).map(|_| rand::Rng::random(&mut rng)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x + rand::Rng::random_range(&mut rng, -0.1..0.1)).collect();
        let data = Dataset::new(1, xs, ys).unwrap();
        let cfg = RealDataConfig {
            fit: tiny_fit(),
            methods: vec![VarianceKind::Residual, VarianceKind::Direct],
            ci: None,
            strategy: Strategy::Full,
        };
        let report = run_real_data_study(&data, 40, 3, &[0.05, 0.1], &cfg, 9).unwrap();
        assert_eq!(report.pi.len(), 3 * 2 * 2);
        for s in report.summary() {
            let vals: Vec<f64> = report
                .pi
                .iter()
                .filter(|r| r.method == s.method && r.alpha == s.alpha)
                .map(|r| r.coverage)
                .collect();
            assert_eq!(vals.len(), 3);
            assert!((s.mean - vals.iter().sum::<f64>() / 3.0).abs() < 1e-15);
        }
        assert_eq!(report, run_real_data_study(&data, 40, 3, &[0.05, 0.1], &cfg, 9).unwrap());
    }
}
