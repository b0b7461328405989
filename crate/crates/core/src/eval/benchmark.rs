use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scenarios::ScenarioSpec;
use crate::seed::derive_seed;
use crate::variance::{
    fit_mean, fit_sigma2_homoscedastic, fit_variance_direct, fit_variance_residual, variance_mse,
    FittedVariance, Strategy, VarianceFitConfig, VarianceKind,
};

use super::mean_std;

/// A variance estimator under benchmark. `Oracle` reports `g*` itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Estimator {
    Network(VarianceKind),
    Oracle,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Network(VarianceKind::Residual) => "NN_res",
            Estimator::Network(VarianceKind::Direct) => "NN_dir",
            Estimator::Network(VarianceKind::Homoscedastic) => "NN_hom",
            Estimator::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Estimator::Oracle),
            "NN_res" => Ok(Estimator::Network(VarianceKind::Residual)),
            "NN_dir" => Ok(Estimator::Network(VarianceKind::Direct)),
            "NN_hom" => Ok(Estimator::Network(VarianceKind::Homoscedastic)),
            other => other.parse().map(Estimator::Network),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrialReport {
    pub scenario: u8,
    pub n: usize,
    pub strategy: Strategy,
    pub estimator: Estimator,
    pub mses: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over trials.
    pub std: f64,
}

impl TrialReport {
    pub fn new(scenario: u8, n: usize, strategy: Strategy, estimator: Estimator, mses: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&mses);
        Self {
            scenario,
            n,
            strategy,
            estimator,
            mses,
            mean,
            std,
        }
    }
}

/// Per trial: draws a fresh sample, fits one mean per `strategy`, then each
/// requested variance estimator on top of it, and scores
/// `(1/n) sum (g_hat(x_i) - g*(x_i))^2` over all `n` covariates.
///
/// Returns one report per estimator, in the order given.
pub fn run_variance_benchmark(
    spec: ScenarioSpec,
    n: usize,
    trials: usize,
    strategy: Strategy,
    estimators: &[Estimator],
    fit_cfg: &VarianceFitConfig,
    seed: u64,
) -> Result<Vec<TrialReport>> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    if estimators.is_empty() {
        return Err(Error::InvalidConfig("no estimators requested".into()));
    }
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            run_trial(spec, n, strategy, estimators, fit_cfg, derive_seed(seed, &format!("trial/{t}")))
                .map_err(|e| Error::Trial {
                    index: t,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    Ok(estimators
        .iter()
        .enumerate()
        .map(|(k, &est)| {
            let mses = per_trial.iter().map(|row| row[k]).collect();
            TrialReport::new(spec.id(), n, strategy, est, mses)
        })
        .collect())
}

fn run_trial(
    spec: ScenarioSpec,
    n: usize,
    strategy: Strategy,
    estimators: &[Estimator],
    fit_cfg: &VarianceFitConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    let data = spec.sample_dataset(n, derive_seed(seed, "data"))?.dataset;
    let g_star = |x: &[f64]| spec.g_star(x);
    let needs_mean = estimators.iter().any(|e| matches!(e, Estimator::Network(_)));
    let (mean_block, var_block) = strategy.blocks(&data)?;
    let cfg = fit_cfg.reseeded(seed);
    let mean = if needs_mean {
        Some(fit_mean(&mean_block, cfg.mean_arch, &cfg.mean_train, cfg.mean_clip).map_err(Error::at_stage("mean fit"))?)
    } else {
        None
    };
    estimators
        .iter()
        .map(|est| {
            let var: FittedVariance = match (est, &mean) {
                (Estimator::Oracle, _) => return Ok(variance_mse(g_star, &data, g_star)),
                (Estimator::Network(kind), Some(mean)) => match kind {
                    VarianceKind::Residual => {
                        fit_variance_residual(mean, &var_block, cfg.var_arch, &cfg.var_train, cfg.var_clip)
                    }
                    VarianceKind::Direct => {
                        fit_variance_direct(mean, &var_block, cfg.var_arch, &cfg.var_train, cfg.var_clip)
                    }
                    VarianceKind::Homoscedastic => fit_sigma2_homoscedastic(mean, &var_block, cfg.var_clip),
                }
                .map_err(Error::at_stage("variance fit"))?,
                (Estimator::Network(_), None) => unreachable!("mean is fitted whenever a network estimator runs"),
            };
            let preds = var.predict_all(&data)?;
            let sse: f64 = data.rows().zip(&preds).map(|(x, p)| (p - g_star(x)).powi(2)).sum();
            Ok(sse / n as f64)
        })
        .collect()
}

/// Columns `scenario,n,method,strategy,trial,mse`; after the per-trial rows
/// of each report come two aggregate rows with `trial` set to `mean` and `std`.
pub fn write_benchmark_csv<W: Write>(reports: &[TrialReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "n", "method", "strategy", "trial", "mse"])?;
    for r in reports {
        let prefix = [r.scenario.to_string(), r.n.to_string(), r.estimator.name().to_string(), r.strategy.name().to_string()];
        let rows = r
            .mses
            .iter()
            .enumerate()
            .map(|(t, m)| (t.to_string(), *m))
            .chain([("mean".to_string(), r.mean), ("std".to_string(), r.std)]);
        for (trial, value) in rows {
            let mut rec = prefix.to_vec();
            rec.push(trial);
            rec.push(value.to_string());
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(Error::io("<csv output>"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relu_net::{NetworkArch, TrainConfig};

    fn tiny_cfg() -> VarianceFitConfig {
        let arch = NetworkArch::new(2, 1, 8).unwrap();
        let train = TrainConfig::default().with_epochs(3);
        VarianceFitConfig {
            mean_arch: arch,
            mean_train: train,
            var_arch: arch,
            var_train: train,
            mean_clip: None,
            var_clip: None,
        }
    }

    #[test]
    fn oracle_scores_zero() {
        let spec = ScenarioSpec::new(2).unwrap();
        let r = run_variance_benchmark(spec, 50, 1, Strategy::Full, &[Estimator::Oracle], &tiny_cfg(), 0).unwrap();
        assert_eq!(r[0].mses, vec![0.0]);
    }

    #[test]
    fn aggregates_recompute() {
        let spec = ScenarioSpec::new(1).unwrap();
        let est = [Estimator::Network(VarianceKind::Residual), Estimator::Network(VarianceKind::Homoscedastic)];
        let reports = run_variance_benchmark(spec, 60, 4, Strategy::Split, &est, &tiny_cfg(), 5).unwrap();
        assert_eq!(reports.len(), 2);
        for r in &reports {
            assert_eq!(r.mses.len(), 4);
            let m = r.mses.iter().sum::<f64>() / 4.0;
            let s = (r.mses.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 3.0).sqrt();
            assert!((r.mean - m).abs() < 1e-15);
            assert!((r.std - s).abs() < 1e-15);
        }
        let again = run_variance_benchmark(spec, 60, 4, Strategy::Split, &est, &tiny_cfg(), 5).unwrap();
        assert_eq!(reports, again);
    }

    #[test]
    fn csv_layout() {
        let r = TrialReport::new(1, 10, Strategy::Full, Estimator::Oracle, vec![0.5, 0.25]);
        let mut buf = Vec::new();
        write_benchmark_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "scenario,n,method,strategy,trial,mse");
        assert_eq!(lines[1], "1,10,oracle,full,0,0.5");
        assert_eq!(lines[3], "1,10,oracle,full,mean,0.375");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn estimator_names_parse() {
        for e in [
            Estimator::Oracle,
            Estimator::Network(VarianceKind::Residual),
            Estimator::Network(VarianceKind::Direct),
            Estimator::Network(VarianceKind::Homoscedastic),
        ] {
            assert_eq!(e.name().parse::<Estimator>().unwrap(), e);
        }
        assert_eq!("res".parse::<Estimator>().unwrap(), Estimator::Network(VarianceKind::Residual));
    }
}
