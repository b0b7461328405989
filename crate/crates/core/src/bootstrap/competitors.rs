//! Baseline intervals: quantiles of residual-bootstrap refits ("naive") and
//! of pairs-bootstrap refits ("standard").

use rand::Rng;
use rayon::prelude::*;

use crate::dataset::{Dataset, Interval};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, stream};
use crate::variance::fit_network;

use super::empirical::order_statistic;
use super::pipeline::{fit_replicates, prepare};
use super::CiConfig;

/// `[q_{alpha/2}, q_{1-alpha/2}]` of `values` by the order-statistic convention.
pub fn naive_interval(values: &[f64], alpha: f64) -> Result<Interval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut sorted = values.to_vec();
    if sorted.is_empty() {
        return Err(Error::EmptyInput("no replicate predictions"));
    }
    sorted.sort_by(f64::total_cmp);
    Ok(Interval::new(
        order_statistic(&sorted, alpha / 2.0)?,
        order_statistic(&sorted, 1.0 - alpha / 2.0)?,
    ))
}

fn pointwise(preds_by_replicate: &[Vec<f64>], points: usize, alpha: f64) -> Result<Vec<Interval>> {
    (0..points)
        .map(|k| {
            let column: Vec<f64> = preds_by_replicate.iter().map(|p| p[k]).collect();
            naive_interval(&column, alpha)
        })
        .collect()
}

fn predict_points(points: &[Vec<f64>], f: impl Fn(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
    points.iter().map(|x| f(x)).collect()
}

/// Runs the split, base fits and `B + B~` residual-bootstrap refits, then
/// takes pointwise quantiles of all refit predictions at `points`.
pub fn naive_bootstrap_interval(cfg: &CiConfig, data: &Dataset, points: &[Vec<f64>]) -> Result<Vec<Interval>> {
    let base = prepare(cfg, data)?;
    let reps = fit_replicates(&base, cfg).map_err(Error::at_stage("bootstrap refits"))?;
    let preds = reps
        .means
        .iter()
        .map(|f| predict_points(points, |x| f.predict(x)))
        .collect::<Result<Vec<_>>>()?;
    pointwise(&preds, points.len(), cfg.alpha)
}

/// Resamples all `n` pairs with replacement `cfg.standard_resamples` times,
/// refits an unclipped mean network on each resample with
/// `cfg.replicate_train`, and takes pointwise quantiles at `points`.
pub fn standard_bootstrap_interval(cfg: &CiConfig, data: &Dataset, points: &[Vec<f64>]) -> Result<Vec<Interval>> {
    cfg.validate()?;
    if cfg.standard_resamples == 0 {
        return Err(Error::InvalidConfig("standard_resamples must be >= 1".into()));
    }
    let preds = (0..cfg.standard_resamples)
        .into_par_iter()
        .map(|r| {
            standard_refit(cfg, data, points, r).map_err(|e| Error::Replicate {
                index: r + 1,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    pointwise(&preds, points.len(), cfg.alpha)
}

fn standard_refit(cfg: &CiConfig, data: &Dataset, points: &[Vec<f64>], r: usize) -> Result<Vec<f64>> {
    let n = data.len();
    let mut rng = stream(cfg.seed, &format!("standard/{r}/resample"));
    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let train_cfg = cfg
        .replicate_train
        .with_seed(derive_seed(cfg.seed, &format!("standard/{r}/fit")));
    let net = fit_network(&data.subset(&idx), cfg.mean_arch, &train_cfg)?;
    predict_points(points, |x| net.forward(x))
}
