use rayon::prelude::*;

use crate::dataset::{Dataset, Interval};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::variance::{
    data_bound, fit_mean, fit_variance_residual, residuals, sigma2_from_residuals, FittedMean,
    FittedVariance,
};

use super::calibration::{
    compute_a0, compute_a_alpha, compute_b_alpha, deviation_terms, half_width, quantile_a1,
    CalibrationContext,
};
use super::competitors::naive_interval;
use super::empirical::{standardized_residuals, EmpiricalDistribution};
use super::split::{split_indices, SplitIndices};
use super::CiConfig;

/// Steps on the real data: split, base mean and variance fits, residual distribution.
#[derive(Debug, Clone)]
pub struct BaseFit {
    pub split: SplitIndices,
    pub a_n: f64,
    pub mean: FittedMean,
    pub variance: FittedVariance,
    pub noise: EmpiricalDistribution,
    /// `mean(e_i^2)` over block-2 residuals, clamped to `[0, A_n]`.
    pub sigma2: f64,
    blocks: [Dataset; 4],
}

impl BaseFit {
    /// The data of block `k` (0-based).
    pub fn block(&self, k: usize) -> &Dataset {
        &self.blocks[k]
    }
}

/// Splits `data` and fits the base mean (block 1) and residual variance
/// (block 2), both clipped at `A_n`. All training seeds derive from `cfg.seed`.
///
/// If the standardized residuals have no spread, the noise law falls back
/// to a point mass at zero and [`EmpiricalDistribution::is_degenerate`] is set.
pub fn prepare(cfg: &CiConfig, data: &Dataset) -> Result<BaseFit> {
    cfg.validate()?;
    if data.dim() != cfg.mean_arch.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.mean_arch.input_dim(),
            got: data.dim(),
        });
    }
    let split = split_indices(data.len(), derive_seed(cfg.seed, "split")).map_err(Error::at_stage("split"))?;
    let blocks = split.blocks().clone().map(|idx| data.subset(&idx));
    let a_n = cfg.a_n.unwrap_or_else(|| data_bound(data.ys().iter().copied()));

    let mean_cfg = cfg.mean_train.with_seed(derive_seed(cfg.seed, "base/mean"));
    let mean = fit_mean(&blocks[0], cfg.mean_arch, &mean_cfg, Some(a_n)).map_err(Error::at_stage("mean fit"))?;
    let var_cfg = cfg.var_train.with_seed(derive_seed(cfg.seed, "base/variance"));
    let variance = fit_variance_residual(&mean, &blocks[1], cfg.var_arch, &var_cfg, Some(a_n))
        .map_err(Error::at_stage("variance fit"))?;

    let noise = match standardized_residuals(&mean, &variance, &blocks[1]) {
        Ok(dist) => dist,
        Err(Error::DegenerateDistribution(_)) => EmpiricalDistribution::degenerate(),
        Err(e) => return Err(Error::at_stage("residual distribution")(e)),
    };
    let sigma2 = sigma2_from_residuals(&residuals(&mean, &blocks[1])?, a_n)?;
    Ok(BaseFit {
        split,
        a_n,
        mean,
        variance,
        noise,
        sigma2,
        blocks,
    })
}

/// `f_A(x_i) + sqrt(|g_A(x_i)|) * eps_i` on `block3`, with `eps` drawn from
/// `dist` on the stream of replicate `j`.
pub fn make_bootstrap_responses(
    mean: &FittedMean,
    var: &FittedVariance,
    block3: &Dataset,
    dist: &EmpiricalDistribution,
    j: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let eps = dist.sample(block3.len(), derive_seed(seed, &format!("replicate/{j}/noise")));
    let f = mean.predict_all(block3)?;
    let g = var.predict_all(block3)?;
    Ok(f.iter()
        .zip(&g)
        .zip(&eps)
        .map(|((f, g), e)| f + g.abs().sqrt() * e)
        .collect())
}

/// The `B + B~` refitted means; `variance` belongs to replicate `B + 1`.
#[derive(Debug, Clone)]
pub struct Replicates {
    pub b: usize,
    pub means: Vec<FittedMean>,
    pub variance: FittedVariance,
}

impl Replicates {
    /// Replicates `1..=B`, scored on block 4.
    pub fn scored(&self) -> &[FittedMean] {
        &self.means[..self.b]
    }

    /// Replicates `B+1..=B+B~`, averaged into the center.
    pub fn center_members(&self) -> &[FittedMean] {
        &self.means[self.b..]
    }
}

/// Refits a mean on each simulated response vector over block 3. Only
/// replicate `B + 1` also gets a variance fit. Replicates run in parallel
/// and are collected in index order.
pub fn fit_replicates(base: &BaseFit, cfg: &CiConfig) -> Result<Replicates> {
    let block3 = base.block(2);
    let total = cfg.b + cfg.b_tilde;
    let fitted: Vec<(FittedMean, Option<FittedVariance>)> = (1..=total)
        .into_par_iter()
        .map(|j| {
            fit_one_replicate(base, cfg, block3, j).map_err(|e| Error::Replicate {
                index: j,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let mut variance = None;
    let mut means = Vec::with_capacity(total);
    for (m, v) in fitted {
        means.push(m);
        if v.is_some() {
            variance = v;
        }
    }
    Ok(Replicates {
        b: cfg.b,
        means,
        variance: variance.expect("replicate B+1 always fits a variance"),
    })
}

fn fit_one_replicate(
    base: &BaseFit,
    cfg: &CiConfig,
    block3: &Dataset,
    j: usize,
) -> Result<(FittedMean, Option<FittedVariance>)> {
    let ys = make_bootstrap_responses(&base.mean, &base.variance, block3, &base.noise, j, cfg.seed)?;
    let sim = block3.with_responses(ys)?;
    let mean_cfg = cfg.replicate_train.with_seed(derive_seed(cfg.seed, &format!("replicate/{j}/mean")));
    let mean = fit_mean(&sim, cfg.mean_arch, &mean_cfg, Some(base.a_n))?;
    let variance = if j == cfg.b + 1 {
        let var_cfg = cfg
            .replicate_train
            .with_seed(derive_seed(cfg.seed, &format!("replicate/{j}/variance")));
        Some(fit_variance_residual(&mean, &sim, cfg.var_arch, &var_cfg, Some(base.a_n))?)
    } else {
        None
    };
    Ok((mean, variance))
}

/// Every quantity entering the half-width.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CiDiagnostics {
    pub n: usize,
    pub a1: f64,
    /// `A_n^2 sqrt(32 [ln(8/alpha) + ln B~] / n)`.
    pub a2_term: f64,
    /// `A_n sqrt(8 [ln(64/alpha) + ln B~] / n)`.
    pub a3_term: f64,
    pub mean_g_b1: f64,
    pub var_y: f64,
    pub mean_sq_dev_b1: f64,
    pub mean_sq_err_b1: f64,
    pub sigma2: f64,
    pub a0: f64,
    pub b_alpha: f64,
    pub a_alpha: f64,
    pub delta: f64,
    pub degenerate_noise: bool,
}

impl CiDiagnostics {
    /// `|a1 + a2_term + a3_term - mean_g_b1 + a0|`.
    pub fn recompute_a_alpha(&self) -> f64 {
        (self.a1 + self.a2_term + self.a3_term - self.mean_g_b1 + self.a0).abs()
    }

    pub fn recompute_delta(&self, alpha: f64, b_tilde: usize) -> f64 {
        half_width(self.a_alpha, alpha, b_tilde, self.b_alpha)
    }
}

fn mean_of(values: impl Iterator<Item = f64>, len: usize) -> f64 {
    values.sum::<f64>() / len as f64
}

/// Scores the replicates on block 4 and assembles the half-width.
pub fn calibrate(cfg: &CiConfig, data: &Dataset, base: &BaseFit, reps: &Replicates) -> Result<CiDiagnostics> {
    let i4 = base.block(3);
    let m = i4.len();
    let losses = reps
        .scored()
        .iter()
        .map(|f| {
            let p = f.predict_all(i4)?;
            Ok(mean_of(i4.ys().iter().zip(&p).map(|(y, p)| (y - p).powi(2)), m))
        })
        .collect::<Result<Vec<f64>>>()?;
    let a1 = quantile_a1(&losses, cfg.alpha, cfg.b_tilde)?;

    let n = data.len();
    let ybar = mean_of(data.ys().iter().copied(), n);
    let var_y = data.ys().iter().map(|y| (y - ybar).powi(2)).sum::<f64>() / (n - 1) as f64;
    let f_b1 = reps.means[cfg.b].predict_all(i4)?;
    let g_b1 = reps.variance.predict_all(i4)?;
    let mean_g_b1 = mean_of(g_b1.iter().copied(), m);
    let mean_sq_dev_b1 = mean_of(f_b1.iter().map(|f| (f - ybar).powi(2)), m);
    let mean_sq_err_b1 = mean_of(f_b1.iter().zip(i4.ys()).map(|(f, y)| (f - y).powi(2)), m);

    let ctx = CalibrationContext {
        n,
        log_power: cfg.log_power,
        var_y: Some(var_y),
        mean_sq_dev_b1: Some(mean_sq_dev_b1),
        mean_sq_err_b1: Some(mean_sq_err_b1),
        mean_g_b1: Some(mean_g_b1),
        sigma2: Some(base.sigma2),
    };
    let a0 = compute_a0(cfg.a0_variant, &ctx, cfg.alpha)?;
    let b_alpha = compute_b_alpha(cfg.b_variant, &ctx, cfg.alpha)?;
    let a_alpha = compute_a_alpha(a1, a0, base.a_n, cfg.b_tilde, &ctx, cfg.alpha)?;
    let (a2_term, a3_term) = deviation_terms(base.a_n, n, cfg.b_tilde, cfg.alpha);
    Ok(CiDiagnostics {
        n,
        a1,
        a2_term,
        a3_term,
        mean_g_b1,
        var_y,
        mean_sq_dev_b1,
        mean_sq_err_b1,
        sigma2: base.sigma2,
        a0,
        b_alpha,
        a_alpha,
        delta: half_width(a_alpha, cfg.alpha, cfg.b_tilde, b_alpha),
        degenerate_noise: base.noise.is_degenerate(),
    })
}

/// A calibrated interval: the ensemble center plus or minus `delta`.
#[derive(Debug, Clone)]
pub struct CiResult {
    pub alpha: f64,
    pub b: usize,
    pub b_tilde: usize,
    pub a_n: f64,
    pub diagnostics: CiDiagnostics,
    replicates: Vec<FittedMean>,
}

impl CiResult {
    pub fn half_width(&self) -> f64 {
        self.diagnostics.delta
    }

    /// All `B + B~` replicate means, in index order.
    pub fn replicates(&self) -> &[FittedMean] {
        &self.replicates
    }

    /// `(1/B~) sum_{j > B} f^(j)_{A_n}(x)`.
    pub fn center(&self, x: &[f64]) -> Result<f64> {
        let members = &self.replicates[self.b..];
        let mut sum = 0.0;
        for f in members {
            sum += f.predict(x)?;
        }
        Ok(sum / members.len() as f64)
    }

    pub fn interval(&self, x: &[f64]) -> Result<Interval> {
        Ok(Interval::centered(self.center(x)?, self.diagnostics.delta))
    }

    /// Pointwise `(alpha/2, 1 - alpha/2)` quantiles of all replicate predictions.
    pub fn naive_interval(&self, x: &[f64]) -> Result<Interval> {
        let preds = self.replicates.iter().map(|f| f.predict(x)).collect::<Result<Vec<_>>>()?;
        naive_interval(&preds, self.alpha)
    }

    /// Serializable summary with centers and endpoints at `points`.
    pub fn record(&self, points: &[Vec<f64>]) -> Result<CiRecord> {
        let evaluations = points
            .iter()
            .map(|x| {
                let iv = self.interval(x)?;
                Ok(CenterEvaluation {
                    x: x.clone(),
                    center: self.center(x)?,
                    lower: iv.lower,
                    upper: iv.upper,
                })
            })
            .collect::<Result<_>>()?;
        Ok(CiRecord {
            alpha: self.alpha,
            b: self.b,
            b_tilde: self.b_tilde,
            a_n: self.a_n,
            diagnostics: self.diagnostics,
            evaluations,
        })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CenterEvaluation {
    pub x: Vec<f64>,
    pub center: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CiRecord {
    pub alpha: f64,
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(rename = "B_tilde")]
    pub b_tilde: usize,
    #[serde(rename = "A_n")]
    pub a_n: f64,
    pub diagnostics: CiDiagnostics,
    pub evaluations: Vec<CenterEvaluation>,
}

impl CiRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One CSV row per evaluation point; the scalar fields repeat on each row.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let dim = self.evaluations.first().map_or(0, |e| e.x.len());
        let mut header: Vec<String> = [
            "alpha", "B", "B_tilde", "A_n", "a1", "a2_term", "a3_term", "mean_g_b1", "a0", "b_alpha",
            "a_alpha", "delta",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend((1..=dim).map(|k| format!("x_{k}")));
        header.extend(["center", "lower", "upper"].map(String::from));
        w.write_record(&header)?;
        let d = &self.diagnostics;
        for e in &self.evaluations {
            let mut row = vec![
                self.alpha.to_string(),
                self.b.to_string(),
                self.b_tilde.to_string(),
                self.a_n.to_string(),
            ];
            row.extend(
                [d.a1, d.a2_term, d.a3_term, d.mean_g_b1, d.a0, d.b_alpha, d.a_alpha, d.delta]
                    .iter()
                    .map(f64::to_string),
            );
            row.extend(e.x.iter().map(f64::to_string));
            row.extend([e.center, e.lower, e.upper].iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush().map_err(Error::io("<csv output>"))?;
        Ok(())
    }
}

/// Calibrates already-fitted refits. `cfg` may differ from the one used
/// for fitting in `alpha`, `a0_variant`, `b_variant` and `log_power` only.
pub fn assemble(cfg: &CiConfig, data: &Dataset, base: &BaseFit, reps: &Replicates) -> Result<CiResult> {
    if cfg.b != reps.b || cfg.b + cfg.b_tilde != reps.means.len() {
        return Err(Error::InvalidConfig("replicate counts do not match the configuration".into()));
    }
    let diagnostics = calibrate(cfg, data, base, reps).map_err(Error::at_stage("calibration"))?;
    Ok(CiResult {
        alpha: cfg.alpha,
        b: cfg.b,
        b_tilde: cfg.b_tilde,
        a_n: base.a_n,
        diagnostics,
        replicates: reps.means.clone(),
    })
}

/// Runs the full procedure on `data`.
pub fn build_interval(cfg: &CiConfig, data: &Dataset) -> Result<CiResult> {
    let base = prepare(cfg, data)?;
    let reps = fit_replicates(&base, cfg).map_err(Error::at_stage("bootstrap refits"))?;
    assemble(cfg, data, &base, &reps)
}
