use std::io::Write;

use crate::bootstrap::{
    assemble, fit_replicates, naive_interval, prepare, standard_bootstrap_interval, A0Variant, BVariant,
    CiConfig,
};
use crate::dataset::{Dataset, Interval};
use crate::error::{Error, Result};
use crate::scenarios::ScenarioSpec;
use crate::seed::{derive_seed, stream};

/// Interval constructions compared in coverage experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum CiMethod {
    /// Calibrated half-width with the theoretical `a0` and `b(alpha)`.
    Nn,
    /// Calibrated half-width with the plug-in `a0` and `b(alpha)`.
    NnEmp,
    /// Quantiles of the residual-bootstrap refits.
    Naive,
    /// Quantiles of pairs-bootstrap refits.
    Standard,
}

impl CiMethod {
    pub fn name(self) -> &'static str {
        match self {
            CiMethod::Nn => "NN",
            CiMethod::NnEmp => "NN_Emp",
            CiMethod::Naive => "Naive",
            CiMethod::Standard => "Standard",
        }
    }

    pub fn all() -> [CiMethod; 4] {
        [CiMethod::Nn, CiMethod::NnEmp, CiMethod::Naive, CiMethod::Standard]
    }
}

impl std::str::FromStr for CiMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CiMethod::all()
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown interval method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DatasetCoverage {
    /// Fraction of points whose interval contains the true mean.
    pub coverage: f64,
    pub mean_length: f64,
    /// `mean_length` over the range of `f*` on the points; `None` when that range is zero.
    pub prange: Option<f64>,
    pub degenerate: bool,
}

/// Containment rate and relative length of `intervals` against `truth`.
pub fn coverage_and_prange(intervals: &[Interval], truth: &[f64]) -> Result<DatasetCoverage> {
    if intervals.len() != truth.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} intervals for {} true values",
            intervals.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::EmptyInput("no evaluation points"));
    }
    let m = truth.len() as f64;
    let hits = intervals.iter().zip(truth).filter(|(iv, t)| iv.contains(**t)).count();
    let mean_length = intervals.iter().map(Interval::length).sum::<f64>() / m;
    let (lo, hi) = truth.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    let range = hi - lo;
    let degenerate = !(range > 0.0);
    Ok(DatasetCoverage {
        coverage: hits as f64 / m,
        mean_length,
        prange: (!degenerate).then(|| mean_length / range),
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CoverageReport {
    pub scenario: u8,
    pub n: usize,
    pub alpha: f64,
    pub method: CiMethod,
    pub datasets: Vec<DatasetCoverage>,
    pub coverage: f64,
    /// Mean of the per-dataset ratios over non-degenerate datasets.
    pub prange: Option<f64>,
    /// Mean half-width, for the calibrated methods.
    pub mean_delta: Option<f64>,
}

impl CoverageReport {
    fn new(scenario: u8, n: usize, alpha: f64, method: CiMethod, datasets: Vec<DatasetCoverage>, deltas: &[f64]) -> Self {
        let coverage = datasets.iter().map(|d| d.coverage).sum::<f64>() / datasets.len() as f64;
        let ratios: Vec<f64> = datasets.iter().filter_map(|d| d.prange).collect();
        let prange = (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64);
        let mean_delta = (!deltas.is_empty()).then(|| deltas.iter().sum::<f64>() / deltas.len() as f64);
        Self {
            scenario,
            n,
            alpha,
            method,
            datasets,
            coverage,
            prange,
            mean_delta,
        }
    }
}

fn with_variants(cfg: &CiConfig, a0: A0Variant, b: BVariant) -> CiConfig {
    CiConfig {
        a0_variant: a0,
        b_variant: b,
        ..*cfg
    }
}

/// For each of `datasets` fresh samples of size `n`, builds every requested
/// interval at `new_points` fresh covariates and scores it against `f*`.
///
/// `NN`, `NN_Emp` and `Naive` share one set of refits per dataset. The
/// level is `cfg.alpha`; the `a0`/`b(alpha)` variants of `cfg` are
/// overridden per method.
pub fn run_coverage_experiment(
    spec: ScenarioSpec,
    n: usize,
    cfg: &CiConfig,
    methods: &[CiMethod],
    datasets: usize,
    new_points: usize,
    seed: u64,
) -> Result<Vec<CoverageReport>> {
    if datasets == 0 || new_points == 0 {
        return Err(Error::InvalidConfig("datasets and new_points must be >= 1".into()));
    }
    if methods.is_empty() {
        return Err(Error::InvalidConfig("no interval methods requested".into()));
    }
    let mut per_method: Vec<Vec<DatasetCoverage>> = vec![Vec::new(); methods.len()];
    let mut deltas: Vec<Vec<f64>> = vec![Vec::new(); methods.len()];
    for d in 0..datasets {
        let outcome = run_dataset(spec, n, cfg, methods, new_points, derive_seed(seed, &format!("dataset/{d}")))
            .map_err(|e| Error::Trial {
                index: d,
                source: Box::new(e),
            })?;
        for (k, (cov, delta)) in outcome.into_iter().enumerate() {
            per_method[k].push(cov);
            deltas[k].extend(delta);
        }
    }
    Ok(methods
        .iter()
        .zip(per_method)
        .zip(deltas)
        .map(|((&m, covs), ds)| CoverageReport::new(spec.id(), n, cfg.alpha, m, covs, &ds))
        .collect())
}

fn run_dataset(
    spec: ScenarioSpec,
    n: usize,
    cfg: &CiConfig,
    methods: &[CiMethod],
    new_points: usize,
    seed: u64,
) -> Result<Vec<(DatasetCoverage, Option<f64>)>> {
    let data: Dataset = spec.sample_dataset(n, derive_seed(seed, "data"))?.dataset;
    let flat = spec.sample_covariates(new_points, &mut stream(seed, "points"));
    let points: Vec<Vec<f64>> = flat.chunks_exact(spec.dim()).map(<[f64]>::to_vec).collect();
    let truth: Vec<f64> = points.iter().map(|x| spec.f_star(x)).collect();
    let cfg = CiConfig {
        seed: derive_seed(seed, "ci"),
        ..*cfg
    };

    let shared = if methods.iter().any(|m| *m != CiMethod::Standard) {
        let base = prepare(&cfg, &data)?;
        let reps = fit_replicates(&base, &cfg).map_err(Error::at_stage("bootstrap refits"))?;
        Some((base, reps))
    } else {
        None
    };

    methods
        .iter()
        .map(|&method| {
            let (intervals, delta) = match (method, &shared) {
                (CiMethod::Standard, _) => (standard_bootstrap_interval(&cfg, &data, &points)?, None),
                (CiMethod::Naive, Some((_, reps))) => {
                    let ivs = points
                        .iter()
                        .map(|x| {
                            let preds = reps.means.iter().map(|f| f.predict(x)).collect::<Result<Vec<_>>>()?;
                            naive_interval(&preds, cfg.alpha)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    (ivs, None)
                }
                (CiMethod::Nn | CiMethod::NnEmp, Some((base, reps))) => {
                    let variant_cfg = if method == CiMethod::Nn {
                        with_variants(&cfg, A0Variant::Theoretical, BVariant::Theoretical)
                    } else {
                        with_variants(&cfg, A0Variant::Empirical, BVariant::Empirical)
                    };
                    let ci = assemble(&variant_cfg, &data, base, reps)?;
                    let ivs = points.iter().map(|x| ci.interval(x)).collect::<Result<Vec<_>>>()?;
                    (ivs, Some(ci.half_width()))
                }
                (_, None) => unreachable!("refits are shared whenever a refit-based method runs"),
            };
            Ok((coverage_and_prange(&intervals, &truth)?, delta))
        })
        .collect()
}

/// Columns `scenario,n,alpha,method,dataset,coverage,prange`; each report
/// ends with an aggregate row whose `dataset` is `mean`. A degenerate
/// PRange is written as an empty cell.
pub fn write_coverage_csv<W: Write>(reports: &[CoverageReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "n", "alpha", "method", "dataset", "coverage", "prange"])?;
    let fmt = |p: Option<f64>| p.map(|v| v.to_string()).unwrap_or_default();
    for r in reports {
        let prefix = [r.scenario.to_string(), r.n.to_string(), r.alpha.to_string(), r.method.name().to_string()];
        for (d, cov) in r.datasets.iter().enumerate() {
            let mut rec = prefix.to_vec();
            rec.extend([d.to_string(), cov.coverage.to_string(), fmt(cov.prange)]);
            w.write_record(&rec)?;
        }
        let mut rec = prefix.to_vec();
        rec.extend(["mean".to_string(), r.coverage.to_string(), fmt(r.prange)]);
        w.write_record(&rec)?;
    }
    w.flush().map_err(Error::io("<csv output>"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relu_net::{NetworkArch, TrainConfig};
    use proptest::prelude::*;

    #[test]
    fn huge_intervals_cover_everything() {
        let truth = [0.3, -2.0, 5.0];
        let ivs = vec![Interval::centered(0.0, 1e12); 3];
        assert_eq!(coverage_and_prange(&ivs, &truth).unwrap().coverage, 1.0);
    }

    #[test]
    fn exact_zero_width_intervals() {
        let truth = [0.3, -2.0, 5.0];
        let ivs: Vec<Interval> = truth.iter().map(|&t| Interval::new(t, t)).collect();
        let c = coverage_and_prange(&ivs, &truth).unwrap();
        assert_eq!(c.coverage, 1.0);
        assert_eq!(c.prange, Some(0.0));
    }

    #[test]
    fn constant_truth_is_flagged() {
        let c = coverage_and_prange(&[Interval::new(0.0, 1.0); 2], &[0.5, 0.5]).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.prange, None);
    }

    #[test]
    fn method_names_parse() {
        for m in CiMethod::all() {
            assert_eq!(m.name().parse::<CiMethod>().unwrap(), m);
        }
    }

    #[test]
    fn small_experiment_runs() {
        let arch = NetworkArch::new(2, 1, 8).unwrap();
        let train = TrainConfig::default().with_epochs(3);
        let cfg = CiConfig {
            b: 4,
            b_tilde: 2,
            mean_arch: arch,
            var_arch: arch,
            mean_train: train,
            var_train: train,
            replicate_train: train,
            standard_resamples: 5,
            ..CiConfig::experiment_default(2).unwrap()
        };
        let spec = ScenarioSpec::new(1).unwrap();
        let reports = run_coverage_experiment(spec, 40, &cfg, &CiMethod::all(), 2, 6, 1).unwrap();
        assert_eq!(reports.len(), 4);
        for r in &reports {
            assert!((0.0..=1.0).contains(&r.coverage));
            assert_eq!(r.datasets.len(), 2);
        }
        assert!(reports[0].mean_delta.unwrap() > 0.0);
        assert!(reports[2].mean_delta.is_none());
        let again = run_coverage_experiment(spec, 40, &cfg, &CiMethod::all(), 2, 6, 1).unwrap();
        assert_eq!(reports, again);
    }

    proptest! {
        #[test]
        fn containment_matches_brute_force(
            rows in prop::collection::vec((-3.0f64..3.0, 0.0f64..2.0, -3.0f64..3.0), 1..50)
        ) {
            let ivs: Vec<Interval> = rows.iter().map(|&(c, h, _)| Interval::centered(c, h)).collect();
            let truth: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let got = coverage_and_prange(&ivs, &truth).unwrap().coverage;
            let mut hits = 0;
            for (&(c, h, t), _) in rows.iter().zip(&ivs) {
                if c - h <= t && t <= c + h {
                    hits += 1;
                }
            }
            prop_assert_eq!(got, hits as f64 / rows.len() as f64);
        }
    }
}
