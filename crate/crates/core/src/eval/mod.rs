//! Experiment protocols: variance-MSE benchmarks, confidence-interval
//! coverage, and prediction intervals on tabular data.

mod benchmark;
mod coverage;
mod real_data;

pub use benchmark::{run_variance_benchmark, write_benchmark_csv, Estimator, TrialReport};
pub use coverage::{
    coverage_and_prange, run_coverage_experiment, write_coverage_csv, CiMethod, CoverageReport,
    DatasetCoverage,
};
pub use real_data::{
    prediction_interval, run_real_data_study, write_real_data_csv, CiLengthRecord, PiRecord,
    PiSummary, PredictionIntervalModel, RealDataConfig, RealDataReport,
};

/// Sample mean and standard deviation (divisor `m - 1`; zero when `m = 1`).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}
