//! Residual vs direct vs homoscedastic variance estimates on scenario 2.
//!
//! `cargo run --release --example variance_benchmark`

use hetvar::eval::{run_variance_benchmark, Estimator};
use hetvar::scenarios::ScenarioSpec;
use hetvar::variance::{Strategy, VarianceFitConfig, VarianceKind};
use hetvar::TrainConfig;

fn main() -> hetvar::Result<()> {
    let spec = ScenarioSpec::new(2)?;
    let fit = VarianceFitConfig::experiment_default(spec.dim(), TrainConfig::default().with_epochs(100))?;
    let estimators = [
        Estimator::Network(VarianceKind::Residual),
        Estimator::Network(VarianceKind::Direct),
        Estimator::Network(VarianceKind::Homoscedastic),
        Estimator::Oracle,
    ];
    for strategy in [Strategy::Full, Strategy::Split] {
        let reports = run_variance_benchmark(spec, 1000, 3, strategy, &estimators, &fit, 42)?;
        for r in reports {
            println!("{:<5} {:<7} mse {:.4} ({:.4})", strategy.name(), r.estimator.name(), r.mean, r.std);
        }
    }
    Ok(())
}
