//! Prediction intervals on the bundled housing stand-in data.

use hetvar::eval::{run_real_data_study, RealDataConfig};
use hetvar::io::{load_csv, minmax_scale};
use hetvar::variance::{Strategy, VarianceFitConfig, VarianceKind};
use hetvar::{NetworkArch, TrainConfig};

fn main() -> hetvar::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/housing_standin.csv");
    let table = load_csv(path, &["MedInc", "AveOccup", "Population"], "MedHouseVal")?.log_transform_target()?;
    let (table, scaling) = minmax_scale(&table)?;
    println!("{} rows, feature ranges {:?} .. {:?}", table.len(), scaling.mins, scaling.maxs);
    let data = table.to_dataset()?;

    let arch = NetworkArch::new(data.dim(), 2, 32)?;
    let train = TrainConfig::default().with_epochs(100);
    let cfg = RealDataConfig {
        fit: VarianceFitConfig {
            mean_arch: arch,
            mean_train: train,
            var_arch: arch,
            var_train: train,
            mean_clip: None,
            var_clip: None,
        },
        methods: vec![VarianceKind::Residual, VarianceKind::Direct, VarianceKind::Homoscedastic],
        strategy: Strategy::Split,
        ci: None,
    };
    let report = run_real_data_study(&data, 150, 5, &[0.05, 0.1], &cfg, 0)?;
    for s in report.summary() {
        println!("{:<14} {:>3.0}% PI coverage {:.3} ({:.3})", s.method.name(), 100.0 * (1.0 - s.alpha), s.mean, s.std);
    }
    Ok(())
}
