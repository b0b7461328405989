//! Builds one calibrated confidence interval for the conditional mean and
//! compares it with the naive percentile interval from the same refits.

use hetvar::bootstrap::{build_interval, CiConfig};
use hetvar::scenarios::ScenarioSpec;
use hetvar::TrainConfig;

fn main() -> hetvar::Result<()> {
    let spec = ScenarioSpec::new(1)?;
    let data = spec.sample_dataset(2000, 3)?.dataset;
    let cfg = CiConfig {
        b: 60,
        b_tilde: 30,
        mean_train: TrainConfig::default().with_epochs(100),
        var_train: TrainConfig::default().with_epochs(100),
        replicate_train: TrainConfig::default().with_epochs(20),
        seed: 3,
        ..CiConfig::experiment_default(spec.dim())?
    };
    let ci = build_interval(&cfg, &data)?;
    let d = &ci.diagnostics;
    println!("A_n {:.3}  a1 {:.4}  a0 {:.2e}  b {:.2e}  delta {:.4}", ci.a_n, d.a1, d.a0, d.b_alpha, d.delta);

    for x in [[0.2, 0.2], [0.5, 0.5], [0.9, 0.3]] {
        let iv = ci.interval(&x)?;
        let naive = ci.naive_interval(&x)?;
        println!(
            "x={x:?} f*={:.3}  calibrated [{:.3}, {:.3}]  naive [{:.3}, {:.3}]",
            spec.f_star(&x),
            iv.lower,
            iv.upper,
            naive.lower,
            naive.upper
        );
    }
    println!("{}", ci.record(&[vec![0.5, 0.5]])?.to_json()?);
    Ok(())
}
