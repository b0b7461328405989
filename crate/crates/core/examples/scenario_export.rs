//! Writes a sample of every scenario to CSV and reads one back.

use hetvar::io::{load_csv, write_scenario_csv};
use hetvar::scenarios::ScenarioSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("hetvar_scenarios");
    std::fs::create_dir_all(&dir)?;
    for spec in ScenarioSpec::all() {
        let sample = spec.sample_dataset(500, u64::from(spec.id()))?;
        let path = dir.join(format!("scenario_{}.csv", spec.id()));
        let file = std::fs::File::create(&path)?;
        write_scenario_csv(&sample, file)?;
        let g_max = sample.g_values.iter().cloned().fold(0.0, f64::max);
        println!("scenario {} (d={}, {:?} noise): max g* {:.3} -> {}", spec.id(), spec.dim(), spec.noise_law(), g_max, path.display());
    }
    let back = load_csv(dir.join("scenario_1.csv"), &["x_1", "x_2"], "f_star")?;
    println!("read back {} rows of scenario 1", back.len());
    Ok(())
}
