//! Trains a small network, saves it to the text format and reloads it.

use hetvar::relu_net::{mse_loss, train};
use hetvar::scenarios::ScenarioSpec;
use hetvar::{Network, NetworkArch, TrainConfig};

fn main() -> hetvar::Result<()> {
    let spec = ScenarioSpec::new(1)?;
    let data = spec.sample_dataset(500, 1)?.dataset;
    let arch = NetworkArch::new(2, 2, 16)?;
    let init = Network::init(arch, 1);
    let cfg = TrainConfig {
        learning_rate: 1e-2,
        ..TrainConfig::default().with_epochs(50)
    };
    let fitted = train(&init, &data, &cfg)?;
    println!("loss {:.4} -> {:.4}", mse_loss(&init, &data)?, fitted.final_loss);

    let path = std::env::temp_dir().join("hetvar_net.txt");
    fitted.network.save(&path)?;
    let back = Network::load(&path)?;
    assert_eq!(back.params(), fitted.network.params());
    println!("{} parameters round-tripped through {}", back.params().len(), path.display());
    Ok(())
}
