//! Compares backprop gradients with central differences on a few shapes.

use hetvar::relu_net::gradcheck;
use hetvar::NetworkArch;

fn main() -> hetvar::Result<()> {
    for (d, depth, width) in [(1, 1, 3), (2, 2, 8), (5, 3, 16)] {
        let arch = NetworkArch::new(d, depth, width)?;
        let r = gradcheck(arch, 7, 32);
        println!(
            "d={d} depth={depth} width={width}: {} params, max rel error {:.2e} (param {})",
            r.param_count, r.max_rel_error, r.worst_param
        );
    }
    Ok(())
}
