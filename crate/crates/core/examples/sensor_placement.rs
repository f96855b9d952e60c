//! Sensor placement on a POD basis: unrestricted Q-DEIM pivots versus pivots
//! restricted to the interior of the domain, with the conditioning of the
//! sampled basis for each.
//!
//!     cargo run --release --example sensor_placement [r]

use std::f64::consts::PI;

use cdeim::basis::{assemble_bundle, compute_pod_basis, cpqr_select, restricted_cpqr_select};
use cdeim::harmonics::{generate_harmonics, HarmonicsConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20);
    let config = HarmonicsConfig {
        n_functions: 400,
        n_train: 300,
        ..HarmonicsConfig::default()
    };
    let data = generate_harmonics(&config)?;
    let pod = compute_pod_basis(&data.train, r)?;
    let grid = config.grid();

    let s = &pod.singular_values;
    println!("leading singular values: {:?}", s[..r.min(s.len())].iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());

    let free = cpqr_select(&pod.modes, r)?;
    let restricted = restricted_cpqr_select(&pod.modes, &config.access_mask(), r)?;
    for (name, sel) in [("unrestricted", free), ("restricted", restricted)] {
        let bundle = assemble_bundle(pod.modes.clone(), sel.indices.clone())?;
        let xs: Vec<String> = sel.indices.iter().map(|&i| format!("{:.2}", grid[i] / PI)).collect();
        println!("\n{name}");
        println!("  sensor positions / π: {}", xs.join(" "));
        println!(
            "  sigma_min(Θ) = {:.4e}, last pivot |R_rr| = {:.4e}",
            bundle.sigma_min(),
            sel.pivot_magnitudes.last().copied().unwrap_or(0.0)
        );
    }
    println!("\naccessible interval: [{:.2}π, {:.2}π]", config.eta / PI, 2.0 - config.eta / PI);
    Ok(())
}
