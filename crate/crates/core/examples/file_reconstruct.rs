//! File-based pipeline with the library I/O: write snapshots to disk, build a
//! basis and sensors from the files, then reconstruct a held-out field read
//! back from a CSV vector.
//!
//!     cargo run --release --example file_reconstruct [dir]

use std::path::PathBuf;

use cdeim::basis::{assemble_bundle, compute_pod_basis, cpqr_select, SnapshotMatrix};
use cdeim::io::{read_matrix, read_sensors, read_vector, write_matrix, write_sensors, write_vector};
use cdeim::metrics::relative_l2;
use cdeim::penalty::BoundsSpec;
use cdeim::solver::{cdeim_solve, deim_solve, PenaltyParams};
use nalgebra::{DMatrix, DVector};

/// Gaussian bumps of random centre and width, scaled into [0, 1].
fn bump(n: usize, centre: f64, width: f64) -> DVector<f64> {
    DVector::from_fn(n, |i, _| {
        let x = i as f64 / (n - 1) as f64;
        (-((x - centre) / width).powi(2)).exp()
    })
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("cdeim_file_example"));
    std::fs::create_dir_all(&dir)?;

    let n = 400;
    let mut cols = Vec::new();
    for k in 0..120 {
        let t = k as f64 / 119.0;
        cols.push(bump(n, 0.15 + 0.7 * t, 0.04 + 0.06 * ((7.0 * t).sin().abs())));
    }
    let snapshots = DMatrix::from_columns(&cols);
    write_matrix(&snapshots, dir.join("snapshots.cdmx"))?;
    write_vector(&bump(n, 0.52, 0.05), dir.join("truth.csv"))?;

    let snapshots = SnapshotMatrix::new(read_matrix(dir.join("snapshots.cdmx"))?)?;
    let r = 14;
    let pod = compute_pod_basis(&snapshots, r)?;
    let sel = cpqr_select(&pod.modes, r)?;
    write_sensors(&sel.indices, dir.join("sensors.txt"))?;

    let bundle = assemble_bundle(pod.modes, read_sensors(dir.join("sensors.txt"))?)?;
    let truth = read_vector(dir.join("truth.csv"))?;
    let y = bundle.sample(&truth)?;
    let bounds = BoundsSpec::new(0.0, 1.0)?;

    let deim = bundle.phi() * deim_solve(&bundle, &y)?;
    let out = cdeim_solve(&bundle, &y, bounds, &PenaltyParams::default())?;
    write_vector(&out.reconstruction, dir.join("reconstruction.cdmx"))?;

    println!("files in {}", dir.display());
    println!(
        "DEIM   : rel. error {:.4}, max violation {:.3e}",
        relative_l2(&truth, &deim)?,
        bounds.max_violation(&deim)
    );
    println!(
        "C-DEIM : rel. error {:.4}, max violation {:.3e}, λ_opt {:.3e}",
        relative_l2(&truth, &out.reconstruction)?,
        out.bound_violation_max,
        out.lambda_opt
    );
    Ok(())
}
