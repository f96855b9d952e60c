//! Field reconstruction from sparse point sensors with a reduced basis,
//! keeping the reconstruction inside known physical bounds.
//!
//! Plain DEIM interpolates the sensor readings exactly and can overshoot the
//! admissible range between sensors. The constrained variant adds a cubic
//! penalty on range violations and picks the smallest penalty weight that
//! drives the total penalty below a small threshold.
//!
//! ```no_run
//! use cdeim::basis::{assemble_bundle, compute_pod_basis, cpqr_select, SnapshotMatrix};
//! use cdeim::penalty::BoundsSpec;
//! use cdeim::solver::{cdeim_solve, PenaltyParams};
//! # fn main() -> cdeim::error::Result<()> {
//! let snapshots = SnapshotMatrix::new(cdeim::io::read_matrix("snapshots.cdmx")?)?;
//! let pod = compute_pod_basis(&snapshots, 20)?;
//! let sensors = cpqr_select(&pod.modes, 20)?;
//! let bundle = assemble_bundle(pod.modes, sensors.indices)?;
//! let y = cdeim::io::read_vector("readings.csv")?;
//! let out = cdeim_solve(&bundle, &y, BoundsSpec::new(0.0, 1.0)?, &PenaltyParams::default())?;
//! println!("lambda = {}, max violation = {}", out.lambda_opt, out.bound_violation_max);
//! # Ok(())
//! # }
//! ```
//!
//! [`harmonics`] and [`wildfire`] generate the two benchmark ensembles, and
//! [`cli`] backs the `cdeim` binary.

pub mod basis;
pub mod cli;
pub mod error;
pub mod harmonics;
pub mod io;
pub mod metrics;
pub mod penalty;
pub mod rng;
pub mod solver;
pub mod wildfire;
