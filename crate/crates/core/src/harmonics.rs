//! Random-harmonics benchmark: normalized random cosine series on `[0, 2π]`,
//! reconstructed from sensors confined to `[η, 2π − η]`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{assemble_bundle, compute_pod_basis, restricted_cpqr_select, AccessMask, SnapshotMatrix};
use crate::error::{Error, Result};
use crate::metrics::{relative_l2, CaseRecord, MetricReport};
use crate::penalty::BoundsSpec;
use crate::rng::{self, purpose};
use crate::solver::{cdeim_solve, deim_solve, PenaltyParams};

/// How the second parameter of the amplitude distribution `N(0, 1/k)` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeConvention {
    /// `1/k` is the variance (standard deviation `1/√k`).
    #[default]
    Variance,
    /// `1/k` is the standard deviation.
    StdDev,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarmonicsConfig {
    pub n_functions: usize,
    pub n_train: usize,
    pub grid_points: usize,
    pub n_terms: usize,
    /// Width of the inaccessible margin at each end of `[0, 2π]`.
    pub eta: f64,
    pub seed: u64,
    pub amplitude: AmplitudeConvention,
}

impl Default for HarmonicsConfig {
    fn default() -> Self {
        Self {
            n_functions: 1000,
            n_train: 800,
            grid_points: 1000,
            n_terms: 20,
            eta: 0.1 * PI,
            seed: 42,
            amplitude: AmplitudeConvention::Variance,
        }
    }
}

impl HarmonicsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_train >= self.n_functions {
            return Err(Error::validation(format!(
                "need 0 < n_train < n_functions, got {} and {}",
                self.n_train, self.n_functions
            )));
        }
        if self.grid_points < 2 {
            return Err(Error::validation("grid_points must be at least 2"));
        }
        if self.n_terms == 0 {
            return Err(Error::validation("n_terms must be positive"));
        }
        if !(self.eta >= 0.0 && self.eta < PI) {
            return Err(Error::validation(format!("eta must lie in [0, π), got {}", self.eta)));
        }
        Ok(())
    }

    /// Grid abscissae: `grid_points` equispaced values covering `[0, 2π]`.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.grid_points;
        (0..n).map(|i| TAU * i as f64 / (n - 1) as f64).collect()
    }

    /// Grid points inside `[η, 2π − η]`.
    pub fn access_mask(&self) -> AccessMask {
        let grid = self.grid();
        AccessMask::from_fn(grid.len(), |i| grid[i] >= self.eta && grid[i] <= TAU - self.eta)
    }
}

/// Train/test split of the harmonics ensemble.
#[derive(Debug, Clone)]
pub struct HarmonicsData {
    pub train: SnapshotMatrix,
    pub test: SnapshotMatrix,
}

/// Samples function `j` of the ensemble on the grid, normalized by its discrete max norm.
pub fn harmonic_function(config: &HarmonicsConfig, j: usize, grid: &[f64]) -> Vec<f64> {
    let mut rng = rng::substream(config.seed, purpose::HARMONICS, j as u64);
    let terms: Vec<(f64, f64)> = (1..=config.n_terms)
        .map(|k| {
            let scale = match config.amplitude {
                AmplitudeConvention::Variance => 1.0 / (k as f64).sqrt(),
                AmplitudeConvention::StdDev => 1.0 / k as f64,
            };
            let a = scale * rng::standard_normal(&mut rng);
            let phase = TAU * rng::uniform(&mut rng);
            (a, phase)
        })
        .collect();
    let g: Vec<f64> = grid
        .iter()
        .map(|&x| {
            terms
                .iter()
                .enumerate()
                .map(|(k, &(a, phase))| a * ((k + 1) as f64 * x + phase).cos())
                .sum()
        })
        .collect();
    let gmax = g.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    g.into_iter().map(|v| v / gmax).collect()
}

pub fn generate_harmonics(config: &HarmonicsConfig) -> Result<HarmonicsData> {
    config.validate()?;
    let grid = config.grid();
    let columns: Vec<Vec<f64>> = (0..config.n_functions)
        .into_par_iter()
        .map(|j| harmonic_function(config, j, &grid))
        .collect();
    let n = config.grid_points;
    let build = |cols: &[Vec<f64>]| {
        let mut m = DMatrix::zeros(n, cols.len());
        for (j, c) in cols.iter().enumerate() {
            m.column_mut(j).copy_from_slice(c);
        }
        SnapshotMatrix::new(m)
    };
    Ok(HarmonicsData {
        train: build(&columns[..config.n_train])?,
        test: build(&columns[config.n_train..])?,
    })
}

/// Runs DEIM and C-DEIM on every test function for each sensor count, with
/// `m = r` POD modes and sensors restricted to `[η, 2π − η]`.
pub fn run_harmonics_experiment(
    config: &HarmonicsConfig,
    sensor_counts: &[usize],
    params: &PenaltyParams,
) -> Result<MetricReport> {
    let data = generate_harmonics(config)?;
    run_harmonics_on(config, &data, sensor_counts, params)
}

/// Same as [`run_harmonics_experiment`] on an already generated ensemble.
pub fn run_harmonics_on(
    config: &HarmonicsConfig,
    data: &HarmonicsData,
    sensor_counts: &[usize],
    params: &PenaltyParams,
) -> Result<MetricReport> {
    params.validate()?;
    let Some(&max_r) = sensor_counts.iter().max() else {
        return Err(Error::validation("empty sensor count list"));
    };
    let mask = config.access_mask();
    let pod = compute_pod_basis(&data.train, max_r)?;
    let bounds = BoundsSpec::new(-1.0, 1.0)?;

    let mut cases = Vec::new();
    for &r in sensor_counts {
        let phi = pod.modes.columns(0, r).clone_owned();
        let sel = restricted_cpqr_select(&phi, &mask, r)?;
        let bundle = assemble_bundle(phi, sel.indices)?;
        let per_case: Vec<[CaseRecord; 2]> = (0..data.test.n_snapshots())
            .into_par_iter()
            .map(|case| {
                let truth: DVector<f64> = data.test.data().column(case).clone_owned();
                let y = bundle.sample(&truth).expect("grid sizes agree");
                let deim = deim_record(case, r, &bundle, &truth, &y, bounds);
                let cdeim = match cdeim_solve(&bundle, &y, bounds, params) {
                    Ok(out) => CaseRecord {
                        case,
                        r,
                        method: "cdeim".into(),
                        relative_error: relative_l2(&truth, &out.reconstruction).ok(),
                        relative_residual: Some(out.relative_obs_residual(&y)),
                        lambda_opt: Some(out.lambda_opt),
                        max_violation: Some(out.bound_violation_max),
                        forecast_error: None,
                        status: "ok".into(),
                    },
                    Err(e) => failed_record(case, r, "cdeim", &e),
                };
                [deim, cdeim]
            })
            .collect();
        cases.extend(per_case.into_iter().flatten());
    }
    Ok(MetricReport::from_cases(cases))
}

pub(crate) fn deim_record(
    case: usize,
    r: usize,
    bundle: &crate::basis::BasisBundle,
    truth: &DVector<f64>,
    y: &DVector<f64>,
    bounds: BoundsSpec,
) -> CaseRecord {
    match deim_solve(bundle, y) {
        Ok(alpha) => {
            let rec = bundle.phi() * &alpha;
            CaseRecord {
                case,
                r,
                method: "deim".into(),
                relative_error: relative_l2(truth, &rec).ok(),
                relative_residual: Some((bundle.theta() * &alpha - y).norm() / y.norm()),
                lambda_opt: None,
                max_violation: Some(bounds.max_violation(&rec)),
                forecast_error: None,
                status: "ok".into(),
            }
        }
        Err(e) => failed_record(case, r, "deim", &e),
    }
}

pub(crate) fn failed_record(case: usize, r: usize, method: &str, e: &Error) -> CaseRecord {
    CaseRecord {
        case,
        r,
        method: method.into(),
        relative_error: None,
        relative_residual: None,
        lambda_opt: None,
        max_violation: None,
        forecast_error: None,
        status: e.category().into(),
    }
}
