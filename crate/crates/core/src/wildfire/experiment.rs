use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ca::{restore_state, step_fire, FireState};
use super::rates::{compute_time_step, spread_rates, SpreadRates, TimeStep};
use super::wind::{build_wind_field, WindDraws};
use super::FireConfig;
use crate::basis::{assemble_bundle, compute_pod_basis, restricted_cpqr_select, AccessMask, BasisBundle, SnapshotMatrix};
use crate::error::{Error, Result};
use crate::harmonics::failed_record;
use crate::metrics::{relative_l2, CaseRecord, MetricReport};
use crate::penalty::BoundsSpec;
use crate::rng::{self, purpose};
use crate::solver::{cdeim_solve, deim_solve, threshold_reconstruction, PenaltyParams};

/// Where the sensors of the wildfire experiment may go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensorScenario {
    /// Restricted CPQR on the horizontal sensor lines; one placement for all test cases.
    RestrictedCpqrLines,
    /// `r` distinct cells drawn per test case from the cells burning at the snapshot time.
    RandomBurning,
}

impl SensorScenario {
    pub fn name(self) -> &'static str {
        match self {
            SensorScenario::RestrictedCpqrLines => "restricted-cpqr-lines",
            SensorScenario::RandomBurning => "random-burning",
        }
    }
}

impl fmt::Display for SensorScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SensorScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "restricted-cpqr-lines" | "lines" => Ok(SensorScenario::RestrictedCpqrLines),
            "random-burning" | "random" => Ok(SensorScenario::RandomBurning),
            _ => Err(Error::validation(format!(
                "unknown sensor scenario {s:?}; expected restricted-cpqr-lines or random-burning"
            ))),
        }
    }
}

/// One automaton run with its wind realization.
#[derive(Debug, Clone)]
pub struct FireSimulation {
    pub index: usize,
    pub draws: WindDraws,
    pub rates: SpreadRates,
    pub time_step: TimeStep,
    pub state: FireState,
}

impl FireSimulation {
    /// Ensemble member `index` of the configured seed, ignited at step 0.
    pub fn new(config: &FireConfig, index: usize) -> Result<Self> {
        Self::with_draws(config, index, WindDraws::for_member(config.seed, index))
    }

    pub fn with_draws(config: &FireConfig, index: usize, draws: WindDraws) -> Result<Self> {
        config.validate()?;
        let rates = spread_rates(&build_wind_field(config, &draws));
        let time_step = compute_time_step(&rates, config.cell_length, config.sim_time)?;
        let mut state = FireState::new(config.nx(), config.ny(), config.cell_length, time_step.dt);
        state.ignite(config.ignition_cell());
        Ok(Self { index, draws, rates, time_step, state })
    }

    pub fn advance(&mut self, steps: usize) {
        for _ in 0..steps {
            step_fire(&mut self.state, &self.rates);
        }
    }
}

/// Summary of a generated ensemble member.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberInfo {
    pub index: usize,
    pub draws: WindDraws,
    pub time_step: TimeStep,
    /// Ignited cells at the snapshot time.
    pub ignited: usize,
}

/// A test member: snapshot, true state one leg later, and the cells burning at the snapshot.
#[derive(Debug, Clone)]
pub struct FireMember {
    pub info: MemberInfo,
    pub snapshot: DVector<f64>,
    pub future: DVector<f64>,
    pub burning: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct FireEnsemble {
    pub train: SnapshotMatrix,
    pub train_info: Vec<MemberInfo>,
    pub test: Vec<FireMember>,
}

/// Runs members `0..n_train` (training) and `n_train..n_train+n_test` (test).
pub fn generate_fire_ensemble(config: &FireConfig) -> Result<FireEnsemble> {
    config.validate()?;
    let train_runs: Vec<(MemberInfo, DVector<f64>)> = (0..config.n_train)
        .into_par_iter()
        .map(|i| {
            let mut sim = FireSimulation::new(config, i)?;
            sim.advance(sim.time_step.steps);
            Ok((info(&sim), sim.state.state_vector()))
        })
        .collect::<Result<_>>()?;
    let test = (config.n_train..config.n_train + config.n_test)
        .into_par_iter()
        .map(|i| {
            let mut sim = FireSimulation::new(config, i)?;
            let k = sim.time_step.steps;
            sim.advance(k);
            let info = info(&sim);
            let snapshot = sim.state.state_vector();
            let burning = sim.state.burning_cells();
            sim.advance(k);
            Ok(FireMember { info, snapshot, future: sim.state.state_vector(), burning })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut train = DMatrix::zeros(config.n_cells(), config.n_train);
    let mut train_info = Vec::with_capacity(config.n_train);
    for (j, (inf, s)) in train_runs.into_iter().enumerate() {
        train.set_column(j, &s);
        train_info.push(inf);
    }
    Ok(FireEnsemble { train: SnapshotMatrix::new(train)?, train_info, test })
}

fn info(sim: &FireSimulation) -> MemberInfo {
    MemberInfo {
        index: sim.index,
        draws: sim.draws,
        time_step: sim.time_step,
        ignited: sim.state.ignited_count(),
    }
}

/// Default solver parameters for the wildfire experiment (`λ_init = 10⁻⁶`).
pub fn fire_penalty_params() -> PenaltyParams {
    PenaltyParams { lambda_init: 1e-6, ..PenaltyParams::default() }
}

/// What [`run_fire_on`] computes besides the reconstruction metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FireRunOptions {
    /// Restart the automaton from each thresholded reconstruction and score the forecast.
    pub forecast: bool,
    /// Keep every reconstruction (and forecast) state vector in the outcome.
    pub keep_states: bool,
}

/// Reconstructed and forecast state vectors of one `(r, method)` pair, one column per test case.
#[derive(Debug, Clone)]
pub struct StateSet {
    pub r: usize,
    pub method: String,
    pub reconstructions: DMatrix<f64>,
    pub forecasts: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct FireOutcome {
    pub report: MetricReport,
    /// Empty unless [`FireRunOptions::keep_states`] was set.
    pub states: Vec<StateSet>,
}

/// Generates the ensemble and runs [`run_fire_on`] with forecasts.
pub fn run_fire_experiment(
    config: &FireConfig,
    scenario: SensorScenario,
    sensor_counts: &[usize],
    params: &PenaltyParams,
) -> Result<FireOutcome> {
    let ensemble = generate_fire_ensemble(config)?;
    let options = FireRunOptions { forecast: true, keep_states: false };
    run_fire_on(config, &ensemble, scenario, sensor_counts, params, options)
}

struct CaseOutput {
    record: CaseRecord,
    reconstruction: Option<DVector<f64>>,
    forecast: Option<DVector<f64>>,
}

impl From<CaseRecord> for CaseOutput {
    fn from(record: CaseRecord) -> Self {
        Self { record, reconstruction: None, forecast: None }
    }
}

/// DEIM and C-DEIM reconstructions of every test snapshot with `m = r` POD
/// modes and bounds `[0, 1]`. With forecasts enabled, each reconstruction is
/// thresholded, used to restart the automaton, and compared with the true
/// state one leg later.
pub fn run_fire_on(
    config: &FireConfig,
    ensemble: &FireEnsemble,
    scenario: SensorScenario,
    sensor_counts: &[usize],
    params: &PenaltyParams,
    options: FireRunOptions,
) -> Result<FireOutcome> {
    params.validate()?;
    let Some(&max_r) = sensor_counts.iter().max() else {
        return Err(Error::validation("empty sensor count list"));
    };
    if sensor_counts.contains(&0) {
        return Err(Error::validation("sensor counts must be positive"));
    }
    let pod = compute_pod_basis(&ensemble.train, max_r)?;
    let bases: Vec<DMatrix<f64>> = sensor_counts.iter().map(|&r| pod.modes.columns(0, r).clone_owned()).collect();
    let fixed: Vec<Option<BasisBundle>> = match scenario {
        SensorScenario::RestrictedCpqrLines => {
            let rows = config.sensor_rows();
            let nx = config.nx();
            let mask = AccessMask::from_fn(config.n_cells(), |c| rows.contains(&(c / nx)));
            bases
                .iter()
                .zip(sensor_counts)
                .map(|(phi, &r)| {
                    let sel = restricted_cpqr_select(phi, &mask, r)?;
                    assemble_bundle(phi.clone(), sel.indices).map(Some)
                })
                .collect::<Result<_>>()?
        }
        SensorScenario::RandomBurning => vec![None; sensor_counts.len()],
    };
    let bounds = BoundsSpec::new(0.0, 1.0)?;

    let per_case: Vec<Vec<CaseOutput>> = ensemble
        .test
        .par_iter()
        .enumerate()
        .map(|(case, member)| {
            let rates = options.forecast.then(|| {
                let draws = member.info.draws;
                spread_rates(&build_wind_field(config, &draws))
            });
            let mut out: Vec<CaseOutput> = Vec::with_capacity(2 * sensor_counts.len());
            for (k, &r) in sensor_counts.iter().enumerate() {
                let sampled;
                let bundle = match &fixed[k] {
                    Some(b) => b,
                    None => match random_bundle(config, member, &bases[k], r) {
                        Ok(b) => {
                            sampled = b;
                            &sampled
                        }
                        Err(e) => {
                            out.push(failed_record(case, r, "deim", &e).into());
                            out.push(failed_record(case, r, "cdeim", &e).into());
                            continue;
                        }
                    },
                };
                let y = bundle.sample(&member.snapshot).expect("grid sizes agree");
                let truth = &member.snapshot;

                let deim = deim_solve(bundle, &y).map(|alpha| {
                    let rec = bundle.phi() * &alpha;
                    let residual = (bundle.theta() * &alpha - &y).norm() / y.norm();
                    (rec, residual, None)
                });
                let cdeim = cdeim_solve(bundle, &y, bounds, params)
                    .map(|o| (o.reconstruction.clone(), o.relative_obs_residual(&y), Some(o.lambda_opt)));

                for (method, result) in [("deim", deim), ("cdeim", cdeim)] {
                    match result {
                        Ok((rec, residual, lambda_opt)) => {
                            let forecast = rates
                                .as_ref()
                                .map(|rates| forecast_from(config, member, rates, &rec, bounds))
                                .transpose()?;
                            let record = CaseRecord {
                                case,
                                r,
                                method: method.into(),
                                relative_error: relative_l2(truth, &rec).ok(),
                                relative_residual: Some(residual),
                                lambda_opt,
                                max_violation: Some(bounds.max_violation(&rec)),
                                forecast_error: forecast.as_ref().map(|f| f.0),
                                status: "ok".into(),
                            };
                            let keep = options.keep_states;
                            out.push(CaseOutput {
                                record,
                                reconstruction: keep.then_some(rec),
                                forecast: forecast.filter(|_| keep).map(|f| f.1),
                            });
                        }
                        Err(e) => out.push(failed_record(case, r, method, &e).into()),
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut outputs: Vec<CaseOutput> = per_case.into_iter().flatten().collect();
    outputs.sort_by_key(|o| (sensor_counts.iter().position(|&r| r == o.record.r), o.record.case));

    let mut states = Vec::new();
    if options.keep_states {
        let n = config.n_cells();
        let n_test = ensemble.test.len();
        for &r in sensor_counts {
            for method in ["deim", "cdeim"] {
                let mut recs = DMatrix::zeros(n, n_test);
                let mut fcs = options.forecast.then(|| DMatrix::zeros(n, n_test));
                for o in outputs.iter().filter(|o| o.record.r == r && o.record.method == method) {
                    if let Some(v) = &o.reconstruction {
                        recs.set_column(o.record.case, v);
                    }
                    if let (Some(m), Some(v)) = (fcs.as_mut(), &o.forecast) {
                        m.set_column(o.record.case, v);
                    }
                }
                states.push(StateSet { r, method: method.into(), reconstructions: recs, forecasts: fcs });
            }
        }
    }
    let report = MetricReport::from_cases(outputs.into_iter().map(|o| o.record).collect());
    Ok(FireOutcome { report, states })
}

fn random_bundle(config: &FireConfig, member: &FireMember, phi: &DMatrix<f64>, r: usize) -> Result<BasisBundle> {
    let burning = &member.burning;
    if burning.len() < r {
        return Err(Error::validation(format!(
            "only {} burning cells for {r} random sensors",
            burning.len()
        )));
    }
    let stream = ((member.info.index as u64) << 20) | r as u64;
    let mut rng = rng::substream(config.seed, purpose::FIRE_SENSORS, stream);
    let mut sensors: Vec<usize> = index::sample(&mut rng, burning.len(), r).into_iter().map(|i| burning[i]).collect();
    sensors.sort_unstable();
    assemble_bundle(phi.clone(), sensors)
}

/// Relative error and final state of the forecast started from a reconstructed snapshot.
fn forecast_from(
    config: &FireConfig,
    member: &FireMember,
    rates: &SpreadRates,
    reconstruction: &DVector<f64>,
    bounds: BoundsSpec,
) -> Result<(f64, DVector<f64>)> {
    let ts = member.info.time_step;
    let t = ts.steps as f64 * ts.dt;
    let start = threshold_reconstruction(reconstruction, bounds, ts.dt / t);
    let mut state = restore_state(&start, rates, config.cell_length, ts.dt, ts.steps)?;
    for _ in 0..ts.steps {
        step_fire(&mut state, rates);
    }
    let end = state.state_vector();
    Ok((relative_l2(&member.future, &end)?, end))
}
