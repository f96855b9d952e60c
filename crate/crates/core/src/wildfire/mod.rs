//! Wildfire cellular automaton with wind-driven elliptical spread, and the
//! reconstruction/forecast experiment built on it.

mod ca;
mod config;
mod experiment;
mod rates;
mod wind;

pub use ca::{extract_state_vector, restore_state, step_fire, CellStatus, FireState};
pub use config::FireConfig;
pub use experiment::{
    fire_penalty_params, generate_fire_ensemble, run_fire_experiment, run_fire_on, FireEnsemble, FireMember,
    FireOutcome, FireRunOptions, FireSimulation, MemberInfo, SensorScenario, StateSet,
};
pub use rates::{
    compute_time_step, direction_angle, elliptical_rate, neighbor_distance, spread_rates, CellRates, SpreadRates,
    TimeStep, DIRECTIONS,
};
pub use wind::{build_wind_field, stream_function, velocity, WindDraws, WindField};
