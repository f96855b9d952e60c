//! Command-line front end.
//!
//! Every subcommand resolves its parameters from built-in defaults, then an
//! optional TOML file (`--config`), then flags. Outputs go to the directory
//! given by `--output-dir`, the file's `output_dir`, or `$CDEIM_OUTPUT_DIR`,
//! in that order, falling back to the working directory. Each run leaves a
//! `manifest.toml` there with the resolved parameters.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::basis::{assemble_bundle, compute_pod_basis, cpqr_select, restricted_cpqr_select, AccessMask, SnapshotMatrix};
use crate::error::{Error, Result};
use crate::harmonics::{run_harmonics_experiment, AmplitudeConvention, HarmonicsConfig};
use crate::io::{read_matrix, read_sensors, read_vector, write_matrix, write_sensors, write_vector};
use crate::metrics::MetricReport;
use crate::penalty::BoundsSpec;
use crate::solver::{cdeim_solve, deim_solve, PenaltyParams};
use crate::wildfire::{
    fire_penalty_params, generate_fire_ensemble, run_fire_on, FireConfig, FireRunOptions, SensorScenario,
};

pub const OUTPUT_DIR_ENV: &str = "CDEIM_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "cdeim", version, about = "Bound-constrained DEIM reconstruction and benchmarks")]
struct Cli {
    /// TOML file with `seed`, `output_dir`, `threads` and `[harmonics]`, `[fire]`, `[penalty]` tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: `$CDEIM_OUTPUT_DIR`, else the working directory).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads for ensemble loops.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// POD basis of a snapshot matrix.
    Pod(PodArgs),
    /// Sensor placement by (restricted) column-pivoted QR.
    Sensors(SensorArgs),
    /// DEIM and C-DEIM reconstruction of one observation vector.
    Reconstruct(ReconstructArgs),
    /// Random-harmonics benchmark.
    Harmonics(HarmonicsArgs),
    /// Generate the wildfire ensemble.
    FireSim(FireArgs),
    /// Wildfire reconstructions.
    FireRecon(FireReconArgs),
    /// Wildfire reconstructions and forecasts from them.
    FireForecast(FireReconArgs),
    /// Summarize a per-case metrics CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct PodArgs {
    #[arg(long)]
    snapshots: PathBuf,
    #[arg(long)]
    modes: usize,
    #[arg(long, default_value = "phi.cdmx")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SensorArgs {
    #[arg(long)]
    phi: PathBuf,
    #[arg(long)]
    r: usize,
    /// Accessible grid indices, one per line; all points when omitted.
    #[arg(long)]
    accessible: Option<PathBuf>,
    #[arg(long, default_value = "sensors.txt")]
    out: PathBuf,
}

#[derive(Debug, Args, Default)]
struct PenaltyFlags {
    #[arg(long)]
    lambda_init: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    tau_lambda: Option<f64>,
    #[arg(long)]
    max_newton_iters: Option<usize>,
    #[arg(long)]
    lambda_cap: Option<f64>,
}

impl PenaltyFlags {
    fn apply(&self, p: &mut PenaltyParams) {
        set(&mut p.lambda_init, self.lambda_init);
        set(&mut p.gamma, self.gamma);
        set(&mut p.delta, self.delta);
        set(&mut p.tau, self.tau);
        set(&mut p.tau_lambda, self.tau_lambda);
        set(&mut p.max_newton_iters, self.max_newton_iters);
        set(&mut p.lambda_cap, self.lambda_cap);
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    #[arg(long)]
    phi: PathBuf,
    #[arg(long)]
    sensors: PathBuf,
    #[arg(long)]
    y: PathBuf,
    /// Lower and upper bound.
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], allow_negative_numbers = true, required = true)]
    bounds: Vec<f64>,
    #[command(flatten)]
    penalty: PenaltyFlags,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AmplitudeArg {
    Variance,
    StdDev,
}

#[derive(Debug, Args)]
struct HarmonicsArgs {
    /// Sensor counts.
    #[arg(long, value_delimiter = ',')]
    r: Vec<usize>,
    #[arg(long)]
    n_functions: Option<usize>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    n_terms: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    /// Whether `1/k` is the variance or the standard deviation of the amplitudes.
    #[arg(long, value_enum)]
    amplitude: Option<AmplitudeArg>,
    #[command(flatten)]
    penalty: PenaltyFlags,
}

#[derive(Debug, Args)]
struct FireArgs {
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    /// Snapshot time in seconds.
    #[arg(long)]
    sim_time: Option<f64>,
    #[arg(long)]
    v0: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioArg {
    RestrictedCpqrLines,
    RandomBurning,
}

impl From<ScenarioArg> for SensorScenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::RestrictedCpqrLines => SensorScenario::RestrictedCpqrLines,
            ScenarioArg::RandomBurning => SensorScenario::RandomBurning,
        }
    }
}

#[derive(Debug, Args)]
struct FireReconArgs {
    #[command(flatten)]
    fire: FireArgs,
    #[arg(long, value_enum, default_value = "restricted-cpqr-lines")]
    scenario: ScenarioArg,
    #[arg(long, value_delimiter = ',')]
    r: Vec<usize>,
    /// Skip writing the reconstructed state vectors.
    #[arg(long)]
    no_states: bool,
    #[command(flatten)]
    penalty: PenaltyFlags,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Per-case CSV written by `harmonics`, `fire-recon` or `fire-forecast`.
    #[arg(long)]
    cases: PathBuf,
    #[arg(long, default_value = "summary.csv")]
    out: PathBuf,
}

/// Parses `argv` (program name first), runs the command and returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            e.exit_code()
        }
    }
}

/// Settings shared by all subcommands after merging file and flags.
struct Context {
    file: toml::Table,
    output_dir: PathBuf,
    seed: Option<u64>,
}

impl Context {
    fn section(&self, name: &str) -> Result<Option<&toml::Table>> {
        match self.file.get(name) {
            None => Ok(None),
            Some(toml::Value::Table(t)) => Ok(Some(t)),
            Some(_) => Err(Error::validation(format!("config key {name:?} must be a table"))),
        }
    }

    fn out(&self, name: impl AsRef<Path>) -> PathBuf {
        self.output_dir.join(name)
    }
}

const TOP_LEVEL_KEYS: [&str; 6] = ["seed", "output_dir", "threads", "harmonics", "fire", "penalty"];

fn load_file(path: Option<&Path>) -> Result<toml::Table> {
    let Some(path) = path else { return Ok(toml::Table::new()) };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::format(path, e.to_string()))?;
    if let Some(key) = table.keys().find(|k| !TOP_LEVEL_KEYS.contains(&k.as_str())) {
        return Err(Error::format(path, format!("unknown key {key:?}")));
    }
    Ok(table)
}

/// Overlays the keys of `table` onto `base`, rejecting keys `base` does not have.
fn overlay<T: Serialize + DeserializeOwned>(base: T, table: Option<&toml::Table>, what: &str) -> Result<T> {
    let Some(table) = table else { return Ok(base) };
    let mut merged = toml::Table::try_from(&base).map_err(|e| Error::validation(e.to_string()))?;
    for (k, v) in table {
        if !merged.contains_key(k) {
            return Err(Error::validation(format!("unknown key {k:?} in [{what}]")));
        }
        merged.insert(k.clone(), v.clone());
    }
    merged.try_into().map_err(|e: toml::de::Error| Error::validation(format!("[{what}]: {e}")))
}

fn execute(cli: Cli, argv: &[OsString]) -> Result<()> {
    let file = load_file(cli.config.as_deref())?;
    let file_int = |key: &str| -> Result<Option<i64>> {
        match file.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) => Ok(Some(*i)),
            Some(_) => Err(Error::validation(format!("config key {key:?} must be an integer"))),
        }
    };
    let seed = match cli.seed {
        Some(s) => Some(s),
        None => file_int("seed")?.map(|s| s as u64),
    };
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => file_int("threads")?.map(|t| t.max(0) as usize),
    };
    let output_dir = cli
        .output_dir
        .clone()
        .or_else(|| file.get("output_dir").and_then(|v| v.as_str()).map(PathBuf::from))
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&output_dir).map_err(|e| Error::io(&output_dir, e))?;
    let ctx = Context { file, output_dir, seed };

    let run = || dispatch(&cli.command, &ctx, argv);
    match threads {
        Some(0) => Err(Error::validation("--threads must be positive")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::validation(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

/// Accumulates the manifest of one run.
struct Manifest {
    command: &'static str,
    started: Instant,
    parameters: toml::Table,
    outputs: Vec<PathBuf>,
}

impl Manifest {
    fn new(command: &'static str) -> Self {
        Self { command, started: Instant::now(), parameters: toml::Table::new(), outputs: Vec::new() }
    }

    fn param(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        let v = toml::Value::try_from(value).map_err(|e| Error::validation(e.to_string()))?;
        self.parameters.insert(key.into(), v);
        Ok(())
    }

    fn write_text(&mut self, path: PathBuf, text: &str) -> Result<()> {
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        self.outputs.push(path);
        Ok(())
    }

    fn write_matrix(&mut self, path: PathBuf, m: &DMatrix<f64>) -> Result<()> {
        write_matrix(m, &path)?;
        self.outputs.push(path);
        Ok(())
    }

    fn finish(self, ctx: &Context, argv: &[OsString]) -> Result<()> {
        let mut t = toml::Table::new();
        t.insert("command".into(), self.command.into());
        t.insert(
            "argv".into(),
            toml::Value::Array(argv.iter().map(|a| a.to_string_lossy().into_owned().into()).collect()),
        );
        t.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        if let Some(seed) = ctx.seed {
            t.insert("seed".into(), toml::Value::Integer(seed as i64));
        }
        let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        t.insert("finished_unix".into(), toml::Value::Integer(started as i64));
        t.insert("wall_time_seconds".into(), self.started.elapsed().as_secs_f64().into());
        t.insert("threads".into(), toml::Value::Integer(rayon::current_num_threads() as i64));
        t.insert(
            "outputs".into(),
            toml::Value::Array(self.outputs.iter().map(|p| p.display().to_string().into()).collect()),
        );
        t.insert("parameters".into(), toml::Value::Table(self.parameters));
        let path = ctx.out("manifest.toml");
        let text = toml::to_string(&t).map_err(|e| Error::validation(e.to_string()))?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

fn dispatch(command: &Command, ctx: &Context, argv: &[OsString]) -> Result<()> {
    let manifest = match command {
        Command::Pod(a) => pod(a, ctx)?,
        Command::Sensors(a) => sensors(a, ctx)?,
        Command::Reconstruct(a) => reconstruct(a, ctx)?,
        Command::Harmonics(a) => harmonics(a, ctx)?,
        Command::FireSim(a) => fire_sim(a, ctx)?,
        Command::FireRecon(a) => fire_recon(a, ctx, false)?,
        Command::FireForecast(a) => fire_recon(a, ctx, true)?,
        Command::Report(a) => report(a, ctx)?,
    };
    manifest.finish(ctx, argv)
}

fn penalty_params(ctx: &Context, base: PenaltyParams, flags: &PenaltyFlags) -> Result<PenaltyParams> {
    let mut p = overlay(base, ctx.section("penalty")?, "penalty")?;
    flags.apply(&mut p);
    p.validate()?;
    Ok(p)
}

fn pod(a: &PodArgs, ctx: &Context) -> Result<Manifest> {
    let mut man = Manifest::new("pod");
    man.param("snapshots", a.snapshots.display().to_string())?;
    man.param("modes", a.modes)?;
    let snapshots = SnapshotMatrix::new(read_matrix(&a.snapshots)?)?;
    let basis = compute_pod_basis(&snapshots, a.modes)?;
    man.write_matrix(ctx.out(&a.out), &basis.modes)?;
    let sv = DMatrix::from_column_slice(basis.singular_values.len(), 1, &basis.singular_values);
    man.write_matrix(ctx.out("singular_values.csv"), &sv)?;
    println!(
        "{} modes of a {}x{} snapshot matrix (numerical rank {})",
        a.modes,
        snapshots.grid_size(),
        snapshots.n_snapshots(),
        basis.rank
    );
    Ok(man)
}

fn sensors(a: &SensorArgs, ctx: &Context) -> Result<Manifest> {
    let mut man = Manifest::new("sensors");
    man.param("phi", a.phi.display().to_string())?;
    man.param("r", a.r)?;
    let phi = read_matrix(&a.phi)?;
    let sel = match &a.accessible {
        Some(path) => {
            man.param("accessible", path.display().to_string())?;
            let mask = AccessMask::from_indices(phi.nrows(), &read_sensors(path)?)?;
            restricted_cpqr_select(&phi, &mask, a.r)?
        }
        None => cpqr_select(&phi, a.r)?,
    };
    if sel.is_rank_deficient() {
        eprintln!("warning: sampled basis is numerically rank deficient; trailing pivots are near zero");
    }
    let path = ctx.out(&a.out);
    write_sensors(&sel.indices, &path)?;
    man.outputs.push(path);
    let pivots = DMatrix::from_column_slice(sel.pivot_magnitudes.len(), 1, &sel.pivot_magnitudes);
    man.write_matrix(ctx.out("pivots.csv"), &pivots)?;
    println!("{} sensors selected", sel.indices.len());
    Ok(man)
}

#[derive(Serialize)]
struct OutcomeRecord {
    lambda_opt: f64,
    penalty_value: f64,
    obs_residual: f64,
    relative_obs_residual: f64,
    residual_bound: f64,
    sigma_min: f64,
    newton_iterations: usize,
    bisection_steps: usize,
    max_violation: f64,
    deim_max_violation: f64,
}

fn reconstruct(a: &ReconstructArgs, ctx: &Context) -> Result<Manifest> {
    let mut man = Manifest::new("reconstruct");
    let params = penalty_params(ctx, PenaltyParams::default(), &a.penalty)?;
    let bounds = BoundsSpec::new(a.bounds[0], a.bounds[1])?;
    man.param("phi", a.phi.display().to_string())?;
    man.param("sensors", a.sensors.display().to_string())?;
    man.param("y", a.y.display().to_string())?;
    man.param("bounds", [bounds.u_min(), bounds.u_max()])?;
    man.param("penalty", params)?;

    let bundle = assemble_bundle(read_matrix(&a.phi)?, read_sensors(&a.sensors)?)?;
    let y = read_vector(&a.y)?;
    let deim = bundle.phi() * deim_solve(&bundle, &y)?;
    let out = cdeim_solve(&bundle, &y, bounds, &params)?;
    let record = OutcomeRecord {
        lambda_opt: out.lambda_opt,
        penalty_value: out.penalty_value,
        obs_residual: out.obs_residual,
        relative_obs_residual: out.relative_obs_residual(&y),
        residual_bound: out.residual_bound,
        sigma_min: out.sigma_min,
        newton_iterations: out.newton_iterations_total,
        bisection_steps: out.bisection_steps,
        max_violation: out.bound_violation_max,
        deim_max_violation: bounds.max_violation(&deim),
    };
    let text = toml::to_string(&record).map_err(|e| Error::validation(e.to_string()))?;
    man.write_text(ctx.out("outcome.toml"), &text)?;
    let path = ctx.out("reconstruction.cdmx");
    write_vector(&out.reconstruction, &path)?;
    man.outputs.push(path);
    let path = ctx.out("deim_reconstruction.cdmx");
    write_vector(&deim, &path)?;
    man.outputs.push(path);
    println!(
        "lambda_opt = {:e}, penalty = {:e}, relative residual = {:.4}, max violation = {:e}",
        record.lambda_opt, record.penalty_value, record.relative_obs_residual, record.max_violation
    );
    Ok(man)
}

fn harmonics_config(a: &HarmonicsArgs, ctx: &Context) -> Result<HarmonicsConfig> {
    let mut c = overlay(HarmonicsConfig::default(), ctx.section("harmonics")?, "harmonics")?;
    set(&mut c.n_functions, a.n_functions);
    set(&mut c.n_train, a.n_train);
    set(&mut c.grid_points, a.grid_points);
    set(&mut c.n_terms, a.n_terms);
    set(&mut c.eta, a.eta);
    set(&mut c.seed, ctx.seed);
    if let Some(amp) = a.amplitude {
        c.amplitude = match amp {
            AmplitudeArg::Variance => AmplitudeConvention::Variance,
            AmplitudeArg::StdDev => AmplitudeConvention::StdDev,
        };
    }
    c.validate()?;
    Ok(c)
}

fn harmonics(a: &HarmonicsArgs, ctx: &Context) -> Result<Manifest> {
    let mut man = Manifest::new("harmonics");
    let config = harmonics_config(a, ctx)?;
    let params = penalty_params(ctx, PenaltyParams::default(), &a.penalty)?;
    let counts = if a.r.is_empty() { vec![5, 10, 15, 20, 25, 30, 35] } else { a.r.clone() };
    man.param("harmonics", config)?;
    man.param("penalty", params)?;
    man.param("r", &counts)?;
    let report = run_harmonics_experiment(&config, &counts, &params)?;
    man.write_text(ctx.out("harmonics_summary.csv"), &report.summary_csv())?;
    man.write_text(ctx.out("harmonics_cases.csv"), &report.cases_csv())?;
    print!("{}", format_table(&report));
    Ok(man)
}

fn fire_config(a: &FireArgs, ctx: &Context) -> Result<FireConfig> {
    let mut c = overlay(FireConfig::default(), ctx.section("fire")?, "fire")?;
    set(&mut c.n_train, a.n_train);
    set(&mut c.n_test, a.n_test);
    set(&mut c.sim_time, a.sim_time);
    set(&mut c.v0, a.v0);
    set(&mut c.epsilon, a.epsilon);
    set(&mut c.seed, ctx.seed);
    c.validate()?;
    Ok(c)
}

fn fire_sim(a: &FireArgs, ctx: &Context) -> Result<Manifest> {
    let mut man = Manifest::new("fire-sim");
    let config = fire_config(a, ctx)?;
    man.param("fire", &config)?;
    let ens = generate_fire_ensemble(&config)?;
    man.write_matrix(ctx.out("fire_train.cdmx"), ens.train.data())?;
    let n = config.n_cells();
    let test = DMatrix::from_fn(n, ens.test.len(), |i, j| ens.test[j].snapshot[i]);
    let future = DMatrix::from_fn(n, ens.test.len(), |i, j| ens.test[j].future[i]);
    man.write_matrix(ctx.out("fire_test.cdmx"), &test)?;
    man.write_matrix(ctx.out("fire_test_future.cdmx"), &future)?;

    let mut runs = String::from("member,split,seed,a,b,phi1,phi2,dt,steps,ignited,burning\n");
    let rows = ens
        .train_info
        .iter()
        .map(|i| (i, "train", None))
        .chain(ens.test.iter().map(|m| (&m.info, "test", Some(m.burning.len()))));
    for (info, split, burning) in rows {
        let d = info.draws;
        let _ = writeln!(
            runs,
            "{},{split},{},{},{},{},{},{},{},{},{}",
            info.index,
            config.seed,
            d.a,
            d.b,
            d.phi1,
            d.phi2,
            info.time_step.dt,
            info.time_step.steps,
            info.ignited,
            burning.map(|b| b.to_string()).unwrap_or_default()
        );
    }
    man.write_text(ctx.out("fire_runs.csv"), &runs)?;
    println!("{} training and {} test runs on a {}x{} grid", config.n_train, config.n_test, config.nx(), config.ny());
    Ok(man)
}

fn fire_recon(a: &FireReconArgs, ctx: &Context, forecast: bool) -> Result<Manifest> {
    let mut man = Manifest::new(if forecast { "fire-forecast" } else { "fire-recon" });
    let config = fire_config(&a.fire, ctx)?;
    let params = penalty_params(ctx, fire_penalty_params(), &a.penalty)?;
    let scenario = SensorScenario::from(a.scenario);
    let counts = if a.r.is_empty() { vec![10, 20, 30, 40, 50, 60, 70] } else { a.r.clone() };
    man.param("fire", &config)?;
    man.param("penalty", params)?;
    man.param("scenario", scenario.name())?;
    man.param("r", &counts)?;

    let ens = generate_fire_ensemble(&config)?;
    let options = FireRunOptions { forecast, keep_states: !a.no_states };
    let outcome = run_fire_on(&config, &ens, scenario, &counts, &params, options)?;
    let stem = format!("fire_{}", scenario.name().replace('-', "_"));
    man.write_text(ctx.out(format!("{stem}_summary.csv")), &outcome.report.summary_csv())?;
    man.write_text(ctx.out(format!("{stem}_cases.csv")), &outcome.report.cases_csv())?;
    for set in &outcome.states {
        let base = format!("{stem}_r{}_{}", set.r, set.method);
        man.write_matrix(ctx.out(format!("{base}.cdmx")), &set.reconstructions)?;
        if let Some(f) = &set.forecasts {
            man.write_matrix(ctx.out(format!("{base}_forecast.cdmx")), f)?;
        }
    }
    print!("{}", format_table(&outcome.report));
    Ok(man)
}

fn report(a: &ReportArgs, ctx: &Context) -> Result<Manifest> {
    let mut man = Manifest::new("report");
    man.param("cases", a.cases.display().to_string())?;
    let text = fs::read_to_string(&a.cases).map_err(|e| Error::io(&a.cases, e))?;
    let cases = MetricReport::parse_cases_csv(&text).map_err(|msg| Error::format(&a.cases, msg))?;
    let report = MetricReport::from_cases(cases);
    man.write_text(ctx.out(&a.out), &report.summary_csv())?;
    print!("{}", format_table(&report));
    Ok(man)
}

fn format_table(report: &MetricReport) -> String {
    let mut out = String::from("   r  method  mean error   ci95      mean residual  failed  max violation  forecast\n");
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{:>4}  {:<6}  {:>10.4}  {:>8.4}  {:>13.4}  {:>6}  {:>13.3e}  {}",
            row.r,
            row.method,
            row.mean_error,
            row.error_ci95,
            row.mean_residual,
            row.n_failed,
            row.max_violation,
            row.mean_forecast_error.map(|f| format!("{f:.4}")).unwrap_or_else(|| "-".into())
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_rejects_unknown_keys() {
        let t: toml::Table = "delta = 1e-5".parse().unwrap();
        let p = overlay(PenaltyParams::default(), Some(&t), "penalty").unwrap();
        assert_eq!(p.delta, 1e-5);
        assert_eq!(p.gamma, 10.0);
        let bad: toml::Table = "detla = 1e-5".parse().unwrap();
        assert!(overlay(PenaltyParams::default(), Some(&bad), "penalty").is_err());
    }

    #[test]
    fn overlay_keeps_command_defaults() {
        let t: toml::Table = "gamma = 5.0".parse().unwrap();
        let p = overlay(fire_penalty_params(), Some(&t), "penalty").unwrap();
        assert_eq!((p.lambda_init, p.gamma), (1e-6, 5.0));
    }

    #[test]
    fn fire_table_round_trips_through_toml() {
        let t: toml::Table = "ignition = [100.0, 50.0]\nn_train = 3".parse().unwrap();
        let c = overlay(FireConfig::default(), Some(&t), "fire").unwrap();
        assert_eq!(c.ignition, (100.0, 50.0));
        assert_eq!(c.n_train, 3);
    }

    #[test]
    fn bounds_take_negative_values() {
        let cli = Cli::try_parse_from(["cdeim", "reconstruct", "--phi", "p", "--sensors", "s", "--y", "y", "--bounds", "-1", "1"])
            .unwrap();
        match cli.command {
            Command::Reconstruct(a) => assert_eq!(a.bounds, vec![-1.0, 1.0]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_cli(["cdeim", "frobnicate"]), 2);
        assert_eq!(run_cli(["cdeim", "pod", "--modes", "3"]), 2);
    }
}
