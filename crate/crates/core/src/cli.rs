//! The `statelearn` command-line tool.
//!
//! Every command writes a `RunManifest` next to its output. `replay` reruns
//! a manifest after checking that its inputs are unchanged.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::calibrate::{calibrate, write_calibration_csv, CalibrationCell};
use crate::error::Error;
use crate::io::{read_frame_path, write_frame};
use crate::irf::{fit_var1, irf_statespace, irf_var1_fitted, IrfRequest};
use crate::model::{fit_params, StateSpaceParams};
use crate::preprocess::detrend;
use crate::scoring::ScoreKey;
use crate::search::{monte_carlo, run_search, write_results_csv, write_tally_csv, SearchConfig};
use crate::simulate::{simulate, SimConfig, DEFAULT_BURN_IN};
use crate::stats::DEFAULT_GUARD_TOL;
use crate::validity::Strategy;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NO_MODEL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "statelearn", version, about = "Learn the state variables of a linear state-space model from data")]
pub struct Cli {
    /// Worker threads (0 = one per core). Does not affect results.
    #[arg(long, global = true, env = "STATELEARN_JOBS", default_value_t = 0)]
    pub jobs: usize,
    /// JSON object supplying any flag of the chosen command; flags given on
    /// the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a sample from a preset or a parameter file.
    Simulate(SimulateArgs),
    /// Replace each column by the residuals of its own AR(1) fit.
    Detrend(DetrendArgs),
    /// Search for the valid partition with the fewest states.
    Learn(LearnArgs),
    /// Tally search winners over simulated replications.
    Montecarlo(MonteCarloArgs),
    /// Empirical size and power of the diagonality test over a grid.
    Calibrate(CalibrateArgs),
    /// Impulse responses of a fitted model or of a VAR(1) on data.
    Irf(IrfArgs),
    /// Rerun a command from its manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// small-rbc-like or medium-nk-like.
    #[arg(long, conflicts_with = "params")]
    pub preset: Option<String>,
    /// Model JSON (as written to winner.json by `learn`).
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DetrendArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SearchArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    /// multiple, srivastava or score-only.
    #[arg(long)]
    pub test: Option<String>,
    /// Ranking key in score-only mode: loglik, bic or aic.
    #[arg(long)]
    pub score: Option<String>,
    /// Largest number of states considered (default k - 2).
    #[arg(long)]
    pub max_states: Option<usize>,
    /// Residual-to-raw variance ratio below which a correlation test passes.
    #[arg(long)]
    pub guard_tol: Option<f64>,
    /// Leave out the endogenous-state/lagged-exogenous obligations.
    #[arg(long)]
    #[serde(default)]
    pub skip_endo_lagexo: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct LearnArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory for results.csv, search.json, winner.json and
    /// manifest.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MonteCarloArgs {
    #[arg(long, conflicts_with = "params")]
    pub preset: Option<String>,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Rows per replication.
    #[arg(long)]
    pub n: Option<usize>,
    /// Master seed; replication seeds are derived from it.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CalibrateArgs {
    /// Significance levels (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Sample sizes.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Dimensions of the tested covariance.
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<usize>>,
    /// Pairwise correlations (0 measures size).
    #[arg(long, value_delimiter = ',')]
    pub correlation: Option<Vec<f64>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct IrfArgs {
    /// Model JSON (as written to winner.json by `learn`).
    #[arg(long, conflicts_with = "data")]
    pub model: Option<PathBuf>,
    /// Data CSV for the VAR(1) baseline; requires --var1.
    #[arg(long, requires = "var1")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    #[serde(default)]
    pub var1: bool,
    /// Variable receiving the impulse.
    #[arg(long)]
    pub shock: Option<String>,
    /// Impulse size in shock standard deviations.
    #[arg(long)]
    pub magnitude: Option<f64>,
    /// Periods after impact; the output has horizon + 1 periods.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Iterate a VAR(1) even if its coefficient matrix is explosive.
    #[arg(long)]
    #[serde(default)]
    pub allow_nonstationary: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write to this path instead of the recorded output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        Ok(Self {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

/// What ran, with what inputs, and what it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    /// Fully resolved options, defaults included.
    pub config: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub seed: Option<u64>,
    pub version: String,
    pub jobs: usize,
    pub duration_secs: f64,
    pub exit_code: i32,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_data_error() { EXIT_DATA } else { EXIT_USAGE };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Outcome of one command before the manifest is written.
struct Done {
    config: Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    manifest: PathBuf,
    seed: Option<u64>,
    code: i32,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Messages go to stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let argv = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn execute(cli: Cli, argv: Vec<String>) -> CliResult<i32> {
    let config = match &cli.config {
        Some(path) => Some(read_config(path)?),
        None => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))?;
    let jobs = cli.jobs;
    pool.install(|| match cli.command {
        Command::Replay(r) => replay(&r, jobs, argv),
        cmd => {
            let (name, args) = command_value(&cmd)?;
            let merged = merge(args, config.as_ref())?;
            dispatch(name, merged, jobs, argv)
        }
    })
}

fn read_config(path: &Path) -> CliResult<Map<String, Value>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::usage(format!("{}: config must be a JSON object", path.display()))),
        Err(e) => Err(CliError::usage(format!("{}: {e}", path.display()))),
    }
}

fn command_value(cmd: &Command) -> CliResult<(&'static str, Value)> {
    let json = |v: Result<Value, serde_json::Error>| v.map_err(|e| CliError::usage(e.to_string()));
    Ok(match cmd {
        Command::Simulate(a) => ("simulate", json(serde_json::to_value(a))?),
        Command::Detrend(a) => ("detrend", json(serde_json::to_value(a))?),
        Command::Learn(a) => ("learn", json(serde_json::to_value(a))?),
        Command::Montecarlo(a) => ("montecarlo", json(serde_json::to_value(a))?),
        Command::Calibrate(a) => ("calibrate", json(serde_json::to_value(a))?),
        Command::Irf(a) => ("irf", json(serde_json::to_value(a))?),
        Command::Replay(_) => unreachable!("handled before"),
    })
}

/// Fills flags left unset on the command line (null or false) from the
/// config file.
fn merge(mut args: Value, config: Option<&Map<String, Value>>) -> CliResult<Value> {
    if let (Value::Object(a), Some(c)) = (&mut args, config) {
        for (k, v) in c {
            match a.get(k) {
                None => return Err(CliError::usage(format!("config key `{k}` is not an option of this command"))),
                Some(Value::Null) | Some(Value::Bool(false)) => {
                    a.insert(k.clone(), v.clone());
                }
                Some(_) => {}
            }
        }
    }
    Ok(args)
}

fn parse<T: DeserializeOwned>(v: Value) -> CliResult<T> {
    serde_json::from_value(v).map_err(|e| CliError::usage(format!("invalid option: {e}")))
}

fn dispatch(name: &str, args: Value, jobs: usize, argv: Vec<String>) -> CliResult<i32> {
    let start = Instant::now();
    let done = match name {
        "simulate" => cmd_simulate(parse(args)?)?,
        "detrend" => cmd_detrend(parse(args)?)?,
        "learn" => cmd_learn(parse(args)?, jobs)?,
        "montecarlo" => cmd_montecarlo(parse(args)?, jobs)?,
        "calibrate" => cmd_calibrate(parse(args)?)?,
        "irf" => cmd_irf(parse(args)?)?,
        other => return Err(CliError::usage(format!("unknown command `{other}`"))),
    };
    let manifest = RunManifest {
        command: name.to_string(),
        argv,
        config: done.config,
        inputs: done.inputs.iter().map(|p| FileDigest::of(p)).collect::<CliResult<_>>()?,
        outputs: done.outputs.iter().map(|p| FileDigest::of(p)).collect::<CliResult<_>>()?,
        seed: done.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        jobs,
        duration_secs: start.elapsed().as_secs_f64(),
        exit_code: done.code,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::usage(e.to_string()))?;
    fs::write(&done.manifest, text + "\n").map_err(|e| CliError::data(format!("{}: {e}", done.manifest.display())))?;
    Ok(done.code)
}

fn replay(r: &ReplayArgs, jobs: usize, argv: Vec<String>) -> CliResult<i32> {
    let m = RunManifest::read(&r.manifest)?;
    for input in &m.inputs {
        let now = FileDigest::of(&input.path)?;
        if now.sha256 != input.sha256 {
            return Err(CliError::data(format!(
                "input {} has changed since the manifest was written",
                input.path.display()
            )));
        }
    }
    let mut config = m.config;
    if let (Some(out), Value::Object(c)) = (&r.out, &mut config) {
        c.insert("out".into(), Value::String(out.to_string_lossy().into_owned()));
    }
    dispatch(&m.command, config, jobs, argv)
}

fn required<T: Clone>(v: &Option<T>, flag: &str) -> CliResult<T> {
    v.clone().ok_or_else(|| CliError::usage(format!("missing required option --{flag}")))
}

/// Inputs are recorded as absolute paths so a manifest can be replayed from
/// any directory.
fn absolute(p: &Path) -> CliResult<PathBuf> {
    fs::canonicalize(p).map_err(|e| CliError::data(format!("{}: {e}", p.display())))
}

fn sibling_manifest(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn to_value<T: Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::usage(e.to_string()))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, v).map_err(|e| CliError::usage(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::data(e.to_string()))
}

fn read_params(path: &Path) -> CliResult<StateSpaceParams> {
    let text = fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// The simulation named by `--preset` or `--params`, with `inputs` extended
/// by the parameter file.
fn sim_source(preset: &mut Option<String>, params: &mut Option<PathBuf>, inputs: &mut Vec<PathBuf>) -> CliResult<SimConfig> {
    match (preset.as_deref(), params.as_ref()) {
        (Some(_), Some(_)) => Err(CliError::usage("give either --preset or --params, not both")),
        (Some(name), None) => Ok(crate::simulate::preset(name)?),
        (None, Some(path)) => {
            let path = absolute(path)?;
            let cfg = SimConfig::new(read_params(&path)?, 0, 0);
            inputs.push(path.clone());
            *params = Some(path);
            Ok(cfg)
        }
        (None, None) => {
            *preset = Some("small-rbc-like".into());
            Ok(crate::simulate::preset("small-rbc-like")?)
        }
    }
}

fn cmd_simulate(mut a: SimulateArgs) -> CliResult<Done> {
    let mut inputs = Vec::new();
    let mut sim = sim_source(&mut a.preset, &mut a.params, &mut inputs)?;
    sim.n = required(&a.n, "n")?;
    sim.seed = *a.seed.get_or_insert(0);
    sim.burn_in = *a.burn_in.get_or_insert(DEFAULT_BURN_IN);
    let out = required(&a.out, "out")?;
    let frame = simulate(&sim)?;
    write_frame(&frame, create(&out)?)?;
    println!("wrote {} rows x {} columns to {}", frame.len(), frame.width(), out.display());
    Ok(Done {
        config: to_value(&a)?,
        inputs,
        manifest: sibling_manifest(&out),
        outputs: vec![out],
        seed: Some(sim.seed),
        code: EXIT_OK,
    })
}

fn cmd_detrend(mut a: DetrendArgs) -> CliResult<Done> {
    let input = absolute(&required(&a.input, "input")?)?;
    a.input = Some(input.clone());
    let out = required(&a.out, "out")?;
    let frame = detrend(&read_frame_path(&input)?)?;
    write_frame(&frame, create(&out)?)?;
    Ok(Done {
        config: to_value(&a)?,
        inputs: vec![input],
        manifest: sibling_manifest(&out),
        outputs: vec![out],
        seed: None,
        code: EXIT_OK,
    })
}

fn search_config(s: &mut SearchArgs, jobs: usize) -> CliResult<SearchConfig> {
    let strategy: Strategy = s.test.get_or_insert_with(|| "multiple".into()).parse()?;
    let score: ScoreKey = s.score.get_or_insert_with(|| "loglik".into()).parse()?;
    Ok(SearchConfig {
        alpha: *s.alpha.get_or_insert(0.05),
        strategy,
        score,
        max_states: s.max_states,
        guard_tol: *s.guard_tol.get_or_insert(DEFAULT_GUARD_TOL),
        parallelism: jobs,
        include_endo_lagexo: !s.skip_endo_lagexo,
    })
}

fn cmd_learn(mut a: LearnArgs, jobs: usize) -> CliResult<Done> {
    let input = absolute(&required(&a.input, "input")?)?;
    a.input = Some(input.clone());
    let dir = required(&a.out, "out")?;
    let cfg = search_config(&mut a.search, jobs)?;
    let frame = read_frame_path(&input)?;
    if frame.width() < 3 {
        return Err(CliError::data(format!(
            "the search needs at least 3 observables, {} has {}",
            input.display(),
            frame.width()
        )));
    }
    let res = run_search(&frame, &cfg)?;
    fs::create_dir_all(&dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;

    let results = dir.join("results.csv");
    write_results_csv(&res, cfg.score, create(&results)?)?;
    let search = dir.join("search.json");
    write_json(&search, &res)?;
    let mut outputs = vec![results, search];
    let winner = dir.join("winner.json");
    let code = match res.winner() {
        Some(w) => {
            let params = fit_params(&frame, &w.partition)?;
            write_json(&winner, &params)?;
            outputs.push(winner);
            println!("winner: {}", w.partition);
            EXIT_OK
        }
        None => {
            // A stale winner from an earlier run would contradict this one.
            let _ = fs::remove_file(&winner);
            println!("no valid model among {} candidates", res.models_tested);
            EXIT_NO_MODEL
        }
    };
    Ok(Done {
        config: to_value(&a)?,
        inputs: vec![input],
        outputs,
        manifest: dir.join("manifest.json"),
        seed: None,
        code,
    })
}

fn cmd_montecarlo(mut a: MonteCarloArgs, jobs: usize) -> CliResult<Done> {
    let mut inputs = Vec::new();
    let mut sim = sim_source(&mut a.preset, &mut a.params, &mut inputs)?;
    let reps = required(&a.reps, "reps")?;
    let n = *a.n.get_or_insert(100);
    sim.seed = *a.seed.get_or_insert(0);
    sim.burn_in = *a.burn_in.get_or_insert(DEFAULT_BURN_IN);
    let out = required(&a.out, "out")?;
    let cfg = search_config(&mut a.search, jobs)?;
    let mc = monte_carlo(&cfg, &sim, reps, n)?;
    write_tally_csv(&mc, create(&out)?)?;
    println!(
        "{} replications: {} without a valid model, {} skipped, {} partitions ever valid out of {}",
        mc.reps,
        mc.no_winner,
        mc.skipped.len(),
        mc.rows.len(),
        mc.candidates_considered
    );
    for s in &mc.skipped {
        eprintln!("replication {} (seed {}) skipped: {}", s.rep, s.seed, s.error);
    }
    Ok(Done {
        config: to_value(&a)?,
        inputs,
        manifest: sibling_manifest(&out),
        outputs: vec![out],
        seed: Some(sim.seed),
        code: EXIT_OK,
    })
}

fn cmd_calibrate(mut a: CalibrateArgs) -> CliResult<Done> {
    let alphas = a.alpha.get_or_insert_with(|| vec![0.05]).clone();
    let ns = a.n.get_or_insert_with(|| vec![500]).clone();
    let ps = a.p.get_or_insert_with(|| vec![5]).clone();
    let rhos = a.correlation.get_or_insert_with(|| vec![0.0]).clone();
    let reps = *a.reps.get_or_insert(1_000);
    let seed = *a.seed.get_or_insert(0);
    let out = required(&a.out, "out")?;
    let mut cells = Vec::new();
    for &alpha in &alphas {
        for &n in &ns {
            for &p in &ps {
                for &correlation in &rhos {
                    cells.push(CalibrationCell {
                        alpha,
                        n,
                        p,
                        correlation,
                        repetitions: reps,
                    });
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(CliError::usage("empty calibration grid"));
    }
    let rows = calibrate(&cells, seed)?;
    write_calibration_csv(&rows, create(&out)?)?;
    Ok(Done {
        config: to_value(&a)?,
        inputs: vec![],
        manifest: sibling_manifest(&out),
        outputs: vec![out],
        seed: Some(seed),
        code: EXIT_OK,
    })
}

fn cmd_irf(mut a: IrfArgs) -> CliResult<Done> {
    let shock = required(&a.shock, "shock")?;
    let magnitude = *a.magnitude.get_or_insert(1.0);
    let horizon = required(&a.horizon, "horizon")?;
    let out = required(&a.out, "out")?;
    let periods = horizon + 1;
    let (path, input) = match (&a.model, &a.data, a.var1) {
        (Some(m), None, false) => {
            let m = absolute(m)?;
            let req = IrfRequest {
                model: read_params(&m)?,
                shocked: shock,
                magnitude,
                horizon: periods,
            };
            a.model = Some(m.clone());
            (irf_statespace(&req)?, m)
        }
        (None, Some(d), true) => {
            let d = absolute(d)?;
            let fit = fit_var1(&read_frame_path(&d)?)?;
            a.data = Some(d.clone());
            (irf_var1_fitted(&fit, &shock, magnitude, periods, a.allow_nonstationary)?, d)
        }
        (None, None, _) => return Err(CliError::usage("give --model, or --data with --var1")),
        _ => return Err(CliError::usage("--model cannot be combined with --data/--var1, and --data needs --var1")),
    };
    path.write_csv(create(&out)?)?;
    Ok(Done {
        config: to_value(&a)?,
        inputs: vec![input],
        manifest: sibling_manifest(&out),
        outputs: vec![out],
        seed: None,
        code: EXIT_OK,
    })
}
