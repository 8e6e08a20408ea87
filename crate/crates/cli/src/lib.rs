//! `genprob` command line: predict, retrodict, simulate and verify.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 domain failure (including
//! a failed property battery), 3 statistically inconsistent simulation,
//! 4 inconclusive simulation.

pub mod input;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use genprob::battery::{replay_case, run_battery, BatteryOptions, FrameFixture, Replay};
use genprob::prelude::*;
use genprob::simulator::{Comparison, CONSISTENCY_SIGMAS};
use serde::Serialize;

use input::{InputError, ScenarioFile};
use report::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_INCONSISTENT: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

const DEFAULT_SAMPLES: u64 = 100_000;

#[derive(Debug, Parser)]
#[command(name = "genprob", version, about = "General probability law for non-standard measurement procedures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Emit the report as JSON.
    #[arg(long, global = true)]
    machine_readable: bool,
    /// Comma-separated `key=value` pairs; keys herm, psd, trace, den.
    #[arg(long, global = true, value_name = "SPEC")]
    tolerance_overrides: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Outcome probabilities of a procedure for the file's state or ensemble.
    Predict {
        #[arg(long)]
        file: PathBuf,
    },
    /// Probabilities of each preparation given the observed outcome.
    Retrodict {
        #[arg(long)]
        file: PathBuf,
    },
    /// Monte-Carlo post-selection experiment compared against the analytic values.
    Simulate {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<u64>,
        /// Run batches on one thread.
        #[arg(long)]
        sequential: bool,
        /// Shift the first analytic target by this many standard errors.
        #[arg(long, hide = true, value_name = "SIGMAS")]
        corrupt_analytic: Option<f64>,
    },
    /// Randomized property battery.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Re-run one case from a serialized replay record.
        #[arg(long, value_name = "JSON")]
        replay: Option<String>,
        #[arg(long, hide = true, value_enum)]
        inject_frame: Option<InjectedFrame>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InjectedFrame {
    TraceSquared,
}

/// Why a command did not produce a report.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Input(InputError),
    Domain(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) | Failure::Input(_) => EXIT_USAGE,
            Failure::Domain(_) => EXIT_DOMAIN,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Input(e) => format!("input: {e}"),
            Failure::Domain(m) => m.clone(),
        }
    }
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e)
    }
}

impl From<genprob::Error> for Failure {
    fn from(e: genprob::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

struct Emitted {
    text: String,
    code: i32,
}

/// Runs the CLI with `args` (including the program name) and returns the exit code.
pub fn run(args: impl IntoIterator<Item = impl Into<OsString> + Clone>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    let echo: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let machine = cli.machine_readable;
    match dispatch(cli, echo) {
        Ok(emitted) => {
            let _ = write!(out, "{}", emitted.text);
            emitted.code
        }
        Err(failure) => {
            let code = failure.code();
            let _ = writeln!(err, "error: {}", failure.message());
            if machine {
                let body = serde_json::json!({ "error": failure.message(), "exit_code": code, "version": VERSION });
                let _ = writeln!(out, "{body:#}");
            }
            code
        }
    }
}

fn dispatch(cli: Cli, echo: Vec<String>) -> Result<Emitted, Failure> {
    if let Some(spec) = &cli.tolerance_overrides {
        let t = Tolerances::DEFAULT.with_overrides(spec).map_err(|e| Failure::Usage(e.to_string()))?;
        t.install();
    }
    let machine = cli.machine_readable;
    match cli.command {
        Command::Predict { file } => {
            let f = load(&file)?;
            let res = predict(&f)?;
            Ok(emit(envelope(echo, Some(f.digest), res), machine, EXIT_OK))
        }
        Command::Retrodict { file } => {
            let f = load(&file)?;
            let res = retrodict_cmd(&f)?;
            Ok(emit(envelope(echo, Some(f.digest), res), machine, EXIT_OK))
        }
        Command::Simulate { file, seed, samples, sequential, corrupt_analytic } => {
            let f = load(&file)?;
            let mode = if sequential { ExecutionMode::Sequential } else { ExecutionMode::default() };
            let res = simulate(&f, seed, samples, mode, corrupt_analytic)?;
            let code = match res.status {
                SimulationStatus::Consistent => EXIT_OK,
                SimulationStatus::Inconsistent => EXIT_INCONSISTENT,
                SimulationStatus::Inconclusive => EXIT_INCONCLUSIVE,
            };
            Ok(emit(envelope(echo, Some(f.digest), res), machine, code))
        }
        Command::Verify { seed, dims, trials, replay, inject_frame } => {
            if let Some(json) = replay {
                let r: Replay = serde_json::from_str(&json).map_err(|e| Failure::Usage(format!("bad replay record: {e}")))?;
                let violation = replay_case(&r)?;
                let threshold = r.property.threshold();
                let passed = violation <= threshold;
                let res = ReplayResults { replay: r, violation, threshold, passed };
                return Ok(emit(envelope(echo, None, res), machine, if passed { EXIT_OK } else { EXIT_DOMAIN }));
            }
            if trials == 0 {
                return Err(Failure::Usage("--trials must be at least 1".into()));
            }
            let fixture = match inject_frame {
                Some(InjectedFrame::TraceSquared) => FrameFixture::TraceSquared,
                None => FrameFixture::Hidden,
            };
            let opts = BatteryOptions { trials, mode: ExecutionMode::default(), fixture };
            let battery = run_battery(seed, &dims, &opts).map_err(|e| Failure::Usage(e.to_string()))?;
            let all_passed = battery.all_passed();
            let code = if all_passed { EXIT_OK } else { EXIT_DOMAIN };
            Ok(emit(envelope(echo, None, VerifyResults { all_passed, battery }), machine, code))
        }
    }
}

fn load(path: &Path) -> Result<ScenarioFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(ScenarioFile::parse(&text)?)
}

fn envelope<T>(command: Vec<String>, input_digest: Option<String>, results: T) -> Report<T> {
    Report { command, input_digest, results, tolerances: Tolerances::current(), version: VERSION }
}

fn emit<T: Serialize + Human>(r: Report<T>, machine: bool, code: i32) -> Emitted {
    let text = if machine {
        let mut s = serde_json::to_string_pretty(&r).expect("reports serialize");
        s.push('\n');
        s
    } else {
        r.human()
    };
    Emitted { text, code }
}

pub fn predict(f: &ScenarioFile) -> Result<PredictResults, Failure> {
    let x = f.require_procedure()?;
    let e = f.require_ensemble()?;
    let report = general_distribution(x, average_state(e))?;
    let posterior = if e.len() > 1 {
        let post = posterior(e, x)?;
        Some(
            post.entries
                .iter()
                .zip(e.entries())
                .map(|(p, prep)| PosteriorRow {
                    label: p.label.to_string(),
                    prior: prep.prior,
                    posterior: p.posterior,
                    likelihood: p.likelihood,
                })
                .collect(),
        )
    } else {
        None
    };
    Ok(PredictResults {
        probabilities: rows(&report.probabilities),
        denominator: report.denominator,
        standard: report.standard,
        k: report.k,
        posterior,
    })
}

pub fn retrodict_cmd(f: &ScenarioFile) -> Result<RetrodictResults, Failure> {
    let e = f.require_ensemble()?;
    let observed = f.require_observed()?;
    let m = f.require_procedure()?.operator(observed)?;
    let direct = retrodict(e, m)?;
    let dual = retrodict_via_duality(e, m)?;
    let max_discrepancy = direct.max_abs_diff(&dual)?;
    Ok(RetrodictResults {
        observed: observed.to_string(),
        retrodict: rows(&direct),
        via_duality: rows(&dual),
        max_discrepancy,
    })
}

pub fn simulate(
    f: &ScenarioFile,
    seed: Option<u64>,
    samples: Option<u64>,
    mode: ExecutionMode,
    corrupt_analytic: Option<f64>,
) -> Result<SimulateResults, Failure> {
    let e = f.require_ensemble()?;
    let x = f.require_procedure()?;
    let seed = seed.or(f.seed).unwrap_or(0);
    let samples = samples.or(f.samples).unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return Err(Failure::Usage("--samples must be at least 1".into()));
    }
    let full = match x.is_standard() {
        Some(k) if (k - 1.0).abs() <= 1e-10 => x.to_povm()?,
        _ => completion_of(x)?,
    };
    let recorded = f.recorded.clone().unwrap_or_else(|| x.labels().cloned().collect());
    let sc = Scenario::new(e.clone(), full, recorded, samples, seed)?;
    let mut simulation = genprob::simulator::run_with(&sc, mode)?;
    if let (Some(sigmas), Some(first)) = (corrupt_analytic, simulation.analytic_comparison.first_mut()) {
        corrupt(first, sigmas);
    }
    let status = if simulation.inconclusive {
        SimulationStatus::Inconclusive
    } else if simulation.is_consistent(CONSISTENCY_SIGMAS) {
        SimulationStatus::Consistent
    } else {
        SimulationStatus::Inconsistent
    };
    Ok(SimulateResults {
        status,
        sigmas: CONSISTENCY_SIGMAS,
        seed,
        full_povm: sc.full_povm.labels().map(ToString::to_string).collect(),
        recorded: sc.recorded.iter().map(ToString::to_string).collect(),
        simulation,
    })
}

/// Moves the analytic target `sigmas` standard errors away from the estimate.
fn corrupt(c: &mut Comparison, sigmas: f64) {
    let offset = sigmas * c.stderr;
    c.analytic = if c.empirical + offset <= 1.0 { c.empirical + offset } else { c.empirical - offset };
    c.gap = (c.empirical - c.analytic).abs();
    c.z = c.gap / c.stderr;
}
