//! Command-line surface. [`run`] is the whole program minus process exit.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::config::{dgp_spec, ConfigError, RunConfig, Settings};
use crate::data::{read_csv, write_csv, DataError};
use crate::mc::monte_carlo;
use crate::report::{run_estimate, run_rdd, to_json, ErrorDocument};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ESTIMATION: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "pdd", version, about = "Placebo-adjusted regression discontinuity estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Placebo-adjusted discontinuity with robust bias-corrected inference.
    Estimate(EstimateArgs),
    /// Plain local linear discontinuity in the outcome.
    Rdd(EstimateArgs),
    /// Write a simulated sample as CSV.
    Simulate(SimulateArgs),
    /// Monte Carlo report for a simulation design.
    Mc(McArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path; standard output when absent or `-`.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args)]
struct EstimatorFlags {
    #[arg(long, allow_hyphen_values = true)]
    cutoff: Option<String>,
    /// window, triangle or gaussian.
    #[arg(long)]
    kernel: Option<String>,
    /// Main bandwidth h; rule of thumb when absent.
    #[arg(long)]
    bandwidth: Option<String>,
    /// Pilot bandwidth b for the curvature fit; defaults to h.
    #[arg(long)]
    bias_bandwidth: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// sharp or fuzzy.
    #[arg(long)]
    design: Option<String>,
    /// paper or fitted.
    #[arg(long)]
    variance_mode: Option<String>,
}

impl EstimatorFlags {
    fn overlay(self, s: &mut Settings) {
        s.overlay("cutoff", self.cutoff);
        s.overlay("kernel", self.kernel);
        s.overlay("bandwidth", self.bandwidth);
        s.overlay("bias-bandwidth", self.bias_bandwidth);
        s.overlay("alpha", self.alpha);
        s.overlay("design", self.design);
        s.overlay("variance-mode", self.variance_mode);
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    common: Common,
    /// CSV input; standard input when absent or `-`.
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    running: Option<String>,
    #[arg(long)]
    outcome: Option<String>,
    #[arg(long)]
    treatment: Option<String>,
    /// Comma-separated placebo outcome columns.
    #[arg(long)]
    placebo_outcomes: Option<String>,
    /// Comma-separated placebo treatment columns, in the same order.
    #[arg(long)]
    placebo_treatments: Option<String>,
    #[command(flatten)]
    estimator: EstimatorFlags,
}

#[derive(Debug, Args)]
struct DgpFlags {
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    /// Sorting strength; 0 disables manipulation.
    #[arg(long)]
    kappa: Option<String>,
    /// Width of the sorting window below the cutoff.
    #[arg(long)]
    window: Option<String>,
    /// Proxy loading.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Instrument strength.
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<String>,
    /// Compliance jump for the fuzzy design.
    #[arg(long)]
    compliance: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    curvature: Option<String>,
    #[arg(long)]
    noise_z: Option<String>,
    #[arg(long)]
    noise_d: Option<String>,
    #[arg(long)]
    noise_w: Option<String>,
    #[arg(long)]
    noise_y: Option<String>,
}

impl DgpFlags {
    fn overlay(self, s: &mut Settings) {
        s.overlay("seed", self.seed);
        s.overlay("n", self.n);
        s.overlay("tau", self.tau);
        s.overlay("kappa", self.kappa);
        s.overlay("window", self.window);
        s.overlay("lambda", self.lambda);
        s.overlay("rho", self.rho);
        s.overlay("compliance", self.compliance);
        s.overlay("curvature", self.curvature);
        s.overlay("noise-z", self.noise_z);
        s.overlay("noise-d", self.noise_d);
        s.overlay("noise-w", self.noise_w);
        s.overlay("noise-y", self.noise_y);
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    cutoff: Option<String>,
    /// sharp or fuzzy.
    #[arg(long)]
    design: Option<String>,
    #[command(flatten)]
    dgp: DgpFlags,
}

#[derive(Debug, Args)]
struct McArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    reps: Option<String>,
    #[command(flatten)]
    estimator: EstimatorFlags,
    #[command(flatten)]
    dgp: DgpFlags,
}

enum Failure {
    Usage(String),
    Io(String),
    Estimation(pdd_core::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<pdd_core::Error> for Failure {
    fn from(e: pdd_core::Error) -> Self {
        Failure::Estimation(e)
    }
}

/// Runs the CLI against the given streams and returns the exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, stdin, stdout) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Io(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_IO
        }
        Err(Failure::Estimation(e)) => {
            let _ = writeln!(stdout, "{}", to_json(&ErrorDocument::from(&e)));
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ESTIMATION
        }
    }
}

fn load_settings(common: &Common) -> Result<Settings, Failure> {
    match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
            Ok(Settings::parse(&text)?)
        }
        None => Ok(Settings::default()),
    }
}

/// A downstream reader that stops early (`pdd simulate | head`) is not a failure.
fn closed_pipe(e: &csv::Error) -> bool {
    matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == io::ErrorKind::BrokenPipe)
}

fn is_stdio(path: Option<&str>) -> bool {
    matches!(path, None | Some("-"))
}

fn emit(settings: &Settings, stdout: &mut dyn Write, body: &[u8]) -> Result<(), Failure> {
    let out = settings.raw("out");
    if is_stdio(out) {
        stdout.write_all(body)?;
        stdout.flush()?;
    } else {
        let path = out.unwrap();
        fs::write(path, body).map_err(|e| Failure::Io(format!("cannot write {path}: {e}")))?;
    }
    Ok(())
}

fn dispatch(command: Command, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Estimate(args) => estimate(args, stdin, stdout, true),
        Command::Rdd(args) => estimate(args, stdin, stdout, false),
        Command::Simulate(args) => {
            let mut s = load_settings(&args.common)?;
            s.overlay("out", args.common.out);
            s.overlay("cutoff", args.cutoff);
            s.overlay("design", args.design);
            args.dgp.overlay(&mut s);
            let spec = dgp_spec(&s)?;
            let sample = pdd_core::simulate(&spec)?;
            match s.raw("out").filter(|p| !is_stdio(Some(p))) {
                Some(path) => {
                    let file = File::create(path).map_err(|e| Failure::Io(format!("cannot write {path}: {e}")))?;
                    write_csv(&sample, BufWriter::new(file))?;
                }
                None => match write_csv(&sample, BufWriter::new(stdout)) {
                    Err(DataError::Csv(e)) if closed_pipe(&e) => {}
                    other => other?,
                },
            }
            Ok(())
        }
        Command::Mc(args) => {
            let mut s = load_settings(&args.common)?;
            s.overlay("out", args.common.out);
            s.overlay("reps", args.reps);
            args.estimator.overlay(&mut s);
            args.dgp.overlay(&mut s);
            let spec = dgp_spec(&s)?;
            if s.raw("cutoff").is_none() {
                s.overlay("cutoff", Some(spec.cutoff.to_string()));
            }
            let settings = RunConfig::from_settings(&s)?.estimator_settings();
            let reps: usize = s.get("reps")?.unwrap_or(100);
            if reps == 0 {
                return Err(Failure::Usage("--reps must be at least 1".into()));
            }
            let report = monte_carlo(&spec, &settings, reps, spec.seed)?;
            emit(&s, stdout, format!("{}\n", to_json(&report)).as_bytes())
        }
    }
}

fn estimate(args: EstimateArgs, stdin: &mut dyn Read, stdout: &mut dyn Write, placebo: bool) -> Result<(), Failure> {
    let mut s = load_settings(&args.common)?;
    s.overlay("out", args.common.out);
    s.overlay("data", args.data);
    s.overlay("running", args.running);
    s.overlay("outcome", args.outcome);
    s.overlay("treatment", args.treatment);
    s.overlay("placebo-outcomes", args.placebo_outcomes);
    s.overlay("placebo-treatments", args.placebo_treatments);
    args.estimator.overlay(&mut s);
    if !placebo {
        // The plain discontinuity ignores placebo columns and the treatment.
        s.overlay("placebo-outcomes", Some(String::new()));
        s.overlay("placebo-treatments", Some(String::new()));
    }
    let mut cfg = RunConfig::from_settings(&s)?;
    if !placebo {
        cfg.bindings.treatment = None;
    }

    let loaded = match s.raw("data").filter(|p| !is_stdio(Some(p))) {
        Some(path) => crate::data::load_csv(path.as_ref(), &cfg.bindings)?,
        None => read_csv(stdin, &cfg.bindings)?,
    };
    let json = if placebo { to_json(&run_estimate(&cfg, &loaded)?) } else { to_json(&run_rdd(&cfg, &loaded)?) };
    emit(&s, stdout, format!("{json}\n").as_bytes())
}
