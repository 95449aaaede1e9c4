//! `lelong`: batch front end for family analysis, the openness demo and jet extension.
//!
//! Exit codes: 0 pass, 1 I/O or schema error, 2 validation failure, 3 non-convergence
//! (the partial report is still written).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lelong::bergman::{problem_from_json, EXPONENT_CONVENTION};
use lelong::family::{family_from_json, MetricFamily};
use lelong::flow::{CLUSTER_TOL, DEFAULT_GRID_POINTS};
use lelong::report::{self, DirectionsFile, Metadata, OpennessInput, Report, RunConfig, Status, FAMILY_EXPONENT_CONVENTION};
use lelong::Error;

#[derive(Parser, Debug)]
#[command(name = "lelong", version, about = "Jumping numbers and flat limits of hermitian metric families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convexity, curvature and growth checks of a family file.
    Validate(Common),
    /// Flow, flat limit, filtration and per-direction equivalence checks; also writes a lambda CSV.
    Analyze(Common),
    /// Relative eigenvalue flow and the flat limit.
    FlatLimit(Common),
    /// Equivalence checks for supplied or sampled dual directions.
    VerifyThm(Common),
    /// Integrability threshold of a radial model weight.
    Openness(OpennessArgs),
    /// Jumping numbers and extension norms of a jet problem file.
    Bergman(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Input JSON file.
    #[arg(long)]
    input: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Truncate the horizon to this value.
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    #[arg(long, default_value_t = CLUSTER_TOL)]
    cluster_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON file {"vectors": [...], "duals": [...]}; sampled from the seed when omitted.
    #[arg(long)]
    directions: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct OpennessArgs {
    /// JSON {"phi": profile, "c": number, "m": integer}; overrides --c and --m.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Coefficient of the pole `psi = c log r`.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Monomial degree.
    #[arg(long, default_value_t = 0)]
    m: u32,
    /// Length of the truncation range.
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Common {
    fn config(&self) -> RunConfig {
        RunConfig {
            seed: self.seed,
            grid_points: self.grid_points,
            t_max: self.t_max,
            cluster_tol: self.cluster_tol,
            ..RunConfig::default()
        }
    }
}

/// Failure before a report exists.
enum Failure {
    /// I/O or schema problems.
    Input(anyhow::Error),
    /// The input parsed but the library rejected it.
    Invalid(anyhow::Error),
    NonConvergent(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::NonConvergent(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Invalid(e) | Failure::NonConvergent(e) => e,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Schema { .. } => Failure::Input(e.into()),
            Error::NonConvergent { .. } => Failure::NonConvergent(e.into()),
            _ => Failure::Invalid(e.into()),
        }
    }
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Input)
}

fn write(path: Option<&Path>, text: &str) -> std::result::Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())).map_err(Failure::Input),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_family(c: &Common, cfg: &RunConfig) -> std::result::Result<MetricFamily, Failure> {
    let fam = family_from_json(&read(&c.input)?).map_err(|e| Failure::Input(anyhow::Error::from(e).context(c.input.display().to_string())))?;
    Ok(report::prepare_family(fam, cfg)?)
}

fn load_directions(c: &Common) -> std::result::Result<Option<DirectionsFile>, Failure> {
    c.directions
        .as_ref()
        .map(|p| DirectionsFile::from_json(&read(p)?).map_err(|e| Failure::Input(anyhow::Error::from(e).context(p.display().to_string()))))
        .transpose()
}

/// Writes the wrapped report and returns its status.
fn emit<T: Serialize>(
    command: &str,
    cfg: &RunConfig,
    convention: &str,
    (status, result): (Status, T),
    output: Option<&Path>,
    started: Instant,
) -> std::result::Result<Status, Failure> {
    let report = Report::new(command, cfg, convention, status, result, Metadata::now(started.elapsed().as_secs_f64()));
    let text = serde_json::to_string_pretty(&report).context("serializing report").map_err(Failure::Input)?;
    write(output, &text)?;
    Ok(status)
}

fn run(cli: Cli) -> std::result::Result<Status, Failure> {
    let started = Instant::now();
    match cli.command {
        Command::Validate(c) => {
            let cfg = c.config();
            cfg.validate()?;
            let fam = load_family(&c, &cfg)?;
            emit("validate", &cfg, FAMILY_EXPONENT_CONVENTION, report::validate_family(&fam, &cfg)?, c.output.as_deref(), started)
        }
        Command::FlatLimit(c) => {
            let cfg = c.config();
            cfg.validate()?;
            let fam = load_family(&c, &cfg)?;
            emit("flat-limit", &cfg, FAMILY_EXPONENT_CONVENTION, report::flat_limit_report(&fam, &cfg)?, c.output.as_deref(), started)
        }
        Command::Analyze(c) => {
            let cfg = c.config();
            cfg.validate()?;
            let fam = load_family(&c, &cfg)?;
            let dirs = load_directions(&c)?;
            let out = report::analyze(&fam, dirs.as_ref(), &cfg)?;
            if let Some(p) = &c.output {
                let csv = p.with_extension("lambda.csv");
                write(Some(&csv), &report::lambda_csv(&out.1.flow.grid, &out.1.flow.lambdas))?;
                log::info!("lambda curves written to {}", csv.display());
            }
            emit("analyze", &cfg, FAMILY_EXPONENT_CONVENTION, out, c.output.as_deref(), started)
        }
        Command::VerifyThm(c) => {
            let cfg = c.config();
            cfg.validate()?;
            let fam = load_family(&c, &cfg)?;
            let dirs = load_directions(&c)?;
            emit("verify-thm", &cfg, FAMILY_EXPONENT_CONVENTION, report::verify_theorem(&fam, dirs.as_ref(), &cfg)?, c.output.as_deref(), started)
        }
        Command::Openness(o) => {
            let cfg = RunConfig { seed: o.seed, grid_points: o.grid_points, t_max: o.t_max, ..RunConfig::default() };
            cfg.validate()?;
            let input = match &o.input {
                Some(p) => OpennessInput::from_json(&read(p)?).map_err(|e| Failure::Input(anyhow::Error::from(e).context(p.display().to_string())))?,
                None => OpennessInput { phi: lelong::radial::RadialProfile::Zero, c: o.c, m: o.m },
            };
            emit("openness", &cfg, FAMILY_EXPONENT_CONVENTION, report::openness(&input, &cfg)?, o.output.as_deref(), started)
        }
        Command::Bergman(c) => {
            let cfg = c.config();
            cfg.validate()?;
            let p = problem_from_json(&read(&c.input)?).map_err(|e| Failure::Input(anyhow::Error::from(e).context(c.input.display().to_string())))?;
            emit("bergman", &cfg, EXPONENT_CONVENTION, report::bergman(&p, &cfg)?, c.output.as_deref(), started)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LELONG_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => {
            if status != Status::Pass {
                log::warn!("finished with status {status:?}");
            }
            ExitCode::from(status.exit_code() as u8)
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
