//! Command-line interface.
//!
//! Every flag has a config-file key of the same name with `-` replaced by
//! `_`. Flags override the file; unset values fall back to the defaults
//! `q = 0.25, beta = 1, delta = 2, mu = 1, sigma = 1, cost = free,
//! kappa = constant:0`.

mod commands;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::costly::{CostError, CostSpec};
use crate::equilibrium::ClassifyError;
use crate::kv::{KvError, KvRecord};
use crate::model::{RawParams, ValidationError};
use crate::voting::{KappaProfile, VotingError};

pub use output::{Cell, Format, Table};

#[derive(Debug, Parser)]
#[command(name = "inaction", version, about = "Motivated reasoning and policy inaction: equilibria, thresholds, curves and simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Key-value config file (`key = value` per line, `#` comments)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub q: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// free | fixed:<gamma> | quadratic:<c>
    #[arg(long, global = true)]
    pub cost: Option<String>,
    /// constant:<k> | step:<kneg>,<kpos> | trust
    #[arg(long, global = true)]
    pub kappa: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report range and assumption violations without failing
    Check,
    /// Classify the equilibria of the full game
    Classify,
    /// Voting and cost thresholds
    Thresholds,
    /// Optimal distortion across signals
    DistortionCurve(CurveArgs),
    /// Bayesian and distorted beliefs across signals
    BeliefCurve(CurveArgs),
    /// Analytic policy-1 vote share in each state
    VoteShare,
    /// Vote shares and outcome over a parameter grid
    Sweep(SweepArgs),
    /// Monte-Carlo election with brute-force belief choice
    Simulate(SimArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Classify => "classify",
            Command::Thresholds => "thresholds",
            Command::DistortionCurve(_) => "distortion-curve",
            Command::BeliefCurve(_) => "belief-curve",
            Command::VoteShare => "vote-share",
            Command::Sweep(_) => "sweep",
            Command::Simulate(_) => "simulate",
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct CurveArgs {
    /// Lower end of the signal grid (default −(mu + 4 sigma))
    #[arg(long, allow_negative_numbers = true)]
    pub s_min: Option<f64>,
    /// Upper end of the signal grid (default mu + 4 sigma)
    #[arg(long, allow_negative_numbers = true)]
    pub s_max: Option<f64>,
    /// Number of grid points (default 801)
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct SweepArgs {
    /// name:min:max:steps, repeatable; names q, beta, delta, mu, sigma, gamma, c
    #[arg(long = "axis")]
    pub axes: Vec<String>,
}

#[derive(Debug, Args, Default)]
pub struct SimArgs {
    #[arg(long)]
    pub n_voters: Option<usize>,
    /// 0, 1 or both
    #[arg(long)]
    pub state: Option<String>,
    /// Write a per-voter trace table to this file
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Traced voters per state (default 1000 when --trace is given)
    #[arg(long)]
    pub trace_cap: Option<usize>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub grid_min: Option<f64>,
    #[arg(long)]
    pub grid_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Io(String),
    Validation { message: String, violations: Vec<String> },
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Validation { .. } => 2,
            CliError::Solver(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Validation { .. } => "validation",
            CliError::Solver(_) => "solver",
        }
    }

    /// Single-line JSON error record.
    pub fn record(&self) -> String {
        let message = match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Solver(m) => m.clone(),
            CliError::Validation { message, .. } => message.clone(),
        };
        let mut rec = json!({
            "record": "error",
            "schema_version": output::SCHEMA_VERSION,
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": message,
        });
        if let CliError::Validation { violations, .. } = self {
            rec["violations"] = json!(violations);
        }
        rec.to_string()
    }
}

impl From<ValidationError<f64>> for CliError {
    fn from(e: ValidationError<f64>) -> Self {
        CliError::Validation {
            message: e.to_string(),
            violations: e.violations.iter().map(|v| v.to_string()).collect(),
        }
    }
}

impl From<KvError> for CliError {
    fn from(e: KvError) -> Self {
        CliError::Usage(format!("config: {e}"))
    }
}

impl From<CostError> for CliError {
    fn from(e: CostError) -> Self {
        match e {
            CostError::InvalidCost(_) | CostError::UnsupportedRegime(_) => CliError::Validation {
                message: e.to_string(),
                violations: Vec::new(),
            },
            CostError::Voting(v) => v.into(),
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<VotingError> for CliError {
    fn from(e: VotingError) -> Self {
        match e {
            VotingError::Cost(c) => (*c).into(),
            VotingError::InvalidKappa => CliError::Validation {
                message: e.to_string(),
                violations: Vec::new(),
            },
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::Cost(c) => c.into(),
            ClassifyError::Voting(v) => v.into(),
            other => CliError::Solver(other.to_string()),
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "q", "beta", "delta", "mu", "sigma", "cost", "kappa", "seed", "format", "s_min", "s_max", "points", "axis",
    "n_voters", "state", "trace", "trace_cap", "grid_points", "grid_min", "grid_max",
];

/// Flag values layered over an optional config file.
pub(crate) struct Layered {
    file: KvRecord,
}

impl Layered {
    fn load(path: Option<&PathBuf>) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", p.display())))?;
                KvRecord::parse(&text)?
            }
            None => KvRecord::default(),
        };
        if let Some(k) = file.keys().find(|k| !KNOWN_KEYS.contains(k)) {
            return Err(CliError::Usage(format!("config: unknown key `{k}`")));
        }
        Ok(Layered { file })
    }

    pub(crate) fn number(&self, flag: Option<f64>, key: &str) -> Result<Option<f64>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => Ok(self.file.number(key)?),
        }
    }

    pub(crate) fn count(&self, flag: Option<usize>, key: &str) -> Result<Option<usize>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self
                .file
                .get(key)
                .map(|t| {
                    t.parse()
                        .map_err(|_| CliError::Usage(format!("config: `{key}` must be a nonnegative integer, got `{t}`")))
                })
                .transpose(),
        }
    }

    pub(crate) fn text(&self, flag: Option<&str>, key: &str) -> Option<String> {
        flag.map(str::to_string).or_else(|| self.file.get(key).map(str::to_string))
    }
}

pub fn parse_cost(text: &str) -> Result<CostSpec<f64>, CliError> {
    let bad = || CliError::Usage(format!("cost must be free, fixed:<gamma> or quadratic:<c>, got `{text}`"));
    let level = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
    let spec = match text.trim().split_once(':') {
        None if text.trim() == "free" => CostSpec::Free,
        Some(("fixed", v)) => CostSpec::Fixed(level(v)?),
        Some(("quadratic", v)) => CostSpec::Quadratic(level(v)?),
        _ => return Err(bad()),
    };
    if !spec.is_valid() {
        return Err(CliError::Validation {
            message: format!("cost level must be finite and nonnegative: `{text}`"),
            violations: Vec::new(),
        });
    }
    Ok(spec)
}

pub fn parse_kappa(text: &str) -> Result<KappaProfile<f64>, CliError> {
    let bad = || CliError::Usage(format!("kappa must be constant:<k>, step:<kneg>,<kpos> or trust, got `{text}`"));
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
    let profile = match text.trim().split_once(':') {
        None if text.trim() == "trust" => KappaProfile::Trust,
        Some(("constant", v)) => KappaProfile::Constant(num(v)?),
        Some(("step", v)) => {
            let (a, b) = v.split_once(',').ok_or_else(bad)?;
            KappaProfile::SignStep { neg: num(a)?, pos: num(b)? }
        }
        _ => return Err(bad()),
    };
    if !profile.is_valid() {
        return Err(CliError::Validation {
            message: format!("kappa values must lie in [0, 1]: `{text}`"),
            violations: Vec::new(),
        });
    }
    Ok(profile)
}

/// Effective settings shared by every command.
pub(crate) struct Settings {
    pub raw: RawParams<f64>,
    pub cost: CostSpec<f64>,
    pub kappa: KappaProfile<f64>,
    pub cost_text: String,
    pub kappa_text: String,
    pub seed: u64,
    pub format: Format,
}

impl Settings {
    fn resolve(common: &CommonArgs, layer: &Layered) -> Result<Self, CliError> {
        let num = |flag, key, default| layer.number(flag, key).map(|v| v.unwrap_or(default));
        let raw = RawParams::new(
            num(common.q, "q", 0.25)?,
            num(common.beta, "beta", 1.0)?,
            num(common.delta, "delta", 2.0)?,
            num(common.mu, "mu", 1.0)?,
            num(common.sigma, "sigma", 1.0)?,
        );
        let cost_text = layer.text(common.cost.as_deref(), "cost").unwrap_or_else(|| "free".into());
        let kappa_text = layer
            .text(common.kappa.as_deref(), "kappa")
            .unwrap_or_else(|| "constant:0".into());
        let seed = match common.seed {
            Some(s) => s,
            None => match layer.file.get("seed") {
                Some(t) => t
                    .parse()
                    .map_err(|_| CliError::Usage(format!("config: seed must be a u64, got `{t}`")))?,
                None => 0,
            },
        };
        let format = match common.format {
            Some(f) => f,
            None => match layer.file.get("format") {
                Some("csv") | None => Format::Csv,
                Some("jsonl") => Format::Jsonl,
                Some(other) => return Err(CliError::Usage(format!("config: format must be csv or jsonl, got `{other}`"))),
            },
        };
        Ok(Settings {
            raw,
            cost: parse_cost(&cost_text)?,
            kappa: parse_kappa(&kappa_text)?,
            cost_text,
            kappa_text,
            seed,
            format,
        })
    }
}

/// Everything a command produces: the main table and any side files.
pub struct Artifacts {
    pub main: String,
    pub files: Vec<(PathBuf, String)>,
}

/// Runs a parsed command and returns the rendered artifacts without writing.
pub fn execute(cli: &Cli) -> Result<Artifacts, CliError> {
    let layer = Layered::load(cli.common.config.as_ref())?;
    let settings = Settings::resolve(&cli.common, &layer)?;
    commands::dispatch(&cli.command, &settings, &layer)
}

/// Parses `args`, runs the command and writes its output. Returns the process
/// exit code; failures print one JSON error line to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let err = CliError::Usage(e.to_string().lines().next().unwrap_or("usage error").to_string());
            let _ = writeln!(stderr, "{}", err.record());
            return err.exit_code();
        }
    };
    let result = execute(&cli).and_then(|art| {
        for (path, text) in &art.files {
            std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        }
        match &cli.common.out {
            Some(path) => std::fs::write(path, &art.main)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
            None => stdout
                .write_all(art.main.as_bytes())
                .map_err(|e| CliError::Io(format!("cannot write output: {e}"))),
        }
    });
    match result {
        Ok(()) => 0,
        Err(err) => {
            let _ = writeln!(stderr, "{}", err.record());
            err.exit_code()
        }
    }
}
