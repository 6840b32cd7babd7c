use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "lsness", version, about = "Exact steady states of the boundary-driven spin-1 chain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Verify,
    Ness,
    Observe,
    Scan,
    Partition,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the identity and oracle suite.
    Verify(Flags),
    /// Dump the matrix-product factor or density operator.
    Ness(Flags),
    /// Evaluate observables through transfer sweeps.
    Observe(Flags),
    /// Tabulate Z, doping and currents over a grid, optionally fitting log Z.
    Scan(Flags),
    /// Partition function and sector traces.
    Partition(Flags),
}

impl Command {
    pub fn split(self) -> (CommandKind, Flags) {
        match self {
            Command::Verify(f) => (CommandKind::Verify, f),
            Command::Ness(f) => (CommandKind::Ness, f),
            Command::Observe(f) => (CommandKind::Observe, f),
            Command::Scan(f) => (CommandKind::Scan, f),
            Command::Partition(f) => (CommandKind::Partition, f),
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Numeric,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisArg {
    Monomial,
    Orthonormal,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    Partition,
    Doping,
    Current,
    Density,
    Magnetization,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    /// The factor `S_n`.
    Factor,
    /// `S_n S_n†`, possibly projected or weighted.
    Density,
}

#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// Chain length: `4`, `2..8` or `3,5,7`.
    #[arg(long)]
    pub n: Option<String>,
    /// Coupling, a value or comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<String>,
    /// Chemical potential, a value or comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// Hole-number sector.
    #[arg(long)]
    pub sector: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Shorthand for `--mode exact`.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, value_enum)]
    pub basis: Option<BasisArg>,
    /// Auxiliary cutoff on every axis.
    #[arg(long)]
    pub cutoff: Option<u32>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run the boundary system with the wrong highest weight; must fail.
    #[arg(long)]
    pub negative_control: bool,
    #[arg(long, value_enum)]
    pub obs: Option<Observable>,
    /// First species index of a current or density.
    #[arg(long)]
    pub i: Option<usize>,
    /// Second species index of a pair current.
    #[arg(long)]
    pub j: Option<usize>,
    /// Site or bond; all of them when omitted.
    #[arg(long)]
    pub x: Option<usize>,
    #[arg(long, value_enum)]
    pub operator: Option<OperatorKind>,
    /// Fit log Z against n and n log n.
    #[arg(long)]
    pub fit: bool,
}

/// Any scalar or list accepted in the config file.
#[derive(Deserialize, Debug, Clone)]
#[serde(untagged)]
pub enum Setting {
    Int(i64),
    Float(f64),
    Text(String),
    List(Vec<f64>),
}

impl Setting {
    fn into_text(self) -> String {
        match self {
            Setting::Int(v) => v.to_string(),
            Setting::Float(v) => v.to_string(),
            Setting::Text(s) => s,
            Setting::List(v) => v.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
        }
    }
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<Setting>,
    pub eps: Option<Setting>,
    pub mu: Option<Setting>,
    pub sector: Option<usize>,
    pub mode: Option<Mode>,
    pub basis: Option<BasisArg>,
    pub cutoff: Option<u32>,
    pub tol: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub negative_control: Option<bool>,
    pub obs: Option<Observable>,
    pub i: Option<usize>,
    pub j: Option<usize>,
    pub x: Option<usize>,
    pub operator: Option<OperatorKind>,
    pub fit: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Effective configuration after merging flags, file and defaults.
#[derive(Serialize, Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub n: Vec<usize>,
    pub eps: Vec<f64>,
    pub mu: Vec<f64>,
    pub sector: Option<usize>,
    pub mode: Mode,
    pub basis: BasisArg,
    pub cutoff: Option<u32>,
    pub tol: f64,
    pub oracle_tol: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub negative_control: bool,
    pub obs: Observable,
    pub i: Option<usize>,
    pub j: Option<usize>,
    pub x: Option<usize>,
    pub operator: OperatorKind,
    pub fit: bool,
}

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_ORACLE_TOL: f64 = 1e-8;

pub fn parse_sizes(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Config(format!("cannot read chain lengths from '{text}'"));
    let text = text.trim();
    let out: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b = b.trim();
        let b: usize = match b.strip_prefix('=') {
            Some(rest) => rest.parse().map_err(|_| bad())?,
            None => b.parse().map_err(|_| bad())?,
        };
        (a..=b).collect()
    } else {
        text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if out.is_empty() || out.contains(&0) {
        return Err(bad());
    }
    Ok(out)
}

pub fn parse_values(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let out: Vec<f64> = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Config(format!("cannot read {what} from '{text}'")))
        })
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(CliError::Config(format!("empty {what} grid")));
    }
    Ok(out)
}

impl RunConfig {
    pub fn resolve(command: CommandKind, flags: Flags) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let text = |flag: Option<String>, setting: Option<Setting>| flag.or_else(|| setting.map(Setting::into_text));
        let n = match text(flags.n, file.n) {
            Some(t) => parse_sizes(&t)?,
            None => vec![3],
        };
        let eps = match text(flags.eps, file.eps) {
            Some(t) => parse_values(&t, "coupling")?,
            None => vec![1.0],
        };
        let mu = match text(flags.mu, file.mu) {
            Some(t) => parse_values(&t, "chemical potential")?,
            None if command == CommandKind::Ness => Vec::new(),
            None => vec![0.0],
        };
        let mode = if flags.exact { Some(Mode::Exact) } else { flags.mode }.or(file.mode).unwrap_or(Mode::Numeric);
        let basis = flags.basis.or(file.basis).unwrap_or(BasisArg::Monomial);
        let tol = flags.tol.or(file.tol).unwrap_or(DEFAULT_TOL);
        let jobs = flags.jobs.or(file.jobs);
        let cfg = RunConfig {
            command,
            n,
            eps,
            mu,
            sector: flags.sector.or(file.sector),
            mode,
            basis,
            cutoff: flags.cutoff.or(file.cutoff),
            tol,
            oracle_tol: DEFAULT_ORACLE_TOL.max(tol),
            format: flags.format.or(file.format).unwrap_or(Format::Json),
            out: flags.out.or(file.out),
            jobs,
            negative_control: flags.negative_control || file.negative_control.unwrap_or(false),
            obs: flags.obs.or(file.obs).unwrap_or(Observable::Partition),
            i: flags.i.or(file.i),
            j: flags.j.or(file.j),
            x: flags.x.or(file.x),
            operator: flags.operator.or(file.operator).unwrap_or(OperatorKind::Factor),
            fit: flags.fit || file.fit.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.tol > 0.0) {
            return Err(CliError::Config("tolerance must be positive".into()));
        }
        if self.mode == Mode::Exact && self.basis == BasisArg::Orthonormal {
            return Err(CliError::Config("the orthonormal basis has irrational entries; use --mode numeric".into()));
        }
        if self.jobs == Some(0) {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        for (name, v) in [("--i", self.i), ("--j", self.j)] {
            if let Some(v) = v {
                if !(1..=3).contains(&v) {
                    return Err(CliError::Config(format!("{name} must be 1, 2 or 3")));
                }
            }
        }
        Ok(())
    }
}
