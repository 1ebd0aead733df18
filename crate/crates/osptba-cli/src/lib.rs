//! Command-line front end: argument parsing, configuration merging and the
//! subcommands that drive the numerical library.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub mod commands;
pub mod report;

pub use report::Report;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] osptba::Error),
}

impl CliError {
    /// `2` for bad input, `1` for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Json(_) => 2,
            CliError::Model(
                osptba::Error::InvalidParams(_)
                | osptba::Error::InvalidPartition(_)
                | osptba::Error::NotContained
                | osptba::Error::KacDynkinRange { .. }
                | osptba::Error::SizeCap { .. },
            ) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "osptba", version, about = "Transfer matrices, T-functions and TBA for the osp(1|2s) chain")]
pub struct Cli {
    /// JSON file with default values for any option (keys as in the report's `config`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write curve data as CSV (solve-tba, sweep).
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Leave timings out of the report.
    #[arg(long, global = true)]
    pub no_timings: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate admissible tableaux of a shape.
    Tableaux(TableauxArgs),
    /// Solve the Bethe equations for the two-string state.
    SolveBae(SolveBaeArgs),
    /// Check the functional relations of the T-functions.
    CheckIdentities(CheckArgs),
    /// Count zeros minus poles of a T-function in a strip.
    ScanStrip(ScanArgs),
    /// Compare the transfer matrix spectrum with the T-function.
    VerifyQtm(QtmArgs),
    /// Solve the TBA equations and evaluate the free energy.
    SolveTba(TbaArgs),
    /// Free energy over a list of inverse temperatures.
    Sweep(SweepArgs),
    /// Run the full acceptance battery.
    Suite(SuiteArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct TableauxArgs {
    #[arg(long)]
    pub s: Option<usize>,
    /// Outer partition, e.g. `2,1`.
    #[arg(long)]
    pub shape: Option<String>,
    /// Inner partition of a skew shape.
    #[arg(long)]
    pub inner: Option<String>,
    /// Include every tableau in the report.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub list: Option<bool>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ModelArgs {
    #[arg(long)]
    pub s: Option<usize>,
    /// Trotter number.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SolveBaeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Continuation step in `u`.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Start Newton from this state instead of the two-string seed.
    #[arg(long)]
    pub seed_file: Option<PathBuf>,
    /// Write the solved state JSON here.
    #[arg(long)]
    pub state_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentitySuite {
    All,
    JacobiTrudi,
    Vanishing,
    Duality,
    Hirota,
    Tsystem,
    Ysystem,
    Poles,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct CheckArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub suite: Option<IdentitySuite>,
    /// Restrict the Jacobi-Trudi check to one shape.
    #[arg(long)]
    pub shape: Option<String>,
    /// Sample points per relation.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replace every relative-error bound by this value.
    #[arg(long, env = "OSPTBA_TOL")]
    pub tol: Option<f64>,
    /// On-shell state JSON; solved from the two-string seed otherwise.
    #[arg(long)]
    pub state: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ScanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub a: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Strip half-height; at most 1/2 for the physical strip.
    #[arg(long)]
    pub height: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub state: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct QtmArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Spectral point `re` or `re,im`; repeat for several.
    #[arg(long = "v", action = clap::ArgAction::Append, allow_hyphen_values = true)]
    pub v: Option<Vec<String>>,
    /// Largest dense matrix dimension.
    #[arg(long, env = "OSPTBA_DENSE_CAP")]
    pub dense_cap: Option<usize>,
    /// Binary dump of the transfer matrix at the first point.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TbaMode {
    Trotter,
    Finite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TbaFormArg {
    Standard,
    Rewritten,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct GridArgs {
    #[arg(long = "Mmax")]
    #[serde(rename = "Mmax")]
    pub m_max: Option<usize>,
    #[arg(long)]
    pub vmax: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Fixed-point tolerance on `log Y`.
    #[arg(long, env = "OSPTBA_TBA_TOL")]
    pub tba_tol: Option<f64>,
    #[arg(long)]
    pub relax: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct TbaArgs {
    #[arg(long)]
    pub s: Option<usize>,
    /// Coupling `J`.
    #[arg(long = "J", allow_hyphen_values = true)]
    #[serde(rename = "J")]
    pub coupling: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<TbaMode>,
    /// Trotter number for the finite mode.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub form: Option<TbaFormArg>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SweepArgs {
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long = "J", allow_hyphen_values = true)]
    #[serde(rename = "J")]
    pub coupling: Option<f64>,
    /// Comma-separated inverse temperatures.
    #[arg(long)]
    pub beta_list: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SuiteArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated criterion numbers; all by default.
    #[arg(long)]
    pub only: Option<String>,
}

/// Overlays explicitly given options on the configuration file values.
pub fn merge<T: Serialize + DeserializeOwned>(args: &T, config: &Map<String, Value>) -> CliResult<T> {
    let mut base = config.clone();
    if let Value::Object(given) = serde_json::to_value(args)? {
        for (k, v) in given {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    Ok(serde_json::from_value(Value::Object(base))?)
}

pub fn read_config(path: Option<&PathBuf>) -> CliResult<Map<String, Value>> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    match serde_json::from_str(&text)? {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::Usage("config file must hold a JSON object".into())),
    }
}

/// Parses `1,2,3`.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| CliError::Usage(format!("cannot parse '{p}' in '{s}'"))))
        .collect()
}

pub fn require<T>(v: Option<T>, name: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("missing --{name}")))
}

/// Runs one command and returns its report.
pub fn run(cli: &Cli) -> CliResult<Report> {
    let cfg = read_config(cli.config.as_ref())?;
    let t0 = std::time::Instant::now();
    let mut report = match &cli.command {
        Command::Tableaux(a) => commands::tableaux(&merge(a, &cfg)?),
        Command::SolveBae(a) => commands::solve_bae(&merge(a, &cfg)?),
        Command::CheckIdentities(a) => commands::check_identities(&merge(a, &cfg)?),
        Command::ScanStrip(a) => commands::scan_strip(&merge(a, &cfg)?),
        Command::VerifyQtm(a) => commands::verify_qtm(&merge(a, &cfg)?),
        Command::SolveTba(a) => commands::solve_tba(&merge(a, &cfg)?, cli.csv.as_ref()),
        Command::Sweep(a) => commands::sweep(&merge(a, &cfg)?, cli.csv.as_ref()),
        Command::Suite(a) => commands::suite(&merge(a, &cfg)?),
    }?;
    if !cli.no_timings {
        report.timings = Some(report::Timings {
            total_seconds: t0.elapsed().as_secs_f64(),
        });
    }
    Ok(report)
}

/// Serializes the report to `--out` or returns it as text.
pub fn emit(cli: &Cli, report: &Report) -> CliResult<Option<String>> {
    let text = serde_json::to_string_pretty(report)? + "\n";
    match &cli.out {
        Some(p) => {
            std::fs::write(p, text).map_err(|source| CliError::Io {
                path: p.clone(),
                source,
            })?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_prefers_flags() {
        let cfg: Map<String, Value> = serde_json::from_str(r#"{"s": 3, "N": 4, "u": 0.2, "other": 1}"#).unwrap();
        let a = ModelArgs {
            s: Some(1),
            n: None,
            u: None,
        };
        let m = merge(&a, &cfg).unwrap();
        assert_eq!(m.s, Some(1));
        assert_eq!(m.n, Some(4));
        assert_eq!(m.u, Some(0.2));
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list::<usize>("1, 2,3").unwrap(), vec![1, 2, 3]);
        assert!(parse_list::<f64>("1,x").is_err());
        assert!(parse_list::<usize>("").unwrap().is_empty());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::Model(osptba::Error::SingularJacobian).exit_code(), 1);
        assert_eq!(CliError::Model(osptba::Error::InvalidParams("s".into())).exit_code(), 2);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
