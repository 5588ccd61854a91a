//! `kaehler-verify`: runs a verification scenario and writes its report as JSON.
//!
//! Exit status: 0 when every check passes, 1 when some check fails, 2 on
//! usage or validation errors, 3 when a scenario aborts at run time.

mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kaehler_core::scenarios::{flatform_report, run_theorem1_testbed, run_theorem3_checks, FormSummary, VerificationReport};
use kaehler_core::GeometryError;
use serde::Serialize;
use thiserror::Error;

use config::{CliConfig, FileConfig, Scenario};

#[derive(Debug, Parser)]
#[command(name = "kaehler-verify", version, about = "Numerical verification reports for conformal Kaehler submanifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Checks on the product example in the light cone.
    VerifyExample(CommonArgs),
    /// Degenerate-branch pipeline on the flat testbed.
    Theorem1(CommonArgs),
    /// Dump of the forms and their split on a built-in testbed.
    FlatformReport(FlatformArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Pretty,
    Compact,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    /// Comma-separated sphere curvatures c₂,…,cₙ.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    c_list: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol_rank: Option<f64>,
    #[arg(long)]
    tol_defect: Option<f64>,
    #[arg(long)]
    fd_step: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file with default values for any of the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
struct FlatformArgs {
    /// One of flat, example, synthetic.
    #[arg(long)]
    testbed: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(GeometryError),
    #[error("scenario failed: {0}")]
    Runtime(GeometryError),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Validation(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::InvalidConfig(_) | GeometryError::InvalidTolerance(_) => CliError::Validation(e),
            other => CliError::Runtime(other),
        }
    }
}

#[derive(Serialize)]
struct Output<'a> {
    #[serde(flatten)]
    report: &'a VerificationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    analysis: Option<&'a FormSummary>,
}

fn load_file(path: &Option<PathBuf>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
}

fn run(cmd: Command) -> Result<bool, CliError> {
    let (scenario, common, testbed) = match cmd {
        Command::VerifyExample(a) => (Scenario::Example, a, None),
        Command::Theorem1(a) => (Scenario::Theorem1, a, None),
        Command::FlatformReport(a) => (Scenario::Flatform, a.common, a.testbed),
    };
    let file = load_file(&common.config)?;
    let cfg = CliConfig::resolve(scenario, &common, testbed, file).map_err(CliError::Usage)?;
    cfg.validate()?;

    let (report, analysis) = match &cfg.scenario {
        config::Resolved::Example(example) => (run_theorem3_checks(example, &cfg.policy, cfg.seed)?, None),
        config::Resolved::Theorem1 { n, p } => (run_theorem1_testbed(*n, *p, &cfg.policy, cfg.seed)?, None),
        config::Resolved::Flatform { testbed, n, p, example } => {
            let (report, summary) = flatform_report(*testbed, *n, *p, example, &cfg.policy, cfg.seed)?;
            (report, Some(summary))
        }
    };
    let output = Output {
        report: &report,
        analysis: analysis.as_ref(),
    };
    let mut json = match cfg.format {
        Format::Pretty => serde_json::to_string_pretty(&output),
        Format::Compact => serde_json::to_string(&output),
    }
    .map_err(|e| CliError::Io(e.to_string()))?;
    json.push('\n');
    match &cfg.out {
        Some(path) => fs::write(path, json).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?,
        None => print!("{json}"),
    }
    for failed in report.failed() {
        eprintln!("FAIL {} ({}): defect {:.3e} > {:.3e}", failed.name, failed.anchor, failed.defect, failed.threshold);
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
