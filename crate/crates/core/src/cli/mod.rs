//! Command-line front end: `squeezeclock <command> --config run.toml`.
//!
//! Exit codes: 0 success, 1 invalid input or request, 2 validation tolerance
//! exceeded, 3 I/O failure.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use self::commands::CommandOutput;
use self::config::RunConfig;
use self::output::ResultRecord;

#[derive(Debug, Parser)]
#[command(
    name = "squeezeclock",
    version,
    about = "Clock stability with squeezed atomic ensembles"
)]
pub struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Omit the timestamp so identical inputs give byte-identical output.
    #[arg(long, global = true)]
    pub canonical: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Phase-estimation error versus LO phase.
    PhaseError,
    /// Clock phase variance versus Ramsey time.
    Stability,
    /// Optimal Ramsey time and the resulting stability.
    Optimize,
    /// Optimized stability over a one- or two-parameter grid.
    Map,
    /// Compare the analytic model with exact simulation.
    Validate,
    /// Evaluate a table of reported squeezed states.
    Experiments {
        /// CSV with columns label, atoms, xi2_db, a2_db.
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::PhaseError => "phase-error",
            Command::Stability => "stability",
            Command::Optimize => "optimize",
            Command::Map => "map",
            Command::Validate => "validate",
            Command::Experiments { .. } => "experiments",
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::Optimize => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Tolerance(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Tolerance(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", p.display())))?;
            RunConfig::parse(&text).map_err(|e| CliError::Validation(e.to_string()))
        }
    }
}

fn render(cli: &Cli, cfg: &RunConfig, out: &CommandOutput) -> String {
    match cli.format.unwrap_or_else(|| cli.command.default_format()) {
        Format::Csv => out.table.to_csv(),
        Format::Json => {
            let mut rec = ResultRecord::new(
                cli.command.name(),
                cfg,
                out.table.to_json_rows(),
                cli.canonical,
            );
            rec.extra = out.extra.clone();
            rec.to_json()
        }
    }
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli.config.as_ref())?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Validation("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker threads: {e}")))?;

    let out = pool.install(|| match &cli.command {
        Command::PhaseError => commands::phase_error(&cfg),
        Command::Stability => commands::stability(&cfg),
        Command::Optimize => commands::optimize(&cfg),
        Command::Map => commands::map(&cfg),
        Command::Validate => commands::validate(&cfg),
        Command::Experiments { table } => commands::experiments(&cfg, table.as_deref()),
    })?;

    let text = render(cli, &cfg, &out);
    match &cli.out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?,
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(format!("cannot write output: {e}")))?;
        }
    }
    match out.failure {
        Some(msg) => Err(CliError::Tolerance(msg)),
        None => Ok(()),
    }
}

/// Entry point for the binary: parses `std::env::args` and maps errors to
/// exit codes. Usage errors exit with 1 so that 2 stays reserved for
/// tolerance failures.
pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
