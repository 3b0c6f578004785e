//! Command-line front end: load a graph, run one analysis, emit a report.
//!
//! Exit codes: `0` when every check passes, `1` when some check fails (the
//! report still prints, with a `failures` list), `2` on usage, input or
//! certification errors.

pub mod commands;
pub mod input;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pimsner::{ResidueConfig, ResidueMode, DEFAULT_TOL};

use crate::commands::{Outcome, Selection};
use crate::report::{Inputs, Report, Timings};

#[derive(Debug, Parser)]
#[command(name = "pimsner", version, about = "Index, residue, Fock-projection and KMS reports for graph bimodules")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    ClosedForm,
    Iterate,
}

impl MethodArg {
    fn mode(self) -> ResidueMode {
        match self {
            MethodArg::Auto => ResidueMode::Auto,
            MethodArg::ClosedForm => ResidueMode::ClosedForm,
            MethodArg::Iterate => ResidueMode::Iterate,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            MethodArg::Auto => "auto",
            MethodArg::ClosedForm => "closed-form",
            MethodArg::Iterate => "iterate",
        }
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Graph description (JSON); omit when using --builtin.
    pub graph: Option<PathBuf>,
    /// Use a catalog graph instead of a file.
    #[arg(long, value_name = "NAME")]
    pub builtin: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Add wall-clock timings to the JSON report (makes output run-dependent).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate e^{β_k} for k ≤ k_max.
    Index {
        #[command(flatten)]
        common: Common,
        #[arg(long = "kmax", default_value_t = 200)]
        k_max: usize,
    },
    /// Residue limits η̃ for every path of a degree, or for given paths.
    Residue {
        #[command(flatten)]
        common: Common,
        #[arg(long = "kmax", default_value_t = 200)]
        k_max: usize,
        #[arg(long, conflicts_with = "path", required_unless_present = "path")]
        degree: Option<usize>,
        /// Comma-separated edge ids, or a vertex label; repeatable.
        #[arg(long)]
        path: Vec<String>,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
    },
    /// Structure of the truncated module and its Fock projection.
    Kasparov {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long = "kmax", default_value_t = 200)]
        k_max: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
    },
    /// Invariant traces, the induced KMS state and randomized KMS residuals.
    Kms {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Input(#[from] input::InputError),
    #[error(transparent)]
    Core(#[from] pimsner::Error),
    #[error("{0}")]
    Usage(String),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Index { common, .. }
            | Command::Residue { common, .. }
            | Command::Kasparov { common, .. }
            | Command::Kms { common, .. } => common,
        }
    }
}

/// Runs one subcommand and assembles its report.
pub fn run(command: &Command) -> Result<Report, CliError> {
    let start = Instant::now();
    let common = command.common();
    if !(common.tol.is_finite() && common.tol >= 0.0) {
        return Err(CliError::Usage(format!("--tol must be a non-negative number, got {}", common.tol)));
    }
    let (module, source) = input::load(common.graph.as_deref(), common.builtin.as_deref())?;
    let mut inputs = Inputs {
        graph: source.describe(),
        spec: module.to_spec(),
        k_max: None,
        depth: None,
        trials: None,
        seed: None,
        method: None,
        tol: common.tol,
    };
    let cfg = |k_max: usize, method: MethodArg| ResidueConfig {
        k_max,
        tol: common.tol,
        mode: method.mode(),
    };
    let (name, outcome): (&'static str, Outcome) = match command {
        Command::Index { k_max, .. } => {
            inputs.k_max = Some(*k_max);
            ("index", commands::index(&module, *k_max, common.tol)?)
        }
        Command::Residue {
            k_max,
            degree,
            path,
            method,
            ..
        } => {
            inputs.k_max = Some(*k_max);
            inputs.method = Some(method.as_str().into());
            let selection = match degree {
                Some(n) => Selection::Degree(*n),
                None => Selection::Paths(path.clone()),
            };
            ("residue", commands::residue(&module, &selection, cfg(*k_max, *method))?)
        }
        Command::Kasparov {
            depth,
            k_max,
            method,
            ..
        } => {
            inputs.k_max = Some(*k_max);
            inputs.depth = Some(*depth);
            inputs.method = Some(method.as_str().into());
            ("kasparov", commands::kasparov(&module, *depth, cfg(*k_max, *method))?)
        }
        Command::Kms { trials, seed, .. } => {
            inputs.trials = Some(*trials);
            inputs.seed = Some(*seed);
            ("kms", commands::kms(&module, *trials, *seed, common.tol)?)
        }
    };
    let mut report = Report::new(name, inputs, outcome.results, outcome.checks, outcome.table);
    if common.timings {
        report.timings = Some(Timings {
            total_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(report)
}

/// Renders a report in the requested format.
pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    }
}

/// Entry point shared by the binary: returns the text for stdout, the text
/// for stderr and the exit code.
pub fn main_with(cli: &Cli) -> (String, String, i32) {
    let format = cli.command.common().format;
    match run(&cli.command) {
        Ok(report) => {
            let out = render(&report, format);
            if report.passed() {
                (out, String::new(), 0)
            } else {
                let err = match format {
                    // the JSON report already carries the list
                    Format::Json => String::new(),
                    Format::Csv => format!("failed checks: {}\n", report.failures.join(",")),
                };
                (out, err, 1)
            }
        }
        Err(e) => (String::new(), format!("error: {e}\n"), 2),
    }
}
