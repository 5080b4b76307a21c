//! The `pdfa` command-line tool: parses programs, builds flow graphs, runs
//! the classical and probabilistic analyses and the Monte Carlo oracle, and
//! prints reproducible JSON (or text/DOT) reports.

mod commands;
pub mod error;
pub mod input;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

pub use error::{CliError, EXIT_INPUT, EXIT_SOLVER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Dot,
}

#[derive(Debug, Parser)]
#[command(
    name = "pdfa",
    version,
    about = "Probabilistic data-flow analysis for a labelled While language"
)]
pub struct Cli {
    /// Output format; defaults to text for `pretty` and JSON elsewhere.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and label a program, listing its variables and blocks.
    Parse { file: PathBuf },
    /// Print the labelled program in canonical form.
    Pretty { file: PathBuf },
    /// Print the flow graph.
    Cfg { file: PathBuf },
    /// Run a data-flow analysis.
    #[command(subcommand)]
    Analyze(Analysis),
    /// Static branch probabilities from the forward phase.
    BranchProbs {
        file: PathBuf,
        #[command(flatten)]
        forward: ForwardArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Parity/primality abstraction-quality tables over 0..n-1.
    AbstractTest {
        /// Table size; repeat for several rows.
        #[arg(long = "n", required = true)]
        n: Vec<usize>,
    },
    /// Run the program many times and count flow-edge frequencies.
    Exec {
        file: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = pdfa_core::semantics::DEFAULT_MAX_STEPS)]
        max_steps: u64,
        /// `uniform` or a JSON distribution file.
        #[arg(long, default_value = "uniform")]
        input_dist: String,
    },
    /// Dump block operators and abstract test matrices.
    Ops {
        file: PathBuf,
        /// Abstraction spec, e.g. `forgetful:z` or `id`.
        #[arg(long, default_value = "id")]
        abstraction: String,
        /// Only this label.
        #[arg(long)]
        label: Option<u32>,
        /// Also print the concrete matrices.
        #[arg(long)]
        concrete: bool,
        /// Also print the classification matrix and its pseudo-inverse.
        #[arg(long)]
        show_abstraction: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum Analysis {
    /// Classical live variables.
    Lv { file: PathBuf },
    /// Probabilistic live variables.
    Plv {
        file: PathBuf,
        #[command(flatten)]
        forward: ForwardArgs,
        /// JSON object of true-branch probabilities per test label; skips the
        /// forward phase.
        #[arg(long)]
        static_probs: Option<PathBuf>,
        /// Liveness transfer of random assignments.
        #[arg(long, value_enum, default_value_t = RandomMode::Kill)]
        random_transfer: RandomMode,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RandomMode {
    Kill,
    Identity,
}

#[derive(Debug, Args)]
pub struct ForwardArgs {
    /// `uniform` or a JSON distribution file.
    #[arg(long, default_value = "uniform")]
    pub input_dist: String,
    /// Abstraction spec: `id` or a comma list of forgetful:<var>,
    /// parity:<var>, prime:<var>.
    #[arg(long, default_value = "id")]
    pub abstraction: String,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Convergence tolerance for loop equations.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Iteration limit for loop equations.
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
}

/// Runs the tool on `argv` (including the program name), writing the report
/// to `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let format = cli.format.unwrap_or(match cli.command {
        Command::Pretty { .. } => Format::Text,
        _ => Format::Json,
    });
    match commands::dispatch(&cli.command, format, err) {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(err, "pdfa: error: {e}");
            if format == Format::Json {
                let mut doc = serde_json::Map::new();
                doc.insert("error".into(), json!({"kind": e.kind(), "message": e.to_string()}));
                let _ = out.write_all(output::render(doc).as_bytes());
            }
            e.exit_code()
        }
    }
}
