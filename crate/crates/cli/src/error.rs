use pdfa_core::cfg::CfgError;
use pdfa_core::dfa::DfaError;
use pdfa_core::lang::LangError;
use pdfa_core::linalg::LinalgError;
use pdfa_core::pai::PaiError;
use pdfa_core::prob::ProbError;
use pdfa_core::semantics::SemError;
use thiserror::Error;

/// Exit code for malformed input or usage.
pub const EXIT_INPUT: i32 = 1;
/// Exit code for equation systems that could not be solved.
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}: no such file")]
    NoSuchFile(String),
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("{path}:{source}")]
    Parse { path: String, source: LangError },
    #[error("{0}")]
    Input(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(_) => EXIT_SOLVER,
            _ => EXIT_INPUT,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Solver(_) => "solver",
            _ => "input",
        }
    }
}

impl From<ProbError> for CliError {
    fn from(e: ProbError) -> Self {
        match e {
            ProbError::Linalg(l) => l.into(),
            e if e.is_solver_failure() => CliError::Solver(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular { .. } | LinalgError::NotConverged { .. } => CliError::Solver(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<DfaError> for CliError {
    fn from(e: DfaError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<CfgError> for CliError {
    fn from(e: CfgError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PaiError> for CliError {
    fn from(e: PaiError) -> Self {
        match e {
            PaiError::Linalg(l) => l.into(),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<SemError> for CliError {
    fn from(e: SemError) -> Self {
        match e {
            SemError::Linalg(l) => l.into(),
            e => CliError::Input(e.to_string()),
        }
    }
}
