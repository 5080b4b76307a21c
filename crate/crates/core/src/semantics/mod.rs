//! Concrete semantics: state spaces, expression evaluation, linear block
//! semantics, the small-step interpreter and the Monte Carlo oracle.

mod blocks;
mod eval;
mod monte_carlo;
mod sos;
mod state;

use thiserror::Error;

use crate::linalg::LinalgError;

pub use blocks::{block_matrix, branch_probability, test_diagonal, test_projection, DENSE_STATE_CAP};
pub use eval::{eval_bexpr, eval_expr, wrap_to_range};
pub use monte_carlo::{run_monte_carlo, EdgeStat, McOptions, McReport, DEFAULT_MAX_STEPS};
pub use sos::{sos_step, transitions, Config, Transition};
pub use state::StateSpace;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemError {
    #[error("division or modulo by zero")]
    DivisionByZero,
    #[error("integer overflow during evaluation")]
    Overflow,
    #[error("state space exceeds {cap} states")]
    StateSpaceTooLarge { cap: usize },
    #[error("{states} states exceed the dense-matrix limit of {cap}")]
    TooLargeForDense { states: usize, cap: usize },
    #[error("program is not fully labelled")]
    Unlabelled,
    #[error("configuration has already terminated")]
    Terminated,
    #[error("distribution has {found} entries, state space has {expected}")]
    DistributionSize { expected: usize, found: usize },
    #[error("input is not a probability distribution")]
    NotADistribution,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
