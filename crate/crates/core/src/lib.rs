//! Probabilistic data-flow analysis for a labelled probabilistic While
//! language.
//!
//! The pipeline: [`lang`] parses and labels programs, [`cfg`] builds the flow
//! graph, [`semantics`] gives blocks their linear (matrix) semantics and runs
//! programs, [`pai`] abstracts state spaces with classification matrices and
//! their pseudo-inverses, [`dfa`] solves the classical live-variable analysis
//! and [`prob`] solves the probabilistic analyses as linear equation systems.

pub mod cfg;
pub mod dfa;
pub mod lang;
pub mod linalg;
pub mod pai;
pub mod prob;
pub mod semantics;

pub use cfg::{Block, Branch, Edge, FlowGraph};
pub use dfa::{solve_lv, LvSolution};
pub use lang::{parse_labelled, parse_program, pretty_print, Label, Program, Stmt, VarDecls, VarId};
pub use linalg::{DenseMatrix, Enumeration, ProbVector};
pub use pai::{quality_table, Abstraction, AbstractionSpec, QualityTable};
pub use prob::{
    extract_branch_probs, solve_plv, solve_prob_forward, BranchInfo, PlvSolution, ProbError, ProbSolution,
    RandomTransfer, SolveOptions,
};
pub use semantics::{run_monte_carlo, McOptions, McReport, StateSpace};
