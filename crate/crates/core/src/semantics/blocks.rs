use crate::cfg::Block;
use crate::lang::BExpr;
use crate::linalg::{lin_rep_indexed, DenseMatrix, LinalgError, ProbVector};

use super::eval::{eval_bexpr, eval_expr, wrap_to_range};
use super::{SemError, StateSpace};

/// Largest state space for which block matrices are built densely.
pub const DENSE_STATE_CAP: usize = 2048;

/// Linear (row-stochastic) semantics of an elementary block over the full
/// state space. Tests leave the state unchanged, so they map to the identity.
pub fn block_matrix(block: &Block, ss: &StateSpace) -> Result<DenseMatrix, SemError> {
    let n = ss.len();
    if n > DENSE_STATE_CAP {
        return Err(SemError::TooLargeForDense {
            states: n,
            cap: DENSE_STATE_CAP,
        });
    }
    match block {
        Block::Skip | Block::Test { .. } => Ok(DenseMatrix::identity(n)),
        Block::Assign { var, expr } => {
            let size = ss.decls().size(*var);
            let mut targets = Vec::with_capacity(n);
            for i in 0..n {
                let v = eval_expr(expr, &ss.state(i))?;
                targets.push(ss.with_value(i, *var, wrap_to_range(v, size)));
            }
            Ok(lin_rep_indexed(n, n, |i| Some(targets[i]))?)
        }
        Block::Random { var, dist } => {
            // Σ_c ρ(c) · lin_rep(s ↦ s[x ↦ c])
            let mut out = DenseMatrix::zeros(n, n);
            for (c, p) in dist.pairs() {
                let set = lin_rep_indexed(n, n, |i| Some(ss.with_value(i, *var, c)))?;
                out = out.add(&set.scale(p))?;
            }
            Ok(out)
        }
    }
}

/// Diagonal of the projection selecting the states that satisfy `cond`.
pub fn test_diagonal(cond: &BExpr, ss: &StateSpace) -> Result<Vec<f64>, SemError> {
    (0..ss.len())
        .map(|i| Ok(if eval_bexpr(cond, &ss.state(i))? { 1.0 } else { 0.0 }))
        .collect()
}

/// `P(b)`: the diagonal 0/1 projection of a test over the state space.
pub fn test_projection(cond: &BExpr, ss: &StateSpace) -> Result<DenseMatrix, SemError> {
    Ok(DenseMatrix::from_diagonal(&test_diagonal(cond, ss)?))
}

/// `‖ρ · P‖₁`: the probability that a state drawn from `rho` passes the
/// projection `p`.
pub fn branch_probability(rho: &ProbVector, p: &DenseMatrix) -> Result<f64, LinalgError> {
    Ok(rho.mul_matrix(p)?.one_norm())
}
