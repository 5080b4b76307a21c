use serde::Serialize;
use thiserror::Error;

use crate::linalg::{DenseMatrix, LinalgError, Lu};

/// A system of vector equations `x_i = c_i + Σ x_j · M_ji` with row-vector
/// unknowns of a common dimension.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    dim: usize,
    constants: Vec<Vec<f64>>,
    terms: Vec<Term>,
}

/// Contribution `x_from · matrix` to the equation of `x_to`.
#[derive(Debug, Clone)]
pub struct Term {
    pub from: usize,
    pub to: usize,
    pub matrix: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("singular system: pivot {pivot:e} at unknown component {index}")]
    Singular { pivot: f64, index: usize },
    #[error("fixed-point iteration did not converge after {iterations} steps (last change {change:e})")]
    NotConverged { iterations: usize, change: f64 },
    #[error("direct and iterative solutions differ by {difference:e}")]
    Disagreement { difference: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Convergence threshold for the iteration and the residual check.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest stacked system (unknowns × dimension) solved densely.
    pub direct_cap: usize,
    /// Allowed gap between the direct and the iterative solution.
    pub agreement_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-9,
            max_iter: 100_000,
            direct_cap: 4096,
            agreement_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Acyclic dependencies, solved by substitution in topological order.
    Topological,
    /// Dense LU solve of the stacked system, confirmed by iteration.
    Direct,
    /// Fixed-point iteration only (stacked system above the dense cap).
    Iterative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub method: SolveMethod,
    pub iterations: Option<usize>,
    /// `max |x − (c + x·M)|` at the returned solution.
    pub residual: f64,
    /// `max |x_direct − x_iterative|` when both were computed.
    pub cross_check: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub values: Vec<Vec<f64>>,
    pub report: SolveReport,
}

impl LinearSystem {
    pub fn new(unknowns: usize, dim: usize) -> Self {
        LinearSystem {
            dim,
            constants: vec![vec![0.0; dim]; unknowns],
            terms: Vec::new(),
        }
    }

    pub fn unknowns(&self) -> usize {
        self.constants.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn set_constant(&mut self, i: usize, c: Vec<f64>) -> Result<(), LinalgError> {
        if c.len() != self.dim {
            return Err(LinalgError::DimensionMismatch {
                op: "set_constant",
                left: (1, c.len()),
                right: (1, self.dim),
            });
        }
        self.constants[i] = c;
        Ok(())
    }

    pub fn add_term(&mut self, from: usize, to: usize, matrix: DenseMatrix) -> Result<(), LinalgError> {
        if matrix.shape() != (self.dim, self.dim) {
            return Err(LinalgError::DimensionMismatch {
                op: "add_term",
                left: matrix.shape(),
                right: (self.dim, self.dim),
            });
        }
        assert!(from < self.unknowns() && to < self.unknowns(), "unknown out of range");
        self.terms.push(Term { from, to, matrix });
        Ok(())
    }

    /// `c + x·M` for every unknown.
    pub fn apply(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut out = self.constants.clone();
        for t in &self.terms {
            accumulate(&mut out[t.to], &x[t.from], &t.matrix);
        }
        out
    }

    pub fn residual(&self, x: &[Vec<f64>]) -> f64 {
        max_diff(&self.apply(x), x)
    }

    /// Unknowns in dependency order, or `None` if some unknown depends on
    /// itself through a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.unknowns();
        let mut indegree = vec![0usize; n];
        let mut succ = vec![Vec::new(); n];
        for t in &self.terms {
            indegree[t.to] += 1;
            succ[t.from].push(t.to);
        }
        let mut ready: Vec<usize> = (0..n).rev().filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop() {
            order.push(i);
            for &j in &succ[i] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.push(j);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Exact substitution along the dependency order of an acyclic system.
    pub fn solve_topological(&self) -> Option<Vec<Vec<f64>>> {
        let order = self.topological_order()?;
        let mut incoming: Vec<Vec<&Term>> = vec![Vec::new(); self.unknowns()];
        for t in &self.terms {
            incoming[t.to].push(t);
        }
        let mut x = vec![Vec::new(); self.unknowns()];
        for i in order {
            let mut v = self.constants[i].clone();
            for t in &incoming[i] {
                accumulate(&mut v, &x[t.from], &t.matrix);
            }
            x[i] = v;
        }
        Some(x)
    }

    /// Dense LU solve of `(I − T) X = C` for the stacked unknown `X`.
    pub fn solve_direct(&self) -> Result<Vec<Vec<f64>>, SolveError> {
        let d = self.dim;
        let size = self.unknowns() * d;
        let mut m = DenseMatrix::identity(size);
        for t in &self.terms {
            for a in 0..d {
                for b in 0..d {
                    let v = t.matrix[(a, b)];
                    if v != 0.0 {
                        m[(t.to * d + b, t.from * d + a)] -= v;
                    }
                }
            }
        }
        let lu = Lu::factor(&m).map_err(|e| match e {
            LinalgError::Singular { pivot, index } => SolveError::Singular { pivot, index },
            other => SolveError::Linalg(other),
        })?;
        let rhs: Vec<f64> = self.constants.concat();
        let flat = lu.solve(&rhs);
        Ok(flat
            .chunks(d.max(1))
            .take(self.unknowns())
            .map(<[f64]>::to_vec)
            .collect())
    }

    /// Jacobi iteration `x ← c + x·M` from `x = c`.
    pub fn solve_iterative(&self, tol: f64, max_iter: usize) -> Result<(Vec<Vec<f64>>, usize), SolveError> {
        let mut x = self.constants.clone();
        let mut change = f64::INFINITY;
        for k in 1..=max_iter {
            let next = self.apply(&x);
            change = max_diff(&next, &x);
            x = next;
            if !change.is_finite() {
                break;
            }
            if change <= tol {
                return Ok((x, k));
            }
        }
        Err(SolveError::NotConverged {
            iterations: max_iter,
            change,
        })
    }

    /// Solves the system: acyclic systems exactly by substitution; cyclic
    /// ones by a dense direct solve checked against fixed-point iteration
    /// (iteration alone above `direct_cap`). A singular, divergent or
    /// inconsistent system is an error, never a silent answer.
    pub fn solve(&self, opts: SolveOptions) -> Result<LinearSolution, SolveError> {
        if let Some(values) = self.solve_topological() {
            let residual = self.residual(&values);
            return Ok(LinearSolution {
                values,
                report: SolveReport {
                    method: SolveMethod::Topological,
                    iterations: None,
                    residual,
                    cross_check: None,
                },
            });
        }
        if self.unknowns() * self.dim <= opts.direct_cap {
            let direct = self.solve_direct()?;
            let (iterated, iterations) = self.solve_iterative(opts.tol * 1e-3, opts.max_iter)?;
            let difference = max_diff(&direct, &iterated);
            if difference > opts.agreement_tol {
                return Err(SolveError::Disagreement { difference });
            }
            let residual = self.residual(&direct);
            return Ok(LinearSolution {
                values: direct,
                report: SolveReport {
                    method: SolveMethod::Direct,
                    iterations: Some(iterations),
                    residual,
                    cross_check: Some(difference),
                },
            });
        }
        let (values, iterations) = self.solve_iterative(opts.tol, opts.max_iter)?;
        let residual = self.residual(&values);
        Ok(LinearSolution {
            values,
            report: SolveReport {
                method: SolveMethod::Iterative,
                iterations: Some(iterations),
                residual,
                cross_check: None,
            },
        })
    }
}

fn accumulate(acc: &mut [f64], x: &[f64], m: &DenseMatrix) {
    for (a, &xa) in x.iter().enumerate() {
        if xa == 0.0 {
            continue;
        }
        for (out, &mab) in acc.iter_mut().zip(m.row(a)) {
            *out += xa * mab;
        }
    }
}

fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(u, v)| u.iter().zip(v).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}
