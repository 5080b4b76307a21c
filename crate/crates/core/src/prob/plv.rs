use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::cfg::{Block, FlowGraph};
use crate::dfa::{gen_lv, kill_lv};
use crate::lang::{Label, VarDecls, VarId};
use crate::linalg::{DenseMatrix, ProbVector};

use super::forward::BranchInfo;
use super::linear::{LinearSystem, SolveOptions, SolveReport};
use super::ProbError;

/// Most variables the joint liveness space (dimension `2^vars`) may have.
pub const MAX_LIVENESS_VARS: usize = 10;

/// Liveness of one variable: `(1, 0)` is dead, `(0, 1)` is live.
pub const DEAD: [f64; 2] = [1.0, 0.0];
pub const LIVE: [f64; 2] = [0.0, 1.0];

/// Transfer of a random assignment `x ?= ρ` in the probabilistic analysis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum RandomTransfer {
    /// `x` becomes dead, as for an ordinary assignment.
    #[default]
    Kill,
    /// Identity on every variable.
    Identity,
}

fn makes_live() -> DenseMatrix {
    DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]).expect("finite")
}

fn makes_dead() -> DenseMatrix {
    DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).expect("finite")
}

/// The backward liveness operator of a block: per variable, "live" for
/// variables it reads, "dead" for a variable it overwrites without reading,
/// identity otherwise, combined by Kronecker product.
pub fn lv_operator(block: &Block, decls: &VarDecls, random: RandomTransfer) -> Result<DenseMatrix, ProbError> {
    if decls.len() > MAX_LIVENESS_VARS {
        return Err(ProbError::TooManyVariables(decls.len()));
    }
    let read = gen_lv(block);
    let written: BTreeSet<VarId> = match (block, random) {
        (Block::Random { .. }, RandomTransfer::Identity) => BTreeSet::new(),
        _ => kill_lv(block),
    };
    let factors: Vec<DenseMatrix> = decls
        .ids()
        .map(|v| {
            if read.contains(&v) {
                makes_live()
            } else if written.contains(&v) {
                makes_dead()
            } else {
                DenseMatrix::identity(2)
            }
        })
        .collect();
    Ok(DenseMatrix::kron_all(&factors)?)
}

/// All variables dead: the extremal value at program exit.
pub fn all_dead(vars: usize) -> ProbVector {
    let mut v = vec![0.0; 1 << vars];
    v[0] = 1.0;
    ProbVector::new(v)
}

/// Joint liveness vector of the given live set.
pub fn liveness_vector(live: &BTreeSet<VarId>, vars: usize) -> ProbVector {
    let index: usize = live.iter().map(|v| 1 << (vars - 1 - v.0)).sum();
    ProbVector::basis(1 << vars, index)
}

/// Probability that `var` is live under the joint liveness vector `v`.
pub fn marginal_liveness(v: &ProbVector, var: VarId, vars: usize) -> f64 {
    let bit = 1 << (vars - 1 - var.0);
    v.values()
        .iter()
        .enumerate()
        .filter(|(i, _)| i & bit != 0)
        .map(|(_, p)| p)
        .sum()
}

/// Which side of a label a vector describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Point {
    Entry,
    Exit,
}

#[derive(Debug, Clone)]
pub struct PlvSolution {
    pub vars: usize,
    pub entry: BTreeMap<Label, ProbVector>,
    pub exit: BTreeMap<Label, ProbVector>,
    pub report: SolveReport,
}

/// One joint configuration with nonzero weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedLiveSet {
    pub live: Vec<String>,
    pub p: f64,
}

impl PlvSolution {
    pub fn vector(&self, label: Label, at: Point) -> Result<&ProbVector, ProbError> {
        let map = match at {
            Point::Entry => &self.entry,
            Point::Exit => &self.exit,
        };
        map.get(&label).ok_or(ProbError::UnknownLabel(label))
    }

    pub fn marginal(&self, label: Label, at: Point, var: VarId) -> Result<f64, ProbError> {
        if var.0 >= self.vars {
            return Err(ProbError::UnknownVariable(var.0));
        }
        Ok(marginal_liveness(self.vector(label, at)?, var, self.vars))
    }

    /// The vector as a list of live sets with their weights, heaviest first.
    pub fn decompose(&self, v: &ProbVector, decls: &VarDecls) -> Vec<WeightedLiveSet> {
        let mut out: Vec<WeightedLiveSet> = v
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(i, &p)| WeightedLiveSet {
                live: decls
                    .iter()
                    .filter(|(id, _)| i & (1 << (self.vars - 1 - id.0)) != 0)
                    .map(|(_, d)| d.name.clone())
                    .collect(),
                p,
            })
            .collect();
        out.sort_by(|a, b| b.p.total_cmp(&a.p).then_with(|| a.live.cmp(&b.live)));
        out
    }
}

/// Backward phase: `exit(ℓ) = Σ p_ℓℓ' · entry(ℓ') + p_exit(ℓ) · ι` and
/// `entry(ℓ) = exit(ℓ) · F_ℓ`, with `ι` the all-dead vector.
pub fn solve_plv(
    g: &FlowGraph,
    decls: &VarDecls,
    branches: &BranchInfo,
    random: RandomTransfer,
    opts: SolveOptions,
) -> Result<PlvSolution, ProbError> {
    let vars = decls.len();
    if vars > MAX_LIVENESS_VARS {
        return Err(ProbError::TooManyVariables(vars));
    }
    for (&l, block) in &g.blocks {
        if block.is_test() && !branches.tests.contains_key(&l) {
            return Err(ProbError::MissingProbability(l));
        }
    }
    let labels: Vec<Label> = g.labels().collect();
    let n = labels.len();
    let index: BTreeMap<Label, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let entry_of = |l: Label| index[&l];
    let exit_of = |l: Label| n + index[&l];
    let dim = 1 << vars;
    let iota = all_dead(vars);
    let mut system = LinearSystem::new(2 * n, dim);
    for &l in &labels {
        system.add_term(exit_of(l), entry_of(l), lv_operator(&g.blocks[&l], decls, random)?)?;
        for e in g.successors(l) {
            let p = branches
                .edge_probability(g, l, e.to)
                .ok_or(ProbError::MissingProbability(l))?;
            system.add_term(entry_of(e.to), exit_of(l), DenseMatrix::identity(dim).scale(p))?;
        }
        let leave = branches.exit_probability(g, l);
        if leave != 0.0 {
            system.set_constant(exit_of(l), iota.scale(leave).into_values())?;
        }
    }
    let sol = system.solve(opts)?;
    let mut values = sol.values.into_iter().map(ProbVector::new);
    let entry = labels.iter().copied().zip(values.by_ref().take(n)).collect();
    let exit = labels.iter().copied().zip(values).collect();
    Ok(PlvSolution {
        vars,
        entry,
        exit,
        report: sol.report,
    })
}
