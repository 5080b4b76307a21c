use std::collections::BTreeMap;

use serde::Serialize;

use crate::cfg::{Block, Branch, FlowGraph};
use crate::lang::{Label, Program};
use crate::linalg::{DenseMatrix, ProbVector};
use crate::pai::Abstraction;
use crate::semantics::{block_matrix, test_diagonal, StateSpace};

use super::linear::{LinearSystem, SolveOptions, SolveReport};
use super::ProbError;

/// Below this mass a test counts as unreachable.
const UNREACHABLE_MASS: f64 = 1e-15;

/// Abstract operators of every label: `F#` for elementary blocks and the
/// abstract test `P#` for tests.
#[derive(Debug, Clone)]
pub struct AbstractSemantics {
    pub abstraction: Abstraction,
    pub operators: BTreeMap<Label, DenseMatrix>,
    pub tests: BTreeMap<Label, DenseMatrix>,
}

impl AbstractSemantics {
    pub fn build(program: &Program, g: &FlowGraph, abs: &Abstraction) -> Result<Self, ProbError> {
        let ss = StateSpace::new(&program.decls)?;
        if abs.source_len() != ss.len() {
            return Err(ProbError::DistributionSize {
                expected: ss.len(),
                found: abs.source_len(),
            });
        }
        let k = abs.abstract_len();
        let mut operators = BTreeMap::new();
        let mut tests = BTreeMap::new();
        for (&l, block) in &g.blocks {
            match block {
                Block::Test { cond, .. } => {
                    tests.insert(l, abs.abstract_test_diagonal(&test_diagonal(cond, &ss)?)?);
                    operators.insert(l, DenseMatrix::identity(k));
                }
                Block::Skip => {
                    operators.insert(l, DenseMatrix::identity(k));
                }
                _ => {
                    let f = block_matrix(block, &ss)?;
                    let lifted = if abs.is_identity() { f } else { abs.lift_operator(&f)? };
                    operators.insert(l, lifted);
                }
            }
        }
        Ok(AbstractSemantics {
            abstraction: abs.clone(),
            operators,
            tests,
        })
    }

    /// The operator carrying mass along a flow edge out of `from`.
    fn edge_operator(&self, from: Label, branch: Branch) -> Result<DenseMatrix, ProbError> {
        let f = &self.operators[&from];
        Ok(match branch {
            Branch::Unconditional => f.clone(),
            Branch::True => self.tests[&from].clone(),
            Branch::False => self.tests[&from].complement()?,
        })
    }
}

/// Per-label occupancy measures over the abstract state space. Inside
/// loops these are expected visit masses and may exceed 1.
#[derive(Debug, Clone)]
pub struct ProbSolution {
    pub semantics: AbstractSemantics,
    pub entry: BTreeMap<Label, ProbVector>,
    pub exit: BTreeMap<Label, ProbVector>,
    pub report: SolveReport,
}

/// Forward phase: `entry(init) = ρ0·A`, `exit(ℓ) = entry(ℓ)·F#_ℓ`, and every
/// other entry collects its predecessors' exits, filtered by `P#` or
/// `I − P#` along test edges.
pub fn solve_prob_forward(
    program: &Program,
    g: &FlowGraph,
    rho0: &ProbVector,
    abs: &Abstraction,
    opts: SolveOptions,
) -> Result<ProbSolution, ProbError> {
    let semantics = AbstractSemantics::build(program, g, abs)?;
    if rho0.len() != abs.source_len() {
        return Err(ProbError::DistributionSize {
            expected: abs.source_len(),
            found: rho0.len(),
        });
    }
    let labels: Vec<Label> = g.labels().collect();
    let index: BTreeMap<Label, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let mut system = LinearSystem::new(labels.len(), abs.abstract_len());
    system.set_constant(index[&g.init], abs.lift_distribution(rho0)?.into_values())?;
    for e in &g.edges {
        system.add_term(index[&e.from], index[&e.to], semantics.edge_operator(e.from, e.branch)?)?;
    }
    let sol = system.solve(opts)?;
    let mut entry = BTreeMap::new();
    let mut exit = BTreeMap::new();
    for (l, v) in labels.into_iter().zip(sol.values) {
        let v = ProbVector::new(v);
        exit.insert(l, v.mul_matrix(&semantics.operators[&l])?);
        entry.insert(l, v);
    }
    Ok(ProbSolution {
        semantics,
        entry,
        exit,
        report: sol.report,
    })
}

/// Static branch probabilities of one test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchProb {
    pub true_to: Label,
    /// `None` when the false branch leaves the program.
    pub false_to: Option<Label>,
    pub p_true: f64,
    pub p_false: f64,
    /// `‖σ‖₁` of the measure reaching the test; absent for user-given values.
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    /// The abstract test matrix the probability was extracted from.
    #[serde(skip)]
    pub projection: Option<DenseMatrix>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct BranchInfo {
    pub tests: BTreeMap<Label, BranchProb>,
}

impl BranchInfo {
    /// Probability of taking the flow edge `from → to`; elementary blocks
    /// pass control on with probability 1.
    pub fn edge_probability(&self, g: &FlowGraph, from: Label, to: Label) -> Option<f64> {
        match self.tests.get(&from) {
            Some(b) if b.true_to == to => Some(b.p_true),
            Some(b) if b.false_to == Some(to) => Some(b.p_false),
            Some(_) => None,
            None => g.successors(from).any(|e| e.to == to).then_some(1.0),
        }
    }

    /// Probability of leaving the program right after `label`.
    pub fn exit_probability(&self, g: &FlowGraph, label: Label) -> f64 {
        if !g.finals.contains(&label) {
            return 0.0;
        }
        match self.tests.get(&label) {
            Some(b) if b.false_to.is_none() => b.p_false,
            Some(_) => 0.0,
            None => 1.0,
        }
    }

    pub fn warnings(&self) -> impl Iterator<Item = (Label, &str)> {
        self.tests
            .iter()
            .filter_map(|(&l, b)| b.warning.as_deref().map(|w| (l, w)))
    }

    /// User-supplied probabilities of the true branch, one per test.
    pub fn from_static(g: &FlowGraph, p_true: &BTreeMap<Label, f64>) -> Result<Self, ProbError> {
        for &l in p_true.keys() {
            match g.blocks.get(&l) {
                None => return Err(ProbError::UnknownLabel(l)),
                Some(b) if !b.is_test() => return Err(ProbError::NotATest(l)),
                _ => {}
            }
        }
        let mut tests = BTreeMap::new();
        for (&l, block) in &g.blocks {
            if !block.is_test() {
                continue;
            }
            let p = *p_true.get(&l).ok_or(ProbError::MissingProbability(l))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(ProbError::BadProbability { label: l, p });
            }
            tests.insert(
                l,
                BranchProb {
                    true_to: g.true_successor(l).expect("tests have a true successor"),
                    false_to: g.false_successor(l),
                    p_true: p,
                    p_false: 1.0 - p,
                    mass: None,
                    warning: None,
                    projection: None,
                },
            );
        }
        Ok(BranchInfo { tests })
    }
}

/// `p = ‖σ·P#‖₁ / ‖σ‖₁` at every test, with `σ` the measure reaching it.
/// A test that receives no mass gets ½ each way and a warning.
pub fn extract_branch_probs(sol: &ProbSolution, g: &FlowGraph) -> Result<BranchInfo, ProbError> {
    let mut tests = BTreeMap::new();
    for (&l, p_sharp) in &sol.semantics.tests {
        let sigma = &sol.exit[&l];
        let mass = sigma.one_norm();
        let true_to = g.true_successor(l).expect("tests have a true successor");
        let false_to = g.false_successor(l);
        let (p_true, p_false, warning) = if mass <= UNREACHABLE_MASS {
            (
                0.5,
                0.5,
                Some(format!(
                    "test {l} is unreachable under the input distribution; using 1/2"
                )),
            )
        } else {
            let t = sigma.mul_matrix(p_sharp)?.one_norm();
            let f = sigma.mul_matrix(&p_sharp.complement()?)?.one_norm();
            (t / mass, f / mass, None)
        };
        tests.insert(
            l,
            BranchProb {
                true_to,
                false_to,
                p_true,
                p_false,
                mass: Some(mass),
                warning,
                projection: Some(p_sharp.clone()),
            },
        );
    }
    Ok(BranchInfo { tests })
}
