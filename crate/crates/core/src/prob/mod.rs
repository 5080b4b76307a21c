//! Probabilistic data-flow analysis as linear equations: the forward
//! occupancy phase with abstract branch-probability extraction, and the
//! probabilistic Live Variables analysis over joint dead/live vectors.

mod forward;
mod linear;
mod plv;

use thiserror::Error;

use crate::lang::Label;
use crate::linalg::LinalgError;
use crate::pai::PaiError;
use crate::semantics::SemError;

pub use forward::{extract_branch_probs, solve_prob_forward, AbstractSemantics, BranchInfo, BranchProb, ProbSolution};
pub use linear::{LinearSolution, LinearSystem, SolveError, SolveMethod, SolveOptions, SolveReport, Term};
pub use plv::{
    all_dead, liveness_vector, lv_operator, marginal_liveness, solve_plv, PlvSolution, Point, RandomTransfer,
    WeightedLiveSet, DEAD, LIVE, MAX_LIVENESS_VARS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Semantics(#[from] SemError),
    #[error(transparent)]
    Abstraction(#[from] PaiError),
    #[error("distribution has {found} entries, expected {expected}")]
    DistributionSize { expected: usize, found: usize },
    #[error("no branch probability for test {0}")]
    MissingProbability(Label),
    #[error("branch probability {p} for test {label} is outside [0, 1]")]
    BadProbability { label: Label, p: f64 },
    #[error("label {0} is not a test")]
    NotATest(Label),
    #[error("label {0} does not exist")]
    UnknownLabel(Label),
    #[error("variable #{0} does not exist")]
    UnknownVariable(usize),
    #[error("{0} variables are too many for the joint liveness space")]
    TooManyVariables(usize),
}

impl ProbError {
    /// Whether the failure comes from solving the equations rather than
    /// from the input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, ProbError::Solve(_))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::cfg::FlowGraph;
    use crate::lang::{parse_program, Program, VarId};
    use crate::linalg::{DenseMatrix, ProbVector};
    use crate::pai::{Abstraction, AbstractionSpec};
    use crate::semantics::StateSpace;

    const RUNNING: &str = include_str!("../../../../programs/running.pw");
    const PRIMES: &str = include_str!("../../../../programs/countprimes.pw");

    fn setup(src: &str) -> (Program, FlowGraph, StateSpace) {
        let p = parse_program(src).unwrap();
        let g = FlowGraph::from_program(&p).unwrap();
        let ss = StateSpace::new(&p.decls).unwrap();
        (p, g, ss)
    }

    fn live(vars: &[usize], n: usize) -> ProbVector {
        liveness_vector(&vars.iter().map(|&v| VarId(v)).collect(), n)
    }

    #[test]
    fn lv_operator_shapes() {
        let (p, g, _) = setup(RUNNING);
        let l = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let k = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let i = DenseMatrix::identity(2);
        let f3 = lv_operator(&g.blocks[&Label(3)], &p.decls, RandomTransfer::Kill).unwrap();
        assert_eq!(f3, DenseMatrix::kron_all([&l, &l, &i]).unwrap());
        let f5 = lv_operator(&g.blocks[&Label(5)], &p.decls, RandomTransfer::Kill).unwrap();
        assert_eq!(f5, DenseMatrix::kron_all([&l, &i, &k]).unwrap());
        let f2 = lv_operator(&g.blocks[&Label(2)], &p.decls, RandomTransfer::Identity).unwrap();
        assert_eq!(f2, DenseMatrix::identity(8));
        let skip = lv_operator(&crate::cfg::Block::Skip, &p.decls, RandomTransfer::Kill).unwrap();
        assert_eq!(skip, DenseMatrix::identity(8));
    }

    #[test]
    fn liveness_encoding() {
        // x live, y and z dead: (0,1)⊗(1,0)⊗(1,0)
        let v = live(&[0], 3);
        let expected = ProbVector::new(LIVE.to_vec())
            .kron(&ProbVector::new(DEAD.to_vec()))
            .unwrap()
            .kron(&ProbVector::new(DEAD.to_vec()))
            .unwrap();
        assert_eq!(v, expected);
        assert_eq!(marginal_liveness(&v, VarId(0), 3), 1.0);
        assert_eq!(marginal_liveness(&all_dead(3), VarId(2), 3), 0.0);
    }

    #[test]
    fn running_forward_and_plv() {
        let (p, g, ss) = setup(RUNNING);
        let abs = Abstraction::for_state_space(&ss, &"forgetful:z".parse::<AbstractionSpec>().unwrap()).unwrap();
        let fwd = solve_prob_forward(&p, &g, &ss.uniform(), &abs, SolveOptions::default()).unwrap();
        assert_eq!(fwd.report.method, SolveMethod::Topological);
        assert!((fwd.entry[&Label(5)].one_norm() - 0.25).abs() < 1e-12);
        assert!((fwd.entry[&Label(6)].one_norm() - 0.75).abs() < 1e-12);
        let br = extract_branch_probs(&fwd, &g).unwrap();
        assert!((br.tests[&Label(4)].p_true - 0.25).abs() < 1e-12);

        let plv = solve_plv(&g, &p.decls, &br, RandomTransfer::Kill, SolveOptions::default()).unwrap();
        let mix = |a: &[usize], b: &[usize], w: f64| live(a, 3).scale(w).add(&live(b, 3).scale(1.0 - w)).unwrap();
        assert!(plv.exit[&Label(4)].max_abs_diff(&mix(&[0], &[1], 0.25)) < 1e-12);
        assert!(plv.entry[&Label(4)].max_abs_diff(&mix(&[0], &[0, 1], 0.25)) < 1e-12);
        assert!(plv.entry[&Label(1)].max_abs_diff(&all_dead(3)) < 1e-12);
        assert!((plv.marginal(Label(4), Point::Entry, VarId(1)).unwrap() - 0.75).abs() < 1e-12);
        assert!((plv.marginal(Label(4), Point::Exit, VarId(0)).unwrap() - 0.25).abs() < 1e-12);
        let d = plv.decompose(&plv.entry[&Label(4)], &p.decls);
        assert_eq!(d[0].live, ["x", "y"]);
        assert!(plv.marginal(Label(9), Point::Entry, VarId(0)).is_err());
    }

    #[test]
    fn skip_program_keeps_distribution() {
        let (p, g, ss) = setup("var x : 0..2; [skip]^1; [skip]^2");
        let rho = ProbVector::new(vec![0.2, 0.3, 0.5]);
        let fwd = solve_prob_forward(&p, &g, &rho, &Abstraction::identity(ss.len()), SolveOptions::default()).unwrap();
        for l in [Label(1), Label(2)] {
            assert_eq!(fwd.entry[&l], rho);
            assert_eq!(fwd.exit[&l], rho);
        }
        let plv = solve_plv(
            &g,
            &p.decls,
            &BranchInfo::default(),
            RandomTransfer::Kill,
            SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(plv.entry[&Label(2)], all_dead(1));
    }

    #[test]
    fn constant_true_test() {
        let (p, g, ss) = setup("var x : 0..1; if [true]^1 then [skip]^2 else [skip]^3 fi");
        let fwd = solve_prob_forward(
            &p,
            &g,
            &ss.uniform(),
            &Abstraction::identity(2),
            SolveOptions::default(),
        )
        .unwrap();
        let br = extract_branch_probs(&fwd, &g).unwrap();
        assert_eq!(br.tests[&Label(1)].p_true, 1.0);
        assert!(br.warnings().next().is_none());
    }

    #[test]
    fn unreachable_test_gets_half_with_warning() {
        let (p, g, ss) =
            setup("var x : 0..1; if [x > 5]^1 then if [x = 0]^2 then [skip]^3 else [skip]^4 fi else [skip]^5 fi");
        let fwd = solve_prob_forward(
            &p,
            &g,
            &ss.uniform(),
            &Abstraction::identity(2),
            SolveOptions::default(),
        )
        .unwrap();
        let br = extract_branch_probs(&fwd, &g).unwrap();
        assert_eq!(br.tests[&Label(2)].p_true, 0.5);
        assert_eq!(br.warnings().count(), 1);
    }

    #[test]
    fn countprimes_loop_converges() {
        let (p, g, ss) = setup(PRIMES);
        let fwd = solve_prob_forward(
            &p,
            &g,
            &ss.uniform(),
            &Abstraction::identity(ss.len()),
            SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(fwd.report.method, SolveMethod::Direct);
        // the loop test is reached 11 times, 10 of them entering the body
        let br = extract_branch_probs(&fwd, &g).unwrap();
        assert!((fwd.entry[&Label(2)].one_norm() - 11.0).abs() < 1e-9);
        assert!((br.tests[&Label(2)].p_true - 10.0 / 11.0).abs() < 1e-9);
        // primes among 2..=11: 2, 3, 5, 7, 11
        assert!((br.tests[&Label(3)].p_true - 0.5).abs() < 1e-9);
        let plv = solve_plv(&g, &p.decls, &br, RandomTransfer::Kill, SolveOptions::default()).unwrap();
        assert!(plv.report.residual <= 1e-9);
        assert!(plv.report.cross_check.unwrap() <= 1e-8);
        for v in plv.entry.values().chain(plv.exit.values()) {
            assert!((v.one_norm() - 1.0).abs() < 1e-9);
            assert!(v.values().iter().all(|&x| x >= -1e-12));
        }
    }

    #[test]
    fn infinite_loop_is_singular() {
        let (p, g, ss) = setup("var x : 0..1; while [true]^1 do [skip]^2 od");
        let err = solve_prob_forward(
            &p,
            &g,
            &ss.uniform(),
            &Abstraction::identity(2),
            SolveOptions::default(),
        )
        .unwrap_err();
        assert!(err.is_solver_failure(), "{err}");
    }

    #[test]
    fn static_probabilities() {
        let (_, g, _) = setup(RUNNING);
        let probs = [(Label(4), 0.25)].into_iter().collect();
        let br = BranchInfo::from_static(&g, &probs).unwrap();
        assert_eq!(br.edge_probability(&g, Label(4), Label(6)), Some(0.75));
        assert_eq!(br.edge_probability(&g, Label(1), Label(2)), Some(1.0));
        assert!(matches!(
            BranchInfo::from_static(&g, &Default::default()),
            Err(ProbError::MissingProbability(Label(4)))
        ));
        let bad = [(Label(4), 1.5)].into_iter().collect();
        assert!(matches!(
            BranchInfo::from_static(&g, &bad),
            Err(ProbError::BadProbability { .. })
        ));
        let not_test = [(Label(4), 0.5), (Label(3), 0.5)].into_iter().collect();
        assert_eq!(
            BranchInfo::from_static(&g, &not_test),
            Err(ProbError::NotATest(Label(3)))
        );
    }

    #[test]
    fn classical_support_contains_probabilistic_support() {
        let (p, g, ss) = setup(PRIMES);
        let fwd = solve_prob_forward(
            &p,
            &g,
            &ss.uniform(),
            &Abstraction::identity(ss.len()),
            SolveOptions::default(),
        )
        .unwrap();
        let br = extract_branch_probs(&fwd, &g).unwrap();
        let plv = solve_plv(&g, &p.decls, &br, RandomTransfer::Kill, SolveOptions::default()).unwrap();
        let classical = crate::dfa::solve_lv(&g, &p.decls);
        for l in g.labels() {
            let support: BTreeSet<VarId> = p
                .decls
                .ids()
                .filter(|&v| plv.marginal(l, Point::Entry, v).unwrap() > 1e-12)
                .collect();
            assert!(support.is_subset(&classical.entry[&l]), "label {l}");
        }
    }
}
