//! Classical data-flow analysis: the monotone framework over finite powerset
//! lattices with a worklist solver, and Live Variables as an instance.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::cfg::{Block, Edge, FlowGraph};
use crate::lang::{Label, VarDecls, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// How facts from several flow predecessors are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    /// May analysis; the least element is the empty set.
    Union,
    /// Must analysis; the least element is the whole universe.
    Intersection,
}

impl Combine {
    fn join<T: Ord + Clone>(self, acc: &mut BTreeSet<T>, incoming: &BTreeSet<T>) {
        match self {
            Combine::Union => acc.extend(incoming.iter().cloned()),
            Combine::Intersection => acc.retain(|x| incoming.contains(x)),
        }
    }

    fn below<T: Ord>(self, a: &BTreeSet<T>, b: &BTreeSet<T>) -> bool {
        match self {
            Combine::Union => a.is_subset(b),
            Combine::Intersection => a.is_superset(b),
        }
    }
}

pub type Transfer<'a, T> = Box<dyn Fn(Label, &BTreeSet<T>) -> BTreeSet<T> + 'a>;

/// A monotone-framework instance over subsets of `universe`.
pub struct MonotoneInstance<'a, T> {
    pub universe: BTreeSet<T>,
    pub direction: Direction,
    pub combine: Combine,
    pub extremal: BTreeSet<Label>,
    pub iota: BTreeSet<T>,
    pub transfer: Transfer<'a, T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorklistOrder {
    Fifo,
    Lifo,
    /// Picks a uniformly random pending edge each step.
    Shuffled(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DfaError {
    #[error("transfer function at label {0} is not monotone")]
    NonMonotone(Label),
    #[error("label {0} is not in the flow graph")]
    UnknownLabel(Label),
}

/// Per-label facts before (`incoming`) and after (`outgoing`) the transfer
/// function, in the direction of the analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneSolution<T> {
    pub incoming: BTreeMap<Label, BTreeSet<T>>,
    pub outgoing: BTreeMap<Label, BTreeSet<T>>,
    /// Number of edges processed.
    pub steps: usize,
}

impl<T: Ord + Clone> MonotoneInstance<'_, T> {
    fn bottom(&self) -> BTreeSet<T> {
        match self.combine {
            Combine::Union => BTreeSet::new(),
            Combine::Intersection => self.universe.clone(),
        }
    }

    fn edges(&self, g: &FlowGraph) -> Vec<(Label, Label)> {
        match self.direction {
            Direction::Forward => g.edges.iter().map(|e| (e.from, e.to)).collect(),
            Direction::Backward => g.edges.iter().map(|e| (e.to, e.from)).collect(),
        }
    }

    fn initial(&self, g: &FlowGraph) -> Result<BTreeMap<Label, BTreeSet<T>>, DfaError> {
        for l in &self.extremal {
            if !g.blocks.contains_key(l) {
                return Err(DfaError::UnknownLabel(*l));
            }
        }
        Ok(g.labels()
            .map(|l| {
                let v = if self.extremal.contains(&l) {
                    self.iota.clone()
                } else {
                    self.bottom()
                };
                (l, v)
            })
            .collect())
    }

    fn finish(&self, incoming: BTreeMap<Label, BTreeSet<T>>, steps: usize) -> MonotoneSolution<T> {
        let outgoing = incoming.iter().map(|(&l, v)| (l, (self.transfer)(l, v))).collect();
        MonotoneSolution {
            incoming,
            outgoing,
            steps,
        }
    }

    /// Least fixpoint by the worklist algorithm over flow edges.
    pub fn solve(&self, g: &FlowGraph, order: WorklistOrder) -> Result<MonotoneSolution<T>, DfaError> {
        let edges = self.edges(g);
        let mut analysis = self.initial(g)?;
        let mut out_edges: BTreeMap<Label, Vec<(Label, Label)>> = BTreeMap::new();
        for &(a, b) in &edges {
            out_edges.entry(a).or_default().push((a, b));
        }
        let mut pending: BTreeSet<(Label, Label)> = edges.iter().copied().collect();
        let mut queue: VecDeque<(Label, Label)> = edges.iter().copied().collect();
        let mut rng = match order {
            WorklistOrder::Shuffled(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        let mut steps = 0;
        loop {
            let next = match (order, rng.as_mut()) {
                (WorklistOrder::Lifo, _) => queue.pop_back(),
                (WorklistOrder::Shuffled(_), Some(r)) if !queue.is_empty() => {
                    let i = r.random_range(0..queue.len());
                    queue.swap_remove_back(i)
                }
                _ => queue.pop_front(),
            };
            let Some((from, to)) = next else { break };
            pending.remove(&(from, to));
            steps += 1;
            let produced = (self.transfer)(from, &analysis[&from]);
            if self.combine.below(&produced, &analysis[&to]) {
                continue;
            }
            let old = analysis[&to].clone();
            let mut new = old.clone();
            self.combine.join(&mut new, &produced);
            if !self
                .combine
                .below(&(self.transfer)(to, &old), &(self.transfer)(to, &new))
            {
                return Err(DfaError::NonMonotone(to));
            }
            analysis.insert(to, new);
            for &e in out_edges.get(&to).into_iter().flatten() {
                if pending.insert(e) {
                    queue.push_back(e);
                }
            }
        }
        Ok(self.finish(analysis, steps))
    }

    /// Chaotic iteration sweeping all labels in order until nothing changes.
    pub fn solve_round_robin(&self, g: &FlowGraph) -> Result<MonotoneSolution<T>, DfaError> {
        let edges = self.edges(g);
        let init = self.initial(g)?;
        let mut analysis = init.clone();
        let mut steps = 0;
        let mut changed = true;
        while changed {
            changed = false;
            for (&l, base) in &init {
                let mut v = base.clone();
                for &(from, to) in &edges {
                    if to == l {
                        steps += 1;
                        self.combine.join(&mut v, &(self.transfer)(from, &analysis[&from]));
                    }
                }
                if v != analysis[&l] {
                    analysis.insert(l, v);
                    changed = true;
                }
            }
        }
        Ok(self.finish(analysis, steps))
    }
}

/// Variables read by a block.
pub fn gen_lv(block: &Block) -> BTreeSet<VarId> {
    match block {
        Block::Skip | Block::Random { .. } => BTreeSet::new(),
        Block::Assign { expr, .. } => expr.free_vars().into_iter().collect(),
        Block::Test { cond, .. } => cond.free_vars().into_iter().collect(),
    }
}

/// Variables overwritten by a block.
pub fn kill_lv(block: &Block) -> BTreeSet<VarId> {
    match block {
        Block::Assign { var, .. } | Block::Random { var, .. } => BTreeSet::from([*var]),
        Block::Skip | Block::Test { .. } => BTreeSet::new(),
    }
}

/// The Live Variables instance: backward, union, empty set at final labels.
pub fn lv_instance<'a>(g: &'a FlowGraph, decls: &VarDecls) -> MonotoneInstance<'a, VarId> {
    MonotoneInstance {
        universe: decls.ids().collect(),
        direction: Direction::Backward,
        combine: Combine::Union,
        extremal: g.finals.clone(),
        iota: BTreeSet::new(),
        transfer: Box::new(move |l, live| {
            let block = &g.blocks[&l];
            let kill = kill_lv(block);
            let mut out: BTreeSet<VarId> = live.difference(&kill).copied().collect();
            out.extend(gen_lv(block));
            out
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LvSolution {
    pub entry: BTreeMap<Label, BTreeSet<VarId>>,
    pub exit: BTreeMap<Label, BTreeSet<VarId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NamedLiveSets {
    pub entry: Vec<String>,
    pub exit: Vec<String>,
}

impl LvSolution {
    /// Per-label variable names, each list sorted lexicographically.
    pub fn named(&self, decls: &VarDecls) -> BTreeMap<Label, NamedLiveSets> {
        let names = |s: &BTreeSet<VarId>| {
            let mut v: Vec<String> = s.iter().map(|&id| decls.name(id).to_string()).collect();
            v.sort();
            v
        };
        self.entry
            .iter()
            .map(|(&l, en)| {
                (
                    l,
                    NamedLiveSets {
                        entry: names(en),
                        exit: names(&self.exit[&l]),
                    },
                )
            })
            .collect()
    }

    /// Checks `exit(ℓ) = ⋃ entry(ℓ')` over flow successors for every label.
    pub fn is_consistent_with(&self, g: &FlowGraph) -> bool {
        g.labels().all(|l| {
            let mut union = BTreeSet::new();
            for Edge { to, .. } in g.successors(l) {
                union.extend(self.entry[to].iter().copied());
            }
            union == self.exit[&l]
        })
    }
}

pub fn solve_lv(g: &FlowGraph, decls: &VarDecls) -> LvSolution {
    let sol = lv_instance(g, decls)
        .solve(g, WorklistOrder::Fifo)
        .expect("live variables transfer functions are monotone");
    LvSolution {
        exit: sol.incoming,
        entry: sol.outgoing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;

    fn names(decls: &VarDecls, s: &BTreeSet<VarId>) -> Vec<String> {
        s.iter().map(|&v| decls.name(v).to_string()).collect()
    }

    #[test]
    fn gen_kill_examples() {
        let p = parse_program(include_str!("../../../programs/running.pw")).unwrap();
        let g = FlowGraph::from_program(&p).unwrap();
        let b3 = &g.blocks[&Label(3)];
        assert_eq!(names(&p.decls, &gen_lv(b3)), ["x", "y"]);
        assert_eq!(names(&p.decls, &kill_lv(b3)), ["x"]);
        let b2 = &g.blocks[&Label(2)];
        assert!(gen_lv(b2).is_empty());
        assert_eq!(names(&p.decls, &kill_lv(b2)), ["y"]);
        assert!(gen_lv(&Block::Skip).is_empty() && kill_lv(&Block::Skip).is_empty());
    }

    #[test]
    fn chain_of_copies() {
        let p = parse_program("var x:0..1; var y:0..1; var z:0..1; [x := 1]^1; [y := x]^2; [z := y]^3").unwrap();
        let g = FlowGraph::from_program(&p).unwrap();
        let s = solve_lv(&g, &p.decls);
        assert_eq!(names(&p.decls, &s.entry[&Label(2)]), ["x"]);
        assert_eq!(names(&p.decls, &s.entry[&Label(3)]), ["y"]);
        assert!(s.exit[&Label(3)].is_empty());
        assert!(s.entry[&Label(1)].is_empty());
        assert!(s.is_consistent_with(&g));
    }

    #[test]
    fn single_skip() {
        let p = parse_program("var x:0..1; [skip]^1").unwrap();
        let g = FlowGraph::from_program(&p).unwrap();
        let s = solve_lv(&g, &p.decls);
        assert!(s.entry[&Label(1)].is_empty() && s.exit[&Label(1)].is_empty());
    }

    #[test]
    fn loop_keeps_counter_live() {
        let p = parse_program(include_str!("../../../programs/countprimes.pw")).unwrap();
        let g = FlowGraph::from_program(&p).unwrap();
        let s = solve_lv(&g, &p.decls);
        assert!(s.is_consistent_with(&g));
        assert_eq!(names(&p.decls, &s.entry[&Label(2)]), ["i", "p"]);
        assert!(s.exit[&Label(2)].contains(&VarId(0)));
        assert!(s.entry[&Label(1)].iter().all(|&v| v == VarId(1)));
    }

    #[test]
    fn orders_agree() {
        let p = parse_program(include_str!("../../../programs/countprimes.pw")).unwrap();
        let g = FlowGraph::from_program(&p).unwrap();
        let inst = lv_instance(&g, &p.decls);
        let fifo = inst.solve(&g, WorklistOrder::Fifo).unwrap();
        let lifo = inst.solve(&g, WorklistOrder::Lifo).unwrap();
        let rr = inst.solve_round_robin(&g).unwrap();
        assert_eq!(fifo.incoming, lifo.incoming);
        assert_eq!(fifo.incoming, rr.incoming);
    }

    #[test]
    fn must_analysis_with_intersection() {
        // forward "definitely assigned": ι = ∅ at init, transfer adds kills
        let p = parse_program(
            "var x:0..1; var y:0..1; [x := 1]^1; if [x > 0]^2 then [y := 1]^3 else [skip]^4 fi; [skip]^5",
        )
        .unwrap();
        let g = FlowGraph::from_program(&p).unwrap();
        let inst = MonotoneInstance {
            universe: p.decls.ids().collect(),
            direction: Direction::Forward,
            combine: Combine::Intersection,
            extremal: BTreeSet::from([g.init]),
            iota: BTreeSet::new(),
            transfer: Box::new(|l, s: &BTreeSet<VarId>| {
                let mut out = s.clone();
                out.extend(kill_lv(&g.blocks[&l]));
                out
            }),
        };
        let sol = inst.solve(&g, WorklistOrder::Fifo).unwrap();
        assert_eq!(sol.incoming[&Label(5)], BTreeSet::from([VarId(0)]));
        assert_eq!(sol.outgoing[&Label(3)], BTreeSet::from([VarId(0), VarId(1)]));
    }

    #[test]
    fn isolated_extremal_label() {
        let p = parse_program("var x:0..1; [x := 0]^1").unwrap();
        let g = FlowGraph::from_program(&p).unwrap();
        let inst = MonotoneInstance {
            universe: p.decls.ids().collect(),
            direction: Direction::Forward,
            combine: Combine::Union,
            extremal: BTreeSet::from([Label(1)]),
            iota: BTreeSet::from([VarId(0)]),
            transfer: Box::new(|_, s: &BTreeSet<VarId>| s.iter().map(|_| VarId(7)).collect()),
        };
        let sol = inst.solve(&g, WorklistOrder::Fifo).unwrap();
        assert_eq!(sol.incoming[&Label(1)], BTreeSet::from([VarId(0)]));
        assert_eq!(sol.outgoing[&Label(1)], BTreeSet::from([VarId(7)]));
        assert_eq!(sol.steps, 0);
    }

    #[test]
    fn non_monotone_transfer_detected() {
        let p = parse_program("var x:0..1; [x := 0]^1; [skip]^2; [skip]^3").unwrap();
        let g = FlowGraph::from_program(&p).unwrap();
        let inst = MonotoneInstance {
            universe: p.decls.ids().collect(),
            direction: Direction::Forward,
            combine: Combine::Union,
            extremal: BTreeSet::from([Label(1)]),
            iota: BTreeSet::from([VarId(0)]),
            // complement: antitone
            transfer: Box::new(|_, s: &BTreeSet<VarId>| {
                if s.is_empty() {
                    BTreeSet::from([VarId(0)])
                } else {
                    BTreeSet::new()
                }
            }),
        };
        assert!(matches!(
            inst.solve(&g, WorklistOrder::Fifo),
            Err(DfaError::NonMonotone(_))
        ));
    }

    #[test]
    fn unknown_extremal_label() {
        let p = parse_program("var x:0..1; [skip]^1").unwrap();
        let g = FlowGraph::from_program(&p).unwrap();
        let mut inst = lv_instance(&g, &p.decls);
        inst.extremal.insert(Label(9));
        assert_eq!(
            inst.solve(&g, WorklistOrder::Fifo),
            Err(DfaError::UnknownLabel(Label(9)))
        );
    }
}
