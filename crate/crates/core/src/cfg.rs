//! Flow graphs: `init`, `final`, `blocks` and the `flow` relation over a
//! labelled statement, with the true branch of every test marked.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

use crate::lang::{bexpr_to_string, block_text, BExpr, DistLiteral, Expr, Label, Program, Stmt, VarDecls, VarId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CfgError {
    #[error("statement contains an unlabelled block")]
    Unlabelled,
    #[error("label {0} used by more than one block")]
    DuplicateLabel(Label),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    If,
    While,
}

/// An elementary block of the flow graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Block {
    Skip,
    Assign { var: VarId, expr: Expr },
    Random { var: VarId, dist: DistLiteral },
    Test { cond: BExpr, test: TestKind },
}

impl Block {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Block::Skip => "skip",
            Block::Assign { .. } => "assign",
            Block::Random { .. } => "random",
            Block::Test { .. } => "test",
        }
    }

    pub fn is_test(&self) -> bool {
        matches!(self, Block::Test { .. })
    }

    /// Source text of the block, e.g. `x := x + 1` or `x > 2`.
    pub fn text(&self, decls: &VarDecls) -> String {
        match self {
            Block::Skip => "skip".into(),
            Block::Assign { var, expr } => block_text(
                &Stmt::Assign {
                    label: None,
                    var: *var,
                    expr: expr.clone(),
                },
                decls,
            ),
            Block::Random { var, dist } => block_text(
                &Stmt::Random {
                    label: None,
                    var: *var,
                    dist: dist.clone(),
                },
                decls,
            ),
            Block::Test { cond, .. } => bexpr_to_string(cond, decls),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Unconditional,
    True,
    False,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Edge {
    pub from: Label,
    pub to: Label,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowGraph {
    pub blocks: BTreeMap<Label, Block>,
    pub init: Label,
    pub finals: BTreeSet<Label>,
    /// Sorted by `(from, to)`.
    pub edges: Vec<Edge>,
}

pub fn init(stmt: &Stmt) -> Result<Label, CfgError> {
    match stmt {
        Stmt::Seq(a, _) => init(a),
        other => other.label().ok_or(CfgError::Unlabelled),
    }
}

pub fn finals(stmt: &Stmt) -> Result<BTreeSet<Label>, CfgError> {
    match stmt {
        Stmt::Seq(_, b) => finals(b),
        Stmt::If {
            then_branch,
            else_branch,
            ..
        } => {
            let mut out = finals(then_branch)?;
            out.extend(finals(else_branch)?);
            Ok(out)
        }
        other => Ok(BTreeSet::from([other.label().ok_or(CfgError::Unlabelled)?])),
    }
}

fn collect_flow(stmt: &Stmt, out: &mut Vec<(Label, Label, bool)>) -> Result<(), CfgError> {
    match stmt {
        Stmt::Seq(a, b) => {
            collect_flow(a, out)?;
            collect_flow(b, out)?;
            let target = init(b)?;
            for l in finals(a)? {
                out.push((l, target, false));
            }
        }
        Stmt::If {
            label,
            then_branch,
            else_branch,
            ..
        } => {
            let l = label.ok_or(CfgError::Unlabelled)?;
            collect_flow(then_branch, out)?;
            collect_flow(else_branch, out)?;
            out.push((l, init(then_branch)?, true));
            out.push((l, init(else_branch)?, false));
        }
        Stmt::While { label, body, .. } => {
            let l = label.ok_or(CfgError::Unlabelled)?;
            collect_flow(body, out)?;
            out.push((l, init(body)?, true));
            for f in finals(body)? {
                out.push((f, l, false));
            }
        }
        _ => {}
    }
    Ok(())
}

/// The flow relation as plain label pairs, sorted.
pub fn flow(stmt: &Stmt) -> Result<Vec<(Label, Label)>, CfgError> {
    let mut raw = Vec::new();
    collect_flow(stmt, &mut raw)?;
    let set: BTreeSet<(Label, Label)> = raw.into_iter().map(|(a, b, _)| (a, b)).collect();
    Ok(set.into_iter().collect())
}

impl FlowGraph {
    /// Builds the flow graph of a fully labelled statement.
    pub fn build(stmt: &Stmt) -> Result<FlowGraph, CfgError> {
        let mut blocks = BTreeMap::new();
        let mut err = None;
        stmt.visit_blocks(&mut |s| {
            let Some(l) = s.label() else {
                err.get_or_insert(CfgError::Unlabelled);
                return;
            };
            let block = match s {
                Stmt::Skip { .. } => Block::Skip,
                Stmt::Assign { var, expr, .. } => Block::Assign {
                    var: *var,
                    expr: expr.clone(),
                },
                Stmt::Random { var, dist, .. } => Block::Random {
                    var: *var,
                    dist: dist.clone(),
                },
                Stmt::If { cond, .. } => Block::Test {
                    cond: cond.clone(),
                    test: TestKind::If,
                },
                Stmt::While { cond, .. } => Block::Test {
                    cond: cond.clone(),
                    test: TestKind::While,
                },
                Stmt::Seq(..) => unreachable!(),
            };
            if blocks.insert(l, block).is_some() {
                err.get_or_insert(CfgError::DuplicateLabel(l));
            }
        });
        if let Some(e) = err {
            return Err(e);
        }

        let mut raw = Vec::new();
        collect_flow(stmt, &mut raw)?;
        let mut edges: BTreeMap<(Label, Label), Branch> = BTreeMap::new();
        for (from, to, is_true) in raw {
            let branch = if is_true {
                Branch::True
            } else if blocks[&from].is_test() {
                Branch::False
            } else {
                Branch::Unconditional
            };
            edges.insert((from, to), branch);
        }
        Ok(FlowGraph {
            blocks,
            init: init(stmt)?,
            finals: finals(stmt)?,
            edges: edges
                .into_iter()
                .map(|((from, to), branch)| Edge { from, to, branch })
                .collect(),
        })
    }

    pub fn from_program(program: &Program) -> Result<FlowGraph, CfgError> {
        Self::build(&program.body)
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.blocks.keys().copied()
    }

    pub fn successors(&self, l: Label) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.from == l)
    }

    pub fn predecessors(&self, l: Label) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.to == l)
    }

    pub fn true_successor(&self, l: Label) -> Option<Label> {
        self.successors(l).find(|e| e.branch == Branch::True).map(|e| e.to)
    }

    pub fn false_successor(&self, l: Label) -> Option<Label> {
        self.successors(l).find(|e| e.branch == Branch::False).map(|e| e.to)
    }

    /// Edges with direction swapped; entry points of the reversed graph are
    /// the finals.
    pub fn reversed_edges(&self) -> Vec<Edge> {
        let mut out: Vec<Edge> = self
            .edges
            .iter()
            .map(|e| Edge {
                from: e.to,
                to: e.from,
                branch: e.branch,
            })
            .collect();
        out.sort();
        out
    }

    /// True if the graph has no cycles.
    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Labels in a topological order of the flow, if the flow is acyclic.
    pub fn topological_order(&self) -> Option<Vec<Label>> {
        let mut indeg: BTreeMap<Label, usize> = self.labels().map(|l| (l, 0)).collect();
        for e in &self.edges {
            *indeg.get_mut(&e.to).unwrap() += 1;
        }
        let mut ready: Vec<Label> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&l, _)| l).rev().collect();
        let mut order = Vec::new();
        while let Some(l) = ready.pop() {
            order.push(l);
            for e in self.successors(l) {
                let d = indeg.get_mut(&e.to).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(e.to);
                }
            }
        }
        (order.len() == self.blocks.len()).then_some(order)
    }

    /// Graphviz rendering; true edges are labelled "T".
    pub fn to_dot(&self, decls: &VarDecls) -> String {
        let mut out = String::from("digraph flow {\n  node [shape=box];\n");
        for (l, b) in &self.blocks {
            let shape = if b.is_test() { ", shape=diamond" } else { "" };
            let mut text = b.text(decls).replace('"', "\\\"");
            if self.finals.contains(l) {
                text.push_str(" (final)");
            }
            let _ = writeln!(out, "  n{l} [label=\"{l}: {text}\"{shape}];");
        }
        let _ = writeln!(out, "  start [shape=point];\n  start -> n{};", self.init);
        for e in &self.edges {
            match e.branch {
                Branch::True => {
                    let _ = writeln!(out, "  n{} -> n{} [label=\"T\"];", e.from, e.to);
                }
                _ => {
                    let _ = writeln!(out, "  n{} -> n{};", e.from, e.to);
                }
            }
        }
        out.push_str("}\n");
        out
    }
}
