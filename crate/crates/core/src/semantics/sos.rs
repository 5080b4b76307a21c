//! Small-step semantics. A configuration is a continuation stack of
//! statements (top = next to run) plus a classical state; `Seq` is unfolded
//! structurally, so every step executes exactly one labelled block.

use rand::Rng;

use crate::lang::{Label, Stmt, VarDecls};

use super::eval::{eval_bexpr, eval_expr, wrap_to_range};
use super::SemError;

#[derive(Debug, Clone, PartialEq)]
pub struct Config<'a> {
    cont: Vec<&'a Stmt>,
    pub state: Vec<i64>,
}

/// One executed step: the block that ran and where control went.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub from: Label,
    /// `None` once the program has terminated.
    pub to: Option<Label>,
    pub prob: f64,
}

impl<'a> Config<'a> {
    pub fn new(stmt: &'a Stmt, state: Vec<i64>) -> Self {
        let mut c = Config {
            cont: vec![stmt],
            state,
        };
        c.normalize();
        c
    }

    pub fn is_terminal(&self) -> bool {
        self.cont.is_empty()
    }

    /// Label of the block about to execute.
    pub fn current_label(&self) -> Option<Label> {
        self.cont.last().and_then(|s| s.label())
    }

    /// The remaining program, rebuilt as a statement (`None` = stop).
    pub fn remaining(&self) -> Option<Stmt> {
        let mut parts: Vec<Stmt> = self.cont.iter().rev().map(|s| (*s).clone()).collect();
        if parts.is_empty() {
            return None;
        }
        let last = parts.pop().unwrap();
        Some(parts.into_iter().rev().fold(last, |acc, s| Stmt::seq(s, acc)))
    }

    fn normalize(&mut self) {
        while let Some(Stmt::Seq(a, b)) = self.cont.last().copied() {
            self.cont.pop();
            self.cont.push(b);
            self.cont.push(a);
        }
    }

    fn label_of_top(&self) -> Result<Label, SemError> {
        self.current_label().ok_or(SemError::Unlabelled)
    }
}

/// All successor configurations with their probabilities.
pub fn transitions<'a>(c: &Config<'a>, decls: &VarDecls) -> Result<Vec<(f64, Config<'a>)>, SemError> {
    let Some(&top) = c.cont.last() else {
        return Err(SemError::Terminated);
    };
    c.label_of_top()?;
    let mut base = c.clone();
    base.cont.pop();
    let out = match top {
        Stmt::Skip { .. } => vec![(1.0, base)],
        Stmt::Assign { var, expr, .. } => {
            let v = eval_expr(expr, &c.state)?;
            base.state[var.0] = wrap_to_range(v, decls.size(*var));
            vec![(1.0, base)]
        }
        Stmt::Random { var, dist, .. } => dist
            .pairs()
            .into_iter()
            .filter(|&(_, p)| p > 0.0)
            .map(|(v, p)| {
                let mut next = base.clone();
                next.state[var.0] = v;
                (p, next)
            })
            .collect(),
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            ..
        } => {
            let branch = if eval_bexpr(cond, &c.state)? {
                then_branch
            } else {
                else_branch
            };
            base.cont.push(branch);
            vec![(1.0, base)]
        }
        Stmt::While { cond, body, .. } => {
            if eval_bexpr(cond, &c.state)? {
                base.cont.push(top);
                base.cont.push(body);
            }
            vec![(1.0, base)]
        }
        Stmt::Seq(..) => unreachable!("configurations are normalised"),
    };
    Ok(out
        .into_iter()
        .map(|(p, mut next)| {
            next.normalize();
            (p, next)
        })
        .collect())
}

/// Executes one step in place, sampling random assignments from `rng`.
pub fn sos_step<R: Rng + ?Sized>(c: &mut Config<'_>, decls: &VarDecls, rng: &mut R) -> Result<Transition, SemError> {
    let Some(&top) = c.cont.last() else {
        return Err(SemError::Terminated);
    };
    let from = c.label_of_top()?;
    c.cont.pop();
    let mut prob = 1.0;
    match top {
        Stmt::Skip { .. } => {}
        Stmt::Assign { var, expr, .. } => {
            let v = eval_expr(expr, &c.state)?;
            c.state[var.0] = wrap_to_range(v, decls.size(*var));
        }
        Stmt::Random { var, dist, .. } => {
            let pairs = dist.pairs();
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = pairs.len() - 1;
            for (k, &(_, p)) in pairs.iter().enumerate() {
                acc += p;
                if u < acc && p > 0.0 {
                    chosen = k;
                    break;
                }
            }
            c.state[var.0] = pairs[chosen].0;
            prob = pairs[chosen].1;
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            ..
        } => {
            let branch = if eval_bexpr(cond, &c.state)? {
                then_branch
            } else {
                else_branch
            };
            c.cont.push(branch);
        }
        Stmt::While { cond, body, .. } => {
            if eval_bexpr(cond, &c.state)? {
                c.cont.push(top);
                c.cont.push(body);
            }
        }
        Stmt::Seq(..) => unreachable!("configurations are normalised"),
    }
    c.normalize();
    Ok(Transition {
        from,
        to: c.current_label(),
        prob,
    })
}
