use crate::lang::{ArithOp, BExpr, Expr};

use super::SemError;

pub fn eval_expr(e: &Expr, state: &[i64]) -> Result<i64, SemError> {
    match e {
        Expr::Const(v) => Ok(*v),
        Expr::Var(v) => Ok(state[v.0]),
        Expr::Binary(op, a, b) => {
            let (a, b) = (eval_expr(a, state)?, eval_expr(b, state)?);
            let r = match op {
                ArithOp::Add => a.checked_add(b),
                ArithOp::Sub => a.checked_sub(b),
                ArithOp::Mul => a.checked_mul(b),
                ArithOp::Div => {
                    if b == 0 {
                        return Err(SemError::DivisionByZero);
                    }
                    a.checked_div_euclid(b)
                }
                ArithOp::Mod => {
                    if b == 0 {
                        return Err(SemError::DivisionByZero);
                    }
                    a.checked_rem_euclid(b)
                }
            };
            r.ok_or(SemError::Overflow)
        }
    }
}

pub fn eval_bexpr(b: &BExpr, state: &[i64]) -> Result<bool, SemError> {
    Ok(match b {
        BExpr::True => true,
        BExpr::False => false,
        BExpr::Cmp(op, l, r) => op.holds(eval_expr(l, state)?, eval_expr(r, state)?),
        BExpr::Pred(p, e) => p.holds(eval_expr(e, state)?),
        BExpr::Not(inner) => !eval_bexpr(inner, state)?,
        BExpr::And(l, r) => eval_bexpr(l, state)? && eval_bexpr(r, state)?,
        BExpr::Or(l, r) => eval_bexpr(l, state)? || eval_bexpr(r, state)?,
    })
}

/// Value stored by an assignment to a variable with `size` values.
pub fn wrap_to_range(v: i64, size: usize) -> i64 {
    v.rem_euclid(size as i64)
}
