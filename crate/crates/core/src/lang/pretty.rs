use std::fmt::Write;

use super::ast::*;

/// Renders a program in the concrete syntax accepted by [`super::parse_program`].
pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    for (_, decl) in program.decls.iter() {
        let _ = writeln!(out, "var {} : 0..{};", decl.name, decl.size - 1);
    }
    if !program.decls.is_empty() {
        out.push('\n');
    }
    write_stmt(&mut out, &program.body, &program.decls, 0);
    out.push('\n');
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_stmt(out: &mut String, s: &Stmt, decls: &VarDecls, depth: usize) {
    match s {
        Stmt::Seq(a, b) => {
            if matches!(**a, Stmt::Seq(..)) {
                indent(out, depth);
                out.push_str("(\n");
                write_stmt(out, a, decls, depth + 1);
                out.push('\n');
                indent(out, depth);
                out.push(')');
            } else {
                write_stmt(out, a, decls, depth);
            }
            out.push_str(";\n");
            write_stmt(out, b, decls, depth);
        }
        Stmt::If {
            label,
            cond,
            then_branch,
            else_branch,
        } => {
            indent(out, depth);
            out.push_str("if ");
            write_cond(out, cond, *label, decls);
            out.push_str(" then\n");
            write_stmt(out, then_branch, decls, depth + 1);
            out.push('\n');
            indent(out, depth);
            out.push_str("else\n");
            write_stmt(out, else_branch, decls, depth + 1);
            out.push('\n');
            indent(out, depth);
            out.push_str("fi");
        }
        Stmt::While { label, cond, body } => {
            indent(out, depth);
            out.push_str("while ");
            write_cond(out, cond, *label, decls);
            out.push_str(" do\n");
            write_stmt(out, body, decls, depth + 1);
            out.push('\n');
            indent(out, depth);
            out.push_str("od");
        }
        block => {
            indent(out, depth);
            let text = block_text(block, decls);
            match block.label() {
                Some(l) => {
                    let _ = write!(out, "[{text}]^{l}");
                }
                None => out.push_str(&text),
            }
        }
    }
}

fn write_cond(out: &mut String, cond: &BExpr, label: Option<Label>, decls: &VarDecls) {
    let text = bexpr_to_string(cond, decls);
    match label {
        Some(l) => {
            let _ = write!(out, "[{text}]^{l}");
        }
        None => out.push_str(&text),
    }
}

/// The text of an elementary block without its label, e.g. `x := x + 1`.
pub fn block_text(s: &Stmt, decls: &VarDecls) -> String {
    match s {
        Stmt::Skip { .. } => "skip".into(),
        Stmt::Assign { var, expr, .. } => {
            format!("{} := {}", decls.name(*var), expr_to_string(expr, decls))
        }
        Stmt::Random { var, dist, .. } => {
            format!("{} ?= {}", decls.name(*var), dist_to_string(dist))
        }
        Stmt::If { cond, .. } | Stmt::While { cond, .. } => bexpr_to_string(cond, decls),
        Stmt::Seq(..) => String::new(),
    }
}

pub fn dist_to_string(dist: &DistLiteral) -> String {
    match dist {
        DistLiteral::Uniform(vals) => {
            let items: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
            format!("{{{}}}", items.join(", "))
        }
        DistLiteral::Explicit(pairs) => {
            let items: Vec<String> = pairs.iter().map(|(v, p)| format!("({v}, {})", fmt_prob(*p))).collect();
            format!("{{{}}}", items.join(", "))
        }
    }
}

// Always print a decimal point so the lexer reads a probability, not an int.
fn fmt_prob(p: f64) -> String {
    let s = p.to_string();
    if s.contains('.') {
        s
    } else {
        format!("{s}.0")
    }
}

fn arith_prec(op: ArithOp) -> u8 {
    match op {
        ArithOp::Add | ArithOp::Sub => 1,
        ArithOp::Mul | ArithOp::Div | ArithOp::Mod => 2,
    }
}

pub fn expr_to_string(e: &Expr, decls: &VarDecls) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, decls, 0);
    out
}

fn write_expr(out: &mut String, e: &Expr, decls: &VarDecls, min_prec: u8) {
    match e {
        Expr::Const(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Var(v) => out.push_str(decls.name(*v)),
        Expr::Binary(op, a, b) => {
            let p = arith_prec(*op);
            let paren = p < min_prec;
            if paren {
                out.push('(');
            }
            write_expr(out, a, decls, p);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b, decls, p + 1);
            if paren {
                out.push(')');
            }
        }
    }
}

pub fn bexpr_to_string(b: &BExpr, decls: &VarDecls) -> String {
    let mut out = String::new();
    write_bexpr(&mut out, b, decls, 0);
    out
}

fn write_bexpr(out: &mut String, b: &BExpr, decls: &VarDecls, min_prec: u8) {
    let (prec, body): (u8, String) = match b {
        BExpr::True => (4, "true".into()),
        BExpr::False => (4, "false".into()),
        BExpr::Cmp(op, l, r) => (
            4,
            format!(
                "{} {} {}",
                expr_to_string(l, decls),
                op.symbol(),
                expr_to_string(r, decls)
            ),
        ),
        BExpr::Pred(p, e) => (4, format!("{}({})", p.name(), expr_to_string(e, decls))),
        BExpr::Not(inner) => {
            let mut s = String::from("not ");
            write_bexpr(&mut s, inner, decls, 3);
            (3, s)
        }
        BExpr::And(l, r) => {
            let mut s = String::new();
            write_bexpr(&mut s, l, decls, 2);
            s.push_str(" and ");
            write_bexpr(&mut s, r, decls, 3);
            (2, s)
        }
        BExpr::Or(l, r) => {
            let mut s = String::new();
            write_bexpr(&mut s, l, decls, 1);
            s.push_str(" or ");
            write_bexpr(&mut s, r, decls, 2);
            (1, s)
        }
    };
    if prec < min_prec {
        let _ = write!(out, "({body})");
    } else {
        out.push_str(&body);
    }
}
