//! The labelled probabilistic While language: AST, parser, labelling and
//! pretty printer.
//!
//! Concrete syntax:
//!
//! ```text
//! var x : 0..3;            // declarations, range 0..n inclusive
//! [x ?= {0, 1}]^1;         // uniform random assignment
//! y ?= {(0, 0.25), (1, 3/4)};
//! [x := (x + y) mod 4]^3;
//! if [x > 2]^4 then [z := x]^5 else [z := y]^6 fi;
//! while i < 12 do i := i + 1 od^7
//! ```
//!
//! Labels are optional; [`assign_labels`] fills in the missing ones.

mod ast;
mod labels;
mod lexer;
mod parser;
mod pretty;

use thiserror::Error;

pub use ast::*;
pub use labels::assign_labels;
pub use parser::{parse_program, validate_dist};
pub use pretty::{bexpr_to_string, block_text, dist_to_string, expr_to_string, pretty_print};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: duplicate label {label}")]
    DuplicateLabel { line: usize, col: usize, label: u32 },
    #[error("{line}:{col}: undeclared variable `{name}`")]
    Undeclared { line: usize, col: usize, name: String },
    #[error("{line}:{col}: variable `{name}` declared twice")]
    DuplicateDecl { line: usize, col: usize, name: String },
    #[error("{line}:{col}: invalid distribution: {msg}")]
    BadDistribution { line: usize, col: usize, msg: String },
}

/// Parses and labels a program in one go.
pub fn parse_labelled(text: &str) -> Result<Program, LangError> {
    let mut program = parse_program(text)?;
    program.body = assign_labels(&program.body)?;
    Ok(program)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RUNNING: &str = include_str!("../../../../programs/running.pw");
    const PRIMES: &str = include_str!("../../../../programs/countprimes.pw");

    #[test]
    fn smallest_program() {
        let p = parse_program("var x:0..1; x ?= {0,1}").unwrap();
        assert_eq!(p.decls.len(), 1);
        assert_eq!(p.decls.size(VarId(0)), 2);
        assert_eq!(
            p.body,
            Stmt::Random {
                label: None,
                var: VarId(0),
                dist: DistLiteral::Uniform(vec![0, 1]),
            }
        );
    }

    #[test]
    fn running_example_has_six_blocks() {
        let p = parse_program(RUNNING).unwrap();
        let labels: Vec<u32> = p.body.labels().iter().map(|l| l.0).collect();
        assert_eq!(labels, vec![1, 2, 3, 4, 5, 6]);
        assert!(p.body.is_fully_labelled());
        assert_eq!(assign_labels(&p.body).unwrap(), p.body);
    }

    #[test]
    fn trailing_fi_label() {
        let src = "var x:0..3; var y:0..3; var z:0..3;
                   if x>2 then [z:=x]^5 else [z:=y]^6 fi^4";
        let p = parse_program(src).unwrap();
        match &p.body {
            Stmt::If {
                label,
                cond,
                then_branch,
                ..
            } => {
                assert_eq!(*label, Some(Label(4)));
                assert_eq!(*cond, BExpr::Cmp(CmpOp::Gt, Expr::Var(VarId(0)), Expr::Const(2)));
                assert_eq!(then_branch.label(), Some(Label(5)));
            }
            other => panic!("expected If, got {other:?}"),
        }
    }

    #[test]
    fn prime_program_labels() {
        let p = parse_program(PRIMES).unwrap();
        let labels: Vec<u32> = p.body.labels().iter().map(|l| l.0).collect();
        assert_eq!(labels, vec![1, 2, 3, 4, 5, 6]);
        let stripped = {
            let mut s = p.body.clone();
            s.visit_blocks_mut(&mut |l| *l = None);
            s
        };
        assert_eq!(assign_labels(&stripped).unwrap(), p.body);
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_program("var x:0..1;\nx := ;").unwrap_err();
        assert!(matches!(err, LangError::Syntax { line: 2, col: 6, .. }), "{err}");
    }

    #[test]
    fn duplicate_explicit_label() {
        let err = parse_program("[skip]^1; [skip]^1").unwrap_err();
        assert!(matches!(err, LangError::DuplicateLabel { label: 1, .. }));
    }

    #[test]
    fn undeclared_variable() {
        let err = parse_program("var x:0..1; y := 1").unwrap_err();
        assert!(matches!(err, LangError::Undeclared { ref name, .. } if name == "y"));
    }

    #[test]
    fn probability_sum_checked() {
        let err = parse_program("var x:0..1; x ?= {(0, 0.5), (1, 0.4)}").unwrap_err();
        assert!(matches!(err, LangError::BadDistribution { .. }));
        let ok = parse_program("var x:0..1; x ?= {(0, 1/4), (1, 0.75)}").unwrap();
        assert!(matches!(ok.body, Stmt::Random { .. }));
    }

    #[test]
    fn distribution_values_in_range() {
        let err = parse_program("var x:0..1; x ?= {0, 2}").unwrap_err();
        assert!(matches!(err, LangError::BadDistribution { .. }));
    }

    #[test]
    fn parenthesised_conditions() {
        let p =
            parse_program("var x:0..3; if ((x + 1) > 2 or not (x = 0)) and even(x) then skip else skip fi").unwrap();
        let Stmt::If { cond, .. } = &p.body else { panic!() };
        assert!(matches!(cond, BExpr::And(..)));
    }

    #[test]
    fn pretty_round_trip_on_bundled_programs() {
        for src in [RUNNING, PRIMES] {
            let p = parse_program(src).unwrap();
            let again = parse_program(&pretty_print(&p)).unwrap();
            assert_eq!(again, p);
        }
    }

    #[test]
    fn left_nested_sequence_round_trips() {
        let s = Stmt::seq(
            Stmt::seq(Stmt::Skip { label: None }, Stmt::Skip { label: None }),
            Stmt::Skip { label: None },
        );
        let p = Program {
            decls: VarDecls::new(),
            body: s,
        };
        assert_eq!(parse_program(&pretty_print(&p)).unwrap(), p);
    }
}
