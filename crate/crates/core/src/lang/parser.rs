use std::collections::BTreeMap;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::LangError;

const KEYWORDS: &[&str] = &[
    "var", "skip", "if", "then", "else", "fi", "while", "do", "od", "true", "false", "and", "or", "not", "mod", "even",
    "odd", "prime",
];

/// Parses a program: `var` declarations followed by a statement.
pub fn parse_program(text: &str) -> Result<Program, LangError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        decls: VarDecls::new(),
        seen_labels: BTreeMap::new(),
    };
    p.parse_decls()?;
    let body = p.parse_stmt()?;
    p.expect_eof()?;
    Ok(Program { decls: p.decls, body })
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    decls: VarDecls,
    seen_labels: BTreeMap<Label, (usize, usize)>,
}

type PResult<T> = Result<T, LangError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.tokens[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(LangError::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Float(v) => format!("`{v}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", Self::describe(self.peek())))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", Self::describe(self.peek())))
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            self.err(format!("expected end of input, found {}", Self::describe(self.peek())))
        }
    }

    fn expect_int(&mut self) -> PResult<i64> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            Tok::Sym("-") if matches!(self.peek_at(1), Tok::Int(_)) => {
                self.bump();
                match self.bump() {
                    Tok::Int(v) => Ok(-v),
                    _ => unreachable!(),
                }
            }
            other => self.err(format!("expected integer, found {}", Self::describe(&other))),
        }
    }

    fn expect_ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {}", Self::describe(&other))),
        }
    }

    fn parse_decls(&mut self) -> PResult<()> {
        while self.is_kw("var") {
            self.bump();
            let (line, col) = self.here();
            let name = self.expect_ident()?;
            self.expect_sym(":")?;
            let lo = self.expect_int()?;
            self.expect_sym("..")?;
            let hi = self.expect_int()?;
            self.expect_sym(";")?;
            if lo != 0 {
                return Err(LangError::Syntax {
                    line,
                    col,
                    msg: format!("range of `{name}` must start at 0"),
                });
            }
            if hi < 0 {
                return Err(LangError::Syntax {
                    line,
                    col,
                    msg: format!("empty range for `{name}`"),
                });
            }
            if self.decls.declare(&name, (hi + 1) as usize).is_none() {
                return Err(LangError::DuplicateDecl { line, col, name });
            }
        }
        Ok(())
    }

    fn resolve(&self, name: &str, line: usize, col: usize) -> PResult<VarId> {
        self.decls.lookup(name).ok_or_else(|| LangError::Undeclared {
            line,
            col,
            name: name.to_string(),
        })
    }

    fn record_label(&mut self, label: Label, line: usize, col: usize) -> PResult<()> {
        if self.seen_labels.insert(label, (line, col)).is_some() {
            return Err(LangError::DuplicateLabel {
                line,
                col,
                label: label.0,
            });
        }
        Ok(())
    }

    /// `^ k` with k a positive integer.
    fn parse_label_suffix(&mut self) -> PResult<Label> {
        self.expect_sym("^")?;
        let (line, col) = self.here();
        let v = self.expect_int()?;
        if v <= 0 || v > u32::MAX as i64 {
            return Err(LangError::Syntax {
                line,
                col,
                msg: format!("label must be a positive integer, found {v}"),
            });
        }
        let label = Label(v as u32);
        self.record_label(label, line, col)?;
        Ok(label)
    }

    fn parse_stmt(&mut self) -> PResult<Stmt> {
        let mut items = vec![self.parse_atom()?];
        while self.eat_sym(";") {
            items.push(self.parse_atom()?);
        }
        Ok(Stmt::seq_all(items))
    }

    fn parse_atom(&mut self) -> PResult<Stmt> {
        if self.eat_sym("(") {
            let s = self.parse_stmt()?;
            self.expect_sym(")")?;
            return Ok(s);
        }
        if self.eat_sym("[") {
            let mut s = self.parse_block()?;
            self.expect_sym("]")?;
            let label = self.parse_label_suffix()?;
            *s.label_mut().expect("blocks carry labels") = Some(label);
            return Ok(s);
        }
        if self.eat_kw("if") {
            let (cond, mut label) = self.parse_cond()?;
            self.expect_kw("then")?;
            let then_branch = self.parse_stmt()?;
            self.expect_kw("else")?;
            let else_branch = self.parse_stmt()?;
            self.expect_kw("fi")?;
            label = self.trailing_label(label)?;
            return Ok(Stmt::If {
                label,
                cond,
                then_branch: Box::new(then_branch),
                else_branch: Box::new(else_branch),
            });
        }
        if self.eat_kw("while") {
            let (cond, mut label) = self.parse_cond()?;
            self.expect_kw("do")?;
            let body = self.parse_stmt()?;
            self.expect_kw("od")?;
            label = self.trailing_label(label)?;
            return Ok(Stmt::While {
                label,
                cond,
                body: Box::new(body),
            });
        }
        self.parse_block()
    }

    fn trailing_label(&mut self, existing: Option<Label>) -> PResult<Option<Label>> {
        if !self.is_sym("^") {
            return Ok(existing);
        }
        if existing.is_some() {
            return self.err("test is already labelled");
        }
        Ok(Some(self.parse_label_suffix()?))
    }

    fn parse_cond(&mut self) -> PResult<(BExpr, Option<Label>)> {
        if self.eat_sym("[") {
            let b = self.parse_bexpr()?;
            self.expect_sym("]")?;
            let label = self.parse_label_suffix()?;
            Ok((b, Some(label)))
        } else {
            Ok((self.parse_bexpr()?, None))
        }
    }

    /// skip | x := e | x ?= dist, without label.
    fn parse_block(&mut self) -> PResult<Stmt> {
        if self.eat_kw("skip") {
            return Ok(Stmt::Skip { label: None });
        }
        let (line, col) = self.here();
        let name = self.expect_ident()?;
        let var = self.resolve(&name, line, col)?;
        if self.eat_sym(":=") {
            let expr = self.parse_arith()?;
            Ok(Stmt::Assign { label: None, var, expr })
        } else if self.eat_sym("?=") {
            let dist = self.parse_dist(var)?;
            Ok(Stmt::Random { label: None, var, dist })
        } else {
            self.err(format!("expected `:=` or `?=`, found {}", Self::describe(self.peek())))
        }
    }

    fn parse_prob(&mut self) -> PResult<f64> {
        let (line, col) = self.here();
        let v = match self.bump() {
            Tok::Float(v) => v,
            Tok::Int(n) => {
                if self.eat_sym("/") {
                    let d = self.expect_int()?;
                    if d == 0 {
                        return Err(LangError::BadDistribution {
                            line,
                            col,
                            msg: "zero denominator".into(),
                        });
                    }
                    n as f64 / d as f64
                } else {
                    n as f64
                }
            }
            other => {
                return Err(LangError::Syntax {
                    line,
                    col,
                    msg: format!("expected probability, found {}", Self::describe(&other)),
                })
            }
        };
        if !(0.0..=1.0).contains(&v) {
            return Err(LangError::BadDistribution {
                line,
                col,
                msg: format!("probability {v} outside [0,1]"),
            });
        }
        Ok(v)
    }

    fn parse_dist(&mut self, var: VarId) -> PResult<DistLiteral> {
        let (line, col) = self.here();
        self.expect_sym("{")?;
        let dist = if self.is_sym("(") {
            let mut pairs = Vec::new();
            loop {
                self.expect_sym("(")?;
                let v = self.expect_int()?;
                self.expect_sym(",")?;
                let p = self.parse_prob()?;
                self.expect_sym(")")?;
                pairs.push((v, p));
                if !self.eat_sym(",") {
                    break;
                }
            }
            DistLiteral::Explicit(pairs)
        } else {
            let first = self.expect_int()?;
            if self.eat_sym("..") {
                let last = self.expect_int()?;
                if last < first {
                    return Err(LangError::BadDistribution {
                        line,
                        col,
                        msg: "empty value range".into(),
                    });
                }
                DistLiteral::Uniform((first..=last).collect())
            } else {
                let mut vals = vec![first];
                while self.eat_sym(",") {
                    vals.push(self.expect_int()?);
                }
                DistLiteral::Uniform(vals)
            }
        };
        self.expect_sym("}")?;
        validate_dist(&dist, self.decls.size(var)).map_err(|msg| LangError::BadDistribution { line, col, msg })?;
        Ok(dist)
    }

    fn parse_bexpr(&mut self) -> PResult<BExpr> {
        let mut lhs = self.parse_and()?;
        while self.eat_kw("or") {
            let rhs = self.parse_and()?;
            lhs = BExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> PResult<BExpr> {
        let mut lhs = self.parse_not()?;
        while self.eat_kw("and") {
            let rhs = self.parse_not()?;
            lhs = BExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_not(&mut self) -> PResult<BExpr> {
        if self.eat_kw("not") {
            return Ok(BExpr::Not(Box::new(self.parse_not()?)));
        }
        self.parse_bprimary()
    }

    fn parse_bprimary(&mut self) -> PResult<BExpr> {
        if self.eat_kw("true") {
            return Ok(BExpr::True);
        }
        if self.eat_kw("false") {
            return Ok(BExpr::False);
        }
        for builtin in [Builtin::Even, Builtin::Odd, Builtin::Prime] {
            if self.eat_kw(builtin.name()) {
                self.expect_sym("(")?;
                let e = self.parse_arith()?;
                self.expect_sym(")")?;
                return Ok(BExpr::Pred(builtin, e));
            }
        }
        if self.is_sym("(") {
            // Either `(arith) op arith` or `(bexpr)`: try the comparison first.
            let save = self.pos;
            if let Ok(cmp) = self.parse_comparison() {
                return Ok(cmp);
            }
            self.pos = save;
            self.expect_sym("(")?;
            let b = self.parse_bexpr()?;
            self.expect_sym(")")?;
            return Ok(b);
        }
        self.parse_comparison()
    }

    fn parse_comparison(&mut self) -> PResult<BExpr> {
        let lhs = self.parse_arith()?;
        let op = match self.peek() {
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym("=") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            other => return self.err(format!("expected comparison operator, found {}", Self::describe(other))),
        };
        self.bump();
        let rhs = self.parse_arith()?;
        Ok(BExpr::Cmp(op, lhs, rhs))
    }

    fn parse_arith(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_term()?;
        loop {
            let op = if self.is_sym("+") {
                ArithOp::Add
            } else if self.is_sym("-") {
                ArithOp::Sub
            } else {
                break;
            };
            self.bump();
            let rhs = self.parse_term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = if self.is_sym("*") {
                ArithOp::Mul
            } else if self.is_sym("/") {
                ArithOp::Div
            } else if self.is_kw("mod") {
                ArithOp::Mod
            } else {
                break;
            };
            self.bump();
            let rhs = self.parse_unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> PResult<Expr> {
        if self.is_sym("-") {
            if let Tok::Int(v) = *self.peek_at(1) {
                self.bump();
                self.bump();
                return Ok(Expr::Const(-v));
            }
            self.bump();
            let e = self.parse_unary()?;
            return Ok(Expr::Binary(ArithOp::Sub, Box::new(Expr::Const(0)), Box::new(e)));
        }
        self.parse_aprimary()
    }

    fn parse_aprimary(&mut self) -> PResult<Expr> {
        let (line, col) = self.here();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.parse_arith()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                self.bump();
                Ok(Expr::Var(self.resolve(&name, line, col)?))
            }
            other => self.err(format!("expected expression, found {}", Self::describe(&other))),
        }
    }
}

/// Checks that a distribution literal is well formed for a variable with
/// `size` values.
pub fn validate_dist(dist: &DistLiteral, size: usize) -> Result<(), String> {
    let pairs = dist.pairs();
    if pairs.is_empty() {
        return Err("empty distribution".into());
    }
    let mut seen = std::collections::BTreeSet::new();
    for &(v, p) in &pairs {
        if v < 0 || v as usize >= size {
            return Err(format!("value {v} outside declared range 0..{}", size - 1));
        }
        if !seen.insert(v) {
            return Err(format!("value {v} listed twice"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("probability {p} outside [0,1]"));
        }
    }
    let total: f64 = pairs.iter().map(|&(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(format!("probabilities sum to {total}, not 1"));
    }
    Ok(())
}
