use std::fmt;

use serde::Serialize;

/// A program label. Labels attach to elementary blocks and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Label(pub u32);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index of a declared variable in [`VarDecls`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VarDecl {
    pub name: String,
    /// Number of values; the variable ranges over `0..size`.
    pub size: usize,
}

/// Ordered variable declarations. The order fixes the tensor-factor order of
/// the state space (first declared = most significant).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct VarDecls {
    vars: Vec<VarDecl>,
}

impl VarDecls {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a declaration. Returns `None` if the name is taken or the range is empty.
    pub fn declare(&mut self, name: impl Into<String>, size: usize) -> Option<VarId> {
        let name = name.into();
        if size == 0 || self.lookup(&name).is_some() {
            return None;
        }
        self.vars.push(VarDecl { name, size });
        Some(VarId(self.vars.len() - 1))
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.vars[id.0].name
    }

    pub fn size(&self, id: VarId) -> usize {
        self.vars[id.0].size
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &VarDecl)> {
        self.vars.iter().enumerate().map(|(i, d)| (VarId(i), d))
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.vars.len()).map(VarId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::Mod => "mod",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Expr {
    Const(i64),
    Var(VarId),
    Binary(ArithOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

/// Builtin unary predicates on integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Builtin {
    Even,
    Odd,
    Prime,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Even => "even",
            Builtin::Odd => "odd",
            Builtin::Prime => "prime",
        }
    }

    pub fn holds(self, v: i64) -> bool {
        match self {
            Builtin::Even => v.rem_euclid(2) == 0,
            Builtin::Odd => v.rem_euclid(2) == 1,
            Builtin::Prime => is_prime(v),
        }
    }
}

pub(crate) fn is_prime(v: i64) -> bool {
    if v < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= v {
        if v % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum BExpr {
    True,
    False,
    Cmp(CmpOp, Expr, Expr),
    Pred(Builtin, Expr),
    Not(Box<BExpr>),
    And(Box<BExpr>, Box<BExpr>),
    Or(Box<BExpr>, Box<BExpr>),
}

/// Distribution literal of a random assignment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DistLiteral {
    /// Uniform over the listed values.
    Uniform(Vec<i64>),
    /// Explicit `(value, probability)` pairs.
    Explicit(Vec<(i64, f64)>),
}

impl DistLiteral {
    /// The `(value, probability)` support of the distribution.
    pub fn pairs(&self) -> Vec<(i64, f64)> {
        match self {
            DistLiteral::Uniform(vals) => {
                let p = 1.0 / vals.len() as f64;
                vals.iter().map(|&v| (v, p)).collect()
            }
            DistLiteral::Explicit(pairs) => pairs.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Stmt {
    Skip {
        label: Option<Label>,
    },
    Assign {
        label: Option<Label>,
        var: VarId,
        expr: Expr,
    },
    Random {
        label: Option<Label>,
        var: VarId,
        dist: DistLiteral,
    },
    Seq(Box<Stmt>, Box<Stmt>),
    If {
        label: Option<Label>,
        cond: BExpr,
        then_branch: Box<Stmt>,
        else_branch: Box<Stmt>,
    },
    While {
        label: Option<Label>,
        cond: BExpr,
        body: Box<Stmt>,
    },
}

impl Stmt {
    pub fn seq(first: Stmt, second: Stmt) -> Stmt {
        Stmt::Seq(Box::new(first), Box::new(second))
    }

    /// Builds a right-nested sequence. Panics on an empty list.
    pub fn seq_all(mut stmts: Vec<Stmt>) -> Stmt {
        let mut acc = stmts.pop().expect("empty statement list");
        while let Some(s) = stmts.pop() {
            acc = Stmt::seq(s, acc);
        }
        acc
    }

    /// Label of this block, `None` for `Seq` and unlabelled blocks.
    pub fn label(&self) -> Option<Label> {
        match self {
            Stmt::Skip { label }
            | Stmt::Assign { label, .. }
            | Stmt::Random { label, .. }
            | Stmt::If { label, .. }
            | Stmt::While { label, .. } => *label,
            Stmt::Seq(..) => None,
        }
    }

    pub(crate) fn label_mut(&mut self) -> Option<&mut Option<Label>> {
        match self {
            Stmt::Skip { label }
            | Stmt::Assign { label, .. }
            | Stmt::Random { label, .. }
            | Stmt::If { label, .. }
            | Stmt::While { label, .. } => Some(label),
            Stmt::Seq(..) => None,
        }
    }

    /// Visits every labelled position (blocks and tests) in program-text order.
    pub fn visit_blocks<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        match self {
            Stmt::Seq(a, b) => {
                a.visit_blocks(f);
                b.visit_blocks(f);
            }
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                f(self);
                then_branch.visit_blocks(f);
                else_branch.visit_blocks(f);
            }
            Stmt::While { body, .. } => {
                f(self);
                body.visit_blocks(f);
            }
            _ => f(self),
        }
    }

    pub(crate) fn visit_blocks_mut(&mut self, f: &mut dyn FnMut(&mut Option<Label>)) {
        match self {
            Stmt::Seq(a, b) => {
                a.visit_blocks_mut(f);
                b.visit_blocks_mut(f);
            }
            Stmt::If {
                label,
                then_branch,
                else_branch,
                ..
            } => {
                f(label);
                then_branch.visit_blocks_mut(f);
                else_branch.visit_blocks_mut(f);
            }
            Stmt::While { label, body, .. } => {
                f(label);
                body.visit_blocks_mut(f);
            }
            other => {
                if let Some(l) = other.label_mut() {
                    f(l)
                }
            }
        }
    }

    /// All block labels in program-text order (unlabelled blocks are skipped).
    pub fn labels(&self) -> Vec<Label> {
        let mut out = Vec::new();
        self.visit_blocks(&mut |s| out.extend(s.label()));
        out
    }

    pub fn is_fully_labelled(&self) -> bool {
        let mut ok = true;
        self.visit_blocks(&mut |s| ok &= s.label().is_some());
        ok
    }
}

impl Expr {
    /// Free variables, in first-occurrence order without duplicates.
    pub fn free_vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<VarId>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(*v)
                }
            }
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

impl BExpr {
    pub fn free_vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<VarId>) {
        let push_all = |e: &Expr, out: &mut Vec<VarId>| {
            for v in e.free_vars() {
                if !out.contains(&v) {
                    out.push(v)
                }
            }
        };
        match self {
            BExpr::True | BExpr::False => {}
            BExpr::Cmp(_, a, b) => {
                push_all(a, out);
                push_all(b, out);
            }
            BExpr::Pred(_, e) => push_all(e, out),
            BExpr::Not(b) => b.collect_vars(out),
            BExpr::And(a, b) | BExpr::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

/// A parsed program: variable declarations plus the statement body.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Program {
    pub decls: VarDecls,
    pub body: Stmt,
}

impl Program {
    /// The same declarations with a different body, e.g. a sub-statement.
    pub fn with_body(&self, body: Stmt) -> Program {
        Program {
            decls: self.decls.clone(),
            body,
        }
    }
}
