//! Probabilistic abstract interpretation: classification abstractions, their
//! pseudo-inverses, lifted distributions and operators, abstract tests and
//! abstraction-quality tables.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::lang::{BExpr, Builtin, VarId};
use crate::linalg::{
    classification_matrix_indexed, lift_diagonal, lift_operator_with, pseudo_inverse, DenseMatrix, LinalgError,
    ProbVector,
};
use crate::semantics::{test_diagonal, SemError, StateSpace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PaiError {
    #[error("unknown variable `{0}` in abstraction spec")]
    UnknownVariable(String),
    #[error("bad abstraction spec `{0}`: expected id, forgetful:<var>, parity:<var> or prime:<var>")]
    BadSpec(String),
    #[error("variable `{0}` is abstracted twice")]
    DuplicateVariable(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Semantics(#[from] SemError),
}

/// A partition of a finite enumerated set, as a classification matrix `a`
/// (one 1 per row) together with its pseudo-inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct Abstraction {
    name: String,
    classes: Vec<Vec<usize>>,
    a: DenseMatrix,
    a_dagger: DenseMatrix,
}

impl Abstraction {
    /// Abstraction given by explicit classes over `0..n`. The classes must
    /// cover every element exactly once and none may be empty.
    pub fn partition(name: impl Into<String>, n: usize, classes: Vec<Vec<usize>>) -> Result<Self, LinalgError> {
        let a = classification_matrix_indexed(&classes, n)?;
        let a_dagger = pseudo_inverse(&a)?;
        Ok(Abstraction {
            name: name.into(),
            classes,
            a,
            a_dagger,
        })
    }

    /// Keeps every element distinct.
    pub fn identity(n: usize) -> Self {
        Abstraction {
            name: "id".into(),
            classes: (0..n).map(|i| vec![i]).collect(),
            a: DenseMatrix::identity(n),
            a_dagger: DenseMatrix::identity(n),
        }
    }

    /// Collapses everything into one class.
    pub fn forgetful(n: usize) -> Self {
        Self::partition("forgetful", n, vec![(0..n).collect()]).expect("non-empty range")
    }

    /// Two classes, the elements satisfying `pred` first. An empty class is
    /// dropped, so a predicate that holds everywhere (or nowhere) yields the
    /// forgetful abstraction.
    pub fn from_predicate(name: impl Into<String>, n: usize, pred: impl Fn(usize) -> bool) -> Self {
        let (yes, no): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| pred(i));
        let classes = [yes, no].into_iter().filter(|c| !c.is_empty()).collect();
        Self::partition(name, n, classes).expect("predicate classes partition the range")
    }

    /// Evens first, then odds.
    pub fn parity(n: usize) -> Self {
        Self::from_predicate("parity", n, |i| i % 2 == 0)
    }

    /// Primes first, then non-primes.
    pub fn primality(n: usize) -> Self {
        Self::from_predicate("prime", n, |i| Builtin::Prime.holds(i as i64))
    }

    /// Product abstraction on the product set, with `self` as the more
    /// significant factor.
    pub fn kron(&self, other: &Abstraction) -> Result<Abstraction, LinalgError> {
        let inner = other.source_len();
        let mut classes = Vec::with_capacity(self.classes.len() * other.classes.len());
        for c1 in &self.classes {
            for c2 in &other.classes {
                classes.push(
                    c1.iter()
                        .flat_map(|&i| c2.iter().map(move |&j| i * inner + j))
                        .collect(),
                );
            }
        }
        Ok(Abstraction {
            name: format!("{}⊗{}", self.name, other.name),
            classes,
            a: self.a.kron(&other.a)?,
            // (A ⊗ B)† = A† ⊗ B†
            a_dagger: self.a_dagger.kron(&other.a_dagger)?,
        })
    }

    /// Abstraction of a whole state space from per-variable choices;
    /// variables not mentioned keep their identity.
    pub fn for_state_space(ss: &StateSpace, spec: &AbstractionSpec) -> Result<Abstraction, PaiError> {
        let decls = ss.decls();
        let mut per_var: Vec<Abstraction> = decls.iter().map(|(_, d)| Abstraction::identity(d.size)).collect();
        let mut seen: Vec<VarId> = Vec::new();
        for (kind, var) in &spec.parts {
            let id = decls
                .lookup(var)
                .ok_or_else(|| PaiError::UnknownVariable(var.clone()))?;
            if seen.contains(&id) {
                return Err(PaiError::DuplicateVariable(var.clone()));
            }
            seen.push(id);
            let size = decls.size(id);
            per_var[id.0] = match kind {
                VarAbstraction::Forgetful => Abstraction::forgetful(size),
                VarAbstraction::Parity => Abstraction::parity(size),
                VarAbstraction::Prime => Abstraction::primality(size),
            };
        }
        let mut iter = per_var.into_iter();
        let first = match iter.next() {
            Some(a) => a,
            None => return Ok(Abstraction::identity(1)),
        };
        let mut out = iter.try_fold(first, |acc, next| acc.kron(&next))?;
        out.name = spec.to_string();
        Ok(out)
    }

    /// Whether every element is its own class, in order.
    pub fn is_identity(&self) -> bool {
        self.classes.iter().enumerate().all(|(i, c)| c.as_slice() == [i])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source_len(&self) -> usize {
        self.a.rows()
    }

    pub fn abstract_len(&self) -> usize {
        self.a.cols()
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn pseudo_inverse(&self) -> &DenseMatrix {
        &self.a_dagger
    }

    /// `ρ# = ρ · A`: the mass of each class.
    pub fn lift_distribution(&self, rho: &ProbVector) -> Result<ProbVector, LinalgError> {
        rho.mul_matrix(&self.a)
    }

    /// `F# = A† · F · A`.
    pub fn lift_operator(&self, f: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        lift_operator_with(f, &self.a, &self.a_dagger)
    }

    /// `P#(b) = A† · P(b) · A` for a projection given by its diagonal.
    pub fn abstract_test_diagonal(&self, diag: &[f64]) -> Result<DenseMatrix, LinalgError> {
        lift_diagonal(diag, &self.a, &self.a_dagger)
    }

    /// `P#(b)` for a boolean condition over the state space.
    pub fn abstract_test(&self, cond: &BExpr, ss: &StateSpace) -> Result<DenseMatrix, PaiError> {
        Ok(self.abstract_test_diagonal(&test_diagonal(cond, ss)?)?)
    }

    /// Whether every class lies entirely inside or entirely outside the
    /// projection.
    pub fn refines(&self, diag: &[f64]) -> bool {
        self.classes.iter().all(|c| c.iter().all(|&i| diag[i] == diag[c[0]]))
    }

    /// `max |ρ·P·A − ρ#·P#|`, which vanishes when the partition refines the
    /// projection.
    pub fn compatibility_residual(&self, rho: &ProbVector, diag: &[f64]) -> Result<f64, LinalgError> {
        if diag.len() != rho.len() {
            return Err(LinalgError::DimensionMismatch {
                op: "compatibility_residual",
                left: (1, rho.len()),
                right: (diag.len(), diag.len()),
            });
        }
        let projected = ProbVector::new(rho.values().iter().zip(diag).map(|(r, d)| r * d).collect());
        let concrete = self.lift_distribution(&projected)?;
        let abstracted = self
            .lift_distribution(rho)?
            .mul_matrix(&self.abstract_test_diagonal(diag)?)?;
        Ok(concrete.max_abs_diff(&abstracted))
    }
}

/// How one variable is abstracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarAbstraction {
    Forgetful,
    Parity,
    Prime,
}

impl VarAbstraction {
    fn keyword(self) -> &'static str {
        match self {
            VarAbstraction::Forgetful => "forgetful",
            VarAbstraction::Parity => "parity",
            VarAbstraction::Prime => "prime",
        }
    }
}

/// Per-variable abstraction choices, written `id` or a comma-separated list
/// such as `forgetful:z,parity:i`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AbstractionSpec {
    pub parts: Vec<(VarAbstraction, String)>,
}

impl AbstractionSpec {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn is_identity(&self) -> bool {
        self.parts.is_empty()
    }
}

impl FromStr for AbstractionSpec {
    type Err = PaiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = Vec::new();
        for item in s.split(',').map(str::trim) {
            if item == "id" {
                continue;
            }
            let (kind, var) = item
                .split_once(':')
                .ok_or_else(|| PaiError::BadSpec(item.to_string()))?;
            let kind = match kind.trim() {
                "forgetful" => VarAbstraction::Forgetful,
                "parity" => VarAbstraction::Parity,
                "prime" => VarAbstraction::Prime,
                _ => return Err(PaiError::BadSpec(item.to_string())),
            };
            let var = var.trim();
            if var.is_empty() {
                return Err(PaiError::BadSpec(item.to_string()));
            }
            parts.push((kind, var.to_string()));
        }
        Ok(AbstractionSpec { parts })
    }
}

impl fmt::Display for AbstractionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("id");
        }
        let items: Vec<String> = self.parts.iter().map(|(k, v)| format!("{}:{v}", k.keyword())).collect();
        f.write_str(&items.join(","))
    }
}

/// The four abstract tests comparing parity and primality over `0..n`:
/// prime and non-prime under the parity abstraction, then even and odd
/// under the primality abstraction. Each is 2×2 with the predicate-true
/// class first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityTable {
    pub n: usize,
    pub prime_given_parity: DenseMatrix,
    pub nonprime_given_parity: DenseMatrix,
    pub even_given_primality: DenseMatrix,
    pub odd_given_primality: DenseMatrix,
}

impl QualityTable {
    pub fn matrices(&self) -> [&DenseMatrix; 4] {
        [
            &self.prime_given_parity,
            &self.nonprime_given_parity,
            &self.even_given_primality,
            &self.odd_given_primality,
        ]
    }

    /// The matrices with every entry rounded to two decimals, as displayed.
    pub fn rounded(&self) -> [DenseMatrix; 4] {
        self.matrices().map(|m| {
            let entries = m.entries().iter().map(|&v| round_to(v, 2)).collect();
            DenseMatrix::from_row_major(m.rows(), m.cols(), entries).expect("finite entries")
        })
    }
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    let r = (v * s).round() / s;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Builds the quality table for `0..n`. Only the `n×2` classification
/// matrices are materialised. Requires `n ≥ 3` so both classes of each
/// abstraction are inhabited.
pub fn quality_table(n: usize) -> Result<QualityTable, LinalgError> {
    if n < 3 {
        return Err(LinalgError::NotPartition(format!(
            "quality table needs n >= 3, got {n}"
        )));
    }
    let parity = Abstraction::parity(n);
    let primality = Abstraction::primality(n);
    let prime: Vec<f64> = (0..n)
        .map(|i| f64::from(u8::from(Builtin::Prime.holds(i as i64))))
        .collect();
    let even: Vec<f64> = (0..n).map(|i| f64::from(u8::from(i % 2 == 0))).collect();
    let not = |d: &[f64]| d.iter().map(|v| 1.0 - v).collect::<Vec<_>>();
    Ok(QualityTable {
        n,
        prime_given_parity: parity.abstract_test_diagonal(&prime)?,
        nonprime_given_parity: parity.abstract_test_diagonal(&not(&prime))?,
        even_given_primality: primality.abstract_test_diagonal(&even)?,
        odd_given_primality: primality.abstract_test_diagonal(&not(&even))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;
    use crate::linalg::penrose_ok;

    fn diag2(m: &DenseMatrix) -> (f64, f64) {
        assert!(m.is_diagonal());
        (m[(0, 0)], m[(1, 1)])
    }

    #[test]
    fn lifted_distributions() {
        let u = ProbVector::uniform(10);
        assert_eq!(
            Abstraction::parity(10).lift_distribution(&u).unwrap().values(),
            &[0.5, 0.5]
        );
        let pm = ProbVector::point_mass(10, 3);
        assert_eq!(
            Abstraction::parity(10).lift_distribution(&pm).unwrap().values(),
            &[0.0, 1.0]
        );
        // oracle: primes below 10 are 2, 3, 5, 7
        let count = (0..10).filter(|&i| [2, 3, 5, 7].contains(&i)).count() as f64;
        let lifted = Abstraction::primality(10).lift_distribution(&u).unwrap();
        assert!((lifted[0] - count / 10.0).abs() < 1e-15);
        assert!((lifted[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn parity_classes() {
        assert_eq!(Abstraction::parity(4).classes(), &[vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn forgetful_pinv_is_uniform() {
        let f = Abstraction::forgetful(4);
        assert_eq!(f.matrix().shape(), (4, 1));
        assert!(f.pseudo_inverse().entries().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn identity_abstraction_keeps_projection() {
        let id = Abstraction::identity(5);
        let d = [1.0, 0.0, 0.0, 1.0, 1.0];
        assert_eq!(id.abstract_test_diagonal(&d).unwrap(), DenseMatrix::from_diagonal(&d));
    }

    #[test]
    fn small_quality_table() {
        let t = quality_table(10).unwrap();
        let (a, b) = diag2(&t.prime_given_parity);
        assert!((a - 0.2).abs() < 1e-15 && (b - 0.6).abs() < 1e-15);
        let (a, b) = diag2(&t.even_given_primality);
        assert!((a - 0.25).abs() < 1e-15 && (b - 2.0 / 3.0).abs() < 1e-15);
        let r = t.rounded();
        assert_eq!(diag2(&r[3]), (0.75, 0.33));
        assert_eq!(diag2(&r[1]), (0.8, 0.4));
        for (p, q) in [(0, 1), (2, 3)] {
            let sum = t.matrices()[p].add(t.matrices()[q]).unwrap();
            assert!(sum.max_abs_diff(&DenseMatrix::identity(2)) < 1e-15);
        }
    }

    #[test]
    fn quality_table_needs_three_values() {
        assert!(quality_table(2).is_err());
    }

    #[test]
    fn running_example_abstraction_shape() {
        let p = parse_program(include_str!("../../../programs/running.pw")).unwrap();
        let ss = StateSpace::new(&p.decls).unwrap();
        let spec: AbstractionSpec = "forgetful:z".parse().unwrap();
        let abs = Abstraction::for_state_space(&ss, &spec).unwrap();
        assert_eq!(abs.matrix().shape(), (64, 16));
        assert!(penrose_ok(abs.matrix(), abs.pseudo_inverse()));
        // class of (x, y) = 4x + y contains z = 0..3
        assert_eq!(abs.classes()[6], vec![24, 25, 26, 27]);
    }

    #[test]
    fn kron_of_pinvs_matches_direct_pinv() {
        let a = Abstraction::parity(3).kron(&Abstraction::forgetful(2)).unwrap();
        let direct = pseudo_inverse(a.matrix()).unwrap();
        assert!(direct.max_abs_diff(a.pseudo_inverse()) < 1e-12);
    }

    #[test]
    fn spec_parsing() {
        let s: AbstractionSpec = "forgetful:z, parity:i".parse().unwrap();
        assert_eq!(s.parts.len(), 2);
        assert_eq!(s.to_string(), "forgetful:z,parity:i");
        assert!("id".parse::<AbstractionSpec>().unwrap().is_identity());
        assert!("blur:x".parse::<AbstractionSpec>().is_err());
        assert!("forgetful".parse::<AbstractionSpec>().is_err());
    }

    #[test]
    fn spec_errors() {
        let p = parse_program("var x : 0..3; [skip]^1").unwrap();
        let ss = StateSpace::new(&p.decls).unwrap();
        let bad: AbstractionSpec = "parity:q".parse().unwrap();
        assert_eq!(
            Abstraction::for_state_space(&ss, &bad),
            Err(PaiError::UnknownVariable("q".into()))
        );
        let dup: AbstractionSpec = "parity:x,forgetful:x".parse().unwrap();
        assert!(matches!(
            Abstraction::for_state_space(&ss, &dup),
            Err(PaiError::DuplicateVariable(_))
        ));
    }

    #[test]
    fn compatibility_exact_when_refining() {
        let par = Abstraction::parity(10);
        let even: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        assert!(par.refines(&even));
        let rho = ProbVector::new((1..=10).map(|i| i as f64 / 55.0).collect());
        assert!(par.compatibility_residual(&rho, &even).unwrap() < 1e-15);
        let prime: Vec<f64> = (0..10)
            .map(|i| f64::from(u8::from([2, 3, 5, 7].contains(&i))))
            .collect();
        assert!(!par.refines(&prime));
        assert!(par.compatibility_residual(&rho, &prime).unwrap() > 1e-3);
    }

    #[test]
    fn abstract_bexpr_test() {
        let p = parse_program("var x : 0..3; var y : 0..1; if [x > 2]^1 then [skip]^2 else [skip]^3 fi").unwrap();
        let ss = StateSpace::new(&p.decls).unwrap();
        let abs = Abstraction::for_state_space(&ss, &"forgetful:y".parse().unwrap()).unwrap();
        let crate::lang::Stmt::If { cond, .. } = &p.body else {
            panic!()
        };
        let m = abs.abstract_test(cond, &ss).unwrap();
        assert_eq!(m, DenseMatrix::from_diagonal(&[0.0, 0.0, 0.0, 1.0]));
    }
}
