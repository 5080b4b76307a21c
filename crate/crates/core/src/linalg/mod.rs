//! Dense linear algebra over enumerated finite sets: linear representations
//! of functions and predicates, classification matrices, Kronecker products
//! and Moore-Penrose pseudo-inverses.

mod lu;
mod matrix;
mod pinv;

use std::collections::HashMap;
use std::hash::Hash;

use thiserror::Error;

pub use lu::{Lu, PIVOT_RTOL};
pub use matrix::{one_norm, DenseMatrix, ProbVector};
pub use pinv::{
    classification_pinv, penrose_ok, penrose_residuals, pseudo_inverse, pseudo_inverse_with_method, PinvMethod,
    PENROSE_TOL,
};

/// Default bound on the number of entries a Kronecker product may produce.
pub const DEFAULT_ENTRY_CAP: usize = 1 << 20;

/// Tolerance for matrix equality assertions.
pub const MATRIX_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("result would have {requested} entries, above the cap of {cap}")]
    SizeCap { requested: usize, cap: usize },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("function undefined on element #{0}")]
    Undefined(usize),
    #[error("classes do not form a partition: {0}")]
    NotPartition(String),
    #[error("matrix is singular (pivot {pivot:e} at column {index})")]
    Singular { pivot: f64, index: usize },
    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
}

/// A fixed ordering of a finite set.
#[derive(Debug, Clone)]
pub struct Enumeration<T> {
    items: Vec<T>,
    index: HashMap<T, usize>,
}

impl<T: Clone + Eq + Hash> Enumeration<T> {
    /// Builds an enumeration; duplicates after the first occurrence are dropped.
    pub fn new(items: impl IntoIterator<Item = T>) -> Self {
        let mut out = Enumeration {
            items: Vec::new(),
            index: HashMap::new(),
        };
        for it in items {
            if !out.index.contains_key(&it) {
                out.index.insert(it.clone(), out.items.len());
                out.items.push(it);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn index_of(&self, x: &T) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn element(&self, i: usize) -> &T {
        &self.items[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }
}

/// Linear representation of `f : X → Y`: `F[i][j] = 1` iff `f(x_i) = y_j`.
/// `f` returning `None`, or a value outside `ey`, is an error.
pub fn lin_rep<X, Y>(
    f: impl Fn(&X) -> Option<Y>,
    ex: &Enumeration<X>,
    ey: &Enumeration<Y>,
) -> Result<DenseMatrix, LinalgError>
where
    X: Clone + Eq + Hash,
    Y: Clone + Eq + Hash,
{
    lin_rep_indexed(ex.len(), ey.len(), |i| f(ex.element(i)).and_then(|y| ey.index_of(&y)))
}

/// [`lin_rep`] on index sets `0..n → 0..m`.
pub fn lin_rep_indexed(n: usize, m: usize, f: impl Fn(usize) -> Option<usize>) -> Result<DenseMatrix, LinalgError> {
    let mut out = DenseMatrix::zeros(n, m);
    for i in 0..n {
        match f(i) {
            Some(j) if j < m => out[(i, j)] = 1.0,
            _ => return Err(LinalgError::Undefined(i)),
        }
    }
    Ok(out)
}

/// Diagonal 0/1 projection selecting the elements satisfying `p`.
pub fn pred_rep<X: Clone + Eq + Hash>(p: impl Fn(&X) -> bool, ex: &Enumeration<X>) -> DenseMatrix {
    DenseMatrix::from_diagonal(&pred_diagonal(ex.len(), |i| p(ex.element(i))))
}

/// The diagonal of a predicate's projection on `0..n`.
pub fn pred_diagonal(n: usize, p: impl Fn(usize) -> bool) -> Vec<f64> {
    (0..n).map(|i| if p(i) { 1.0 } else { 0.0 }).collect()
}

/// Classification matrix of a partition: row `i` has its single 1 in the
/// column of the class containing `x_i`.
pub fn classification_matrix<X: Clone + Eq + Hash + std::fmt::Debug>(
    classes: &[Vec<X>],
    ex: &Enumeration<X>,
) -> Result<DenseMatrix, LinalgError> {
    let indexed = classes
        .iter()
        .map(|c| {
            c.iter()
                .map(|x| {
                    ex.index_of(x)
                        .ok_or_else(|| LinalgError::NotPartition(format!("{x:?} is not in the set")))
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    classification_matrix_indexed(&indexed, ex.len())
}

/// [`classification_matrix`] for classes given as indices into `0..n`.
pub fn classification_matrix_indexed(classes: &[Vec<usize>], n: usize) -> Result<DenseMatrix, LinalgError> {
    let mut owner = vec![None; n];
    for (k, class) in classes.iter().enumerate() {
        if class.is_empty() {
            return Err(LinalgError::NotPartition(format!("class {k} is empty")));
        }
        for &i in class {
            if i >= n {
                return Err(LinalgError::NotPartition(format!("element #{i} out of range")));
            }
            if let Some(prev) = owner[i].replace(k) {
                return Err(LinalgError::NotPartition(format!(
                    "element #{i} in classes {prev} and {k}"
                )));
            }
        }
    }
    let mut a = DenseMatrix::zeros(n, classes.len());
    for (i, o) in owner.iter().enumerate() {
        match o {
            Some(k) => a[(i, *k)] = 1.0,
            None => return Err(LinalgError::NotPartition(format!("element #{i} not covered"))),
        }
    }
    Ok(a)
}

/// `A† · F · A`: the abstract operator induced by `f` under abstraction `a`.
pub fn lift_operator(f: &DenseMatrix, a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    let g = pseudo_inverse(a)?;
    lift_operator_with(f, a, &g)
}

/// [`lift_operator`] with a precomputed pseudo-inverse.
pub fn lift_operator_with(
    f: &DenseMatrix,
    a: &DenseMatrix,
    a_dagger: &DenseMatrix,
) -> Result<DenseMatrix, LinalgError> {
    a_dagger.matmul(f)?.matmul(a)
}

/// `A† · diag(d) · A` without materialising the diagonal matrix.
pub fn lift_diagonal(diag: &[f64], a: &DenseMatrix, a_dagger: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if diag.len() != a.rows() || a_dagger.cols() != a.rows() {
        return Err(LinalgError::DimensionMismatch {
            op: "lift_diagonal",
            left: a_dagger.shape(),
            right: a.shape(),
        });
    }
    let k = a.cols();
    let mut out = DenseMatrix::zeros(a_dagger.rows(), k);
    for i in 0..diag.len() {
        let d = diag[i];
        if d == 0.0 {
            continue;
        }
        for r in 0..a_dagger.rows() {
            let g = a_dagger[(r, i)];
            if g == 0.0 {
                continue;
            }
            for c in 0..k {
                out[(r, c)] += g * d * a[(i, c)];
            }
        }
    }
    Ok(out)
}
