use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use super::{LinalgError, DEFAULT_ENTRY_CAP};

/// Row-major dense real matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                op: "from_row_major",
                left: (rows, cols),
                right: (entries.len(), 1),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::DimensionMismatch {
                op: "from_rows",
                left: (r, c),
                right: (r, rows.iter().map(Vec::len).max().unwrap_or(0)),
            });
        }
        Self::from_row_major(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.entries[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.entries[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.entries[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &DenseMatrix,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<DenseMatrix, LinalgError> {
        if self.shape() != other.shape() {
            return Err(LinalgError::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|v| v * s).collect(),
        }
    }

    /// `I - self` for square matrices.
    pub fn complement(&self) -> Result<DenseMatrix, LinalgError> {
        DenseMatrix::identity(self.rows).sub(self)
    }

    /// Largest absolute entry-wise difference; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        if self.shape() != other.shape() {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Rows sum to one within `tol` and all entries are nonnegative.
    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.entries.iter().all(|&v| v >= -tol) && self.row_sums().iter().all(|s| (s - 1.0).abs() <= tol)
    }

    /// Max column-sum norm.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Max row-sum norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)] == 0.0))
    }

    pub fn kron(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        self.kron_with_cap(other, DEFAULT_ENTRY_CAP)
    }

    /// Kronecker product; `cap` bounds the number of entries of the result.
    pub fn kron_with_cap(&self, other: &DenseMatrix, cap: usize) -> Result<DenseMatrix, LinalgError> {
        let rows = self.rows.checked_mul(other.rows);
        let cols = self.cols.checked_mul(other.cols);
        let total = rows.zip(cols).and_then(|(r, c)| r.checked_mul(c));
        match total {
            Some(t) if t <= cap => {}
            _ => {
                return Err(LinalgError::SizeCap {
                    requested: total.unwrap_or(usize::MAX),
                    cap,
                })
            }
        }
        let (rows, cols) = (rows.unwrap(), cols.unwrap());
        let mut out = DenseMatrix::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == 0.0 {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product of a list of factors, left to right.
    pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a DenseMatrix>) -> Result<DenseMatrix, LinalgError> {
        let mut acc = DenseMatrix::identity(1);
        for f in factors {
            acc = acc.kron(f)?;
        }
        Ok(acc)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.entries[i * self.cols + j]
    }
}

/// A row vector over an enumerated set. Distributions are nonnegative vectors
/// with 1-norm one; occupancy measures only need to be nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        Self(v)
    }

    /// Standard basis vector `e_i`, e.g. `(1,0)` or `(0,1)`.
    pub fn basis(n: usize, i: usize) -> Self {
        Self::point_mass(n, i)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn one_norm(&self) -> f64 {
        one_norm(&self.0)
    }

    pub fn is_distribution(&self, tol: f64) -> bool {
        self.0.iter().all(|&v| v >= -tol) && (self.one_norm() - 1.0).abs() <= tol
    }

    /// `self · m` (row vector times matrix).
    pub fn mul_matrix(&self, m: &DenseMatrix) -> Result<ProbVector, LinalgError> {
        if self.0.len() != m.rows() {
            return Err(LinalgError::DimensionMismatch {
                op: "vecmat",
                left: (1, self.0.len()),
                right: m.shape(),
            });
        }
        let mut out = vec![0.0; m.cols()];
        for (i, &a) in self.0.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (o, &b) in out.iter_mut().zip(m.row(i)) {
                *o += a * b;
            }
        }
        Ok(ProbVector(out))
    }

    pub fn add(&self, other: &ProbVector) -> Result<ProbVector, LinalgError> {
        if self.len() != other.len() {
            return Err(LinalgError::DimensionMismatch {
                op: "vecadd",
                left: (1, self.len()),
                right: (1, other.len()),
            });
        }
        Ok(ProbVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    pub fn scale(&self, s: f64) -> ProbVector {
        ProbVector(self.0.iter().map(|v| v * s).collect())
    }

    pub fn max_abs_diff(&self, other: &ProbVector) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn kron(&self, other: &ProbVector) -> Result<ProbVector, LinalgError> {
        self.kron_with_cap(other, DEFAULT_ENTRY_CAP)
    }

    pub fn kron_with_cap(&self, other: &ProbVector, cap: usize) -> Result<ProbVector, LinalgError> {
        match self.len().checked_mul(other.len()) {
            Some(n) if n <= cap => {}
            n => {
                return Err(LinalgError::SizeCap {
                    requested: n.unwrap_or(usize::MAX),
                    cap,
                })
            }
        }
        let mut out = Vec::with_capacity(self.len() * other.len());
        for &a in &self.0 {
            for &b in &other.0 {
                out.push(a * b);
            }
        }
        Ok(ProbVector(out))
    }

    pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ProbVector>) -> Result<ProbVector, LinalgError> {
        let mut acc = ProbVector(vec![1.0]);
        for f in factors {
            acc = acc.kron(f)?;
        }
        Ok(acc)
    }
}

impl Index<usize> for ProbVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for ProbVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// `Σ |v_i|`.
pub fn one_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_basis_vectors() {
        let e0 = ProbVector::new(vec![1.0, 0.0]);
        let e1 = ProbVector::new(vec![0.0, 1.0]);
        // index i*m + j carries a[i]*b[j]
        assert_eq!(e0.kron(&e1).unwrap().values(), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(e1.kron(&e0).unwrap().values(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn kron_identities() {
        let i2 = DenseMatrix::identity(2);
        assert_eq!(i2.kron(&i2).unwrap(), DenseMatrix::identity(4));
    }

    #[test]
    fn kron_general_vectors() {
        let (x1, x2, y1, y2) = (2.0, 3.0, 5.0, 7.0);
        let v = ProbVector::new(vec![x1, x2])
            .kron(&ProbVector::new(vec![y1, y2]))
            .unwrap();
        assert_eq!(v.values(), &[x1 * y1, x1 * y2, x2 * y1, x2 * y2]);
    }

    #[test]
    fn kron_block_layout() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![0.0, 5.0], vec![6.0, 7.0]]).unwrap();
        let k = a.kron(&b).unwrap();
        assert_eq!(k.shape(), (4, 4));
        assert_eq!(k.row(0), &[0.0, 5.0, 0.0, 10.0]);
        assert_eq!(k.row(3), &[18.0, 21.0, 24.0, 28.0]);
    }

    #[test]
    fn kron_respects_cap() {
        let a = DenseMatrix::identity(64);
        let err = a.kron_with_cap(&a, 1000).unwrap_err();
        assert!(matches!(
            err,
            LinalgError::SizeCap {
                requested: 16777216,
                cap: 1000
            }
        ));
    }

    #[test]
    fn one_norms() {
        let (p1, p2) = (0.3, 0.45);
        assert_eq!(ProbVector::new(vec![0.0, p1, p2]).one_norm(), p1 + p2);
        assert_eq!(ProbVector::zeros(5).one_norm(), 0.0);
        assert!((ProbVector::uniform(7).one_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_finite_rejected() {
        assert_eq!(
            DenseMatrix::from_row_major(1, 2, vec![1.0, f64::NAN]),
            Err(LinalgError::NonFinite)
        );
    }

    #[test]
    fn vector_matrix_product() {
        let m = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let v = ProbVector::new(vec![0.25, 0.75]);
        assert_eq!(v.mul_matrix(&m).unwrap().values(), &[0.75, 0.25]);
        assert!(ProbVector::new(vec![1.0]).mul_matrix(&m).is_err());
    }
}
