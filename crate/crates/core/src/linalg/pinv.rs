use super::lu::Lu;
use super::{DenseMatrix, LinalgError};

/// Tolerance for the Penrose identities.
pub const PENROSE_TOL: f64 = 1e-8;

const NEWTON_MAX_ITER: usize = 500;

/// Which route produced a pseudo-inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinvMethod {
    Classification,
    NormalEquations,
    NewtonSchulz,
}

/// Moore-Penrose pseudo-inverse.
///
/// 0/1 classification matrices use the closed form (transpose with each row
/// scaled by the inverse class size); full-column-rank matrices use
/// `(AᵀA)⁻¹Aᵀ`; anything else goes through a Newton-Schulz iteration. Every
/// result is checked against the four Penrose identities.
pub fn pseudo_inverse(a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    pseudo_inverse_with_method(a).map(|(g, _)| g)
}

pub fn pseudo_inverse_with_method(a: &DenseMatrix) -> Result<(DenseMatrix, PinvMethod), LinalgError> {
    if let Some(g) = classification_pinv(a) {
        return Ok((g, PinvMethod::Classification));
    }
    if a.rows() >= a.cols() {
        if let Some(g) = normal_equations_pinv(a) {
            if penrose_ok(a, &g) {
                return Ok((g, PinvMethod::NormalEquations));
            }
        }
    }
    let g = newton_schulz_pinv(a)?;
    Ok((g, PinvMethod::NewtonSchulz))
}

/// Closed form for matrices with exactly one 1 per row and zeros elsewhere.
/// Returns `None` for any other matrix.
pub fn classification_pinv(a: &DenseMatrix) -> Option<DenseMatrix> {
    let mut col_of_row = Vec::with_capacity(a.rows());
    for i in 0..a.rows() {
        let mut hit = None;
        for (j, &v) in a.row(i).iter().enumerate() {
            if v == 1.0 && hit.is_none() {
                hit = Some(j);
            } else if v != 0.0 {
                return None;
            }
        }
        col_of_row.push(hit?);
    }
    let mut counts = vec![0usize; a.cols()];
    for &j in &col_of_row {
        counts[j] += 1;
    }
    let mut g = DenseMatrix::zeros(a.cols(), a.rows());
    for (i, &j) in col_of_row.iter().enumerate() {
        g[(j, i)] = 1.0 / counts[j] as f64;
    }
    Some(g)
}

fn normal_equations_pinv(a: &DenseMatrix) -> Option<DenseMatrix> {
    let at = a.transpose();
    let ata = at.matmul(a).ok()?;
    let lu = Lu::factor(&ata).ok()?;
    lu.inverse().matmul(&at).ok()
}

fn newton_schulz_pinv(a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    let at = a.transpose();
    let bound = a.norm_1() * a.norm_inf();
    if bound == 0.0 {
        // pinv of the zero matrix is its transpose
        return Ok(at);
    }
    // alpha < 2 / sigma_max^2 since sigma_max^2 <= |A|_1 |A|_inf
    let mut g = at.scale(1.0 / bound);
    let two_i = DenseMatrix::identity(a.rows()).scale(2.0);
    for _ in 0..NEWTON_MAX_ITER {
        let ag = a.matmul(&g)?;
        let next = g.matmul(&two_i.sub(&ag)?)?;
        let step = next.max_abs_diff(&g);
        g = next;
        if step <= 1e-15 * g.max_abs().max(1.0) {
            break;
        }
    }
    let res = penrose_residuals(a, &g)?;
    let worst = res.iter().copied().fold(0.0, f64::max);
    if worst > PENROSE_TOL {
        return Err(LinalgError::NotConverged {
            iterations: NEWTON_MAX_ITER,
            residual: worst,
        });
    }
    Ok(g)
}

/// Max-abs residuals of `AGA = A`, `GAG = G`, `(AG)ᵀ = AG`, `(GA)ᵀ = GA`.
pub fn penrose_residuals(a: &DenseMatrix, g: &DenseMatrix) -> Result<[f64; 4], LinalgError> {
    let ag = a.matmul(g)?;
    let ga = g.matmul(a)?;
    Ok([
        ag.matmul(a)?.max_abs_diff(a),
        ga.matmul(g)?.max_abs_diff(g),
        ag.transpose().max_abs_diff(&ag),
        ga.transpose().max_abs_diff(&ga),
    ])
}

pub fn penrose_ok(a: &DenseMatrix, g: &DenseMatrix) -> bool {
    penrose_residuals(a, g)
        .map(|r| r.iter().all(|&x| x <= PENROSE_TOL))
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forgetful_column() {
        let a = DenseMatrix::from_row_major(5, 1, vec![1.0; 5]).unwrap();
        let (g, m) = pseudo_inverse_with_method(&a).unwrap();
        assert_eq!(m, PinvMethod::Classification);
        assert_eq!(g.shape(), (1, 5));
        assert!(g.entries().iter().all(|&v| v == 0.2));
    }

    #[test]
    fn invertible_matrix() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let g = pseudo_inverse(&a).unwrap();
        let inv = DenseMatrix::from_rows(&[vec![0.6, -0.2], vec![-0.2, 0.4]]).unwrap();
        assert!(g.max_abs_diff(&inv) < 1e-12);
        assert!(a.matmul(&g).unwrap().max_abs_diff(&DenseMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn classification_with_class_sizes_three_and_two() {
        let a = DenseMatrix::from_rows(&[
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let g = pseudo_inverse(&a).unwrap();
        let third = 1.0 / 3.0;
        let expected =
            DenseMatrix::from_rows(&[vec![third, 0.0, third, third, 0.0], vec![0.0, 0.5, 0.0, 0.0, 0.5]]).unwrap();
        assert!(g.max_abs_diff(&expected) < 1e-15);
        // oracle: the four identities by direct multiplication
        let aga = a.matmul(&g).unwrap().matmul(&a).unwrap();
        assert!(aga.max_abs_diff(&a) < 1e-12);
        assert!(penrose_ok(&a, &g));
    }

    #[test]
    fn rank_deficient_goes_through_iteration() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        let (g, m) = pseudo_inverse_with_method(&a).unwrap();
        assert_eq!(m, PinvMethod::NewtonSchulz);
        // rank one: A⁺ = Aᵀ / ‖A‖_F²
        let expected = a.transpose().scale(1.0 / 70.0);
        assert!(g.max_abs_diff(&expected) < 1e-10);
    }

    #[test]
    fn wide_matrix() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]]).unwrap();
        let g = pseudo_inverse(&a).unwrap();
        assert!(penrose_ok(&a, &g));
    }

    #[test]
    fn zero_matrix() {
        let a = DenseMatrix::zeros(2, 3);
        let g = pseudo_inverse(&a).unwrap();
        assert_eq!(g, DenseMatrix::zeros(3, 2));
    }
}
