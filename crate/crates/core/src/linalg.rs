//! Bridge to nalgebra for the few decompositions the crate needs:
//! singular values (spectral norms, condition numbers) and LU solves.
//! Everything in this module is reference-path machinery — the streaming
//! mechanism never calls it.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub fn to_nalgebra(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

pub fn from_nalgebra(m: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Largest singular value.
pub fn spectral_norm(m: &DenseMatrix) -> f64 {
    to_nalgebra(m).singular_values().max()
}

/// Smallest singular value.
pub fn smallest_singular_value(m: &DenseMatrix) -> f64 {
    to_nalgebra(m).singular_values().min()
}

/// Two-norm condition number `sigma_max / sigma_min`.
pub fn condition_number(m: &DenseMatrix) -> f64 {
    let sv = to_nalgebra(m).singular_values();
    sv.max() / sv.min()
}

/// Solve `A X = B` by LU with partial pivoting.
pub fn solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "solve: coefficient matrix is {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "solve: {} equations, {} right-hand rows",
            a.rows(),
            b.rows()
        )));
    }
    let lu = to_nalgebra(a).lu();
    match lu.solve(&to_nalgebra(b)) {
        Some(x) => Ok(from_nalgebra(&x)),
        None => Err(Error::Singular(format!("LU solve failed for {}x{} system", a.rows(), a.rows()))),
    }
}

/// Explicit inverse (used only on small reference matrices).
pub fn inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    solve(a, &DenseMatrix::identity(a.rows()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = DenseMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, -7.0]]).unwrap();
        assert!((spectral_norm(&m) - 7.0).abs() < 1e-12);
        assert!((smallest_singular_value(&m) - 3.0).abs() < 1e-12);
        assert!((condition_number(&m) - 7.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn solve_recovers_known_solution() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![-2.0]]).unwrap();
        let b = a.matmul(&x).unwrap();
        let got = solve(&a, &b).unwrap();
        for i in 0..2 {
            assert!((got.get(i, 0) - x.get(i, 0)).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_rejects_singular() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        assert!(solve(&a, &b).is_err());
    }
}
