//! Materialized factors of the prefix-sum matrix, the square-root
//! baseline, and the exact norm formulas.
//!
//! With `b` the group-algebra coefficient vector of length `2n`, the
//! factors are
//!
//! ```text
//! L[i][j] = b[(j - i) mod 2n]   (n x 2n,  i < n, j < 2n)
//! R[k][j] = b[(j - k) mod 2n]   (2n x n,  k < 2n, j < n)
//! ```
//!
//! i.e. both are windows into the same cyclically shifted vector, and
//! `L * R = M`, the lower-triangular all-ones matrix, exactly: the cyclic
//! self-convolution of `b` is the indicator of `{0..n-1}`.  The block
//! views `L = [L_1 | L_2]` and `R = (R_1; R_2)` satisfy
//! `L_1 = R_1 = E/(2 sqrt n) + C/2` and `L_2 = R_2 = E/(2 sqrt n) - C/2`
//! where `E` is all-ones and `C` is the polynomial in the signed shift
//! built from the folded coefficient sums (see [`build_c`]).
//!
//! Dense materialization is for verification and desk-scale use and is
//! gated by a size limit; the streaming path never materializes anything.

use crate::coeffs::{f_seq, folded_f_sums, GroupAlgebraFactors};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Largest `n` for which dense `n x 2n` materialization is allowed by the
/// convenience constructors.
pub const DEFAULT_DENSE_LIMIT: usize = 4096;

fn check_limit(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::DenseLimit { n, limit });
    }
    Ok(())
}

/// Dense left factor `L` (`n x 2n`) under the default dense limit.
pub fn materialize_l(factors: &GroupAlgebraFactors) -> Result<DenseMatrix> {
    materialize_l_with_limit(factors, DEFAULT_DENSE_LIMIT)
}

pub fn materialize_l_with_limit(
    factors: &GroupAlgebraFactors,
    limit: usize,
) -> Result<DenseMatrix> {
    let n = factors.n();
    check_limit(n, limit)?;
    let b = factors.b();
    let wrap = 2 * n;
    Ok(DenseMatrix::from_fn(n, wrap, |i, j| b[(j + wrap - i) % wrap]))
}

/// Dense right factor `R` (`2n x n`) under the default dense limit.
pub fn materialize_r(factors: &GroupAlgebraFactors) -> Result<DenseMatrix> {
    materialize_r_with_limit(factors, DEFAULT_DENSE_LIMIT)
}

pub fn materialize_r_with_limit(
    factors: &GroupAlgebraFactors,
    limit: usize,
) -> Result<DenseMatrix> {
    let n = factors.n();
    check_limit(n, limit)?;
    let b = factors.b();
    let wrap = 2 * n;
    Ok(DenseMatrix::from_fn(wrap, n, |k, j| b[(j + wrap - k) % wrap]))
}

/// The matrix `C` with `C * C = 2M - E`: entry `(i, j)` is
/// `sqrt(2) * phi_{i-j}` on and below the diagonal and
/// `-sqrt(2) * phi_{i-j+n}` above it, where `phi_t` is the folded
/// alternating coefficient sum.
pub fn build_c(n: usize) -> Result<DenseMatrix> {
    build_c_with_limit(n, DEFAULT_DENSE_LIMIT)
}

pub fn build_c_with_limit(n: usize, limit: usize) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::invalid("build_c: n must be positive"));
    }
    check_limit(n, limit)?;
    let phi = folded_f_sums(n);
    let root2 = std::f64::consts::SQRT_2;
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        if i >= j {
            root2 * phi[i - j]
        } else {
            -root2 * phi[i + n - j]
        }
    }))
}

/// Square-root baseline factor: lower-triangular Toeplitz with the scaled
/// binomial coefficients, `B[i][j] = f_{i-j}` for `i >= j`.  Squares to
/// the prefix-sum matrix; used for error-metric comparisons only.
pub fn sqrt_baseline(n: usize) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::invalid("sqrt_baseline: n must be positive"));
    }
    let f = f_seq(n - 1);
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        if i >= j {
            f[i - j]
        } else {
            0.0
        }
    }))
}

/// Closed-form maximum squared row norm of `L` (equivalently, maximum
/// squared column norm of `R`):
/// `1/2 + (1/2n) * sum_{l=1}^{n} 1 / sin(pi (2l-1) / (2n))`.
pub fn norm_formula(n: usize) -> f64 {
    assert!(n >= 1, "norm_formula: n must be positive");
    let mut acc = 0.0;
    for l in 1..=n {
        let angle = std::f64::consts::PI * (2 * l - 1) as f64 / (2 * n) as f64;
        acc += 1.0 / angle.sin();
    }
    0.5 + acc / (2 * n) as f64
}

/// Mean and maximum per-step standard error of the mechanism induced by a
/// factor pair, per unit noise standard deviation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorMetrics {
    /// `||left||_F * ||right||_{1->2} / sqrt(n)`.
    pub mean_se: f64,
    /// `||left||_{2->inf} * ||right||_{1->2}`.
    pub max_se: f64,
}

/// Error metrics of the pair `(left, right)`; `right` must have `n`
/// columns and the inner dimensions must agree.
pub fn error_metrics(left: &DenseMatrix, right: &DenseMatrix) -> Result<ErrorMetrics> {
    if left.cols() != right.rows() {
        return Err(Error::DimensionMismatch(format!(
            "error_metrics: {}x{} * {}x{}",
            left.rows(),
            left.cols(),
            right.rows(),
            right.cols()
        )));
    }
    let n = right.cols();
    if n == 0 {
        return Err(Error::invalid("error_metrics: right factor has no columns"));
    }
    let col = right.max_col_norm_sq().sqrt();
    Ok(ErrorMetrics {
        mean_se: left.frobenius_norm() * col / (n as f64).sqrt(),
        max_se: left.max_row_norm_sq().sqrt() * col,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::exact_norms;

    fn factors(n: usize) -> GroupAlgebraFactors {
        GroupAlgebraFactors::closed_form(n).unwrap()
    }

    #[test]
    fn n2_factor_layout_matches_shift_rule() {
        let fac = factors(2);
        let b = fac.b().to_vec();
        let l = materialize_l(&fac).unwrap();
        assert_eq!(l.row(0), &b[..]);
        assert_eq!(l.row(1), &[b[3], b[0], b[1], b[2]]);
        let r = materialize_r(&fac).unwrap();
        let first_col: Vec<f64> = (0..4).map(|k| r.get(k, 0)).collect();
        assert_eq!(first_col, vec![b[0], b[3], b[2], b[1]]);
    }

    #[test]
    fn factor_product_is_prefix_matrix() {
        for n in [1usize, 2, 3, 4, 7, 16, 33] {
            let fac = factors(n);
            let l = materialize_l(&fac).unwrap();
            let r = materialize_r(&fac).unwrap();
            let m = l.matmul(&r).unwrap();
            let target = DenseMatrix::prefix_target(n);
            let err = m.sub(&target).unwrap().frobenius_norm();
            assert!(err < 1e-10 * n as f64, "n = {n}: {err:e}");
        }
    }

    #[test]
    fn block_views_match_c() {
        for n in [2usize, 5, 16] {
            let fac = factors(n);
            let l = materialize_l(&fac).unwrap();
            let r = materialize_r(&fac).unwrap();
            let c = build_c(n).unwrap();
            let e = DenseMatrix::ones(n, n).scale(0.5 / (n as f64).sqrt());
            let half_c = c.scale(0.5);
            let l1 = e.add(&half_c).unwrap();
            let l2 = e.sub(&half_c).unwrap();
            assert!(l.block(0, n, 0, n).sub(&l1).unwrap().max_abs() < 1e-10);
            assert!(l.block(0, n, n, 2 * n).sub(&l2).unwrap().max_abs() < 1e-10);
            assert!(r.block(0, n, 0, n).sub(&l1).unwrap().max_abs() < 1e-10);
            assert!(r.block(n, 2 * n, 0, n).sub(&l2).unwrap().max_abs() < 1e-10);
        }
    }

    #[test]
    fn c_squares_to_2m_minus_e() {
        let n = 32;
        let c = build_c(n).unwrap();
        let target = DenseMatrix::prefix_target(n)
            .scale(2.0)
            .sub(&DenseMatrix::ones(n, n))
            .unwrap();
        let err = c.matmul(&c).unwrap().sub(&target).unwrap().frobenius_norm();
        assert!(err < 1e-10, "{err:e}");
    }

    #[test]
    fn sqrt_baseline_squares_to_prefix_matrix() {
        let b = sqrt_baseline(2).unwrap();
        assert_eq!(b.data(), &[1.0, 0.0, 0.5, 1.0]);
        let b = sqrt_baseline(32).unwrap();
        let err = b
            .matmul(&b)
            .unwrap()
            .sub(&DenseMatrix::prefix_target(32))
            .unwrap()
            .max_abs();
        assert!(err < 1e-10, "{err:e}");
    }

    #[test]
    fn norm_formula_anchors() {
        assert_eq!(norm_formula(1), 1.0);
        let expected = 0.5 + std::f64::consts::SQRT_2 / 2.0;
        assert!((norm_formula(2) - expected).abs() < 1e-15);
        assert!(norm_formula(1024) < 1.0 + (1024f64).ln() / std::f64::consts::PI);
    }

    #[test]
    fn norm_formula_matches_exact_row_norm() {
        for n in [1usize, 2, 3, 4, 5, 8, 16, 64, 256] {
            let fac = factors(n);
            let l = materialize_l(&fac).unwrap();
            let r = materialize_r(&fac).unwrap();
            let formula = norm_formula(n);
            let ln = exact_norms(&l);
            let rn = exact_norms(&r);
            assert!((ln.max_row_sq - formula).abs() < 1e-9, "n = {n}");
            assert!((rn.max_col_sq - formula).abs() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn error_metrics_anchors() {
        let fac = factors(1);
        let l = materialize_l(&fac).unwrap();
        let r = materialize_r(&fac).unwrap();
        let em = error_metrics(&l, &r).unwrap();
        assert!((em.mean_se - 1.0).abs() < 1e-12);
        assert!((em.max_se - 1.0).abs() < 1e-12);

        let fac = factors(2);
        let l = materialize_l(&fac).unwrap();
        let r = materialize_r(&fac).unwrap();
        // 1.20712 is the five-digit anchor; the exact value is 1/2 + sqrt(2)/2.
        let em = error_metrics(&l, &r).unwrap();
        assert!((em.max_se - (0.5 + std::f64::consts::SQRT_2 / 2.0)).abs() < 1e-9);
        assert!((em.max_se - 1.20712).abs() < 2e-5);

        // Trivial factorization (L = M, R = I): MaxSE = sqrt(n).
        let n = 9;
        let em = error_metrics(&DenseMatrix::prefix_target(n), &DenseMatrix::identity(n)).unwrap();
        assert!((em.max_se - 3.0).abs() < 1e-12);

        let bad = error_metrics(&DenseMatrix::zeros(2, 3), &DenseMatrix::zeros(2, 2));
        assert!(bad.is_err());
    }

    #[test]
    fn dense_limit_enforced() {
        let fac = factors(8);
        assert!(materialize_l_with_limit(&fac, 4).is_err());
        assert!(materialize_r_with_limit(&fac, 4).is_err());
        assert!(build_c_with_limit(8, 4).is_err());
    }
}
