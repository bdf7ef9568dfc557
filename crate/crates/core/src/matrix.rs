//! Minimal dense row-major matrix used by the factorization, binning and
//! verification code.  Deliberately small: shape-checked arithmetic, the
//! three norms the analysis needs, blocks/stacking, and a CSV dump.  All
//! spectral quantities live in [`crate::linalg`].

use std::io::Write;

use crate::error::{Error, Result};

/// Dense row-major `rows x cols` matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(DenseMatrix { rows: r, cols: c, data: rows.concat() })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// All-ones matrix.
    pub fn ones(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![1.0; rows * cols] }
    }

    /// Lower-triangular all-ones matrix (the prefix-sum operator).
    pub fn prefix_target(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if j <= i { 1.0 } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul: {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        // i-k-j loop order: streams over rows of `other`, decent cache use.
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a + b, "add")
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a - b, "sub")
    }

    fn zip_with(
        &self,
        other: &DenseMatrix,
        f: impl Fn(f64, f64) -> f64,
        what: &str,
    ) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect();
        Ok(DenseMatrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    /// Copy of the block with rows `r0..r1` and columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> DenseMatrix {
        assert!(r0 <= r1 && r1 <= self.rows && c0 <= c1 && c1 <= self.cols);
        Self::from_fn(r1 - r0, c1 - c0, |i, j| self.get(r0 + i, c0 + j))
    }

    /// Stack `top` above `bottom`.
    pub fn vstack(top: &DenseMatrix, bottom: &DenseMatrix) -> Result<DenseMatrix> {
        if top.cols != bottom.cols {
            return Err(Error::DimensionMismatch(format!(
                "vstack: {} vs {} columns",
                top.cols, bottom.cols
            )));
        }
        let mut data = Vec::with_capacity((top.rows + bottom.rows) * top.cols);
        data.extend_from_slice(&top.data);
        data.extend_from_slice(&bottom.data);
        Ok(DenseMatrix { rows: top.rows + bottom.rows, cols: top.cols, data })
    }

    /// Put `left` beside `right`.
    pub fn hstack(left: &DenseMatrix, right: &DenseMatrix) -> Result<DenseMatrix> {
        if left.rows != right.rows {
            return Err(Error::DimensionMismatch(format!(
                "hstack: {} vs {} rows",
                left.rows, right.rows
            )));
        }
        let mut out = DenseMatrix::zeros(left.rows, left.cols + right.cols);
        for i in 0..left.rows {
            out.data[i * out.cols..i * out.cols + left.cols].copy_from_slice(left.row(i));
            out.data[i * out.cols + left.cols..(i + 1) * out.cols].copy_from_slice(right.row(i));
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    /// Largest squared Euclidean row norm (`2->inf` operator norm squared).
    pub fn max_row_norm_sq(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x * x).sum::<f64>())
            .fold(0.0f64, f64::max)
    }

    /// Largest squared Euclidean column norm (`1->2` operator norm squared).
    pub fn max_col_norm_sq(&self) -> f64 {
        let mut sums = vec![0.0f64; self.cols];
        for i in 0..self.rows {
            for (s, x) in sums.iter_mut().zip(self.row(i)) {
                *s += x * x;
            }
        }
        sums.into_iter().fold(0.0f64, f64::max)
    }

    /// CSV dump, one matrix row per line, 17 significant digits (enough to
    /// round-trip any f64 exactly).
    pub fn dump_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for i in 0..self.rows {
            let mut first = true;
            for x in self.row(i) {
                if !first {
                    write!(w, ",")?;
                }
                write!(w, "{x:.16e}")?;
                first = false;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Exact norms of a materialized factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormReport {
    /// Squared `2->inf` norm: largest squared row norm.
    pub max_row_sq: f64,
    /// Squared `1->2` norm: largest squared column norm.
    pub max_col_sq: f64,
    /// Squared Frobenius norm.
    pub frob_sq: f64,
}

/// Row, column and Frobenius norms in one pass over the matrix.
pub fn exact_norms(m: &DenseMatrix) -> NormReport {
    NormReport {
        max_row_sq: m.max_row_norm_sq(),
        max_col_sq: m.max_col_norm_sq(),
        frob_sq: m.frobenius_norm_sq(),
    }
}
