//! Row-major dense matrix of `f32` entries.
//!
//! Storage is 32-bit; every reduction (norms, sums of squares, dot products)
//! accumulates in 64-bit. Matrices are immutable once handed out and safe to
//! share across threads for reads.

use crate::error::{MaddnessError, Result};
use crate::ops;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl DenseMatrix {
    /// Build a matrix from row-major data, rejecting length mismatches and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(MaddnessError::ShapeMismatch(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(MaddnessError::InvalidArgument(format!(
                "non-finite entry {} at flat index {}",
                data[pos], pos
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Internal constructor for data already known to be finite.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f32 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub(crate) fn set(&mut self, r: usize, c: usize, v: f32) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f32] {
        debug_assert!(r < self.rows);
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, r: usize) -> &mut [f32] {
        debug_assert!(r < self.rows);
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copy of the column range `cols` of every row.
    pub fn column_block(&self, cols: std::ops::Range<usize>) -> DenseMatrix {
        debug_assert!(cols.end <= self.cols);
        let width = cols.len();
        let mut data = Vec::with_capacity(self.rows * width);
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[cols.clone()]);
        }
        DenseMatrix::from_raw(self.rows, width, data)
    }

    pub fn transposed(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// Exact product, accumulated in f64 and rounded to f32 per entry.
    /// Records `rows * inner * cols` multiplies.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(MaddnessError::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        let mut scratch = vec![0.0f64; other.cols];
        for r in 0..self.rows {
            scratch.iter_mut().for_each(|v| *v = 0.0);
            let lhs = self.row(r);
            for (j, &a) in lhs.iter().enumerate() {
                let rhs = other.row(j);
                let a = a as f64;
                for (m, &b) in rhs.iter().enumerate() {
                    scratch[m] += a * b as f64;
                }
            }
            let dst = out.row_mut(r);
            for (m, &v) in scratch.iter().enumerate() {
                dst[m] = v as f32;
            }
        }
        ops::add_multiplies((self.rows * self.cols * other.cols) as u64);
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|&v| {
                let v = v as f64;
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Normalized mean-squared error: squared Frobenius distance between the two
/// matrices divided by the squared Frobenius norm of `exact`.
pub fn nmse(approx: &DenseMatrix, exact: &DenseMatrix) -> Result<f64> {
    if approx.rows() != exact.rows() || approx.cols() != exact.cols() {
        return Err(MaddnessError::ShapeMismatch(format!(
            "nmse of {}x{} against {}x{}",
            approx.rows(),
            approx.cols(),
            exact.rows(),
            exact.cols()
        )));
    }
    let mut err = 0.0f64;
    let mut denom = 0.0f64;
    for (&a, &e) in approx.data().iter().zip(exact.data()) {
        let diff = a as f64 - e as f64;
        err += diff * diff;
        denom += (e as f64) * (e as f64);
    }
    if denom == 0.0 {
        return Err(MaddnessError::ZeroNorm);
    }
    Ok(err / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_bad_length_and_nonfinite() {
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![1.0, f32::NAN]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![1.0, f32::INFINITY]).is_err());
        assert!(DenseMatrix::new(2, 2, vec![1.0; 4]).is_ok());
    }

    #[test]
    fn matmul_small_known_product() {
        let a = DenseMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = DenseMatrix::new(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn matmul_counts_multiplies() {
        let a = DenseMatrix::zeros(4, 5);
        let b = DenseMatrix::zeros(5, 3);
        crate::ops::reset();
        a.matmul(&b).unwrap();
        assert_eq!(crate::ops::snapshot().multiplies, 4 * 5 * 3);
    }

    #[test]
    fn nmse_identical_is_zero() {
        let x = DenseMatrix::new(2, 2, vec![1.5, -2.0, 0.25, 3.0]).unwrap();
        assert_eq!(nmse(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn nmse_zero_prediction_is_one() {
        let x = DenseMatrix::new(2, 2, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let z = DenseMatrix::zeros(2, 2);
        assert!((nmse(&z, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nmse_hand_computed() {
        let a = DenseMatrix::new(1, 1, vec![2.0]).unwrap();
        let e = DenseMatrix::new(1, 1, vec![1.0]).unwrap();
        assert_eq!(nmse(&a, &e).unwrap(), 1.0);
    }

    #[test]
    fn nmse_errors() {
        let x = DenseMatrix::zeros(2, 2);
        let y = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            nmse(&x, &y),
            Err(MaddnessError::ShapeMismatch(_))
        ));
        let z = DenseMatrix::zeros(2, 2);
        assert!(matches!(nmse(&x, &z), Err(MaddnessError::ZeroNorm)));
    }

    #[test]
    fn column_block_extracts_contiguous_columns() {
        let a = DenseMatrix::new(2, 4, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
        let b = a.column_block(1..3);
        assert_eq!(b.rows(), 2);
        assert_eq!(b.cols(), 2);
        assert_eq!(b.data(), &[1.0, 2.0, 5.0, 6.0]);
    }
}
