//! Output aggregation: gather one table byte per codebook and sum.
//!
//! Two modes. Exact-upcast widens every byte before adding, the reference
//! semantics. Averaging reduces blocks of `U` bytes with a balanced tree of
//! rounding-up pairwise averages, scales the block average back by `U`, and
//! sums blocks exactly; the averaging rounds upward, so a closed-form
//! correction of `-(U-aligned count) * log2(U) / 4` is reported alongside
//! the estimates (unbiased when the table bytes' low bits are fair coins).

use crate::error::{MaddnessError, Result};
use crate::matrix::DenseMatrix;
use crate::ops;
use crate::prototypes::AssignmentCodes;
use crate::tables::{QuantizedTables, RealTables};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationMode {
    /// Upcast each byte to a wide accumulator and add exactly.
    ExactUpcast,
    /// Pairwise-average blocks of `u` bytes, then sum block estimates.
    Averaging,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AggregationConfig {
    /// Averaging block size; must be a power of two. A trailing block
    /// shorter than `u` is summed exactly and needs no correction.
    pub u: usize,
    pub mode: AggregationMode,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        Self {
            u: 16,
            mode: AggregationMode::Averaging,
        }
    }
}

impl AggregationConfig {
    fn validate(&self) -> Result<()> {
        if self.u == 0 || !self.u.is_power_of_two() {
            return Err(MaddnessError::InvalidArgument(format!(
                "block size u must be a power of two, got {}",
                self.u
            )));
        }
        Ok(())
    }
}

/// The rounding-up byte average `floor((a + b + 1) / 2)`; never overflows.
#[inline]
pub fn mean_pair_u8(a: u8, b: u8) -> u8 {
    ((a as u16 + b as u16 + 1) >> 1) as u8
}

fn pairwise_average(values: &[u8]) -> u8 {
    if values.len() == 1 {
        values[0]
    } else {
        let (left, right) = values.split_at(values.len() / 2);
        mean_pair_u8(pairwise_average(left), pairwise_average(right))
    }
}

/// Estimate the sum of a power-of-two-sized block as `len` times its
/// balanced pairwise average. Always at least the true sum, because every
/// pairwise average rounds up.
pub fn estimate_block_sum(values: &[u8]) -> u64 {
    assert!(
        !values.is_empty() && values.len().is_power_of_two(),
        "block length must be a power of two, got {}",
        values.len()
    );
    values.len() as u64 * pairwise_average(values) as u64
}

/// Signed correction to add to an averaging-mode estimate over `c` values in
/// blocks of `u`. The estimator rounds up, so the correction is negative:
/// `-(c rounded down to a multiple of u) * log2(u) / 4`. Values in a partial
/// trailing block are summed exactly and contribute nothing.
pub fn bias_correction(c: usize, u: usize) -> f64 {
    debug_assert!(u >= 1 && u.is_power_of_two());
    if u == 1 {
        return 0.0;
    }
    let averaged = (c - c % u) as f64;
    -averaged * (u as f64).log2() / 4.0
}

/// Sum the selected table entries for every (row, output column) pair.
/// Returns the integer estimates (row-major n x m) and the debias constant
/// for the chosen mode. Performs exactly `n * c * m` table lookups.
pub fn aggregate(
    codes: &AssignmentCodes,
    tables: &QuantizedTables,
    cfg: &AggregationConfig,
) -> Result<(Vec<i64>, f64)> {
    cfg.validate()?;
    check_codes_tables(codes.c, codes.k, tables.c, tables.k)?;
    let (n, c, m) = (codes.n, codes.c, tables.m);
    let mut out = vec![0i64; n * m];
    let mut block = vec![0u8; cfg.u];
    for row in 0..n {
        let row_codes = codes.row(row);
        for col in 0..m {
            let est: u64 = match cfg.mode {
                AggregationMode::ExactUpcast => row_codes
                    .iter()
                    .enumerate()
                    .map(|(cb, &code)| tables.get(col, cb, code as usize) as u64)
                    .sum(),
                AggregationMode::Averaging => {
                    let mut acc = 0u64;
                    let full = c - c % cfg.u;
                    let mut cb = 0;
                    while cb < full {
                        for (slot, offset) in block.iter_mut().zip(0..cfg.u) {
                            *slot = tables.get(col, cb + offset, row_codes[cb + offset] as usize);
                        }
                        acc += estimate_block_sum(&block);
                        cb += cfg.u;
                    }
                    for tail in cb..c {
                        acc += tables.get(col, tail, row_codes[tail] as usize) as u64;
                    }
                    acc
                }
            };
            out[row * m + col] = est as i64;
        }
        ops::add_lookups((c * m) as u64);
    }
    let debias = match cfg.mode {
        AggregationMode::ExactUpcast => 0.0,
        AggregationMode::Averaging => bias_correction(c, cfg.u),
    };
    Ok((out, debias))
}

/// Float-table aggregation: the same gather pattern against the raw tables,
/// summed in f64. Debug path that isolates hash and prototype error from
/// quantization and averaging error.
pub fn aggregate_real(codes: &AssignmentCodes, tables: &RealTables) -> Result<DenseMatrix> {
    check_codes_tables(codes.c, codes.k, tables.c, tables.k)?;
    let (n, c, m) = (codes.n, codes.c, tables.m);
    let mut out = DenseMatrix::zeros(n, m);
    for row in 0..n {
        let row_codes = codes.row(row);
        let dst = out.row_mut(row);
        for (col, slot) in dst.iter_mut().enumerate() {
            let acc: f64 = row_codes
                .iter()
                .enumerate()
                .map(|(cb, &code)| tables.get(col, cb, code as usize))
                .sum();
            *slot = acc as f32;
        }
        ops::add_lookups((c * m) as u64);
    }
    Ok(out)
}

/// Map integer estimates back to the output scale:
/// `alpha * (estimate + debias) + sum_c offset_c` per entry.
pub fn dequantize(
    estimates: &[i64],
    n: usize,
    m: usize,
    tables: &QuantizedTables,
    debias: f64,
) -> DenseMatrix {
    debug_assert_eq!(estimates.len(), n * m);
    let alpha = tables.alpha();
    let beta = tables.offset_sum();
    let data: Vec<f32> = estimates
        .iter()
        .map(|&e| (alpha * (e as f64 + debias) + beta) as f32)
        .collect();
    DenseMatrix::from_raw(n, m, data)
}

fn check_codes_tables(codes_c: usize, codes_k: usize, tables_c: usize, tables_k: usize) -> Result<()> {
    if codes_c != tables_c || codes_k > tables_k {
        return Err(MaddnessError::ShapeMismatch(format!(
            "codes ({codes_c} codebooks, k {codes_k}) vs tables ({tables_c} codebooks, k {tables_k})"
        )));
    }
    Ok(())
}
