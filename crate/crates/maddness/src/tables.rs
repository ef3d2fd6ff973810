//! Lookup-table construction against the prototype matrix and its 8-bit
//! quantization with per-codebook offsets and one pooled power-of-two scale.

use crate::error::{MaddnessError, Result};
use crate::matrix::DenseMatrix;
use crate::prototypes::PrototypeMatrix;

/// Raw inner-product tables: entry `(m, c, k)` is the dot product of
/// operator column `m` with prototype `(c, k)` over the full dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTables {
    pub m: usize,
    pub c: usize,
    pub k: usize,
    data: Vec<f64>,
}

impl RealTables {
    /// Build tables from raw values (m x c x k, k fastest).
    pub fn new(m: usize, c: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != m * c * k {
            return Err(MaddnessError::ShapeMismatch(format!(
                "expected {} entries for {m}x{c}x{k} tables, got {}",
                m * c * k,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(MaddnessError::InvalidArgument(
                "non-finite table entry".into(),
            ));
        }
        Ok(Self { m, c, k, data })
    }

    #[inline]
    pub fn get(&self, m: usize, c: usize, k: usize) -> f64 {
        self.data[(m * self.c + c) * self.k + k]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// 8-bit tables plus the constants to undo the quantization: per-codebook
/// offsets and an inverse scale that is an exact power of two.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedTables {
    pub m: usize,
    pub c: usize,
    pub k: usize,
    data: Vec<u8>,
    /// Exponent l with alpha^-1 = 2^l.
    pub log2_inv_scale: i32,
    /// Offset per codebook (the minimum raw entry of that codebook).
    offsets: Vec<f64>,
}

impl QuantizedTables {
    #[inline]
    pub fn get(&self, m: usize, c: usize, k: usize) -> u8 {
        self.data[(m * self.c + c) * self.k + k]
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// The scale alpha = 2^-l applied when reconstructing outputs.
    pub fn alpha(&self) -> f64 {
        (-self.log2_inv_scale as f64).exp2()
    }

    /// Sum of the per-codebook offsets, the additive constant of the
    /// reconstruction.
    pub fn offset_sum(&self) -> f64 {
        self.offsets.iter().sum()
    }

    pub(crate) fn from_parts(
        m: usize,
        c: usize,
        k: usize,
        data: Vec<u8>,
        log2_inv_scale: i32,
        offsets: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(data.len(), m * c * k);
        debug_assert_eq!(offsets.len(), c);
        Self {
            m,
            c,
            k,
            data,
            log2_inv_scale,
            offsets,
        }
    }
}

/// Build the raw tables: one K-entry table per (operator column, codebook).
/// Prototypes may be dense, so each entry is a full-width dot product.
pub fn build_tables(b: &DenseMatrix, p: &PrototypeMatrix) -> Result<RealTables> {
    if b.rows() != p.dims() {
        return Err(MaddnessError::ShapeMismatch(format!(
            "operator has {} rows but prototypes span {} dims",
            b.rows(),
            p.dims()
        )));
    }
    let m = b.cols();
    let (c, k) = (p.c, p.k);
    let mut data = vec![0.0f64; m * c * k];
    for col in 0..m {
        for codebook in 0..c {
            for code in 0..k {
                let proto = p.row(codebook, code);
                let mut acc = 0.0f64;
                for (j, &pv) in proto.iter().enumerate() {
                    acc += b.get(j, col) as f64 * pv as f64;
                }
                data[(col * c + codebook) * k + code] = acc;
            }
        }
    }
    Ok(RealTables { m, c, k, data })
}

/// Ceiling exponent used when every codebook's table is constant.
const MAX_SCALE_EXP: i32 = 30;

/// Quantize tables to bytes: offset each codebook by its minimum entry,
/// pool one power-of-two inverse scale across codebooks, round ties-to-even,
/// clamp to [0, 255]. The pooled scale is the largest power of two keeping
/// every codebook's maximum at or below 255, so nothing clamps; constant
/// codebooks contribute no scale constraint.
pub fn quantize_tables(t: &RealTables) -> QuantizedTables {
    let (m, c, k) = (t.m, t.c, t.k);
    let mut offsets = vec![0.0f64; c];
    let mut exp: Option<i32> = None;
    for codebook in 0..c {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for col in 0..m {
            for code in 0..k {
                let v = t.get(col, codebook, code);
                min = min.min(v);
                max = max.max(v);
            }
        }
        offsets[codebook] = min;
        let range = max - min;
        if range > 0.0 {
            let l = ((255.0 / range).log2().floor() as i32).min(MAX_SCALE_EXP);
            exp = Some(match exp {
                Some(e) => e.min(l),
                None => l,
            });
        }
    }
    let log2_inv_scale = exp.unwrap_or(MAX_SCALE_EXP);
    let inv_scale = (log2_inv_scale as f64).exp2();
    let mut data = vec![0u8; m * c * k];
    for col in 0..m {
        for codebook in 0..c {
            for code in 0..k {
                let v = inv_scale * (t.get(col, codebook, code) - offsets[codebook]);
                data[(col * c + codebook) * k + code] =
                    v.round_ties_even().clamp(0.0, 255.0) as u8;
            }
        }
    }
    QuantizedTables::from_parts(m, c, k, data, log2_inv_scale, offsets)
}
