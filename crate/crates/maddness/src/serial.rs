//! Model serialization: a self-describing little-endian container.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! 4 bytes   magic "MADN"
//! u32       format version (currently 1)
//! u32       c   (codebooks)
//! u32       k   (prototypes per codebook, 16)
//! f32       lambda
//! u32       u   (averaging block size)
//! u8        aggregation mode: 0 exact-upcast, 1 averaging
//! u32       d   (input columns)
//! c times   u32 start, u32 end          subspace column range
//! c times   per codebook:
//!             4  x u32                  split dims (subspace-local)
//!             15 x f32                  thresholds, level order 1+2+4+8
//!             15 x u8                   quantized thresholds
//!             4  x (f32 scale, f32 offset)
//! k*c*d     f32                         prototype matrix, row-major
//! u8        has_tables (0 or 1)
//! if 1:
//!   u32     m (operator columns)
//!   i32     l (inverse-scale exponent; alpha = 2^-l)
//!   c x f64 per-codebook table offsets
//!   m*c*k   u8                          quantized table bytes
//! ```
//!
//! Round-trips are exact: floats are stored bit-for-bit. The debug float
//! tables are derived state and are not serialized.

use crate::aggregation::AggregationMode;
use crate::error::{MaddnessError, Result};
use crate::hash_tree::{HashTreeParams, QuantizedSplits, TREE_LEVELS};
use crate::matrix::DenseMatrix;
use crate::model::{MaddnessConfig, MaddnessModel, NUM_PROTOTYPES};
use crate::prototypes::PrototypeMatrix;
use crate::tables::QuantizedTables;

const MAGIC: &[u8; 4] = b"MADN";
const VERSION: u32 = 1;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Self { buf: Vec::new() }
    }
    fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn i32(&mut self, v: i32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, offset: 0 }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.offset + n > self.bytes.len() {
            return Err(MaddnessError::Truncated {
                offset: self.offset,
                needed: self.offset + n - self.bytes.len(),
            });
        }
        let slice = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(slice)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn serialize(model: &MaddnessModel) -> Vec<u8> {
    let mut w = Writer::new();
    let cfg = model.config();
    let c = cfg.codebooks;
    w.bytes(MAGIC);
    w.u32(VERSION);
    w.u32(c as u32);
    w.u32(NUM_PROTOTYPES as u32);
    w.f32(cfg.lambda);
    w.u32(cfg.u as u32);
    w.u8(match cfg.mode {
        AggregationMode::ExactUpcast => 0,
        AggregationMode::Averaging => 1,
    });
    w.u32(model.dims() as u32);
    for range in model.prototypes().subspaces() {
        w.u32(range.start as u32);
        w.u32(range.end as u32);
    }
    for tree in model.trees() {
        let quant = tree
            .quantized
            .as_ref()
            .expect("trained models always carry quantized trees");
        for &dim in &tree.split_dims {
            w.u32(dim as u32);
        }
        for level in &tree.thresholds {
            for &v in level {
                w.f32(v);
            }
        }
        for level in &quant.thresholds {
            for &v in level {
                w.u8(v);
            }
        }
        for t in 0..TREE_LEVELS {
            w.f32(quant.scales[t]);
            w.f32(quant.offsets[t]);
        }
    }
    for &v in model.prototypes().matrix().data() {
        w.f32(v);
    }
    match model.quantized_tables() {
        Some(tables) => {
            w.u8(1);
            w.u32(tables.m as u32);
            w.i32(tables.log2_inv_scale);
            for &offset in tables.offsets() {
                w.f64(offset);
            }
            w.bytes(tables.data());
        }
        None => w.u8(0),
    }
    w.buf
}

pub fn deserialize(bytes: &[u8]) -> Result<MaddnessModel> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err(MaddnessError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(MaddnessError::UnsupportedVersion(version));
    }
    let c = r.u32()? as usize;
    let k = r.u32()? as usize;
    if c == 0 || k != NUM_PROTOTYPES {
        return Err(MaddnessError::InvalidArgument(format!(
            "model header has c = {c}, k = {k}"
        )));
    }
    let lambda = r.f32()?;
    let u = r.u32()? as usize;
    let mode = match r.u8()? {
        0 => AggregationMode::ExactUpcast,
        1 => AggregationMode::Averaging,
        other => {
            return Err(MaddnessError::InvalidArgument(format!(
                "unknown aggregation mode byte {other}"
            )))
        }
    };
    let d = r.u32()? as usize;
    let mut subspaces = Vec::with_capacity(c);
    for _ in 0..c {
        let start = r.u32()? as usize;
        let end = r.u32()? as usize;
        if start >= end || end > d {
            return Err(MaddnessError::InvalidArgument(format!(
                "bad subspace range {start}..{end} for d = {d}"
            )));
        }
        subspaces.push(start..end);
    }
    let mut trees = Vec::with_capacity(c);
    for _ in 0..c {
        let mut split_dims = [0usize; TREE_LEVELS];
        for slot in &mut split_dims {
            *slot = r.u32()? as usize;
        }
        let mut thresholds: [Vec<f32>; TREE_LEVELS] = Default::default();
        for (t, level) in thresholds.iter_mut().enumerate() {
            *level = (0..1 << t).map(|_| r.f32()).collect::<Result<_>>()?;
        }
        let mut qthresholds: [Vec<u8>; TREE_LEVELS] = Default::default();
        for (t, level) in qthresholds.iter_mut().enumerate() {
            *level = (0..1 << t).map(|_| r.u8()).collect::<Result<_>>()?;
        }
        let mut scales = [0.0f32; TREE_LEVELS];
        let mut offsets = [0.0f32; TREE_LEVELS];
        for t in 0..TREE_LEVELS {
            scales[t] = r.f32()?;
            offsets[t] = r.f32()?;
        }
        trees.push(HashTreeParams {
            split_dims,
            thresholds,
            quantized: Some(QuantizedSplits {
                thresholds: qthresholds,
                offsets,
                scales,
            }),
        });
    }
    let mut proto_data = Vec::with_capacity(k * c * d);
    for _ in 0..k * c * d {
        proto_data.push(r.f32()?);
    }
    let prototypes = PrototypeMatrix::new(
        k,
        c,
        DenseMatrix::new(k * c, d, proto_data)?,
        subspaces,
    );
    let tables = match r.u8()? {
        0 => None,
        1 => {
            let m = r.u32()? as usize;
            let exponent = r.i32()?;
            let mut offsets = Vec::with_capacity(c);
            for _ in 0..c {
                offsets.push(r.f64()?);
            }
            let data = r.take(m * c * k)?.to_vec();
            Some(QuantizedTables::from_parts(m, c, k, data, exponent, offsets))
        }
        other => {
            return Err(MaddnessError::InvalidArgument(format!(
                "bad has_tables byte {other}"
            )))
        }
    };
    if r.offset != bytes.len() {
        return Err(MaddnessError::InvalidArgument(format!(
            "{} trailing bytes after model at offset {}",
            bytes.len() - r.offset,
            r.offset
        )));
    }
    let config = MaddnessConfig {
        codebooks: c,
        lambda,
        u,
        mode,
        debug_float_tables: false,
    };
    Ok(MaddnessModel::from_parts(config, d, trees, prototypes, tables))
}
