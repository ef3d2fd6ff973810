//! The trained hash-based estimator and its lifecycle: `train` learns trees
//! and prototypes from the training matrix, `set_operator` precomputes the
//! quantized lookup tables for a fixed operator, `apply` approximates the
//! product with comparisons and table lookups only.

use crate::aggregation::{
    aggregate, aggregate_real, dequantize, AggregationConfig, AggregationMode,
};
use crate::error::{MaddnessError, Result};
use crate::hash_tree::{
    learn_hash_tree, maddness_hash, quantize_tree, Bucket, HashTreeParams, NUM_LEAVES,
};
use crate::matrix::DenseMatrix;
use crate::prototypes::{bucket_means, optimize_prototypes, AssignmentCodes, PrototypeMatrix};
use crate::subspace::partition_columns;
use crate::tables::{build_tables, quantize_tables, QuantizedTables, RealTables};

/// Prototypes per codebook, fixed by the 4-level trees.
pub const NUM_PROTOTYPES: usize = NUM_LEAVES;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaddnessConfig {
    /// Number of codebooks C; columns are split into C contiguous blocks.
    pub codebooks: usize,
    /// Ridge penalty for prototype optimization. Zero skips the
    /// optimization and keeps raw bucket means (the ablation variant).
    pub lambda: f32,
    /// Averaging block size for the aggregation stage.
    pub u: usize,
    pub mode: AggregationMode,
    /// Keep float tables beside the quantized ones and aggregate in f64 at
    /// apply time, isolating hash/prototype error from quantization error.
    pub debug_float_tables: bool,
}

impl Default for MaddnessConfig {
    fn default() -> Self {
        Self {
            codebooks: 16,
            lambda: 1.0,
            u: 16,
            mode: AggregationMode::Averaging,
            debug_float_tables: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MaddnessModel {
    config: MaddnessConfig,
    d: usize,
    trees: Vec<HashTreeParams>,
    prototypes: PrototypeMatrix,
    tables: Option<QuantizedTables>,
    real_tables: Option<RealTables>,
}

/// Learn one hash tree per codebook, set prototypes to bucket means, and —
/// unless `lambda` is zero — replace them with the ridge-optimal prototypes
/// reconstructing the training matrix from its codes. Trees are quantized
/// at the end of training. Fully deterministic.
pub fn train(a_train: &DenseMatrix, config: &MaddnessConfig) -> Result<MaddnessModel> {
    let (n, d) = (a_train.rows(), a_train.cols());
    if n == 0 {
        return Err(MaddnessError::InvalidArgument(
            "training matrix must have at least one row".into(),
        ));
    }
    if config.codebooks == 0 || config.codebooks > d {
        return Err(MaddnessError::InvalidArgument(format!(
            "codebook count {} must be in 1..={d}",
            config.codebooks
        )));
    }
    if !(config.lambda.is_finite() && config.lambda >= 0.0) {
        return Err(MaddnessError::InvalidArgument(format!(
            "lambda must be finite and non-negative, got {}",
            config.lambda
        )));
    }
    if config.u == 0 || !config.u.is_power_of_two() {
        return Err(MaddnessError::InvalidArgument(format!(
            "block size u must be a power of two, got {}",
            config.u
        )));
    }
    let c = config.codebooks;
    let subspaces = partition_columns(d, c);
    let mut trees = Vec::with_capacity(c);
    let mut leaves_per_codebook: Vec<Vec<Bucket>> = Vec::with_capacity(c);
    for range in &subspaces {
        let sub = a_train.column_block(range.clone());
        let (tree, leaves) = learn_hash_tree(&sub)?;
        trees.push(quantize_tree(&tree));
        leaves_per_codebook.push(leaves);
    }

    let means = bucket_means(&leaves_per_codebook, NUM_PROTOTYPES, &subspaces, d);
    let prototypes = if config.lambda > 0.0 {
        // Training codes come straight from the leaf memberships; hashing
        // the rows again would reproduce them.
        let mut code_vals = vec![0u8; n * c];
        for (codebook, leaves) in leaves_per_codebook.iter().enumerate() {
            for (code, bucket) in leaves.iter().enumerate() {
                for &row in bucket.members() {
                    code_vals[row * c + codebook] = code as u8;
                }
            }
        }
        let codes = AssignmentCodes::new(n, c, NUM_PROTOTYPES, code_vals)?;
        optimize_prototypes(&codes, a_train, config.lambda as f64, &subspaces)?
    } else {
        means
    };

    Ok(MaddnessModel {
        config: *config,
        d,
        trees,
        prototypes,
        tables: None,
        real_tables: None,
    })
}

impl MaddnessModel {
    pub fn config(&self) -> &MaddnessConfig {
        &self.config
    }

    pub fn dims(&self) -> usize {
        self.d
    }

    pub fn trees(&self) -> &[HashTreeParams] {
        &self.trees
    }

    pub fn prototypes(&self) -> &PrototypeMatrix {
        &self.prototypes
    }

    pub fn quantized_tables(&self) -> Option<&QuantizedTables> {
        self.tables.as_ref()
    }

    pub(crate) fn from_parts(
        config: MaddnessConfig,
        d: usize,
        trees: Vec<HashTreeParams>,
        prototypes: PrototypeMatrix,
        tables: Option<QuantizedTables>,
    ) -> Self {
        Self {
            config,
            d,
            trees,
            prototypes,
            tables,
            real_tables: None,
        }
    }

    /// Build and quantize the lookup tables for a fixed operator.
    /// Idempotent for a fixed `b`; replaces tables from a previous operator.
    pub fn set_operator(&mut self, b: &DenseMatrix) -> Result<()> {
        if b.rows() != self.d {
            return Err(MaddnessError::ShapeMismatch(format!(
                "operator has {} rows, model expects {}",
                b.rows(),
                self.d
            )));
        }
        let real = build_tables(b, &self.prototypes)?;
        self.tables = Some(quantize_tables(&real));
        self.real_tables = self.config.debug_float_tables.then_some(real);
        Ok(())
    }

    /// Hash every row through every codebook's tree: 4 comparisons per
    /// (row, codebook), emitting codes in `[0, 16)`.
    pub fn encode(&self, a: &DenseMatrix) -> Result<AssignmentCodes> {
        if a.cols() != self.d {
            return Err(MaddnessError::ShapeMismatch(format!(
                "input has {} cols, model expects {}",
                a.cols(),
                self.d
            )));
        }
        let n = a.rows();
        let c = self.config.codebooks;
        let mut codes = vec![0u8; n * c];
        let subspaces = self.prototypes.subspaces();
        for r in 0..n {
            let row = a.row(r);
            for (codebook, tree) in self.trees.iter().enumerate() {
                let sub = &row[subspaces[codebook].clone()];
                codes[r * c + codebook] = (maddness_hash(sub, tree) - 1) as u8;
            }
        }
        AssignmentCodes::new(n, c, NUM_PROTOTYPES, codes)
    }

    /// Approximate `a @ b` for the operator given to [`set_operator`]:
    /// encode, aggregate table bytes, then undo the table quantization.
    /// No multiplies happen between the start of encoding and the final
    /// scale/offset step.
    pub fn apply(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        let codes = self.encode(a)?;
        if self.config.debug_float_tables {
            let tables = self.real_tables.as_ref().ok_or(MaddnessError::OperatorNotSet)?;
            return aggregate_real(&codes, tables);
        }
        let tables = self.tables.as_ref().ok_or(MaddnessError::OperatorNotSet)?;
        let cfg = AggregationConfig {
            u: self.config.u,
            mode: self.config.mode,
        };
        let (estimates, debias) = aggregate(&codes, tables, &cfg)?;
        Ok(dequantize(&estimates, a.rows(), tables.m, tables, debias))
    }
}
