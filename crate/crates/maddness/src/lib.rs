//! Approximate matrix multiplication via learned hashing and table lookups.
//!
//! The estimator replaces the inner products of `A @ B` with a three-stage
//! pipeline: each row of `A` is encoded into small integer codes by shallow
//! regression trees (four comparisons per codebook, no multiplies), the
//! operator `B` is turned into 8-bit lookup tables against a learned
//! prototype matrix, and the output is reconstructed by summing table bytes
//! — either exactly with widened accumulators or approximately with a
//! pairwise-averaging reduction plus a closed-form bias correction.
//!
//! Baselines included for benchmarking: exact multiplication, classic
//! product quantization, the bucket-means ablation of the hash estimator,
//! and a PCA projection.

pub mod aggregation;
pub mod bound;
pub mod error;
pub mod estimator;
pub mod hash_tree;
pub mod linalg;
pub mod matrix;
pub mod model;
pub mod ops;
pub mod pca;
pub mod pq;
pub mod prototypes;
pub mod rng;
pub mod serial;
pub mod subspace;
pub mod synth;
pub mod tables;

pub use error::{MaddnessError, Result};
pub use matrix::{nmse, DenseMatrix};
pub use model::{MaddnessConfig, MaddnessModel};
