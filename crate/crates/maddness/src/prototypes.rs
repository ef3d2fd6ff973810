//! Prototype construction: bucket means per codebook, and the global ridge
//! optimization that lets prototypes drift outside their home subspace to
//! better reconstruct the training matrix.

use std::ops::Range;

use crate::error::{MaddnessError, Result};
use crate::hash_tree::Bucket;
use crate::linalg::cholesky_solve_in_place;
use crate::matrix::DenseMatrix;

/// The (K*C) x D prototype matrix. Row `c*K + k` is prototype `k` of
/// codebook `c`. Bucket-mean prototypes are zero outside their codebook's
/// column range; ridge-optimized prototypes are dense.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeMatrix {
    pub k: usize,
    pub c: usize,
    data: DenseMatrix,
    subspaces: Vec<Range<usize>>,
}

impl PrototypeMatrix {
    pub fn new(k: usize, c: usize, data: DenseMatrix, subspaces: Vec<Range<usize>>) -> Self {
        debug_assert_eq!(data.rows(), k * c);
        debug_assert_eq!(subspaces.len(), c);
        Self {
            k,
            c,
            data,
            subspaces,
        }
    }

    pub fn dims(&self) -> usize {
        self.data.cols()
    }

    pub fn subspaces(&self) -> &[Range<usize>] {
        &self.subspaces
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.data
    }

    /// Full-width prototype row for (codebook, code).
    pub fn row(&self, codebook: usize, code: usize) -> &[f32] {
        self.data.row(codebook * self.k + code)
    }
}

/// Per-row codebook assignments: `n x c` codes, each in `[0, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentCodes {
    pub n: usize,
    pub c: usize,
    pub k: usize,
    data: Vec<u8>,
}

impl AssignmentCodes {
    pub fn new(n: usize, c: usize, k: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != n * c {
            return Err(MaddnessError::ShapeMismatch(format!(
                "expected {} codes for {} rows x {} codebooks, got {}",
                n * c,
                n,
                c,
                data.len()
            )));
        }
        if let Some(&bad) = data.iter().find(|&&v| v as usize >= k) {
            return Err(MaddnessError::InvalidArgument(format!(
                "code {bad} out of range for k = {k}"
            )));
        }
        Ok(Self { n, c, k, data })
    }

    #[inline]
    pub fn get(&self, row: usize, codebook: usize) -> u8 {
        self.data[row * self.c + codebook]
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.data[row * self.c..(row + 1) * self.c]
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }
}

/// Materialize the one-hot assignment matrix G (n x k*c): each row holds one
/// 1 per codebook block. Used by tests and small-scale oracles; the ridge
/// solver accumulates its normal equations straight from the codes instead.
pub fn build_g(codes: &AssignmentCodes) -> DenseMatrix {
    let kc = codes.k * codes.c;
    let mut g = DenseMatrix::zeros(codes.n, kc);
    for row in 0..codes.n {
        for codebook in 0..codes.c {
            let code = codes.get(row, codebook) as usize;
            g.set(row, codebook * codes.k + code, 1.0);
        }
    }
    g
}

/// Prototypes as the per-bucket means of each codebook's training
/// subvectors; empty buckets yield zero prototypes.
pub fn bucket_means(
    leaves_per_codebook: &[Vec<Bucket>],
    k: usize,
    subspaces: &[Range<usize>],
    d: usize,
) -> PrototypeMatrix {
    let c = leaves_per_codebook.len();
    debug_assert_eq!(subspaces.len(), c);
    let mut data = DenseMatrix::zeros(k * c, d);
    for (codebook, leaves) in leaves_per_codebook.iter().enumerate() {
        debug_assert_eq!(leaves.len(), k);
        let cols = subspaces[codebook].clone();
        for (code, bucket) in leaves.iter().enumerate() {
            if bucket.is_empty() {
                continue;
            }
            let row = data.row_mut(codebook * k + code);
            for (local, col) in cols.clone().enumerate() {
                row[col] = bucket.col_mean(local) as f32;
            }
        }
    }
    PrototypeMatrix::new(k, c, data, subspaces.to_vec())
}

/// Ridge-optimal prototypes: the exact minimizer of
/// `||A - G P||_F^2 + lambda ||P||_F^2`, solved through the normal equations
/// `(G^T G + lambda I) P = G^T A`. G is never materialized: `G^T G` counts
/// code co-occurrences and `G^T A` sums assigned rows.
pub fn optimize_prototypes(
    codes: &AssignmentCodes,
    a_train: &DenseMatrix,
    lambda: f64,
    subspaces: &[Range<usize>],
) -> Result<PrototypeMatrix> {
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(MaddnessError::InvalidArgument(format!(
            "ridge lambda must be positive and finite, got {lambda}"
        )));
    }
    if codes.n != a_train.rows() {
        return Err(MaddnessError::ShapeMismatch(format!(
            "{} code rows vs {} training rows",
            codes.n,
            a_train.rows()
        )));
    }
    let k = codes.k;
    let kc = k * codes.c;
    let d = a_train.cols();

    let mut gram = vec![0.0f64; kc * kc];
    let mut rhs = vec![0.0f64; kc * d];
    let mut hot = vec![0usize; codes.c];
    for row in 0..codes.n {
        for (codebook, slot) in hot.iter_mut().enumerate() {
            *slot = codebook * k + codes.get(row, codebook) as usize;
        }
        for &i in &hot {
            for &j in &hot {
                gram[i * kc + j] += 1.0;
            }
            let dst = &mut rhs[i * d..(i + 1) * d];
            for (acc, &v) in dst.iter_mut().zip(a_train.row(row)) {
                *acc += v as f64;
            }
        }
    }
    for i in 0..kc {
        gram[i * kc + i] += lambda;
    }
    cholesky_solve_in_place(&mut gram, kc, &mut rhs, d)?;

    let mut out = Vec::with_capacity(kc * d);
    for &v in &rhs {
        let v = v as f32;
        if !v.is_finite() {
            return Err(MaddnessError::Solver("non-finite prototype entry".into()));
        }
        out.push(v);
    }
    Ok(PrototypeMatrix::new(
        k,
        codes.c,
        DenseMatrix::from_raw(kc, d, out),
        subspaces.to_vec(),
    ))
}

/// Ridge objective `||A - G P||_F^2 + lambda ||P||_F^2` evaluated directly;
/// the reconstruction `G P` selects one prototype row per codebook.
pub fn ridge_objective(
    codes: &AssignmentCodes,
    a_train: &DenseMatrix,
    p: &PrototypeMatrix,
    lambda: f64,
) -> f64 {
    let d = a_train.cols();
    let mut residual = 0.0f64;
    let mut recon = vec![0.0f64; d];
    for row in 0..codes.n {
        recon.iter_mut().for_each(|v| *v = 0.0);
        for codebook in 0..codes.c {
            let proto = p.row(codebook, codes.get(row, codebook) as usize);
            for (acc, &v) in recon.iter_mut().zip(proto) {
                *acc += v as f64;
            }
        }
        for (j, &v) in a_train.row(row).iter().enumerate() {
            let diff = v as f64 - recon[j];
            residual += diff * diff;
        }
    }
    let penalty: f64 = p
        .matrix()
        .data()
        .iter()
        .map(|&v| (v as f64) * (v as f64))
        .sum();
    residual + lambda * penalty
}
