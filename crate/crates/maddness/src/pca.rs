//! PCA projection baseline: project both sides onto the top principal
//! directions of the training matrix and multiply in the reduced space.

use crate::error::{MaddnessError, Result};
use crate::linalg::top_right_singular_directions;
use crate::matrix::DenseMatrix;

const POWER_ITERS: usize = 100;

#[derive(Debug, Clone)]
pub struct PcaProjection {
    /// d x components, orthonormal columns.
    v: DenseMatrix,
}

/// Top `components` right singular directions of the mean-centered training
/// matrix, by power iteration with deflation.
pub fn pca_train(a_train: &DenseMatrix, components: usize) -> Result<PcaProjection> {
    let d = a_train.cols();
    if components == 0 || components > d {
        return Err(MaddnessError::InvalidArgument(format!(
            "component count {components} must be in 1..={d}"
        )));
    }
    if a_train.rows() == 0 {
        return Err(MaddnessError::InvalidArgument(
            "training matrix must have at least one row".into(),
        ));
    }
    Ok(PcaProjection {
        v: top_right_singular_directions(a_train, components, POWER_ITERS),
    })
}

impl PcaProjection {
    pub fn components(&self) -> &DenseMatrix {
        &self.v
    }

    /// Precompute the operator-side projection `V^T b`.
    pub fn project_operator(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        self.v.transposed().matmul(b)
    }

    /// Approximate `a @ b` as `(a V)(V^T b)` with a precomputed right side.
    pub fn apply_projected(&self, a: &DenseMatrix, vtb: &DenseMatrix) -> Result<DenseMatrix> {
        a.matmul(&self.v)?.matmul(vtb)
    }

    /// Convenience: project both sides and multiply.
    pub fn apply(&self, a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
        let vtb = self.project_operator(b)?;
        self.apply_projected(a, &vtb)
    }
}
