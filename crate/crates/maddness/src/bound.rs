//! Generalization-bound calculator for the trained estimator: a pure
//! formula evaluator over empirical inputs, with natural logarithms
//! throughout. The bound is loose by construction; it is reported, not
//! asserted against.

use crate::error::{MaddnessError, Result};

#[derive(Debug, Clone, Copy)]
pub struct BoundInputs {
    /// Codebook count C.
    pub codebooks: usize,
    /// Input dimensionality D.
    pub dims: usize,
    /// Training rows n.
    pub train_rows: usize,
    /// Failure probability, in (0, 1).
    pub delta: f64,
    /// Bound on the training matrix's largest singular value.
    pub sigma_a: f64,
    /// L2 norm of the operator column.
    pub b_norm: f64,
    /// Ridge penalty used in prototype optimization.
    pub lambda: f64,
    /// Empirical training loss the bound is anchored to.
    pub train_loss: f64,
}

fn ceil_log2(d: usize) -> u32 {
    debug_assert!(d >= 1);
    if d.is_power_of_two() {
        d.ilog2()
    } else {
        d.ilog2() + 1
    }
}

/// Hypothesis-count exponent: `C * (4 * ceil(log2 D) + 256) * ln 2 - ln delta`.
pub fn nu(codebooks: usize, dims: usize, delta: f64) -> f64 {
    let bits = codebooks as f64 * (4.0 * ceil_log2(dims) as f64 + 256.0);
    bits * std::f64::consts::LN_2 - delta.ln()
}

/// Expected-loss bound:
/// `train_loss + (C * sigma_A * ||b|| / (2 sqrt(lambda)))
///             * (1/256 + (8 + sqrt(nu)) / sqrt(2 n))`.
pub fn generalization_bound(inputs: &BoundInputs) -> Result<f64> {
    if !(inputs.delta > 0.0 && inputs.delta < 1.0) {
        return Err(MaddnessError::InvalidArgument(format!(
            "delta must lie in (0, 1), got {}",
            inputs.delta
        )));
    }
    if !(inputs.lambda > 0.0 && inputs.lambda.is_finite()) {
        return Err(MaddnessError::InvalidArgument(format!(
            "lambda must be positive, got {}",
            inputs.lambda
        )));
    }
    if inputs.train_rows == 0 || inputs.dims == 0 || inputs.codebooks == 0 {
        return Err(MaddnessError::InvalidArgument(
            "codebooks, dims and train_rows must be positive".into(),
        ));
    }
    if !(inputs.sigma_a.is_finite() && inputs.sigma_a >= 0.0)
        || !(inputs.b_norm.is_finite() && inputs.b_norm >= 0.0)
        || !inputs.train_loss.is_finite()
    {
        return Err(MaddnessError::InvalidArgument(
            "sigma_a, b_norm and train_loss must be finite and non-negative".into(),
        ));
    }
    let nu_val = nu(inputs.codebooks, inputs.dims, inputs.delta);
    let scale =
        inputs.codebooks as f64 * inputs.sigma_a * inputs.b_norm / (2.0 * inputs.lambda.sqrt());
    let complexity = 1.0 / 256.0 + (8.0 + nu_val.sqrt()) / (2.0 * inputs.train_rows as f64).sqrt();
    Ok(inputs.train_loss + scale * complexity)
}
