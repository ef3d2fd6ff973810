//! Small dense f64 routines: an SPD Cholesky solve for the ridge normal
//! equations and power iteration for leading singular directions.

use crate::error::{MaddnessError, Result};
use crate::matrix::DenseMatrix;
use crate::rng::Xoshiro256;

/// Solve `A X = B` for symmetric positive-definite `A` (n x n, row-major)
/// with `m` right-hand-side columns in `B` (n x m, row-major). `A` is
/// overwritten by its Cholesky factor, `B` by the solution.
pub(crate) fn cholesky_solve_in_place(a: &mut [f64], n: usize, b: &mut [f64], m: usize) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n * m);
    // Factor A = L L^T, storing L in the lower triangle.
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if !(diag.is_finite() && diag > 0.0) {
            return Err(MaddnessError::Solver(format!(
                "non-positive-definite pivot {diag} at column {j}"
            )));
        }
        let diag = diag.sqrt();
        a[j * n + j] = diag;
        for i in (j + 1)..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / diag;
        }
    }
    // Forward substitution: L Y = B.
    for i in 0..n {
        for k in 0..i {
            let l = a[i * n + k];
            if l != 0.0 {
                let (head, tail) = b.split_at_mut(i * m);
                let y_k = &head[k * m..(k + 1) * m];
                let y_i = &mut tail[..m];
                for c in 0..m {
                    y_i[c] -= l * y_k[c];
                }
            }
        }
        let d = a[i * n + i];
        for c in 0..m {
            b[i * m + c] /= d;
        }
    }
    // Back substitution: L^T X = Y.
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let l = a[k * n + i];
            if l != 0.0 {
                let (head, tail) = b.split_at_mut(k * m);
                let x_i = &mut head[i * m..(i + 1) * m];
                let x_k = &tail[..m];
                for c in 0..m {
                    x_i[c] -= l * x_k[c];
                }
            }
        }
        let d = a[i * n + i];
        for c in 0..m {
            b[i * m + c] /= d;
        }
    }
    Ok(())
}

/// Largest singular value of `a`, estimated by `iters` rounds of power
/// iteration on the Gram matrix a^T a.
pub fn estimate_top_singular_value(a: &DenseMatrix, iters: usize) -> f64 {
    let d = a.cols();
    if d == 0 || a.rows() == 0 {
        return 0.0;
    }
    let mut v = vec![1.0f64 / (d as f64).sqrt(); d];
    let mut av = vec![0.0f64; a.rows()];
    let mut atav = vec![0.0f64; d];
    let mut sigma_sq = 0.0f64;
    for _ in 0..iters {
        gram_apply(a, &v, &mut av, &mut atav);
        let norm = l2_norm(&atav);
        if norm == 0.0 {
            return 0.0;
        }
        sigma_sq = norm; // ||A^T A v|| -> top eigenvalue of A^T A for unit v
        for (dst, &src) in v.iter_mut().zip(&atav) {
            *dst = src / norm;
        }
    }
    sigma_sq.max(0.0).sqrt()
}

/// Top `k` right singular directions of `a` after mean-centering, via power
/// iteration with Gram-Schmidt deflation. Columns of the result are
/// orthonormal (d x k).
pub fn top_right_singular_directions(a: &DenseMatrix, k: usize, iters: usize) -> DenseMatrix {
    let d = a.cols();
    let n = a.rows();
    debug_assert!(k <= d);
    // Mean-center once; the centered copy stays f32 like its source.
    let mut means = vec![0.0f64; d];
    for r in 0..n {
        for (j, &v) in a.row(r).iter().enumerate() {
            means[j] += v as f64;
        }
    }
    for m in &mut means {
        *m /= n.max(1) as f64;
    }
    let mut centered = DenseMatrix::zeros(n, d);
    for r in 0..n {
        for j in 0..d {
            centered.set(r, j, (a.get(r, j) as f64 - means[j]) as f32);
        }
    }

    let mut rng = Xoshiro256::seed_from_u64(0x70CA_0FFE);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut av = vec![0.0f64; n];
    let mut atav = vec![0.0f64; d];
    for _ in 0..k {
        let mut v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        orthogonalize(&mut v, &basis);
        normalize_or_reseed(&mut v, &mut rng, &basis);
        for _ in 0..iters {
            gram_apply(&centered, &v, &mut av, &mut atav);
            v.copy_from_slice(&atav);
            orthogonalize(&mut v, &basis);
            normalize_or_reseed(&mut v, &mut rng, &basis);
        }
        basis.push(v);
    }

    let mut out = DenseMatrix::zeros(d, k);
    for (col, v) in basis.iter().enumerate() {
        for j in 0..d {
            out.set(j, col, v[j] as f32);
        }
    }
    out
}

fn gram_apply(a: &DenseMatrix, v: &[f64], av: &mut [f64], atav: &mut [f64]) {
    for (r, slot) in av.iter_mut().enumerate() {
        let mut acc = 0.0f64;
        for (j, &x) in a.row(r).iter().enumerate() {
            acc += x as f64 * v[j];
        }
        *slot = acc;
    }
    atav.iter_mut().for_each(|x| *x = 0.0);
    for (r, &w) in av.iter().enumerate() {
        if w != 0.0 {
            for (j, &x) in a.row(r).iter().enumerate() {
                atav[j] += x as f64 * w;
            }
        }
    }
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
        for (x, y) in v.iter_mut().zip(b) {
            *x -= dot * y;
        }
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize_or_reseed(v: &mut [f64], rng: &mut Xoshiro256, basis: &[Vec<f64>]) {
    let mut norm = l2_norm(v);
    while norm < 1e-12 {
        // Degenerate direction (e.g. exactly deflated); restart from noise.
        for x in v.iter_mut() {
            *x = rng.normal();
        }
        orthogonalize(v, basis);
        norm = l2_norm(v);
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
}
