//! Product quantization baseline: per-subspace k-means prototypes,
//! nearest-prototype encoding, and table-based aggregation.

use crate::aggregation::{aggregate, aggregate_real, dequantize, AggregationConfig, AggregationMode};
use crate::error::{MaddnessError, Result};
use crate::matrix::DenseMatrix;
use crate::ops;
use crate::prototypes::{AssignmentCodes, PrototypeMatrix};
use crate::rng::Xoshiro256;
use crate::subspace::partition_columns;
use crate::tables::{build_tables, quantize_tables};

pub const DEFAULT_KMEANS_ITERS: usize = 25;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    /// k x d centroid matrix.
    pub centroids: DenseMatrix,
    pub assignments: Vec<usize>,
    /// Total SSE of rows about their assigned centroid.
    pub inertia: f64,
}

fn dist_sq(row: &[f32], centroid: &[f32]) -> f64 {
    row.iter()
        .zip(centroid)
        .map(|(&a, &b)| {
            let diff = a as f64 - b as f64;
            diff * diff
        })
        .sum()
}

fn kmeanspp_init(x: &DenseMatrix, k: usize, rng: &mut Xoshiro256) -> DenseMatrix {
    let n = x.rows();
    let d = x.cols();
    let mut centroids = DenseMatrix::zeros(k, d);
    let first = rng.next_index(n);
    centroids.row_mut(0).copy_from_slice(x.row(first));
    let mut best_dist: Vec<f64> = (0..n).map(|r| dist_sq(x.row(r), centroids.row(0))).collect();
    for i in 1..k {
        let total: f64 = best_dist.iter().sum();
        let pick = if total > 0.0 {
            // Sample proportionally to squared distance.
            let mut target = rng.next_f64() * total;
            let mut chosen = n - 1;
            for (r, &w) in best_dist.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = r;
                    break;
                }
            }
            chosen
        } else {
            rng.next_index(n)
        };
        centroids.row_mut(i).copy_from_slice(x.row(pick));
        for (r, slot) in best_dist.iter_mut().enumerate() {
            *slot = slot.min(dist_sq(x.row(r), centroids.row(i)));
        }
    }
    centroids
}

fn assign_all(x: &DenseMatrix, centroids: &DenseMatrix) -> (Vec<usize>, f64) {
    let mut assignments = vec![0usize; x.rows()];
    let mut inertia = 0.0f64;
    for r in 0..x.rows() {
        let row = x.row(r);
        let mut best = 0usize;
        let mut best_d = dist_sq(row, centroids.row(0));
        for c in 1..centroids.rows() {
            let d = dist_sq(row, centroids.row(c));
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        assignments[r] = best;
        inertia += best_d;
    }
    (assignments, inertia)
}

/// Lloyd's algorithm from a k-means++ seeding. Stops when assignments
/// stabilize or after `max_iters` passes; an empty cluster is reseeded to
/// the row farthest from its assigned centroid.
pub fn kmeans(x: &DenseMatrix, k: usize, seed: u64, max_iters: usize) -> Result<KMeansResult> {
    let n = x.rows();
    if n == 0 || k == 0 {
        return Err(MaddnessError::InvalidArgument(
            "kmeans needs at least one row and one cluster".into(),
        ));
    }
    let d = x.cols();
    let mut rng = Xoshiro256::seed_from_u64(seed);
    let mut centroids = kmeanspp_init(x, k, &mut rng);
    let mut assignments: Vec<usize> = Vec::new();
    let mut inertia = f64::INFINITY;
    for _ in 0..max_iters.max(1) {
        let (new_assignments, new_inertia) = assign_all(x, &centroids);
        debug_assert!(
            new_inertia <= inertia + 1e-9 * inertia.abs().max(1.0),
            "inertia increased: {inertia} -> {new_inertia}"
        );
        inertia = new_inertia;
        if new_assignments == assignments {
            break;
        }
        assignments = new_assignments;

        // Recompute means in f64.
        let mut sums = vec![0.0f64; k * d];
        let mut counts = vec![0usize; k];
        for (r, &a) in assignments.iter().enumerate() {
            counts[a] += 1;
            let dst = &mut sums[a * d..(a + 1) * d];
            for (acc, &v) in dst.iter_mut().zip(x.row(r)) {
                *acc += v as f64;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let dst = centroids.row_mut(c);
                for (j, slot) in dst.iter_mut().enumerate() {
                    *slot = (sums[c * d + j] / counts[c] as f64) as f32;
                }
            }
        }
        // Reseed empty clusters to the rows farthest from their centroid.
        let mut taken: Vec<usize> = Vec::new();
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far_row = None;
            let mut far_d = -1.0f64;
            for (r, &a) in assignments.iter().enumerate() {
                if taken.contains(&r) {
                    continue;
                }
                let dist = dist_sq(x.row(r), centroids.row(a));
                if dist > far_d {
                    far_d = dist;
                    far_row = Some(r);
                }
            }
            if let Some(r) = far_row {
                centroids.row_mut(c).copy_from_slice(x.row(r));
                taken.push(r);
            }
        }
    }
    if assignments.is_empty() {
        let (a, i) = assign_all(x, &centroids);
        assignments = a;
        inertia = i;
    }
    Ok(KMeansResult {
        centroids,
        assignments,
        inertia,
    })
}

/// Train a block-diagonal prototype matrix: one k-means per contiguous
/// column block. Codebook `c` uses seed `seed + c`.
pub fn pq_train(a_train: &DenseMatrix, c: usize, k: usize, seed: u64) -> Result<PrototypeMatrix> {
    let d = a_train.cols();
    if c == 0 || c > d {
        return Err(MaddnessError::InvalidArgument(format!(
            "codebook count {c} must be in 1..={d}"
        )));
    }
    let subspaces = partition_columns(d, c);
    let mut data = DenseMatrix::zeros(k * c, d);
    for (codebook, range) in subspaces.iter().enumerate() {
        let sub = a_train.column_block(range.clone());
        let result = kmeans(
            &sub,
            k,
            seed.wrapping_add(codebook as u64),
            DEFAULT_KMEANS_ITERS,
        )?;
        for code in 0..k {
            let dst = data.row_mut(codebook * k + code);
            for (local, col) in range.clone().enumerate() {
                dst[col] = result.centroids.get(code, local);
            }
        }
    }
    Ok(PrototypeMatrix::new(k, c, data, subspaces))
}

/// Encode rows as the index of the Euclidean-nearest prototype in each
/// codebook's subspace; ties pick the lowest index.
pub fn pq_encode(a: &DenseMatrix, p: &PrototypeMatrix) -> Result<AssignmentCodes> {
    if a.cols() != p.dims() {
        return Err(MaddnessError::ShapeMismatch(format!(
            "rows have {} dims but prototypes span {}",
            a.cols(),
            p.dims()
        )));
    }
    let n = a.rows();
    let (c, k) = (p.c, p.k);
    let mut codes = vec![0u8; n * c];
    for r in 0..n {
        let row = a.row(r);
        for (codebook, range) in p.subspaces().iter().enumerate() {
            let sub_row = &row[range.clone()];
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for code in 0..k {
                let proto = &p.row(codebook, code)[range.clone()];
                let d = dist_sq(sub_row, proto);
                if d < best_d {
                    best_d = d;
                    best = code;
                }
            }
            codes[r * c + codebook] = best as u8;
        }
    }
    // Distance computations: k multiplies per dimension per row, over all
    // subspaces; the argmin costs k-1 comparisons per (row, codebook).
    ops::add_multiplies((n * k * a.cols()) as u64);
    ops::add_comparisons((n * c * (k - 1)) as u64);
    AssignmentCodes::new(n, c, k, codes)
}

/// Full PQ pipeline: encode, build tables, aggregate with exact upcasting.
/// `quantize = false` keeps float tables (the accuracy oracle); `true` runs
/// the 8-bit path.
pub fn pq_apply(
    a: &DenseMatrix,
    b: &DenseMatrix,
    p: &PrototypeMatrix,
    quantize: bool,
) -> Result<DenseMatrix> {
    let codes = pq_encode(a, p)?;
    let tables = build_tables(b, p)?;
    if quantize {
        let qt = quantize_tables(&tables);
        let cfg = AggregationConfig {
            u: 1,
            mode: AggregationMode::ExactUpcast,
        };
        let (est, debias) = aggregate(&codes, &qt, &cfg)?;
        Ok(dequantize(&est, a.rows(), b.cols(), &qt, debias))
    } else {
        aggregate_real(&codes, &tables)
    }
}
