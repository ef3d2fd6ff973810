//! The learned hash family: 4-level balanced binary regression trees over
//! one codebook's subspace, trained greedily to minimize bucket SSE.
//!
//! All nodes in a level share one split dimension but carry per-node
//! thresholds. A vector descends the tree with four comparisons and lands in
//! one of 16 leaves. Thresholds can be quantized to 8 bits with a
//! power-of-two scale so the comparisons work on byte values.

use crate::error::{MaddnessError, Result};
use crate::matrix::DenseMatrix;
use crate::ops;

pub const TREE_LEVELS: usize = 4;
pub const NUM_LEAVES: usize = 1 << TREE_LEVELS;

/// 8-bit form of the split thresholds: per level, an offset, a power-of-two
/// scale, and the scaled thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedSplits {
    pub thresholds: [Vec<u8>; TREE_LEVELS],
    pub offsets: [f32; TREE_LEVELS],
    pub scales: [f32; TREE_LEVELS],
}

/// Parameters of one trained hash tree.
///
/// `thresholds[t]` has length `2^t` (one entry per node at that level);
/// `split_dims` index into the codebook's subspace, not the full matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HashTreeParams {
    pub split_dims: [usize; TREE_LEVELS],
    pub thresholds: [Vec<f32>; TREE_LEVELS],
    pub quantized: Option<QuantizedSplits>,
}

/// A set of training rows hashed to one tree node, with cached per-dimension
/// sums and sums of squares for O(1) SSE queries.
#[derive(Debug, Clone)]
pub struct Bucket {
    members: Vec<usize>,
    sums: Vec<f64>,
    sumsqs: Vec<f64>,
}

impl Bucket {
    pub fn from_rows(x: &DenseMatrix, ids: impl IntoIterator<Item = usize>) -> Self {
        let d = x.cols();
        let mut bucket = Bucket {
            members: Vec::new(),
            sums: vec![0.0; d],
            sumsqs: vec![0.0; d],
        };
        for id in ids {
            bucket.members.push(id);
            for (j, &v) in x.row(id).iter().enumerate() {
                let v = v as f64;
                bucket.sums[j] += v;
                bucket.sumsqs[j] += v * v;
            }
        }
        bucket
    }

    pub fn root(x: &DenseMatrix) -> Self {
        Self::from_rows(x, 0..x.rows())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn col_mean(&self, j: usize) -> f64 {
        if self.members.is_empty() {
            0.0
        } else {
            self.sums[j] / self.members.len() as f64
        }
    }

    /// SSE of the members about their mean along dimension `j`.
    pub fn sse_dim(&self, j: usize) -> f64 {
        if self.members.is_empty() {
            return 0.0;
        }
        let n = self.members.len() as f64;
        self.sumsqs[j] - self.sums[j] * self.sums[j] / n
    }

    /// SSE summed over every dimension.
    pub fn sse_total(&self) -> f64 {
        (0..self.sums.len()).map(|j| self.sse_dim(j)).sum()
    }

    /// Partition members by `x[row][j] >= v`; ties go right like the hash.
    pub fn split(&self, x: &DenseMatrix, j: usize, v: f32) -> (Bucket, Bucket) {
        let (above, below): (Vec<usize>, Vec<usize>) =
            self.members.iter().partition(|&&id| x.get(id, j) >= v);
        (Bucket::from_rows(x, below), Bucket::from_rows(x, above))
    }
}

/// Map a vector to a leaf index in 1..=16 by four compare-and-descend steps.
pub fn maddness_hash(x: &[f32], tree: &HashTreeParams) -> usize {
    let mut i = 1usize;
    for t in 0..TREE_LEVELS {
        let v = tree.thresholds[t][i - 1];
        let b = usize::from(x[tree.split_dims[t]] >= v);
        i = 2 * i - 1 + b;
    }
    ops::add_comparisons(TREE_LEVELS as u64);
    i
}

/// Leaf index using the 8-bit quantized thresholds. The probed coordinate is
/// scaled by the level's (scale, offset) pair and rounded the same way the
/// thresholds were, but not clamped: values outside [0, 255] must keep their
/// ordering against the byte thresholds or points below a level's minimum
/// threshold would all saturate onto it and route right.
///
/// Panics if [`quantize_tree`] has not filled the quantized fields.
pub fn maddness_hash_quantized(x: &[f32], tree: &HashTreeParams) -> usize {
    let q = tree
        .quantized
        .as_ref()
        .expect("quantize_tree must run before quantized hashing");
    let mut i = 1usize;
    for t in 0..TREE_LEVELS {
        let scaled = (q.scales[t] * (x[tree.split_dims[t]] - q.offsets[t])).round_ties_even();
        let b = usize::from(scaled >= q.thresholds[t][i - 1] as f32);
        i = 2 * i - 1 + b;
    }
    ops::add_comparisons(TREE_LEVELS as u64);
    i
}

#[inline]
fn quantize_threshold(v: f32, scale: f32, offset: f32) -> u8 {
    (scale * (v - offset)).round_ties_even().clamp(0.0, 255.0) as u8
}

/// Incremental cumulative SSE over a row-major block of `d`-wide rows.
///
/// Forward: `out[i]` is the SSE (summed over dimensions) of rows `0..=i`.
/// Reverse: `out[i]` is the SSE of rows `i..n`. Runs in O(n d) from running
/// sums and sums of squares.
pub fn cumulative_sse(rows: &[f32], d: usize, reverse: bool) -> Vec<f64> {
    assert!(d > 0 && rows.len() % d == 0);
    let n = rows.len() / d;
    let mut out = vec![0.0f64; n];
    let mut cum = vec![0.0f64; d];
    let mut cum_sq = vec![0.0f64; d];
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..n).rev())
    } else {
        Box::new(0..n)
    };
    for (step, r) in order.enumerate() {
        let row = &rows[r * d..(r + 1) * d];
        let count = (step + 1) as f64;
        let mut sse = 0.0f64;
        for (j, &v) in row.iter().enumerate() {
            let v = v as f64;
            cum[j] += v;
            cum_sq[j] += v * v;
            sse += cum_sq[j] - cum[j] * cum[j] / count;
        }
        out[r] = sse;
    }
    out
}

/// Best threshold for splitting `bucket` along dimension `j`.
///
/// Rows are sorted by their `j`-th coordinate; every split position leaves
/// rows `..=p` on one side and the rest on the other, and the returned loss
/// is the summed SSE (over all dimensions) of the two sides. The threshold
/// is the midpoint of the straddling pair. Ties pick the earliest position.
pub fn optimal_split_threshold(
    bucket: &Bucket,
    j: usize,
    x: &DenseMatrix,
) -> Result<(f32, f64)> {
    let n = bucket.len();
    if n == 0 {
        return Err(MaddnessError::InvalidArgument(
            "cannot split an empty bucket".into(),
        ));
    }
    if n == 1 {
        return Ok((x.get(bucket.members[0], j), 0.0));
    }
    let d = x.cols();
    let mut order: Vec<usize> = bucket.members.clone();
    order.sort_unstable_by(|&a, &b| {
        x.get(a, j)
            .total_cmp(&x.get(b, j))
            .then_with(|| a.cmp(&b))
    });
    let mut sorted = Vec::with_capacity(n * d);
    for &id in &order {
        sorted.extend_from_slice(x.row(id));
    }
    let head = cumulative_sse(&sorted, d, false);
    let tail = cumulative_sse(&sorted, d, true);
    let mut best_pos = 0usize;
    let mut best_loss = f64::INFINITY;
    for p in 0..n - 1 {
        let loss = head[p] + tail[p + 1];
        if loss < best_loss {
            best_loss = loss;
            best_pos = p;
        }
    }
    let lo = sorted[best_pos * d + j] as f64;
    let hi = sorted[(best_pos + 1) * d + j] as f64;
    Ok((((lo + hi) / 2.0) as f32, best_loss))
}

/// The four candidate split dimensions: those with the largest per-dimension
/// SSE summed across buckets. Ties break toward the lower index; narrower
/// subspaces return every dimension.
pub fn heuristic_select_idxs(buckets: &[Bucket], dims: usize) -> Result<Vec<usize>> {
    if buckets.iter().all(Bucket::is_empty) {
        return Err(MaddnessError::EmptyBuckets);
    }
    let mut losses = vec![0.0f64; dims];
    for b in buckets {
        if !b.is_empty() {
            for (j, slot) in losses.iter_mut().enumerate() {
                *slot += b.sse_dim(j);
            }
        }
    }
    let mut idxs: Vec<usize> = (0..dims).collect();
    idxs.sort_by(|&a, &b| losses[b].total_cmp(&losses[a]).then_with(|| a.cmp(&b)));
    idxs.truncate(TREE_LEVELS.min(dims));
    Ok(idxs)
}

/// Result of growing the tree by one level.
#[derive(Debug)]
pub struct LevelSplit {
    pub buckets: Vec<Bucket>,
    pub loss: f64,
    pub split_dim: usize,
    pub thresholds: Vec<f32>,
}

/// Greedily choose the next split dimension and per-bucket thresholds, then
/// split every bucket. Children of an empty bucket are empty with threshold
/// 0 and contribute no loss.
pub fn add_tree_level(buckets: &[Bucket], x: &DenseMatrix) -> Result<LevelSplit> {
    let candidates = heuristic_select_idxs(buckets, x.cols())?;
    let mut best: Option<(f64, usize, Vec<f32>)> = None;
    for &j in &candidates {
        let mut total = 0.0f64;
        let mut thresholds = Vec::with_capacity(buckets.len());
        for b in buckets {
            if b.is_empty() {
                thresholds.push(0.0);
            } else {
                let (v, loss) = optimal_split_threshold(b, j, x)?;
                thresholds.push(v);
                total += loss;
            }
        }
        let better = match &best {
            None => true,
            Some((l, dim, _)) => total < *l || (total == *l && j < *dim),
        };
        if better {
            best = Some((total, j, thresholds));
        }
    }
    let (loss, split_dim, thresholds) = best.expect("candidate list is never empty");
    let mut next = Vec::with_capacity(buckets.len() * 2);
    for (b, &v) in buckets.iter().zip(&thresholds) {
        let (below, above) = b.split(x, split_dim, v);
        next.push(below);
        next.push(above);
    }
    Ok(LevelSplit {
        buckets: next,
        loss,
        split_dim,
        thresholds,
    })
}

/// Train one hash tree on a codebook's training submatrix and return its
/// parameters together with the 16 leaf buckets.
pub fn learn_hash_tree(x: &DenseMatrix) -> Result<(HashTreeParams, Vec<Bucket>)> {
    if x.rows() == 0 {
        return Err(MaddnessError::InvalidArgument(
            "cannot train a hash tree on an empty matrix".into(),
        ));
    }
    let mut buckets = vec![Bucket::root(x)];
    let mut split_dims = [0usize; TREE_LEVELS];
    let mut thresholds: [Vec<f32>; TREE_LEVELS] = Default::default();
    for t in 0..TREE_LEVELS {
        let level = add_tree_level(&buckets, x)?;
        split_dims[t] = level.split_dim;
        thresholds[t] = level.thresholds;
        buckets = level.buckets;
    }
    debug_assert_eq!(buckets.len(), NUM_LEAVES);
    Ok((
        HashTreeParams {
            split_dims,
            thresholds,
            quantized: None,
        },
        buckets,
    ))
}

/// Exponent used when a level's thresholds span no range at all; also the
/// ceiling for pathologically tiny ranges, past which extra precision is
/// meaningless for f32 inputs.
const MAX_SCALE_EXP: i32 = 30;

/// Fill the 8-bit threshold form: per level, offset = min threshold and a
/// power-of-two scale mapping the range into [0, 255].
pub fn quantize_tree(tree: &HashTreeParams) -> HashTreeParams {
    let mut out = tree.clone();
    let mut quantized = QuantizedSplits {
        thresholds: Default::default(),
        offsets: [0.0; TREE_LEVELS],
        scales: [0.0; TREE_LEVELS],
    };
    for t in 0..TREE_LEVELS {
        let vals = &tree.thresholds[t];
        let min = vals.iter().copied().fold(f32::INFINITY, f32::min);
        let max = vals.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        let range = (max - min) as f64;
        let exp = if range > 0.0 {
            ((255.0 / range).log2().floor() as i32).min(MAX_SCALE_EXP)
        } else {
            MAX_SCALE_EXP
        };
        let scale = (exp as f64).exp2() as f32;
        quantized.offsets[t] = min;
        quantized.scales[t] = scale;
        quantized.thresholds[t] = vals
            .iter()
            .map(|&v| quantize_threshold(v, scale, min))
            .collect();
    }
    out.quantized = Some(quantized);
    out
}
