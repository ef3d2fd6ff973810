//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured numbers (run with `--nocapture` to see them).

use std::time::Instant;

use maddness::aggregation::{
    aggregate, bias_correction, estimate_block_sum, AggregationConfig, AggregationMode,
};
use maddness::bound::{generalization_bound, nu, BoundInputs};
use maddness::estimator::{train_estimator, EstimatorParams, MethodKind};
use maddness::hash_tree::{add_tree_level, optimal_split_threshold, Bucket};
use maddness::matrix::nmse;
use maddness::model::{train, MaddnessConfig};
use maddness::ops;
use maddness::pq::{pq_apply, pq_train};
use maddness::prototypes::{
    build_g, bucket_means, optimize_prototypes, ridge_objective, AssignmentCodes,
};
use maddness::rng::Xoshiro256;
use maddness::serial::{deserialize, serialize};
use maddness::subspace::partition_columns;
use maddness::synth::{generate_task, SyntheticTaskSpec};
use maddness::tables::{quantize_tables, RealTables};
use maddness::DenseMatrix;

fn random_matrix(rows: usize, cols: usize, rng: &mut Xoshiro256) -> DenseMatrix {
    DenseMatrix::new(rows, cols, (0..rows * cols).map(|_| rng.normal() as f32).collect()).unwrap()
}

fn direct_sse(x: &DenseMatrix, ids: &[usize]) -> f64 {
    let d = x.cols();
    if ids.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for j in 0..d {
        let mean = ids.iter().map(|&i| x.get(i, j) as f64).sum::<f64>() / ids.len() as f64;
        total += ids
            .iter()
            .map(|&i| {
                let diff = x.get(i, j) as f64 - mean;
                diff * diff
            })
            .sum::<f64>();
    }
    total
}

/// Criterion 1: summing >= 1e6 uniform random bytes in blocks of U = 16
/// overestimates by 16 * log2(16) / 4 = 16 per block on average (within 5%),
/// in under 10 seconds.
#[test]
fn criterion_01_averaging_bias_reproduction() {
    let start = Instant::now();
    let mut rng = Xoshiro256::seed_from_u64(0xA15E);
    let blocks = 65_536; // 1,048,576 bytes
    let mut total_err = 0i64;
    let mut block = [0u8; 16];
    for _ in 0..blocks {
        for slot in block.iter_mut() {
            *slot = (rng.next_u64() & 0xFF) as u8;
        }
        let est = estimate_block_sum(&block) as i64;
        let truth: i64 = block.iter().map(|&v| v as i64).sum();
        total_err += est - truth;
    }
    let mean = total_err as f64 / blocks as f64;
    let expected = 16.0 * 16f64.log2() / 4.0;
    let elapsed = start.elapsed();
    assert!(
        (mean - expected).abs() <= 0.05 * expected,
        "mean per-block bias {mean} outside 5% of {expected}"
    );
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}");
    assert_eq!(bias_correction(16, 16), -expected);
    println!(
        "[acceptance] criterion 01 PASS - mean per-block bias {mean:.4} vs {expected} \
         over {blocks} blocks in {elapsed:?}"
    );
}

/// Criterion 2: the block-sum estimator never underestimates and its slack
/// is at most U * log2(U) / 2 - exhaustively for U = 2, sampled for U = 4.
#[test]
fn criterion_02_exhaustive_block_sum_check() {
    let mut violations = 0u64;
    for a in 0..=255u16 {
        for b in 0..=255u16 {
            let est = estimate_block_sum(&[a as u8, b as u8]) as i64;
            let truth = (a + b) as i64;
            if est < truth || est - truth > 1 {
                violations += 1;
            }
        }
    }
    let mut rng = Xoshiro256::seed_from_u64(0xB10C);
    for _ in 0..100_000 {
        let block: Vec<u8> = (0..4).map(|_| (rng.next_u64() & 0xFF) as u8).collect();
        let est = estimate_block_sum(&block) as i64;
        let truth: i64 = block.iter().map(|&v| v as i64).sum();
        if est < truth || est - truth > 4 {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
    println!(
        "[acceptance] criterion 02 PASS - 65536 exhaustive pairs (u=2) and 100000 random \
         4-tuples (u=4), zero violations"
    );
}

/// Criterion 3: the incremental split-threshold search matches an O(N^2)
/// direct-SSE brute force over every adjacent-midpoint split, on 200 random
/// buckets of up to 64 rows and 8 dims.
#[test]
fn criterion_03_split_threshold_oracle() {
    let mut rng = Xoshiro256::seed_from_u64(0x5EED);
    for case in 0..200 {
        let n = 2 + rng.next_index(63);
        let d = 1 + rng.next_index(8);
        let j = rng.next_index(d);
        // Continuous draws: distinct losses, so the optimum is unique and
        // the threshold must match bit-for-bit.
        let data: Vec<f32> = (0..n * d).map(|_| rng.uniform(-5.0, 5.0) as f32).collect();
        let x = DenseMatrix::new(n, d, data).unwrap();
        let bucket = Bucket::root(&x);
        let (thr, loss) = optimal_split_threshold(&bucket, j, &x).unwrap();

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x.get(a, j).total_cmp(&x.get(b, j)).then_with(|| a.cmp(&b)));
        let mut best_thr = f32::NAN;
        let mut best_loss = f64::INFINITY;
        for p in 0..n - 1 {
            let cand = direct_sse(&x, &order[..=p]) + direct_sse(&x, &order[p + 1..]);
            if cand < best_loss {
                best_loss = cand;
                best_thr = ((x.get(order[p], j) as f64 + x.get(order[p + 1], j) as f64) / 2.0)
                    as f32;
            }
        }
        assert_eq!(thr, best_thr, "case {case}: threshold mismatch");
        assert!(
            (loss - best_loss).abs() <= 1e-6 * best_loss.max(1.0),
            "case {case}: loss {loss} vs brute {best_loss}"
        );
    }
    println!("[acceptance] criterion 03 PASS - 200 random buckets match the O(N^2) oracle");
}

/// Criterion 4: growing the tree never increases the total SSE, level over
/// level, on 50 random training sets.
#[test]
fn criterion_04_tree_loss_monotonicity() {
    let mut rng = Xoshiro256::seed_from_u64(0x7EEE);
    for case in 0..50 {
        let n = 32 + rng.next_index(224);
        let d = 2 + rng.next_index(14);
        // Mix of smooth and clustery data.
        let data: Vec<f32> = (0..n * d)
            .map(|_| {
                let base = rng.normal();
                if case % 3 == 0 {
                    (base * 2.0).round() as f32
                } else {
                    base as f32
                }
            })
            .collect();
        let x = DenseMatrix::new(n, d, data).unwrap();
        let mut buckets = vec![Bucket::root(&x)];
        let mut prev: f64 = buckets[0].sse_total();
        for level in 0..4 {
            let split = add_tree_level(&buckets, &x).unwrap();
            assert!(
                split.loss <= prev,
                "case {case} level {level}: loss rose {prev} -> {}",
                split.loss
            );
            prev = split.loss;
            buckets = split.buckets;
        }
    }
    println!("[acceptance] criterion 04 PASS - SSE non-increasing over 4 levels on 50 sets");
}

/// Criterion 5: on 100 random (G, A) instances the ridge solution beats the
/// bucket-means prototypes on the ridge objective and satisfies the
/// stationarity condition within 1e-4 of ||G^T A||.
#[test]
fn criterion_05_ridge_optimality() {
    let mut rng = Xoshiro256::seed_from_u64(0x11D6E);
    for case in 0..100 {
        let n = 20 + rng.next_index(100);
        let c = 1 + rng.next_index(4);
        let k = 2 + rng.next_index(15);
        let d = c + rng.next_index(8);
        let lambda = 1.0;
        let codes = AssignmentCodes::new(
            n,
            c,
            k,
            (0..n * c).map(|_| rng.next_index(k) as u8).collect(),
        )
        .unwrap();
        let a = random_matrix(n, d, &mut rng);
        let subspaces = partition_columns(d, c);

        let leaves: Vec<Vec<Bucket>> = (0..c)
            .map(|codebook| {
                let sub = a.column_block(subspaces[codebook].clone());
                (0..k)
                    .map(|code| {
                        let ids: Vec<usize> = (0..n)
                            .filter(|&r| codes.get(r, codebook) as usize == code)
                            .collect();
                        Bucket::from_rows(&sub, ids)
                    })
                    .collect()
            })
            .collect();
        let means = bucket_means(&leaves, k, &subspaces, d);
        let ridge = optimize_prototypes(&codes, &a, lambda, &subspaces).unwrap();

        let obj_means = ridge_objective(&codes, &a, &means, lambda);
        let obj_ridge = ridge_objective(&codes, &a, &ridge, lambda);
        assert!(
            obj_ridge <= obj_means * (1.0 + 1e-9),
            "case {case}: ridge {obj_ridge} worse than means {obj_means}"
        );

        let g = build_g(&codes);
        let gp = g.matmul(ridge.matrix()).unwrap();
        let mut resid_data = Vec::with_capacity(n * d);
        for r in 0..n {
            for j in 0..d {
                resid_data.push(a.get(r, j) - gp.get(r, j));
            }
        }
        let resid = DenseMatrix::new(n, d, resid_data).unwrap();
        let grad = g.transposed().matmul(&resid).unwrap();
        let mut err = 0.0f64;
        for (i, &gv) in grad.data().iter().enumerate() {
            let diff = gv as f64 - lambda * ridge.matrix().data()[i] as f64;
            err += diff * diff;
        }
        let gta_norm = g.transposed().matmul(&a).unwrap().frobenius_norm();
        assert!(
            err.sqrt() <= 1e-4 * gta_norm,
            "case {case}: stationarity residual {} vs {gta_norm}",
            err.sqrt()
        );
    }
    println!("[acceptance] criterion 05 PASS - 100 ridge instances optimal and stationary");
}

/// Criterion 6: when test rows are drawn from the learned prototype set and
/// float tables are used, the PQ pipeline reproduces A B within 1e-5
/// relative Frobenius error.
#[test]
fn criterion_06_pq_exact_reconstruction() {
    let mut rng = Xoshiro256::seed_from_u64(0x9C);
    let train = random_matrix(512, 16, &mut rng);
    let p = pq_train(&train, 4, 16, 31).unwrap();
    let mut rows = Vec::new();
    for _ in 0..64 {
        let mut row = vec![0.0f32; 16];
        for (codebook, range) in p.subspaces().iter().enumerate() {
            let proto = &p.row(codebook, rng.next_index(16))[range.clone()];
            row[range.clone()].copy_from_slice(proto);
        }
        rows.extend_from_slice(&row);
    }
    let a = DenseMatrix::new(64, 16, rows).unwrap();
    let b = random_matrix(16, 8, &mut rng);
    let approx = pq_apply(&a, &b, &p, false).unwrap();
    let exact = a.matmul(&b).unwrap();
    let rel = nmse(&approx, &exact).unwrap().sqrt();
    assert!(rel <= 1e-5, "relative Frobenius error {rel}");
    println!("[acceptance] criterion 06 PASS - relative Frobenius error {rel:.2e}");
}

/// Criterion 7: on 100 random table tensors, dequantizing every entry lands
/// within alpha/2 of the original, zero violations.
#[test]
fn criterion_07_table_quantization_round_trip() {
    let mut rng = Xoshiro256::seed_from_u64(0x7AB1E5);
    for case in 0..100 {
        let m = 1 + rng.next_index(6);
        let c = 1 + rng.next_index(8);
        let k = 16;
        let spread = rng.uniform(0.01, 200.0);
        let shift = rng.uniform(-500.0, 500.0);
        let vals: Vec<f64> = (0..m * c * k)
            .map(|_| rng.normal() * spread + shift)
            .collect();
        let t = RealTables::new(m, c, k, vals).unwrap();
        let q = quantize_tables(&t);
        let alpha = q.alpha();
        let inv = (q.log2_inv_scale as f64).exp2();
        for mm in 0..m {
            for cc in 0..c {
                for kk in 0..k {
                    let raw = t.get(mm, cc, kk);
                    let scaled = inv * (raw - q.offsets()[cc]);
                    assert!(
                        scaled <= 255.0 + 1e-9,
                        "case {case}: pooled scale clamps entry ({scaled})"
                    );
                    let recon = alpha * q.get(mm, cc, kk) as f64 + q.offsets()[cc];
                    let err = (recon - raw).abs();
                    assert!(
                        err <= alpha / 2.0 + 1e-9 * raw.abs().max(1.0),
                        "case {case}: |{recon} - {raw}| = {err} > alpha/2 = {}",
                        alpha / 2.0
                    );
                }
            }
        }
    }
    println!("[acceptance] criterion 07 PASS - 100 table tensors round-trip within alpha/2");
}

/// Criterion 8: on the low-rank synthetic task (N=8192, D=64, M=8, rank 8,
/// noise 0.1), NMSE averaged over 5 seeds is non-increasing as C doubles
/// through 4, 8, 16, 32, ends below 0.5, and the sweep finishes inside 60 s.
#[test]
fn criterion_08_end_to_end_nmse_trend() {
    let start = Instant::now();
    let mut means = Vec::new();
    for &c in &[4usize, 8, 16, 32] {
        let mut total = 0.0f64;
        for seed in 0..5u64 {
            let spec = SyntheticTaskSpec::low_rank(8192, 64, 8, 8, 0.1, seed);
            let task = generate_task(&spec).unwrap();
            let cfg = MaddnessConfig {
                codebooks: c,
                ..Default::default()
            };
            let mut model = train(&task.train, &cfg).unwrap();
            model.set_operator(&task.operator).unwrap();
            let approx = model.apply(&task.test).unwrap();
            let exact = task.test.matmul(&task.operator).unwrap();
            total += nmse(&approx, &exact).unwrap();
        }
        means.push(total / 5.0);
    }
    let elapsed = start.elapsed();
    for pair in means.windows(2) {
        assert!(
            pair[1] <= pair[0],
            "mean NMSE rose along the C sweep: {means:?}"
        );
    }
    let last = *means.last().unwrap();
    assert!(last < 0.5, "NMSE at C=32 is {last}");
    assert!(elapsed.as_secs() < 60, "sweep took {elapsed:?}");
    println!(
        "[acceptance] criterion 08 PASS - mean NMSE over C=[4,8,16,32]: \
         [{:.4}, {:.4}, {:.4}, {:.4}] in {elapsed:?}",
        means[0], means[1], means[2], means[3]
    );
}

/// Criterion 9: op counters prove the hash estimator's apply does zero
/// multiplies and exactly 4NC comparisons plus NCM lookups, the exact
/// baseline does NDM multiplies, and lookups/multiplies = C/D exactly.
#[test]
fn criterion_09_zero_multiply_path() {
    let (n, d, m, c) = (1024usize, 64usize, 8usize, 16usize);
    let mut rng = Xoshiro256::seed_from_u64(0x0C);
    let a_train = random_matrix(2048, d, &mut rng);
    let a = random_matrix(n, d, &mut rng);
    let b = random_matrix(d, m, &mut rng);

    let params = EstimatorParams {
        c,
        ..Default::default()
    };
    let mut hash_est = train_estimator(MethodKind::Maddness, &a_train, &params).unwrap();
    hash_est.set_operator(&b).unwrap();
    ops::reset();
    hash_est.apply(&a).unwrap();
    let hash_counts = ops::snapshot();
    assert_eq!(hash_counts.multiplies, 0, "multiplies in the hash path");
    assert_eq!(hash_counts.comparisons, (4 * n * c) as u64);
    assert_eq!(hash_counts.lookups, (n * c * m) as u64);

    let mut exact_est = train_estimator(MethodKind::Exact, &a_train, &params).unwrap();
    exact_est.set_operator(&b).unwrap();
    ops::reset();
    exact_est.apply(&a).unwrap();
    let exact_counts = ops::snapshot();
    assert_eq!(exact_counts.multiplies, (n * d * m) as u64);

    // lookups / multiplies = C / D as exact integer cross-products.
    assert_eq!(
        hash_counts.lookups as u128 * d as u128,
        exact_counts.multiplies as u128 * c as u128
    );
    println!(
        "[acceptance] criterion 09 PASS - 0 multiplies, {} comparisons, {} lookups vs \
         {} exact multiplies (ratio C/D = {}/{})",
        hash_counts.comparisons, hash_counts.lookups, exact_counts.multiplies, c, d
    );
}

/// Criterion 10: the bound calculator reproduces the hand-computed
/// nu(1, 2, 0.5) = 261 ln 2 and decreases monotonically in delta and n.
#[test]
fn criterion_10_bound_calculator() {
    let expect = 261.0 * std::f64::consts::LN_2;
    let got = nu(1, 2, 0.5);
    assert!(
        (got - expect).abs() <= 1e-9 * expect,
        "nu(1,2,0.5) = {got}, want {expect}"
    );
    let base = BoundInputs {
        codebooks: 8,
        dims: 64,
        train_rows: 4096,
        delta: 0.05,
        sigma_a: 25.0,
        b_norm: 3.0,
        lambda: 1.0,
        train_loss: 1.0,
    };
    let mut prev = f64::INFINITY;
    for delta in [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.99] {
        let b = generalization_bound(&BoundInputs { delta, ..base }).unwrap();
        assert!(b < prev, "bound not decreasing in delta at {delta}");
        prev = b;
    }
    prev = f64::INFINITY;
    for train_rows in [16, 256, 4096, 65_536, 1_048_576] {
        let b = generalization_bound(&BoundInputs { train_rows, ..base }).unwrap();
        assert!(b < prev, "bound not decreasing in n at {train_rows}");
        prev = b;
    }
    println!(
        "[acceptance] criterion 10 PASS - nu(1,2,0.5) = {got:.9} = 261 ln 2, monotone in \
         delta and n"
    );
}

/// Criterion 11: 20 random trained models serialize and deserialize to
/// bit-identical integer estimates (and bit-identical apply outputs) on a
/// fixed input.
#[test]
fn criterion_11_serialization_round_trip() {
    let mut rng = Xoshiro256::seed_from_u64(0x5E71A1);
    for case in 0..20 {
        let d = 4 + rng.next_index(12);
        let c = 1 + rng.next_index(d.min(6));
        let n = 64 + rng.next_index(128);
        let m = 1 + rng.next_index(4);
        let a_train = random_matrix(n, d, &mut rng);
        let b = random_matrix(d, m, &mut rng);
        let a = random_matrix(32, d, &mut rng);
        let cfg = MaddnessConfig {
            codebooks: c,
            lambda: if case % 3 == 0 { 0.0 } else { 1.0 },
            u: if case % 2 == 0 { 16 } else { 4 },
            mode: if case % 4 == 0 {
                AggregationMode::ExactUpcast
            } else {
                AggregationMode::Averaging
            },
            debug_float_tables: false,
        };
        let mut model = train(&a_train, &cfg).unwrap();
        model.set_operator(&b).unwrap();
        let restored = deserialize(&serialize(&model)).unwrap();

        let agg_cfg = AggregationConfig {
            u: cfg.u,
            mode: cfg.mode,
        };
        let codes1 = model.encode(&a).unwrap();
        let codes2 = restored.encode(&a).unwrap();
        assert_eq!(codes1.data(), codes2.data(), "case {case}: codes differ");
        let (est1, deb1) =
            aggregate(&codes1, model.quantized_tables().unwrap(), &agg_cfg).unwrap();
        let (est2, deb2) =
            aggregate(&codes2, restored.quantized_tables().unwrap(), &agg_cfg).unwrap();
        assert_eq!(est1, est2, "case {case}: integer estimates differ");
        assert_eq!(deb1, deb2);
        assert_eq!(
            model.apply(&a).unwrap().data(),
            restored.apply(&a).unwrap().data(),
            "case {case}: apply outputs differ"
        );
    }
    println!("[acceptance] criterion 11 PASS - 20 models round-trip bit-identically");
}
