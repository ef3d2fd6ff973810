//! Synthetic matrix-multiply tasks used by the benchmark harness.
//!
//! Two generators: a low-rank-plus-noise regression task and a Gaussian
//! mixture whose operator columns are the class centers, so row argmaxes act
//! as a linear classifier. Both are pure functions of their spec: the same
//! seed yields bit-identical matrices.

use crate::error::{MaddnessError, Result};
use crate::matrix::DenseMatrix;
use crate::rng::Xoshiro256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    /// Rows are z R + noise with z standard normal of length `rank`.
    LowRankPlusNoise,
    /// Rows are a class center plus noise; operator columns are the centers.
    GaussianMixtureClassifier,
}

#[derive(Debug, Clone)]
pub struct SyntheticTaskSpec {
    pub kind: TaskKind,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub rank: usize,
    pub noise_scale: f64,
    pub class_count: usize,
    pub seed: u64,
}

impl SyntheticTaskSpec {
    pub fn low_rank(n: usize, d: usize, m: usize, rank: usize, noise_scale: f64, seed: u64) -> Self {
        Self {
            kind: TaskKind::LowRankPlusNoise,
            n,
            d,
            m,
            rank,
            noise_scale,
            class_count: 0,
            seed,
        }
    }

    pub fn classifier(n: usize, d: usize, classes: usize, noise_scale: f64, seed: u64) -> Self {
        Self {
            kind: TaskKind::GaussianMixtureClassifier,
            n,
            d,
            m: classes,
            rank: 0,
            noise_scale,
            class_count: classes,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.m == 0 {
            return Err(MaddnessError::InvalidArgument(
                "task dimensions must be positive".into(),
            ));
        }
        match self.kind {
            TaskKind::LowRankPlusNoise => {
                if self.rank == 0 || self.rank > self.n.min(self.d) {
                    return Err(MaddnessError::InvalidArgument(format!(
                        "rank {} must be in 1..=min(n, d) = {}",
                        self.rank,
                        self.n.min(self.d)
                    )));
                }
            }
            TaskKind::GaussianMixtureClassifier => {
                if self.class_count < 2 {
                    return Err(MaddnessError::InvalidArgument(
                        "classifier task needs at least 2 classes".into(),
                    ));
                }
                if self.m != self.class_count {
                    return Err(MaddnessError::InvalidArgument(format!(
                        "classifier task requires m == class_count, got m={} classes={}",
                        self.m, self.class_count
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A generated task: training matrix, held-out test matrix drawn from the
/// same distribution, the operator, and class labels for the test rows when
/// the task is a classifier.
#[derive(Debug, Clone)]
pub struct GeneratedTask {
    pub train: DenseMatrix,
    pub test: DenseMatrix,
    pub operator: DenseMatrix,
    pub labels: Option<Vec<usize>>,
}

/// Test set size: one fifth of the training rows, rounded up.
pub fn test_rows_for(n: usize) -> usize {
    n.div_ceil(5)
}

pub fn generate_task(spec: &SyntheticTaskSpec) -> Result<GeneratedTask> {
    spec.validate()?;
    let mut rng = Xoshiro256::seed_from_u64(spec.seed);
    let n_test = test_rows_for(spec.n);
    match spec.kind {
        TaskKind::LowRankPlusNoise => {
            // Shared structure first, then train rows, test rows, operator.
            let factor: Vec<f64> = (0..spec.rank * spec.d).map(|_| rng.normal()).collect();
            let sample_rows = |rows: usize, rng: &mut Xoshiro256| -> DenseMatrix {
                let mut data = Vec::with_capacity(rows * spec.d);
                for _ in 0..rows {
                    let z: Vec<f64> = (0..spec.rank).map(|_| rng.normal()).collect();
                    for j in 0..spec.d {
                        let mut v = 0.0f64;
                        for (r, &zr) in z.iter().enumerate() {
                            v += zr * factor[r * spec.d + j];
                        }
                        v += spec.noise_scale * rng.normal();
                        data.push(v as f32);
                    }
                }
                DenseMatrix::from_raw(rows, spec.d, data)
            };
            let train = sample_rows(spec.n, &mut rng);
            let test = sample_rows(n_test, &mut rng);
            let operator = {
                let data: Vec<f32> = (0..spec.d * spec.m).map(|_| rng.normal() as f32).collect();
                DenseMatrix::from_raw(spec.d, spec.m, data)
            };
            Ok(GeneratedTask {
                train,
                test,
                operator,
                labels: None,
            })
        }
        TaskKind::GaussianMixtureClassifier => {
            let k = spec.class_count;
            let centers: Vec<f64> = (0..k * spec.d).map(|_| rng.normal()).collect();
            let sample_rows =
                |rows: usize, rng: &mut Xoshiro256| -> (DenseMatrix, Vec<usize>) {
                    let mut data = Vec::with_capacity(rows * spec.d);
                    let mut labels = Vec::with_capacity(rows);
                    for _ in 0..rows {
                        let class = rng.next_index(k);
                        labels.push(class);
                        for j in 0..spec.d {
                            let v = centers[class * spec.d + j] + spec.noise_scale * rng.normal();
                            data.push(v as f32);
                        }
                    }
                    (DenseMatrix::from_raw(rows, spec.d, data), labels)
                };
            let (train, _) = sample_rows(spec.n, &mut rng);
            let (test, labels) = sample_rows(n_test, &mut rng);
            // Operator column per class: the class center.
            let mut op = DenseMatrix::zeros(spec.d, k);
            for class in 0..k {
                for j in 0..spec.d {
                    op.set(j, class, centers[class * spec.d + j] as f32);
                }
            }
            Ok(GeneratedTask {
                train,
                test,
                operator: op,
                labels: Some(labels),
            })
        }
    }
}
