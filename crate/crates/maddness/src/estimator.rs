//! Uniform train / set-operator / apply lifecycle over every estimator the
//! benchmark harness compares: exact multiplication, the hash estimator with
//! and without prototype optimization, product quantization, and PCA.

use std::fmt;
use std::str::FromStr;

use crate::aggregation::{
    aggregate, aggregate_real, dequantize, AggregationConfig, AggregationMode,
};
use crate::error::{MaddnessError, Result};
use crate::matrix::DenseMatrix;
use crate::model::{train, MaddnessConfig, MaddnessModel};
use crate::pca::{pca_train, PcaProjection};
use crate::pq::{pq_encode, pq_train};
use crate::prototypes::PrototypeMatrix;
use crate::tables::{build_tables, quantize_tables, QuantizedTables, RealTables};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodKind {
    Exact,
    Maddness,
    /// Hash estimator with raw bucket-mean prototypes (no ridge step).
    MaddnessPq,
    Pq,
    Pca,
}

impl MethodKind {
    pub const ALL: [MethodKind; 5] = [
        MethodKind::Exact,
        MethodKind::Maddness,
        MethodKind::MaddnessPq,
        MethodKind::Pq,
        MethodKind::Pca,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MethodKind::Exact => "exact",
            MethodKind::Maddness => "maddness",
            MethodKind::MaddnessPq => "maddness-pq",
            MethodKind::Pq => "pq",
            MethodKind::Pca => "pca",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodKind {
    type Err = MaddnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(MethodKind::Exact),
            "maddness" => Ok(MethodKind::Maddness),
            "maddness-pq" | "maddness_pq" => Ok(MethodKind::MaddnessPq),
            "pq" => Ok(MethodKind::Pq),
            "pca" => Ok(MethodKind::Pca),
            other => Err(MaddnessError::InvalidArgument(format!(
                "unknown method name '{other}'"
            ))),
        }
    }
}

/// Knobs shared across methods. `c` is the codebook count for the
/// quantization methods and the component count for PCA; `seed` feeds the
/// k-means initialization of the PQ baseline.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorParams {
    pub c: usize,
    pub lambda: f32,
    pub u: usize,
    pub mode: AggregationMode,
    pub debug_float_tables: bool,
    pub seed: u64,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        Self {
            c: 16,
            lambda: 1.0,
            u: 16,
            mode: AggregationMode::Averaging,
            debug_float_tables: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Estimator {
    Exact {
        operator: Option<DenseMatrix>,
    },
    Maddness {
        model: MaddnessModel,
    },
    Pq {
        prototypes: PrototypeMatrix,
        debug_float_tables: bool,
        tables: Option<QuantizedTables>,
        real_tables: Option<RealTables>,
    },
    Pca {
        projection: PcaProjection,
        projected_operator: Option<DenseMatrix>,
    },
}

/// Train an estimator of the given kind on the training matrix.
pub fn train_estimator(
    kind: MethodKind,
    a_train: &DenseMatrix,
    params: &EstimatorParams,
) -> Result<Estimator> {
    match kind {
        MethodKind::Exact => Ok(Estimator::Exact { operator: None }),
        MethodKind::Maddness | MethodKind::MaddnessPq => {
            let config = MaddnessConfig {
                codebooks: params.c,
                lambda: if kind == MethodKind::MaddnessPq {
                    0.0
                } else {
                    params.lambda
                },
                u: params.u,
                mode: params.mode,
                debug_float_tables: params.debug_float_tables,
            };
            Ok(Estimator::Maddness {
                model: train(a_train, &config)?,
            })
        }
        MethodKind::Pq => Ok(Estimator::Pq {
            prototypes: pq_train(a_train, params.c, crate::model::NUM_PROTOTYPES, params.seed)?,
            debug_float_tables: params.debug_float_tables,
            tables: None,
            real_tables: None,
        }),
        MethodKind::Pca => Ok(Estimator::Pca {
            projection: pca_train(a_train, params.c)?,
            projected_operator: None,
        }),
    }
}

impl Estimator {
    pub fn kind(&self) -> MethodKind {
        match self {
            Estimator::Exact { .. } => MethodKind::Exact,
            Estimator::Maddness { model } => {
                if model.config().lambda > 0.0 {
                    MethodKind::Maddness
                } else {
                    MethodKind::MaddnessPq
                }
            }
            Estimator::Pq { .. } => MethodKind::Pq,
            Estimator::Pca { .. } => MethodKind::Pca,
        }
    }

    /// Precompute everything that depends only on the operator.
    pub fn set_operator(&mut self, b: &DenseMatrix) -> Result<()> {
        match self {
            Estimator::Exact { operator } => {
                *operator = Some(b.clone());
                Ok(())
            }
            Estimator::Maddness { model } => model.set_operator(b),
            Estimator::Pq {
                prototypes,
                debug_float_tables,
                tables,
                real_tables,
            } => {
                let real = build_tables(b, prototypes)?;
                *tables = Some(quantize_tables(&real));
                *real_tables = debug_float_tables.then_some(real);
                Ok(())
            }
            Estimator::Pca {
                projection,
                projected_operator,
            } => {
                *projected_operator = Some(projection.project_operator(b)?);
                Ok(())
            }
        }
    }

    /// Estimate `a @ b` for the operator given to `set_operator`.
    pub fn apply(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            Estimator::Exact { operator } => {
                let b = operator.as_ref().ok_or(MaddnessError::OperatorNotSet)?;
                a.matmul(b)
            }
            Estimator::Maddness { model } => model.apply(a),
            Estimator::Pq {
                prototypes,
                debug_float_tables,
                tables,
                real_tables,
            } => {
                let codes = pq_encode(a, prototypes)?;
                if *debug_float_tables {
                    let real = real_tables.as_ref().ok_or(MaddnessError::OperatorNotSet)?;
                    return aggregate_real(&codes, real);
                }
                let qt = tables.as_ref().ok_or(MaddnessError::OperatorNotSet)?;
                let cfg = AggregationConfig {
                    u: 1,
                    mode: AggregationMode::ExactUpcast,
                };
                let (est, debias) = aggregate(&codes, qt, &cfg)?;
                Ok(dequantize(&est, a.rows(), qt.m, qt, debias))
            }
            Estimator::Pca {
                projection,
                projected_operator,
            } => {
                let vtb = projected_operator
                    .as_ref()
                    .ok_or(MaddnessError::OperatorNotSet)?;
                projection.apply_projected(a, vtb)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::nmse;
    use crate::ops;
    use crate::rng::Xoshiro256;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = Xoshiro256::seed_from_u64(seed);
        DenseMatrix::new(rows, cols, (0..rows * cols).map(|_| rng.normal() as f32).collect())
            .unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for kind in MethodKind::ALL {
            assert_eq!(kind.name().parse::<MethodKind>().unwrap(), kind);
        }
        assert!("bogus".parse::<MethodKind>().is_err());
    }

    #[test]
    fn every_method_runs_the_lifecycle() {
        let a_train = random_matrix(200, 8, 1);
        let a = random_matrix(40, 8, 2);
        let b = random_matrix(8, 3, 3);
        let exact = a.matmul(&b).unwrap();
        let params = EstimatorParams {
            c: 4,
            ..Default::default()
        };
        for kind in MethodKind::ALL {
            let mut est = train_estimator(kind, &a_train, &params).unwrap();
            assert!(matches!(
                est.apply(&a),
                Err(MaddnessError::OperatorNotSet)
            ));
            est.set_operator(&b).unwrap();
            let out = est.apply(&a).unwrap();
            assert_eq!((out.rows(), out.cols()), (40, 3));
            let err = nmse(&out, &exact).unwrap();
            if kind == MethodKind::Exact {
                assert_eq!(err, 0.0);
            } else {
                assert!(err < 2.0, "{kind}: nmse {err}");
            }
        }
    }

    #[test]
    fn exact_estimator_counts_multiplies_only() {
        let a_train = random_matrix(10, 4, 4);
        let a = random_matrix(6, 4, 5);
        let b = random_matrix(4, 2, 6);
        let mut est = train_estimator(MethodKind::Exact, &a_train, &EstimatorParams::default())
            .unwrap();
        est.set_operator(&b).unwrap();
        ops::reset();
        est.apply(&a).unwrap();
        let counts = ops::snapshot();
        assert_eq!(counts.multiplies, 6 * 4 * 2);
        assert_eq!(counts.comparisons, 0);
        assert_eq!(counts.lookups, 0);
    }

    #[test]
    fn maddness_pq_uses_bucket_means() {
        let a_train = random_matrix(100, 8, 7);
        let params = EstimatorParams {
            c: 2,
            ..Default::default()
        };
        let est = train_estimator(MethodKind::MaddnessPq, &a_train, &params).unwrap();
        assert_eq!(est.kind(), MethodKind::MaddnessPq);
        let Estimator::Maddness { model } = &est else {
            panic!("wrong variant");
        };
        // Bucket means stay inside their subspace.
        for (codebook, range) in model.prototypes().subspaces().iter().enumerate() {
            for code in 0..16 {
                for (j, &v) in model.prototypes().row(codebook, code).iter().enumerate() {
                    if !range.contains(&j) {
                        assert_eq!(v, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn pq_estimator_matches_pq_apply_quantized() {
        let a_train = random_matrix(150, 6, 8);
        let a = random_matrix(30, 6, 9);
        let b = random_matrix(6, 2, 10);
        let params = EstimatorParams {
            c: 3,
            seed: 42,
            ..Default::default()
        };
        let mut est = train_estimator(MethodKind::Pq, &a_train, &params).unwrap();
        est.set_operator(&b).unwrap();
        let out = est.apply(&a).unwrap();
        let p = pq_train(&a_train, 3, 16, 42).unwrap();
        let reference = crate::pq::pq_apply(&a, &b, &p, true).unwrap();
        assert_eq!(out.data(), reference.data());
    }

    #[test]
    fn pca_estimator_uses_component_count() {
        let a_train = random_matrix(60, 8, 11);
        let a = random_matrix(20, 8, 12);
        let b = random_matrix(8, 2, 13);
        let params = EstimatorParams {
            c: 8,
            ..Default::default()
        };
        let mut est = train_estimator(MethodKind::Pca, &a_train, &params).unwrap();
        est.set_operator(&b).unwrap();
        let out = est.apply(&a).unwrap();
        let exact = a.matmul(&b).unwrap();
        assert!(nmse(&out, &exact).unwrap() < 1e-6);
    }
}
