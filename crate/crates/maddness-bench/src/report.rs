//! Benchmark records and their CSV/JSON encodings.
//!
//! The CSV header is fixed for a given trial count:
//! `method,task,n,d,m,c,k,u,lambda,seed,nmse,argmax_agreement,
//! best_time_ns_1..best_time_ns_T,multiplies,comparisons,lookups`.
//! Records that failed (e.g. infeasible configs) keep the column set with
//! empty metric fields; the JSON mirror carries the error text.

use serde::{Deserialize, Serialize};

use crate::config::BenchConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: String,
    pub task: String,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub c: usize,
    pub k: usize,
    pub u: usize,
    pub lambda: f32,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax_agreement: Option<f64>,
    /// Fastest repetition per trial, nanoseconds; one entry per trial.
    pub best_times_ns: Vec<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplies: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparisons: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lookups: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvironmentMeta {
    pub os: String,
    pub arch: String,
    pub crate_version: String,
    pub timestamp_unix_s: u64,
}

impl EnvironmentMeta {
    pub fn capture() -> Self {
        Self {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub environment: EnvironmentMeta,
    pub config: BenchConfig,
    pub records: Vec<BenchRecord>,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Schema-stable CSV: fixed header for the configured trial count, one
    /// row per method x configuration.
    pub fn to_csv(&self) -> String {
        let trials = self.config.trials;
        let mut out = String::new();
        out.push_str("method,task,n,d,m,c,k,u,lambda,seed,nmse,argmax_agreement");
        for t in 1..=trials {
            out.push_str(&format!(",best_time_ns_{t}"));
        }
        out.push_str(",multiplies,comparisons,lookups\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}",
                r.method, r.task, r.n, r.d, r.m, r.c, r.k, r.u, r.lambda, r.seed
            ));
            push_opt(&mut out, &r.nmse.map(|v| format!("{v}")));
            push_opt(&mut out, &r.argmax_agreement.map(|v| format!("{v}")));
            for t in 0..trials {
                push_opt(
                    &mut out,
                    &r.best_times_ns.get(t).map(|v| format!("{v}")),
                );
            }
            push_opt(&mut out, &r.multiplies.map(|v| format!("{v}")));
            push_opt(&mut out, &r.comparisons.map(|v| format!("{v}")));
            push_opt(&mut out, &r.lookups.map(|v| format!("{v}")));
            out.push('\n');
        }
        out
    }
}

fn push_opt(out: &mut String, field: &Option<String>) {
    out.push(',');
    if let Some(v) = field {
        out.push_str(v);
    }
}
