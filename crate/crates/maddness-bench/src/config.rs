//! Benchmark configuration: defaults, JSON config file, and CLI overrides.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use maddness::aggregation::AggregationMode;
use maddness::estimator::MethodKind;
use maddness::synth::SyntheticTaskSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskChoice {
    /// Low-rank-plus-noise regression task.
    Lowrank,
    /// Gaussian-mixture rows with class centers as operator columns.
    Classifier,
}

impl TaskChoice {
    pub fn name(&self) -> &'static str {
        match self {
            TaskChoice::Lowrank => "lowrank",
            TaskChoice::Classifier => "classifier",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeChoice {
    Averaging,
    ExactUpcast,
}

impl From<ModeChoice> for AggregationMode {
    fn from(m: ModeChoice) -> Self {
        match m {
            ModeChoice::Averaging => AggregationMode::Averaging,
            ModeChoice::ExactUpcast => AggregationMode::ExactUpcast,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatChoice {
    Csv,
    Json,
    Both,
}

/// Fully resolved benchmark configuration. Also the schema of the optional
/// JSON config file; flags override file values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub task: TaskChoice,
    /// Training rows; the test matrix gets one fifth of them, rounded up.
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub rank: usize,
    pub noise: f64,
    pub classes: usize,
    pub methods: Vec<String>,
    pub c_list: Vec<usize>,
    pub seed: u64,
    pub trials: usize,
    pub reps: usize,
    pub lambda: f32,
    pub u: usize,
    pub mode: ModeChoice,
    pub debug_float_tables: bool,
    /// Output path base: `<out>.csv` and/or `<out>.json`.
    pub out: PathBuf,
    pub format: FormatChoice,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            task: TaskChoice::Lowrank,
            n: 8192,
            d: 64,
            m: 8,
            rank: 8,
            noise: 0.1,
            classes: 10,
            methods: vec![
                "exact".into(),
                "maddness".into(),
                "maddness-pq".into(),
                "pq".into(),
                "pca".into(),
            ],
            c_list: vec![4, 8, 16, 32],
            seed: 0,
            trials: 5,
            reps: 20,
            lambda: 1.0,
            u: 16,
            mode: ModeChoice::Averaging,
            debug_float_tables: false,
            out: PathBuf::from("bench_report"),
            format: FormatChoice::Both,
        }
    }
}

impl BenchConfig {
    /// Parse method names, rejecting unknown ones up front.
    pub fn method_kinds(&self) -> Result<Vec<MethodKind>> {
        if self.methods.is_empty() {
            bail!("no methods selected");
        }
        self.methods
            .iter()
            .map(|name| {
                name.parse::<MethodKind>()
                    .with_context(|| format!("in --methods list: '{name}'"))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.method_kinds()?;
        if self.trials == 0 || self.reps == 0 {
            bail!("trials and reps must be at least 1");
        }
        if self.c_list.is_empty() {
            bail!("c-list must not be empty");
        }
        if self.task == TaskChoice::Classifier && self.m != self.classes {
            bail!(
                "classifier task requires m == classes (got m = {}, classes = {}); \
                 omit --m to let it default to --classes",
                self.m,
                self.classes
            );
        }
        Ok(())
    }

    pub fn task_spec(&self) -> SyntheticTaskSpec {
        match self.task {
            TaskChoice::Lowrank => {
                SyntheticTaskSpec::low_rank(self.n, self.d, self.m, self.rank, self.noise, self.seed)
            }
            TaskChoice::Classifier => {
                SyntheticTaskSpec::classifier(self.n, self.d, self.classes, self.noise, self.seed)
            }
        }
    }
}

/// Command-line flags; unset flags fall back to the config file, then to
/// defaults.
#[derive(Debug, Parser)]
#[command(
    name = "maddness-bench",
    about = "Benchmark approximate matrix multiplication estimators on synthetic tasks"
)]
pub struct Cli {
    /// JSON config file with the same fields as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub task: Option<TaskChoice>,

    /// Training rows.
    #[arg(long)]
    pub n: Option<usize>,

    /// Input columns D.
    #[arg(long)]
    pub d: Option<usize>,

    /// Operator columns M (classifier task: must equal --classes).
    #[arg(long)]
    pub m: Option<usize>,

    /// Rank of the low-rank task.
    #[arg(long)]
    pub rank: Option<usize>,

    /// Noise scale of the synthetic generator.
    #[arg(long)]
    pub noise: Option<f64>,

    /// Class count for the classifier task.
    #[arg(long)]
    pub classes: Option<usize>,

    /// Comma-separated method list: exact, maddness, maddness-pq, pq, pca.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,

    /// Comma-separated codebook counts to sweep (PCA: component counts).
    #[arg(long = "c-list", value_delimiter = ',')]
    pub c_list: Option<Vec<usize>>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Timing trials; each reports its fastest repetition.
    #[arg(long)]
    pub trials: Option<usize>,

    /// Repetitions per trial.
    #[arg(long)]
    pub reps: Option<usize>,

    /// Ridge penalty (0 disables prototype optimization for maddness).
    #[arg(long)]
    pub lambda: Option<f32>,

    /// Averaging block size (power of two).
    #[arg(long)]
    pub u: Option<usize>,

    #[arg(long, value_enum)]
    pub mode: Option<ModeChoice>,

    /// Use float tables and exact summation (isolates hash/prototype error).
    #[arg(long, default_value_t = false)]
    pub debug_float_tables: bool,

    /// Output path base: writes <out>.csv and/or <out>.json.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<FormatChoice>,
}

impl Cli {
    /// Resolve the final configuration: defaults, then the config file,
    /// then explicit flags.
    pub fn resolve(self) -> Result<BenchConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config file {}", path.display()))?;
                serde_json::from_str::<BenchConfig>(&text)
                    .with_context(|| format!("parsing config file {}", path.display()))?
            }
            None => BenchConfig::default(),
        };
        let m_explicit = self.m.is_some();
        if let Some(v) = self.task {
            cfg.task = v;
        }
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.d {
            cfg.d = v;
        }
        if let Some(v) = self.m {
            cfg.m = v;
        }
        if let Some(v) = self.rank {
            cfg.rank = v;
        }
        if let Some(v) = self.noise {
            cfg.noise = v;
        }
        if let Some(v) = self.classes {
            cfg.classes = v;
        }
        if let Some(v) = self.methods {
            cfg.methods = v;
        }
        if let Some(v) = self.c_list {
            cfg.c_list = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.reps {
            cfg.reps = v;
        }
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.u {
            cfg.u = v;
        }
        if let Some(v) = self.mode {
            cfg.mode = v;
        }
        if self.debug_float_tables {
            cfg.debug_float_tables = true;
        }
        if let Some(v) = self.out {
            cfg.out = v;
        }
        if let Some(v) = self.format {
            cfg.format = v;
        }
        // The classifier operator is one column per class.
        if cfg.task == TaskChoice::Classifier && !m_explicit {
            cfg.m = cfg.classes;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    #[test]
    fn defaults_validate() {
        BenchConfig::default().validate().unwrap();
    }

    #[test]
    fn flags_override_defaults() {
        let cli = Cli::parse_from([
            "maddness-bench",
            "--n",
            "100",
            "--d",
            "16",
            "--methods",
            "exact,maddness",
            "--c-list",
            "2,4",
            "--seed",
            "9",
        ]);
        let cfg = cli.resolve().unwrap();
        assert_eq!(cfg.n, 100);
        assert_eq!(cfg.d, 16);
        assert_eq!(cfg.methods, vec!["exact", "maddness"]);
        assert_eq!(cfg.c_list, vec![2, 4]);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.trials, 5, "unset flag keeps default");
    }

    #[test]
    fn unknown_method_rejected() {
        let cli = Cli::parse_from(["maddness-bench", "--methods", "sketchy"]);
        assert!(cli.resolve().is_err());
    }

    #[test]
    fn classifier_task_defaults_m_to_classes() {
        let cli = Cli::parse_from(["maddness-bench", "--task", "classifier", "--classes", "7"]);
        let cfg = cli.resolve().unwrap();
        assert_eq!(cfg.m, 7);
        let bad = Cli::parse_from([
            "maddness-bench",
            "--task",
            "classifier",
            "--classes",
            "7",
            "--m",
            "3",
        ]);
        assert!(bad.resolve().is_err());
    }

    #[test]
    fn config_file_round_trips_through_serde() {
        let cfg = BenchConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: BenchConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.n, cfg.n);
        assert_eq!(back.methods, cfg.methods);
    }
}
