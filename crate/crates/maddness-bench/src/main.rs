use anyhow::{Context, Result};
use clap::Parser;

use maddness_bench::config::{Cli, FormatChoice};
use maddness_bench::runner::run_benchmark;

fn main() -> Result<()> {
    let config = Cli::parse().resolve()?;
    let report = run_benchmark(&config)?;

    for r in &report.records {
        match &r.error {
            Some(err) => eprintln!("{:>12} c={:<3} ERROR: {err}", r.method, r.c),
            None => {
                let best = r.best_times_ns.iter().min().copied().unwrap_or(0);
                let agreement = r
                    .argmax_agreement
                    .map(|a| format!(" agreement={a:.4}"))
                    .unwrap_or_default();
                eprintln!(
                    "{:>12} c={:<3} nmse={:<12.6}{} best={}ns",
                    r.method,
                    r.c,
                    r.nmse.unwrap_or(f64::NAN),
                    agreement,
                    best
                );
            }
        }
    }

    let write_csv = matches!(config.format, FormatChoice::Csv | FormatChoice::Both);
    let write_json = matches!(config.format, FormatChoice::Json | FormatChoice::Both);
    if write_csv {
        let path = config.out.with_extension("csv");
        std::fs::write(&path, report.to_csv())
            .with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    if write_json {
        let path = config.out.with_extension("json");
        std::fs::write(&path, report.to_json()?)
            .with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
