//! Batch front end: configuration files, trace generation, experiment
//! execution and CSV reports.

pub mod config;
pub mod manifest;
pub mod report;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::run_experiment;
use crate::traces::{apply_sla, generate, read_trace_csv, write_trace_csv};
use crate::TraceSlot;

pub use config::{Combination, HarnessConfig, RawConfig};
pub use manifest::{config_hash, RunManifest, TraceSource};
pub use report::{read_average_columns, report_csv, summary_csv, write_atomic, REPORT_HEADER};

/// Generates the configured trace and writes it as CSV; returns the row count.
pub fn cli_generate(config: &Path, out: &Path, seed: Option<u64>) -> Result<usize> {
    let cfg = HarnessConfig::load(config, seed)?;
    let slots = generate(&cfg.trace)?;
    let mut buf = Vec::new();
    write_trace_csv(&slots, &mut buf)?;
    write_atomic(out, &buf)?;
    Ok(slots.len())
}

/// Final figures of one combination, for the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub name: String,
    pub path: PathBuf,
    pub final_avg_regret_static: f64,
    pub final_avg_regret_dynamic: f64,
    pub bound_holds: bool,
    pub oracle_assisted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub runs: Vec<RunSummary>,
    pub manifest: RunManifest,
}

/// Runs every combination on the same trace and writes `<name>.csv` per
/// combination plus `manifest.txt` into `out_dir`.
pub fn cli_run(config: &Path, trace_csv: Option<&Path>, out_dir: &Path, seed: Option<u64>) -> Result<RunOutcome> {
    let cfg = HarnessConfig::load(config, seed)?;
    let (trace, source) = match trace_csv {
        Some(p) => (read_trace_csv(p)?, TraceSource::Csv(p.to_path_buf())),
        None => (generate(&cfg.trace)?, TraceSource::Generated { seed: cfg.trace.seed }),
    };
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let results: Vec<Result<(RunSummary, Vec<u8>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .combinations
            .iter()
            .map(|c| {
                let trace = &trace;
                let seed = cfg.trace.seed;
                scope.spawn(move || run_combination(c, trace, seed, out_dir))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Config("combination worker panicked".into()))))
            .collect()
    });

    let mut runs = Vec::new();
    for res in results {
        let (summary, bytes) = res?;
        write_atomic(&summary.path, &bytes)?;
        runs.push(summary);
    }
    let manifest = RunManifest::new(&cfg, source, runs.iter().map(|r| r.path.clone()).collect());
    write_atomic(&out_dir.join("manifest.txt"), manifest.render().as_bytes())?;
    Ok(RunOutcome { runs, manifest })
}

fn run_combination(c: &Combination, trace: &[TraceSlot], seed: u64, out_dir: &Path) -> Result<(RunSummary, Vec<u8>)> {
    let report = match c.sla_override {
        Some(sla) => {
            let mut local = trace.to_vec();
            apply_sla(&mut local, sla, seed)?;
            run_experiment(&c.experiment, &local)
        }
        None => run_experiment(&c.experiment, trace),
    }
    .map_err(|e| Error::Config(format!("combination {}: {e}", c.name)))?;
    let bytes = report_csv(&report)?;
    let last = report.last().expect("non-empty horizon");
    Ok((
        RunSummary {
            name: c.name.clone(),
            path: out_dir.join(format!("{}.csv", c.name)),
            final_avg_regret_static: last.avg_regret_static,
            final_avg_regret_dynamic: last.avg_regret_dynamic,
            bound_holds: report.bound_holds(),
            oracle_assisted: report.oracle_assisted,
        },
        bytes,
    ))
}

/// Joins the average-regret columns of `reports` into one CSV at `out`;
/// returns the number of rows.
pub fn cli_report(reports: &[PathBuf], out: &Path) -> Result<usize> {
    let cols = reports.iter().map(|p| read_average_columns(p)).collect::<Result<Vec<_>>>()?;
    let bytes = summary_csv(&cols)?;
    write_atomic(out, &bytes)?;
    Ok(cols[0].avg_static.len())
}

pub fn format_summary(runs: &[RunSummary]) -> String {
    let width = runs.iter().map(|r| r.name.len()).max().unwrap_or(4).max(11);
    let mut out = format!("{:<width$}  {:>14}  {:>14}  {:>5}\n", "combination", "R_T/T static", "R_T/T dynamic", "bound");
    for r in runs {
        let tag = if r.oracle_assisted { " (oracle-assisted)" } else { "" };
        out.push_str(&format!(
            "{:<width$}  {:>14.6e}  {:>14.6e}  {:>5}{tag}\n",
            r.name,
            r.final_avg_regret_static,
            r.final_avg_regret_dynamic,
            if r.bound_holds { "ok" } else { "over" }
        ));
    }
    out
}
