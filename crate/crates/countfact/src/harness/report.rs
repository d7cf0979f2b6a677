//! Aggregate report types and writers (JSON, CSV, console table).

use crate::Result;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Mean and standard error of a metric over replications.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub se: f64,
}

/// Aggregated metrics of one (model, initializer) combination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateCell {
    pub model: String,
    pub initializer: String,
    pub mse_w: MetricSummary,
    pub mse_h: MetricSummary,
    pub mse_s: MetricSummary,
    pub mean_iterations: f64,
    pub failures: usize,
}

impl AggregateCell {
    pub fn label(&self) -> String {
        format!("{}:{}", self.model, self.initializer)
    }
}

/// One dispersion regime's aggregated results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeBlock {
    pub regime: String,
    pub replications: usize,
    pub cells: Vec<AggregateCell>,
}

/// The full benchmark report: one block per regime, cells in config order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub master_seed: u64,
    pub replications: usize,
    pub regimes: Vec<RegimeBlock>,
}

const METRICS: [&str; 3] = ["mse_w", "mse_h", "mse_s"];

fn metric_of(cell: &AggregateCell, name: &str) -> MetricSummary {
    match name {
        "mse_w" => cell.mse_w,
        "mse_h" => cell.mse_h,
        "mse_s" => cell.mse_s,
        _ => unreachable!("unknown metric {name}"),
    }
}

/// Writes the report as pretty-printed JSON with a trailing newline. Output
/// is byte-deterministic for a given report.
pub fn write_report_json(report: &AggregateReport, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes the flat CSV table: one row per regime × metric, one column per
/// (model, initializer) mean, full precision.
pub fn write_table1_csv(report: &AggregateReport, path: &Path) -> Result<()> {
    let mut out = String::from("regime,metric");
    if let Some(first) = report.regimes.first() {
        for cell in &first.cells {
            out.push(',');
            out.push_str(&cell.label());
        }
    }
    out.push('\n');
    for block in &report.regimes {
        for metric in METRICS {
            let _ = write!(out, "{},{metric}", block.regime);
            for cell in &block.cells {
                let _ = write!(out, ",{:.16e}", metric_of(cell, metric).mean);
            }
            out.push('\n');
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Renders a human-readable summary table of means (standard errors in
/// parentheses), one row per regime × metric.
pub fn render_summary(report: &AggregateReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "benchmark: I={} J={} K={} replications={} master_seed={}",
        report.i, report.j, report.k, report.replications, report.master_seed
    );
    let labels: Vec<String> = report
        .regimes
        .first()
        .map(|b| b.cells.iter().map(AggregateCell::label).collect())
        .unwrap_or_default();
    let _ = write!(out, "{:<16} {:<6}", "regime", "metric");
    for label in &labels {
        let _ = write!(out, " {label:>18}");
    }
    out.push('\n');
    for block in &report.regimes {
        for metric in METRICS {
            let _ = write!(out, "{:<16} {:<6}", block.regime, metric);
            for cell in &block.cells {
                let m = metric_of(cell, metric);
                let _ = write!(out, " {:>18}", format!("{:.3} ({:.3})", m.mean, m.se));
            }
            out.push('\n');
        }
        let failed: usize = block.cells.iter().map(|c| c.failures).sum();
        if failed > 0 {
            let _ = writeln!(out, "{:<16} {failed} failed fits", block.regime);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> AggregateReport {
        let cell = |model: &str, init: &str, base: f64| AggregateCell {
            model: model.to_string(),
            initializer: init.to_string(),
            mse_w: MetricSummary { mean: base, se: 0.01 },
            mse_h: MetricSummary { mean: base + 0.1, se: 0.02 },
            mse_s: MetricSummary { mean: base + 0.2, se: 0.03 },
            mean_iterations: 120.0,
            failures: 0,
        };
        AggregateReport {
            i: 10,
            j: 15,
            k: 2,
            master_seed: 7,
            replications: 3,
            regimes: vec![
                RegimeBlock {
                    regime: "constant:0".into(),
                    replications: 3,
                    cells: vec![cell("pmf", "nndsvd", 0.5), cell("gpmf", "nndsvd", 0.4)],
                },
                RegimeBlock {
                    regime: "heterogeneous".into(),
                    replications: 3,
                    cells: vec![cell("pmf", "nndsvd", 0.9), cell("gpmf", "nndsvd", 0.6)],
                },
            ],
        }
    }

    #[test]
    fn json_round_trips_and_is_deterministic() {
        let report = sample_report();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        write_report_json(&report, &path).unwrap();
        let first = fs::read(&path).unwrap();
        write_report_json(&report, &path).unwrap();
        assert_eq!(first, fs::read(&path).unwrap());
        assert!(first.ends_with(b"\n"));
        let back: AggregateReport = serde_json::from_slice(&first).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn csv_has_one_row_per_regime_metric() {
        let report = sample_report();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table1.csv");
        write_table1_csv(&report, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert_eq!(lines[0], "regime,metric,pmf:nndsvd,gpmf:nndsvd");
        assert!(lines[1].starts_with("constant:0,mse_w,"));
        assert!(lines[6].starts_with("heterogeneous,mse_s,"));
        // Full-precision values parse back exactly.
        let v: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(v, 0.5);
    }

    #[test]
    fn summary_mentions_every_regime_and_cell() {
        let report = sample_report();
        let text = render_summary(&report);
        for needle in ["constant:0", "heterogeneous", "pmf:nndsvd", "gpmf:nndsvd", "mse_s"] {
            assert!(text.contains(needle), "missing {needle} in:\n{text}");
        }
    }
}
