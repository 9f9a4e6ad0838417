//! Per-run rows, mean ± std aggregation, and the CSV / text renderings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizers::Method;

pub const RUNS_FILE: &str = "runs.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const PROVENANCE_FILE: &str = "provenance.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// One `(size, dim, method, seed)` grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub size: usize,
    pub dim: usize,
    pub method: Method,
    pub seed: usize,
    pub status: RunStatus,
    pub test_spearman: Option<f64>,
    pub start_score: Option<f64>,
    pub best_score: Option<f64>,
    pub improvement: Option<f64>,
    pub nn_id: Option<String>,
    pub nn_hamming: Option<usize>,
    pub nn_true_fitness: Option<f64>,
    pub nn_percentile: Option<f64>,
    pub evaluations: Option<u64>,
    pub error: Option<String>,
}

impl RunRow {
    pub fn failed(size: usize, dim: usize, method: Method, seed: usize, error: String) -> Self {
        RunRow {
            size,
            dim,
            method,
            seed,
            status: RunStatus::Failed,
            test_spearman: None,
            start_score: None,
            best_score: None,
            improvement: None,
            nn_id: None,
            nn_hamming: None,
            nn_true_fitness: None,
            nn_percentile: None,
            evaluations: None,
            error: Some(error),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation (`n - 1` denominator; 0 for a single value).
    /// `None` for an empty slice.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(MeanStd { mean, std })
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub size: usize,
    pub dim: usize,
    pub method: Method,
    pub runs: usize,
    pub failures: usize,
    pub test_spearman_mean: f64,
    pub test_spearman_std: f64,
    pub improvement_mean: f64,
    pub improvement_std: f64,
    pub nn_true_fitness_mean: f64,
    pub nn_true_fitness_std: f64,
    pub nn_percentile_mean: f64,
    pub nn_percentile_std: f64,
    pub nn_hamming_mean: f64,
}

/// Groups successful rows by `(size, dim, method)`; groups without any success are skipped.
pub fn aggregate(rows: &[RunRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(usize, usize, Method), (Vec<&RunRow>, usize)> = BTreeMap::new();
    for r in rows {
        let g = groups.entry((r.size, r.dim, r.method)).or_default();
        if r.is_ok() {
            g.0.push(r);
        } else {
            g.1 += 1;
        }
    }
    groups
        .into_iter()
        .filter(|(_, (ok, _))| !ok.is_empty())
        .map(|((size, dim, method), (ok, failures))| {
            let stat = |f: fn(&RunRow) -> Option<f64>| {
                let v: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
                MeanStd::of(&v).unwrap_or(MeanStd {
                    mean: f64::NAN,
                    std: f64::NAN,
                })
            };
            let rho = stat(|r| r.test_spearman);
            let imp = stat(|r| r.improvement);
            let fit = stat(|r| r.nn_true_fitness);
            let pct = stat(|r| r.nn_percentile);
            let ham = stat(|r| r.nn_hamming.map(|h| h as f64));
            AggregateRow {
                size,
                dim,
                method,
                runs: ok.len(),
                failures,
                test_spearman_mean: rho.mean,
                test_spearman_std: rho.std,
                improvement_mean: imp.mean,
                improvement_std: imp.std,
                nn_true_fitness_mean: fit.mean,
                nn_true_fitness_std: fit.std,
                nn_percentile_mean: pct.mean,
                nn_percentile_std: pct.std,
                nn_hamming_mean: ham.mean,
            }
        })
        .collect()
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::invalid(format!("csv encode: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv encode: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn runs_to_csv(rows: &[RunRow]) -> Result<String> {
    to_csv(rows)
}

pub fn aggregate_to_csv(rows: &[AggregateRow]) -> Result<String> {
    to_csv(rows)
}

pub fn parse_runs_csv(text: &str, source: &str) -> Result<Vec<RunRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Parse {
                file: source.to_string(),
                line: i + 2,
                column: None,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn load_runs(dir: impl AsRef<Path>) -> Result<Vec<RunRow>> {
    let path = dir.as_ref().join(RUNS_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    parse_runs_csv(&text, &path.display().to_string())
}

/// Aligned text tables: test Spearman by size × dim, then per-cell optimizer results.
pub fn render_table(rows: &[RunRow]) -> String {
    let mut out = String::new();

    // Spearman is a property of the (size, dim, seed) cell, shared by all methods.
    let mut cells: BTreeMap<(usize, usize), BTreeMap<usize, f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.is_ok()) {
        if let Some(rho) = r.test_spearman {
            cells.entry((r.size, r.dim)).or_default().insert(r.seed, rho);
        }
    }
    let sizes: BTreeSet<usize> = rows.iter().map(|r| r.size).collect();
    let dims: BTreeSet<usize> = rows.iter().map(|r| r.dim).collect();

    out.push_str("Test Spearman of the surrogate (mean ± std over seeds)\n");
    let _ = write!(out, "{:>8}", "size");
    for d in &dims {
        let _ = write!(out, "  {:>16}", format!("m={d}"));
    }
    out.push('\n');
    for s in &sizes {
        let _ = write!(out, "{s:>8}");
        for d in &dims {
            let cell = cells
                .get(&(*s, *d))
                .and_then(|v| MeanStd::of(&v.values().copied().collect::<Vec<_>>()))
                .map(|ms| ms.to_string())
                .unwrap_or_else(|| "-".into());
            let _ = write!(out, "  {cell:>16}");
        }
        out.push('\n');
    }

    let agg = aggregate(rows);
    let mut by_cell: BTreeMap<(usize, usize), Vec<&AggregateRow>> = BTreeMap::new();
    for a in &agg {
        by_cell.entry((a.size, a.dim)).or_default().push(a);
    }
    for ((size, dim), group) in by_cell {
        let _ = write!(out, "\nOptimization results (size={size}, m={dim})\n");
        let _ = writeln!(
            out,
            "{:<8} {:>18} {:>18} {:>18} {:>8} {:>6}",
            "method", "improvement", "nn fitness", "nn percentile", "nn dist", "runs"
        );
        for a in group {
            let ms = |mean, std| MeanStd { mean, std }.to_string();
            let _ = writeln!(
                out,
                "{:<8} {:>18} {:>18} {:>18} {:>8.2} {:>6}",
                a.method.name(),
                ms(a.improvement_mean, a.improvement_std),
                ms(a.nn_true_fitness_mean, a.nn_true_fitness_std),
                ms(a.nn_percentile_mean, a.nn_percentile_std),
                a.nn_hamming_mean,
                if a.failures > 0 {
                    format!("{}+{}f", a.runs, a.failures)
                } else {
                    a.runs.to_string()
                },
            );
        }
    }

    let failures: Vec<&RunRow> = rows.iter().filter(|r| !r.is_ok()).collect();
    if !failures.is_empty() {
        out.push_str("\nFailures\n");
        for f in failures {
            let _ = writeln!(
                out,
                "size={} m={} method={} seed={}: {}",
                f.size,
                f.dim,
                f.method,
                f.seed,
                f.error.as_deref().unwrap_or("")
            );
        }
    }
    out
}
