//! Grid experiment driver.
//!
//! For every `(sample size, latent dim, seed index)` cell the driver
//! subsamples, splits, fits projection/binarization/surrogate on the training
//! part, scores the surrogate on the test part, and runs every configured
//! optimizer from a shared start code. Cells run in parallel; rows are
//! assembled in `(size, dim, seed, method)` order, so output never depends on
//! scheduling.

mod config;
mod report;

use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use config::ExperimentConfig;
pub use report::{
    aggregate, aggregate_to_csv, load_runs, parse_runs_csv, render_table, runs_to_csv, AggregateRow, MeanStd, RunRow,
    RunStatus, AGGREGATE_FILE, PROVENANCE_FILE, RUNS_FILE, SUMMARY_FILE,
};

use crate::binarization::BinaryCode;
use crate::dataset::FitnessDataset;
use crate::error::{Error, Result};
use crate::evaluation::{retrieval_metrics, test_spearman};
use crate::model::LatentModel;
use crate::optimizers::{run_method, Method};
use crate::projection::ProjectionKind;
use crate::rng::{self, derive_seed};

/// Seeds for one grid cell, derived from `(master, size, dim, seed index, label)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellSeeds {
    pub size: usize,
    pub dim: usize,
    pub seed_index: usize,
    pub subsample: u64,
    pub split: u64,
    pub projection: u64,
    pub start: u64,
    pub methods: Vec<(Method, u64)>,
}

impl CellSeeds {
    pub fn derive(master: u64, size: usize, dim: usize, seed_index: usize, methods: &[Method]) -> Self {
        let parts = [size as u64, dim as u64, seed_index as u64];
        let s = |label: &str| derive_seed(master, &parts, label);
        CellSeeds {
            size,
            dim,
            seed_index,
            subsample: s("subsample"),
            split: s("split"),
            projection: s("projection"),
            start: s("start"),
            methods: methods
                .iter()
                .map(|m| (*m, s(&format!("optimizer:{}", m.name()))))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub dataset_records: usize,
    pub dataset_dim: usize,
    pub cells: Vec<CellSeeds>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<RunRow>,
    pub aggregates: Vec<AggregateRow>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    /// Writes `runs.csv`, `aggregate.csv`, `summary.txt` and `provenance.json`.
    /// Only `provenance.json` carries a timestamp.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, body: String| {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))
        };
        put(RUNS_FILE, runs_to_csv(&self.rows)?)?;
        put(AGGREGATE_FILE, aggregate_to_csv(&self.aggregates)?)?;
        put(SUMMARY_FILE, render_table(&self.rows))?;
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut prov =
            serde_json::to_value(&self.provenance).map_err(|e| Error::invalid(format!("provenance encode: {e}")))?;
        prov["timestamp"] = serde_json::Value::from(timestamp);
        let text =
            serde_json::to_string_pretty(&prov).map_err(|e| Error::invalid(format!("provenance encode: {e}")))?;
        put(PROVENANCE_FILE, text + "\n")
    }
}

/// Loads the configured dataset and runs the grid.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let ds = FitnessDataset::load(&cfg.dataset)?;
    run_experiment_on(cfg, &ds)
}

/// Runs the grid on an already loaded dataset. Stage errors become failure rows.
pub fn run_experiment_on(cfg: &ExperimentConfig, ds: &FitnessDataset) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for &size in &cfg.sample_sizes {
        for &dim in &cfg.latent_dims {
            for seed_index in 0..cfg.seeds {
                cells.push(CellSeeds::derive(cfg.master_seed, size, dim, seed_index, &cfg.methods));
            }
        }
    }

    let rows: Vec<RunRow> = cells
        .par_iter()
        .map(|cell| run_cell(cfg, ds, cell))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    Ok(ExperimentReport {
        aggregates: aggregate(&rows),
        rows,
        provenance: Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config: cfg.clone(),
            dataset_records: ds.len(),
            dataset_dim: ds.dim(),
            cells,
        },
    })
}

/// A model fitted on a training split and scored on its test split.
#[derive(Debug, Clone)]
pub struct SplitFit {
    pub model: LatentModel,
    pub test_codes: Vec<BinaryCode>,
    pub test_spearman: f64,
}

/// Fits projector, thresholds and surrogate on `train` alone, then encodes
/// `test` and scores the surrogate's ranking of it.
pub fn fit_split(
    train: &FitnessDataset,
    test: &FitnessDataset,
    kind: ProjectionKind,
    dim: usize,
    lambda: f64,
    projection_seed: u64,
) -> Result<SplitFit> {
    let model = LatentModel::fit(train, kind, dim, lambda, projection_seed)?;
    let test_codes = model.encode(&test.embeddings)?;
    let test_spearman = test_spearman(&model.surrogate, &test_codes, &test.fitness)?;
    Ok(SplitFit {
        model,
        test_codes,
        test_spearman,
    })
}

struct FittedCell {
    fit: SplitFit,
    start: BinaryCode,
}

fn fit_cell(cfg: &ExperimentConfig, ds: &FitnessDataset, seeds: &CellSeeds) -> Result<FittedCell> {
    let sub = ds.subsample(seeds.size, seeds.subsample)?;
    let (train, test) = sub.split(cfg.train_fraction, seeds.split)?;
    let fit = fit_split(&train, &test, cfg.projection, seeds.dim, cfg.lambda, seeds.projection)?;
    let start_index = rng::seeded(seeds.start).random_range(0..fit.model.codebook.len());
    let start = fit.model.codebook.codes[start_index].clone();
    Ok(FittedCell { fit, start })
}

fn run_cell(cfg: &ExperimentConfig, ds: &FitnessDataset, seeds: &CellSeeds) -> Vec<RunRow> {
    let (size, dim, seed) = (seeds.size, seeds.dim, seeds.seed_index);
    let fitted = match fit_cell(cfg, ds, seeds) {
        Ok(f) => f,
        Err(e) => {
            return seeds
                .methods
                .iter()
                .map(|(m, _)| RunRow::failed(size, dim, *m, seed, e.to_string()))
                .collect()
        }
    };
    seeds
        .methods
        .iter()
        .map(|&(method, method_seed)| {
            let outcome = run_method(
                method,
                &fitted.fit.model.surrogate,
                &fitted.start,
                &cfg.optimizer,
                method_seed,
            )
            .and_then(|opt| {
                retrieval_metrics(fitted.fit.test_spearman, &fitted.fit.model.codebook, &opt).map(|m| (opt, m))
            });
            match outcome {
                Ok((opt, m)) => RunRow {
                    size,
                    dim,
                    method,
                    seed,
                    status: RunStatus::Ok,
                    test_spearman: Some(m.test_spearman),
                    start_score: Some(opt.start_score),
                    best_score: Some(opt.best_score),
                    improvement: Some(m.improvement),
                    nn_id: Some(m.nn_id),
                    nn_hamming: Some(m.nn_hamming),
                    nn_true_fitness: Some(m.nn_true_fitness),
                    nn_percentile: Some(m.nn_percentile),
                    evaluations: Some(opt.evaluations),
                    error: None,
                },
                Err(e) => RunRow::failed(size, dim, method, seed, e.to_string()),
            }
        })
        .collect()
}
