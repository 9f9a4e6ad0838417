use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use binlat::dataset::FitnessDataset;
use binlat::evaluation::{hamming_nn, percentile};
use binlat::harness::{self, ExperimentConfig};
use binlat::model::LatentModel;
use binlat::optimizers::{run_method, Method, OptimizerParams};
use binlat::projection::ProjectionKind;
use binlat::rng::derive_seed;
use binlat::surrogate::DEFAULT_LAMBDA;
use binlat::synthetic::{planted_dataset, PlantedConfig};

#[derive(Parser)]
#[command(
    name = "binlat",
    version,
    about = "QUBO surrogates over binary latent codes of protein embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an embeddings TSV and print its shape.
    Validate { data: PathBuf },
    /// Fit projector, thresholds and surrogate on a training split and save the model.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value = "pca")]
        projection: ProjectionKind,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Maximize a saved surrogate and decode the result by Hamming retrieval.
    Optimize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        method: Method,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the best-so-far trace as `step,best_score` CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// JSON file with optimizer parameters (same schema as the `optimizer` block of a config).
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        neighbors: usize,
    },
    /// Write the model's surrogate in the text QUBO format.
    ExportQubo {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment grid from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the results of a previous `run`.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Write a planted-signal embeddings TSV.
    Synthesize {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 32)]
        d: usize,
        #[arg(long, default_value_t = 8)]
        m: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_sequences: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Table,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Validate { data } => validate(&data),
        Command::Fit {
            data,
            dim,
            projection,
            lambda,
            seed,
            train_fraction,
            out,
        } => fit(&data, dim, projection, lambda, seed, train_fraction, &out),
        Command::Optimize {
            model,
            method,
            seed,
            trace,
            params,
            neighbors,
        } => optimize(&model, method, seed, trace.as_deref(), params.as_deref(), neighbors),
        Command::ExportQubo { model, out } => {
            let m = LatentModel::load(&model)?;
            m.surrogate.export_qubo(&out)?;
            println!("wrote {} (m = {})", out.display(), m.dim());
            Ok(())
        }
        Command::Run { config, out } => run(&config, out),
        Command::Report { input, format } => report(&input, format),
        Command::Synthesize {
            out,
            n,
            d,
            m,
            noise,
            seed,
            no_sequences,
        } => {
            let cfg = PlantedConfig {
                n,
                d,
                m,
                noise,
                seed,
                with_sequences: !no_sequences,
                ..PlantedConfig::default()
            };
            planted_dataset(&cfg)?.dataset.save(&out)?;
            println!("wrote {} ({n} records, d = {d})", out.display());
            Ok(())
        }
    }
}

fn validate(path: &Path) -> Result<()> {
    let ds = FitnessDataset::load(path)?;
    println!(
        "ok: {} records, d = {}, sequences: {}",
        ds.len(),
        ds.dim(),
        if ds.sequences.is_some() { "yes" } else { "no" }
    );
    Ok(())
}

fn fit(
    data: &Path,
    dim: usize,
    projection: ProjectionKind,
    lambda: f64,
    seed: u64,
    train_fraction: f64,
    out: &Path,
) -> Result<()> {
    let ds = FitnessDataset::load(data)?;
    let (train, test) = ds.split(train_fraction, derive_seed(seed, &[], "split"))?;
    let fitted = harness::fit_split(
        &train,
        &test,
        projection,
        dim,
        lambda,
        derive_seed(seed, &[], "projection"),
    )?;
    fitted.model.save(out)?;
    println!("train records: {}", train.len());
    println!("test records: {}", test.len());
    println!("test spearman: {:.6}", fitted.test_spearman);
    println!("model written to {}", out.display());
    Ok(())
}

fn optimize(
    model_dir: &Path,
    method: Method,
    seed: u64,
    trace: Option<&Path>,
    params: Option<&Path>,
    neighbors: usize,
) -> Result<()> {
    if neighbors == 0 {
        bail!("--neighbors must be at least 1");
    }
    let model = LatentModel::load(model_dir)?;
    let params = match params {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let params: OptimizerParams =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            params.validate()?;
            params
        }
        None => OptimizerParams::default(),
    };
    let (start_index, start) = model.start_code(derive_seed(seed, &[], "start"));
    let result = run_method(
        method,
        &model.surrogate,
        &start,
        &params,
        derive_seed(seed, &[], method.name()),
    )?;
    if let Some(path) = trace {
        fs::write(path, result.trace_csv()).with_context(|| format!("writing {}", path.display()))?;
    }

    let book = &model.codebook;
    println!("method: {method}");
    if result.start_code == start {
        println!("start: {} (record {})", result.start_code, book.ids[start_index]);
    } else {
        println!("start: {}", result.start_code);
    }
    println!("start score: {:.6}", result.start_score);
    println!("best: {}", result.best_code);
    println!("best score: {:.6}", result.best_score);
    println!("improvement: {:.6}", result.improvement);
    println!("evaluations: {}", result.evaluations);
    println!("neighbors:");
    for nb in hamming_nn(&result.best_code, book, neighbors)? {
        println!(
            "  {}\tdistance {}\tfitness {:.6}\tpercentile {:.2}",
            nb.id,
            nb.distance,
            nb.fitness,
            percentile(nb.fitness, &book.fitness)?
        );
    }
    Ok(())
}

fn run(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let dir = out
        .or_else(|| cfg.output_dir.clone())
        .context("no output directory: pass --out or set `output_dir` in the config")?;
    let report = harness::run_experiment(&cfg)?;
    report.write(&dir)?;
    print!("{}", harness::render_table(&report.rows));
    let failures = report.rows.iter().filter(|r| !r.is_ok()).count();
    println!(
        "\n{} runs ({failures} failed), results in {}",
        report.rows.len(),
        dir.display()
    );
    Ok(())
}

fn report(dir: &Path, format: Format) -> Result<()> {
    let rows = harness::load_runs(dir)?;
    match format {
        Format::Table => print!("{}", harness::render_table(&rows)),
        Format::Csv => print!("{}", harness::aggregate_to_csv(&harness::aggregate(&rows))?),
    }
    Ok(())
}
