//! Binary latent fitness landscapes.
//!
//! The pipeline turns a table of embedding vectors with scalar fitness labels
//! into `m`-bit codes (linear projection followed by per-dimension median
//! thresholding), fits a quadratic pseudo-Boolean surrogate over those bits by
//! ridge regression, and maximizes the surrogate with classical combinatorial
//! search. Optimized codes are decoded back to observed records by Hamming
//! nearest-neighbor retrieval.
//!
//! ```no_run
//! use binlat::prelude::*;
//!
//! let ds = FitnessDataset::load("embeddings.tsv")?;
//! let (train, test) = ds.split(0.8, 7)?;
//! let proj = Projector::fit_pca(&train.embeddings, 16)?;
//! let latents = proj.project_all(&train.embeddings)?;
//! let bin = Binarizer::fit(&latents)?;
//! let codes = bin.binarize_all(&latents)?;
//! let q = QuboSurrogate::fit(&codes, &train.fitness, 1.0)?;
//! let best = simulated_annealing(&q, &codes[0], &SaParams::default(), 11)?;
//! println!("{} -> {}", best.start_score, best.best_score);
//! # let _ = test;
//! # Ok::<(), binlat::Error>(())
//! ```

pub mod binarization;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod optimizers;
pub mod projection;
pub mod rng;
pub mod surrogate;
pub mod synthetic;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::binarization::{Binarizer, BinaryCode, CodeBook};
    pub use crate::dataset::FitnessDataset;
    pub use crate::error::{Error, Result};
    pub use crate::evaluation::{evaluate_run, hamming_nn, percentile, spearman, RunMetrics};
    pub use crate::linalg::Matrix;
    pub use crate::optimizers::{
        brute_force, genetic_algorithm, greedy_hill_climb, latent_bo, random_search, simulated_annealing, BoParams,
        GaParams, Method, OptimizationResult, OptimizerParams, RandomParams, SaParams,
    };
    pub use crate::projection::{ProjectionKind, Projector};
    pub use crate::surrogate::QuboSurrogate;
}
