//! A fitted projector + binarizer + surrogate, with the training codebook used
//! for start codes and retrieval decoding.
//!
//! On disk a model is a directory holding `projector.tsv`, `binarizer.tsv`,
//! `surrogate.qubo` and `codebook.tsv`.

use std::fs;
use std::path::Path;

use rand::Rng;

use crate::binarization::{Binarizer, BinaryCode, CodeBook};
use crate::dataset::FitnessDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::projection::{ProjectionKind, Projector};
use crate::rng;
use crate::surrogate::QuboSurrogate;

pub const PROJECTOR_FILE: &str = "projector.tsv";
pub const BINARIZER_FILE: &str = "binarizer.tsv";
pub const SURROGATE_FILE: &str = "surrogate.qubo";
pub const CODEBOOK_FILE: &str = "codebook.tsv";

#[derive(Debug, Clone, PartialEq)]
pub struct LatentModel {
    pub projector: Projector,
    pub binarizer: Binarizer,
    pub surrogate: QuboSurrogate,
    pub codebook: CodeBook,
}

impl LatentModel {
    /// Fits every stage on `train` only. `seed` drives the random projection and is ignored for PCA.
    pub fn fit(train: &FitnessDataset, kind: ProjectionKind, m: usize, lambda: f64, seed: u64) -> Result<Self> {
        let projector = match kind {
            ProjectionKind::Random => Projector::fit_random(train.dim(), m, seed)?,
            ProjectionKind::Pca => Projector::fit_pca(&train.embeddings, m)?,
        };
        let latents = projector.project_all(&train.embeddings)?;
        let binarizer = Binarizer::fit(&latents)?;
        let codes = binarizer.binarize_all(&latents)?;
        let surrogate = QuboSurrogate::fit(&codes, &train.fitness, lambda)?;
        let codebook = CodeBook::new(codes, train.fitness.clone(), train.ids.clone(), train.sequences.clone())?;
        Ok(LatentModel {
            projector,
            binarizer,
            surrogate,
            codebook,
        })
    }

    pub fn dim(&self) -> usize {
        self.surrogate.dim()
    }

    pub fn encode(&self, embeddings: &Matrix) -> Result<Vec<BinaryCode>> {
        let latents = self.projector.project_all(embeddings)?;
        self.binarizer.binarize_all(&latents)
    }

    /// Code of one uniformly drawn training record, and that record's index.
    pub fn start_code(&self, seed: u64) -> (usize, BinaryCode) {
        let i = rng::seeded(seed).random_range(0..self.codebook.len());
        (i, self.codebook.codes[i].clone())
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.projector.save(dir.join(PROJECTOR_FILE))?;
        self.binarizer.save(dir.join(BINARIZER_FILE))?;
        self.surrogate.export_qubo(dir.join(SURROGATE_FILE))?;
        self.codebook.save(dir.join(CODEBOOK_FILE))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let projector = Projector::load(dir.join(PROJECTOR_FILE))?;
        let binarizer = Binarizer::load(dir.join(BINARIZER_FILE))?;
        let surrogate = QuboSurrogate::import_qubo(dir.join(SURROGATE_FILE))?;
        let codebook = CodeBook::load(dir.join(CODEBOOK_FILE))?;
        let m = surrogate.dim();
        for actual in [projector.output_dim(), binarizer.dim(), codebook.dim()] {
            if actual != m {
                return Err(Error::DimensionMismatch { expected: m, actual });
            }
        }
        if codebook.is_empty() {
            return Err(Error::invalid("model codebook is empty"));
        }
        Ok(LatentModel {
            projector,
            binarizer,
            surrogate,
            codebook,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{planted_dataset, PlantedConfig};

    #[test]
    fn save_load_round_trip() {
        let planted = planted_dataset(&PlantedConfig {
            n: 120,
            d: 10,
            m: 4,
            ..PlantedConfig::default()
        })
        .unwrap();
        for kind in [ProjectionKind::Pca, ProjectionKind::Random] {
            let model = LatentModel::fit(&planted.dataset, kind, 4, 1.0, 3).unwrap();
            let dir = tempfile::tempdir().unwrap();
            model.save(dir.path()).unwrap();
            let back = LatentModel::load(dir.path()).unwrap();
            assert_eq!(back, model);
        }
    }

    #[test]
    fn codebook_matches_encoding_of_training_rows() {
        let planted = planted_dataset(&PlantedConfig {
            n: 80,
            d: 8,
            m: 3,
            ..PlantedConfig::default()
        })
        .unwrap();
        let model = LatentModel::fit(&planted.dataset, ProjectionKind::Pca, 3, 1.0, 0).unwrap();
        assert_eq!(model.encode(&planted.dataset.embeddings).unwrap(), model.codebook.codes);
        let (i, c) = model.start_code(5);
        assert_eq!(c, model.codebook.codes[i]);
        assert_eq!(model.start_code(5), (i, c));
    }

    #[test]
    fn load_rejects_inconsistent_dims() {
        let planted = planted_dataset(&PlantedConfig {
            n: 60,
            d: 8,
            m: 3,
            ..PlantedConfig::default()
        })
        .unwrap();
        let model = LatentModel::fit(&planted.dataset, ProjectionKind::Pca, 3, 1.0, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        model.save(dir.path()).unwrap();
        Binarizer::from_thresholds(vec![0.0; 2])
            .unwrap()
            .save(dir.path().join(BINARIZER_FILE))
            .unwrap();
        assert!(LatentModel::load(dir.path()).is_err());
    }
}
