//! Planted-signal datasets for tests, demos and the bundled fixture.
//!
//! Embeddings are `offset + B s` for a random orthonormal basis `B`. The first
//! `m` coordinates of `s` carry distinct, decreasing variances and define the
//! planted bits `b_k = [s_k > 0]`; the remaining coordinates are low-variance
//! noise. Fitness is a random quadratic pseudo-Boolean function of the planted
//! bits plus Gaussian noise, so PCA followed by median binarization recovers
//! the signal up to per-bit complements.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::binarization::Binarizer;
use crate::binarization::BinaryCode;
use crate::dataset::FitnessDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::projection::Projector;
use crate::rng;
use crate::surrogate::{feature_count, QuboSurrogate};

const AMINO_ACIDS: &[u8] = b"ACDEFGHIKLMNPQRSTVWY";

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    /// Standard deviation of the additive fitness noise, relative to the spread of the planted function.
    pub noise: f64,
    /// Standard deviation of the non-signal embedding coordinates.
    pub background: f64,
    /// Standard deviation of planted couplings (biases are standard normal).
    pub coupling_scale: f64,
    pub with_sequences: bool,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            n: 1000,
            d: 32,
            m: 8,
            noise: 0.1,
            background: 0.3,
            coupling_scale: 0.5,
            with_sequences: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Planted {
    pub dataset: FitnessDataset,
    /// The noiseless fitness function over planted bits.
    pub truth: QuboSurrogate,
    pub planted_codes: Vec<BinaryCode>,
}

pub fn planted_dataset(cfg: &PlantedConfig) -> Result<Planted> {
    if cfg.m == 0 || cfg.d < cfg.m || cfg.n == 0 {
        return Err(Error::invalid("planted dataset needs n >= 1 and 1 <= m <= d"));
    }
    if !(cfg.noise >= 0.0 && cfg.background >= 0.0 && cfg.coupling_scale >= 0.0) {
        return Err(Error::invalid("noise scales must be non-negative"));
    }
    let mut r = rng::seeded(cfg.seed);
    let (n, d, m) = (cfg.n, cfg.d, cfg.m);

    let gauss = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut r));
    let basis = gauss.qr().q();
    let offset: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();

    let truth = random_truth(m, cfg.coupling_scale, &mut r)?;

    let scales: Vec<f64> = (0..d)
        .map(|k| {
            if k < m {
                3.0 - 2.0 * k as f64 / m as f64
            } else {
                cfg.background
            }
        })
        .collect();

    let mut data = Vec::with_capacity(n * d);
    let mut planted_codes = Vec::with_capacity(n);
    let mut clean = Vec::with_capacity(n);
    for _ in 0..n {
        let s: Vec<f64> = scales
            .iter()
            .map(|sc| {
                let g: f64 = StandardNormal.sample(&mut r);
                sc * g
            })
            .collect();
        let code = BinaryCode::from_bools(&s[..m].iter().map(|&v| v > 0.0).collect::<Vec<_>>());
        clean.push(truth.predict(&code)?);
        planted_codes.push(code);
        for (i, off) in offset.iter().enumerate() {
            let row = basis.row(i);
            data.push(off + row.iter().zip(&s).map(|(b, v): (&f64, &f64)| b * v).sum::<f64>());
        }
    }

    let fitness = add_noise(&clean, cfg.noise, &mut r);

    let sequences = cfg.with_sequences.then(|| {
        (0..n)
            .map(|_| {
                (0..12)
                    .map(|_| AMINO_ACIDS[r.random_range(0..AMINO_ACIDS.len())] as char)
                    .collect()
            })
            .collect()
    });
    let ids = (0..n).map(|i| format!("v{i:05}")).collect();
    let dataset = FitnessDataset::new(ids, sequences, Matrix::from_row_major(n, d, data)?, fitness)?;
    Ok(Planted {
        dataset,
        truth,
        planted_codes,
    })
}

fn random_truth(m: usize, coupling_scale: f64, r: &mut rng::Rng) -> Result<QuboSurrogate> {
    let coupling = Normal::new(0.0, coupling_scale).map_err(|e| Error::invalid(e.to_string()))?;
    let mut w: Vec<f64> = (0..m).map(|_| StandardNormal.sample(r)).collect();
    w.extend((m..feature_count(m)).map(|_| coupling.sample(r)));
    QuboSurrogate::from_weights(0.0, &w, m, None)
}

fn add_noise(clean: &[f64], noise: f64, r: &mut rng::Rng) -> Vec<f64> {
    let n = clean.len() as f64;
    let mean = clean.iter().sum::<f64>() / n;
    let spread = (clean.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let spread = if spread > 0.0 { spread } else { 1.0 };
    clean
        .iter()
        .map(|v| {
            let g: f64 = StandardNormal.sample(r);
            v + noise * spread * g
        })
        .collect()
}

/// Replaces the fitness of `dataset` with a random quadratic function of the
/// median-binarized top-`m` PCA latents of the whole dataset, plus noise.
/// Returns the relabelled dataset, the noiseless function and each record's code.
pub fn relabel_on_pca_codes(
    dataset: &FitnessDataset,
    m: usize,
    noise: f64,
    coupling_scale: f64,
    seed: u64,
) -> Result<Planted> {
    if !(noise >= 0.0 && coupling_scale >= 0.0) {
        return Err(Error::invalid("noise scales must be non-negative"));
    }
    let projector = Projector::fit_pca(&dataset.embeddings, m)?;
    let latents = projector.project_all(&dataset.embeddings)?;
    let codes = Binarizer::fit(&latents)?.binarize_all(&latents)?;
    let mut r = rng::seeded(seed);
    let truth = random_truth(m, coupling_scale, &mut r)?;
    let clean = codes.iter().map(|c| truth.predict(c)).collect::<Result<Vec<_>>>()?;
    let fitness = add_noise(&clean, noise, &mut r);
    let dataset = FitnessDataset::new(
        dataset.ids.clone(),
        dataset.sequences.clone(),
        dataset.embeddings.clone(),
        fitness,
    )?;
    Ok(Planted {
        dataset,
        truth,
        planted_codes: codes,
    })
}
