//! Lightweight latent Bayesian-style search.
//!
//! Not a Gaussian process: the "uncertainty" of a candidate is one minus its
//! largest exponential Hamming-kernel similarity to any evaluated code, and the
//! acquisition is `predict(x) + kappa * u(x)`.

use serde::{Deserialize, Serialize};

use super::{check_dim, OptimizationResult};
use crate::binarization::BinaryCode;
use crate::error::{Error, Result};
use crate::rng;
use crate::surrogate::QuboSurrogate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoParams {
    pub iterations: usize,
    /// Uniform random candidates per iteration; the incumbent's 1-flip neighbors are added on top.
    pub pool_size: usize,
    pub kappa: f64,
    /// Kernel length scale; `m/4` when unset.
    pub length_scale: Option<f64>,
}

impl Default for BoParams {
    fn default() -> Self {
        BoParams {
            iterations: 200,
            pool_size: 256,
            kappa: 1.0,
            length_scale: None,
        }
    }
}

impl BoParams {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("bo.iterations must be at least 1"));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid("bo.kappa must be non-negative"));
        }
        if let Some(l) = self.length_scale {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::invalid("bo.length_scale must be positive"));
            }
        }
        Ok(())
    }

    pub fn length_scale_for(&self, m: usize) -> f64 {
        self.length_scale.unwrap_or(m as f64 / 4.0)
    }
}

fn pack(bits: &[u8]) -> Vec<u64> {
    bits.chunks(64)
        .map(|chunk| chunk.iter().enumerate().fold(0u64, |w, (i, &b)| w | ((b as u64) << i)))
        .collect()
}

fn packed_distance(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

fn bonus_from_distance(min_distance: Option<u32>, length_scale: f64) -> f64 {
    match min_distance {
        Some(d) => 1.0 - (-(d as f64) / length_scale).exp(),
        None => 1.0,
    }
}

/// `u(x) = 1 - max_{e in evaluated} exp(-d_H(x, e) / length_scale)`; 1 for an empty set.
pub fn exploration_bonus(x: &BinaryCode, evaluated: &[BinaryCode], length_scale: f64) -> Result<f64> {
    let mut min_d: Option<usize> = None;
    for e in evaluated {
        let d = x.hamming(e)?;
        min_d = Some(min_d.map_or(d, |m| m.min(d)));
    }
    Ok(bonus_from_distance(min_d.map(|d| d as u32), length_scale))
}

/// Iteratively evaluates the acquisition-maximal candidate from a pool of
/// uniform random codes plus the incumbent's single-bit neighbors.
///
/// The evaluated set starts as `observed` plus one uniform random code. The
/// start is the first observed code, or that random code when `observed` is empty.
pub fn latent_bo(
    q: &QuboSurrogate,
    observed: &[BinaryCode],
    params: &BoParams,
    seed: u64,
) -> Result<OptimizationResult> {
    params.validate()?;
    for c in observed {
        check_dim(q, c)?;
    }
    let m = q.dim();
    let ell = params.length_scale_for(m);
    let mut rng = rng::seeded(seed);

    let initial_random = BinaryCode::random(m, &mut rng);
    let start = observed.first().cloned().unwrap_or_else(|| initial_random.clone());

    let mut evaluated: Vec<(Vec<u64>, BinaryCode, f64)> = Vec::new();
    for c in observed.iter().chain(std::iter::once(&initial_random)) {
        evaluated.push((pack(c.bits()), c.clone(), q.score(c.bits())));
    }
    let mut evaluations = evaluated.len() as u64;

    let incumbent = |ev: &[(Vec<u64>, BinaryCode, f64)]| -> usize {
        let mut best = 0;
        for (i, e) in ev.iter().enumerate() {
            if e.2 > ev[best].2 {
                best = i;
            }
        }
        best
    };
    let mut trace = vec![(0, evaluated[incumbent(&evaluated)].2)];

    for step in 1..=params.iterations {
        let inc = evaluated[incumbent(&evaluated)].1.clone();
        let pool = (0..m)
            .map(|k| inc.flipped(k))
            .chain((0..params.pool_size).map(|_| BinaryCode::random(m, &mut rng)));

        let mut choice: Option<(f64, BinaryCode, f64)> = None;
        for cand in pool {
            let packed = pack(cand.bits());
            let min_d = evaluated.iter().map(|e| packed_distance(&packed, &e.0)).min();
            let score = q.score(cand.bits());
            evaluations += 1;
            let acq = score + params.kappa * bonus_from_distance(min_d, ell);
            if choice.as_ref().is_none_or(|(best, _, _)| acq > *best) {
                choice = Some((acq, cand, score));
            }
        }
        let (_, code, score) = choice.expect("pool contains at least the incumbent's neighbors or random codes");
        evaluated.push((pack(code.bits()), code, score));
        trace.push((step, evaluated[incumbent(&evaluated)].2));
    }

    let best = evaluated.swap_remove(incumbent(&evaluated)).1;
    Ok(OptimizationResult::finish(q, best, start, evaluations, trace))
}
