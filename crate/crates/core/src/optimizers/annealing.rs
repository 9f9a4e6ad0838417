use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, FlipState, OptimizationResult};
use crate::binarization::BinaryCode;
use crate::error::{Error, Result};
use crate::rng;
use crate::surrogate::QuboSurrogate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaParams {
    pub iterations: usize,
    /// Initial temperature in units of the estimated score spread.
    pub initial_temperature: f64,
    /// Geometric cooling ratio; derived from `final_temperature_ratio` when unset.
    pub cooling: Option<f64>,
    /// Final temperature as a fraction of the initial one.
    pub final_temperature_ratio: f64,
    /// Random codes used to estimate the score spread.
    pub spread_samples: usize,
}

impl Default for SaParams {
    fn default() -> Self {
        SaParams {
            iterations: 2000,
            initial_temperature: 1.0,
            cooling: None,
            final_temperature_ratio: 1e-3,
            spread_samples: 64,
        }
    }
}

impl SaParams {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("sa.iterations must be at least 1"));
        }
        if !(self.initial_temperature > 0.0 && self.initial_temperature.is_finite()) {
            return Err(Error::invalid("sa.initial_temperature must be positive"));
        }
        if let Some(a) = self.cooling {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::invalid("sa.cooling must lie in (0, 1)"));
            }
        }
        if !(self.final_temperature_ratio > 0.0 && self.final_temperature_ratio < 1.0) {
            return Err(Error::invalid("sa.final_temperature_ratio must lie in (0, 1)"));
        }
        if self.spread_samples < 2 {
            return Err(Error::invalid("sa.spread_samples must be at least 2"));
        }
        Ok(())
    }

    pub fn cooling_ratio(&self) -> f64 {
        self.cooling.unwrap_or_else(|| {
            if self.iterations > 1 {
                self.final_temperature_ratio.powf(1.0 / (self.iterations - 1) as f64)
            } else {
                self.final_temperature_ratio
            }
        })
    }
}

/// Probability of accepting a move with score change `delta` at temperature `t`.
pub fn metropolis_acceptance(delta: f64, t: f64) -> f64 {
    if delta > 0.0 {
        1.0
    } else {
        (delta / t).exp()
    }
}

/// Sample standard deviation of the surrogate over `n` uniform random codes.
pub fn score_spread<R: Rng + ?Sized>(q: &QuboSurrogate, n: usize, rng: &mut R) -> f64 {
    let scores: Vec<f64> = (0..n)
        .map(|_| q.score(BinaryCode::random(q.dim(), rng).bits()))
        .collect();
    let mean = scores.iter().sum::<f64>() / n as f64;
    (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
}

/// Single-bit-flip Metropolis search with geometric cooling, returning the
/// best code ever visited.
pub fn simulated_annealing(
    q: &QuboSurrogate,
    start: &BinaryCode,
    params: &SaParams,
    seed: u64,
) -> Result<OptimizationResult> {
    check_dim(q, start)?;
    params.validate()?;
    let m = q.dim();
    let mut rng = rng::seeded(seed);

    let spread = score_spread(q, params.spread_samples, &mut rng);
    let scale = if spread.is_finite() && spread > 0.0 {
        spread
    } else {
        1.0
    };
    let mut temperature = params.initial_temperature * scale;
    let alpha = params.cooling_ratio();
    let mut evaluations = params.spread_samples as u64 + 1;

    let mut state = FlipState::new(q, start.bits().to_vec());
    let mut best_bits = state.bits.clone();
    let mut best_score = state.score;
    let mut trace = Vec::with_capacity(params.iterations + 1);
    trace.push((0, best_score));

    for step in 1..=params.iterations {
        let k = rng.random_range(0..m);
        let delta = state.delta(k);
        evaluations += 1;
        let accept = delta > 0.0 || rng.random::<f64>() < metropolis_acceptance(delta, temperature);
        if accept {
            state.flip(k);
            if state.score > best_score {
                best_score = state.score;
                best_bits.copy_from_slice(&state.bits);
            }
        }
        trace.push((step, best_score));
        temperature *= alpha;
    }

    Ok(OptimizationResult::finish(
        q,
        BinaryCode::new(best_bits)?,
        start.clone(),
        evaluations,
        trace,
    ))
}
