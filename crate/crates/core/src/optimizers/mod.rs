//! Maximizers for a [`QuboSurrogate`] over `{0,1}^m`.
//!
//! Every stochastic method is a pure function of `(surrogate, inputs, params, seed)`.
//! Ties are always broken toward the lowest index or lexicographically smallest code.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::binarization::BinaryCode;
use crate::error::{Error, Result};
use crate::surrogate::QuboSurrogate;

mod annealing;
mod bayesian;
mod exhaustive;
mod genetic;
mod local;

pub use annealing::{metropolis_acceptance, score_spread, simulated_annealing, SaParams};
pub use bayesian::{exploration_bonus, latent_bo, BoParams};
pub use exhaustive::{brute_force, MAX_BRUTE_FORCE_BITS};
pub use genetic::{genetic_algorithm, GaParams};
pub use local::{greedy_hill_climb, random_search, RandomParams};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_code: BinaryCode,
    pub best_score: f64,
    pub start_code: BinaryCode,
    pub start_score: f64,
    /// `best_score - start_score`.
    pub improvement: f64,
    /// Number of surrogate evaluations, including incremental flip deltas.
    pub evaluations: u64,
    /// `(step, best-so-far score)`; granularity is method specific.
    pub trace: Vec<(usize, f64)>,
}

impl OptimizationResult {
    pub(crate) fn finish(
        q: &QuboSurrogate,
        best_code: BinaryCode,
        start_code: BinaryCode,
        evaluations: u64,
        trace: Vec<(usize, f64)>,
    ) -> Self {
        // Re-evaluate exactly so incremental bookkeeping never leaks rounding drift.
        let best_score = q.score(best_code.bits());
        let start_score = q.score(start_code.bits());
        OptimizationResult {
            best_code,
            best_score,
            start_code,
            start_score,
            improvement: best_score - start_score,
            evaluations,
            trace,
        }
    }

    /// `step,best_score` CSV.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("step,best_score\n");
        for (s, v) in &self.trace {
            out.push_str(&format!("{s},{v}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sa,
    Ga,
    Greedy,
    Random,
    Bo,
    Brute,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Sa,
        Method::Ga,
        Method::Greedy,
        Method::Random,
        Method::Bo,
        Method::Brute,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sa => "sa",
            Method::Ga => "ga",
            Method::Greedy => "greedy",
            Method::Random => "random",
            Method::Bo => "bo",
            Method::Brute => "brute",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            Error::invalid(format!(
                "unknown method `{s}` (expected sa, ga, greedy, random, bo or brute)"
            ))
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerParams {
    pub sa: SaParams,
    pub ga: GaParams,
    pub random: RandomParams,
    pub bo: BoParams,
}

impl OptimizerParams {
    pub fn validate(&self) -> Result<()> {
        self.sa.validate()?;
        self.ga.validate()?;
        self.random.validate()?;
        self.bo.validate()
    }
}

/// Runs `method` from `start`. GA seeds its population with `start`; latent BO
/// treats it as the first observed code; random search and brute force ignore it.
pub fn run_method(
    method: Method,
    q: &QuboSurrogate,
    start: &BinaryCode,
    params: &OptimizerParams,
    seed: u64,
) -> Result<OptimizationResult> {
    match method {
        Method::Sa => simulated_annealing(q, start, &params.sa, seed),
        Method::Ga => genetic_algorithm(q, std::slice::from_ref(start), &params.ga, seed),
        Method::Greedy => greedy_hill_climb(q, start),
        Method::Random => random_search(q, params.random.samples, seed),
        Method::Bo => latent_bo(q, std::slice::from_ref(start), &params.bo, seed),
        Method::Brute => brute_force(q),
    }
}

pub(crate) fn check_dim(q: &QuboSurrogate, x: &BinaryCode) -> Result<()> {
    if x.len() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            actual: x.len(),
        });
    }
    Ok(())
}

/// A code with cached score and local fields `h_k + sum_l J_kl x_l`, so a
/// flip costs O(m) and its delta O(1).
#[derive(Debug, Clone)]
pub(crate) struct FlipState<'a> {
    q: &'a QuboSurrogate,
    pub bits: Vec<u8>,
    pub score: f64,
    fields: Vec<f64>,
}

impl<'a> FlipState<'a> {
    pub fn new(q: &'a QuboSurrogate, bits: Vec<u8>) -> Self {
        let mut s = FlipState {
            q,
            bits,
            score: 0.0,
            fields: Vec::new(),
        };
        s.resync();
        s
    }

    pub fn resync(&mut self) {
        self.score = self.q.score(&self.bits);
        self.fields = (0..self.q.dim()).map(|k| self.q.local_field(&self.bits, k)).collect();
    }

    pub fn delta(&self, k: usize) -> f64 {
        if self.bits[k] == 1 {
            -self.fields[k]
        } else {
            self.fields[k]
        }
    }

    pub fn flip(&mut self, k: usize) {
        let delta = self.delta(k);
        let sign = if self.bits[k] == 1 { -1.0 } else { 1.0 };
        self.bits[k] ^= 1;
        self.score += delta;
        for (f, j) in self.fields.iter_mut().zip(self.q.coupling_row(k)) {
            *f += sign * j;
        }
    }

    pub fn code(&self) -> BinaryCode {
        BinaryCode::new(self.bits.clone()).expect("bits stay binary")
    }
}
