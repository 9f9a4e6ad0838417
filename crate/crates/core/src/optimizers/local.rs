use serde::{Deserialize, Serialize};

use super::{check_dim, FlipState, OptimizationResult};
use crate::binarization::BinaryCode;
use crate::error::{Error, Result};
use crate::rng;
use crate::surrogate::QuboSurrogate;

/// Steepest-ascent single-bit hill climbing. Applies the strictly best
/// improving flip (lowest index on ties) until none improves.
pub fn greedy_hill_climb(q: &QuboSurrogate, start: &BinaryCode) -> Result<OptimizationResult> {
    check_dim(q, start)?;
    let m = q.dim();
    let mut state = FlipState::new(q, start.bits().to_vec());
    let mut evaluations = 1u64;
    let mut trace = vec![(0, state.score)];
    let mut step = 0;
    loop {
        let mut best: Option<(usize, f64)> = None;
        for k in 0..m {
            let d = state.delta(k);
            if d > 0.0 && best.is_none_or(|(_, bd)| d > bd) {
                best = Some((k, d));
            }
        }
        evaluations += m as u64;
        match best {
            Some((k, _)) => {
                state.flip(k);
                step += 1;
                trace.push((step, state.score));
            }
            None => break,
        }
    }
    Ok(OptimizationResult::finish(
        q,
        state.code(),
        start.clone(),
        evaluations,
        trace,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomParams {
    pub samples: usize,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams { samples: 2000 }
    }
}

impl RandomParams {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::invalid("random.samples must be at least 1"));
        }
        Ok(())
    }
}

/// Best of `n` uniform random codes; the first sample is the start.
pub fn random_search(q: &QuboSurrogate, n: usize, seed: u64) -> Result<OptimizationResult> {
    RandomParams { samples: n }.validate()?;
    let mut rng = rng::seeded(seed);
    let start = BinaryCode::random(q.dim(), &mut rng);
    let mut best = start.clone();
    let mut best_score = q.score(start.bits());
    let mut trace = vec![(0, best_score)];
    for i in 1..n {
        let x = BinaryCode::random(q.dim(), &mut rng);
        let s = q.score(x.bits());
        if s > best_score {
            best_score = s;
            best = x;
        }
        trace.push((i, best_score));
    }
    Ok(OptimizationResult::finish(q, best, start, n as u64, trace))
}

#[cfg(test)]
mod tests {
    use super::super::brute_force;
    use super::super::test_support::{normal_surrogate, toy};
    use super::*;

    #[test]
    fn greedy_hand_trace() {
        let r = greedy_hill_climb(&toy(), &BinaryCode::zeros(2)).unwrap();
        assert_eq!(r.best_code.bits(), &[1, 1]);
        assert_eq!(r.improvement, 2.0);
        assert_eq!(r.trace, vec![(0, 0.0), (1, 1.0), (2, 2.0)]);
    }

    #[test]
    fn greedy_stays_at_local_optimum() {
        let q = normal_surrogate(10, 3);
        let first = greedy_hill_climb(&q, &BinaryCode::zeros(10)).unwrap();
        let again = greedy_hill_climb(&q, &first.best_code).unwrap();
        assert_eq!(again.best_code, first.best_code);
        assert_eq!(again.improvement, 0.0);
        for k in 0..10 {
            assert!(q.flip_delta(&first.best_code, k).unwrap() <= 0.0);
        }
    }

    #[test]
    fn greedy_separable() {
        let h = vec![0.5, -1.0, 2.0, -0.1, -0.3];
        let q = QuboSurrogate::new(0.0, h.clone(), vec![vec![0.0; 5]; 5], None).unwrap();
        for start in ["00000", "11111", "10101"] {
            let r = greedy_hill_climb(&q, &start.parse().unwrap()).unwrap();
            let want: Vec<u8> = h.iter().map(|&v| (v > 0.0) as u8).collect();
            assert_eq!(r.best_code.bits(), want.as_slice());
        }
    }

    #[test]
    fn greedy_tie_breaks_on_lowest_index() {
        let q = QuboSurrogate::new(0.0, vec![1.0, 1.0], vec![vec![0.0, -5.0], vec![-5.0, 0.0]], None).unwrap();
        let r = greedy_hill_climb(&q, &BinaryCode::zeros(2)).unwrap();
        assert_eq!(r.best_code.bits(), &[1, 0]);
    }

    #[test]
    fn random_single_sample() {
        let r = random_search(&toy(), 1, 4).unwrap();
        assert_eq!(r.best_code, r.start_code);
        assert_eq!(r.improvement, 0.0);
        assert!(random_search(&toy(), 0, 4).is_err());
    }

    #[test]
    fn random_covers_tiny_space() {
        let q = toy();
        let r = random_search(&q, 4096, 12).unwrap();
        assert_eq!(r.best_code, brute_force(&q).unwrap().best_code);
        assert_eq!(r, random_search(&q, 4096, 12).unwrap());
        assert_eq!(r.evaluations, 4096);
    }
}
