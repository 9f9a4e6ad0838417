use super::{FlipState, OptimizationResult};
use crate::binarization::BinaryCode;
use crate::error::{Error, Result};
use crate::surrogate::QuboSurrogate;

pub const MAX_BRUTE_FORCE_BITS: usize = 24;

/// Exact argmax by enumerating all `2^m` codes in lexicographic order; the
/// lexicographically smallest code wins ties.
pub fn brute_force(q: &QuboSurrogate) -> Result<OptimizationResult> {
    let m = q.dim();
    if m > MAX_BRUTE_FORCE_BITS {
        return Err(Error::invalid(format!(
            "brute force is limited to m <= {MAX_BRUTE_FORCE_BITS}, got {m}"
        )));
    }
    let total = 1u64 << m;
    let mut state = FlipState::new(q, vec![0; m]);
    let mut best_index = 0u64;
    let mut best_score = state.score;
    let mut trace = vec![(0, best_score)];

    for i in 1..total {
        // Counting from i-1 to i flips the trailing ones of i-1 and the next zero.
        for b in 0..=i.trailing_zeros() as usize {
            state.flip(m - 1 - b);
        }
        if i % 1024 == 0 {
            state.resync();
        }
        if state.score > best_score {
            best_score = state.score;
            best_index = i;
            trace.push((i as usize, best_score));
        }
    }

    Ok(OptimizationResult::finish(
        q,
        BinaryCode::from_index(best_index, m),
        BinaryCode::zeros(m),
        total,
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::super::test_support::{normal_surrogate, toy};
    use super::*;

    #[test]
    fn toy_optimum() {
        let r = brute_force(&toy()).unwrap();
        assert_eq!(r.best_code.bits(), &[1, 1]);
        assert_eq!(r.best_score, 2.0);
        assert_eq!(r.evaluations, 4);
    }

    #[test]
    fn flat_landscape_returns_zeros() {
        let q = QuboSurrogate::new(0.0, vec![0.0; 6], vec![vec![0.0; 6]; 6], None).unwrap();
        let r = brute_force(&q).unwrap();
        assert_eq!(r.best_code, BinaryCode::zeros(6));
        assert_eq!(r.best_score, 0.0);
    }

    #[test]
    fn separable_optimum() {
        let h = vec![0.3, -0.2, 1.0, -4.0];
        let q = QuboSurrogate::new(1.0, h, vec![vec![0.0; 4]; 4], None).unwrap();
        assert_eq!(brute_force(&q).unwrap().best_code.bits(), &[1, 0, 1, 0]);
    }

    #[test]
    fn matches_direct_enumeration() {
        for seed in 0..5 {
            let q = normal_surrogate(9, seed);
            let mut best = (f64::NEG_INFINITY, BinaryCode::zeros(9));
            for i in 0..512 {
                let c = BinaryCode::from_index(i, 9);
                let s = q.predict(&c).unwrap();
                if s > best.0 {
                    best = (s, c);
                }
            }
            let r = brute_force(&q).unwrap();
            assert_eq!(r.best_code, best.1);
            assert_eq!(r.best_score, best.0);
        }
    }

    #[test]
    fn size_guard() {
        let q = QuboSurrogate::new(0.0, vec![0.0; 25], vec![vec![0.0; 25]; 25], None).unwrap();
        assert!(brute_force(&q).is_err());
    }
}
