use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, OptimizationResult};
use crate::binarization::BinaryCode;
use crate::error::{Error, Result};
use crate::rng::{self, Rng as ChaRng};
use crate::surrogate::QuboSurrogate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub tournament_size: usize,
    /// Probability that a child bit comes from the first parent.
    pub crossover_mix: f64,
    /// Per-bit mutation probability; `1/m` when unset.
    pub mutation_rate: Option<f64>,
    pub elite: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population: 64,
            generations: 100,
            tournament_size: 2,
            crossover_mix: 0.5,
            mutation_rate: None,
            elite: 1,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 || self.tournament_size == 0 {
            return Err(Error::invalid(
                "ga.population and ga.tournament_size must be at least 1",
            ));
        }
        if self.elite > self.population {
            return Err(Error::invalid("ga.elite cannot exceed ga.population"));
        }
        if !(0.0..=1.0).contains(&self.crossover_mix) {
            return Err(Error::invalid("ga.crossover_mix must lie in [0, 1]"));
        }
        if let Some(r) = self.mutation_rate {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::invalid("ga.mutation_rate must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

struct Scored {
    bits: Vec<u8>,
    score: f64,
}

fn tournament<'a>(pop: &'a [Scored], size: usize, rng: &mut ChaRng) -> &'a Scored {
    let mut winner = rng.random_range(0..pop.len());
    for _ in 1..size {
        let c = rng.random_range(0..pop.len());
        if pop[c].score > pop[winner].score || (pop[c].score == pop[winner].score && c < winner) {
            winner = c;
        }
    }
    &pop[winner]
}

/// Generational GA with elitism, tournament selection, uniform crossover and
/// independent per-bit mutation. The initial population is `seed_population`
/// (truncated to the population size) padded with uniform random codes.
pub fn genetic_algorithm(
    q: &QuboSurrogate,
    seed_population: &[BinaryCode],
    params: &GaParams,
    seed: u64,
) -> Result<OptimizationResult> {
    params.validate()?;
    for c in seed_population {
        check_dim(q, c)?;
    }
    let m = q.dim();
    let mutation = params.mutation_rate.unwrap_or(1.0 / m as f64);
    let mut rng = rng::seeded(seed);

    let mut pop: Vec<Scored> = seed_population
        .iter()
        .take(params.population)
        .map(|c| c.bits().to_vec())
        .chain(std::iter::repeat_with(|| {
            BinaryCode::random(m, &mut rng).bits().to_vec()
        }))
        .take(params.population)
        .map(|bits| Scored {
            score: q.score(&bits),
            bits,
        })
        .collect();
    let mut evaluations = pop.len() as u64;

    let argmax = |pop: &[Scored]| -> usize {
        let mut best = 0;
        for (i, s) in pop.iter().enumerate() {
            if s.score > pop[best].score {
                best = i;
            }
        }
        best
    };
    let initial = argmax(&pop);
    let start = BinaryCode::new(pop[initial].bits.clone())?;
    let mut best_bits = pop[initial].bits.clone();
    let mut best_score = pop[initial].score;
    let mut trace = vec![(0, best_score)];

    for generation in 1..=params.generations {
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| pop[b].score.total_cmp(&pop[a].score).then(a.cmp(&b)));
        let mut next: Vec<Scored> = order
            .iter()
            .take(params.elite)
            .map(|&i| Scored {
                bits: pop[i].bits.clone(),
                score: pop[i].score,
            })
            .collect();
        while next.len() < params.population {
            let a = tournament(&pop, params.tournament_size, &mut rng);
            let b = tournament(&pop, params.tournament_size, &mut rng);
            let mut child: Vec<u8> = a
                .bits
                .iter()
                .zip(&b.bits)
                .map(|(&x, &y)| {
                    if rng.random::<f64>() < params.crossover_mix {
                        x
                    } else {
                        y
                    }
                })
                .collect();
            for bit in child.iter_mut() {
                if rng.random::<f64>() < mutation {
                    *bit ^= 1;
                }
            }
            let score = q.score(&child);
            evaluations += 1;
            if score > best_score {
                best_score = score;
                best_bits.copy_from_slice(&child);
            }
            next.push(Scored { bits: child, score });
        }
        pop = next;
        trace.push((generation, best_score));
    }

    Ok(OptimizationResult::finish(
        q,
        BinaryCode::new(best_bits)?,
        start,
        evaluations,
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::super::test_support::normal_surrogate;
    use super::*;

    #[test]
    fn zero_generations_returns_best_initial() {
        let q = normal_surrogate(10, 1);
        let p = GaParams {
            generations: 0,
            ..GaParams::default()
        };
        let r = genetic_algorithm(&q, &[], &p, 3).unwrap();
        assert_eq!(r.best_code, r.start_code);
        assert_eq!(r.evaluations, 64);
    }

    #[test]
    fn identical_population_without_mutation_is_closed() {
        let q = normal_surrogate(10, 2);
        let code: BinaryCode = "1011001110".parse().unwrap();
        let seeds = vec![code.clone(); 64];
        for mix in [0.0, 0.5, 1.0] {
            let p = GaParams {
                mutation_rate: Some(0.0),
                crossover_mix: mix,
                ..GaParams::default()
            };
            let r = genetic_algorithm(&q, &seeds, &p, 5).unwrap();
            assert_eq!(r.best_code, code);
        }
    }

    #[test]
    fn deterministic_and_monotone() {
        let q = normal_surrogate(20, 7);
        let p = GaParams::default();
        let a = genetic_algorithm(&q, &[BinaryCode::zeros(20)], &p, 1).unwrap();
        assert_eq!(a, genetic_algorithm(&q, &[BinaryCode::zeros(20)], &p, 1).unwrap());
        assert!(a.best_score >= a.start_score);
        assert!(a.trace.windows(2).all(|w| w[1].1 >= w[0].1));
        assert_eq!(a.evaluations, 64 + 100 * 63);
    }

    #[test]
    fn rejects_bad_inputs() {
        let q = normal_surrogate(4, 1);
        assert!(genetic_algorithm(&q, &[BinaryCode::zeros(5)], &GaParams::default(), 0).is_err());
        let p = GaParams {
            elite: 65,
            ..GaParams::default()
        };
        assert!(genetic_algorithm(&q, &[], &p, 0).is_err());
    }
}
