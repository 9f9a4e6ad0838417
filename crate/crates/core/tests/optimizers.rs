use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use binlat::binarization::BinaryCode;
use binlat::optimizers::{
    brute_force, genetic_algorithm, greedy_hill_climb, latent_bo, random_search, run_method, simulated_annealing,
    BoParams, GaParams, Method, OptimizerParams, SaParams,
};
use binlat::surrogate::{feature_count, QuboSurrogate};

fn surrogate(m: usize, seed: u64) -> QuboSurrogate {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..feature_count(m)).map(|_| StandardNormal.sample(&mut r)).collect();
    QuboSurrogate::from_weights(StandardNormal.sample(&mut r), &w, m, None).unwrap()
}

fn small_params() -> OptimizerParams {
    let mut p = OptimizerParams::default();
    p.sa.iterations = 300;
    p.ga.generations = 15;
    p.random.samples = 200;
    p.bo.iterations = 20;
    p.bo.pool_size = 32;
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_method_reports_consistent_scores(m in 1usize..11, qseed in any::<u64>(), seed in any::<u64>(), start_idx in any::<u64>()) {
        let q = surrogate(m, qseed);
        let start = BinaryCode::from_index(start_idx % (1 << m), m);
        let optimum = brute_force(&q).unwrap().best_score;
        for method in Method::ALL {
            let r = run_method(method, &q, &start, &small_params(), seed).unwrap();
            prop_assert!((q.predict(&r.best_code).unwrap() - r.best_score).abs() < 1e-10);
            prop_assert!((q.predict(&r.start_code).unwrap() - r.start_score).abs() < 1e-10);
            prop_assert!(r.best_score <= optimum + 1e-10);
            prop_assert!(r.best_score >= r.start_score - 1e-12, "{method}: best below start");
            prop_assert!((r.improvement - (r.best_score - r.start_score)).abs() < 1e-12);
            prop_assert_eq!(&r, &run_method(method, &q, &start, &small_params(), seed).unwrap());
        }
    }

    #[test]
    fn greedy_is_locally_optimal(m in 1usize..16, qseed in any::<u64>(), start_idx in any::<u64>()) {
        let q = surrogate(m, qseed);
        let start = BinaryCode::from_index(start_idx % (1 << m), m);
        let r = greedy_hill_climb(&q, &start).unwrap();
        let here = q.predict(&r.best_code).unwrap();
        for k in 0..m {
            prop_assert!(q.predict(&r.best_code.flipped(k)).unwrap() <= here);
        }
    }

    #[test]
    fn brute_force_is_exact_argmax(m in 1usize..9, qseed in any::<u64>()) {
        let q = surrogate(m, qseed);
        let r = brute_force(&q).unwrap();
        prop_assert_eq!(r.evaluations, 1u64 << m);
        let scores: Vec<f64> = (0..1u64 << m).map(|i| q.predict(&BinaryCode::from_index(i, m)).unwrap()).collect();
        let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let first = scores.iter().position(|&s| s == best).unwrap() as u64;
        prop_assert_eq!(r.best_code, BinaryCode::from_index(first, m));
    }
}

#[test]
fn starting_at_the_optimum_gives_zero_improvement() {
    let q = surrogate(9, 77);
    let opt = brute_force(&q).unwrap();
    let sa = simulated_annealing(&q, &opt.best_code, &SaParams::default(), 1).unwrap();
    assert_eq!(sa.best_code, opt.best_code);
    assert_eq!(sa.improvement, 0.0);
    let greedy = greedy_hill_climb(&q, &opt.best_code).unwrap();
    assert_eq!(greedy.best_code, opt.best_code);
    assert_eq!(greedy.improvement, 0.0);
}

#[test]
fn hand_traced_greedy_path() {
    let q = QuboSurrogate::new(0.0, vec![1.0, -1.0], vec![vec![0.0, 2.0], vec![2.0, 0.0]], None).unwrap();
    let r = greedy_hill_climb(&q, &BinaryCode::zeros(2)).unwrap();
    assert_eq!(r.best_code.to_string(), "11");
    assert_eq!(r.best_score, 2.0);
    assert_eq!(r.improvement, 2.0);
    let b = brute_force(&q).unwrap();
    assert_eq!(
        (b.best_code.to_string(), b.best_score, b.evaluations),
        ("11".to_string(), 2.0, 4)
    );
}

#[test]
fn flat_landscape_ties_break_to_zeros() {
    let q = QuboSurrogate::new(0.0, vec![0.0; 5], vec![vec![0.0; 5]; 5], None).unwrap();
    assert_eq!(brute_force(&q).unwrap().best_code, BinaryCode::zeros(5));
}

#[test]
fn random_search_covers_tiny_space() {
    let q = surrogate(2, 5);
    let r = random_search(&q, 4096, 9).unwrap();
    assert_eq!(r.best_score, brute_force(&q).unwrap().best_score);
    let one = random_search(&q, 1, 9).unwrap();
    assert_eq!(one.best_code, one.start_code);
    assert_eq!(one.improvement, 0.0);
}

#[test]
fn ga_without_variation_returns_its_population() {
    let q = surrogate(8, 6);
    let code: BinaryCode = "10110010".parse().unwrap();
    let params = GaParams {
        mutation_rate: Some(0.0),
        ..GaParams::default()
    };
    let r = genetic_algorithm(&q, &vec![code.clone(); params.population], &params, 3).unwrap();
    assert_eq!(r.best_code, code);
    let frozen = GaParams {
        generations: 0,
        ..GaParams::default()
    };
    let r = genetic_algorithm(&q, &[], &frozen, 3).unwrap();
    assert_eq!(r.best_code, r.start_code);
}

#[test]
fn bo_accepts_empty_observations() {
    let q = surrogate(10, 7);
    let r = latent_bo(
        &q,
        &[],
        &BoParams {
            iterations: 25,
            ..BoParams::default()
        },
        4,
    )
    .unwrap();
    assert!(r.best_score >= r.start_score);
    assert_eq!(r.trace.len(), 26);
}

#[test]
fn sa_and_ga_reach_the_optimum_on_small_instances() {
    let mut sa_hits = 0;
    let mut ga_hits = 0;
    for i in 0..20u64 {
        let q = surrogate(10, 900 + i);
        let optimum = brute_force(&q).unwrap().best_score;
        let start = BinaryCode::zeros(10);
        sa_hits += usize::from(
            simulated_annealing(&q, &start, &SaParams::default(), i)
                .unwrap()
                .best_score
                >= optimum - 1e-9,
        );
        ga_hits += usize::from(
            genetic_algorithm(&q, &[start], &GaParams::default(), i)
                .unwrap()
                .best_score
                >= optimum - 1e-9,
        );
    }
    assert!(sa_hits >= 18, "SA {sa_hits}/20");
    assert!(ga_hits >= 18, "GA {ga_hits}/20");
}

#[test]
fn trace_is_monotone_and_csv_shaped() {
    let q = surrogate(12, 8);
    let r = simulated_annealing(&q, &BinaryCode::zeros(12), &SaParams::default(), 2).unwrap();
    assert!(r.trace.windows(2).all(|w| w[1].1 >= w[0].1 && w[1].0 > w[0].0));
    let csv = r.trace_csv();
    assert!(csv.starts_with("step,best_score\n"));
    assert_eq!(csv.lines().count(), r.trace.len() + 1);
}

#[test]
fn dimension_mismatch_is_an_error() {
    let q = surrogate(4, 1);
    let wrong = BinaryCode::zeros(5);
    for method in [Method::Sa, Method::Ga, Method::Greedy, Method::Bo] {
        assert!(
            run_method(method, &q, &wrong, &OptimizerParams::default(), 0).is_err(),
            "{method}"
        );
    }
    let big = surrogate(25, 1);
    assert!(brute_force(&big).is_err());
}
