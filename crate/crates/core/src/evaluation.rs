//! Ranking, retrieval and percentile metrics.

use serde::{Deserialize, Serialize};

use crate::binarization::{BinaryCode, CodeBook};
use crate::error::{Error, Result};
use crate::optimizers::OptimizationResult;
use crate::surrogate::QuboSurrogate;

/// Average ranks (1-based); tied values share the mean of the ranks they span.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) hold ranks i+1..=j
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman's rho as the Pearson correlation of midranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::invalid("spearman needs at least two paired values"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::invalid("spearman inputs must be finite"));
    }
    if a.iter().all(|&v| v == a[0]) {
        return Err(Error::ConstantInput("first"));
    }
    if b.iter().all(|&v| v == b[0]) {
        return Err(Error::ConstantInput("second"));
    }
    Ok(pearson(&midranks(a), &midranks(b)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub index: usize,
    pub id: String,
    pub distance: usize,
    pub fitness: f64,
}

/// The `k` codebook entries closest to `x` in Hamming distance, ties broken by record order.
pub fn hamming_nn(x: &BinaryCode, book: &CodeBook, k: usize) -> Result<Vec<Neighbor>> {
    if book.is_empty() {
        return Err(Error::invalid("cannot retrieve from an empty codebook"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let mut dist = book
        .codes
        .iter()
        .enumerate()
        .map(|(i, c)| x.hamming(c).map(|d| (d, i)))
        .collect::<Result<Vec<_>>>()?;
    let k = k.min(dist.len());
    if k < dist.len() {
        dist.select_nth_unstable(k - 1);
        dist.truncate(k);
    }
    dist.sort_unstable();
    Ok(dist
        .into_iter()
        .map(|(distance, index)| Neighbor {
            index,
            id: book.ids[index].clone(),
            distance,
            fitness: book.fitness[index],
        })
        .collect())
}

/// Midrank percentile: `100 * (#{y < v} + #{y == v} / 2) / N`.
pub fn percentile(v: f64, training_fitness: &[f64]) -> Result<f64> {
    if training_fitness.is_empty() {
        return Err(Error::invalid("percentile needs a nonempty reference set"));
    }
    let below = training_fitness.iter().filter(|&&y| y < v).count() as f64;
    let equal = training_fitness.iter().filter(|&&y| y == v).count() as f64;
    Ok(100.0 * (below + 0.5 * equal) / training_fitness.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub test_spearman: f64,
    pub improvement: f64,
    pub nn_true_fitness: f64,
    pub nn_percentile: f64,
    pub nn_id: String,
    pub nn_hamming: usize,
}

/// Test-set Spearman of the surrogate plus nearest-training-neighbor metrics for an optimized code.
pub fn evaluate_run(
    q: &QuboSurrogate,
    train: &CodeBook,
    test_codes: &[BinaryCode],
    test_fitness: &[f64],
    opt: &OptimizationResult,
) -> Result<RunMetrics> {
    let test_spearman = test_spearman(q, test_codes, test_fitness)?;
    retrieval_metrics(test_spearman, train, opt)
}

pub fn test_spearman(q: &QuboSurrogate, test_codes: &[BinaryCode], test_fitness: &[f64]) -> Result<f64> {
    let preds = test_codes.iter().map(|c| q.predict(c)).collect::<Result<Vec<_>>>()?;
    spearman(&preds, test_fitness)
}

pub(crate) fn retrieval_metrics(test_spearman: f64, train: &CodeBook, opt: &OptimizationResult) -> Result<RunMetrics> {
    let nn = hamming_nn(&opt.best_code, train, 1)?.remove(0);
    Ok(RunMetrics {
        test_spearman,
        improvement: opt.improvement,
        nn_true_fitness: nn.fitness,
        nn_percentile: percentile(nn.fitness, &train.fitness)?,
        nn_id: nn.id,
        nn_hamming: nn.distance,
    })
}
