//! Embedding + fitness tables.
//!
//! The on-disk format is a tab-separated file with a header row:
//!
//! ```text
//! id<TAB>[sequence<TAB>]fitness<TAB>e0<TAB>e1 ... e{d-1}
//! ```
//!
//! The `sequence` column is optional and detected from the header. Floats may
//! be decimal or scientific; LF and CRLF line endings are both accepted.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::{index, SliceRandom};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

/// Aligned records of (id, optional sequence, embedding row, fitness).
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessDataset {
    pub ids: Vec<String>,
    pub sequences: Option<Vec<String>>,
    pub embeddings: Matrix,
    pub fitness: Vec<f64>,
}

impl FitnessDataset {
    /// Validates alignment and finiteness.
    pub fn new(
        ids: Vec<String>,
        sequences: Option<Vec<String>>,
        embeddings: Matrix,
        fitness: Vec<f64>,
    ) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::invalid("dataset must contain at least one record"));
        }
        if embeddings.ncols() == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        for len in [embeddings.nrows(), fitness.len()]
            .into_iter()
            .chain(sequences.as_ref().map(Vec::len))
        {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: len,
                });
            }
        }
        if let Some(i) = fitness.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("fitness of record {i} is not finite")));
        }
        if let Some(p) = embeddings.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "embedding of record {} is not finite at e{}",
                p / embeddings.ncols(),
                p % embeddings.ncols()
            )));
        }
        Ok(FitnessDataset {
            ids,
            sequences,
            embeddings,
            fitness,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.ncols()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text, &path.display().to_string())
    }

    /// Parses the TSV format. `source` labels error messages.
    pub fn parse_tsv(text: &str, source: &str) -> Result<Self> {
        let perr = |line: usize, column: Option<String>, message: String| Error::Parse {
            file: source.to_string(),
            line,
            column,
            message,
        };

        let mut lines = text
            .split('\n')
            .map(|l| l.strip_suffix('\r').unwrap_or(l))
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty());

        let (_, header) = lines.next().ok_or_else(|| perr(1, None, "empty file".into()))?;
        let cols: Vec<&str> = header.split('\t').map(str::trim).collect();

        if cols.first() != Some(&"id") {
            return Err(perr(1, None, "header must start with `id`".into()));
        }
        let has_sequence = cols.get(1) == Some(&"sequence");
        let fitness_col = if has_sequence { 2 } else { 1 };
        if cols.get(fitness_col) != Some(&"fitness") {
            return Err(perr(1, Some("fitness".into()), "missing `fitness` column".into()));
        }
        let emb_start = fitness_col + 1;
        let dim = cols.len() - emb_start;
        if dim == 0 {
            return Err(perr(1, None, "no embedding columns (expected e0 ...)".into()));
        }
        for (j, name) in cols[emb_start..].iter().enumerate() {
            if *name != format!("e{j}") {
                return Err(perr(
                    1,
                    Some((*name).to_string()),
                    format!("expected embedding column `e{j}`"),
                ));
            }
        }

        let mut ids = Vec::new();
        let mut sequences = has_sequence.then(Vec::new);
        let mut fitness = Vec::new();
        let mut data = Vec::new();

        let parse_float = |s: &str, line: usize, row: usize, col: &str| -> Result<f64> {
            let v: f64 = s.trim().parse().map_err(|_| {
                perr(
                    line,
                    Some(col.to_string()),
                    format!("row {row}: cannot parse `{s}` as a number"),
                )
            })?;
            if !v.is_finite() {
                return Err(perr(
                    line,
                    Some(col.to_string()),
                    format!("row {row}: non-finite value `{s}`"),
                ));
            }
            Ok(v)
        };

        for (row, (line, text)) in lines.enumerate() {
            let row = row + 1;
            let fields: Vec<&str> = text.split('\t').collect();
            if fields.len() != cols.len() {
                return Err(perr(
                    line,
                    None,
                    format!(
                        "row {row} has {} embedding values but the header declares {dim}",
                        fields.len().saturating_sub(emb_start)
                    ),
                ));
            }
            ids.push(fields[0].trim().to_string());
            if let Some(seqs) = sequences.as_mut() {
                seqs.push(fields[1].trim().to_string());
            }
            fitness.push(parse_float(fields[fitness_col], line, row, "fitness")?);
            for (j, f) in fields[emb_start..].iter().enumerate() {
                data.push(parse_float(f, line, row, cols[emb_start + j])?);
            }
        }

        if ids.is_empty() {
            return Err(perr(1, None, "file has a header but no records".into()));
        }
        let embeddings = Matrix::from_row_major(ids.len(), dim, data)?;
        Self::new(ids, sequences, embeddings, fitness)
    }

    /// Serializes in the canonical TSV format (shortest round-trip float formatting).
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id");
        if self.sequences.is_some() {
            out.push_str("\tsequence");
        }
        out.push_str("\tfitness");
        for j in 0..self.dim() {
            let _ = write!(out, "\te{j}");
        }
        out.push('\n');
        for i in 0..self.len() {
            out.push_str(&self.ids[i]);
            if let Some(seqs) = &self.sequences {
                out.push('\t');
                out.push_str(&seqs[i]);
            }
            let _ = write!(out, "\t{}", self.fitness[i]);
            for v in self.embeddings.row(i) {
                let _ = write!(out, "\t{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    /// Records at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> FitnessDataset {
        FitnessDataset {
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            sequences: self
                .sequences
                .as_ref()
                .map(|s| idx.iter().map(|&i| s[i].clone()).collect()),
            embeddings: self.embeddings.select_rows(idx),
            fitness: idx.iter().map(|&i| self.fitness[i]).collect(),
        }
    }

    /// `n` distinct records drawn uniformly without replacement, in draw order.
    pub fn subsample(&self, n: usize, seed: u64) -> Result<FitnessDataset> {
        if n == 0 || n > self.len() {
            return Err(Error::invalid(format!(
                "subsample size {n} must be in 1..={}",
                self.len()
            )));
        }
        let mut rng = rng::seeded(seed);
        let idx = index::sample(&mut rng, self.len(), n).into_vec();
        Ok(self.select(&idx))
    }

    /// Random train/test partition; the train part has `round(fraction * N)`
    /// records (half rounds up).
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(FitnessDataset, FitnessDataset)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "train fraction {train_fraction} must lie strictly between 0 and 1"
            )));
        }
        let n = self.len();
        let n_train = train_size(n, train_fraction);
        if n_train == 0 || n_train == n {
            return Err(Error::invalid(format!(
                "train fraction {train_fraction} on {n} records leaves an empty part"
            )));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng::seeded(seed));
        let (tr, te) = idx.split_at(n_train);
        Ok((self.select(tr), self.select(te)))
    }
}

pub fn train_size(n: usize, fraction: f64) -> usize {
    (fraction * n as f64 + 0.5).floor() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "id\tsequence\tfitness\te0\te1\te2\te3\n\
        a\tMKV\t1.5\t0.1\t0.2\t0.3\t0.4\n\
        b\tMKL\t-2e-1\t1\t2\t3\t4\r\n\
        c\tMKA\t3\t1e3\t-1.5E-2\t0\t0\n";

    fn toy(n: usize) -> FitnessDataset {
        let ids = (0..n).map(|i| format!("r{i}")).collect();
        let emb = Matrix::from_row_major(n, 2, (0..2 * n).map(|v| v as f64).collect()).unwrap();
        let fit = (0..n).map(|i| i as f64 * 10.0).collect();
        FitnessDataset::new(ids, None, emb, fit).unwrap()
    }

    #[test]
    fn parses_well_formed_fixture() {
        let ds = FitnessDataset::parse_tsv(FIXTURE, "fx").unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 4);
        assert_eq!(ds.ids, vec!["a", "b", "c"]);
        assert_eq!(ds.sequences.as_ref().unwrap()[2], "MKA");
        assert_eq!(ds.fitness, vec![1.5, -0.2, 3.0]);
        assert_eq!(ds.embeddings.row(2), &[1000.0, -0.015, 0.0, 0.0]);
    }

    #[test]
    fn sequence_column_is_optional() {
        let text = "id\tfitness\te0\nx\t1\t2\ny\t3\t4\n";
        let ds = FitnessDataset::parse_tsv(text, "fx").unwrap();
        assert!(ds.sequences.is_none());
        assert_eq!(ds.embeddings.row(1), &[4.0]);
    }

    #[test]
    fn ragged_row_names_the_row() {
        let text = "id\tfitness\te0\te1\te2\te3\n\
                    a\t1\t0\t0\t0\t0\n\
                    b\t1\t0\t0\t0\n";
        let err = FitnessDataset::parse_tsv(text, "fx").unwrap_err().to_string();
        assert!(err.contains("row 2 has 3 embedding values"), "{err}");
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn nan_fitness_names_the_cell() {
        let text = "id\tfitness\te0\na\tnan\t0\n";
        let err = FitnessDataset::parse_tsv(text, "fx").unwrap_err().to_string();
        assert!(err.contains("column `fitness`"), "{err}");
        assert!(err.contains("row 1"), "{err}");
        let text = "id\tfitness\te0\te1\na\t1\t0\tinf\n";
        let err = FitnessDataset::parse_tsv(text, "fx").unwrap_err().to_string();
        assert!(err.contains("column `e1`"), "{err}");
    }

    #[test]
    fn header_errors() {
        assert!(FitnessDataset::parse_tsv("", "fx")
            .unwrap_err()
            .to_string()
            .contains("empty file"));
        assert!(FitnessDataset::parse_tsv("\n\n", "fx").is_err());
        let err = FitnessDataset::parse_tsv("id\tscore\te0\na\t1\t2\n", "fx").unwrap_err();
        assert!(err.to_string().contains("missing `fitness` column"));
        assert!(FitnessDataset::parse_tsv("id\tfitness\na\t1\n", "fx").is_err());
        assert!(FitnessDataset::parse_tsv("id\tfitness\te0\n", "fx").is_err());
        assert!(FitnessDataset::parse_tsv("id\tfitness\te1\na\t1\t2\n", "fx").is_err());
    }

    #[test]
    fn tsv_round_trip() {
        let ds = FitnessDataset::parse_tsv(FIXTURE, "fx").unwrap();
        let again = FitnessDataset::parse_tsv(&ds.to_tsv(), "fx").unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn subsample_all_is_a_permutation() {
        let ds = toy(6);
        let s = ds.subsample(6, 3).unwrap();
        let mut ids = s.ids.clone();
        ids.sort();
        assert_eq!(ids, ds.ids);
    }

    #[test]
    fn subsample_deterministic_and_bounded() {
        let ds = toy(5);
        assert_eq!(ds.subsample(2, 7).unwrap(), ds.subsample(2, 7).unwrap());
        assert!(ds.subsample(6, 7).is_err());
        assert!(ds.subsample(0, 7).is_err());
    }

    #[test]
    fn subsample_uniform_single_draw() {
        let ds = toy(4);
        let mut counts = [0usize; 4];
        for trial in 0..1000 {
            let s = ds.subsample(1, trial).unwrap();
            let i: usize = s.ids[0][1..].parse().unwrap();
            counts[i] += 1;
        }
        for c in counts {
            let freq = c as f64 / 1000.0;
            assert!((freq - 0.25).abs() <= 0.05, "{counts:?}");
        }
    }

    #[test]
    fn split_sizes_follow_half_up_rounding() {
        let (tr, te) = toy(10).split(0.8, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        let (tr, te) = toy(5).split(0.8, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (4, 1));
        assert_eq!(train_size(3, 0.5), 2);
    }

    #[test]
    fn split_errors_on_empty_part() {
        assert!(toy(2).split(0.1, 0).is_err());
        assert!(toy(2).split(0.9, 0).is_err());
        assert!(toy(10).split(1.0, 0).is_err());
        assert!(toy(10).split(0.0, 0).is_err());
    }

    #[test]
    fn split_determinism() {
        let ds = toy(1000);
        let (a, _) = ds.split(0.8, 5).unwrap();
        let (b, _) = ds.split(0.8, 5).unwrap();
        let (c, _) = ds.split(0.8, 6).unwrap();
        assert_eq!(a.ids, b.ids);
        assert_ne!(a.ids, c.ids);
    }
}
