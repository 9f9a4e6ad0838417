//! Median-threshold binarization and the binary code types.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A point of the Boolean hypercube `{0,1}^m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryCode(Vec<u8>);

impl BinaryCode {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(k) = bits.iter().position(|&b| b > 1) {
            return Err(Error::invalid(format!("bit {k} is {} (expected 0 or 1)", bits[k])));
        }
        Ok(BinaryCode(bits))
    }

    pub fn zeros(m: usize) -> Self {
        BinaryCode(vec![0; m])
    }

    pub fn ones(m: usize) -> Self {
        BinaryCode(vec![1; m])
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        BinaryCode(bits.iter().map(|&b| b as u8).collect())
    }

    /// Code whose bit `k` is bit `m-1-k` of `index`, so that increasing
    /// indices enumerate codes in lexicographic order.
    pub fn from_index(index: u64, m: usize) -> Self {
        BinaryCode((0..m).map(|k| ((index >> (m - 1 - k)) & 1) as u8).collect())
    }

    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        BinaryCode((0..m).map(|_| rng.random_range(0..2u8)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, k: usize) -> bool {
        self.0[k] == 1
    }

    pub fn set(&mut self, k: usize, value: bool) {
        self.0[k] = value as u8;
    }

    pub fn flip(&mut self, k: usize) {
        self.0[k] ^= 1;
    }

    pub fn flipped(&self, k: usize) -> Self {
        let mut c = self.clone();
        c.flip(k);
        c
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn hamming(&self, other: &BinaryCode) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count())
    }
}

impl fmt::Display for BinaryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_char(if b == 1 { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl FromStr for BinaryCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::invalid(format!("invalid bit character `{other}`"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(BinaryCode)
    }
}

/// Per-dimension thresholds; bit k is set iff `z_k > tau_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Binarizer {
    tau: Vec<f64>,
}

impl Binarizer {
    /// Column medians of `latents`; the median of an even-length column is the
    /// midpoint of its two middle order statistics.
    pub fn fit(latents: &Matrix) -> Result<Self> {
        if latents.nrows() == 0 {
            return Err(Error::invalid("cannot fit thresholds on zero records"));
        }
        let tau = (0..latents.ncols()).map(|k| median(latents.column(k))).collect();
        Self::from_thresholds(tau)
    }

    pub fn from_thresholds(tau: Vec<f64>) -> Result<Self> {
        if tau.is_empty() {
            return Err(Error::invalid("binarizer needs at least one dimension"));
        }
        if tau.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("thresholds must be finite"));
        }
        Ok(Binarizer { tau })
    }

    pub fn dim(&self) -> usize {
        self.tau.len()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.tau
    }

    pub fn binarize(&self, z: &[f64]) -> Result<BinaryCode> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: z.len(),
            });
        }
        Ok(BinaryCode(
            z.iter().zip(&self.tau).map(|(v, t)| (v > t) as u8).collect(),
        ))
    }

    pub fn binarize_all(&self, latents: &Matrix) -> Result<Vec<BinaryCode>> {
        latents.rows().map(|z| self.binarize(z)).collect()
    }

    /// Single TSV row of thresholds.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (k, t) in self.tau.iter().enumerate() {
            if k > 0 {
                out.push('\t');
            }
            let _ = write!(out, "{t:.16e}");
        }
        out.push('\n');
        out
    }

    pub fn parse_tsv(text: &str, source: &str) -> Result<Self> {
        let line = text.trim_end_matches(['\n', '\r']);
        if line.is_empty() || line.contains('\n') {
            return Err(Error::Parse {
                file: source.to_string(),
                line: 1,
                column: None,
                message: "expected a single row of thresholds".into(),
            });
        }
        let tau = line
            .split('\t')
            .enumerate()
            .map(|(k, s)| {
                s.trim().parse::<f64>().map_err(|_| Error::Parse {
                    file: source.to_string(),
                    line: 1,
                    column: Some(format!("tau{k}")),
                    message: format!("bad number `{s}`"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_thresholds(tau)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text, &path.display().to_string())
    }
}

pub(crate) fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Training codes with their labels; the retrieval target for decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeBook {
    pub codes: Vec<BinaryCode>,
    pub fitness: Vec<f64>,
    pub ids: Vec<String>,
    pub sequences: Option<Vec<String>>,
}

impl CodeBook {
    pub fn new(
        codes: Vec<BinaryCode>,
        fitness: Vec<f64>,
        ids: Vec<String>,
        sequences: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = codes.len();
        for len in [fitness.len(), ids.len()]
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
        if let Some(first) = codes.first() {
            if let Some(bad) = codes.iter().find(|c| c.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    actual: bad.len(),
                });
            }
        }
        Ok(CodeBook {
            codes,
            fitness,
            ids,
            sequences,
        })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.codes.first().map(BinaryCode::len).unwrap_or(0)
    }

    /// Header `id<TAB>[sequence<TAB>]fitness<TAB>code`, code as a 0/1 string.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id");
        if self.sequences.is_some() {
            out.push_str("\tsequence");
        }
        out.push_str("\tfitness\tcode\n");
        for i in 0..self.len() {
            out.push_str(&self.ids[i]);
            if let Some(s) = &self.sequences {
                out.push('\t');
                out.push_str(&s[i]);
            }
            let _ = writeln!(out, "\t{}\t{}", self.fitness[i], self.codes[i]);
        }
        out
    }

    pub fn parse_tsv(text: &str, source: &str) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse {
            file: source.to_string(),
            line,
            column: None,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
        let has_seq = match header.split('\t').collect::<Vec<_>>().as_slice() {
            ["id", "fitness", "code"] => false,
            ["id", "sequence", "fitness", "code"] => true,
            _ => return Err(perr(1, "expected header id[\\tsequence]\\tfitness\\tcode".into())),
        };
        let mut codes = Vec::new();
        let mut fitness = Vec::new();
        let mut ids = Vec::new();
        let mut seqs = has_seq.then(Vec::new);
        for (line, text) in lines {
            let f: Vec<&str> = text.split('\t').collect();
            if f.len() != 3 + has_seq as usize {
                return Err(perr(line, "wrong number of fields".into()));
            }
            ids.push(f[0].to_string());
            if let Some(s) = seqs.as_mut() {
                s.push(f[1].to_string());
            }
            let off = has_seq as usize;
            let y: f64 = f[1 + off]
                .parse()
                .map_err(|_| perr(line, format!("bad fitness `{}`", f[1 + off])))?;
            if !y.is_finite() {
                return Err(perr(line, "non-finite fitness".into()));
            }
            fitness.push(y);
            codes.push(f[2 + off].parse().map_err(|e: Error| perr(line, e.to_string()))?);
        }
        Self::new(codes, fitness, ids, seqs)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text, &path.display().to_string())
    }
}
