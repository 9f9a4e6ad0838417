//! Linear maps from embedding space to the continuous latent space.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::SymmetricEigen;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionKind {
    Random,
    Pca,
}

impl fmt::Display for ProjectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProjectionKind::Random => "random",
            ProjectionKind::Pca => "pca",
        })
    }
}

impl FromStr for ProjectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(ProjectionKind::Random),
            "pca" => Ok(ProjectionKind::Pca),
            other => Err(Error::invalid(format!(
                "unknown projection `{other}` (expected random or pca)"
            ))),
        }
    }
}

/// `z = W (e - mean)`. `weights` is m×d; `mean` is zero for random projections.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    kind: ProjectionKind,
    weights: Matrix,
    mean: Vec<f64>,
}

impl Projector {
    /// Gaussian projection with i.i.d. `Normal(0, 1/d)` entries. No centering.
    pub fn fit_random(d: usize, m: usize, seed: u64) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::invalid("projection dimensions must be at least 1"));
        }
        let normal = Normal::new(0.0, (1.0 / d as f64).sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
        let mut rng = rng::seeded(seed);
        let data = (0..m * d).map(|_| normal.sample(&mut rng)).collect();
        Ok(Projector {
            kind: ProjectionKind::Random,
            weights: Matrix::from_row_major(m, d, data)?,
            mean: vec![0.0; d],
        })
    }

    /// Top-`m` principal directions of the centered data, in descending
    /// eigenvalue order. Each direction is sign-flipped so that its
    /// largest-magnitude entry is positive.
    pub fn fit_pca(embeddings: &Matrix, m: usize) -> Result<Self> {
        let n = embeddings.nrows();
        let d = embeddings.ncols();
        if n < 2 {
            return Err(Error::invalid("PCA needs at least two records"));
        }
        if m == 0 {
            return Err(Error::invalid("latent dimension must be at least 1"));
        }
        let max_rank = (n - 1).min(d);
        if m > max_rank {
            return Err(Error::RankDeficient {
                requested: m,
                effective_rank: max_rank,
            });
        }

        let mean = embeddings.column_means();
        let mut centered = embeddings.to_dmatrix();
        for mut row in centered.row_iter_mut() {
            for (v, mu) in row.iter_mut().zip(&mean) {
                *v -= mu;
            }
        }

        // Eigendecompose whichever of the d×d covariance or n×n Gram matrix is smaller.
        let (eigvals, directions) = if d <= n {
            let cov = centered.transpose() * &centered;
            let eig = SymmetricEigen::new(cov);
            let order = descending(&eig.eigenvalues);
            let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let dirs: Vec<Vec<f64>> = order
                .iter()
                .take(m)
                .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
                .collect();
            (vals, dirs)
        } else {
            let gram = &centered * centered.transpose();
            let eig = SymmetricEigen::new(gram);
            let order = descending(&eig.eigenvalues);
            let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let mut dirs = Vec::with_capacity(m);
            for &i in order.iter().take(m) {
                let u = eig.eigenvectors.column(i);
                let v = centered.transpose() * u;
                let nrm = v.norm();
                dirs.push(v.iter().map(|x| x / nrm).collect());
            }
            (vals, dirs)
        };

        let top = eigvals.first().copied().unwrap_or(0.0).max(0.0);
        let tol = top * (n.max(d) as f64) * f64::EPSILON * 16.0;
        let effective_rank = eigvals.iter().filter(|&&v| v > tol).count();
        if m > effective_rank {
            return Err(Error::RankDeficient {
                requested: m,
                effective_rank,
            });
        }

        let mut data = Vec::with_capacity(m * d);
        for mut dir in directions {
            let pivot = dir
                .iter()
                .copied()
                .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
            if pivot < 0.0 {
                dir.iter_mut().for_each(|v| *v = -*v);
            }
            data.extend(dir);
        }
        Ok(Projector {
            kind: ProjectionKind::Pca,
            weights: Matrix::from_row_major(m, d, data)?,
            mean,
        })
    }

    /// Builds a projector from explicit parameters.
    pub fn from_parts(kind: ProjectionKind, weights: Matrix, mean: Vec<f64>) -> Result<Self> {
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::invalid("projection matrix must be non-empty"));
        }
        if mean.len() != weights.ncols() {
            return Err(Error::DimensionMismatch {
                expected: weights.ncols(),
                actual: mean.len(),
            });
        }
        if weights.as_slice().iter().chain(&mean).any(|v| !v.is_finite()) {
            return Err(Error::invalid("projection parameters must be finite"));
        }
        if kind == ProjectionKind::Random && mean.iter().any(|&v| v != 0.0) {
            return Err(Error::invalid("random projections carry a zero mean"));
        }
        Ok(Projector { kind, weights, mean })
    }

    pub fn kind(&self) -> ProjectionKind {
        self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn project(&self, e: &[f64]) -> Result<Vec<f64>> {
        if e.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: e.len(),
            });
        }
        let centered: Vec<f64> = e.iter().zip(&self.mean).map(|(x, mu)| x - mu).collect();
        Ok(self.weights.rows().map(|w| dot(w, &centered)).collect())
    }

    pub fn project_all(&self, embeddings: &Matrix) -> Result<Matrix> {
        let rows = embeddings.rows().map(|e| self.project(e)).collect::<Result<Vec<_>>>()?;
        if rows.is_empty() {
            return Ok(Matrix::zeros(0, self.output_dim()));
        }
        Matrix::from_rows(&rows)
    }

    /// TSV block: `kind`, `d`, `m` header lines, a `mean` row, then m `w` rows.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "kind\t{}", self.kind);
        let _ = writeln!(out, "d\t{}", self.input_dim());
        let _ = writeln!(out, "m\t{}", self.output_dim());
        out.push_str("mean");
        for v in &self.mean {
            let _ = write!(out, "\t{v:.16e}");
        }
        out.push('\n');
        for row in self.weights.rows() {
            out.push('w');
            for v in row {
                let _ = write!(out, "\t{v:.16e}");
            }
            out.push('\n');
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
        let lines: Vec<(usize, Vec<&str>)> = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r').split('\t').collect()))
            .collect();
        let field = |idx: usize, key: &str| -> Result<&str> {
            let (line, f) = lines
                .get(idx)
                .ok_or_else(|| perr(idx + 1, format!("missing `{key}` line")))?;
            if f.len() != 2 || f[0] != key {
                return Err(perr(*line, format!("expected `{key}<TAB>value`")));
            }
            Ok(f[1])
        };
        let kind: ProjectionKind = field(0, "kind")?.parse()?;
        let d: usize = field(1, "d")?.parse().map_err(|_| perr(lines[1].0, "bad `d`".into()))?;
        let m: usize = field(2, "m")?.parse().map_err(|_| perr(lines[2].0, "bad `m`".into()))?;
        if lines.len() != 4 + m {
            return Err(perr(
                lines.last().map(|l| l.0).unwrap_or(1),
                format!("expected {} lines for m = {m}, found {}", 4 + m, lines.len()),
            ));
        }
        let parse_row = |idx: usize, key: &str| -> Result<Vec<f64>> {
            let (line, f) = &lines[idx];
            if f[0] != key || f.len() != d + 1 {
                return Err(perr(*line, format!("expected `{key}` row with {d} values")));
            }
            f[1..]
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| perr(*line, format!("bad number `{s}`"))))
                .collect()
        };
        let mean = parse_row(3, "mean")?;
        let mut data = Vec::with_capacity(m * d);
        for i in 0..m {
            data.extend(parse_row(4 + i, "w")?);
        }
        Self::from_parts(kind, Matrix::from_row_major(m, d, data)?, mean)
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

fn descending(vals: &nalgebra::DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    fn random_matrix(n: usize, d: usize, seed: u64) -> Matrix {
        let mut r = rng::seeded(seed);
        let scales: Vec<f64> = (0..d).map(|j| 1.0 + (d - j) as f64).collect();
        let data = (0..n * d).map(|k| r.random_range(-1.0..1.0) * scales[k % d]).collect();
        Matrix::from_row_major(n, d, data).unwrap()
    }

    #[test]
    fn random_projection_is_deterministic() {
        let a = Projector::fit_random(10, 3, 42).unwrap();
        let b = Projector::fit_random(10, 3, 42).unwrap();
        let c = Projector::fit_random(10, 3, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.mean().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn random_projection_moments() {
        let p = Projector::fit_random(512, 16, 9).unwrap();
        let w = p.weights().as_slice();
        assert_eq!(w.len(), 8192);
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.01, "mean {mean}");
        let target = 1.0 / 512.0;
        assert!((var - target).abs() < 0.2 * target, "var {var}");
    }

    #[test]
    fn zero_vector_projects_to_zero() {
        let p = Projector::fit_random(6, 4, 1).unwrap();
        assert_eq!(p.project(&[0.0; 6]).unwrap(), vec![0.0; 4]);
        assert!(matches!(
            p.project(&[0.0; 5]),
            Err(Error::DimensionMismatch { expected: 6, actual: 5 })
        ));
    }

    #[test]
    fn pca_on_diagonal_line() {
        let pts: Vec<[f64; 2]> = (-2..=2).map(|t| [t as f64, t as f64]).collect();
        let p = Projector::fit_pca(&Matrix::from_rows(&pts).unwrap(), 1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_close(p.weights().row(0), &[s, s], 1e-9);
    }

    #[test]
    fn pca_axis_aligned() {
        // variances 4 and 1 along axis 0 and axis 1
        let pts = [
            [2.0, 0.0],
            [-2.0, 0.0],
            [0.0, 1.0],
            [0.0, -1.0],
            [2.0, 1.0],
            [-2.0, -1.0],
            [2.0, -1.0],
            [-2.0, 1.0],
        ];
        let p = Projector::fit_pca(&Matrix::from_rows(&pts).unwrap(), 2).unwrap();
        assert_close(p.weights().row(0), &[1.0, 0.0], 1e-9);
        assert_close(p.weights().row(1), &[0.0, 1.0], 1e-9);
    }

    #[test]
    fn pca_rows_orthonormal_both_paths() {
        for (n, d) in [(40, 6), (5, 12)] {
            let x = random_matrix(n, d, 3);
            let m = 4;
            let p = Projector::fit_pca(&x, m).unwrap();
            for i in 0..m {
                for j in 0..m {
                    let g = dot(p.weights().row(i), p.weights().row(j));
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g - want).abs() < 1e-8, "n={n} d={d} ({i},{j}) {g}");
                }
            }
        }
    }

    #[test]
    fn pca_gram_and_covariance_paths_agree() {
        // d > n uses the Gram route; compare against covariance route on a padded copy
        let x = random_matrix(6, 9, 11);
        let gram = Projector::fit_pca(&x, 3).unwrap();
        let mut rows: Vec<Vec<f64>> = x.rows().map(<[f64]>::to_vec).collect();
        let mean = x.column_means();
        // Adding mirrored copies around the mean leaves the principal axes unchanged and makes n > d.
        for r in x.rows() {
            rows.push(r.iter().zip(&mean).map(|(v, mu)| 2.0 * mu - v).collect());
        }
        let cov = Projector::fit_pca(&Matrix::from_rows(&rows).unwrap(), 3).unwrap();
        for i in 0..3 {
            assert_close(gram.weights().row(i), cov.weights().row(i), 1e-8);
        }
    }

    #[test]
    fn pca_centers_on_training_mean() {
        let x = random_matrix(30, 5, 4);
        let p = Projector::fit_pca(&x, 3).unwrap();
        let z = p.project(&x.column_means()).unwrap();
        assert_close(&z, &[0.0; 3], 1e-12);
    }

    #[test]
    fn pca_rank_errors() {
        let x = random_matrix(4, 10, 1);
        assert!(matches!(
            Projector::fit_pca(&x, 4),
            Err(Error::RankDeficient {
                requested: 4,
                effective_rank: 3
            })
        ));
        let flat = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        assert!(matches!(
            Projector::fit_pca(&flat, 2),
            Err(Error::RankDeficient {
                requested: 2,
                effective_rank: 1
            })
        ));
    }

    #[test]
    fn explicit_matrix_product() {
        let w = Matrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap();
        let p = Projector::from_parts(ProjectionKind::Random, w, vec![0.0, 0.0]).unwrap();
        assert_eq!(p.project(&[3.0, 4.0]).unwrap(), vec![3.0, 8.0]);
    }

    #[test]
    fn pca_latent_variance_nonincreasing() {
        let x = random_matrix(200, 6, 8);
        let p = Projector::fit_pca(&x, 6).unwrap();
        let z = p.project_all(&x).unwrap();
        let vars: Vec<f64> = (0..6).map(|k| z.column(k).iter().map(|v| v * v).sum::<f64>()).collect();
        for w in vars.windows(2) {
            assert!(w[0] + 1e-9 >= w[1], "{vars:?}");
        }
    }

    #[test]
    fn pca_reconstruction_error_monotone() {
        let x = random_matrix(60, 7, 5);
        let mean = x.column_means();
        let err = |m: usize| -> f64 {
            let p = Projector::fit_pca(&x, m).unwrap();
            let mut total = 0.0;
            for e in x.rows() {
                let z = p.project(e).unwrap();
                for j in 0..7 {
                    let recon: f64 = mean[j] + (0..m).map(|k| z[k] * p.weights().get(k, j)).sum::<f64>();
                    total += (e[j] - recon).powi(2);
                }
            }
            total
        };
        let errs: Vec<f64> = (1..=7).map(err).collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{errs:?}");
        }
        assert!(errs[6] < 1e-18 * 1e6);
    }

    #[test]
    fn tsv_round_trip_is_exact() {
        let x = random_matrix(20, 5, 2);
        for p in [
            Projector::fit_pca(&x, 3).unwrap(),
            Projector::fit_random(5, 2, 1).unwrap(),
        ] {
            let q = Projector::parse_tsv(&p.to_tsv(), "mem").unwrap();
            assert_eq!(p, q);
        }
        assert!(Projector::parse_tsv("kind\tpca\nd\t2\nm\t1\nmean\t0\n", "mem").is_err());
    }
}
