//! Quadratic pseudo-Boolean surrogate over binary codes.
//!
//! ```text
//! f(x) = c + sum_k h_k x_k + sum_{k<l} J_kl x_k x_l
//! ```
//!
//! `J` is stored as a dense symmetric matrix with zero diagonal whose entry
//! `J[k][l] = J[l][k]` equals the `k<l` pair coefficient, so the matrix form
//! `h.x + x'Jx/2` gives the same value as the sum above.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::binarization::BinaryCode;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

pub const DEFAULT_LAMBDA: f64 = 1.0;

/// Length of the linear + pairwise feature vector for `m` bits.
pub fn feature_count(m: usize) -> usize {
    m + m * m.saturating_sub(1) / 2
}

/// Position of the `(k, l)` pair feature (`k < l`) inside the feature vector.
pub fn pair_feature_index(k: usize, l: usize, m: usize) -> usize {
    debug_assert!(k < l && l < m);
    m + k * (2 * m - k - 1) / 2 + (l - k - 1)
}

/// `x_1..x_m` followed by `x_k x_l` for `k < l` in lexicographic pair order.
pub fn build_features(x: &BinaryCode) -> Vec<f64> {
    let m = x.len();
    let b = x.bits();
    let mut phi = Vec::with_capacity(feature_count(m));
    phi.extend(b.iter().map(|&v| v as f64));
    for k in 0..m {
        for l in k + 1..m {
            phi.push((b[k] & b[l]) as f64);
        }
    }
    phi
}

/// Indices of nonzero features, ascending.
fn active_features(x: &BinaryCode) -> Vec<usize> {
    let m = x.len();
    let on: Vec<usize> = (0..m).filter(|&k| x.get(k)).collect();
    let mut idx = on.clone();
    for (a, &k) in on.iter().enumerate() {
        for &l in &on[a + 1..] {
            idx.push(pair_feature_index(k, l, m));
        }
    }
    idx.sort_unstable();
    idx
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuboSurrogate {
    m: usize,
    intercept: f64,
    h: Vec<f64>,
    /// Dense row-major m×m, symmetric, zero diagonal.
    j: Vec<f64>,
    /// Ridge coefficient used for fitting; `None` for surrogates built by hand or imported without one.
    lambda: Option<f64>,
}

impl QuboSurrogate {
    /// Builds a surrogate from the intercept, biases, and a symmetric zero-diagonal coupling matrix.
    pub fn new(intercept: f64, h: Vec<f64>, couplings: Vec<Vec<f64>>, lambda: Option<f64>) -> Result<Self> {
        let m = h.len();
        if m == 0 {
            return Err(Error::invalid("surrogate needs at least one bit"));
        }
        if couplings.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: couplings.len(),
            });
        }
        let mut j = Vec::with_capacity(m * m);
        for row in &couplings {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    actual: row.len(),
                });
            }
            j.extend_from_slice(row);
        }
        for k in 0..m {
            if j[k * m + k] != 0.0 {
                return Err(Error::invalid(format!("coupling diagonal ({k},{k}) must be zero")));
            }
            for l in k + 1..m {
                if j[k * m + l] != j[l * m + k] {
                    return Err(Error::invalid(format!("coupling matrix not symmetric at ({k},{l})")));
                }
            }
        }
        Self::checked(QuboSurrogate {
            m,
            intercept,
            h,
            j,
            lambda,
        })
    }

    /// Builds a surrogate from a feature-weight vector laid out like [`build_features`].
    pub fn from_weights(intercept: f64, weights: &[f64], m: usize, lambda: Option<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("surrogate needs at least one bit"));
        }
        if weights.len() != feature_count(m) {
            return Err(Error::DimensionMismatch {
                expected: feature_count(m),
                actual: weights.len(),
            });
        }
        let h = weights[..m].to_vec();
        let mut j = vec![0.0; m * m];
        for k in 0..m {
            for l in k + 1..m {
                let w = weights[pair_feature_index(k, l, m)];
                j[k * m + l] = w;
                j[l * m + k] = w;
            }
        }
        Self::checked(QuboSurrogate {
            m,
            intercept,
            h,
            j,
            lambda,
        })
    }

    fn checked(q: QuboSurrogate) -> Result<Self> {
        if !q.intercept.is_finite() || q.h.iter().chain(&q.j).any(|v| !v.is_finite()) {
            return Err(Error::invalid("surrogate parameters must be finite"));
        }
        if let Some(l) = q.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::invalid(format!("ridge lambda must be positive, got {l}")));
            }
        }
        Ok(q)
    }

    /// Ridge regression on linear + pairwise features with an unpenalized
    /// intercept: features and targets are centered, `(Fc'Fc + lambda I) w = Fc'(y - ybar)`
    /// is solved by Cholesky, and `c = ybar - mean(F).w`.
    pub fn fit(codes: &[BinaryCode], fitness: &[f64], lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("ridge lambda must be positive, got {lambda}")));
        }
        if codes.is_empty() {
            return Err(Error::invalid("cannot fit a surrogate on zero samples"));
        }
        if codes.len() != fitness.len() {
            return Err(Error::DimensionMismatch {
                expected: codes.len(),
                actual: fitness.len(),
            });
        }
        let m = codes[0].len();
        if m == 0 {
            return Err(Error::invalid("codes must have at least one bit"));
        }
        if let Some(bad) = codes.iter().find(|c| c.len() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: bad.len(),
            });
        }
        if fitness.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("fitness values must be finite"));
        }

        let p = feature_count(m);
        let n = codes.len() as f64;
        // Features are 0/1, so the raw Gram matrix and feature sums are exact integer counts.
        let mut gram = vec![0.0f64; p * p];
        let mut sums = vec![0.0f64; p];
        let mut xty = vec![0.0f64; p];
        for (code, &y) in codes.iter().zip(fitness) {
            let act = active_features(code);
            for (a, &fa) in act.iter().enumerate() {
                sums[fa] += 1.0;
                xty[fa] += y;
                let row = &mut gram[fa * p..];
                for &fb in &act[a..] {
                    row[fb] += 1.0;
                }
            }
        }
        let ybar = fitness.iter().sum::<f64>() / n;
        let mut a = DMatrix::<f64>::zeros(p, p);
        for r in 0..p {
            for c in r..p {
                let v = gram[r * p + c] - sums[r] * sums[c] / n;
                a[(r, c)] = v;
                a[(c, r)] = v;
            }
            a[(r, r)] += lambda;
        }
        let b: Vec<f64> = xty.iter().zip(&sums).map(|(xy, s)| xy - s * ybar).collect();
        let rhs = DVector::from_column_slice(&b);

        let w = match a.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => a
                .clone()
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Solve("normal equations are singular".into()))?,
        };
        let residual = (&a * &w - &rhs).norm();
        let scale = norm(&b);
        if residual > 1e-6 * scale.max(f64::MIN_POSITIVE) && residual > 1e-12 {
            return Err(Error::Solve(format!(
                "linear solve residual {residual:e} exceeds tolerance (rhs norm {scale:e})"
            )));
        }
        let w: Vec<f64> = w.iter().copied().collect();
        let intercept = ybar - sums.iter().zip(&w).map(|(s, wi)| s / n * wi).sum::<f64>();
        Self::from_weights(intercept, &w, m, Some(lambda))
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn biases(&self) -> &[f64] {
        &self.h
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn coupling(&self, k: usize, l: usize) -> f64 {
        self.j[k * self.m + l]
    }

    /// Row `k` of the coupling matrix.
    pub fn coupling_row(&self, k: usize) -> &[f64] {
        &self.j[k * self.m..(k + 1) * self.m]
    }

    pub fn coupling_matrix(&self) -> Vec<Vec<f64>> {
        self.j.chunks(self.m).map(<[f64]>::to_vec).collect()
    }

    /// Feature weights in [`build_features`] order.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = self.h.clone();
        for k in 0..self.m {
            w.extend_from_slice(&self.coupling_row(k)[k + 1..]);
        }
        w
    }

    fn check_dim(&self, x: &BinaryCode) -> Result<()> {
        if x.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn predict(&self, x: &BinaryCode) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.score(x.bits()))
    }

    /// Unchecked evaluation; `bits.len()` must equal `dim()`.
    pub(crate) fn score(&self, bits: &[u8]) -> f64 {
        let m = self.m;
        let mut s = self.intercept;
        for k in 0..m {
            if bits[k] == 0 {
                continue;
            }
            s += self.h[k];
            let row = &self.j[k * m..(k + 1) * m];
            for l in k + 1..m {
                if bits[l] == 1 {
                    s += row[l];
                }
            }
        }
        s
    }

    /// `h_k + sum_{l != k} J_kl x_l`: the gain from setting bit `k` versus clearing it.
    pub fn marginal(&self, x: &BinaryCode, k: usize) -> Result<f64> {
        self.check_dim(x)?;
        if k >= self.m {
            return Err(Error::invalid(format!("bit index {k} out of range for m = {}", self.m)));
        }
        Ok(self.local_field(x.bits(), k))
    }

    pub(crate) fn local_field(&self, bits: &[u8], k: usize) -> f64 {
        let row = self.coupling_row(k);
        self.h[k]
            + row
                .iter()
                .zip(bits)
                .filter(|(_, &b)| b == 1)
                .map(|(j, _)| j)
                .sum::<f64>()
    }

    /// Score change from flipping bit `k` of `x`.
    pub fn flip_delta(&self, x: &BinaryCode, k: usize) -> Result<f64> {
        let field = self.marginal(x, k)?;
        Ok(if x.get(k) { -field } else { field })
    }

    /// Line-oriented QUBO text. Only nonzero biases and couplings are listed.
    pub fn to_qubo_string(&self) -> String {
        let mut out = String::new();
        out.push_str("# binary latent QUBO surrogate, maximization convention\n");
        out.push_str("# score(x) = c + sum_k b_k x_k + sum_{k<l} q_kl x_k x_l, x in {0,1}^m, zero-based indices\n");
        out.push_str("# minimizing annealers: negate c and every b and q coefficient\n");
        let _ = writeln!(out, "m {}", self.m);
        if let Some(l) = self.lambda {
            let _ = writeln!(out, "lambda {l:.16e}");
        }
        let _ = writeln!(out, "c {:.16e}", self.intercept);
        for (k, v) in self.h.iter().enumerate() {
            if *v != 0.0 {
                let _ = writeln!(out, "b {k} {v:.16e}");
            }
        }
        for k in 0..self.m {
            for l in k + 1..self.m {
                let v = self.coupling(k, l);
                if v != 0.0 {
                    let _ = writeln!(out, "q {k} {l} {v:.16e}");
                }
            }
        }
        out
    }

    pub fn parse_qubo(text: &str, source: &str) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse {
            file: source.to_string(),
            line,
            column: None,
            message,
        };
        let num = |s: &str, line: usize| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| perr(line, format!("bad number `{s}`")))?;
            if !v.is_finite() {
                return Err(perr(line, format!("non-finite value `{s}`")));
            }
            Ok(v)
        };

        let mut m: Option<usize> = None;
        let mut lambda = None;
        let mut intercept = None;
        let mut h: Vec<Option<f64>> = Vec::new();
        let mut pairs: Vec<((usize, usize), f64)> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tok: Vec<&str> = content.split_whitespace().collect();
            let need_m = |m: Option<usize>| m.ok_or_else(|| perr(line, "`m` must precede coefficients".into()));
            let index = |s: &str, m: usize| -> Result<usize> {
                let k: usize = s.parse().map_err(|_| perr(line, format!("bad index `{s}`")))?;
                if k >= m {
                    return Err(perr(line, format!("index {k} out of range for declared m = {m}")));
                }
                Ok(k)
            };
            match tok.as_slice() {
                ["m", v] => {
                    if m.is_some() {
                        return Err(perr(line, "duplicate `m`".into()));
                    }
                    let d: usize = v.parse().map_err(|_| perr(line, format!("bad dimension `{v}`")))?;
                    if d == 0 {
                        return Err(perr(line, "dimension must be at least 1".into()));
                    }
                    m = Some(d);
                    h = vec![None; d];
                }
                ["lambda", v] => {
                    if lambda.replace(num(v, line)?).is_some() {
                        return Err(perr(line, "duplicate `lambda`".into()));
                    }
                }
                ["c", v] => {
                    if intercept.replace(num(v, line)?).is_some() {
                        return Err(perr(line, "duplicate `c`".into()));
                    }
                }
                ["b", k, v] => {
                    let k = index(k, need_m(m)?)?;
                    if h[k].replace(num(v, line)?).is_some() {
                        return Err(perr(line, format!("duplicate bias for bit {k}")));
                    }
                }
                ["q", k, l, v] => {
                    let d = need_m(m)?;
                    let (k, l) = (index(k, d)?, index(l, d)?);
                    if k == l {
                        return Err(perr(
                            line,
                            format!("diagonal coupling ({k},{l}) is not allowed; use a `b` line"),
                        ));
                    }
                    if k > l {
                        return Err(perr(
                            line,
                            format!("coupling indices must satisfy k < l, got ({k},{l})"),
                        ));
                    }
                    if pairs.iter().any(|(p, _)| *p == (k, l)) {
                        return Err(perr(line, format!("duplicate coupling ({k},{l})")));
                    }
                    pairs.push(((k, l), num(v, line)?));
                }
                _ => return Err(perr(line, format!("unrecognized line `{content}`"))),
            }
        }

        let m = m.ok_or_else(|| perr(1, "missing `m` header".into()))?;
        let mut j = vec![vec![0.0; m]; m];
        for ((k, l), v) in pairs {
            j[k][l] = v;
            j[l][k] = v;
        }
        Self::new(
            intercept.unwrap_or(0.0),
            h.into_iter().map(|v| v.unwrap_or(0.0)).collect(),
            j,
            lambda,
        )
    }

    pub fn export_qubo(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_qubo_string()).map_err(|e| Error::io(path, e))
    }

    pub fn import_qubo(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_qubo(&text, &path.display().to_string())
    }
}

/// Feature-space prediction `c + w.phi(x)`; the second evaluation path used to cross-check [`QuboSurrogate::predict`].
pub fn predict_via_features(q: &QuboSurrogate, x: &BinaryCode) -> Result<f64> {
    q.check_dim(x)?;
    Ok(q.intercept() + dot(&q.weights(), &build_features(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn toy() -> QuboSurrogate {
        QuboSurrogate::new(0.0, vec![1.0, -1.0], vec![vec![0.0, 2.0], vec![2.0, 0.0]], None).unwrap()
    }

    fn random_surrogate(m: usize, seed: u64) -> QuboSurrogate {
        let mut r = rng::seeded(seed);
        let w: Vec<f64> = (0..feature_count(m)).map(|_| r.random_range(-1.0..1.0)).collect();
        QuboSurrogate::from_weights(r.random_range(-1.0..1.0), &w, m, Some(1.0)).unwrap()
    }

    fn code(s: &str) -> BinaryCode {
        s.parse().unwrap()
    }

    #[test]
    fn feature_layout() {
        assert_eq!(build_features(&code("101")), vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(build_features(&BinaryCode::zeros(5)), vec![0.0; 15]);
        assert_eq!(feature_count(16), 136);
        assert_eq!(feature_count(1), 1);
        let m = 6;
        let mut expect = m;
        for k in 0..m {
            for l in k + 1..m {
                assert_eq!(pair_feature_index(k, l, m), expect);
                expect += 1;
            }
        }
    }

    #[test]
    fn predict_examples() {
        let q = toy();
        assert_eq!(q.predict(&code("00")).unwrap(), 0.0);
        assert_eq!(q.predict(&code("11")).unwrap(), 2.0);
        assert_eq!(q.predict(&code("10")).unwrap(), 1.0);
        assert_eq!(q.predict(&code("01")).unwrap(), -1.0);
        assert!(q.predict(&code("1")).is_err());
        let r = random_surrogate(5, 1);
        let all_ones = r.intercept() + r.biases().iter().sum::<f64>() + r.weights()[5..].iter().sum::<f64>();
        assert!((r.predict(&BinaryCode::ones(5)).unwrap() - all_ones).abs() < 1e-12);
        assert_eq!(r.predict(&BinaryCode::zeros(5)).unwrap(), r.intercept());
    }

    #[test]
    fn matrix_form_matches_sum_form() {
        let q = random_surrogate(7, 3);
        let mut r = rng::seeded(4);
        for _ in 0..50 {
            let x = BinaryCode::random(7, &mut r);
            let xb: Vec<f64> = x.bits().iter().map(|&b| b as f64).collect();
            let mut quad = 0.0;
            for k in 0..7 {
                for l in 0..7 {
                    quad += xb[k] * q.coupling(k, l) * xb[l];
                }
            }
            let matrix = q.intercept() + dot(q.biases(), &xb) + 0.5 * quad;
            assert!((matrix - q.predict(&x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(QuboSurrogate::new(0.0, vec![1.0], vec![vec![1.0]], None).is_err());
        assert!(QuboSurrogate::new(0.0, vec![1.0, 1.0], vec![vec![0.0, 1.0], vec![2.0, 0.0]], None).is_err());
        assert!(QuboSurrogate::fit(&[code("10")], &[1.0], 0.0).is_err());
        assert!(QuboSurrogate::fit(&[code("10")], &[1.0], -1.0).is_err());
        assert!(QuboSurrogate::fit(&[code("10"), code("11")], &[1.0], 1.0).is_err());
        assert!(QuboSurrogate::fit(&[code("10"), code("1")], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn infinite_shrinkage_limit() {
        let mut r = rng::seeded(10);
        let codes: Vec<BinaryCode> = (0..50).map(|_| BinaryCode::random(6, &mut r)).collect();
        let y: Vec<f64> = (0..50).map(|_| r.random_range(-5.0..5.0)).collect();
        let ybar = y.iter().sum::<f64>() / 50.0;
        let q = QuboSurrogate::fit(&codes, &y, 1e12).unwrap();
        assert!(q.weights().iter().all(|w| w.abs() < 1e-6));
        for c in &codes {
            assert!((q.predict(c).unwrap() - ybar).abs() < 1e-6);
        }
    }

    #[test]
    fn qubo_text_examples() {
        let q = QuboSurrogate::parse_qubo("m 2\nc 0\nb 0 1\nb 1 -1\nq 0 1 2\n", "mem").unwrap();
        assert_eq!(q.predict(&code("11")).unwrap(), 2.0);
        assert_eq!(q.lambda(), None);
        let err = QuboSurrogate::parse_qubo("m 2\nq 1 1 0.5\n", "mem").unwrap_err();
        assert!(err.to_string().contains("diagonal"), "{err}");
        for bad in [
            "b 0 1\n",
            "m 2\nb 2 1\n",
            "m 2\nq 1 0 1\n",
            "m 2\nm 2\n",
            "m 2\nb 0 1\nb 0 2\n",
            "m 2\nz 1\n",
            "m 2\nc nan\n",
            "m 2\nlambda -1\n",
            "",
        ] {
            assert!(QuboSurrogate::parse_qubo(bad, "mem").is_err(), "{bad:?}");
        }
        // trailing comments and blank lines are fine
        let q = QuboSurrogate::parse_qubo("# hdr\nm 2 # two bits\n\nb 1 3\n", "mem").unwrap();
        assert_eq!(q.biases(), &[0.0, 3.0]);
    }

    #[test]
    fn qubo_round_trip_small() {
        let q = toy();
        let back = QuboSurrogate::parse_qubo(&q.to_qubo_string(), "mem").unwrap();
        assert_eq!(back, q);
        let q = random_surrogate(9, 8);
        assert_eq!(QuboSurrogate::parse_qubo(&q.to_qubo_string(), "mem").unwrap(), q);
    }

    #[test]
    fn duplicated_samples_with_doubled_lambda() {
        let mut r = rng::seeded(2);
        let codes: Vec<BinaryCode> = (0..40).map(|_| BinaryCode::random(5, &mut r)).collect();
        let y: Vec<f64> = (0..40).map(|_| r.random_range(-1.0..1.0)).collect();
        let once = QuboSurrogate::fit(&codes, &y, 0.7).unwrap();
        let codes2: Vec<BinaryCode> = codes.iter().chain(&codes).cloned().collect();
        let y2: Vec<f64> = y.iter().chain(&y).copied().collect();
        let twice = QuboSurrogate::fit(&codes2, &y2, 1.4).unwrap();
        for (a, b) in once.weights().iter().zip(twice.weights()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((once.intercept() - twice.intercept()).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn marginal_identity(seed in 0u64..1000, bits in prop::collection::vec(0u8..2, 8)) {
            let q = random_surrogate(8, seed);
            let x = BinaryCode::new(bits).unwrap();
            for k in 0..8 {
                let mut on = x.clone();
                on.set(k, true);
                let mut off = x.clone();
                off.set(k, false);
                let diff = q.predict(&on).unwrap() - q.predict(&off).unwrap();
                prop_assert!((diff - q.marginal(&x, k).unwrap()).abs() < 1e-10);
                let full = q.predict(&x.flipped(k)).unwrap() - q.predict(&x).unwrap();
                prop_assert!((full - q.flip_delta(&x, k).unwrap()).abs() < 1e-10);
            }
        }

        #[test]
        fn two_evaluation_paths_agree(seed in 0u64..1000, bits in prop::collection::vec(0u8..2, 11)) {
            let q = random_surrogate(11, seed);
            let x = BinaryCode::new(bits).unwrap();
            prop_assert!((q.predict(&x).unwrap() - predict_via_features(&q, &x).unwrap()).abs() < 1e-10);
        }
    }
}
