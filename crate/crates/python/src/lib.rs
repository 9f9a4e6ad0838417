//! Python bindings. Codes cross the boundary as lists of 0/1 integers.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use binlat::binarization::BinaryCode;
use binlat::dataset::FitnessDataset;
use binlat::evaluation;
use binlat::harness::{self, ExperimentConfig};
use binlat::linalg::Matrix;
use binlat::model::LatentModel;
use binlat::optimizers::{run_method, Method, OptimizerParams};
use binlat::projection::ProjectionKind;
use binlat::surrogate::{self, QuboSurrogate};

fn to_py(e: binlat::Error) -> PyErr {
    match e {
        binlat::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn code(bits: Vec<u8>) -> PyResult<BinaryCode> {
    BinaryCode::new(bits).map_err(to_py)
}

fn bits(c: &BinaryCode) -> Vec<u32> {
    c.bits().iter().map(|&b| u32::from(b)).collect()
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(to_py)
}

#[pyclass(name = "Dataset", module = "binlat")]
struct PyDataset {
    inner: FitnessDataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (ids, embeddings, fitness, sequences=None))]
    fn new(
        ids: Vec<String>,
        embeddings: Vec<Vec<f64>>,
        fitness: Vec<f64>,
        sequences: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let inner = FitnessDataset::new(ids, sequences, matrix(embeddings)?, fitness).map_err(to_py)?;
        Ok(PyDataset { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyDataset {
            inner: FitnessDataset::load(path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.ids.clone()
    }

    #[getter]
    fn sequences(&self) -> Option<Vec<String>> {
        self.inner.sequences.clone()
    }

    #[getter]
    fn fitness(&self) -> Vec<f64> {
        self.inner.fitness.clone()
    }

    #[getter]
    fn embeddings(&self) -> Vec<Vec<f64>> {
        self.inner.embeddings.rows().map(<[f64]>::to_vec).collect()
    }

    fn subsample(&self, n: usize, seed: u64) -> PyResult<Self> {
        Ok(PyDataset {
            inner: self.inner.subsample(n, seed).map_err(to_py)?,
        })
    }

    /// Returns `(train, test)`.
    fn split(&self, train_fraction: f64, seed: u64) -> PyResult<(Self, Self)> {
        let (a, b) = self.inner.split(train_fraction, seed).map_err(to_py)?;
        Ok((PyDataset { inner: a }, PyDataset { inner: b }))
    }

    fn __repr__(&self) -> String {
        format!("Dataset(records={}, dim={})", self.inner.len(), self.inner.dim())
    }
}

#[pyclass(name = "Surrogate", module = "binlat", skip_from_py_object)]
#[derive(Clone)]
struct PySurrogate {
    inner: QuboSurrogate,
}

#[pymethods]
impl PySurrogate {
    /// Builds a surrogate from an intercept, biases and a symmetric zero-diagonal coupling matrix.
    #[new]
    #[pyo3(signature = (intercept, biases, couplings, lam=None))]
    fn new(intercept: f64, biases: Vec<f64>, couplings: Vec<Vec<f64>>, lam: Option<f64>) -> PyResult<Self> {
        Ok(PySurrogate {
            inner: QuboSurrogate::new(intercept, biases, couplings, lam).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (codes, fitness, lam=surrogate::DEFAULT_LAMBDA))]
    fn fit(codes: Vec<Vec<u8>>, fitness: Vec<f64>, lam: f64) -> PyResult<Self> {
        let codes = codes.into_iter().map(code).collect::<PyResult<Vec<_>>>()?;
        Ok(PySurrogate {
            inner: QuboSurrogate::fit(&codes, &fitness, lam).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load_qubo(path: PathBuf) -> PyResult<Self> {
        Ok(PySurrogate {
            inner: QuboSurrogate::import_qubo(path).map_err(to_py)?,
        })
    }

    fn export_qubo(&self, path: PathBuf) -> PyResult<()> {
        self.inner.export_qubo(path).map_err(to_py)
    }

    fn to_qubo_string(&self) -> String {
        self.inner.to_qubo_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn intercept(&self) -> f64 {
        self.inner.intercept()
    }

    #[getter]
    fn biases(&self) -> Vec<f64> {
        self.inner.biases().to_vec()
    }

    #[getter]
    fn couplings(&self) -> Vec<Vec<f64>> {
        self.inner.coupling_matrix()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights()
    }

    #[getter]
    fn lam(&self) -> Option<f64> {
        self.inner.lambda()
    }

    fn predict(&self, x: Vec<u8>) -> PyResult<f64> {
        self.inner.predict(&code(x)?).map_err(to_py)
    }

    fn predict_many(&self, xs: Vec<Vec<u8>>) -> PyResult<Vec<f64>> {
        xs.into_iter().map(|x| self.predict(x)).collect()
    }

    fn flip_delta(&self, x: Vec<u8>, k: usize) -> PyResult<f64> {
        if k >= self.inner.dim() {
            return Err(PyValueError::new_err(format!(
                "bit {k} out of range for m = {}",
                self.inner.dim()
            )));
        }
        self.inner.flip_delta(&code(x)?, k).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Surrogate(m={}, intercept={})",
            self.inner.dim(),
            self.inner.intercept()
        )
    }
}

#[pyclass(name = "Model", module = "binlat")]
struct PyModel {
    inner: LatentModel,
}

#[pymethods]
impl PyModel {
    /// Fits projection, thresholds and surrogate on `train`.
    #[staticmethod]
    #[pyo3(signature = (train, dim, projection="pca", lam=surrogate::DEFAULT_LAMBDA, seed=0))]
    fn fit(train: &PyDataset, dim: usize, projection: &str, lam: f64, seed: u64) -> PyResult<Self> {
        let kind: ProjectionKind = projection.parse().map_err(to_py)?;
        Ok(PyModel {
            inner: LatentModel::fit(&train.inner, kind, dim, lam, seed).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Ok(PyModel {
            inner: LatentModel::load(dir).map_err(to_py)?,
        })
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        self.inner.save(dir).map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn surrogate(&self) -> PySurrogate {
        PySurrogate {
            inner: self.inner.surrogate.clone(),
        }
    }

    #[getter]
    fn thresholds(&self) -> Vec<f64> {
        self.inner.binarizer.thresholds().to_vec()
    }

    #[getter]
    fn codebook(&self) -> Vec<Vec<u32>> {
        self.inner.codebook.codes.iter().map(bits).collect()
    }

    fn encode(&self, embeddings: Vec<Vec<f64>>) -> PyResult<Vec<Vec<u32>>> {
        let codes = self.inner.encode(&matrix(embeddings)?).map_err(to_py)?;
        Ok(codes.iter().map(bits).collect())
    }

    /// The `k` nearest training records as `(id, distance, fitness)`.
    #[pyo3(signature = (x, k=1))]
    fn nearest(&self, x: Vec<u8>, k: usize) -> PyResult<Vec<(String, usize, f64)>> {
        let hits = evaluation::hamming_nn(&code(x)?, &self.inner.codebook, k).map_err(to_py)?;
        Ok(hits.into_iter().map(|n| (n.id, n.distance, n.fitness)).collect())
    }

    fn start_code(&self, seed: u64) -> Vec<u32> {
        bits(&self.inner.start_code(seed).1)
    }
}

/// Maximizes `surrogate` with `method` (sa, ga, greedy, random, bo or brute).
/// `params` is a JSON object with the `optimizer` schema of an experiment config.
#[pyfunction]
#[pyo3(signature = (surrogate, method, start=None, seed=0, params=None))]
fn optimize<'py>(
    py: Python<'py>,
    surrogate: &PySurrogate,
    method: &str,
    start: Option<Vec<u8>>,
    seed: u64,
    params: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let method: Method = method.parse().map_err(to_py)?;
    let params: OptimizerParams = match params {
        Some(text) => serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?,
        None => OptimizerParams::default(),
    };
    params.validate().map_err(to_py)?;
    let m = surrogate.inner.dim();
    let start = match start {
        Some(bits) => code(bits)?,
        None => BinaryCode::zeros(m),
    };
    let q = surrogate.inner.clone();
    let r = py
        .detach(|| run_method(method, &q, &start, &params, seed))
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("best_code", bits(&r.best_code))?;
    out.set_item("best_score", r.best_score)?;
    out.set_item("start_code", bits(&r.start_code))?;
    out.set_item("start_score", r.start_score)?;
    out.set_item("improvement", r.improvement)?;
    out.set_item("evaluations", r.evaluations)?;
    out.set_item("trace", r.trace)?;
    Ok(out)
}

#[pyfunction]
fn build_features(x: Vec<u8>) -> PyResult<Vec<f64>> {
    Ok(surrogate::build_features(&code(x)?))
}

#[pyfunction]
fn feature_count(m: usize) -> usize {
    surrogate::feature_count(m)
}

#[pyfunction]
fn spearman(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    evaluation::spearman(&a, &b).map_err(to_py)
}

#[pyfunction]
fn percentile(v: f64, training_fitness: Vec<f64>) -> PyResult<f64> {
    evaluation::percentile(v, &training_fitness).map_err(to_py)
}

/// Runs an experiment config and writes its reports; returns the summary table.
#[pyfunction]
#[pyo3(signature = (config, out=None))]
fn run_experiment(py: Python<'_>, config: PathBuf, out: Option<PathBuf>) -> PyResult<String> {
    let cfg = ExperimentConfig::load(config).map_err(to_py)?;
    let dir = out
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| PyValueError::new_err("no output directory given"))?;
    py.detach(|| {
        let report = harness::run_experiment(&cfg)?;
        report.write(&dir)?;
        Ok(harness::render_table(&report.rows))
    })
    .map_err(to_py)
}

#[pymodule(name = "binlat")]
fn binlat_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PySurrogate>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(build_features, m)?)?;
    m.add_function(wrap_pyfunction!(feature_count, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(percentile, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
