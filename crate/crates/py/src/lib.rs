//! Python bindings: the main types and operations, driven in-process.
//!
//! Build `libdatadrop_py.so`, rename it to `datadrop_py.so` on the Python
//! path (python/smoke_test.py automates this), then:
//!
//!     import datadrop_py as dd
//!     ds, truth = dd.synth_blobs(500, 2, 3, 2.5, 0.1, seed=7)
//!     train, val = dd.split(ds, 0.2, seed=1, stratified=True)
//!     spec = dd.ModelSpec.softmax(2, 3, l2_reg=0.05)
//!     result = dd.two_round(spec, train, val, dd.TrainConfig(), dd.IhvpConfig())

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use std::collections::BTreeSet;

use datadrop::data as core_data;
use datadrop::influence as core_influence;
use datadrop::loo as core_loo;
use datadrop::model as core_model;
use datadrop::pipeline as core_pipeline;
use datadrop::trainer as core_trainer;
use datadrop::{Error, ParamVector};

fn to_py_err(e: Error) -> PyErr {
    match &e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        Error::NonFinite { .. }
        | Error::TrainingDiverged { .. }
        | Error::NotConverged { .. }
        | Error::IhvpDiverged { .. }
        | Error::EmptyReducedSet { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn params_from_vec(values: Vec<f64>) -> ParamVector {
    ParamVector::from_vec(values)
}

fn label_from_py(value: &Bound<'_, PyAny>, classifier: bool) -> PyResult<core_data::Label> {
    if classifier {
        Ok(core_data::Label::Class(value.extract::<usize>()?))
    } else {
        Ok(core_data::Label::Target(value.extract::<f64>()?))
    }
}

#[pyclass(name = "ModelSpec", skip_from_py_object)]
#[derive(Clone)]
struct PyModelSpec {
    inner: core_model::ModelSpec,
}

#[pymethods]
impl PyModelSpec {
    #[staticmethod]
    #[pyo3(signature = (input_dim, l2_reg = 0.0))]
    fn linear_mse(input_dim: usize, l2_reg: f64) -> Self {
        Self { inner: core_model::ModelSpec::linear_mse(input_dim, l2_reg) }
    }

    #[staticmethod]
    #[pyo3(signature = (input_dim, l2_reg = 0.0))]
    fn logistic(input_dim: usize, l2_reg: f64) -> Self {
        Self { inner: core_model::ModelSpec::logistic(input_dim, l2_reg) }
    }

    #[staticmethod]
    #[pyo3(signature = (input_dim, classes, l2_reg = 0.0))]
    fn softmax(input_dim: usize, classes: usize, l2_reg: f64) -> Self {
        Self { inner: core_model::ModelSpec::softmax(input_dim, classes, l2_reg) }
    }

    #[staticmethod]
    #[pyo3(signature = (input_dim, classes, hidden_dim, activation = "tanh", l2_reg = 0.0))]
    fn mlp(
        input_dim: usize,
        classes: usize,
        hidden_dim: usize,
        activation: &str,
        l2_reg: f64,
    ) -> PyResult<Self> {
        let act = match activation {
            "tanh" => core_model::Activation::Tanh,
            "relu" => core_model::Activation::Relu,
            other => return Err(PyValueError::new_err(format!("unknown activation {other:?}"))),
        };
        Ok(Self { inner: core_model::ModelSpec::mlp(input_dim, classes, hidden_dim, act, l2_reg) })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.kind {
            core_model::ModelKind::LinearMse => "linear-mse",
            core_model::ModelKind::Logistic => "logistic",
            core_model::ModelKind::Softmax => "softmax",
            core_model::ModelKind::Mlp => "mlp",
        }
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim
    }

    #[getter]
    fn output_dim(&self) -> usize {
        self.inner.output_dim
    }

    #[getter]
    fn l2_reg(&self) -> f64 {
        self.inner.l2_reg
    }

    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "ModelSpec(kind={}, input_dim={}, output_dim={}, params={})",
            self.kind(),
            self.inner.input_dim,
            self.inner.output_dim,
            self.inner.param_count()
        )
    }
}

#[pyclass(name = "Dataset", skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: core_data::Dataset,
}

#[pymethods]
impl PyDataset {
    /// Build a dataset from rows of features and a label list (ints for
    /// classification, floats for regression).
    #[staticmethod]
    #[pyo3(signature = (features, labels, classification = true, name = "python"))]
    fn from_rows(
        features: Vec<Vec<f64>>,
        labels: Vec<Py<PyAny>>,
        classification: bool,
        name: &str,
        py: Python<'_>,
    ) -> PyResult<Self> {
        if features.is_empty() {
            return Err(PyValueError::new_err("features must not be empty"));
        }
        let dim = features[0].len();
        let mut flat = Vec::with_capacity(features.len() * dim);
        for row in &features {
            if row.len() != dim {
                return Err(PyValueError::new_err("ragged feature rows"));
            }
            flat.extend_from_slice(row);
        }
        let labels = labels
            .iter()
            .map(|l| label_from_py(l.bind(py), classification))
            .collect::<PyResult<Vec<_>>>()?;
        let n = labels.len();
        let inner = core_data::Dataset::new(
            name,
            core_data::Provenance::Synthetic,
            dim,
            flat,
            labels,
            (0..n as u64).collect(),
        )
        .map_err(to_py_err)?;
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn ids(&self) -> Vec<u64> {
        self.inner.ids().to_vec()
    }

    fn features(&self, i: usize) -> PyResult<Vec<f64>> {
        if i >= self.inner.len() {
            return Err(PyValueError::new_err(format!("row {i} out of range")));
        }
        Ok(self.inner.feature_row(i).to_vec())
    }

    fn label(&self, i: usize, py: Python<'_>) -> PyResult<Py<PyAny>> {
        if i >= self.inner.len() {
            return Err(PyValueError::new_err(format!("row {i} out of range")));
        }
        Ok(match self.inner.labels()[i] {
            core_data::Label::Class(c) => c.into_pyobject(py)?.into_any().unbind(),
            core_data::Label::Target(t) => t.into_pyobject(py)?.into_any().unbind(),
        })
    }

    fn without_ids(&self, drop: Vec<u64>) -> PyResult<Self> {
        let drop: BTreeSet<u64> = drop.into_iter().collect();
        Ok(Self { inner: self.inner.without_ids(&drop).map_err(to_py_err)? })
    }

    fn checksum(&self) -> String {
        self.inner.checksum()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(name={:?}, n={}, input_dim={})",
            self.inner.name(),
            self.inner.len(),
            self.inner.input_dim()
        )
    }
}

#[pyclass(name = "TrainConfig", skip_from_py_object)]
#[derive(Clone)]
struct PyTrainConfig {
    inner: core_trainer::TrainConfig,
}

#[pymethods]
impl PyTrainConfig {
    #[new]
    #[pyo3(signature = (
        epochs = 100, batch_size = 32, lr = 0.1, lr_schedule = None,
        momentum = 0.9, weight_decay = 0.0, seed = 0,
        init = "scaled-normal-fan-in", shuffle = true
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        epochs: usize,
        batch_size: usize,
        lr: f64,
        lr_schedule: Option<Vec<(usize, f64)>>,
        momentum: f64,
        weight_decay: f64,
        seed: u64,
        init: &str,
        shuffle: bool,
    ) -> PyResult<Self> {
        let init = match init {
            "scaled-normal-fan-in" => core_trainer::InitScheme::ScaledNormalFanIn,
            "scaled-uniform-fan-avg" => core_trainer::InitScheme::ScaledUniformFanAvg,
            other => return Err(PyValueError::new_err(format!("unknown init {other:?}"))),
        };
        let inner = core_trainer::TrainConfig {
            epochs,
            batch_size,
            lr_schedule: lr_schedule.unwrap_or_else(|| vec![(0, lr)]),
            momentum,
            weight_decay,
            seed,
            init,
            shuffle,
        };
        inner.validate().map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn batch_size(&self) -> usize {
        self.inner.batch_size
    }

    #[getter]
    fn epochs(&self) -> usize {
        self.inner.epochs
    }
}

#[pyclass(name = "IhvpConfig", skip_from_py_object)]
#[derive(Clone)]
struct PyIhvpConfig {
    inner: datadrop::IhvpConfig,
}

#[pymethods]
impl PyIhvpConfig {
    #[new]
    #[pyo3(signature = (
        method = "cg", damping = 0.01, cg_tol = 1e-8, cg_max_iter = 500,
        lissa_depth = 1000, lissa_scale = 10.0, lissa_repeats = 4,
        lissa_batch = 8, seed = 0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        method: &str,
        damping: f64,
        cg_tol: f64,
        cg_max_iter: usize,
        lissa_depth: usize,
        lissa_scale: f64,
        lissa_repeats: usize,
        lissa_batch: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let method = match method {
            "cg" => datadrop::IhvpMethod::Cg,
            "lissa" => datadrop::IhvpMethod::Lissa,
            other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
        };
        let inner = datadrop::IhvpConfig {
            method,
            damping,
            cg_tol,
            cg_max_iter,
            lissa_depth,
            lissa_scale,
            lissa_repeats,
            lissa_batch,
            seed,
        };
        inner.validate().map_err(to_py_err)?;
        Ok(Self { inner })
    }
}

#[pyclass(name = "Metrics", skip_from_py_object)]
#[derive(Clone)]
struct PyMetrics {
    inner: core_trainer::Metrics,
}

#[pymethods]
impl PyMetrics {
    #[getter]
    fn mean_loss(&self) -> f64 {
        self.inner.mean_loss
    }

    #[getter]
    fn accuracy(&self) -> Option<f64> {
        self.inner.accuracy
    }

    #[getter]
    fn n_evaluated(&self) -> usize {
        self.inner.n_evaluated
    }

    fn __repr__(&self) -> String {
        match self.inner.accuracy {
            Some(a) => format!(
                "Metrics(mean_loss={:.6}, accuracy={:.4}, n={})",
                self.inner.mean_loss, a, self.inner.n_evaluated
            ),
            None => format!(
                "Metrics(mean_loss={:.6}, n={})",
                self.inner.mean_loss, self.inner.n_evaluated
            ),
        }
    }
}

#[pyclass(name = "InfluenceReport", skip_from_py_object)]
#[derive(Clone)]
struct PyInfluenceReport {
    inner: core_influence::InfluenceReport,
}

#[pymethods]
impl PyInfluenceReport {
    /// `(sample_id, total)` pairs in training-set order.
    fn scores(&self) -> Vec<(u64, f64)> {
        self.inner.scores.iter().map(|s| (s.sample_id, s.total)).collect()
    }

    fn totals(&self) -> Vec<f64> {
        self.inner.scores.iter().map(|s| s.total).collect()
    }

    #[getter]
    fn solve_count(&self) -> usize {
        self.inner.ihvp_solve_count
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.ihvp_residuals.clone()
    }

    #[getter]
    fn model_hash(&self) -> &str {
        &self.inner.model_hash
    }

    /// Ids with strictly positive totals, ascending.
    fn unfavorable_ids(&self) -> Vec<u64> {
        core_influence::select_unfavorable(&self.inner).into_iter().collect()
    }

    fn to_jsonl(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_jsonl(&mut buf).map_err(to_py_err)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.write_jsonl_file(path).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "InfluenceReport(n={}, k={})",
            self.inner.scores.len(),
            self.inner.ihvp_solve_count
        )
    }
}

#[pyclass(name = "TwoRoundResult")]
struct PyTwoRoundResult {
    inner: core_pipeline::TwoRoundResult,
}

#[pymethods]
impl PyTwoRoundResult {
    #[getter]
    fn params_round1(&self) -> Vec<f64> {
        self.inner.params_round1.as_slice().to_vec()
    }

    #[getter]
    fn params_round2(&self) -> Vec<f64> {
        self.inner.params_round2.as_slice().to_vec()
    }

    #[getter]
    fn dropped_ids(&self) -> Vec<u64> {
        self.inner.dropped_ids.iter().copied().collect()
    }

    #[getter]
    fn reduced_train_size(&self) -> usize {
        self.inner.reduced_train_size
    }

    #[getter]
    fn metrics_round1(&self) -> PyMetrics {
        PyMetrics { inner: self.inner.metrics_round1.clone() }
    }

    #[getter]
    fn metrics_round2(&self) -> PyMetrics {
        PyMetrics { inner: self.inner.metrics_round2.clone() }
    }

    #[getter]
    fn report(&self) -> PyInfluenceReport {
        PyInfluenceReport { inner: self.inner.report.clone() }
    }

    fn __repr__(&self) -> String {
        format!(
            "TwoRoundResult(dropped={}, reduced_train_size={}, loss {:.6} -> {:.6})",
            self.inner.dropped_ids.len(),
            self.inner.reduced_train_size,
            self.inner.metrics_round1.mean_loss,
            self.inner.metrics_round2.mean_loss
        )
    }
}

#[pyclass(name = "PlantedTruth", skip_from_py_object)]
#[derive(Clone)]
struct PyPlantedTruth {
    inner: core_data::PlantedTruth,
}

#[pymethods]
impl PyPlantedTruth {
    #[getter]
    fn flipped_ids(&self) -> Vec<u64> {
        self.inner.flipped_ids.iter().copied().collect()
    }

    fn __len__(&self) -> usize {
        self.inner.flipped_ids.len()
    }
}

#[pyfunction]
#[pyo3(signature = (n, input_dim, classes, separation, flip_fraction, seed = 0))]
fn synth_blobs(
    n: usize,
    input_dim: usize,
    classes: usize,
    separation: f64,
    flip_fraction: f64,
    seed: u64,
) -> PyResult<(PyDataset, PyPlantedTruth)> {
    let (ds, truth) =
        core_data::synth_blobs(n, input_dim, classes, separation, flip_fraction, seed)
            .map_err(to_py_err)?;
    Ok((PyDataset { inner: ds }, PyPlantedTruth { inner: truth }))
}

#[pyfunction]
#[pyo3(signature = (dataset, flip_fraction, seed = 0))]
fn plant_label_noise(
    dataset: &PyDataset,
    flip_fraction: f64,
    seed: u64,
) -> PyResult<(PyDataset, PyPlantedTruth)> {
    let (ds, truth) =
        core_data::plant_label_noise(&dataset.inner, flip_fraction, seed).map_err(to_py_err)?;
    Ok((PyDataset { inner: ds }, PyPlantedTruth { inner: truth }))
}

#[pyfunction]
#[pyo3(signature = (path, label_column = "label", target_labels = false))]
fn load_csv(path: &str, label_column: &str, target_labels: bool) -> PyResult<PyDataset> {
    let schema = core_data::CsvSchema {
        label_column: label_column.to_string(),
        feature_columns: None,
        label_kind: if target_labels {
            core_data::LabelKind::Target
        } else {
            core_data::LabelKind::Class
        },
    };
    Ok(PyDataset { inner: core_data::load_csv(path, &schema).map_err(to_py_err)? })
}

#[pyfunction]
fn load_idx(images: &str, labels: &str) -> PyResult<PyDataset> {
    Ok(PyDataset { inner: core_data::load_idx(images, labels).map_err(to_py_err)? })
}

#[pyfunction]
#[pyo3(signature = (dataset, val_fraction, seed = 0, stratified = false))]
fn split(
    dataset: &PyDataset,
    val_fraction: f64,
    seed: u64,
    stratified: bool,
) -> PyResult<(PyDataset, PyDataset)> {
    let (a, b) =
        core_data::split(&dataset.inner, val_fraction, seed, stratified).map_err(to_py_err)?;
    Ok((PyDataset { inner: a }, PyDataset { inner: b }))
}

#[pyfunction]
fn init_params(spec: &PyModelSpec, config: &PyTrainConfig) -> PyResult<Vec<f64>> {
    Ok(core_trainer::init_params(&spec.inner, &config.inner)
        .map_err(to_py_err)?
        .into_vec())
}

#[pyfunction]
fn train(spec: &PyModelSpec, dataset: &PyDataset, config: &PyTrainConfig) -> PyResult<Vec<f64>> {
    Ok(core_trainer::train(&spec.inner, &dataset.inner, &config.inner)
        .map_err(to_py_err)?
        .into_vec())
}

#[pyfunction]
fn evaluate(spec: &PyModelSpec, params: Vec<f64>, dataset: &PyDataset) -> PyResult<PyMetrics> {
    let metrics = core_trainer::evaluate(&spec.inner, &params_from_vec(params), &dataset.inner)
        .map_err(to_py_err)?;
    Ok(PyMetrics { inner: metrics })
}

#[pyfunction]
fn loss(
    spec: &PyModelSpec,
    params: Vec<f64>,
    features: Vec<f64>,
    label: &Bound<'_, PyAny>,
) -> PyResult<f64> {
    let label = label_from_py(label, spec.inner.is_classifier())?;
    let sample = core_data::Sample { id: 0, features: &features, label };
    core_model::loss(&spec.inner, &params_from_vec(params), &sample).map_err(to_py_err)
}

#[pyfunction]
fn grad(
    spec: &PyModelSpec,
    params: Vec<f64>,
    features: Vec<f64>,
    label: &Bound<'_, PyAny>,
) -> PyResult<Vec<f64>> {
    let label = label_from_py(label, spec.inner.is_classifier())?;
    let sample = core_data::Sample { id: 0, features: &features, label };
    Ok(core_model::grad(&spec.inner, &params_from_vec(params), &sample)
        .map_err(to_py_err)?
        .into_vec())
}

#[pyfunction]
#[pyo3(signature = (spec, params, dataset, v, damping = 0.0))]
fn hvp(
    spec: &PyModelSpec,
    params: Vec<f64>,
    dataset: &PyDataset,
    v: Vec<f64>,
    damping: f64,
) -> PyResult<Vec<f64>> {
    Ok(core_model::hvp(
        &spec.inner,
        &params_from_vec(params),
        &dataset.inner,
        &params_from_vec(v),
        damping,
    )
    .map_err(to_py_err)?
    .into_vec())
}

#[pyfunction]
#[pyo3(signature = (spec, params, train_set, val_set, config, workers = 0, per_validation = false))]
fn score_all(
    spec: &PyModelSpec,
    params: Vec<f64>,
    train_set: &PyDataset,
    val_set: &PyDataset,
    config: &PyIhvpConfig,
    workers: usize,
    per_validation: bool,
) -> PyResult<PyInfluenceReport> {
    let options = datadrop::ScoreOptions {
        workers,
        keep_per_validation: per_validation,
        ..Default::default()
    };
    let report = core_influence::score_all_with(
        &spec.inner,
        &params_from_vec(params),
        &train_set.inner,
        &val_set.inner,
        &config.inner,
        &options,
    )
    .map_err(to_py_err)?;
    Ok(PyInfluenceReport { inner: report })
}

#[pyfunction]
fn select_unfavorable(report: &PyInfluenceReport) -> Vec<u64> {
    report.unfavorable_ids()
}

#[pyfunction]
#[pyo3(signature = (spec, train_set, val_set, train_config, ihvp_config, val_fraction = 0.1, workers = 0))]
#[allow(clippy::too_many_arguments)]
fn two_round(
    spec: &PyModelSpec,
    train_set: &PyDataset,
    val_set: Option<&PyDataset>,
    train_config: &PyTrainConfig,
    ihvp_config: &PyIhvpConfig,
    val_fraction: f64,
    workers: usize,
) -> PyResult<PyTwoRoundResult> {
    let options = core_pipeline::PipelineOptions {
        val_fraction,
        round2_seed: None,
        score: datadrop::ScoreOptions { workers, ..Default::default() },
    };
    let result = core_pipeline::two_round_with(
        &spec.inner,
        &train_set.inner,
        val_set.map(|v| &v.inner),
        &train_config.inner,
        &ihvp_config.inner,
        &options,
    )
    .map_err(to_py_err)?;
    Ok(PyTwoRoundResult { inner: result })
}

#[pyfunction]
#[pyo3(signature = (spec, train_set, val_set, train_config, ihvp_config, rounds))]
fn multi_round(
    spec: &PyModelSpec,
    train_set: &PyDataset,
    val_set: Option<&PyDataset>,
    train_config: &PyTrainConfig,
    ihvp_config: &PyIhvpConfig,
    rounds: usize,
) -> PyResult<Vec<usize>> {
    let series = core_pipeline::multi_round(
        &spec.inner,
        &train_set.inner,
        val_set.map(|v| &v.inner),
        &train_config.inner,
        &ihvp_config.inner,
        rounds,
    )
    .map_err(to_py_err)?;
    Ok(series.counts)
}

/// Leave-one-out retraining: returns `(theta_full, [(id, delta, converged)])`.
#[pyfunction]
#[pyo3(signature = (spec, train_set, val_set, grad_tol = 1e-8, max_iters = 50_000))]
fn loo_deltas(
    spec: &PyModelSpec,
    train_set: &PyDataset,
    val_set: &PyDataset,
    grad_tol: f64,
    max_iters: usize,
) -> PyResult<(Vec<f64>, Vec<(u64, f64, bool)>)> {
    let optimizer = core_trainer::FullBatchConfig { max_iters, grad_tol, lr: None };
    let (theta, deltas) =
        core_loo::loo_deltas(&spec.inner, &train_set.inner, &val_set.inner, &optimizer)
            .map_err(to_py_err)?;
    Ok((
        theta.into_vec(),
        deltas.into_iter().map(|d| (d.id, d.delta, d.converged)).collect(),
    ))
}

#[pyfunction]
fn spearman(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    if a.len() != b.len() {
        return Err(PyValueError::new_err("length mismatch"));
    }
    Ok(core_loo::spearman(&a, &b))
}

#[pymodule]
fn datadrop_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelSpec>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyPlantedTruth>()?;
    m.add_class::<PyTrainConfig>()?;
    m.add_class::<PyIhvpConfig>()?;
    m.add_class::<PyMetrics>()?;
    m.add_class::<PyInfluenceReport>()?;
    m.add_class::<PyTwoRoundResult>()?;
    m.add_function(wrap_pyfunction!(synth_blobs, m)?)?;
    m.add_function(wrap_pyfunction!(plant_label_noise, m)?)?;
    m.add_function(wrap_pyfunction!(load_csv, m)?)?;
    m.add_function(wrap_pyfunction!(load_idx, m)?)?;
    m.add_function(wrap_pyfunction!(split, m)?)?;
    m.add_function(wrap_pyfunction!(init_params, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(loss, m)?)?;
    m.add_function(wrap_pyfunction!(grad, m)?)?;
    m.add_function(wrap_pyfunction!(hvp, m)?)?;
    m.add_function(wrap_pyfunction!(score_all, m)?)?;
    m.add_function(wrap_pyfunction!(select_unfavorable, m)?)?;
    m.add_function(wrap_pyfunction!(two_round, m)?)?;
    m.add_function(wrap_pyfunction!(multi_round, m)?)?;
    m.add_function(wrap_pyfunction!(loo_deltas, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    Ok(())
}
