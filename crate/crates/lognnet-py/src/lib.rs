//! Python bindings for the lognnet classifier: training, evaluation,
//! single-image prediction, memory accounting, T-patterns and the chaos
//! diagnostics. Build with `cargo build -p lognnet-py --release` and import
//! the produced `liblognnet_py.so` as the module `lognnet_py` (see
//! `python/smoke_test.py`).

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use lognnet::classifier::Loss;
use lognnet::mnist;
use lognnet::network::{self, Algorithm, NetworkConfig, PatternSource};
use lognnet::tpattern::Pattern;
use lognnet::{chaos, ReservoirParams, W1Matrix};

fn to_py_err(e: lognnet::Error) -> PyErr {
    match &e {
        lognnet::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn pattern_source(pattern: &str) -> PyResult<PatternSource> {
    match pattern {
        "1" | "2" | "3" => Ok(PatternSource::Builtin(pattern.parse().unwrap())),
        path => Ok(PatternSource::File(PathBuf::from(path))),
    }
}

fn image_from_pixels(pixels: Vec<u8>) -> PyResult<mnist::RawImage> {
    let arr: [u8; mnist::IMAGE_PIXELS] = pixels
        .try_into()
        .map_err(|v: Vec<u8>| PyValueError::new_err(format!("need 784 pixels, got {}", v.len())))?;
    Ok(mnist::RawImage::new(arr))
}

/// A trained network handle.
#[pyclass(name = "Model")]
struct PyModel {
    inner: network::Model,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: network::load_model(path).map_err(to_py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        network::save_model(&self.inner, path).map_err(to_py_err)
    }

    /// Test accuracy (percent) over an IDX image/label pair on disk.
    #[pyo3(signature = (images_path, labels_path, algorithm = 2, limit = 0))]
    fn evaluate(
        &self,
        images_path: PathBuf,
        labels_path: PathBuf,
        algorithm: u8,
        limit: usize,
    ) -> PyResult<f64> {
        let dataset = mnist::load_dataset(images_path, labels_path)
            .map_err(to_py_err)?
            .truncated(limit);
        let algorithm = Algorithm::from_index(algorithm).map_err(to_py_err)?;
        Ok(network::evaluate(&self.inner, &dataset, algorithm))
    }

    /// Predicted digit for one 784-byte row-major image.
    #[pyo3(signature = (pixels, algorithm = 2))]
    fn predict(&self, pixels: Vec<u8>, algorithm: u8) -> PyResult<u8> {
        let image = image_from_pixels(pixels)?;
        let algorithm = Algorithm::from_index(algorithm).map_err(to_py_err)?;
        let mut ctx = network::InferenceContext::new(&self.inner, algorithm);
        Ok(network::predict_image(&self.inner, &mut ctx, &image))
    }

    /// Test accuracy recorded after each training epoch.
    fn training_history(&self) -> Vec<f64> {
        self.inner.training_history.clone()
    }

    /// Stored elements and bytes under the 4-bytes-per-element convention.
    #[pyo3(signature = (algorithm = 2))]
    fn memory_bytes(&self, algorithm: u8) -> PyResult<(usize, usize)> {
        let mut config = self.inner.config.clone();
        config.algorithm = Algorithm::from_index(algorithm).map_err(to_py_err)?;
        let report = network::memory_report(&config);
        Ok((report.stored_elements, report.bytes))
    }

    fn shape(&self) -> String {
        self.inner.config.shape_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(shape={}, r={}, final_accuracy={:.2})",
            self.inner.config.shape_string(),
            self.inner.config.params.r,
            self.inner.final_accuracy()
        )
    }
}

/// Train a network from IDX files on disk and return the model.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (
    train_images, train_labels, test_images, test_labels,
    shape = "784:25:10", r = 1.885, a = 0.3, b = 5.9, pattern = "3",
    epochs = 20, learning_rate = 0.3, seed = 42,
    limit_train = 0, limit_test = 0
))]
fn train(
    train_images: PathBuf,
    train_labels: PathBuf,
    test_images: PathBuf,
    test_labels: PathBuf,
    shape: &str,
    r: f64,
    a: f64,
    b: f64,
    pattern: &str,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
    limit_train: usize,
    limit_test: usize,
) -> PyResult<PyModel> {
    let (p, classifier_shape) = NetworkConfig::parse_shape(shape).map_err(to_py_err)?;
    let config = NetworkConfig {
        params: ReservoirParams::new(r, a, b, p).map_err(to_py_err)?,
        pattern: pattern_source(pattern)?,
        classifier_shape,
        learning_rate,
        epochs,
        seed,
        algorithm: Algorithm::Alg2,
        loss: Loss::SquaredError,
    };
    let train_set = mnist::load_dataset(train_images, train_labels)
        .map_err(to_py_err)?
        .truncated(limit_train);
    let test_set = mnist::load_dataset(test_images, test_labels)
        .map_err(to_py_err)?
        .truncated(limit_test);
    let model = network::train(&config, &train_set, &test_set).map_err(to_py_err)?;
    Ok(PyModel { inner: model })
}

/// Weight-array bytes for a shape/algorithm pair, as (elements, bytes).
#[pyfunction]
#[pyo3(signature = (shape, algorithm = 2))]
fn memory_bytes(shape: &str, algorithm: u8) -> PyResult<(usize, usize)> {
    let (p, classifier_shape) = NetworkConfig::parse_shape(shape).map_err(to_py_err)?;
    let config = NetworkConfig {
        params: ReservoirParams::with_defaults(p).map_err(to_py_err)?,
        pattern: PatternSource::Builtin(3),
        classifier_shape,
        learning_rate: 0.3,
        epochs: 1,
        seed: 0,
        algorithm: Algorithm::from_index(algorithm).map_err(to_py_err)?,
        loss: Loss::SquaredError,
    };
    let report = network::memory_report(&config);
    Ok((report.stored_elements, report.bytes))
}

/// The permutation of a builtin T-pattern.
#[pyfunction]
fn builtin_pattern(id: u8) -> PyResult<Vec<usize>> {
    Ok(Pattern::builtin(id).map_err(to_py_err)?.perm().to_vec())
}

/// Seed value `A * sin((i / 784) * pi / B)` of the reservoir's first column.
#[pyfunction]
fn seed_row(i: usize, a: f64, b: f64) -> f64 {
    chaos::seed_row(i, a, b)
}

/// One logistic-map step `1 - r * x^2`.
#[pyfunction]
fn logistic_step(x: f64, r: f64) -> f64 {
    chaos::logistic_step(x, r)
}

/// Reservoir weight for input `i`, hidden column `p` (1-based).
#[pyfunction]
fn weight_at(i: usize, p: usize, r: f64, a: f64, b: f64) -> PyResult<f64> {
    let params = ReservoirParams::new(r, a, b, p).map_err(to_py_err)?;
    Ok(chaos::weight_at(i, p, &params))
}

/// The full 785 x P reservoir matrix as a list of 785-element rows.
#[pyfunction]
fn materialize_w1(r: f64, a: f64, b: f64, p: usize) -> PyResult<Vec<Vec<f64>>> {
    let params = ReservoirParams::new(r, a, b, p).map_err(to_py_err)?;
    let w1 = W1Matrix::build(&params);
    Ok((0..=mnist::IMAGE_PIXELS)
        .map(|i| (1..=p).map(|col| w1.entry(i, col)).collect())
        .collect())
}

/// Lyapunov exponent of `x -> 1 - r * x^2`.
#[pyfunction]
#[pyo3(signature = (r, x0 = chaos::DEFAULT_X0, transient = chaos::DEFAULT_TRANSIENT, samples = chaos::DEFAULT_SAMPLES))]
fn lyapunov(r: f64, x0: f64, transient: usize, samples: usize) -> f64 {
    chaos::lyapunov(r, x0, transient, samples)
}

/// Post-transient orbit samples as (r, x) pairs for a grid of r values.
#[pyfunction]
#[pyo3(signature = (r_grid, transient = chaos::DEFAULT_TRANSIENT, samples = 100))]
fn bifurcation(r_grid: Vec<f64>, transient: usize, samples: usize) -> Vec<(f64, f64)> {
    chaos::bifurcation(&r_grid, transient, samples)
}

#[pymodule]
fn lognnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(memory_bytes, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(seed_row, m)?)?;
    m.add_function(wrap_pyfunction!(logistic_step, m)?)?;
    m.add_function(wrap_pyfunction!(weight_at, m)?)?;
    m.add_function(wrap_pyfunction!(materialize_w1, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov, m)?)?;
    m.add_function(wrap_pyfunction!(bifurcation, m)?)?;
    Ok(())
}
