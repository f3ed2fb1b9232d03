//! Python bindings: build a model, evaluate costs and gradients, sample
//! gradient statistics.

use lcqnn_core::gradients::{estimate_grad_stats, finite_diff_grad, grad_full, param_shift_grad};
use lcqnn_core::{
    Architecture, BlockKind, LcqnnModel, Observable, ParamId, Probe, StateVector, C64,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: lcqnn_core::Error) -> PyErr {
    match e {
        lcqnn_core::Error::NonFinite(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn encode(input: Option<Vec<f64>>) -> PyResult<Option<StateVector>> {
    input.map(|x| StateVector::amplitude_encode(&x)).transpose().map_err(py_err)
}

fn parse<T: std::str::FromStr<Err = lcqnn_core::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// An LCQNN with `m` control qubits, `n` working qubits, `L` branches,
/// locality `k` and `D` layers per block.
#[pyclass(name = "Model", module = "lcqnn", frozen)]
struct PyModel {
    inner: LcqnnModel,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (m, n, L, k, D, kind = "ansatz"))]
    #[allow(non_snake_case)]
    fn new(m: usize, n: usize, L: usize, k: usize, D: usize, kind: &str) -> PyResult<Self> {
        let kind: BlockKind = parse(kind)?;
        let inner = LcqnnModel::with_kind(Architecture::new(m, n, L, k, D), kind).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.inner.num_qubits()
    }

    #[getter]
    fn alpha_len(&self) -> usize {
        self.inner.alpha_len()
    }

    #[getter]
    fn theta_len(&self) -> usize {
        self.inner.theta_layout_size()
    }

    #[getter]
    fn num_params(&self) -> usize {
        self.inner.num_params()
    }

    #[getter]
    fn groups(&self) -> Vec<Vec<usize>> {
        self.inner.groups().to_vec()
    }

    /// Position of `"alpha:i"` or `"theta:i"` in the packed `[alpha; theta]` vector.
    fn param_index(&self, param_id: &str) -> PyResult<usize> {
        self.inner.param_index(parse::<ParamId>(param_id)?).map_err(py_err)
    }

    /// Output amplitudes on `m + n` qubits, qubit 0 most significant.
    #[pyo3(signature = (alpha, theta, input = None))]
    fn forward(&self, alpha: Vec<f64>, theta: Vec<f64>, input: Option<Vec<f64>>) -> PyResult<Vec<C64>> {
        let input = encode(input)?;
        let state = self.inner.forward(&alpha, &theta, input.as_ref()).map_err(py_err)?;
        Ok(state.into_amplitudes())
    }

    /// Expectation of a working-register observable such as `"Z0"` or `"Z0Z2"`.
    #[pyo3(signature = (alpha, theta, obs = "Z0", input = None))]
    fn cost(&self, alpha: Vec<f64>, theta: Vec<f64>, obs: &str, input: Option<Vec<f64>>) -> PyResult<f64> {
        let obs = Observable::parse(obs).map_err(py_err)?;
        let input = encode(input)?;
        self.inner.cost(&alpha, &theta, &obs, input.as_ref()).map_err(py_err)
    }

    /// Exact derivative by the two-point shift rule.
    #[pyo3(signature = (alpha, theta, param_id, obs = "Z0", input = None))]
    fn param_shift(
        &self,
        alpha: Vec<f64>,
        theta: Vec<f64>,
        param_id: &str,
        obs: &str,
        input: Option<Vec<f64>>,
    ) -> PyResult<f64> {
        let obs = Observable::parse(obs).map_err(py_err)?;
        let input = encode(input)?;
        param_shift_grad(&self.inner, &alpha, &theta, &obs, input.as_ref(), parse(param_id)?).map_err(py_err)
    }

    /// Central finite difference with step `h`.
    #[pyo3(signature = (alpha, theta, param_id, obs = "Z0", input = None, h = 1e-5))]
    #[allow(clippy::too_many_arguments)]
    fn finite_diff(
        &self,
        alpha: Vec<f64>,
        theta: Vec<f64>,
        param_id: &str,
        obs: &str,
        input: Option<Vec<f64>>,
        h: f64,
    ) -> PyResult<f64> {
        let obs = Observable::parse(obs).map_err(py_err)?;
        let input = encode(input)?;
        finite_diff_grad(&self.inner, &alpha, &theta, &obs, input.as_ref(), parse(param_id)?, h).map_err(py_err)
    }

    /// Full gradient over the packed `[alpha; theta]` vector.
    #[pyo3(signature = (alpha, theta, obs = "Z0", input = None))]
    fn grad(&self, alpha: Vec<f64>, theta: Vec<f64>, obs: &str, input: Option<Vec<f64>>) -> PyResult<Vec<f64>> {
        let obs = Observable::parse(obs).map_err(py_err)?;
        let input = encode(input)?;
        let mut g = grad_full(&self.inner, &alpha, &theta, &[obs], input.as_ref()).map_err(py_err)?;
        Ok(g.pop().unwrap_or_default())
    }

    /// Mean, variance and standard error of a gradient component over
    /// uniformly drawn parameters.
    #[pyo3(signature = (obs = "Z0", probe = "theta:0", samples = 500, seed = 42))]
    fn grad_stats(&self, py: Python<'_>, obs: &str, probe: &str, samples: usize, seed: u64) -> PyResult<(f64, f64, f64)> {
        let obs = Observable::parse(obs).map_err(py_err)?;
        let probe: Probe = parse(probe)?;
        let stats = py
            .detach(|| estimate_grad_stats(&self.inner, &obs, probe, samples, seed))
            .map_err(py_err)?;
        Ok((stats.mean, stats.variance(), stats.stderr_mean()))
    }

    fn __repr__(&self) -> String {
        let a = self.inner.architecture();
        format!(
            "Model(m={}, n={}, L={}, k={}, D={}, kind='{}')",
            a.m,
            a.n,
            a.l,
            a.k,
            a.depth,
            self.inner.kind()
        )
    }
}

#[pymodule]
fn lcqnn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
