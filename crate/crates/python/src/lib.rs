//! Python bindings for the `volterra` solvers.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use volterra::stochastic::{ModeEstimate, SpectralModel};
use volterra::{
    BasisSet, DeterministicProblem, KernelSpec, Mode, ResolventKind, SolutionSurface, SolverKind,
    SpaceGrid, VolterraError,
};

fn py_err(e: VolterraError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn resolvent_kind(alpha: u32) -> PyResult<ResolventKind> {
    ResolventKind::from_alpha(alpha).map_err(py_err)
}

/// Orthonormal shifted-Legendre basis on [0, horizon].
#[pyclass(name = "Basis", frozen)]
struct PyBasis {
    inner: BasisSet,
}

#[pymethods]
impl PyBasis {
    #[new]
    fn new(n: usize, horizon: f64) -> PyResult<Self> {
        Ok(Self {
            inner: BasisSet::new(n, horizon).map_err(py_err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon()
    }

    /// phi_j(t) for 1-based j.
    fn eval(&self, j: usize, t: f64) -> PyResult<f64> {
        self.inner.eval(j, t).map_err(py_err)
    }

    fn eval_all(&self, t: f64) -> PyResult<Vec<f64>> {
        self.inner.eval_all(t).map_err(py_err)
    }

    fn gram_matrix(&self) -> Vec<Vec<f64>> {
        self.inner
            .gram_matrix(&self.inner.default_quadrature())
            .to_rows()
    }

    fn integrate(&self, j: usize) -> PyResult<f64> {
        self.inner.integrate_basis(j).map_err(py_err)
    }
}

/// Memory kernel: "constant", "linear", "exponential" or "power" (with alpha).
#[pyclass(name = "Kernel", frozen)]
struct PyKernel {
    inner: KernelSpec,
}

#[pymethods]
impl PyKernel {
    #[new]
    #[pyo3(signature = (family, alpha=None))]
    fn new(family: &str, alpha: Option<f64>) -> PyResult<Self> {
        let inner = match (family, alpha) {
            ("constant", None) => KernelSpec::Constant,
            ("linear", None) => KernelSpec::Linear,
            ("exponential", None) => KernelSpec::Exponential,
            ("power", Some(a)) => KernelSpec::power(a).map_err(py_err)?,
            ("power", None) => return Err(PyValueError::new_err("power kernel needs alpha")),
            (other, _) => {
                return Err(PyValueError::new_err(format!("unknown kernel family `{other}`")))
            }
        };
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!("Kernel({})", self.inner.name())
    }

    fn eval(&self, t: f64) -> PyResult<f64> {
        self.inner.eval(t).map_err(py_err)
    }

    fn relaxation_closed(&self, gamma: f64, t: f64) -> PyResult<f64> {
        volterra::relaxation_closed(&self.inner, gamma, t).map_err(py_err)
    }

    /// Returns (times, values) of the product-trapezoidal solution.
    #[pyo3(signature = (gamma, step=1e-3, count=6000))]
    fn relaxation_numeric(&self, gamma: f64, step: f64, count: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let tbl = volterra::relaxation_numeric(&self.inner, gamma, step, count).map_err(py_err)?;
        Ok((tbl.times, tbl.values))
    }

    /// Complete-positivity diagnostics of the numeric relaxation table.
    #[pyo3(signature = (gamma, step=1e-3, count=6000))]
    fn positivity<'py>(
        &self,
        py: Python<'py>,
        gamma: f64,
        step: f64,
        count: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let tbl = volterra::relaxation_numeric(&self.inner, gamma, step, count).map_err(py_err)?;
        let r = volterra::check_complete_positivity(&tbl);
        let d = PyDict::new(py);
        d.set_item("nonneg", r.nonneg)?;
        d.set_item("nonincreasing", r.nonincreasing)?;
        d.set_item("first_violation", r.first_violation)?;
        d.set_item(
            "first_violation_time",
            r.first_violation.map(|i| tbl.times[i]),
        )?;
        Ok(d)
    }
}

/// Solved Galerkin expansion X_n(x, t).
#[pyclass(name = "Surface", frozen)]
struct PySurface {
    inner: SolutionSurface,
    kind: ResolventKind,
}

#[pymethods]
impl PySurface {
    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.grid().points()
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual()
    }

    #[getter]
    fn coefficients(&self) -> Vec<Vec<f64>> {
        self.inner.coefficients().to_vec()
    }

    fn evaluate(&self, t: f64) -> PyResult<Vec<f64>> {
        Ok(self.inner.evaluate(t).map_err(py_err)?.values)
    }

    /// Numerical minus analytic solution on the grid.
    fn error(&self, t: f64) -> PyResult<Vec<f64>> {
        let kind = self.kind;
        Ok(self
            .inner
            .error_field(|t, x| volterra::analytic_solution(kind, t, x), t)
            .map_err(py_err)?
            .values)
    }
}

/// Solves the noise-free problem for X_0(x) = exp(-x^2/4).
#[pyfunction]
#[pyo3(signature = (alpha=1, n=8, m=150, x_min=-15.0, x_max=15.0, horizon=6.0, solver="dense"))]
fn solve_deterministic(
    alpha: u32,
    n: usize,
    m: usize,
    x_min: f64,
    x_max: f64,
    horizon: f64,
    solver: &str,
) -> PyResult<PySurface> {
    let kind = resolvent_kind(alpha)?;
    let solver = match solver {
        "dense" => SolverKind::Dense,
        "kronecker" => SolverKind::Kronecker,
        other => return Err(PyValueError::new_err(format!("unknown solver `{other}`"))),
    };
    let problem = DeterministicProblem {
        kernel: kind.kernel(),
        basis: BasisSet::new(n, horizon).map_err(py_err)?,
        grid: SpaceGrid::new(x_min, x_max, m).map_err(py_err)?,
        solver,
    };
    let inner = problem
        .solve(volterra::resolvent::gaussian_profile)
        .map_err(py_err)?;
    Ok(PySurface { inner, kind })
}

#[pyfunction]
fn analytic_solution(alpha: u32, t: f64, x: f64) -> PyResult<f64> {
    Ok(volterra::analytic_solution(resolvent_kind(alpha)?, t, x))
}

#[pyfunction]
fn phi_heat(t: f64, x: f64) -> PyResult<f64> {
    volterra::phi_heat(t, x).map_err(py_err)
}

#[pyfunction]
fn normal_stream(seed: u64, count: usize) -> Vec<f64> {
    volterra::normal_stream(seed, count)
}

/// Stochastic convolution sampler for the Gaussian noise profile.
#[pyclass(name = "StochasticConvolution", frozen)]
struct PyStochasticConvolution {
    inner: volterra::StochasticConvolution,
}

#[pymethods]
impl PyStochasticConvolution {
    #[new]
    #[pyo3(signature = (alpha=1, strength=0.1, steps=600, horizon=6.0, seed=volterra::stochastic::DEFAULT_SEED))]
    fn new(alpha: u32, strength: f64, steps: usize, horizon: f64, seed: u64) -> PyResult<Self> {
        let noise = volterra::NoiseSpec::new(strength, steps, horizon, seed).map_err(py_err)?;
        Ok(Self {
            inner: volterra::StochasticConvolution::new(resolvent_kind(alpha)?, noise),
        })
    }

    fn zeta(&self) -> Vec<f64> {
        self.inner.noise().zeta()
    }

    fn closed_form(&self, t: f64, x: f64, zeta: Vec<f64>) -> PyResult<f64> {
        self.inner.closed_form(t, x, &zeta).map_err(py_err)
    }

    fn generic(&self, t: f64, x: f64, zeta: Vec<f64>) -> PyResult<f64> {
        self.inner.generic(t, x, &zeta).map_err(py_err)
    }

    fn variance(&self, t: f64, x: f64) -> PyResult<f64> {
        self.inner.variance(t, x).map_err(py_err)
    }

    fn samples(&self, t: f64, x: f64, paths: usize, seed: u64) -> PyResult<Vec<f64>> {
        self.inner.point_samples(t, x, paths, seed).map_err(py_err)
    }
}

fn estimate_dict<'py>(py: Python<'py>, e: &ModeEstimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("k", e.k)?;
    d.set_item("mu", e.mu)?;
    d.set_item("target_variance", e.target_variance)?;
    d.set_item("sample_variance", e.sample_variance)?;
    d.set_item("n_paths", e.n_paths)?;
    d.set_item("standard_error", e.standard_error())?;
    Ok(d)
}

/// Per-mode Monte Carlo variance of the stochastic convolution.
#[pyfunction]
#[pyo3(signature = (eigenvalues, alpha=1, t=1.0, n_paths=10_000, seed=volterra::stochastic::DEFAULT_SEED, base_steps=1000))]
fn spectral_mc<'py>(
    py: Python<'py>,
    eigenvalues: Vec<f64>,
    alpha: u32,
    t: f64,
    n_paths: usize,
    seed: u64,
    base_steps: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let model = SpectralModel {
        eigenvalues,
        kernel: resolvent_kind(alpha)?.kernel(),
    };
    let rows = volterra::spectral_mc(&model, t, n_paths, seed, base_steps).map_err(py_err)?;
    rows.iter().map(|r| estimate_dict(py, r)).collect()
}

/// Runs a CLI mode in-process; returns (passed, csv_text).
#[pyfunction]
#[pyo3(signature = (mode, **options))]
fn run_mode(mode: &str, options: Option<&Bound<'_, PyDict>>) -> PyResult<(bool, String)> {
    let mode: Mode = mode.parse().map_err(py_err)?;
    let mut overrides = BTreeMap::new();
    if let Some(opts) = options {
        for (k, v) in opts.iter() {
            overrides.insert(k.extract::<String>()?, v.str()?.to_string());
        }
    }
    let cfg = volterra::parse_config(mode, None, &overrides).map_err(py_err)?;
    let mut buf = Vec::new();
    let outcome = volterra::run(&cfg, &mut buf).map_err(py_err)?;
    let text = String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((outcome.passed, text))
}

#[pymodule]
fn volterra_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBasis>()?;
    m.add_class::<PyKernel>()?;
    m.add_class::<PySurface>()?;
    m.add_class::<PyStochasticConvolution>()?;
    m.add_function(wrap_pyfunction!(solve_deterministic, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_solution, m)?)?;
    m.add_function(wrap_pyfunction!(phi_heat, m)?)?;
    m.add_function(wrap_pyfunction!(normal_stream, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_mc, m)?)?;
    m.add_function(wrap_pyfunction!(run_mode, m)?)?;
    Ok(())
}
