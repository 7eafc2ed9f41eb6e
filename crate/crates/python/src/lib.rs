//! Python bindings. Matrices cross the boundary as lists of rows of complex
//! numbers; anything iterable in that shape (including numpy arrays) works.

use bipartite_holonomy::cli::{self, Command};
use bipartite_holonomy::error::HolonomyError;
use bipartite_holonomy::hopf;
use bipartite_holonomy::interferometer::{self, Group, MaxStatus, MaximizationOutcome};
use bipartite_holonomy::linalg::{CMatrix, CVector, RMatrix};
use bipartite_holonomy::random::Sampler;
use bipartite_holonomy::states::{self, DensityMatrix};
use bipartite_holonomy::transport::{self as parallel, FourierTerm, SmoothLoop};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(pyholonomy, NumericalError, PyRuntimeError);

type Rows = Vec<Vec<Complex64>>;

fn to_py_err(e: HolonomyError) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn matrix_from_rows(rows: &Rows) -> PyResult<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("matrix must be a non-empty list of equal-length rows"));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn rows_of(m: &CMatrix) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn real_rows(m: &RMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn parse_group(name: &str) -> PyResult<Group> {
    match name {
        "u" => Ok(Group::Unitary),
        "su" => Ok(Group::Special),
        "so" => Ok(Group::Orthogonal),
        other => Err(PyValueError::new_err(format!("unknown group {other:?}; expected u, su or so"))),
    }
}

fn status_name(s: MaxStatus) -> &'static str {
    match s {
        MaxStatus::UniqueMax => "unique-max",
        MaxStatus::Degenerate => "degenerate",
        MaxStatus::ZeroInterference => "zero-interference",
    }
}

fn steps_from(list: &[Rows]) -> PyResult<Vec<CMatrix>> {
    list.iter().map(matrix_from_rows).collect()
}

fn smooth_loop(d_a: usize, terms: Vec<(usize, u32, f64, f64)>) -> PyResult<SmoothLoop> {
    let terms = terms
        .into_iter()
        .map(|(generator, harmonic, cos, sin)| FourierTerm {
            generator,
            harmonic,
            cos,
            sin,
        })
        .collect();
    SmoothLoop::new(d_a, terms).map_err(to_py_err)
}

/// Bipartite density matrix on C^d_a ⊗ C^d_b.
#[pyclass(name = "State", module = "pyholonomy", from_py_object)]
#[derive(Clone)]
struct PyState {
    inner: DensityMatrix,
}

#[pymethods]
impl PyState {
    #[new]
    fn new(matrix: Rows, d_a: usize, d_b: usize) -> PyResult<Self> {
        let inner = DensityMatrix::new(matrix_from_rows(&matrix)?, d_a, d_b).map_err(to_py_err)?;
        Ok(PyState { inner })
    }

    /// a|00⟩ + b|11⟩; b defaults to sqrt(1 - a²).
    #[staticmethod]
    #[pyo3(signature = (a, b=None))]
    fn schmidt(a: f64, b: Option<f64>) -> PyResult<Self> {
        let b = b.unwrap_or_else(|| (1.0 - a * a).max(0.0).sqrt());
        Ok(PyState {
            inner: states::schmidt_state(a, b).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn werner(p: f64) -> PyResult<Self> {
        Ok(PyState {
            inner: states::werner_state(p, &states::bell_vector()).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn pure(psi: Vec<Complex64>, d_a: usize, d_b: usize) -> PyResult<Self> {
        let inner = DensityMatrix::from_pure(&CVector::from_vec(psi), d_a, d_b).map_err(to_py_err)?;
        Ok(PyState { inner })
    }

    #[getter]
    fn d_a(&self) -> usize {
        self.inner.d_a()
    }

    #[getter]
    fn d_b(&self) -> usize {
        self.inner.d_b()
    }

    fn matrix(&self) -> Rows {
        rows_of(self.inner.matrix())
    }

    fn reduced_a(&self) -> Rows {
        rows_of(&self.inner.reduced_a())
    }

    fn reduced_b(&self) -> Rows {
        rows_of(&self.inner.reduced_b())
    }

    fn purity(&self) -> f64 {
        self.inner.purity()
    }

    /// Full Stokes tensor S_jk in the generalized Gell-Mann basis.
    fn stokes(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(real_rows(stokes_of(&self.inner)?.matrix()))
    }

    /// Correlation block S_jk with j, k ≥ 1.
    fn correlation(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(real_rows(stokes_of(&self.inner)?.correlation().matrix()))
    }

    /// Concurrence of a pure state.
    fn concurrence(&self) -> PyResult<f64> {
        states::concurrence_pure(&self.inner).map_err(to_py_err)
    }

    /// (U ⊗ V) ρ (U ⊗ V)†.
    fn apply_local(&self, u: Rows, v: Rows) -> PyResult<Self> {
        let inner = states::apply_local(&self.inner, &matrix_from_rows(&u)?, &matrix_from_rows(&v)?)
            .map_err(to_py_err)?;
        Ok(PyState { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "State(d_a={}, d_b={}, purity={:.6})",
            self.inner.d_a(),
            self.inner.d_b(),
            self.inner.purity()
        )
    }
}

fn stokes_of(rho: &DensityMatrix) -> PyResult<states::StokesTensor> {
    let a = bipartite_holonomy::algebra::cached_basis(rho.d_a()).map_err(to_py_err)?;
    let b = bipartite_holonomy::algebra::cached_basis(rho.d_b()).map_err(to_py_err)?;
    states::density_to_stokes(rho, &a, &b).map_err(to_py_err)
}

fn outcome_dict<'py>(py: Python<'py>, out: &MaximizationOutcome) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("v", rows_of(&out.v))?;
    d.set_item("intensity", out.intensity)?;
    d.set_item("lagrange_lambda", out.lagrange_lambda)?;
    d.set_item("lagrange_mu", out.lagrange_mu.clone())?;
    d.set_item("residual", out.residual)?;
    d.set_item("status", status_name(out.status))?;
    Ok(d)
}

/// Coincidence intensity 1/2 + 1/2 Re Tr[ρ (U ⊗ V)].
#[pyfunction]
fn coincidence_intensity(state: &PyState, u: Rows, v: Rows) -> PyResult<f64> {
    interferometer::coincidence_intensity(&state.inner, &matrix_from_rows(&u)?, &matrix_from_rows(&v)?)
        .map(|r| r.value)
        .map_err(to_py_err)
}

/// Parallel V for U: maximizes the coincidence intensity over the group.
#[pyfunction]
#[pyo3(signature = (state, u, group="u"))]
fn maximize<'py>(py: Python<'py>, state: &PyState, u: Rows, group: &str) -> PyResult<Bound<'py, PyDict>> {
    let out = interferometer::maximize(&state.inner, &matrix_from_rows(&u)?, parse_group(group)?)
        .map_err(to_py_err)?;
    outcome_dict(py, &out)
}

/// Iterated parallel transport along a sequence of step unitaries.
#[pyfunction]
#[pyo3(signature = (state, steps, group="u"))]
fn transport<'py>(
    py: Python<'py>,
    state: &PyState,
    steps: Vec<Rows>,
    group: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let rec = parallel::transport_sequence(&state.inner, &steps_from(&steps)?, parse_group(group)?)
        .map_err(to_py_err)?;
    let d = PyDict::new(py);
    let mut list = Vec::with_capacity(rec.steps.len());
    for s in &rec.steps {
        let e = PyDict::new(py);
        e.set_item("v", rows_of(&s.v))?;
        e.set_item("intensity", s.intensity)?;
        e.set_item("closure_residual", s.closure_residual)?;
        e.set_item("status", status_name(s.status))?;
        list.push(e);
    }
    d.set_item("steps", list)?;
    d.set_item("cumulative_u", rows_of(&rec.cumulative_u))?;
    d.set_item("cumulative_v", rows_of(&rec.cumulative_v))?;
    Ok(d)
}

/// Holonomy of a closed discrete loop of step unitaries.
#[pyfunction]
#[pyo3(signature = (state, steps, group="u", closure_tol=parallel::DEFAULT_CLOSURE_TOL))]
fn loop_holonomy(state: &PyState, steps: Vec<Rows>, group: &str, closure_tol: f64) -> PyResult<Rows> {
    let h = parallel::holonomy_from_loop(&state.inner, &steps_from(&steps)?, parse_group(group)?, closure_tol)
        .map_err(to_py_err)?;
    Ok(rows_of(&h.v))
}

/// Step unitaries of the Fourier loop exp(i Σ θ_j(t) χ_j) on n_steps points.
/// Terms are (generator, harmonic, cos, sin).
#[pyfunction]
fn discretize_loop(d_a: usize, terms: Vec<(usize, u32, f64, f64)>, n_steps: usize) -> PyResult<Vec<Rows>> {
    Ok(smooth_loop(d_a, terms)?.discretize(n_steps).iter().map(rows_of).collect())
}

/// Path-ordered exponential of the connection along a Fourier loop.
#[pyfunction]
#[pyo3(signature = (state, terms, n_steps, group="u"))]
fn path_ordered_holonomy(
    state: &PyState,
    terms: Vec<(usize, u32, f64, f64)>,
    n_steps: usize,
    group: &str,
) -> PyResult<Rows> {
    let path = smooth_loop(state.inner.d_a(), terms)?;
    let h = parallel::path_ordered_holonomy(&state.inner, &path, n_steps, parse_group(group)?)
        .map_err(to_py_err)?;
    Ok(rows_of(&h.v))
}

/// Quaternionic parallel rule for a two-qubit state: returns the SU(2)
/// coefficients (V0, V1, V2, V3) of V and the normalizer.
#[pyfunction]
fn levay_parallel_v(state: &PyState, u: [f64; 4]) -> PyResult<([f64; 4], f64)> {
    let m = stokes_of(&state.inner)?.correlation();
    hopf::levay_parallel_v(&m, u).map_err(to_py_err)
}

/// Quaternionic (p, q) amplitudes of a normalized two-qubit vector, each as
/// (a, b, c, d) for a + bi + cj + dk.
#[pyfunction]
fn to_quaternionic(psi: Vec<Complex64>) -> PyResult<([f64; 4], [f64; 4])> {
    let sp = hopf::to_quaternionic(&CVector::from_vec(psi)).map_err(to_py_err)?;
    Ok((sp.p.components(), sp.q.components()))
}

/// Haar-random element of U(d), SU(d) or SO(d).
#[pyfunction]
#[pyo3(signature = (d, group="u", seed=0))]
fn random_unitary(d: usize, group: &str, seed: u64) -> PyResult<Rows> {
    Ok(rows_of(&parse_group(group)?.sample(&mut Sampler::new(seed), d)))
}

/// Runs a CLI command on a scenario JSON document and returns the JSON report.
#[pyfunction]
fn run_scenario(command: &str, scenario: &str) -> PyResult<String> {
    let command = match command {
        "intensity" => Command::Intensity,
        "maximize" => Command::Maximize,
        "transport" => Command::Transport,
        "holonomy" => Command::Holonomy,
        "levay-compare" => Command::LevayCompare,
        "selftest" => Command::Selftest,
        other => return Err(PyValueError::new_err(format!("unknown command {other:?}"))),
    };
    let result = cli::parse_scenario(scenario).and_then(|sc| cli::run(command, &sc));
    match result {
        Ok(report) => Ok(cli::to_json(&report)),
        Err(e) if e.exit_code() == 3 => Err(NumericalError::new_err(e.to_json())),
        Err(e) => Err(PyValueError::new_err(e.to_json())),
    }
}

/// Acceptance suite as a list of (id, name, passed, detail).
#[pyfunction]
#[pyo3(signature = (seed=0))]
fn selftest(seed: u64) -> Vec<(u32, String, bool, String)> {
    bipartite_holonomy::acceptance::run_all(seed)
        .criteria
        .into_iter()
        .map(|c| (c.id, c.name, c.passed, c.detail))
        .collect()
}

#[pymodule]
fn pyholonomy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_function(wrap_pyfunction!(coincidence_intensity, m)?)?;
    m.add_function(wrap_pyfunction!(maximize, m)?)?;
    m.add_function(wrap_pyfunction!(transport, m)?)?;
    m.add_function(wrap_pyfunction!(loop_holonomy, m)?)?;
    m.add_function(wrap_pyfunction!(discretize_loop, m)?)?;
    m.add_function(wrap_pyfunction!(path_ordered_holonomy, m)?)?;
    m.add_function(wrap_pyfunction!(levay_parallel_v, m)?)?;
    m.add_function(wrap_pyfunction!(to_quaternionic, m)?)?;
    m.add_function(wrap_pyfunction!(random_unitary, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
