//! Python bindings: CSP instances, label-cover games and the dictator test.

use kcsp::algorithms::{extend_algorithm, BaseAlgorithm, BruteForce, ExtensionParams, NaiveRandom};
use kcsp::csp::{brute_force_optimum, generate_random_instance, Assignment, CspInstance};
use kcsp::dictator::{dictator_closed_form, quasirandomness_check, run_test_exact, run_test_mc, RFunction, TestParams};
use kcsp::games::{self, GameAssignment, GameKind, PcpParams};
use kcsp::params::{default_rho, LogThreshold};
use kcsp::Error;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;

create_exception!(kcsp_py, ValidationError, PyValueError, "Malformed input or parameters.");
create_exception!(
    kcsp_py,
    BudgetError,
    PyException,
    "Exhaustive work exceeds the configured budget."
);
create_exception!(
    kcsp_py,
    HypothesisError,
    PyException,
    "An inequality's hypothesis does not hold."
);

/// Python exception class name for each error kind.
pub fn exception_name(e: &Error) -> &'static str {
    match e {
        Error::Validation(_) | Error::Json(_) => "ValidationError",
        Error::Budget { .. } => "BudgetError",
        Error::Hypothesis(_) => "HypothesisError",
        Error::Io(_) => "OSError",
    }
}

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Validation(_) | Error::Json(_) => ValidationError::new_err(msg),
        Error::Budget { .. } => BudgetError::new_err(msg),
        Error::Hypothesis(_) => HypothesisError::new_err(msg),
        Error::Io(_) => PyOSError::new_err(msg),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for kcsp::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Weighted Max k-CSP_R instance.
#[pyclass(name = "Csp", module = "kcsp_py", frozen)]
pub struct PyCsp {
    inner: CspInstance,
}

#[pymethods]
impl PyCsp {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: CspInstance::from_json(text).py()?,
        })
    }

    /// `m` uniformly weighted constraints on distinct random scopes, each
    /// predicate row a fair coin.
    #[staticmethod]
    #[pyo3(signature = (n, r, k, m, seed = 0))]
    fn random(n: usize, r: usize, k: usize, m: usize, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: generate_random_instance(n, r, k, m, seed).py()?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().py()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter(R)]
    fn r(&self) -> usize {
        self.inner.r
    }

    #[getter]
    fn num_constraints(&self) -> usize {
        self.inner.constraints.len()
    }

    fn evaluate(&self, assignment: Vec<usize>) -> PyResult<f64> {
        self.inner.evaluate(&Assignment(assignment)).py()
    }

    fn expected_random_value(&self) -> f64 {
        self.inner.expected_random_value()
    }

    /// Optimal assignment and value, first in lexicographic order on ties.
    #[pyo3(signature = (budget = 10_000_000))]
    fn brute_force(&self, py: Python<'_>, budget: u64) -> PyResult<(Vec<usize>, f64)> {
        let (a, v) = py.detach(|| brute_force_optimum(&self.inner, budget)).py()?;
        Ok((a.0, v))
    }

    /// Project to arity `k_prime`, solve with `base`, blend with
    /// probability `alpha`.
    #[pyo3(signature = (k_prime = None, alpha = None, base = "brute", seed = 0))]
    fn extend(&self, py: Python<'_>, k_prime: Option<usize>, alpha: Option<f64>, base: &str, seed: u64) -> PyResult<Vec<usize>> {
        let k = self
            .inner
            .uniform_arity()
            .ok_or_else(|| ValidationError::new_err("extension needs every constraint to have the same arity"))?;
        let kp = k_prime.unwrap_or(k.saturating_sub(1));
        let mut params = ExtensionParams::new(k, kp).py()?;
        if let Some(a) = alpha {
            params = params.with_alpha(a).py()?;
        }
        let base: Box<dyn BaseAlgorithm + Send + Sync> = match base {
            "brute" => Box::new(BruteForce::new(kp)),
            "naive" => Box::new(NaiveRandom { arity: kp }),
            other => return Err(ValidationError::new_err(format!("unknown base algorithm '{other}'"))),
        };
        let a = py
            .detach(|| extend_algorithm(&self.inner, base.as_ref(), &params, seed))
            .py()?;
        Ok(a.0)
    }

    fn __repr__(&self) -> String {
        format!(
            "Csp(n={}, R={}, constraints={})",
            self.inner.n,
            self.inner.r,
            self.inner.constraints.len()
        )
    }
}

/// Unique or d-to-1 label-cover game.
#[pyclass(name = "Game", module = "kcsp_py", frozen)]
pub struct PyGame {
    inner: games::Game,
}

#[pymethods]
impl PyGame {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: games::Game::from_json(text).py()?,
        })
    }

    /// Random game plus the labeling it was built around (satisfying every
    /// edge when `planted`).
    #[staticmethod]
    #[pyo3(signature = (left, right, alphabet, d = 1, degree = 2, planted = false, seed = 0))]
    fn generate(
        left: usize,
        right: usize,
        alphabet: usize,
        d: usize,
        degree: usize,
        planted: bool,
        seed: u64,
    ) -> PyResult<(Self, Vec<usize>, Vec<usize>)> {
        let (g, a) = games::generate_game(left, right, alphabet, d, degree, planted, seed).py()?;
        Ok((Self { inner: g }, a.left, a.right))
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().py()
    }

    #[getter]
    fn kind(&self) -> String {
        match self.inner.kind {
            GameKind::Unique => "unique".into(),
            GameKind::DToOne(d) => format!("{d}-to-1"),
        }
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.edges.len()
    }

    fn value(&self, left: Vec<usize>, right: Vec<usize>) -> PyResult<f64> {
        games::game_value(&self.inner, &GameAssignment { left, right }).py()
    }

    #[pyo3(signature = (budget = 10_000_000))]
    fn brute_force(&self, py: Python<'_>, budget: u64) -> PyResult<(Vec<usize>, Vec<usize>, f64)> {
        let (a, v) = py.detach(|| games::brute_force_game_value(&self.inner, budget)).py()?;
        Ok((a.left, a.right, v))
    }

    /// The unique game obtained by spreading each right label over `d` slots.
    fn reduce_d21(&self) -> PyResult<Self> {
        Ok(Self {
            inner: games::reduce_d21_to_ug(&self.inner).py()?,
        })
    }

    /// Exact CSP whose value on a proof equals the verifier's acceptance.
    #[pyo3(name = "to_csp", signature = (k, r, rho = None))]
    fn to_csp(&self, py: Python<'_>, k: usize, r: usize, rho: Option<f64>) -> PyResult<PyCsp> {
        let mut params = PcpParams::new(k, r).py()?;
        if let Some(rho) = rho {
            params = params.with_rho(rho).py()?;
        }
        let inner = py.detach(|| games::reduce_ug_to_csp(&self.inner, &params, 0)).py()?;
        Ok(PyCsp { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Game(kind={}, V={}, W={}, N={})",
            self.kind(),
            self.inner.left,
            self.inner.right,
            self.inner.alphabet
        )
    }
}

/// A function `[R]^n -> [R]` stored as a row-major table.
#[pyclass(name = "RFunction", module = "kcsp_py", frozen)]
pub struct PyRFunction {
    inner: RFunction,
}

fn test_params(k: usize, r: usize, rho: Option<f64>) -> PyResult<TestParams> {
    let params = TestParams::new(k, r).py()?;
    match rho {
        Some(rho) => params.with_rho(rho).py(),
        None => Ok(params),
    }
}

#[pymethods]
impl PyRFunction {
    #[new]
    #[pyo3(signature = (n, r, table))]
    fn new(n: usize, r: usize, table: Vec<usize>) -> PyResult<Self> {
        Ok(Self {
            inner: RFunction::new(n, r, table).py()?,
        })
    }

    #[staticmethod]
    fn dictator(n: usize, r: usize, coord: usize) -> PyResult<Self> {
        Ok(Self {
            inner: RFunction::dictator(n, r, coord).py()?,
        })
    }

    #[staticmethod]
    fn constant(n: usize, r: usize, value: usize) -> PyResult<Self> {
        Ok(Self {
            inner: RFunction::constant(n, r, value).py()?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, r, seed = 0))]
    fn random(n: usize, r: usize, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: RFunction::random(n, r, seed).py()?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, r, seed = 0))]
    fn folded_random(n: usize, r: usize, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: RFunction::folded_random(n, r, seed).py()?,
        })
    }

    #[staticmethod]
    fn plurality(n: usize, r: usize) -> PyResult<Self> {
        Ok(Self {
            inner: RFunction::plurality(n, r).py()?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter(R)]
    fn r(&self) -> usize {
        self.inner.r
    }

    #[getter]
    fn table(&self) -> Vec<usize> {
        self.inner.table.clone()
    }

    fn __call__(&self, x: Vec<usize>) -> PyResult<usize> {
        if x.len() != self.inner.n || x.iter().any(|&v| v >= self.inner.r) {
            return Err(ValidationError::new_err(format!(
                "point must have {} entries below {}",
                self.inner.n, self.inner.r
            )));
        }
        Ok(self.inner.eval(&x))
    }

    fn is_balanced(&self) -> bool {
        self.inner.is_balanced()
    }

    /// Exact acceptance probability of the k-query test.
    #[pyo3(signature = (k, rho = None))]
    fn test_exact(&self, py: Python<'_>, k: usize, rho: Option<f64>) -> PyResult<f64> {
        let params = test_params(k, self.inner.r, rho)?;
        py.detach(|| run_test_exact(&self.inner, &params)).py()
    }

    /// Simulated acceptance as `(estimate, stderr)`.
    #[pyo3(signature = (k, rho = None, trials = 100_000, seed = 0))]
    fn test_mc(&self, py: Python<'_>, k: usize, rho: Option<f64>, trials: u64, seed: u64) -> PyResult<(f64, f64)> {
        let params = test_params(k, self.inner.r, rho)?.with_trials(trials, seed);
        let est = py.detach(|| run_test_mc(&self.inner, &params)).py()?;
        Ok((est.value, est.stderr))
    }

    /// `(is_quasirandom, max_influence, (projection, coordinate))` for
    /// degree-`d` influences against threshold `exp(ln_delta)`.
    fn quasirandomness(&self, d: usize, ln_delta: f64) -> PyResult<(bool, f64, (usize, usize))> {
        let budget = kcsp::dictator::DEFAULT_DICTATOR_BUDGET;
        let rep = quasirandomness_check(&self.inner, d, LogThreshold::from_ln(ln_delta), budget).py()?;
        Ok((rep.is_quasirandom, rep.max_influence, rep.argmax))
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().py()
    }

    fn __repr__(&self) -> String {
        format!("RFunction(n={}, R={})", self.inner.n, self.inner.r)
    }
}

/// Acceptance of a dictator: `(ρ + (1-ρ)/R)^k + (R-1)((1-ρ)/R)^k`.
#[pyfunction(name = "dictator_closed_form")]
fn py_dictator_closed_form(k: usize, r: usize, rho: f64) -> f64 {
    dictator_closed_form(k, r, rho)
}

/// `1/sqrt((k-1) ln R)`, capped at 1.
#[pyfunction(name = "default_rho")]
fn py_default_rho(k: usize, r: usize) -> f64 {
    default_rho(k, r)
}

#[pymodule]
pub fn kcsp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCsp>()?;
    m.add_class::<PyGame>()?;
    m.add_class::<PyRFunction>()?;
    m.add_function(wrap_pyfunction!(py_dictator_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(py_default_rho, m)?)?;
    let py = m.py();
    m.add("ValidationError", py.get_type::<ValidationError>())?;
    m.add("BudgetError", py.get_type::<BudgetError>())?;
    m.add("HypothesisError", py.get_type::<HypothesisError>())?;
    Ok(())
}
