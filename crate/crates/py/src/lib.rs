//! Python bindings for `cellmatch`.

use cellmatch::geometry::{self, CellGeometry, Point};
use cellmatch::matching::{self, Matching};
use cellmatch::preferences::{GameConfig, Market};
use cellmatch::scenario;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: cellmatch::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Scenario configuration; keyword arguments override the defaults.
#[pyclass(name = "ScenarioConfig", from_py_object)]
#[derive(Clone)]
pub struct PyScenarioConfig {
    inner: cellmatch::ScenarioConfig,
}

#[pymethods]
impl PyScenarioConfig {
    #[new]
    #[pyo3(signature = (n_users=60, n_picos=20, seed=0, quota=4, macro_radius=1000.0, hf_threshold=0.05, sinr_floor=true))]
    fn new(
        n_users: usize,
        n_picos: usize,
        seed: u64,
        quota: usize,
        macro_radius: f64,
        hf_threshold: f64,
        sinr_floor: bool,
    ) -> PyResult<Self> {
        let mut inner = cellmatch::ScenarioConfig {
            n_users,
            n_picos,
            seed,
            quota,
            macro_radius,
            hf_threshold,
            ..Default::default()
        };
        inner.radio.sinr_floor = sinr_floor;
        inner.validate().map_err(err)?;
        Ok(PyScenarioConfig { inner })
    }

    /// Builds a config from a JSON object with the library's field names.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: cellmatch::ScenarioConfig =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(err)?;
        Ok(PyScenarioConfig { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("config serializes")
    }

    #[getter]
    fn n_users(&self) -> usize {
        self.inner.n_users
    }

    #[getter]
    fn n_picos(&self) -> usize {
        self.inner.n_picos
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }
}

#[pyclass(name = "Scenario", from_py_object)]
#[derive(Clone)]
pub struct PyScenario {
    inner: cellmatch::Scenario,
}

#[pymethods]
impl PyScenario {
    #[getter]
    fn n_users(&self) -> usize {
        self.inner.users.len()
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.inner.cells.len()
    }

    fn to_fixture(&self) -> PyResult<String> {
        scenario::to_fixture(&self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(n_users={}, n_cells={})",
            self.inner.users.len(),
            self.inner.cells.len()
        )
    }
}

#[pyclass(name = "SolveReport", skip_from_py_object)]
pub struct PySolveReport {
    inner: cellmatch::SolveReport,
}

#[pymethods]
impl PySolveReport {
    /// Serving picocell per user, `None` for the macro cell.
    #[getter]
    fn assignment(&self) -> Vec<Option<usize>> {
        self.inner.matching.assignment().to_vec()
    }

    #[getter]
    fn outer_iterations(&self) -> usize {
        self.inner.outer_iterations
    }

    #[getter]
    fn proposals(&self) -> usize {
        self.inner.proposals
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn cycle_detected(&self) -> bool {
        self.inner.cycle_detected
    }

    #[getter]
    fn stable(&self) -> bool {
        self.inner.stable
    }

    fn to_json(&self) -> String {
        self.inner.to_record_line()
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveReport(converged={}, stable={}, outer_iterations={})",
            self.inner.converged, self.inner.stable, self.inner.outer_iterations
        )
    }
}

fn game(require_coverage: bool, max_outer: usize) -> PyResult<GameConfig> {
    let g = GameConfig {
        require_coverage,
        max_outer,
        ..Default::default()
    };
    g.validate().map_err(err)?;
    Ok(g)
}

#[pyfunction]
fn generate(config: &PyScenarioConfig) -> PyResult<PyScenario> {
    Ok(PyScenario {
        inner: scenario::generate(&config.inner).map_err(err)?,
    })
}

/// Parses a TOML fixture.
#[pyfunction]
fn load_fixture(text: &str) -> PyResult<PyScenario> {
    Ok(PyScenario {
        inner: scenario::load_fixture(text).map_err(err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (scenario, require_coverage=true, max_outer=100))]
fn solve(
    scenario: &PyScenario,
    require_coverage: bool,
    max_outer: usize,
) -> PyResult<PySolveReport> {
    let g = game(require_coverage, max_outer)?;
    Ok(PySolveReport {
        inner: matching::solve(&scenario.inner, &g).map_err(err)?,
    })
}

/// Max-SINR association; returns the serving cell per user.
#[pyfunction]
#[pyo3(signature = (scenario, require_coverage=true, enforce_quota=true))]
fn max_sinr(
    scenario: &PyScenario,
    require_coverage: bool,
    enforce_quota: bool,
) -> PyResult<Vec<Option<usize>>> {
    let g = game(require_coverage, 100)?;
    let market = Market::new(&scenario.inner, &g).map_err(err)?;
    Ok(matching::max_sinr_matching(&market, enforce_quota)
        .assignment()
        .to_vec())
}

/// Returns `(stable, [(user, cell, evicted), ...])` for an assignment.
#[pyfunction]
#[pyo3(signature = (scenario, assignment, require_coverage=true))]
#[allow(clippy::type_complexity)]
fn verify_stability(
    scenario: &PyScenario,
    assignment: Vec<Option<usize>>,
    require_coverage: bool,
) -> PyResult<(bool, Vec<(usize, usize, Option<usize>)>)> {
    let g = game(require_coverage, 100)?;
    let market = Market::new(&scenario.inner, &g).map_err(err)?;
    let mu = Matching::from_assignment(&assignment, market.n_cells()).map_err(err)?;
    mu.audit(market.quotas()).map_err(err)?;
    let report = matching::verify_stability(&market, &mu);
    Ok((
        report.stable,
        report
            .blocking
            .iter()
            .map(|b| (b.user, b.cell, b.evicted))
            .collect(),
    ))
}

fn cell(radius: f64, hf_radius: f64) -> PyResult<CellGeometry> {
    CellGeometry::new(Point::ORIGIN, radius, hf_radius).map_err(err)
}

/// Exact handover-failure probability `(2/pi) asin(r/R)`.
#[pyfunction]
fn hf_probability(radius: f64, hf_radius: f64) -> PyResult<f64> {
    geometry::hf_probability(&cell(radius, hf_radius)?).map_err(err)
}

#[pyfunction]
fn chord_length(radius: f64, theta: f64) -> PyResult<f64> {
    geometry::chord_length(&cell(radius, radius * 0.5)?, theta).map_err(err)
}

#[pyfunction]
fn qoe(t: f64, tau: f64) -> f64 {
    cellmatch::context::qoe(t, tau)
}

#[pymodule]
fn cellmatch_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenarioConfig>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PySolveReport>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(load_fixture, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(max_sinr, m)?)?;
    m.add_function(wrap_pyfunction!(verify_stability, m)?)?;
    m.add_function(wrap_pyfunction!(hf_probability, m)?)?;
    m.add_function(wrap_pyfunction!(chord_length, m)?)?;
    m.add_function(wrap_pyfunction!(qoe, m)?)?;
    Ok(())
}
