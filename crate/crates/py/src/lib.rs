use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use neckpinch::ricci_flow::{run_to_singularity, FlowConfig, FlowState};
use neckpinch::scenario::{self, Scenario, ScenarioKind};
use neckpinch::transport::{self, ConvexCost};
use neckpinch::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Parse(_) | Error::InvalidCost(_) | Error::InvalidProfile(_) | Error::InvalidMeasure(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn cost(spec: &str) -> PyResult<ConvexCost> {
    spec.parse().map_err(py_err)
}

/// Rotationally symmetric metric `phi^2 dx^2 + psi^2 g_can` on `[-1, 1]`.
#[pyclass(name = "RadialProfile", module = "neckpinch", from_py_object)]
#[derive(Clone)]
struct PyProfile(neckpinch::RadialProfile);

#[pymethods]
impl PyProfile {
    #[new]
    fn new(n: usize, x: Vec<f64>, phi: Vec<f64>, psi: Vec<f64>) -> PyResult<Self> {
        neckpinch::RadialProfile::new(n, x, phi, psi).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (n = 2, m = 400, radius = 1.0))]
    fn round_sphere(n: usize, m: usize, radius: f64) -> PyResult<Self> {
        neckpinch::RadialProfile::round_sphere(n, m, radius).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (n = 2, m = 400, amp = 1.0, depth = 0.92, width = 0.5))]
    fn dumbbell(n: usize, m: usize, amp: f64, depth: f64, width: f64) -> PyResult<Self> {
        scenario::dumbbell(n, m, amp, depth, width).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn from_tsv(text: &str) -> PyResult<Self> {
        neckpinch::RadialProfile::from_tsv(text).map(Self).map_err(py_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.0.x().to_vec()
    }

    #[getter]
    fn phi(&self) -> Vec<f64> {
        self.0.phi().to_vec()
    }

    #[getter]
    fn psi(&self) -> Vec<f64> {
        self.0.psi().to_vec()
    }

    fn diameter(&self) -> f64 {
        self.0.diameter()
    }

    fn neck_ratio(&self) -> Option<f64> {
        scenario::neck_ratio(&self.0)
    }

    fn to_tsv(&self) -> String {
        self.0.to_tsv()
    }

    /// Flows to the first singular time. Returns `(report, final_profile)`,
    /// the report as a dict.
    #[pyo3(signature = (t_max = 1.0, dt = None))]
    fn run_to_singularity(&self, t_max: f64, dt: Option<f64>) -> PyResult<(BTreeMap<String, String>, PyProfile)> {
        let mut cfg = FlowConfig { t_max, ..FlowConfig::default() };
        if let Some(dt) = dt {
            cfg.dt_init = dt;
        }
        let (rep, state) = match run_to_singularity(&FlowState::new(self.0.clone()), &cfg) {
            Ok(v) => v,
            Err(Error::NoSingularity { outcome, .. }) => *outcome,
            Err(e) => return Err(py_err(e)),
        };
        let mut d = BTreeMap::new();
        d.insert(
            "singular_time".to_string(),
            rep.singular_time.map_or("none".into(), |t| t.to_string()),
        );
        d.insert("steps".into(), rep.steps.to_string());
        d.insert("type_one_sup".into(), rep.type_one_sup.to_string());
        d.insert(
            "singular_set".into(),
            rep.singular_set.iter().map(|c| format!("{}..{}", c.start, c.end)).collect::<Vec<_>>().join(","),
        );
        Ok((d, PyProfile(state.profile)))
    }

    fn __repr__(&self) -> String {
        format!("RadialProfile(n={}, m={}, diameter={:.6})", self.0.n(), self.0.m(), self.0.diameter())
    }
}

/// Probability measure on the line as a piecewise-linear CDF.
#[pyclass(name = "Measure1D", module = "neckpinch", from_py_object)]
#[derive(Clone)]
struct PyMeasure(transport::Measure1D);

#[pymethods]
impl PyMeasure {
    #[new]
    fn new(knots: Vec<f64>, cdf: Vec<f64>) -> PyResult<Self> {
        transport::Measure1D::new(knots, cdf).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn empirical(points: Vec<f64>) -> PyResult<Self> {
        transport::Measure1D::empirical(&points).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn atoms(points: Vec<(f64, f64)>) -> PyResult<Self> {
        transport::Measure1D::atoms(&points).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn uniform(a: f64, b: f64) -> PyResult<Self> {
        transport::Measure1D::uniform(a, b).map(Self).map_err(py_err)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }

    fn quantile(&self, t: f64) -> f64 {
        self.0.quantile(t)
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn __repr__(&self) -> String {
        let (a, b) = self.0.support();
        format!("Measure1D(support=[{a}, {b}], knots={})", self.0.knots().len())
    }
}

/// Optimal cost for `h(|x - y|)`; `cost` is `linear`, `power:<p>` or `table:<path>`.
#[pyfunction]
#[pyo3(signature = (a, b, cost = "linear"))]
fn total_cost_1d(a: &PyMeasure, b: &PyMeasure, cost: &str) -> PyResult<f64> {
    Ok(transport::total_cost_1d(&a.0, &b.0, &self::cost(cost)?))
}

#[pyfunction]
fn w1(a: &PyMeasure, b: &PyMeasure) -> PyResult<f64> {
    transport::w1(&a.0, &b.0).map_err(py_err)
}

/// Brute-force minimum over matchings of two equal-size point sets.
#[pyfunction]
#[pyo3(signature = (a, b, cost = "linear"))]
fn discrete_oracle(a: Vec<f64>, b: Vec<f64>, cost: &str) -> PyResult<f64> {
    transport::discrete_oracle(&a, &b, &self::cost(cost)?).map(|v| v.exhaustive).map_err(py_err)
}

fn scenario_from(name: &str, options: Option<BTreeMap<String, String>>) -> PyResult<Scenario> {
    let mut s = Scenario::new(ScenarioKind::parse(name).map_err(py_err)?);
    for (k, v) in options.unwrap_or_default() {
        s.set(&k, &v).map_err(py_err)?;
    }
    Ok(s)
}

/// Runs a named scenario; options are config keys with string values.
/// Returns the summary as an ordered list of `(key, value)` pairs.
#[pyfunction]
#[pyo3(signature = (name, options = None))]
fn run_scenario(py: Python<'_>, name: &str, options: Option<BTreeMap<String, String>>) -> PyResult<Vec<(String, String)>> {
    let s = scenario_from(name, options)?;
    let outcome = py.detach(|| scenario::run(&s)).map_err(py_err)?;
    if let Some(dir) = &s.out {
        outcome.write(dir).map_err(py_err)?;
    }
    let doc = outcome.summary();
    Ok(doc.keys().map(|k| (k.to_string(), doc.get(k).unwrap_or_default().to_string())).collect())
}

/// `(ok, errors, warnings)` for a scenario's initial profile.
#[pyfunction]
#[pyo3(signature = (name, options = None))]
fn validate_scenario(name: &str, options: Option<BTreeMap<String, String>>) -> PyResult<(bool, Vec<String>, Vec<String>)> {
    let v = scenario::validate(&scenario_from(name, options)?);
    Ok((v.ok(), v.errors.clone(), v.warnings))
}

#[pymodule]
fn neckpinch_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProfile>()?;
    m.add_class::<PyMeasure>()?;
    m.add_function(wrap_pyfunction!(total_cost_1d, m)?)?;
    m.add_function(wrap_pyfunction!(w1, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(validate_scenario, m)?)?;
    Ok(())
}
