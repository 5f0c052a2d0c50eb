//! Python bindings: a `Dataset` class plus the main analysis entry points.
//!
//! Result structs cross the boundary as plain dicts (via their JSON form),
//! so the Python side sees the same shapes the CLI writes to report files.
//! Error mapping: parameter and data problems raise `ValueError`,
//! numerical failures raise `RuntimeError`, filesystem problems raise
//! `OSError`.

use std::path::Path;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;

use tpace::io::{parse_dataset_csv, write_dataset_csv};
use tpace::{
    cox_fit, cox_timevarying_fit, fit_censoring_model, fit_event_model, logrank_test, run_tpace,
    simulate_brocade_like, Arm, CensoringKind, Criterion, Effect, ImputationModels, RunConfig,
    SearchConfig, TrialDataset,
};

fn to_py_err(e: tpace::Error) -> PyErr {
    use tpace::Error;
    match e {
        Error::Parameter(_) | Error::Data(_) => PyValueError::new_err(e.to_string()),
        Error::Numeric(_) => PyRuntimeError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
    }
}

fn json_to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    use serde_json::Value;
    match v {
        Value::Null => Ok(py.None()),
        Value::Bool(b) => b.into_py_any(py),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)
            } else if let Some(u) = n.as_u64() {
                u.into_py_any(py)
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py_any(py)
            }
        }
        Value::String(s) => s.into_py_any(py),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_py_any(py)
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, json_to_py(py, val)?)?;
            }
            dict.into_py_any(py)
        }
    }
}

fn as_py_dict<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(value)
        .map_err(|e| PyRuntimeError::new_err(format!("result serialization failed: {e}")))?;
    json_to_py(py, &v)
}

/// Subject-level two-arm dataset.
#[pyclass(frozen)]
struct Dataset {
    inner: TrialDataset,
}

#[pymethods]
impl Dataset {
    /// Loads a dataset CSV (schema: subject_id, arm, time_to_maintenance,
    /// time, event, cutoff_time).
    #[staticmethod]
    fn from_csv(path: &str) -> PyResult<Self> {
        let inner = parse_dataset_csv(Path::new(path)).map_err(to_py_err)?;
        Ok(Dataset { inner })
    }

    /// Generates the built-in synthetic trial preset under one seed.
    #[staticmethod]
    fn simulate_brocade_like(seed: u64) -> PyResult<Self> {
        let inner = simulate_brocade_like(seed).map_err(to_py_err)?;
        Ok(Dataset { inner })
    }

    fn to_csv(&self, path: &str) -> PyResult<()> {
        write_dataset_csv(&self.inner, Path::new(path)).map_err(to_py_err)
    }

    /// Subjects as a list of dicts; arm is "E" or "C" as in the CSV schema.
    fn records(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let list = PyList::empty(py);
        for s in &self.inner.subjects {
            let d = PyDict::new(py);
            d.set_item("id", &s.id)?;
            d.set_item("arm", if s.arm == Arm::Experimental { "E" } else { "C" })?;
            d.set_item("time", s.doublet.time)?;
            d.set_item("event", s.doublet.event)?;
            d.set_item("maintenance_onset", s.maintenance_onset)?;
            d.set_item("cutoff_time", s.cutoff_time)?;
            list.append(d)?;
        }
        list.into_py_any(py)
    }

    #[getter]
    fn n_experimental(&self) -> usize {
        self.inner.n_in_arm(Arm::Experimental)
    }

    #[getter]
    fn n_control(&self) -> usize {
        self.inner.n_in_arm(Arm::Control)
    }

    #[getter]
    fn n_events(&self) -> usize {
        self.inner.n_events()
    }

    fn __len__(&self) -> usize {
        self.inner.subjects.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset({} subjects, E: {}, C: {}, {} events)",
            self.inner.subjects.len(),
            self.inner.n_in_arm(Arm::Experimental),
            self.inner.n_in_arm(Arm::Control),
            self.inner.n_events()
        )
    }
}

/// Minimum detectable hazard ratio given an event count, the experimental
/// allocation fraction, and a two-sided alpha.
#[pyfunction]
#[pyo3(signature = (events, allocation, alpha = 0.05))]
fn mdd(events: usize, allocation: f64, alpha: f64) -> PyResult<f64> {
    tpace::mdd(events, allocation, alpha).map_err(to_py_err)
}

/// Re-times one observation: time spent after `onset` is scaled by
/// `lam`; time before it is untouched.
#[pyfunction]
fn retime(onset: f64, time: f64, lam: f64) -> f64 {
    tpace::retime(onset, time, lam)
}

/// Two-group log-rank test, as a dict.
#[pyfunction]
fn logrank(py: Python<'_>, dataset: &Dataset) -> PyResult<Py<PyAny>> {
    let r = logrank_test(&dataset.inner).map_err(to_py_err)?;
    as_py_dict(py, &r)
}

/// Overall arm hazard ratio (Cox fit), as a dict.
#[pyfunction]
fn cox(py: Python<'_>, dataset: &Dataset) -> PyResult<Py<PyAny>> {
    let r = cox_fit(&dataset.inner).map_err(to_py_err)?;
    as_py_dict(py, &r)
}

/// Phase-split arm hazard ratios, as a dict with `phase_a` and `phase_b`
/// keys; a phase that is not estimable is None.
#[pyfunction]
fn cox_by_phase(py: Python<'_>, dataset: &Dataset) -> PyResult<Py<PyAny>> {
    let r = cox_timevarying_fit(&dataset.inner).map_err(to_py_err)?;
    as_py_dict(py, &r)
}

/// Splits the overall benefit between phases from the Effect 1 tipping
/// points; returns (index_a, index_b).
#[pyfunction]
fn contribution_indices_effect1(lambda_b: f64, lambda_c: f64) -> PyResult<(f64, f64)> {
    let ix = tpace::contribution_indices_effect1(lambda_b, lambda_c).map_err(to_py_err)?;
    Ok((ix.index_a, ix.index_b))
}

/// Splits the overall benefit between phases from the Effect 2 tipping
/// points; returns (index_a, index_b).
#[pyfunction]
fn efficacy_indices_effect2(lambda_b: f64, lambda_c: f64) -> PyResult<(f64, f64)> {
    let ix = tpace::efficacy_indices_effect2(lambda_b, lambda_c).map_err(to_py_err)?;
    Ok((ix.index_a, ix.index_b))
}

/// Full tipping analysis; returns the report as a dict (same shape as the
/// CLI's JSON report file).
///
/// `effect` is 1 (re-time control) or 2 (re-time experimental); `criteria`
/// defaults to all of "a", "b", "c"; `censoring` ("cutoff" or
/// "parametric") applies to effect 1 only. A `seed` is required whenever
/// imputation is stochastic (effect 2, or effect 1 with parametric
/// censoring).
#[pyfunction]
#[pyo3(signature = (
    dataset, effect, criteria = None, censoring = "cutoff", replicates = 200,
    seed = None, lambda_min = None, lambda_max = None, lambda_step = None,
))]
#[allow(clippy::too_many_arguments)]
fn analyze(
    py: Python<'_>,
    dataset: &Dataset,
    effect: u8,
    criteria: Option<Vec<String>>,
    censoring: &str,
    replicates: usize,
    seed: Option<u64>,
    lambda_min: Option<f64>,
    lambda_max: Option<f64>,
    lambda_step: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let effect = match effect {
        1 => Effect::One,
        2 => Effect::Two,
        other => {
            return Err(PyValueError::new_err(format!(
                "effect must be 1 or 2, got {other}"
            )))
        }
    };
    let kind = match censoring {
        "cutoff" => CensoringKind::AdministrativeCutoff,
        "parametric" => CensoringKind::ParametricFit,
        other => {
            return Err(PyValueError::new_err(format!(
                "censoring must be \"cutoff\" or \"parametric\", got {other:?}"
            )))
        }
    };

    let mut parsed = Vec::new();
    for c in criteria.unwrap_or_else(|| vec!["a".into(), "b".into(), "c".into()]) {
        parsed.push(c.parse::<Criterion>().map_err(to_py_err)?);
    }

    let stochastic =
        effect == Effect::Two || (effect == Effect::One && kind == CensoringKind::ParametricFit);
    let master_seed = match (seed, stochastic) {
        (Some(s), _) => s,
        (None, false) => 0,
        (None, true) => {
            return Err(PyValueError::new_err(
                "seed is required when imputation is stochastic \
                 (effect 2, or effect 1 with parametric censoring)",
            ))
        }
    };

    let models = match effect {
        Effect::One => {
            ImputationModels::for_effect1(fit_censoring_model(&dataset.inner, kind).map_err(to_py_err)?)
        }
        Effect::Two => {
            ImputationModels::for_effect2(fit_event_model(&dataset.inner).map_err(to_py_err)?)
        }
    };

    let mut search = SearchConfig::default_for(effect);
    search.replicates = replicates;
    if let Some(v) = lambda_min {
        search.lambda_min = v;
    }
    if let Some(v) = lambda_max {
        search.lambda_max = v;
    }
    if let Some(v) = lambda_step {
        search.lambda_step = v;
    }
    let config = RunConfig {
        search,
        master_seed,
        criteria: parsed,
    };

    let report = run_tpace(&dataset.inner, effect, &models, &config).map_err(to_py_err)?;
    as_py_dict(py, &report)
}

#[pymodule]
fn tpace_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_function(wrap_pyfunction!(mdd, m)?)?;
    m.add_function(wrap_pyfunction!(retime, m)?)?;
    m.add_function(wrap_pyfunction!(logrank, m)?)?;
    m.add_function(wrap_pyfunction!(cox, m)?)?;
    m.add_function(wrap_pyfunction!(cox_by_phase, m)?)?;
    m.add_function(wrap_pyfunction!(contribution_indices_effect1, m)?)?;
    m.add_function(wrap_pyfunction!(efficacy_indices_effect2, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    Ok(())
}
