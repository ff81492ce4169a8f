//! Python bindings: `import semiflow`.
//!
//! Structured results (fits, reports, witnesses) are returned as plain dicts
//! mirroring their JSON form.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use sf::decay;
use sf::renewal::{self, RenewalOptions};
use sf::spectral::{self, DolgopyatOptions, ProbeBasket};
use sf::suspension::{self, SuspensionPoint};
use sf::transfer::ResolventOptions;
use sf::{catalogue, uni, Complex64, GridFunction, SuspensionObservable};

create_exception!(semiflow, SemiflowError, PyException, "Any failure raised by the library.");
create_exception!(semiflow, ConfigError, SemiflowError, "Invalid map, roof, configuration or argument.");
create_exception!(semiflow, NumericalError, SemiflowError, "Divergence, non-convergence or insufficient data.");
create_exception!(semiflow, NoContractionError, NumericalError, "The Dolgopyat probe hit its iteration cap.");
create_exception!(
    semiflow,
    InsufficientOscillationError,
    NumericalError,
    "The witness oscillation is too small for the frequency."
);

fn err(e: sf::Error) -> PyErr {
    let msg = e.to_string();
    match e {
        sf::Error::NoContraction { .. } => NoContractionError::new_err(msg),
        sf::Error::InsufficientOscillation(_) => InsufficientOscillationError::new_err(msg),
        e if e.is_config() => ConfigError::new_err(msg),
        _ => NumericalError::new_err(msg),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => {
            let items = a.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn to_dict<'py, T: serde::Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(x).map_err(|e| SemiflowError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// A map, roof and grid with the normalised potential and SRB measure.
#[pyclass(frozen, module = "semiflow")]
struct System {
    inner: sf::System,
}

impl System {
    fn observable(&self, name: &str, centered: bool) -> PyResult<SuspensionObservable> {
        let o = SuspensionObservable::parse(name, Arc::clone(self.inner.roof())).map_err(err)?;
        Ok(if centered { o.centered(&self.inner) } else { o })
    }

    fn pair(&self, e: &str, f: &str, centered: bool) -> PyResult<(SuspensionObservable, SuspensionObservable)> {
        Ok((self.observable(e, centered)?, self.observable(f, centered)?))
    }

    fn grid_function(&self, values: Vec<Complex64>) -> PyResult<GridFunction> {
        GridFunction::new(Arc::clone(self.inner.grid()), values).map_err(err)
    }
}

#[pymethods]
impl System {
    /// Builds a catalogue preset `<map>-<roof>` with `nodes` grid points per interval.
    #[new]
    #[pyo3(signature = (preset, nodes = 1025))]
    fn new(py: Python<'_>, preset: &str, nodes: usize) -> PyResult<System> {
        let inner = py.detach(|| sf::System::preset(preset, nodes)).map_err(err)?;
        Ok(System { inner })
    }

    /// Builds from a JSON experiment configuration string.
    #[staticmethod]
    fn from_config(py: Python<'_>, text: &str) -> PyResult<System> {
        let cfg = sf::ExperimentConfig::from_json(text).map_err(err)?;
        let inner = py.detach(|| cfg.system()).map_err(err)?;
        Ok(System { inner })
    }

    #[getter]
    fn eigenvalue(&self) -> f64 {
        self.inner.eigen().eigenvalue
    }

    #[getter]
    fn mean_roof(&self) -> f64 {
        self.inner.mean_roof()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn nodes_per_interval(&self) -> usize {
        self.inner.grid().m()
    }

    fn nodes(&self) -> Vec<f64> {
        self.inner.grid().nodes()
    }

    /// SRB density at the grid nodes.
    fn density(&self) -> Vec<f64> {
        self.inner.srb().density().values().iter().map(|v| v.re).collect()
    }

    /// `roof(x)`.
    fn roof(&self, x: f64) -> f64 {
        self.inner.roof().eval(x)
    }

    /// Integrates node values against the SRB measure.
    fn srb_integrate(&self, values: Vec<Complex64>) -> PyResult<Complex64> {
        Ok(self.inner.srb().integrate(&self.grid_function(values)?))
    }

    /// `L_s^n` applied to node values, with the normalised potential.
    #[pyo3(signature = (s, values, n = 1))]
    fn transfer(&self, py: Python<'_>, s: Complex64, values: Vec<Complex64>, n: usize) -> PyResult<Vec<Complex64>> {
        let f = self.grid_function(values)?;
        let op = self.inner.operator(s);
        Ok(py.detach(|| op.apply_n(&f, n)).into_values())
    }

    /// `(x, u)` after flowing for time `t`.
    fn flow(&self, x: f64, u: f64, t: f64) -> PyResult<(f64, f64)> {
        let (map, roof) = (self.inner.map(), self.inner.roof());
        let p = SuspensionPoint::new(x, u, map, roof).map_err(err)?;
        let q = suspension::flow(map, roof, p, t).map_err(err)?;
        Ok((q.x, q.u))
    }

    /// `rho_{E,F}(t)` by nested quadrature.
    #[pyo3(signature = (e, f, t, centered = true))]
    fn correlation(&self, py: Python<'_>, e: &str, f: &str, t: f64, centered: bool) -> PyResult<Complex64> {
        let (e, f) = self.pair(e, f, centered)?;
        py.detach(|| suspension::correlation(&self.inner, &e, &f, t)).map_err(err)
    }

    /// `(t, rho)` on `0, out_step, ..., >= t_max` by the renewal scheme.
    #[pyo3(signature = (e, f, t_max, centered = true, dt = 0.005, out_step = 0.05))]
    fn correlation_curve(
        &self,
        py: Python<'_>,
        e: &str,
        f: &str,
        t_max: f64,
        centered: bool,
        dt: f64,
        out_step: f64,
    ) -> PyResult<(Vec<f64>, Vec<Complex64>)> {
        let (e, f) = self.pair(e, f, centered)?;
        let opts = RenewalOptions { dt, out_step };
        let c = py
            .detach(|| renewal::correlation_curve(&self.inner, &e, &f, t_max, &opts))
            .map_err(err)?;
        Ok((c.t, c.rho))
    }

    /// `hat chi(s)` via the resolvent series.
    #[pyo3(signature = (e, f, s, centered = true))]
    fn laplace_chi_series(&self, py: Python<'_>, e: &str, f: &str, s: Complex64, centered: bool) -> PyResult<Complex64> {
        let (e, f) = self.pair(e, f, centered)?;
        let v = py
            .detach(|| suspension::laplace_chi_series(&self.inner, &e, &f, s, &ResolventOptions::default()))
            .map_err(err)?;
        Ok(v.value)
    }

    /// `hat chi(s)` for each `s` by integrating the renewal curve to `t_max`.
    #[pyo3(signature = (e, f, s_list, t_max, centered = true, dt = 0.005))]
    fn laplace_direct(
        &self,
        py: Python<'_>,
        e: &str,
        f: &str,
        s_list: Vec<Complex64>,
        t_max: f64,
        centered: bool,
        dt: f64,
    ) -> PyResult<Vec<Complex64>> {
        let (e, f) = self.pair(e, f, centered)?;
        let opts = RenewalOptions { dt, ..RenewalOptions::default() };
        let v = py
            .detach(|| suspension::laplace_direct(&self.inner, &e, &f, &s_list, t_max, &opts))
            .map_err(err)?;
        Ok(v.into_iter().map(|l| l.value).collect())
    }

    /// Lasota-Yorke constant over the standard probe basket.
    #[pyo3(signature = (b_list, n_list, seed = 0))]
    fn lasota_yorke_fit<'py>(&self, py: Python<'py>, b_list: Vec<f64>, n_list: Vec<usize>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let basket = ProbeBasket::standard(seed, self.inner.alpha());
        let fit = py
            .detach(|| spectral::lasota_yorke_fit(&self.inner, &b_list, &n_list, &basket))
            .map_err(err)?;
        to_dict(py, &fit)
    }

    /// Iterations `N(b)` for the `b`-norm to contract to `target`.
    #[pyo3(signature = (b, c3, seed = 0, target = 0.75, cap = 1000))]
    fn dolgopyat_probe(&self, py: Python<'_>, b: f64, c3: f64, seed: u64, target: f64, cap: usize) -> PyResult<usize> {
        let basket = ProbeBasket::standard(seed, self.inner.alpha());
        let mut opts = DolgopyatOptions::new(c3);
        opts.target = target;
        opts.cap = cap;
        let t = py
            .detach(|| spectral::dolgopyat_probe(&self.inner, b, &opts, &basket))
            .map_err(err)?;
        Ok(t.n)
    }

    /// Measures of the cancellation sets of `L_{ib}^n 1`.
    #[pyo3(signature = (b, n_iter, c3))]
    fn cancellation_set_measure<'py>(&self, py: Python<'py>, b: f64, n_iter: usize, c3: f64) -> PyResult<Bound<'py, PyAny>> {
        let one = |_: f64| Complex64::new(1.0, 0.0);
        let rep = py
            .detach(|| uni::cancellation_set_measure(&self.inner, b, one, n_iter, c3))
            .map_err(err)?;
        to_dict(py, &rep)
    }

    fn __repr__(&self) -> String {
        format!(
            "System(intervals={}, nodes_per_interval={}, mean_roof={:.6})",
            self.inner.map().len(),
            self.inner.grid().m(),
            self.inner.mean_roof()
        )
    }
}

/// Largest branch-pair oscillation at depth `n`.
#[pyfunction]
#[pyo3(signature = (preset, n, budget = uni::DEFAULT_BUDGET))]
fn find_uni_witness<'py>(py: Python<'py>, preset: &str, n: usize, budget: usize) -> PyResult<Bound<'py, PyAny>> {
    let (map, roof) = catalogue::build_preset(preset).map_err(err)?;
    let w = uni::find_uni_witness(&map, &roof, n, budget).map_err(err)?;
    to_dict(py, &w)
}

/// Cohomology verdict with its witness and residuals.
#[pyfunction]
#[pyo3(signature = (preset, max_depth = 6, threshold = None))]
fn cohomology_verdict<'py>(py: Python<'py>, preset: &str, max_depth: usize, threshold: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let (map, roof) = catalogue::build_preset(preset).map_err(err)?;
    let rep = py
        .detach(|| uni::cohomology_verdict(&map, &roof, max_depth, threshold))
        .map_err(err)?;
    to_dict(py, &rep)
}

/// Partition points for the depth-`n` witness at frequency `b`.
#[pyfunction]
#[pyo3(signature = (preset, b, n = 1))]
fn partition_points<'py>(py: Python<'py>, preset: &str, b: f64, n: usize) -> PyResult<Bound<'py, PyAny>> {
    let (map, roof) = catalogue::build_preset(preset).map_err(err)?;
    let w = uni::find_uni_witness(&map, &roof, n, uni::DEFAULT_BUDGET).map_err(err)?;
    let pp = uni::partition_points(&map, &roof, &w, b).map_err(err)?;
    to_dict(py, &pp)
}

/// Exponential, stretched and polynomial fits to a correlation curve.
#[pyfunction]
#[pyo3(signature = (ts, rhos, noise_floor = decay::DEFAULT_NOISE_FLOOR))]
fn fit_decay<'py>(py: Python<'py>, ts: Vec<f64>, rhos: Vec<Complex64>, noise_floor: f64) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &decay::fit_decay(&ts, &rhos, noise_floor).map_err(err)?)
}

/// Whether `|rho(t)| <= c exp(-delta sqrt t)` on the whole curve.
#[pyfunction]
fn envelope_check(ts: Vec<f64>, rhos: Vec<Complex64>, c: f64, delta: f64) -> bool {
    decay::envelope_check(&ts, &rhos, c, delta).holds
}

/// The contour integral bounding the inverse Laplace transform.
#[pyfunction]
#[pyo3(signature = (alpha, delta1, t, b_max = decay::DEFAULT_TRUNCATION))]
fn contour_integral(alpha: f64, delta1: f64, t: f64, b_max: f64) -> PyResult<f64> {
    Ok(decay::contour_integral(alpha, delta1, t, b_max).map_err(err)?.value)
}

#[pymodule]
fn semiflow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<System>()?;
    m.add_function(wrap_pyfunction!(find_uni_witness, m)?)?;
    m.add_function(wrap_pyfunction!(cohomology_verdict, m)?)?;
    m.add_function(wrap_pyfunction!(partition_points, m)?)?;
    m.add_function(wrap_pyfunction!(fit_decay, m)?)?;
    m.add_function(wrap_pyfunction!(envelope_check, m)?)?;
    m.add_function(wrap_pyfunction!(contour_integral, m)?)?;
    m.add("PRESETS", catalogue::PRESET_NAMES.to_vec())?;
    m.add("SemiflowError", py.get_type::<SemiflowError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    m.add("NoContractionError", py.get_type::<NoContractionError>())?;
    m.add("InsufficientOscillationError", py.get_type::<InsufficientOscillationError>())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_the_exception_hierarchy() {
        Python::initialize();
        Python::attach(|py| {
            let e = err(sf::Error::NoContraction { b: 1.0, target: 0.75, cap: 3 });
            assert!(e.is_instance_of::<NumericalError>(py));
            assert!(err(sf::Error::Config("x".into())).is_instance_of::<ConfigError>(py));
            assert!(err(sf::Error::InsufficientOscillation(0.1)).is_instance_of::<SemiflowError>(py));
        });
    }

    #[test]
    fn json_values_become_python_objects() {
        Python::initialize();
        Python::attach(|py| {
            let v = serde_json::json!({"a": [1, 2.5, null, true], "b": "x", "c": u64::MAX});
            let obj = to_py(py, &v).unwrap();
            let d = obj.cast::<PyDict>().unwrap();
            let a = d.get_item("a").unwrap().unwrap();
            assert_eq!(a.len().unwrap(), 4);
            assert_eq!(a.get_item(1).unwrap().extract::<f64>().unwrap(), 2.5);
            assert!(a.get_item(2).unwrap().is_none());
            assert_eq!(d.get_item("c").unwrap().unwrap().extract::<u64>().unwrap(), u64::MAX);
        });
    }
}
