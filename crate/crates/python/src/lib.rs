use std::collections::BTreeMap;
use std::time::Duration;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyTypeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyInt, PyString};

use dpnalign_core::align::{self, AlignOptions};
use dpnalign_core::cluster::{cluster_log, extract_atoms};
use dpnalign_core::cost::{alignment_cost, PenaltyFunctions};
use dpnalign_core::encode::{EncodeOptions, Optimization};
use dpnalign_core::fixtures;
use dpnalign_core::io::{parse_pnml, parse_value, parse_xes, write_pnml, write_xes, PnmlOptions};
use dpnalign_core::log::{dedupe, Event, EventLog, LogTrace};
use dpnalign_core::model::{self as m, LabelPolicy, Sort};
use dpnalign_core::oracle::{brute_force_optimal, FiniteDomains};
use dpnalign_core::pipeline::{check_log, PipelineOptions};
use dpnalign_core::solver::SolverConfig;

create_exception!(dpnalign, DpnAlignError, PyException);

fn fail(e: impl std::fmt::Display) -> PyErr {
    DpnAlignError::new_err(e.to_string())
}

fn profile(name: &str) -> PyResult<PenaltyFunctions> {
    match name {
        "standard" => Ok(PenaltyFunctions::Standard),
        "levenshtein" => Ok(PenaltyFunctions::Levenshtein),
        other => Err(PyValueError::new_err(format!("unknown cost profile `{other}`"))),
    }
}

fn to_value(obj: &Bound<'_, PyAny>) -> PyResult<m::Value> {
    if obj.is_instance_of::<PyBool>() {
        return Ok(m::Value::Bool(obj.extract()?));
    }
    if obj.is_instance_of::<PyInt>() {
        let text: String = obj.str()?.extract()?;
        return parse_value(Sort::Int, &text).ok_or_else(|| PyValueError::new_err(format!("bad integer {text}")));
    }
    if obj.is_instance_of::<PyFloat>() {
        let text: String = obj.repr()?.extract()?;
        return parse_value(Sort::Rat, &text).ok_or_else(|| PyValueError::new_err(format!("non-finite float {text}")));
    }
    if obj.is_instance_of::<PyString>() {
        return Ok(m::Value::str(&obj.extract::<String>()?));
    }
    // fractions.Fraction and anything else with an exact n/d form
    if let (Ok(n), Ok(d)) = (obj.getattr("numerator"), obj.getattr("denominator")) {
        let text = format!("{}/{}", n.str()?, d.str()?);
        if let Some(v) = parse_value(Sort::Rat, &text) {
            return Ok(v);
        }
    }
    Err(PyTypeError::new_err(format!("unsupported value type {}", obj.get_type().name()?)))
}

fn from_value<'py>(py: Python<'py>, v: &m::Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        m::Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        m::Value::Int(k) => py.import("builtins")?.getattr("int")?.call1((k.to_string(),))?,
        m::Value::Rat(r) => py.import("fractions")?.getattr("Fraction")?.call1((r.to_string(),))?,
        m::Value::Str(s) => PyString::new(py, s).into_any(),
    })
}

/// A data Petri net.
#[pyclass(name = "Dpn", module = "dpnalign", frozen)]
struct PyDpn {
    inner: m::Dpn,
}

#[pymethods]
impl PyDpn {
    /// Parses PNML text.
    #[staticmethod]
    #[pyo3(signature = (text, allow_silent_duplicates = false))]
    fn from_pnml(text: &str, allow_silent_duplicates: bool) -> PyResult<Self> {
        let policy = if allow_silent_duplicates { LabelPolicy::SilentDuplicates } else { LabelPolicy::Strict };
        let parsed = parse_pnml(text, &PnmlOptions { policy }).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyDpn { inner: parsed.value })
    }

    #[staticmethod]
    #[pyo3(signature = (path, allow_silent_duplicates = false))]
    fn load(path: std::path::PathBuf, allow_silent_duplicates: bool) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
        Self::from_pnml(&text, allow_silent_duplicates)
    }

    fn to_pnml(&self) -> String {
        write_pnml(&self.inner)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn places(&self) -> Vec<String> {
        self.inner.places.iter().map(|p| p.id.clone()).collect()
    }

    /// `(id, label)` pairs; silent transitions have label `None`.
    #[getter]
    fn transitions(&self) -> Vec<(String, Option<String>)> {
        self.inner
            .transitions
            .iter()
            .map(|t| (t.id.clone(), (!t.label.is_silent()).then(|| t.label.to_string())))
            .collect()
    }

    /// Variable name to sort name.
    #[getter]
    fn variables(&self) -> BTreeMap<String, String> {
        self.inner.variables.iter().map(|v| (v.name.clone(), v.sort.name().to_string())).collect()
    }

    /// Constant-comparison atoms per variable; `None` for unrestricted variables.
    fn atoms(&self) -> BTreeMap<String, Option<Vec<String>>> {
        let atoms = extract_atoms(&self.inner);
        self.inner
            .variables
            .iter()
            .map(|v| (v.name.clone(), atoms.atoms(&v.name).map(|s| s.iter().map(|a| a.to_string()).collect())))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dpn({:?}, places={}, transitions={}, variables={})",
            self.inner.name,
            self.inner.places.len(),
            self.inner.transitions.len(),
            self.inner.variables.len()
        )
    }
}

/// A log trace: an id and a list of `(activity, {var: value})` events.
#[pyclass(name = "Trace", module = "dpnalign", frozen)]
struct PyTrace {
    inner: LogTrace,
}

#[pymethods]
impl PyTrace {
    #[new]
    fn new(id: &str, events: Vec<(String, Option<Bound<'_, PyDict>>)>) -> PyResult<Self> {
        let mut out = Vec::with_capacity(events.len());
        for (activity, data) in events {
            let mut assignment = Vec::new();
            if let Some(d) = data {
                for (k, v) in d.iter() {
                    assignment.push((k.extract::<String>()?, to_value(&v)?));
                }
            }
            out.push(Event::new(&activity, assignment));
        }
        Ok(PyTrace { inner: LogTrace::new(id, out) })
    }

    #[getter]
    fn id(&self) -> &str {
        &self.inner.id
    }

    #[getter]
    fn events<'py>(&self, py: Python<'py>) -> PyResult<Vec<(String, Bound<'py, PyDict>)>> {
        self.inner
            .events
            .iter()
            .map(|e| {
                let d = PyDict::new(py);
                for (k, v) in &e.assignment {
                    d.set_item(k, from_value(py, v)?)?;
                }
                Ok((e.activity.clone(), d))
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        let events: Vec<String> = self.inner.events.iter().map(align::format_event).collect();
        format!("Trace({:?}, [{}])", self.inner.id, events.join("; "))
    }
}

/// An alignment as `(log, model, kind)` rows.
#[pyclass(name = "Alignment", module = "dpnalign", frozen)]
struct PyAlignment {
    inner: dpnalign_core::cost::Alignment,
    dpn: m::Dpn,
}

#[pymethods]
impl PyAlignment {
    #[getter]
    fn moves(&self) -> Vec<(Option<String>, Option<String>, String)> {
        self.inner
            .moves
            .iter()
            .map(|mv| {
                (
                    mv.event().map(align::format_event),
                    mv.firing().map(|f| align::format_firing(&self.dpn, f)),
                    mv.kind().to_string(),
                )
            })
            .collect()
    }

    /// Cost under a profile; `None` if infinite.
    #[pyo3(signature = (cost = "standard"))]
    fn cost(&self, cost: &str) -> PyResult<Option<u64>> {
        Ok(alignment_cost(&self.dpn, &self.inner, profile(cost)?).finite())
    }

    fn render(&self) -> String {
        align::render(&self.dpn, &self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.moves.len()
    }
}

#[pyclass(name = "Result", module = "dpnalign", frozen, get_all)]
struct PyResult_ {
    trace_id: String,
    /// Optimal cost, or an upper bound when `timed_out`.
    cost: Option<u64>,
    timed_out: bool,
    bound: usize,
    alignment: Option<Py<PyAlignment>>,
    encode_seconds: f64,
    solve_seconds: f64,
}

#[pymethods]
impl PyResult_ {
    fn __repr__(&self) -> String {
        format!("Result({:?}, cost={:?}, timed_out={}, bound={})", self.trace_id, self.cost, self.timed_out, self.bound)
    }
}

fn align_options(solver: &str, timeout: f64, bound: Option<usize>, disable: Vec<String>) -> PyResult<AlignOptions> {
    let mut encode = EncodeOptions::default();
    for name in disable {
        let o: Optimization = name.parse().map_err(PyValueError::new_err)?;
        encode = encode.without(o);
    }
    let timeout = Duration::try_from_secs_f64(timeout).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(AlignOptions { encode, solver: SolverConfig::new(solver).with_timeout(timeout), bound, ..AlignOptions::default() })
}

fn parse_log(dpn: &PyDpn, text: &str) -> PyResult<Vec<PyTrace>> {
    let log = parse_xes(text, &dpn.inner).map_err(|e| PyValueError::new_err(e.to_string()))?.value;
    Ok(log.traces.into_iter().map(|t| PyTrace { inner: t }).collect())
}

/// Parses XES text against the variables of `dpn`.
#[pyfunction]
fn read_xes(dpn: &PyDpn, text: &str) -> PyResult<Vec<PyTrace>> {
    parse_log(dpn, text)
}

#[pyfunction]
fn load_xes(dpn: &PyDpn, path: std::path::PathBuf) -> PyResult<Vec<PyTrace>> {
    let text = std::fs::read_to_string(&path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    parse_log(dpn, &text)
}

#[pyfunction]
fn to_xes(traces: Vec<PyRef<'_, PyTrace>>) -> String {
    write_xes(&EventLog::new(traces.iter().map(|t| t.inner.clone()).collect()))
}

/// Optimal alignment of one trace.
#[pyfunction]
#[pyo3(signature = (dpn, trace, cost = "standard", solver = "z3", timeout = 600.0, bound = None, disable = vec![]))]
#[allow(clippy::too_many_arguments)]
fn conformance(
    py: Python<'_>,
    dpn: &PyDpn,
    trace: &PyTrace,
    cost: &str,
    solver: &str,
    timeout: f64,
    bound: Option<usize>,
    disable: Vec<String>,
) -> PyResult<PyResult_> {
    let pf = profile(cost)?;
    let opts = align_options(solver, timeout, bound, disable)?;
    let (net, t) = (&dpn.inner, &trace.inner);
    let r = py.detach(|| align::conformance(net, t, pf, &opts)).map_err(fail)?;
    let alignment = r.alignment.map(|a| Py::new(py, PyAlignment { inner: a, dpn: dpn.inner.clone() })).transpose()?;
    Ok(PyResult_ {
        trace_id: r.trace_id,
        cost: r.cost,
        timed_out: r.timed_out,
        bound: r.bound,
        alignment,
        encode_seconds: r.timings.encode.as_secs_f64(),
        solve_seconds: r.timings.solve.as_secs_f64(),
    })
}

/// Groups trace ids into clusters of equal optimal cost.
#[pyfunction]
fn cluster(dpn: &PyDpn, traces: Vec<PyRef<'_, PyTrace>>) -> Vec<Vec<String>> {
    let log = EventLog::new(traces.iter().map(|t| t.inner.clone()).collect());
    let unique = dedupe(&log);
    let clustering = cluster_log(&unique, &extract_atoms(&dpn.inner));
    clustering.clusters.iter().map(|c| c.members.iter().flat_map(|&i| unique[i].members.iter().cloned()).collect()).collect()
}

/// Conformance of a whole log. Returns one dict per unique trace.
#[pyfunction]
#[pyo3(signature = (dpn, traces, cost = "standard", solver = "z3", timeout = 600.0, clustering = true, jobs = 0))]
#[allow(clippy::too_many_arguments)]
fn check<'py>(
    py: Python<'py>,
    dpn: &PyDpn,
    traces: Vec<PyRef<'_, PyTrace>>,
    cost: &str,
    solver: &str,
    timeout: f64,
    clustering: bool,
    jobs: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let opts = PipelineOptions {
        align: align_options(solver, timeout, None, vec![])?,
        cost: profile(cost)?,
        cluster: clustering,
        jobs,
        verify_transfer: false,
    };
    let log = EventLog::new(traces.iter().map(|t| t.inner.clone()).collect());
    let net = &dpn.inner;
    let out = py.detach(|| check_log(net, &log, &opts, Duration::ZERO)).map_err(fail)?;
    out.rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("trace_id", &r.trace_id)?;
            d.set_item("members", r.members.clone())?;
            d.set_item("cluster", r.cluster)?;
            d.set_item("cost", if r.timed_out { None } else { r.cost })?;
            d.set_item("timed_out", r.timed_out)?;
            d.set_item("transferred", r.transferred)?;
            Ok(d)
        })
        .collect()
}

/// Exhaustive optimum over runs of at most `max_len` steps with writes drawn
/// from the finite `domains`.
#[pyfunction]
#[pyo3(signature = (dpn, trace, domains, max_len = 6, cost = "standard"))]
fn brute_force(
    py: Python<'_>,
    dpn: &PyDpn,
    trace: &PyTrace,
    domains: BTreeMap<String, Vec<Bound<'_, PyAny>>>,
    max_len: usize,
    cost: &str,
) -> PyResult<Option<u64>> {
    let pf = profile(cost)?;
    let mut d = FiniteDomains::new();
    for (var, values) in domains {
        let vals = values.iter().map(to_value).collect::<PyResult<Vec<_>>>()?;
        d = d.with(&var, vals);
    }
    let (net, t) = (&dpn.inner, &trace.inner);
    let c = py.detach(|| brute_force_optimal(net, t, pf, &d, max_len)).map_err(fail)?;
    Ok(c.finite())
}

/// The four-place example net with activities `a`, `b`, `d`.
#[pyfunction]
fn running_example() -> PyDpn {
    PyDpn { inner: fixtures::running_example() }
}

#[pymodule]
pub fn dpnalign(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DpnAlignError", m.py().get_type::<DpnAlignError>())?;
    m.add_class::<PyDpn>()?;
    m.add_class::<PyTrace>()?;
    m.add_class::<PyAlignment>()?;
    m.add_class::<PyResult_>()?;
    m.add_function(wrap_pyfunction!(read_xes, m)?)?;
    m.add_function(wrap_pyfunction!(load_xes, m)?)?;
    m.add_function(wrap_pyfunction!(to_xes, m)?)?;
    m.add_function(wrap_pyfunction!(conformance, m)?)?;
    m.add_function(wrap_pyfunction!(cluster, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force, m)?)?;
    m.add_function(wrap_pyfunction!(running_example, m)?)?;
    Ok(())
}
