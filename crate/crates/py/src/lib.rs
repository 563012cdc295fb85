//! Python bindings. Structured results come back as plain dicts and lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde_json::json;

use counterlab::counterprog::{pair_decode, pair_encode, proc_produce_p, CT2};
use counterlab::executor::{default_step_cap, explore};
use counterlab::families::{build_leq_2dcta, by_name};
use counterlab::icount::{complement_run_ic, layer_counts};
use counterlab::oracle::{brute_force_decide, check_equivalence, strings_up_to};
use counterlab::pdcomplement::{complement_decide_pd, complement_trace_pd};
use counterlab::random::{random_definite_machine, rng, Shape};
use counterlab::transforms::{
    eliminate_counters, pair_counters, reduce_counters, reduce_counters_pd, Modulus,
};
use counterlab::{
    normalize_slim, parse_machine, stack_state_complexity, state_complexity, to_json, RunBudget,
    Verdict,
};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    let loads = py.import("json")?.getattr("loads")?;
    Ok(loads.call1((v.to_string(),))?.unbind())
}

fn budget(m: &counterlab::MachineSpec, x: &str, cap: Option<u64>, config_cap: usize) -> RunBudget {
    let steps = cap.unwrap_or_else(|| default_step_cap(state_complexity(m), x.chars().count(), 3));
    RunBudget::new(steps.max(1), config_cap.max(1))
}

fn verdict_json(v: &Verdict) -> serde_json::Value {
    let mut out = json!({ "verdict": v.label() });
    match v {
        Verdict::Accept { witness } if !witness.is_empty() => {
            out["steps"] = json!(witness.len() - 1)
        }
        Verdict::Unknown { exhausted } => out["exhausted"] = json!(exhausted),
        _ => {}
    }
    out
}

/// A validated machine description.
#[pyclass(module = "pycounterlab", frozen)]
struct Machine {
    inner: counterlab::MachineSpec,
}

#[pymethods]
impl Machine {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        parse_machine(text)
            .map(|inner| Machine { inner })
            .map_err(value_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Self::from_json(&text)
    }

    /// A seeded random machine with a definite, non-constant verdict on
    /// every input up to `max_len`.
    #[staticmethod]
    #[pyo3(signature = (seed, states=3, counters=1, pushdown=false, max_len=3))]
    fn random(seed: u64, states: usize, counters: usize, pushdown: bool, max_len: usize) -> Self {
        let shape = if pushdown {
            Shape::pushdown(states, counters)
        } else {
            Shape::counter_machine(states, counters)
        };
        let b = RunBudget::new(500, 200_000);
        let inner =
            random_definite_machine(&shape, &mut rng(seed), &format!("random{seed}"), max_len, b).0;
        Machine { inner }
    }

    /// The deterministic one-counter solver for `w#w`.
    #[staticmethod]
    fn leq(n: usize) -> Self {
        Machine {
            inner: build_leq_2dcta(n),
        }
    }

    fn to_json(&self) -> String {
        to_json(&self.inner)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn states(&self) -> Vec<String> {
        self.inner.states.clone()
    }

    #[getter]
    fn counters(&self) -> usize {
        self.inner.counters
    }

    #[getter]
    fn alphabet(&self) -> Vec<char> {
        self.inner.alphabet.clone()
    }

    #[getter]
    fn has_stack(&self) -> bool {
        self.inner.has_stack()
    }

    /// `sc(M)`.
    fn sc(&self) -> usize {
        state_complexity(&self.inner)
    }

    /// `ssc(M)`, or `None` without a stack.
    fn ssc(&self) -> Option<u128> {
        stack_state_complexity(&self.inner).ok()
    }

    /// Executor verdict as a dict with key `verdict`.
    #[pyo3(signature = (x, cap=None, config_cap=1_000_000))]
    fn decide(
        &self,
        py: Python<'_>,
        x: &str,
        cap: Option<u64>,
        config_cap: usize,
    ) -> PyResult<Py<PyAny>> {
        let b = budget(&self.inner, x, cap, config_cap);
        let e = explore(&self.inner, x, b).map_err(value_err)?;
        let mut out = verdict_json(&e.verdict);
        out["configurations"] = json!(e.configurations);
        to_py(py, &out)
    }

    /// Verdict of the path-enumerating oracle, as `True`, `False` or `None`.
    #[pyo3(signature = (x, cap=None, config_cap=1_000_000))]
    fn oracle(&self, x: &str, cap: Option<u64>, config_cap: usize) -> PyResult<Option<bool>> {
        let b = budget(&self.inner, x, cap, config_cap);
        Ok(brute_force_decide(&self.inner, x, b)
            .map_err(value_err)?
            .as_bool())
    }

    /// Inductive-counting complement: verdict, layer counts and audit.
    #[pyo3(signature = (x, cap=None, config_cap=1_000_000))]
    fn complement(
        &self,
        py: Python<'_>,
        x: &str,
        cap: Option<u64>,
        config_cap: usize,
    ) -> PyResult<Py<PyAny>> {
        let b = budget(&self.inner, x, cap, config_cap);
        let r = complement_run_ic(&self.inner, x, b).map_err(value_err)?;
        let mut out = verdict_json(&r.verdict);
        out["layers"] = json!(r.layers.iter().map(|l| l.count).collect::<Vec<_>>());
        out["audit"] = json!(r.audit);
        to_py(py, &out)
    }

    /// `N̂_0..N̂_r`.
    #[pyo3(signature = (x, r, config_cap=1_000_000))]
    fn layer_counts(&self, x: &str, r: u64, config_cap: usize) -> PyResult<Vec<u64>> {
        let b = RunBudget::new(r.max(1), config_cap.max(1));
        Ok(layer_counts(&self.inner, x, r, b)
            .map_err(value_err)?
            .iter()
            .map(|l| l.count)
            .collect())
    }

    /// Pushdown complement. With `trace`, also runs the work-stack trace.
    #[pyo3(signature = (x, cap=None, config_cap=1_000_000, trace=false))]
    fn complement_pd(
        &self,
        py: Python<'_>,
        x: &str,
        cap: Option<u64>,
        config_cap: usize,
        trace: bool,
    ) -> PyResult<Py<PyAny>> {
        let b = budget(&self.inner, x, cap, config_cap);
        let v = complement_decide_pd(&self.inner, x, b).map_err(value_err)?;
        let mut out = verdict_json(&v);
        if trace {
            let t = complement_trace_pd(&self.inner, x, b, false).map_err(value_err)?;
            out["trace"] = json!({
                "verdict": t.verdict().label(),
                "t_x": t.t_x,
                "events": t.event_count,
                "max_height": t.max_height,
                "consecutive": t.consecutive,
            });
        }
        to_py(py, &out)
    }

    /// Fuses counters `a` and `b` (0-based) with modulus `p`.
    fn pair_counters(&self, a: usize, b: usize, p: u64) -> PyResult<Machine> {
        let inner = pair_counters(&self.inner, a, b, Modulus::Fixed(p)).map_err(value_err)?;
        Ok(Machine { inner })
    }

    fn reduce_counters(&self, p: u64) -> PyResult<Machine> {
        let inner = reduce_counters(&self.inner, p).map_err(value_err)?;
        Ok(Machine { inner })
    }

    fn reduce_counters_pd(&self, p: u64) -> PyResult<Machine> {
        let inner = reduce_counters_pd(&self.inner, p).map_err(value_err)?;
        Ok(Machine { inner })
    }

    fn eliminate_counters(&self, r: u32) -> Machine {
        Machine {
            inner: eliminate_counters(&self.inner, r),
        }
    }

    fn normalize_slim(&self) -> PyResult<Machine> {
        let inner = normalize_slim(&self.inner).map_err(value_err)?;
        Ok(Machine { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Machine(name={:?}, states={}, counters={}, stack={})",
            self.inner.name,
            self.inner.states.len(),
            self.inner.counters,
            self.inner.has_stack()
        )
    }
}

/// Compares two machines on every input up to `max_len` with the oracle.
#[pyfunction(name = "check_equivalence")]
#[pyo3(signature = (first, second, max_len, cap=100_000, config_cap=1_000_000))]
fn check_equivalence_py(
    py: Python<'_>,
    first: &Machine,
    second: &Machine,
    max_len: usize,
    cap: u64,
    config_cap: usize,
) -> PyResult<Py<PyAny>> {
    let inputs = strings_up_to(&first.inner.alphabet, max_len);
    let b = RunBudget::new(cap.max(1), config_cap.max(1));
    let report = check_equivalence(
        &first.inner,
        &second.inner,
        inputs.iter().map(String::as_str),
        b,
        b,
    )
    .map_err(value_err)?;
    to_py(py, &json!(report))
}

#[pyfunction(name = "pair_encode")]
fn pair_encode_py(i1: u64, i2: u64, p: u64) -> PyResult<u64> {
    pair_encode(i1, i2, p).map_err(value_err)
}

#[pyfunction(name = "pair_decode")]
fn pair_decode_py(v: u64, p: u64) -> PyResult<(u64, u64)> {
    pair_decode(v, p).map_err(value_err)
}

/// Runs procedure (a) and returns the value left in CT2.
#[pyfunction(name = "produce_p")]
fn produce_p_py(n: usize, x: &str, t: u32) -> PyResult<u64> {
    if t == 0 {
        return Err(PyValueError::new_err("t must be positive"));
    }
    Ok(proc_produce_p(n, x, t).map_err(value_err)?.0.get(CT2))
}

/// Membership of `x` in family `name` at index `n`: `"positive"`,
/// `"negative"` or `"outside"`.
#[pyfunction]
fn classify(name: &str, n: usize, x: &str) -> PyResult<String> {
    let f = by_name(name).map_err(value_err)?;
    Ok(json!(f.classify(n, x))
        .as_str()
        .unwrap_or_default()
        .to_string())
}

/// Promised instances of family `name` at index `n`.
#[pyfunction]
fn promised(name: &str, n: usize, max_len: usize) -> PyResult<Vec<String>> {
    Ok(by_name(name).map_err(value_err)?.promised(n, max_len))
}

#[pymodule]
fn pycounterlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Machine>()?;
    m.add_function(wrap_pyfunction!(check_equivalence_py, m)?)?;
    m.add_function(wrap_pyfunction!(pair_encode_py, m)?)?;
    m.add_function(wrap_pyfunction!(pair_decode_py, m)?)?;
    m.add_function(wrap_pyfunction!(produce_p_py, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(promised, m)?)?;
    Ok(())
}
