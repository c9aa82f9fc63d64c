//! Python bindings: `import imc_dse_py`.
//!
//! Networks and hardware configs are wrapped as classes; everything else takes
//! and returns plain Python values (dicts, lists, floats). Policies are given
//! either as `"uniform:<bits>"`, a policy JSON string, or a list of
//! `(w_bits, a_bits)` pairs.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use imc_dse::accoracle::ProxyOracle;
use imc_dse::cli::{replicate_design, Report, Solver};
use imc_dse::hwmodel::{self, network_cost};
use imc_dse::mpsearch::{self, SearchConfig};
use imc_dse::netgraph::{self, BENCHMARK_NAMES};
use imc_dse::replicate::{self, Objective, ReplicationInstance};
use imc_dse::{LayerBits, QuantPolicy};

fn err(e: imc_dse::Error) -> PyErr {
    match e.exit_code() {
        5 | 6 => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.into_pyobject(py)?.into_any(),
            (None, Some(i)) => i.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for x in items {
                list.append(to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, x) in map {
                dict.set_item(k, to_py(py, x)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &value)
}

fn parse_objective(s: &str) -> PyResult<Objective> {
    s.parse().map_err(PyValueError::new_err)
}

/// Workload: ordered weight layers.
#[pyclass(name = "Network", module = "imc_dse_py", frozen)]
pub struct PyNetwork {
    inner: netgraph::NetworkGraph,
}

#[pymethods]
impl PyNetwork {
    /// One of `Network.benchmarks()`.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        netgraph::builtin_benchmark(name).map(|inner| Self { inner }).map_err(|e| err(e.into()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        netgraph::parse_network(text).map(|inner| Self { inner }).map_err(|e| err(e.into()))
    }

    #[staticmethod]
    fn benchmarks() -> Vec<&'static str> {
        BENCHMARK_NAMES.to_vec()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn layer_names(&self) -> Vec<String> {
        self.inner.layers.iter().map(|l| l.name.clone()).collect()
    }

    /// `(rows, cols, num_vectors)` of each layer's lowered matrix.
    fn lowered(&self) -> Vec<(u64, u64, u64)> {
        self.inner.lowered().iter().map(|m| (m.rows, m.cols, m.num_vectors)).collect()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Network({:?}, {} layers)", self.inner.name, self.inner.len())
    }
}

/// Accelerator parameters. `HwConfig()` is the builtin system; `HwConfig(toml)`
/// overrides any subset of fields.
#[pyclass(name = "HwConfig", module = "imc_dse_py", frozen)]
pub struct PyHwConfig {
    inner: hwmodel::HwConfig,
}

#[pymethods]
impl PyHwConfig {
    #[new]
    #[pyo3(signature = (toml = None))]
    fn new(toml: Option<&str>) -> PyResult<Self> {
        let inner = match toml {
            None => hwmodel::HwConfig::default(),
            Some(t) => hwmodel::HwConfig::from_toml_str(t).map_err(|e| err(e.into()))?,
        };
        Ok(Self { inner })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    #[getter]
    fn xbar_size(&self) -> u32 {
        self.inner.xbar_size
    }

    #[getter]
    fn n_tiles_total(&self) -> u64 {
        self.inner.n_tiles_total
    }

    #[getter]
    fn clock_hz(&self) -> f64 {
        self.inner.clock_hz
    }
}

#[derive(FromPyObject)]
enum PolicyArg {
    Text(String),
    Pairs(Vec<(u32, u32)>),
}

fn policy_of(arg: PolicyArg, net: &netgraph::NetworkGraph) -> PyResult<QuantPolicy> {
    let policy = match arg {
        PolicyArg::Text(t) => QuantPolicy::parse(&t, net).map_err(err)?,
        PolicyArg::Pairs(p) => QuantPolicy { bits: p.into_iter().map(|(w, a)| LayerBits::new(w, a)).collect() },
    };
    policy.validate(net, 1, 32).map_err(err)?;
    Ok(policy)
}

fn hw_of(hw: Option<&PyHwConfig>) -> hwmodel::HwConfig {
    hw.map(|h| h.inner.clone()).unwrap_or_default()
}

/// Per-layer and total cost of a design. `replication` defaults to one copy
/// per layer. Returns the report as a dict with `rows`, `total`, `summary`.
#[pyfunction]
#[pyo3(signature = (net, policy = PolicyArg::Text("uniform:8".into()), hw = None, replication = None))]
fn estimate<'py>(
    py: Python<'py>,
    net: &PyNetwork,
    policy: PolicyArg,
    hw: Option<&PyHwConfig>,
    replication: Option<Vec<u64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = hw_of(hw);
    let policy = policy_of(policy, &net.inner)?;
    let plan = replication.map(|r| replicate::ReplicationPlan { r, objective_value: 0.0, tiles_used: 0 });
    let cost = network_cost(&net.inner, &policy, plan.as_ref(), &cfg).map_err(|e| err(e.into()))?;
    serialize(py, &Report::new(&net.inner, &policy, &cost, &cfg))
}

/// Replicates a design under `budget_ratio` times its own tile count.
#[pyfunction]
#[pyo3(signature = (net, policy = PolicyArg::Text("uniform:8".into()), budget_ratio = 1.0, objective = "latency", hw = None))]
fn replicate_network<'py>(
    py: Python<'py>,
    net: &PyNetwork,
    policy: PolicyArg,
    budget_ratio: f64,
    objective: &str,
    hw: Option<&PyHwConfig>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = hw_of(hw);
    let policy = policy_of(policy, &net.inner)?;
    let (_, report) =
        replicate_design(&net.inner, &policy, &cfg, parse_objective(objective)?, budget_ratio, Solver::Exact)
            .map_err(err)?;
    serialize(py, &report)
}

/// Solves a bare replication instance. `solver` is `exact`, `milp` or `brute`.
#[pyfunction]
#[pyo3(signature = (c, s, n_tiles, objective = "latency", solver = "exact"))]
fn optimize_replication<'py>(
    py: Python<'py>,
    c: Vec<f64>,
    s: Vec<u64>,
    n_tiles: u64,
    objective: &str,
    solver: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let obj = parse_objective(objective)?;
    let inst = ReplicationInstance::new(c, s, n_tiles).map_err(|e| err(e.into()))?;
    let plan = match solver {
        "exact" => replicate::optimize(&inst, obj),
        "milp" => replicate::optimize_milp(&inst, obj),
        "brute" => replicate::brute_force(&inst, obj),
        other => return Err(PyValueError::new_err(format!("unknown solver `{other}`"))),
    }
    .map_err(|e| err(e.into()))?;
    serialize(py, &plan)
}

/// Synthetic proxy accuracy of a policy.
#[pyfunction]
#[pyo3(signature = (net, policy))]
fn proxy_accuracy(net: &PyNetwork, policy: PolicyArg) -> PyResult<f64> {
    let policy = policy_of(policy, &net.inner)?;
    Ok(ProxyOracle::new(net.inner.len()).accuracy(&policy))
}

/// Runs the mixed-precision search with the proxy oracle. `config` is search
/// TOML; the keyword arguments override it. Returns the trace as a dict.
#[pyfunction]
#[pyo3(signature = (net, episodes = None, seed = None, objective = None, config = None, hw = None))]
fn search<'py>(
    py: Python<'py>,
    net: &PyNetwork,
    episodes: Option<usize>,
    seed: Option<u64>,
    objective: Option<&str>,
    config: Option<&str>,
    hw: Option<&PyHwConfig>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut scfg = match config {
        None => SearchConfig::default(),
        Some(t) => SearchConfig::from_toml_str(t).map_err(err)?,
    };
    if let Some(e) = episodes {
        scfg.episodes = e;
    }
    if let Some(s) = seed {
        scfg.seed = s;
    }
    if let Some(o) = objective {
        scfg.objective = parse_objective(o)?;
    }
    let cfg = hw_of(hw);
    let graph = net.inner.clone();
    let trace = py
        .detach(move || mpsearch::run_search(&graph, &cfg, &scfg, &mut ProxyOracle::new(graph.len())))
        .map_err(err)?;
    serialize(py, &trace)
}

#[pymodule]
fn imc_dse_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyHwConfig>()?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(replicate_network, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_replication, m)?)?;
    m.add_function(wrap_pyfunction!(proxy_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    Ok(())
}
