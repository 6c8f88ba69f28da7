use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use eeqkd::attacks::{AttackSpec, EEAttackSpec};
use eeqkd::channel::{self, ChannelSpec, NoiseFamily};
use eeqkd::metrics::{self, InfoResult};
use eeqkd::optimize::{self, ChannelOptions, EveSearch, EveTarget, GateSearch};
use eeqkd::protocol::{self, JointDistribution, RoundConfig};
use eeqkd::quantum::{self, ComplexMatrix, GateParams, StarGateSpec, C64};
use eeqkd::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) | Error::Unnormalized { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_family(name: &str) -> PyResult<NoiseFamily> {
    name.parse().map_err(to_py)
}

/// A unitary acting on a group of qubits (qubit 0 is the most significant bit).
#[pyclass(name = "Gate", module = "eeqkd_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGate {
    inner: ComplexMatrix,
}

#[pymethods]
impl PyGate {
    /// `C(c)` on two qubits, optionally preceded by the shared rotation
    /// `R_z(gamma) R_y(beta)` on each qubit.
    #[staticmethod]
    #[pyo3(signature = (c1, c2, c3, beta = 0.0, gamma = 0.0))]
    fn canonical(c1: f64, c2: f64, c3: f64, beta: f64, gamma: f64) -> PyResult<Self> {
        let params = GateParams::new(c1, c2, c3).with_pre_rotation(beta, gamma);
        Ok(Self {
            inner: quantum::canonical_gate(&params).map_err(to_py)?,
        })
    }

    /// The standard star gate `U_N*`.
    #[staticmethod]
    fn star(num_qubits: usize) -> PyResult<Self> {
        Ok(Self {
            inner: quantum::star_gate(&StarGateSpec::standard(num_qubits)).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn identity(num_qubits: usize) -> PyResult<Self> {
        Ok(Self {
            inner: ComplexMatrix::identity(1 << num_qubits).map_err(to_py)?,
        })
    }

    /// Builds a gate from a square nested list of complex entries.
    #[staticmethod]
    fn from_matrix(rows: Vec<Vec<C64>>) -> PyResult<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(PyValueError::new_err("matrix must be square"));
        }
        let inner = ComplexMatrix::new(dim, rows.into_iter().flatten().collect()).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.inner.num_qubits()
    }

    fn matrix(&self) -> Vec<Vec<C64>> {
        let d = self.inner.dim();
        (0..d)
            .map(|r| (0..d).map(|c| self.inner.get(r, c)).collect())
            .collect()
    }

    fn unitarity_defect(&self) -> f64 {
        self.inner.unitarity_defect()
    }

    fn __repr__(&self) -> String {
        format!("Gate(num_qubits={})", self.inner.num_qubits())
    }
}

/// Eve's per-qubit choices. `mask` selects intercepted qubits; `angles`
/// lists `(beta, gamma)` for each of them in qubit order.
#[pyclass(name = "Attack", module = "eeqkd_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyAttack {
    inner: protocol::Attack,
}

#[pymethods]
impl PyAttack {
    #[new]
    #[pyo3(signature = (num_qubits, mask, angles, fraction = 1.0))]
    fn new(num_qubits: usize, mask: usize, angles: Vec<f64>, fraction: f64) -> PyResult<Self> {
        let spec = AttackSpec::from_mask_angles(num_qubits, mask, &angles)
            .map_err(to_py)?
            .with_fraction(fraction);
        Ok(Self {
            inner: protocol::Attack::InterceptResend(spec),
        })
    }

    /// Every qubit measured in z.
    #[staticmethod]
    #[pyo3(signature = (num_qubits, fraction = 1.0))]
    fn z_basis(num_qubits: usize, fraction: f64) -> Self {
        Self {
            inner: protocol::Attack::InterceptResend(
                AttackSpec::z_basis(num_qubits).with_fraction(fraction),
            ),
        }
    }

    /// Entanglement-enhanced attack against the standard star gate.
    #[staticmethod]
    fn entanglement_enhanced(num_qubits: usize) -> PyResult<Self> {
        let spec = EEAttackSpec::new(StarGateSpec::standard(num_qubits)).map_err(to_py)?;
        Ok(Self {
            inner: protocol::Attack::EntanglementEnhanced(spec),
        })
    }

    fn __repr__(&self) -> String {
        match &self.inner {
            protocol::Attack::None => "Attack(none)".into(),
            protocol::Attack::InterceptResend(s) => {
                format!("Attack(qubits={}, fraction={})", s.qubits.len(), s.fraction)
            }
            protocol::Attack::EntanglementEnhanced(s) => {
                format!("Attack(entanglement_enhanced, {})", s.num_qubits())
            }
        }
    }
}

/// Pauli noise of the given family and amplitude, plus per-qubit loss.
#[pyclass(name = "Channel", module = "eeqkd_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChannel {
    inner: ChannelSpec,
}

#[pymethods]
impl PyChannel {
    #[new]
    #[pyo3(signature = (family = "xyz", amplitude = 0.0, loss = 0.0))]
    fn new(family: &str, amplitude: f64, loss: f64) -> PyResult<Self> {
        let inner = ChannelSpec::noisy(parse_family(family)?, amplitude).with_loss(loss);
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Channel whose BB84 QBER is `q`.
    #[staticmethod]
    #[pyo3(signature = (q, family = "xyz", loss = 0.0))]
    fn for_qber(q: f64, family: &str, loss: f64) -> PyResult<Self> {
        let fam = parse_family(family)?;
        let n = channel::calibrate_amplitude(fam, q).map_err(to_py)?;
        Self::new(family, n, loss)
    }

    #[getter]
    fn amplitude(&self) -> f64 {
        self.inner.amplitude
    }

    fn __repr__(&self) -> String {
        format!(
            "Channel(family={}, amplitude={}, loss={})",
            self.inner.noise, self.inner.amplitude, self.inner.loss_probability
        )
    }
}

/// `P(Alice, Eve, Bob | bases)` for one round, normalized per basis index.
#[pyclass(name = "Distribution", module = "eeqkd_py", frozen)]
struct PyDistribution {
    inner: JointDistribution,
}

#[pymethods]
impl PyDistribution {
    #[getter]
    fn num_qubits(&self) -> usize {
        self.inner.num_qubits()
    }

    /// Eve's record is a base-3 string, 2 marking an unmeasured qubit.
    fn prob(&self, basis: usize, alice: usize, eve: usize, bob: usize) -> PyResult<f64> {
        let (s, e) = (self.inner.num_strings(), self.inner.num_eve());
        if basis >= s || alice >= s || bob >= s || eve >= e {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.prob(basis, alice, eve, bob))
    }

    fn basis_total(&self, basis: usize) -> PyResult<f64> {
        if basis >= self.inner.num_strings() {
            return Err(PyValueError::new_err("basis index out of range"));
        }
        Ok(self.inner.basis_total(basis))
    }

    /// Flat table indexed `[basis][alice][eve][bob]`.
    fn entries(&self) -> Vec<f64> {
        self.inner.entries().to_vec()
    }

    fn info<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        info_dict(
            py,
            &metrics::mutual_information(&self.inner).map_err(to_py)?,
        )
    }
}

fn info_dict<'py>(py: Python<'py>, info: &InfoResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mutual_information", info.mutual_information)?;
    d.set_item("qber", info.qber)?;
    d.set_item("per_qubit_qber", info.per_qubit_qber.clone())?;
    d.set_item("slope", info.slope.value())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (gate, attack = None, channel = None))]
fn run_round(
    gate: &PyGate,
    attack: Option<&PyAttack>,
    channel: Option<&PyChannel>,
) -> PyResult<PyDistribution> {
    let mut cfg = RoundConfig::new(gate.inner.clone());
    if let Some(a) = attack {
        cfg = cfg.with_attack(a.inner.clone());
    }
    if let Some(c) = channel {
        cfg = cfg.with_channel(c.inner.clone());
    }
    Ok(PyDistribution {
        inner: protocol::run_round(&cfg).map_err(to_py)?,
    })
}

#[pyfunction]
fn binary_entropy(q: f64) -> f64 {
    metrics::binary_entropy(q)
}

/// Relative secret key rate for slope `s` and overall QBER `q_e`.
#[pyfunction]
#[pyo3(signature = (s, q_e, correlated = false))]
fn key_rate(s: f64, q_e: f64, correlated: bool) -> PyResult<f64> {
    Ok(metrics::key_rate(s, q_e, correlated).map_err(to_py)?.r)
}

#[pyfunction]
fn bb84_key_rate(q: f64) -> PyResult<f64> {
    metrics::bb84_key_rate(q).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (q, family = "xyz"))]
fn calibrate_amplitude(q: f64, family: &str) -> PyResult<f64> {
    channel::calibrate_amplitude(parse_family(family)?, q).map_err(to_py)
}

/// QBER of `gate` under noise of amplitude `n`, without loss.
#[pyfunction]
#[pyo3(signature = (gate, n, family = "xyz"))]
fn gate_noise_qber(gate: &PyGate, n: f64, family: &str) -> PyResult<f64> {
    channel::gate_noise_qber(&gate.inner, parse_family(family)?, n).map_err(to_py)
}

/// Error rates of `gate` at BB84 QBER `q` and loss probability `loss`.
#[pyfunction]
#[pyo3(signature = (gate, q, loss = 0.0, family = "xyz"))]
fn combined_qber<'py>(
    py: Python<'py>,
    gate: &PyGate,
    q: f64,
    loss: f64,
    family: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let r = channel::combined_qber_for_target(&gate.inner, parse_family(family)?, q, loss)
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("q", r.q)?;
    d.set_item("n", r.n)?;
    d.set_item("q_noise", r.q_noise)?;
    d.set_item("q_loss", r.q_loss)?;
    d.set_item("q_e", r.q_e)?;
    d.set_item("delta", r.delta)?;
    Ok(d)
}

/// Eve's best single-group measurement against `gate`; `target` is
/// "slope" (I/q) or "information".
#[pyfunction]
#[pyo3(signature = (gate, target = "slope", fast = false))]
fn maximize_eve<'py>(
    py: Python<'py>,
    gate: &PyGate,
    target: &str,
    fast: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let target = match target {
        "slope" => EveTarget::Slope,
        "information" => EveTarget::Information,
        other => return Err(PyValueError::new_err(format!("unknown target {other:?}"))),
    };
    let search = if fast {
        EveSearch::fast()
    } else {
        EveSearch::default()
    };
    let best = py
        .detach(|| optimize::maximize_eve(&gate.inner, target, &search))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("value", best.value)?;
    d.set_item("mask", best.mask)?;
    d.set_item("angles", best.angles)?;
    d.set_item("info", info_dict(py, &best.info)?)?;
    Ok(d)
}

/// Best two-qubit gate for BB84 QBER `q`.
#[pyfunction]
#[pyo3(signature = (q, loss = 0.0, correlated = false, family = "xyz", seeds = vec![1]))]
fn maximize_key_rate<'py>(
    py: Python<'py>,
    q: f64,
    loss: f64,
    correlated: bool,
    family: &str,
    seeds: Vec<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let channel = ChannelOptions {
        family: parse_family(family)?,
        loss,
        correlated,
    };
    let search = GateSearch {
        random_starts: usize::from(!seeds.is_empty()),
        rng_seeds: seeds,
        ..GateSearch::default()
    };
    let best = py
        .detach(|| optimize::maximize_key_rate(q, &channel, &search))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("c", best.canonical.to_vec())?;
    d.set_item("rate", best.best.rate.r)?;
    d.set_item("slope", best.best.slope)?;
    d.set_item("q_e", best.best.q_e)?;
    d.set_item("bb84_rate", best.bb84_rate)?;
    Ok(d)
}

#[pymodule]
fn eeqkd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGate>()?;
    m.add_class::<PyAttack>()?;
    m.add_class::<PyChannel>()?;
    m.add_class::<PyDistribution>()?;
    m.add_function(wrap_pyfunction!(run_round, m)?)?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(key_rate, m)?)?;
    m.add_function(wrap_pyfunction!(bb84_key_rate, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(gate_noise_qber, m)?)?;
    m.add_function(wrap_pyfunction!(combined_qber, m)?)?;
    m.add_function(wrap_pyfunction!(maximize_eve, m)?)?;
    m.add_function(wrap_pyfunction!(maximize_key_rate, m)?)?;
    m.add("C_STAR", optimize::C_STAR.to_vec())?;
    Ok(())
}
