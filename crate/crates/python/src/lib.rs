//! Python bindings for the obsim comparator machine.
//!
//! Keys cross the boundary as floats (ints convert implicitly). NaN keys are
//! rejected because the machine needs a total order.
//!
//! Usage from Python:
//!
//! ```python
//! import obsim
//! r = obsim.find_min([9, 4, 7], k=3)
//! assert r.min_index == 1 and r.ledger.invocations == 1
//! ```

use ordered_float::OrderedFloat;
use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;

use obsim_core as core;
use obsim_core::{DeflectionMode, ObservabilityOrder, Task};

fn to_py_err(e: core::Error) -> PyErr {
    match e {
        core::Error::IndexOutOfRange { .. } => PyIndexError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn order(k: usize) -> PyResult<ObservabilityOrder> {
    ObservabilityOrder::new(k).map_err(to_py_err)
}

fn keys(items: Vec<f64>) -> PyResult<Vec<OrderedFloat<f64>>> {
    if items.iter().any(|x| x.is_nan()) {
        return Err(PyValueError::new_err("keys must not be NaN"));
    }
    Ok(items.into_iter().map(OrderedFloat).collect())
}

fn parse_task(task: &str) -> PyResult<Task> {
    task.parse().map_err(PyValueError::new_err)
}

fn parse_mode(mode: &str) -> PyResult<DeflectionMode> {
    match mode {
        "electric" => Ok(DeflectionMode::Electric),
        "magnetic" => Ok(DeflectionMode::Magnetic),
        other => Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
    }
}

#[pyclass(name = "CostLedger", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyCostLedger(core::CostLedger);

#[pymethods]
impl PyCostLedger {
    #[getter]
    fn invocations(&self) -> u64 {
        self.0.invocations()
    }

    #[getter]
    fn rounds(&self) -> u64 {
        self.0.rounds()
    }

    #[getter]
    fn stored_items(&self) -> u64 {
        self.0.stored_items()
    }

    fn __repr__(&self) -> String {
        format!(
            "CostLedger(invocations={}, rounds={}, stored_items={})",
            self.0.invocations(),
            self.0.rounds(),
            self.0.stored_items()
        )
    }
}

#[pyclass(name = "ComparisonOutcome", frozen, skip_from_py_object)]
struct PyComparisonOutcome {
    #[pyo3(get)]
    ranking: Vec<usize>,
    #[pyo3(get)]
    tie_groups: Vec<Vec<usize>>,
    #[pyo3(get)]
    ledger: PyCostLedger,
}

#[pyclass(name = "SelectionResult", frozen, skip_from_py_object)]
struct PySelectionResult {
    #[pyo3(get)]
    min_index: usize,
    #[pyo3(get)]
    max_index: Option<usize>,
    #[pyo3(get)]
    ledger: PyCostLedger,
}

impl From<core::SelectionResult> for PySelectionResult {
    fn from(r: core::SelectionResult) -> Self {
        Self {
            min_index: r.min_index,
            max_index: r.max_index,
            ledger: PyCostLedger(r.ledger),
        }
    }
}

#[pyclass(name = "SortResult", frozen, skip_from_py_object)]
struct PySortResult {
    #[pyo3(get)]
    permutation: Vec<usize>,
    #[pyo3(get)]
    ledger: PyCostLedger,
}

#[pyclass(name = "Principle", frozen, skip_from_py_object)]
struct PyPrinciple {
    inner: core::Principle,
}

#[pymethods]
impl PyPrinciple {
    #[getter]
    fn holds_one_step(&self) -> bool {
        self.inner.holds_one_step
    }

    /// "1" or ">1".
    #[getter]
    fn predicted_invocations(&self) -> String {
        self.inner.predicted_invocations.to_string()
    }

    fn agrees_with(&self, invocations: u64) -> bool {
        self.inner.agrees_with(invocations)
    }
}

#[pyclass(name = "Particle", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyParticle(core::Particle);

#[pymethods]
impl PyParticle {
    #[new]
    fn new(mass: f64, charge: f64, speed: f64) -> PyResult<Self> {
        core::Particle::new(mass, charge, speed)
            .map(Self)
            .map_err(to_py_err)
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.0.mass
    }

    #[getter]
    fn charge(&self) -> f64 {
        self.0.charge
    }

    #[getter]
    fn speed(&self) -> f64 {
        self.0.speed
    }
}

#[pyclass(name = "FieldConfig", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyFieldConfig(core::FieldConfig);

#[pymethods]
impl PyFieldConfig {
    #[new]
    #[pyo3(signature = (field_strength, plate_length, drift_distance=0.0))]
    fn new(field_strength: f64, plate_length: f64, drift_distance: f64) -> PyResult<Self> {
        core::FieldConfig::new(field_strength, plate_length, drift_distance)
            .map(Self)
            .map_err(to_py_err)
    }

    /// Same geometry, opposite polarity.
    fn flipped(&self) -> Self {
        Self(self.0.flipped())
    }

    #[getter]
    fn field_strength(&self) -> f64 {
        self.0.field_strength
    }
}

#[pyclass(name = "EnergySchedule", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyEnergySchedule(core::EnergySchedule);

#[pymethods]
impl PyEnergySchedule {
    #[new]
    #[pyo3(signature = (base_energy=50.0, growth_ratio=1.3, count=10))]
    fn new(base_energy: f64, growth_ratio: f64, count: usize) -> PyResult<Self> {
        core::EnergySchedule::new(base_energy, growth_ratio, count)
            .map(Self)
            .map_err(to_py_err)
    }

    #[getter]
    fn count(&self) -> usize {
        self.0.count
    }
}

/// One comparator reading over at most `k` keys.
#[pyfunction]
fn k_compare(items: Vec<f64>, k: usize) -> PyResult<PyComparisonOutcome> {
    let mut ledger = core::CostLedger::new();
    let out = core::k_compare(&keys(items)?, order(k)?, &mut ledger).map_err(to_py_err)?;
    Ok(PyComparisonOutcome {
        ranking: out.ranking,
        tie_groups: out.tie_groups,
        ledger: PyCostLedger(ledger),
    })
}

#[pyfunction]
fn find_min(items: Vec<f64>, k: usize) -> PyResult<PySelectionResult> {
    core::find_min(&keys(items)?, order(k)?)
        .map(Into::into)
        .map_err(to_py_err)
}

#[pyfunction]
fn find_min_max(items: Vec<f64>, k: usize) -> PyResult<PySelectionResult> {
    core::find_min_max(&keys(items)?, order(k)?)
        .map(Into::into)
        .map_err(to_py_err)
}

#[pyfunction]
fn sort_k(items: Vec<f64>, k: usize) -> PyResult<PySortResult> {
    let r = core::sort_k(&keys(items)?, order(k)?).map_err(to_py_err)?;
    Ok(PySortResult {
        permutation: r.permutation,
        ledger: PyCostLedger(r.ledger),
    })
}

/// Invocation ratio base/test as a `fractions.Fraction`.
#[pyfunction]
#[pyo3(signature = (n, k_test, k_base, task="min"))]
fn speedup<'py>(
    py: Python<'py>,
    n: usize,
    k_test: usize,
    k_base: usize,
    task: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let ratio =
        core::speedup(n, order(k_test)?, order(k_base)?, parse_task(task)?).map_err(to_py_err)?;
    py.import("fractions")?
        .getattr("Fraction")?
        .call1((*ratio.numer(), *ratio.denom()))
}

#[pyfunction]
fn principle_of_observability(n: usize, k: usize) -> PyResult<PyPrinciple> {
    Ok(PyPrinciple {
        inner: core::principle_of_observability(n, order(k)?),
    })
}

#[pyfunction]
fn deflection(particle: PyParticle, field: PyFieldConfig) -> PyResult<f64> {
    core::deflection(&particle.0, &field.0).map_err(to_py_err)
}

/// Returns `(permutation, displacements, ledger)`.
#[pyfunction]
#[pyo3(signature = (particles, field, k, mode="electric"))]
fn charge_sort(
    particles: Vec<PyParticle>,
    field: PyFieldConfig,
    k: usize,
    mode: &str,
) -> PyResult<(Vec<usize>, Vec<f64>, PyCostLedger)> {
    let particles: Vec<core::Particle> = particles.into_iter().map(|p| p.0).collect();
    let mut ledger = core::CostLedger::new();
    let sorted = core::physics::charge_sort_with_mode(
        &particles,
        &field.0,
        parse_mode(mode)?,
        order(k)?,
        &mut ledger,
    )
    .map_err(to_py_err)?;
    let displacements = sorted.records.iter().map(|r| r.displacement).collect();
    Ok((sorted.permutation, displacements, PyCostLedger(ledger)))
}

#[pyfunction]
fn charge_energy(i: usize, schedule: PyEnergySchedule) -> PyResult<f64> {
    core::charge_energy(i, &schedule.0).map_err(to_py_err)
}

#[pyfunction]
fn total_energy(schedule: PyEnergySchedule) -> PyResult<f64> {
    core::total_energy(&schedule.0).map_err(to_py_err)
}

/// Energy carried by each of `observers` placers working in one round.
#[pyfunction]
fn distributed_energy(schedule: PyEnergySchedule, observers: usize) -> PyResult<f64> {
    core::distributed_energy(&schedule.0, observers)
        .map(|d| d.per_observability)
        .map_err(to_py_err)
}

#[pymodule]
fn obsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCostLedger>()?;
    m.add_class::<PyComparisonOutcome>()?;
    m.add_class::<PySelectionResult>()?;
    m.add_class::<PySortResult>()?;
    m.add_class::<PyPrinciple>()?;
    m.add_class::<PyParticle>()?;
    m.add_class::<PyFieldConfig>()?;
    m.add_class::<PyEnergySchedule>()?;
    m.add_function(wrap_pyfunction!(k_compare, m)?)?;
    m.add_function(wrap_pyfunction!(find_min, m)?)?;
    m.add_function(wrap_pyfunction!(find_min_max, m)?)?;
    m.add_function(wrap_pyfunction!(sort_k, m)?)?;
    m.add_function(wrap_pyfunction!(speedup, m)?)?;
    m.add_function(wrap_pyfunction!(principle_of_observability, m)?)?;
    m.add_function(wrap_pyfunction!(deflection, m)?)?;
    m.add_function(wrap_pyfunction!(charge_sort, m)?)?;
    m.add_function(wrap_pyfunction!(charge_energy, m)?)?;
    m.add_function(wrap_pyfunction!(total_energy, m)?)?;
    m.add_function(wrap_pyfunction!(distributed_energy, m)?)?;
    Ok(())
}
