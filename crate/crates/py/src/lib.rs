//! Python bindings: spin systems, level schemes, protocols, metrics and spectra.
//!
//! Populations cross the boundary as plain lists of floats in level order.
//! Validation and configuration errors raise `ValueError`; numerical failures
//! raise `RuntimeError`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dnp_kinetics::cli;
use dnp_kinetics::config::RunConfig;
use dnp_kinetics::kinetics::RateModel;
use dnp_kinetics::levels::{self, transition_table, TransitionKind};
use dnp_kinetics::protocols::{self, RunOptions, DEFAULT_POINTS_PER_STEP, DEFAULT_WAIT_T1E, IDEAL_RATE_FACTOR};
use dnp_kinetics::spectra::{self, EprOptions, LineShape};
use dnp_kinetics::{Error, ErrorClass, HalfInt, PopulationState};

fn py_err(e: Error) -> PyErr {
    let msg = format!("{}: {e}", e.kind());
    match e.class() {
        ErrorClass::Numerical => PyRuntimeError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for dnp_kinetics::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn half_int(x: f64) -> PyResult<HalfInt> {
    HalfInt::from_f64(x).ok_or_else(|| PyValueError::new_err(format!("{x} is not a multiple of 1/2")))
}

/// (mS, [(frequency MHz, multiplicity)]).
type EndorGroup = (f64, Vec<(f64, usize)>);

fn state(p: Vec<f64>) -> PyResult<PopulationState> {
    PopulationState::new(p).py()
}

#[pyclass(name = "SpinSystem", module = "dnp_kinetics", frozen)]
struct PySpinSystem {
    inner: dnp_kinetics::SpinSystem,
}

#[pymethods]
impl PySpinSystem {
    #[new]
    #[pyo3(signature = (electron_spin, nuclear_spin, g_factor, gamma_n_mhz_per_t, hyperfine_a_mhz))]
    fn new(electron_spin: f64, nuclear_spin: f64, g_factor: f64, gamma_n_mhz_per_t: f64, hyperfine_a_mhz: f64) -> PyResult<Self> {
        let inner = dnp_kinetics::SpinSystem::new(electron_spin, nuclear_spin, g_factor, gamma_n_mhz_per_t, hyperfine_a_mhz).py()?;
        Ok(PySpinSystem { inner })
    }

    #[getter]
    fn electron_spin(&self) -> f64 {
        self.inner.s()
    }

    #[getter]
    fn nuclear_spin(&self) -> f64 {
        self.inner.i()
    }

    #[getter]
    fn g_factor(&self) -> f64 {
        self.inner.g_factor()
    }

    #[getter]
    fn gamma_n_mhz_per_t(&self) -> f64 {
        self.inner.gamma_n()
    }

    #[getter]
    fn hyperfine_a_mhz(&self) -> f64 {
        self.inner.hyperfine_a()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Electron Larmor frequency at `field_t`, MHz.
    fn nu_e(&self, field_t: f64) -> f64 {
        self.inner.nu_e(field_t)
    }

    /// Nuclear Larmor frequency at `field_t`, MHz.
    fn nu_n(&self, field_t: f64) -> f64 {
        self.inner.nu_n(field_t)
    }

    /// mI of the EPR component with the largest resonance field.
    fn high_field_mi(&self, microwave_mhz: f64) -> PyResult<f64> {
        Ok(levels::high_field_mi(&self.inner, microwave_mhz).py()?.value())
    }

    /// (mI, resonance field in mT) for each EPR component, mI descending.
    fn epr_lines(&self, microwave_mhz: f64) -> PyResult<Vec<(f64, f64)>> {
        Ok(levels::epr_lines(&self.inner, microwave_mhz)
            .py()?
            .iter()
            .map(|l| (l.mi.value(), l.field * 1e3))
            .collect())
    }

    /// [(mS, [(frequency MHz, multiplicity), ...]), ...] at `field_t`, mS descending.
    fn endor_frequencies(&self, field_t: f64) -> PyResult<Vec<EndorGroup>> {
        Ok(levels::endor_frequencies(&self.inner, field_t)
            .py()?
            .into_iter()
            .rev()
            .map(|(ms, lines)| (ms.value(), lines.iter().map(|l| (l.frequency, l.multiplicity)).collect()))
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "SpinSystem(S={}, I={}, g={}, gamma_n={} MHz/T, A={} MHz)",
            self.inner.s(),
            self.inner.i(),
            self.inner.g_factor(),
            self.inner.gamma_n(),
            self.inner.hyperfine_a()
        )
    }
}

#[pyclass(name = "EnergyLevels", module = "dnp_kinetics", frozen)]
struct PyEnergyLevels {
    inner: dnp_kinetics::EnergyLevels,
}

#[pymethods]
impl PyEnergyLevels {
    #[new]
    fn new(system: &PySpinSystem, field_t: f64) -> PyResult<Self> {
        let inner = dnp_kinetics::EnergyLevels::compute(&system.inner, field_t).py()?;
        Ok(PyEnergyLevels { inner })
    }

    #[getter]
    fn system(&self) -> PySpinSystem {
        PySpinSystem {
            inner: *self.inner.system(),
        }
    }

    #[getter]
    fn field_t(&self) -> f64 {
        self.inner.field()
    }

    /// Eigenvalues ascending, MHz.
    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inner.energies().to_vec()
    }

    /// Dominant (mS, mI) of each level.
    #[getter]
    fn labels(&self) -> Vec<(f64, f64)> {
        self.inner.labels().iter().map(|l| (l.ms.value(), l.mi.value())).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn index_of(&self, ms: f64, mi: f64) -> PyResult<usize> {
        self.inner.index_of(dnp_kinetics::Label::new(half_int(ms)?, half_int(mi)?)).py()
    }

    /// Level indices of one mI manifold.
    fn manifold(&self, mi: f64) -> PyResult<Vec<usize>> {
        self.inner.manifold(half_int(mi)?).py()
    }

    fn thermal(&self, temperature_k: f64) -> PyResult<Vec<f64>> {
        Ok(levels::thermal_populations(&self.inner, temperature_k).py()?.into_vec())
    }

    /// Allowed transitions as (kind, lower level, upper level, frequency MHz).
    fn transitions(&self) -> PyResult<Vec<(&'static str, usize, usize, f64)>> {
        Ok(transition_table(&self.inner)
            .py()?
            .iter()
            .map(|t| {
                let kind = match t.kind {
                    TransitionKind::Epr => "epr",
                    TransitionKind::Nmr => "nmr",
                };
                (kind, t.level_lo, t.level_hi, t.frequency)
            })
            .collect())
    }

    fn __repr__(&self) -> String {
        format!("EnergyLevels({} levels at {} T)", self.inner.len(), self.inner.field())
    }
}

#[pyclass(name = "RateModel", module = "dnp_kinetics", frozen)]
struct PyRateModel {
    inner: RateModel,
}

#[pymethods]
impl PyRateModel {
    #[new]
    #[pyo3(signature = (t1e_s, temperature_k, t1n_s = f64::INFINITY))]
    fn new(t1e_s: f64, temperature_k: f64, t1n_s: f64) -> PyResult<Self> {
        Ok(PyRateModel {
            inner: RateModel::new(t1e_s, t1n_s, temperature_k).py()?,
        })
    }

    #[getter]
    fn t1e_s(&self) -> f64 {
        self.inner.t1e
    }

    #[getter]
    fn t1n_s(&self) -> f64 {
        self.inner.t1n
    }

    #[getter]
    fn temperature_k(&self) -> f64 {
        self.inner.temperature
    }

    fn __repr__(&self) -> String {
        format!(
            "RateModel(t1e_s={}, temperature_k={}, t1n_s={})",
            self.inner.t1e, self.inner.temperature, self.inner.t1n
        )
    }
}

#[pyclass(name = "Trajectory", module = "dnp_kinetics", frozen)]
struct PyTrajectory {
    inner: protocols::Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn states(&self) -> Vec<Vec<f64>> {
        self.inner.states.iter().map(|p| p.as_slice().to_vec()).collect()
    }

    #[getter]
    fn step_ends(&self) -> Vec<usize> {
        self.inner.step_ends.clone()
    }

    #[getter]
    fn final_state(&self) -> Vec<f64> {
        self.inner.final_state().as_slice().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "Metrics", module = "dnp_kinetics", frozen, get_all)]
struct PyMetrics {
    nuclear_polarization: f64,
    electron_polarization: f64,
    /// (mI, fraction), mI descending.
    manifold_fractions: Vec<(f64, f64)>,
    enhancement_eps: Option<f64>,
}

#[pymethods]
impl PyMetrics {
    fn __repr__(&self) -> String {
        format!(
            "Metrics(P_n={}, P_e={}, eps={:?})",
            self.nuclear_polarization, self.electron_polarization, self.enhancement_eps
        )
    }
}

#[pyclass(name = "Spectrum", module = "dnp_kinetics", frozen)]
struct PySpectrum {
    inner: spectra::Spectrum,
}

#[pymethods]
impl PySpectrum {
    #[getter]
    fn axis(&self) -> Vec<f64> {
        self.inner.axis.clone()
    }

    #[getter]
    fn intensity(&self) -> Vec<f64> {
        self.inner.intensity.clone()
    }

    /// Fractional area of the component centred at each of `centers`.
    fn component_areas(&self, centers: Vec<f64>) -> PyResult<Vec<f64>> {
        spectra::component_areas(&self.inner, &centers).py()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }
}

fn opts(points_per_step: usize) -> RunOptions {
    RunOptions { points_per_step }
}

/// Continuous-wave PONSEE from the thermal state.
#[pyfunction]
#[pyo3(signature = (levels, model, target_mi, duration_s, rate_w_per_s = None, points_per_step = DEFAULT_POINTS_PER_STEP))]
fn ponsee_cw(
    levels: &PyEnergyLevels,
    model: &PyRateModel,
    target_mi: f64,
    duration_s: f64,
    rate_w_per_s: Option<f64>,
    points_per_step: usize,
) -> PyResult<PyTrajectory> {
    let rate = rate_w_per_s.unwrap_or(IDEAL_RATE_FACTOR / model.inner.t1e);
    let inner = protocols::ponsee_cw(&levels.inner, &model.inner, half_int(target_mi)?, rate, duration_s, opts(points_per_step)).py()?;
    Ok(PyTrajectory { inner })
}

/// Pulsed PONSEPE cycles from the thermal state; nuclear relaxation is switched off.
#[pyfunction]
#[pyo3(signature = (levels, model, target_mi, n_cycles, inter_cycle_wait_s = None, points_per_step = DEFAULT_POINTS_PER_STEP))]
fn ponsepe(
    levels: &PyEnergyLevels,
    model: &PyRateModel,
    target_mi: f64,
    n_cycles: usize,
    inter_cycle_wait_s: Option<f64>,
    points_per_step: usize,
) -> PyResult<PyTrajectory> {
    let wait = inter_cycle_wait_s.unwrap_or(DEFAULT_WAIT_T1E * model.inner.t1e);
    let inner = protocols::ponsepe(&levels.inner, &model.inner, half_int(target_mi)?, n_cycles, wait, opts(points_per_step)).py()?;
    Ok(PyTrajectory { inner })
}

/// Steady state of the saturating drive equivalent to many PONSEPE cycles.
#[pyfunction]
fn ponsepe_cw_limit(levels: &PyEnergyLevels, model: &PyRateModel, target_mi: f64) -> PyResult<Vec<f64>> {
    Ok(protocols::ponsepe_cw_limit(&levels.inner, &model.inner, half_int(target_mi)?).py()?.into_vec())
}

/// Polarizations and manifold fractions of `state`, with ε against the thermal state at `temperature_k`.
#[pyfunction]
fn metrics(levels: &PyEnergyLevels, state_: Vec<f64>, temperature_k: f64) -> PyResult<PyMetrics> {
    let p = state(state_)?;
    let th = levels::thermal_populations(&levels.inner, temperature_k).py()?;
    let m = dnp_kinetics::metrics::metrics(&p, &levels.inner, &th).py()?;
    Ok(PyMetrics {
        nuclear_polarization: m.nuclear_polarization,
        electron_polarization: m.electron_polarization,
        manifold_fractions: m.manifold_fractions.iter().map(|(mi, f)| (mi.value(), *f)).collect(),
        enhancement_eps: m.enhancement_eps,
    })
}

/// Field-swept EPR spectrum of `state`.
#[pyfunction]
#[pyo3(signature = (levels, state_, microwave_mhz, field_range_mt, n_points = 2001, linewidth_mt = 0.1, shape = "gaussian", derivative = false))]
#[allow(clippy::too_many_arguments)]
fn simulate_epr(
    levels: &PyEnergyLevels,
    state_: Vec<f64>,
    microwave_mhz: f64,
    field_range_mt: (f64, f64),
    n_points: usize,
    linewidth_mt: f64,
    shape: &str,
    derivative: bool,
) -> PyResult<PySpectrum> {
    let shape = match shape {
        "gaussian" => LineShape::Gaussian,
        "lorentzian" => LineShape::Lorentzian,
        other => return Err(PyValueError::new_err(format!("unknown line shape {other:?}"))),
    };
    let o = EprOptions {
        n_points,
        linewidth_mt,
        shape,
        derivative,
        ..EprOptions::over(field_range_mt)
    };
    let inner = spectra::simulate_epr(&levels.inner, &state(state_)?, microwave_mhz, &o).py()?;
    Ok(PySpectrum { inner })
}

/// A validated run configuration, as read by the command-line tool.
#[pyclass(name = "RunConfig", module = "dnp_kinetics", frozen)]
struct PyRunConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyRunConfig {
    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyRunConfig {
            inner: RunConfig::load(&path).py()?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyRunConfig {
            inner: RunConfig::from_json_str(text).py()?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json_pretty()
    }

    fn levels(&self) -> PyResult<PyEnergyLevels> {
        Ok(PyEnergyLevels {
            inner: self.inner.levels().py()?,
        })
    }

    fn levels_csv(&self) -> PyResult<String> {
        cli::cmd_levels(&self.inner).py()
    }

    fn endor_csv(&self) -> PyResult<String> {
        cli::cmd_endor(&self.inner).py()
    }

    #[pyo3(signature = (state_ = None))]
    fn epr_csv(&self, state_: Option<Vec<f64>>) -> PyResult<String> {
        let p = state_.map(state).transpose()?;
        cli::cmd_epr(&self.inner, p.as_ref()).py()
    }

    /// (trajectory CSV, final-state CSV).
    fn protocol_csv(&self) -> PyResult<(String, String)> {
        cli::cmd_protocol(&self.inner).py()
    }
}

#[pymodule]
#[pyo3(name = "dnp_kinetics")]
fn dnp_kinetics_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpinSystem>()?;
    m.add_class::<PyEnergyLevels>()?;
    m.add_class::<PyRateModel>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyMetrics>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyRunConfig>()?;
    m.add_function(wrap_pyfunction!(ponsee_cw, m)?)?;
    m.add_function(wrap_pyfunction!(ponsepe, m)?)?;
    m.add_function(wrap_pyfunction!(ponsepe_cw_limit, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_epr, m)?)?;
    m.add("IDEAL_RATE_FACTOR", IDEAL_RATE_FACTOR)?;
    Ok(())
}
