//! Python bindings: scenarios, simulation, estimation, studies and the
//! geometry/link-budget helpers.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::risloc as core;
use core::channel::{self, BeatCube};
use core::config::ScenarioConfig;
use core::experiments::{self, ParamValue, Placement, StudyParameter, SweepStudy};
use core::geometry::{make_upa, Direction};
use core::localization::{error_report, LocalizationEstimate};

fn err(e: core::error::Error) -> PyErr {
    match e {
        core::error::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn direction(az_deg: f64, el_deg: f64) -> PyResult<Direction> {
    Direction::from_degrees(az_deg, el_deg).map_err(err)
}

/// Scenario configuration; defaults are the reference simulation setup.
#[pyclass(name = "Scenario", from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (toml=None))]
    fn new(toml: Option<&str>) -> PyResult<Self> {
        let inner = match toml {
            Some(t) => ScenarioConfig::from_toml_str(t).map_err(err)?,
            None => ScenarioConfig::default(),
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: core::config::load_config(path).map_err(err)? })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml_string().map_err(err)
    }

    #[getter]
    fn tx_power_dbm(&self) -> f64 {
        self.inner.link.tx_power_dbm
    }

    #[setter]
    fn set_tx_power_dbm(&mut self, v: f64) {
        self.inner.link.tx_power_dbm = v;
    }

    #[getter]
    fn beam_step_deg(&self) -> f64 {
        self.inner.sweep.azimuth_step_deg
    }

    #[setter]
    fn set_beam_step_deg(&mut self, v: f64) {
        self.inner.sweep.azimuth_step_deg = v;
    }

    #[getter]
    fn ris_elements(&self) -> (usize, usize) {
        (self.inner.ris.elements_az, self.inner.ris.elements_el)
    }

    #[setter]
    fn set_ris_elements(&mut self, v: (usize, usize)) {
        self.inner.ris.elements_az = v.0;
        self.inner.ris.elements_el = v.1;
    }

    #[getter]
    fn noise(&self) -> bool {
        self.inner.link.noise
    }

    #[setter]
    fn set_noise(&mut self, v: bool) {
        self.inner.link.noise = v;
    }

    #[getter]
    fn ue_position(&self) -> [f64; 3] {
        self.inner.ue.position_m
    }

    #[setter]
    fn set_ue_position(&mut self, v: [f64; 3]) {
        self.inner.ue.position_m = v;
    }

    #[getter]
    fn ris_position(&self) -> [f64; 3] {
        self.inner.ris.position_m
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(err)
    }

    /// Beat cube for `seed`.
    fn simulate(&self, seed: u64) -> PyResult<PyCube> {
        Ok(PyCube { inner: self.inner.synthesize(seed).map_err(err)? })
    }

    /// Runs the estimator on `cube` and returns a dict with the selected beam,
    /// AOD (degrees), distance, velocity, position and per-angle beam power.
    fn estimate<'py>(&self, py: Python<'py>, cube: &PyCube) -> PyResult<Bound<'py, PyDict>> {
        let sweep = core::dsp::estimate(&cube.inner, &self.inner.pipeline().map_err(err)?).map_err(err)?;
        let orient = self.inner.ris_orientation().map_err(err)?;
        let est = LocalizationEstimate::from_sweep(&sweep, self.inner.ris_position(), &orient).map_err(err)?;
        let truth = self.inner.ground_truth().map_err(err)?;
        let errors = error_report(&est, &truth).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("selected", sweep.selected)?;
        d.set_item("azimuth_deg", sweep.aod.azimuth.to_degrees())?;
        d.set_item("elevation_deg", sweep.aod.elevation.to_degrees())?;
        d.set_item("distance_m", est.distance)?;
        d.set_item("velocity_mps", est.velocity)?;
        d.set_item("position_m", est.position.to_array())?;
        d.set_item("avg_power", sweep.avg_power_profile())?;
        d.set_item("distance_error_m", errors.distance_error)?;
        d.set_item("angle_error_deg", errors.angle_error.to_degrees())?;
        d.set_item("position_error_m", errors.position_error)?;
        Ok(d)
    }
}

/// Complex beat samples `[m, n, k]`.
#[pyclass(name = "BeatCube")]
struct PyCube {
    inner: BeatCube,
}

#[pymethods]
impl PyCube {
    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        self.inner.samples.dim()
    }

    fn mean_power(&self) -> f64 {
        self.inner.mean_power()
    }

    /// Frame `m` as nested lists of complex numbers, `n` rows by `k` columns.
    fn frame(&self, m: usize) -> PyResult<Vec<Vec<num_complex::Complex64>>> {
        if m >= self.inner.n_angles() {
            return Err(PyValueError::new_err(format!("frame {m} out of range")));
        }
        Ok(self.inner.frame(m).outer_iter().map(|r| r.to_vec()).collect())
    }

    fn save(&self, path: &str) -> PyResult<()> {
        core::io::write_cube(&self.inner, path).map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: core::io::read_cube(path).map_err(err)? })
    }
}

/// Monte Carlo study over `parameter` (`tx_power`, `beam_step` or
/// `n_ris_elements`); `values` uses the CLI syntax, e.g. `"5,10,15"`.
/// Returns one dict per value with MAE and standard error (angles in degrees).
#[pyfunction]
#[pyo3(signature = (scenario, parameter, values, runs, seed=0, aod_range_deg=None))]
fn run_study<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    parameter: &str,
    values: &str,
    runs: usize,
    seed: u64,
    aod_range_deg: Option<f64>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let parameter: StudyParameter = parameter.parse().map_err(err)?;
    let values = ParamValue::parse_list(parameter, values).map_err(err)?;
    let mut study = SweepStudy::new(parameter, values, runs, scenario.inner.clone(), seed);
    if let Some(h) = aod_range_deg {
        study.placement = Placement::RandomAod { half_range_deg: h };
    }
    let result = py.detach(|| experiments::run_study(&study)).map_err(err)?;
    result
        .points
        .iter()
        .map(|p| {
            let d = PyDict::new(py);
            d.set_item("value", p.value.to_string())?;
            d.set_item("runs", p.runs)?;
            d.set_item("failures", p.failures)?;
            d.set_item("distance_mae_m", p.distance.mean)?;
            d.set_item("distance_se_m", p.distance.std_error)?;
            d.set_item("angle_mae_deg", p.angle.mean.to_degrees())?;
            d.set_item("angle_se_deg", p.angle.std_error.to_degrees())?;
            d.set_item("position_mae_m", p.position.mean)?;
            d.set_item("position_se_m", p.position.std_error)?;
            d.set_item("error", p.error.clone())?;
            Ok(d)
        })
        .collect()
}

/// `a(theta)^T diag(omega(phi)) a(theta)` for an `n_az x n_el` half-wave UPA.
#[pyfunction]
#[pyo3(signature = (n_az, n_el, theta_deg, phi_deg, wavelength, elevation_deg=0.0))]
fn beam_gain(n_az: usize, n_el: usize, theta_deg: f64, phi_deg: f64, wavelength: f64, elevation_deg: f64) -> PyResult<num_complex::Complex64> {
    let layout = make_upa(n_az, n_el, wavelength / 2.0).map_err(err)?;
    core::geometry::ris_beam_gain(
        &layout,
        &direction(theta_deg, elevation_deg)?,
        &direction(phi_deg, elevation_deg)?,
        wavelength,
    )
    .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n_az, n_el, azimuth_deg, wavelength, elevation_deg=0.0))]
fn steering_vector(n_az: usize, n_el: usize, azimuth_deg: f64, wavelength: f64, elevation_deg: f64) -> PyResult<Vec<num_complex::Complex64>> {
    let layout = make_upa(n_az, n_el, wavelength / 2.0).map_err(err)?;
    core::geometry::steering_vector(&layout, &direction(azimuth_deg, elevation_deg)?, wavelength).map_err(err)
}

/// `|gamma|^2` of a point target with RCS `rcs` at distance `d`.
#[pyfunction]
fn target_gain_sq(scenario: &PyScenario, rcs: f64, d: f64) -> PyResult<f64> {
    let wf = scenario.inner.waveform();
    channel::target_gain_sq(&scenario.inner.link.budget(), rcs, d, wf.wavelength()).map_err(err)
}

#[pyfunction]
fn dbm_to_watts(dbm: f64) -> f64 {
    channel::dbm_to_watts(dbm)
}

#[pymodule]
fn risloc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyCube>()?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(beam_gain, m)?)?;
    m.add_function(wrap_pyfunction!(steering_vector, m)?)?;
    m.add_function(wrap_pyfunction!(target_gain_sq, m)?)?;
    m.add_function(wrap_pyfunction!(dbm_to_watts, m)?)?;
    Ok(())
}
