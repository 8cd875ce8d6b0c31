//! Python bindings: `import isd_twin`.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use isd_core::charfit::{self, PvSamples, SensingMode};
use isd_core::control::{self, CommandKind, EventKind};
use isd_core::excitation::ExcitationKind;
use isd_core::{physics, Channel};

fn py_err(e: isd_core::Error) -> PyErr {
    if e.is_io() {
        PyIOError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for isd_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Resolved run configuration.
#[pyclass(name = "Config", module = "isd_twin", frozen)]
struct PyConfig(isd_core::config::Config);

#[pymethods]
impl PyConfig {
    /// Parse `section.key = value` TOML text; empty text gives the defaults.
    #[new]
    #[pyo3(signature = (text = ""))]
    fn new(text: &str) -> PyResult<Self> {
        isd_core::config::Config::parse(text).py().map(Self)
    }

    /// Load a file (or the defaults when `path` is None), honouring `ISD_SEED`.
    #[staticmethod]
    #[pyo3(signature = (path = None))]
    fn load(path: Option<PathBuf>) -> PyResult<Self> {
        isd_core::config::Config::load(path.as_deref()).py().map(Self)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    fn hash(&self) -> String {
        self.0.hash()
    }

    fn document(&self) -> String {
        self.0.to_document()
    }

    fn __repr__(&self) -> String {
        format!("Config(seed={}, hash={})", self.0.seed, &self.0.hash()[..12])
    }
}

/// Uniformly sampled time series.
#[pyclass(name = "Trace", module = "isd_twin", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTrace(isd_core::Trace);

#[pymethods]
impl PyTrace {
    /// `channel` is a column name such as `pressure_pa` or `voltage_dc_v`.
    #[new]
    fn new(t0: f64, dt: f64, samples: Vec<f64>, channel: &str) -> PyResult<Self> {
        let channel = Channel::from_column(channel)
            .ok_or_else(|| PyValueError::new_err(format!("unknown channel `{channel}`")))?;
        isd_core::Trace::new(t0, dt, samples, channel).py().map(Self)
    }

    #[getter]
    fn t0(&self) -> f64 {
        self.0.t0
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.0.dt
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.0.samples.clone()
    }

    #[getter]
    fn channel(&self) -> &'static str {
        self.0.channel.column()
    }

    fn times(&self) -> Vec<f64> {
        self.0.times().collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Trace({}, n={}, dt={})", self.0.channel, self.0.len(), self.0.dt)
    }
}

#[pyclass(name = "PiecewiseFit", module = "isd_twin", frozen)]
struct PyPiecewiseFit(charfit::PiecewiseFit);

#[pymethods]
impl PyPiecewiseFit {
    #[getter]
    fn breakpoints_pa(&self) -> Vec<f64> {
        self.0.breakpoints_pa.clone()
    }

    #[getter]
    fn slopes_v_per_pa(&self) -> Vec<f64> {
        self.0.slopes_v_per_pa.clone()
    }

    #[getter]
    fn intercepts_v(&self) -> Vec<f64> {
        self.0.intercepts_v.clone()
    }

    #[getter]
    fn rmse_v(&self) -> f64 {
        self.0.rmse_v
    }

    fn evaluate(&self, pressure_pa: f64) -> f64 {
        self.0.evaluate(pressure_pa)
    }
}

#[pyclass(name = "ExpFit", module = "isd_twin", frozen)]
struct PyExpFit(charfit::ExpFit);

#[pymethods]
impl PyExpFit {
    #[getter]
    fn saturation_voltage_v(&self) -> f64 {
        self.0.saturation_voltage_v
    }

    #[getter]
    fn k_per_pa(&self) -> f64 {
        self.0.k_per_pa
    }

    #[getter]
    fn rmse_v(&self) -> f64 {
        self.0.rmse_v
    }

    #[getter]
    fn at_search_bound(&self) -> bool {
        self.0.at_search_bound
    }

    fn evaluate(&self, pressure_pa: f64) -> f64 {
        self.0.evaluate(pressure_pa)
    }

    fn sensitivity(&self, pressure_pa: f64) -> f64 {
        self.0.sensitivity(pressure_pa)
    }
}

#[pyclass(name = "Event", module = "isd_twin", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEvent(control::Event);

#[pymethods]
impl PyEvent {
    /// `static_plateau` or `dynamic_spike`.
    #[getter]
    fn kind(&self) -> &'static str {
        match self.0.kind {
            EventKind::StaticPlateau => "static_plateau",
            EventKind::DynamicSpike => "dynamic_spike",
        }
    }

    #[getter]
    fn t_start(&self) -> f64 {
        self.0.t_start
    }

    #[getter]
    fn t_end(&self) -> f64 {
        self.0.t_end
    }

    #[getter]
    fn amplitude_v(&self) -> f64 {
        self.0.amplitude_v
    }

    #[getter]
    fn polarity(&self) -> i8 {
        self.0.polarity
    }

    #[getter]
    fn bipolar(&self) -> bool {
        self.0.bipolar
    }

    fn __repr__(&self) -> String {
        format!("Event({}, {:.3}-{:.3} s, {:.4} V)", self.kind(), self.0.t_start, self.0.t_end, self.0.amplitude_v)
    }
}

/// Static-channel voltage of the configured parallel-plate model.
#[pyfunction]
fn static_voltage(cfg: &PyConfig, pressure_pa: f64) -> PyResult<f64> {
    physics::static_voltage(&cfg.0.static_params(), pressure_pa).py()
}

/// Saturating dynamic-channel peak voltage.
#[pyfunction]
fn dynamic_voltage(cfg: &PyConfig, pressure_pa: f64) -> f64 {
    physics::dynamic_voltage(&cfg.0.dynamic_params(), pressure_pa)
}

/// DC level of the configured transducer (static model and CE gain applied).
#[pyfunction]
fn dc_level(cfg: &PyConfig, pressure_pa: f64) -> PyResult<f64> {
    cfg.0.transducer().py()?.dc_level(pressure_pa).py()
}

#[pyfunction]
#[pyo3(signature = (cfg, kind = None, amplitude_pa = None, frequency_hz = None, duration_s = None, sample_rate_hz = None))]
fn generate(
    cfg: &PyConfig,
    kind: Option<&str>,
    amplitude_pa: Option<f64>,
    frequency_hz: Option<f64>,
    duration_s: Option<f64>,
    sample_rate_hz: Option<f64>,
) -> PyResult<PyTrace> {
    let mut spec = cfg.0.excitation_spec();
    if let Some(k) = kind {
        spec.kind = match k {
            "square" => ExcitationKind::Square,
            "sine" => ExcitationKind::Sine,
            "weight_steps" => ExcitationKind::WeightSteps,
            "tap_train" => ExcitationKind::TapTrain,
            "constant" => ExcitationKind::Constant,
            other => return Err(PyValueError::new_err(format!("unknown excitation kind `{other}`"))),
        };
    }
    spec.amplitude_pa = amplitude_pa.unwrap_or(spec.amplitude_pa);
    spec.frequency_hz = frequency_hz.unwrap_or(spec.frequency_hz);
    spec.duration_s = duration_s.unwrap_or(spec.duration_s);
    spec.sample_rate_hz = sample_rate_hz.unwrap_or(spec.sample_rate_hz);
    isd_core::excitation::generate(&spec).py().map(PyTrace)
}

/// Returns `(dc, ac)` voltage traces.
#[pyfunction]
fn simulate(cfg: &PyConfig, pressure: &PyTrace) -> PyResult<(PyTrace, PyTrace)> {
    let out = isd_core::transducer::simulate(
        &pressure.0,
        &cfg.0.transducer().py()?,
        &cfg.0.ce_state(),
        &cfg.0.response_dynamics(),
    )
    .py()?;
    Ok((PyTrace(out.dc), PyTrace(out.ac)))
}

#[pyfunction]
fn shape_pulse(cfg: &PyConfig, ac: &PyTrace) -> PyResult<PyTrace> {
    isd_core::conditioning::shape_pulse(&ac.0, &cfg.0.conditioning_network()).py().map(PyTrace)
}

/// Storage-capacitor voltage over time.
#[pyfunction]
fn harvest(cfg: &PyConfig) -> PyResult<PyTrace> {
    isd_core::harvest::harvest(&cfg.0.harvest_config()).py().map(PyTrace)
}

fn pv(pressures_pa: Vec<f64>, voltages_v: Vec<f64>, mode: SensingMode) -> PyResult<PvSamples> {
    if pressures_pa.len() != voltages_v.len() {
        return Err(PyValueError::new_err("pressure and voltage arrays differ in length"));
    }
    PvSamples::from_pairs(pressures_pa.into_iter().zip(voltages_v), mode).py()
}

#[pyfunction]
#[pyo3(signature = (pressures_pa, voltages_v, segments = 3))]
fn fit_piecewise(pressures_pa: Vec<f64>, voltages_v: Vec<f64>, segments: usize) -> PyResult<PyPiecewiseFit> {
    let data = pv(pressures_pa, voltages_v, SensingMode::Static)?;
    charfit::fit_piecewise(&data, segments).py().map(PyPiecewiseFit)
}

#[pyfunction]
fn fit_exponential(pressures_pa: Vec<f64>, voltages_v: Vec<f64>) -> PyResult<PyExpFit> {
    let data = pv(pressures_pa, voltages_v, SensingMode::Dynamic)?;
    charfit::fit_exponential(&data).py().map(PyExpFit)
}

/// `(rise_ms, fall_ms)` of a single press-and-release step.
#[pyfunction]
fn response_times(step: &PyTrace) -> PyResult<(f64, f64)> {
    let r = charfit::extract_response_times(&step.0).py()?;
    Ok((r.rise_ms, r.fall_ms))
}

#[pyfunction]
fn detection_limit(cfg: &PyConfig) -> PyResult<f64> {
    charfit::detection_limit(
        &cfg.0.transducer().py()?,
        &cfg.0.response_dynamics(),
        cfg.0.detection.criterion,
        &cfg.0.detection_grid(),
    )
    .py()
}

#[pyfunction]
fn classify(cfg: &PyConfig, dc: &PyTrace, ac: &PyTrace) -> PyResult<Vec<PyEvent>> {
    let events = control::classify(&dc.0, &ac.0, &cfg.0.classifier_config()).py()?;
    Ok(events.into_iter().map(PyEvent).collect())
}

/// Map events to commands, pass them through the link and drive the hand.
///
/// Returns `(commands, trajectory)`: commands are `(t, "bend", level)` or
/// `(t, "trigger", gesture)` tuples; the trajectory is a list of
/// `(t, [five angles in degrees], grasp_closed)`.
#[allow(clippy::type_complexity)]
#[pyfunction]
fn run_control(
    py: Python<'_>,
    cfg: &PyConfig,
    dc: &PyTrace,
    events: Vec<Py<PyEvent>>,
) -> PyResult<(Vec<(f64, &'static str, f64)>, Vec<(f64, [f64; 5], bool)>)> {
    let events: Vec<control::Event> = events.iter().map(|e| e.bind(py).get().0).collect();
    let sent = control::map_control(&events, &dc.0, &cfg.0.mapping_config()).py()?;
    let delivered = control::transmit(&sent, &cfg.0.channel_model()).py()?;
    let hand = control::actuate(&delivered, control::HandState::open(), &cfg.0.actuator_config()).py()?;
    let commands = delivered
        .iter()
        .map(|c| match c.kind {
            CommandKind::Bend(level) => (c.t, "bend", level),
            CommandKind::Trigger(g) => (c.t, "trigger", f64::from(g)),
        })
        .collect();
    let trajectory = hand
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| (hand.time(i), s.finger_angles_deg, s.grasp_closed))
        .collect();
    Ok((commands, trajectory))
}

#[pymodule]
fn isd_twin(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyTrace>()?;
    m.add_class::<PyPiecewiseFit>()?;
    m.add_class::<PyExpFit>()?;
    m.add_class::<PyEvent>()?;
    m.add_function(wrap_pyfunction!(static_voltage, m)?)?;
    m.add_function(wrap_pyfunction!(dynamic_voltage, m)?)?;
    m.add_function(wrap_pyfunction!(dc_level, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(shape_pulse, m)?)?;
    m.add_function(wrap_pyfunction!(harvest, m)?)?;
    m.add_function(wrap_pyfunction!(fit_piecewise, m)?)?;
    m.add_function(wrap_pyfunction!(fit_exponential, m)?)?;
    m.add_function(wrap_pyfunction!(response_times, m)?)?;
    m.add_function(wrap_pyfunction!(detection_limit, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(run_control, m)?)?;
    Ok(())
}
