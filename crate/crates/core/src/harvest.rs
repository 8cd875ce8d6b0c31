//! Ideal charge-pump model of a bridge rectifier feeding a storage capacitor.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::trace::{Channel, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarvestConfig {
    pub storage_c_f: f64,
    pub pulses_per_cycle: u32,
    pub charge_per_pulse_c: f64,
    pub frequency_hz: f64,
    pub duration_s: f64,
    /// Forward drop of each rectifier diode; two conduct per pulse.
    pub diode_drop_v: f64,
    /// Open-circuit source peak. `None` means unlimited headroom.
    pub source_peak_v: Option<f64>,
    pub sample_rate_hz: f64,
}

impl Default for HarvestConfig {
    fn default() -> Self {
        Self {
            storage_c_f: 2.2e-6,
            pulses_per_cycle: 2,
            charge_per_pulse_c: 43.1e-9,
            frequency_hz: 6.0,
            duration_s: 60.0,
            diode_drop_v: 0.0,
            source_peak_v: None,
            sample_rate_hz: 100.0,
        }
    }
}

impl HarvestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.frequency_hz > 0.0 && self.frequency_hz.is_finite()) {
            return Err(Error::Config("harvest.frequency_hz must be > 0".into()));
        }
        if !(self.storage_c_f > 0.0 && self.storage_c_f.is_finite()) {
            return Err(invalid("storage capacitance must be > 0"));
        }
        if !matches!(self.pulses_per_cycle, 1 | 2) {
            return Err(invalid("pulses per cycle must be 1 or 2"));
        }
        if !(self.charge_per_pulse_c >= 0.0 && self.charge_per_pulse_c.is_finite()) {
            return Err(invalid("charge per pulse must be >= 0"));
        }
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return Err(invalid("duration must be >= 0"));
        }
        if !(self.diode_drop_v >= 0.0) {
            return Err(invalid("diode drop must be >= 0"));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(invalid("sample rate must be > 0"));
        }
        Ok(())
    }

    pub fn pulse_rate_hz(&self) -> f64 {
        self.pulses_per_cycle as f64 * self.frequency_hz
    }
}

/// Storage-capacitor voltage sampled from t = 0 to `duration_s` inclusive.
///
/// Pulse j (1-based) arrives at t = j / pulse_rate and is delivered only
/// while the source peak exceeds the stored voltage plus two diode drops.
pub fn harvest(cfg: &HarvestConfig) -> Result<Trace> {
    cfg.validate()?;
    let dt = 1.0 / cfg.sample_rate_hz;
    let n = (cfg.duration_s * cfg.sample_rate_hz).round() as usize + 1;
    let rate = cfg.pulse_rate_hz();
    let step = cfg.charge_per_pulse_c / cfg.storage_c_f;
    let headroom = cfg.source_peak_v.map(|peak| peak - 2.0 * cfg.diode_drop_v);

    let mut samples = Vec::with_capacity(n);
    let mut delivered: u64 = 0;
    let mut arrived: u64 = 0;
    for i in 0..n {
        // pulses arriving up to this sample; the epsilon absorbs t·rate round-off
        let due = ((i as f64 * dt) * rate + 1e-9).floor() as u64;
        while arrived < due {
            arrived += 1;
            if headroom.is_none_or(|h| h > delivered as f64 * step) {
                delivered += 1;
            }
        }
        samples.push(delivered as f64 * step);
    }
    Trace::new(0.0, dt, samples, Channel::VoltageDc)
}
