//! RC pulse shaping of the AC channel.
//!
//! The sensor is treated as a charge source. Each input pulse delivers
//! Q₀ = C_sensor·V_peak onto the sensor capacitance in parallel with the
//! tuning capacitor; the node then discharges through the series resistor.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::trace::{Channel, Trace};

pub const DEFAULT_SENSOR_CAPACITANCE_F: f64 = 100e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditioningNetwork {
    pub series_r_ohm: f64,
    pub parallel_c_f: f64,
    pub sensor_c_f: f64,
    /// Input excursions smaller than this are not treated as pulses.
    pub pulse_threshold_v: f64,
}

impl Default for ConditioningNetwork {
    fn default() -> Self {
        Self {
            series_r_ohm: 100e6,
            parallel_c_f: 0.0,
            sensor_c_f: DEFAULT_SENSOR_CAPACITANCE_F,
            pulse_threshold_v: 0.05,
        }
    }
}

impl ConditioningNetwork {
    pub fn validate(&self) -> Result<()> {
        if !(self.series_r_ohm > 0.0 && self.series_r_ohm.is_finite()) {
            return Err(invalid("series resistance must be > 0"));
        }
        if !(self.parallel_c_f >= 0.0 && self.parallel_c_f.is_finite()) {
            return Err(invalid("parallel capacitance must be >= 0"));
        }
        if !(self.sensor_c_f > 0.0 && self.sensor_c_f.is_finite()) {
            return Err(invalid("sensor capacitance must be > 0"));
        }
        if !(self.pulse_threshold_v > 0.0) {
            return Err(invalid("pulse threshold must be > 0"));
        }
        Ok(())
    }

    pub fn total_capacitance(&self) -> f64 {
        self.sensor_c_f + self.parallel_c_f
    }

    pub fn time_constant(&self) -> f64 {
        self.series_r_ohm * self.total_capacitance()
    }

    /// Output amplitude for a pulse carrying `charge_c`.
    pub fn amplitude_for_charge(&self, charge_c: f64) -> f64 {
        charge_c / self.total_capacitance()
    }
}

/// One same-sign excursion of the input beyond the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub peak_index: usize,
    pub peak_v: f64,
}

pub fn detect_pulses(trace: &Trace, threshold: f64) -> Vec<Pulse> {
    let mut pulses = Vec::new();
    let mut current: Option<Pulse> = None;
    for (i, &v) in trace.samples.iter().enumerate() {
        let active = v.abs() > threshold;
        match (&mut current, active) {
            (Some(p), true) if p.peak_v.signum() == v.signum() => {
                if v.abs() > p.peak_v.abs() {
                    *p = Pulse { peak_index: i, peak_v: v };
                }
            }
            (Some(_), true) => {
                pulses.extend(current.take());
                current = Some(Pulse { peak_index: i, peak_v: v });
            }
            (None, true) => current = Some(Pulse { peak_index: i, peak_v: v }),
            (_, false) => pulses.extend(current.take()),
        }
    }
    pulses.extend(current);
    pulses
}

/// Shape an AC voltage trace through the RC network.
pub fn shape_pulse(ac: &Trace, net: &ConditioningNetwork) -> Result<Trace> {
    if ac.channel != Channel::VoltageAc {
        return Err(invalid(format!(
            "shape_pulse expects a {} trace, got {}",
            Channel::VoltageAc,
            ac.channel
        )));
    }
    net.validate()?;
    let tau = net.time_constant();
    let decay = (-ac.dt / tau).exp();
    let mut injected = vec![0.0; ac.len()];
    for p in detect_pulses(ac, net.pulse_threshold_v) {
        injected[p.peak_index] += net.amplitude_for_charge(net.sensor_c_f * p.peak_v);
    }
    let mut out = Vec::with_capacity(ac.len());
    let mut state = 0.0;
    for jump in injected {
        state = state * decay + jump;
        out.push(state);
    }
    Ok(ac.with_samples(out, Channel::VoltageAc))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseMetrics {
    pub amplitude_v: f64,
    /// Time from the peak until the magnitude first drops to half; `None`
    /// when the trace ends first.
    pub half_max_width_s: Option<f64>,
}

/// Peak and half-maximum decay width of the largest pulse in `trace`.
pub fn pulse_metrics(trace: &Trace) -> Option<PulseMetrics> {
    let s = &trace.samples;
    let peak = (0..s.len()).max_by(|&a, &b| s[a].abs().total_cmp(&s[b].abs()))?;
    let amp = s[peak].abs();
    if amp == 0.0 {
        return None;
    }
    let half = amp / 2.0;
    let half_max_width_s = (peak + 1..s.len()).find(|&i| s[i].abs() <= half).map(|i| {
        let (a, b) = (s[i - 1].abs(), s[i].abs());
        let frac = if a != b { (a - half) / (a - b) } else { 0.0 };
        ((i - 1 - peak) as f64 + frac) * trace.dt
    });
    Some(PulseMetrics {
        amplitude_v: s[peak],
        half_max_width_s,
    })
}

/// Charge carried by the shaped output through the series resistor
/// (trapezoidal integral of V/R).
pub fn delivered_charge(shaped: &Trace, net: &ConditioningNetwork) -> f64 {
    let s = &shaped.samples;
    let sum: f64 = s.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
    sum * shaped.dt / net.series_r_ohm
}
