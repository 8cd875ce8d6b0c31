//! Pressure trace to DC (static) and AC (dynamic) voltage traces.
//!
//! The DC channel follows the static model at the instantaneous pressure
//! through a first-order lag with separate rise and fall time constants.
//! The AC channel is a superposition of raised-cosine pulses, one per
//! pressure edge: positive for pressing, negative for releasing, with a peak
//! given by the dynamic model at the edge's pressure swing. Charge
//! excitation enters as a persistent gain on both channels.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::charfit::{ExpFit, PiecewiseFit};
use crate::error::{invalid, Result};
use crate::gradient::{gradient_response, BaseModel, GradientStack};
use crate::physics::{
    dynamic_peak_voltage, dynamic_voltage, static_voltage, DynamicParams, PermittivityMode,
    StaticParams,
};
use crate::trace::{Channel, Trace};

pub const DEFAULT_STATIC_GAIN: f64 = 25.4;
pub const DEFAULT_DYNAMIC_GAIN: f64 = 15.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CeMode {
    #[default]
    Off,
    /// Positive charge excitation.
    Pce,
    /// Reverse charge excitation.
    Rce,
}

/// Charge-excitation pre-conditioning, applied as a persistent gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CeState {
    pub mode: CeMode,
    pub static_gain: f64,
    pub dynamic_gain: f64,
}

impl CeState {
    pub fn off() -> Self {
        Self {
            mode: CeMode::Off,
            static_gain: 1.0,
            dynamic_gain: 1.0,
        }
    }

    pub fn pce() -> Self {
        Self {
            mode: CeMode::Pce,
            static_gain: DEFAULT_STATIC_GAIN,
            dynamic_gain: DEFAULT_DYNAMIC_GAIN,
        }
    }

    pub fn rce() -> Self {
        Self {
            mode: CeMode::Rce,
            ..Self::pce()
        }
    }

    pub fn polarity(&self) -> f64 {
        match self.mode {
            CeMode::Rce => -1.0,
            _ => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            CeMode::Off if self.static_gain != 1.0 || self.dynamic_gain != 1.0 => {
                Err(invalid("charge excitation gains must be 1 when off"))
            }
            CeMode::Pce | CeMode::Rce if !(self.static_gain >= 1.0 && self.dynamic_gain >= 1.0) => {
                Err(invalid("charge excitation gains must be >= 1"))
            }
            _ => Ok(()),
        }
    }
}

impl Default for CeState {
    fn default() -> Self {
        Self::off()
    }
}

/// What the DC channel tracks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaticTarget {
    /// Parallel-plate model with fixed transferred charge.
    Physics(StaticParams),
    Gradient {
        stack: GradientStack,
        params: StaticParams,
    },
    /// Measured voltage-pressure curve.
    Empirical(PiecewiseFit),
}

impl StaticTarget {
    fn evaluate(&self, pressure_pa: f64) -> Result<f64> {
        match self {
            StaticTarget::Physics(p) => static_voltage(p, pressure_pa),
            StaticTarget::Gradient { stack, params } => {
                gradient_response(stack, &BaseModel::Static(*params), pressure_pa)
            }
            StaticTarget::Empirical(fit) => Ok(fit.evaluate(pressure_pa)),
        }
    }
}

/// What sets the AC pulse peak for a given pressure swing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicTarget {
    /// V_max·(1 − e^(−kP)).
    Saturating(DynamicParams),
    /// σ(P)·(x + d)/(ε0·ε_eff).
    Peak {
        params: DynamicParams,
        mode: PermittivityMode,
    },
    Gradient {
        stack: GradientStack,
        params: DynamicParams,
        mode: PermittivityMode,
    },
    Empirical(ExpFit),
}

impl DynamicTarget {
    fn evaluate(&self, pressure_pa: f64) -> Result<f64> {
        match self {
            DynamicTarget::Saturating(p) => Ok(dynamic_voltage(p, pressure_pa)),
            DynamicTarget::Peak { params, mode } => {
                Ok(dynamic_peak_voltage(params, pressure_pa, *mode))
            }
            DynamicTarget::Gradient {
                stack,
                params,
                mode,
            } => gradient_response(stack, &BaseModel::Dynamic(*params, *mode), pressure_pa),
            DynamicTarget::Empirical(fit) => Ok(fit.evaluate(pressure_pa)),
        }
    }
}

/// Transduction models plus the output gains currently in effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransducerParams {
    pub static_target: StaticTarget,
    pub dynamic_target: DynamicTarget,
    pub static_gain: f64,
    pub dynamic_gain: f64,
    /// +1 or −1; sign of the pulse produced by pressing.
    pub ac_polarity: f64,
}

impl TransducerParams {
    pub fn new(static_target: StaticTarget, dynamic_target: DynamicTarget) -> Self {
        Self {
            static_target,
            dynamic_target,
            static_gain: 1.0,
            dynamic_gain: 1.0,
            ac_polarity: 1.0,
        }
    }

    /// Settled DC voltage at `pressure_pa`. No contact (P ≤ 0) gives 0.
    pub fn dc_level(&self, pressure_pa: f64) -> Result<f64> {
        if pressure_pa <= 0.0 {
            return Ok(0.0);
        }
        Ok(self.static_gain * self.static_target.evaluate(pressure_pa)?)
    }

    /// Unsigned AC pulse peak for a pressure swing of `swing_pa`.
    pub fn ac_peak(&self, swing_pa: f64) -> Result<f64> {
        if swing_pa <= 0.0 {
            return Ok(0.0);
        }
        Ok(self.dynamic_gain * self.dynamic_target.evaluate(swing_pa)?)
    }
}

impl Default for TransducerParams {
    fn default() -> Self {
        Self::new(
            StaticTarget::Physics(StaticParams::default()),
            DynamicTarget::Saturating(DynamicParams::default()),
        )
    }
}

/// Scale output amplitudes by the excitation gains and set the AC polarity.
/// `Off` returns the parameters unchanged.
pub fn apply_charge_excitation(params: &TransducerParams, ce: &CeState) -> TransducerParams {
    match ce.mode {
        CeMode::Off => params.clone(),
        CeMode::Pce | CeMode::Rce => TransducerParams {
            static_gain: params.static_gain * ce.static_gain,
            dynamic_gain: params.dynamic_gain * ce.dynamic_gain,
            ac_polarity: ce.polarity(),
            ..params.clone()
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseDynamics {
    pub tau_rise_s: f64,
    pub tau_fall_s: f64,
    pub noise_rms_v: f64,
    pub seed: u64,
    /// Width of each AC raised-cosine pulse.
    pub pulse_width_s: f64,
    /// Smallest pressure swing treated as an edge.
    pub edge_threshold_pa: f64,
}

impl ResponseDynamics {
    /// Time constants giving 10–90 % times of 83 ms (rise) and 43 ms (fall).
    pub fn reference() -> Self {
        Self {
            tau_rise_s: 0.083 / 9f64.ln(),
            tau_fall_s: 0.043 / 9f64.ln(),
            noise_rms_v: 0.0,
            seed: 0,
            pulse_width_s: 0.08,
            edge_threshold_pa: 0.01,
        }
    }

    /// Pulse width of 0.4 excitation periods.
    pub fn pulse_width_for(frequency_hz: f64) -> f64 {
        0.4 / frequency_hz
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_rise_s > 0.0 && self.tau_fall_s > 0.0) {
            return Err(invalid("response time constants must be > 0"));
        }
        if !(self.noise_rms_v >= 0.0 && self.noise_rms_v.is_finite()) {
            return Err(invalid("noise rms must be >= 0"));
        }
        if !(self.pulse_width_s > 0.0 && self.pulse_width_s.is_finite()) {
            return Err(invalid("pulse width must be > 0"));
        }
        if !(self.edge_threshold_pa > 0.0) {
            return Err(invalid("edge threshold must be > 0"));
        }
        Ok(())
    }
}

impl Default for ResponseDynamics {
    fn default() -> Self {
        Self::reference()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutput {
    pub dc: Trace,
    pub ac: Trace,
}

/// A monotone pressure excursion between two turning points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureEdge {
    pub start: usize,
    pub end: usize,
    /// Sample just after the steepest step inside the edge.
    pub steepest: usize,
    /// Signed pressure change, Pa.
    pub swing_pa: f64,
}

/// Turning-point segmentation of a pressure series: an edge is recorded
/// once the series has moved at least `threshold` away from the last
/// extreme in the opposite direction.
pub fn pressure_edges(p: &[f64], threshold: f64) -> Vec<PressureEdge> {
    #[derive(Clone, Copy, PartialEq)]
    enum Dir {
        Unknown,
        Up,
        Down,
    }
    let mut edges = Vec::new();
    if p.len() < 2 {
        return edges;
    }
    let mut emit = |start: usize, end: usize| {
        let steepest = (start..end)
            .max_by(|&a, &b| {
                let da = (p[a + 1] - p[a]).abs();
                let db = (p[b + 1] - p[b]).abs();
                // earliest index wins ties
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .map_or(end, |j| j + 1);
        edges.push(PressureEdge {
            start,
            end,
            steepest,
            swing_pa: p[end] - p[start],
        });
    };

    let mut dir = Dir::Unknown;
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut pivot = 0usize;
    let mut cand = 0usize;
    for i in 1..p.len() {
        match dir {
            Dir::Unknown => {
                if p[i] < p[lo] {
                    lo = i;
                }
                if p[i] > p[hi] {
                    hi = i;
                }
                if p[i] - p[lo] >= threshold {
                    dir = Dir::Up;
                    pivot = lo;
                    cand = i;
                } else if p[hi] - p[i] >= threshold {
                    dir = Dir::Down;
                    pivot = hi;
                    cand = i;
                }
            }
            Dir::Up => {
                if p[i] > p[cand] {
                    cand = i;
                } else if p[cand] - p[i] >= threshold {
                    emit(pivot, cand);
                    pivot = cand;
                    cand = i;
                    dir = Dir::Down;
                }
            }
            Dir::Down => {
                if p[i] < p[cand] {
                    cand = i;
                } else if p[i] - p[cand] >= threshold {
                    emit(pivot, cand);
                    pivot = cand;
                    cand = i;
                    dir = Dir::Up;
                }
            }
        }
    }
    if dir != Dir::Unknown {
        emit(pivot, cand);
    }
    edges
}

/// Simulate both output channels for a pressure trace.
pub fn simulate(
    pressure: &Trace,
    params: &TransducerParams,
    ce: &CeState,
    dynamics: &ResponseDynamics,
) -> Result<SimOutput> {
    if pressure.channel != Channel::PressurePa {
        return Err(invalid(format!(
            "simulate expects a {} trace, got {}",
            Channel::PressurePa,
            pressure.channel
        )));
    }
    pressure.validate()?;
    ce.validate()?;
    dynamics.validate()?;
    let params = apply_charge_excitation(params, ce);
    let n = pressure.len();
    let dt = pressure.dt;

    let rise = -(-dt / dynamics.tau_rise_s).exp_m1();
    let fall = -(-dt / dynamics.tau_fall_s).exp_m1();
    let mut dc = Vec::with_capacity(n);
    let mut state = 0.0f64;
    for &p in &pressure.samples {
        let target = params.dc_level(p)?;
        let gain = if target.abs() > state.abs() { rise } else { fall };
        state += (target - state) * gain;
        dc.push(state);
    }

    let mut ac = vec![0.0; n];
    let half_width = dynamics.pulse_width_s / 2.0;
    let reach = (half_width / dt).ceil() as usize;
    for edge in pressure_edges(&pressure.samples, dynamics.edge_threshold_pa) {
        let peak = params.ac_peak(edge.swing_pa.abs())? * params.ac_polarity * edge.swing_pa.signum();
        if peak == 0.0 {
            continue;
        }
        let centre = edge.steepest;
        let first = centre.saturating_sub(reach);
        let last = (centre + reach).min(n - 1);
        for (j, slot) in ac.iter_mut().enumerate().take(last + 1).skip(first) {
            let offset = (j as f64 - centre as f64) * dt;
            if offset.abs() < half_width {
                *slot += peak * (1.0 + (PI * offset / half_width).cos()) / 2.0;
            }
        }
    }

    if dynamics.noise_rms_v > 0.0 {
        let normal = Normal::new(0.0, dynamics.noise_rms_v).map_err(|e| invalid(e.to_string()))?;
        for (stream, channel) in [(1u64, &mut dc), (2u64, &mut ac)] {
            let mut rng = ChaCha8Rng::seed_from_u64(dynamics.seed);
            rng.set_stream(stream);
            for v in channel.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }

    Ok(SimOutput {
        dc: pressure.with_samples(dc, Channel::VoltageDc),
        ac: pressure.with_samples(ac, Channel::VoltageAc),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excitation::{generate, ExcitationKind, ExcitationSpec};

    fn step_trace(level: f64, on: usize, off: usize, n: usize, rate: f64) -> Trace {
        let samples = (0..n).map(|i| if i >= on && i < off { level } else { 0.0 }).collect();
        Trace::new(0.0, 1.0 / rate, samples, Channel::PressurePa).unwrap()
    }

    fn quiet() -> ResponseDynamics {
        ResponseDynamics::reference()
    }

    #[test]
    fn off_is_identity_and_gains_follow_mode() {
        let p = TransducerParams::default();
        assert_eq!(apply_charge_excitation(&p, &CeState::off()), p);
        let pce = apply_charge_excitation(&p, &CeState::pce());
        assert_eq!((pce.static_gain, pce.dynamic_gain, pce.ac_polarity), (25.4, 15.2, 1.0));
        let rce = apply_charge_excitation(&p, &CeState::rce());
        assert_eq!((rce.static_gain, rce.dynamic_gain, rce.ac_polarity), (25.4, 15.2, -1.0));
    }

    #[test]
    fn rce_inverts_ac_only() {
        let p = TransducerParams::default();
        let trace = step_trace(5000.0, 100, 600, 1000, 1000.0);
        let a = simulate(&trace, &p, &CeState::pce(), &quiet()).unwrap();
        let b = simulate(&trace, &p, &CeState::rce(), &quiet()).unwrap();
        assert_eq!(a.dc, b.dc);
        for (x, y) in a.ac.samples.iter().zip(&b.ac.samples) {
            assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn rejects_non_pressure_input() {
        let t = Trace::new(0.0, 1e-3, vec![0.0; 10], Channel::VoltageDc).unwrap();
        assert!(simulate(&t, &TransducerParams::default(), &CeState::off(), &quiet()).is_err());
    }

    #[test]
    fn step_reaches_ninety_percent_near_83_ms() {
        let p = TransducerParams::default();
        let trace = step_trace(5000.0, 0, 2000, 2000, 1000.0);
        let out = simulate(&trace, &p, &CeState::off(), &quiet()).unwrap();
        let target = p.dc_level(5000.0).unwrap();
        let t90 = out.dc.samples.iter().position(|&v| v >= 0.9 * target).unwrap() as f64 * 1e-3;
        let t10 = out.dc.samples.iter().position(|&v| v >= 0.1 * target).unwrap() as f64 * 1e-3;
        assert!((t90 - t10 - 0.083).abs() <= 2e-3, "t10={t10} t90={t90}");
    }

    #[test]
    fn zero_pressure_gives_zero_output() {
        let trace = Trace::new(0.0, 1e-3, vec![0.0; 500], Channel::PressurePa).unwrap();
        let out = simulate(&trace, &TransducerParams::default(), &CeState::pce(), &quiet()).unwrap();
        assert!(out.dc.samples.iter().all(|&v| v == 0.0));
        assert!(out.ac.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn symmetric_tap_has_zero_net_area() {
        let spec = ExcitationSpec {
            kind: ExcitationKind::Square,
            frequency_hz: 1.0,
            duty: 0.5,
            duration_s: 1.2,
            ..Default::default()
        };
        let trace = generate(&spec).unwrap();
        let out = simulate(&trace, &TransducerParams::default(), &CeState::off(), &quiet()).unwrap();
        let net: f64 = out.ac.samples.iter().sum::<f64>() * out.ac.dt;
        let positive: f64 = out.ac.samples.iter().filter(|&&v| v > 0.0).sum::<f64>() * out.ac.dt;
        assert!(positive > 0.0);
        assert!(net.abs() <= 0.01 * positive, "net={net} single={positive}");
    }

    #[test]
    fn one_pulse_per_edge() {
        let f = 3.0;
        let spec = ExcitationSpec {
            kind: ExcitationKind::Sine,
            frequency_hz: f,
            duration_s: 4.0,
            ..Default::default()
        };
        let trace = generate(&spec).unwrap();
        let dynamics = ResponseDynamics {
            pulse_width_s: ResponseDynamics::pulse_width_for(f),
            ..quiet()
        };
        let out = simulate(&trace, &TransducerParams::default(), &CeState::off(), &dynamics).unwrap();
        let peaks = out
            .ac
            .samples
            .windows(3)
            .filter(|w| w[1].abs() > w[0].abs() && w[1].abs() >= w[2].abs() && w[1].abs() > 1.0)
            .count();
        // 4 s at 3 Hz: 12 presses and 12 releases, the last release truncated at the end
        assert!((peaks as f64 - 2.0 * f * 4.0).abs() <= 1.0, "peaks={peaks}");
    }

    #[test]
    fn ac_peak_follows_dynamic_model() {
        let p = TransducerParams::default();
        let trace = step_trace(2000.0, 200, 700, 1000, 1000.0);
        let out = simulate(&trace, &p, &CeState::off(), &quiet()).unwrap();
        let max = out.ac.samples.iter().cloned().fold(f64::MIN, f64::max);
        let min = out.ac.samples.iter().cloned().fold(f64::MAX, f64::min);
        let expect = dynamic_voltage(&DynamicParams::default(), 2000.0);
        assert!((max - expect).abs() < 1e-12 * expect);
        assert!((min + expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn noise_is_seeded() {
        let trace = step_trace(1000.0, 100, 400, 500, 1000.0);
        let noisy = ResponseDynamics { noise_rms_v: 0.5, seed: 7, ..quiet() };
        let p = TransducerParams::default();
        let a = simulate(&trace, &p, &CeState::off(), &noisy).unwrap();
        let b = simulate(&trace, &p, &CeState::off(), &noisy).unwrap();
        assert_eq!(a, b);
        let c = simulate(&trace, &p, &CeState::off(), &ResponseDynamics { seed: 8, ..noisy }).unwrap();
        assert_ne!(a.dc, c.dc);
        let clean = simulate(&trace, &p, &CeState::off(), &quiet()).unwrap();
        let resid: Vec<f64> = a.ac.samples.iter().zip(&clean.ac.samples).map(|(x, y)| x - y).collect();
        let rms = (resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64).sqrt();
        assert!((rms - 0.5).abs() < 0.06, "rms={rms}");
    }

    #[test]
    fn edges_of_noisy_plateau() {
        let p = [0.0, 0.0, 5.0, 5.2, 4.9, 5.1, 0.1, 0.0, 0.05];
        let edges = pressure_edges(&p, 1.0);
        assert_eq!(edges.len(), 2);
        assert_eq!((edges[0].start, edges[0].end, edges[0].steepest), (0, 3, 2));
        assert_eq!((edges[1].start, edges[1].end), (3, 7));
        assert!(edges[1].swing_pa < 0.0);
    }
}
