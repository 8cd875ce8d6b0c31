//! Synthetic pressure protocols: square-wave and sinusoidal exciters,
//! calibrated weight steps and finger-tap trains.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::trace::{Channel, Trace};

/// Standard gravity, m/s².
pub const STANDARD_GRAVITY: f64 = 9.806_65;

pub const DEFAULT_TAP_WIDTH_S: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcitationKind {
    Square,
    Sine,
    WeightSteps,
    TapTrain,
    Constant,
}

impl ExcitationKind {
    pub fn is_periodic(self) -> bool {
        matches!(self, Self::Square | Self::Sine | Self::TapTrain)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightStep {
    pub mass_kg: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcitationSpec {
    pub kind: ExcitationKind,
    pub amplitude_pa: f64,
    pub frequency_hz: f64,
    /// Fraction of each square-wave period spent pressed.
    pub duty: f64,
    pub tap_width_s: f64,
    pub steps: Vec<WeightStep>,
    /// Loaded area used to convert weights to pressure.
    pub device_area_m2: Option<f64>,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// Gaussian pressure noise added before clamping at zero.
    pub noise_rms_pa: f64,
    pub seed: u64,
}

impl Default for ExcitationSpec {
    fn default() -> Self {
        Self {
            kind: ExcitationKind::Sine,
            amplitude_pa: 5000.0,
            frequency_hz: 2.0,
            duty: 0.5,
            tap_width_s: DEFAULT_TAP_WIDTH_S,
            steps: Vec::new(),
            device_area_m2: None,
            duration_s: 5.0,
            sample_rate_hz: 1000.0,
            noise_rms_pa: 0.0,
            seed: 0,
        }
    }
}

impl ExcitationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(invalid("duration must be > 0"));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(invalid("sample rate must be > 0"));
        }
        if !(self.amplitude_pa >= 0.0 && self.amplitude_pa.is_finite()) {
            return Err(invalid("amplitude must be >= 0"));
        }
        if !(self.noise_rms_pa >= 0.0) {
            return Err(invalid("pressure noise must be >= 0"));
        }
        if self.kind.is_periodic() {
            if !(self.frequency_hz > 0.0 && self.frequency_hz.is_finite()) {
                return Err(invalid("frequency must be > 0"));
            }
            if self.sample_rate_hz < 20.0 * self.frequency_hz {
                return Err(invalid(format!(
                    "sample rate {} Hz is below 20 × frequency ({} Hz)",
                    self.sample_rate_hz, self.frequency_hz
                )));
            }
        }
        match self.kind {
            ExcitationKind::Square if !(self.duty > 0.0 && self.duty < 1.0) => {
                Err(invalid("duty must be in (0, 1)"))
            }
            ExcitationKind::TapTrain
                if !(self.tap_width_s > 0.0 && self.tap_width_s <= 1.0 / self.frequency_hz) =>
            {
                Err(invalid("tap width must be in (0, 1/frequency]"))
            }
            ExcitationKind::WeightSteps => {
                match self.device_area_m2 {
                    Some(a) if a > 0.0 => {}
                    _ => {
                        return Err(Error::Config(
                            "weight steps need a positive device area".into(),
                        ))
                    }
                }
                if self
                    .steps
                    .iter()
                    .any(|s| !(s.mass_kg >= 0.0) || !(s.duration_s > 0.0))
                {
                    return Err(invalid("weight steps need mass >= 0 and duration > 0"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn sample_count(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round().max(1.0) as usize
    }

    fn noiseless(&self, t: f64) -> f64 {
        let a = self.amplitude_pa;
        let f = self.frequency_hz;
        match self.kind {
            ExcitationKind::Constant => a,
            ExcitationKind::Sine => a * (1.0 - (2.0 * PI * f * t).cos()) / 2.0,
            ExcitationKind::Square => {
                // released for the first part of each period, pressed for the last `duty`
                let phase = (f * t).fract();
                if phase >= 1.0 - self.duty - 1e-9 {
                    a
                } else {
                    0.0
                }
            }
            ExcitationKind::TapTrain => {
                let period = 1.0 / f;
                let centre = ((t / period).floor() + 0.5) * period;
                let offset = t - centre;
                if offset.abs() < self.tap_width_s / 2.0 {
                    a * (1.0 + (2.0 * PI * offset / self.tap_width_s).cos()) / 2.0
                } else {
                    0.0
                }
            }
            ExcitationKind::WeightSteps => {
                let area = self.device_area_m2.unwrap_or(f64::INFINITY);
                let mut start = 0.0;
                for step in &self.steps {
                    if t < start + step.duration_s - 1e-12 {
                        return step.mass_kg * STANDARD_GRAVITY / area;
                    }
                    start += step.duration_s;
                }
                0.0
            }
        }
    }
}

/// Pressure exerted by a mass resting on `area_m2`.
pub fn weight_pressure(mass_kg: f64, area_m2: f64) -> f64 {
    mass_kg * STANDARD_GRAVITY / area_m2
}

/// Generate the pressure trace for `spec`. Bit-reproducible for a given spec.
pub fn generate(spec: &ExcitationSpec) -> Result<Trace> {
    spec.validate()?;
    let n = spec.sample_count();
    let dt = 1.0 / spec.sample_rate_hz;
    let mut samples: Vec<f64> = (0..n).map(|i| spec.noiseless(i as f64 * dt)).collect();
    if spec.noise_rms_pa > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, spec.noise_rms_pa).map_err(|e| invalid(e.to_string()))?;
        for s in &mut samples {
            *s = (*s + normal.sample(&mut rng)).max(0.0);
        }
    }
    Trace::new(0.0, dt, samples, Channel::PressurePa)
}
