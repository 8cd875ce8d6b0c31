use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::trace::{Channel, Trace};
use crate::transducer::{simulate, CeState, ResponseDynamics, TransducerParams};

/// Log-spaced pressure grid searched for the detection limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionGrid {
    pub min_pa: f64,
    pub max_pa: f64,
    pub points_per_decade: usize,
}

impl Default for DetectionGrid {
    fn default() -> Self {
        Self {
            min_pa: 0.1,
            max_pa: 1e5,
            points_per_decade: 200,
        }
    }
}

impl DetectionGrid {
    pub fn pressures(&self) -> Vec<f64> {
        let decades = (self.max_pa / self.min_pa).log10();
        let n = (decades * self.points_per_decade as f64).ceil() as usize;
        (0..=n)
            .map(|i| self.min_pa * 10f64.powf(i as f64 / self.points_per_decade as f64))
            .take_while(|&p| p <= self.max_pa * (1.0 + 1e-12))
            .collect()
    }
}

/// Noise-free AC peak for a single press of `pressure_pa`, held long
/// enough that the press and release pulses do not overlap.
fn press_peak(params: &TransducerParams, dynamics: &ResponseDynamics, pressure_pa: f64) -> Result<f64> {
    let rate = 1000.0;
    let hold = (4.0 * dynamics.pulse_width_s).max(0.2);
    let on = (2.0 * dynamics.pulse_width_s).max(0.1);
    let n = ((2.0 * on + hold) * rate).ceil() as usize;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            if t >= on && t < on + hold {
                pressure_pa
            } else {
                0.0
            }
        })
        .collect();
    let trace = Trace::new(0.0, 1.0 / rate, samples, Channel::PressurePa)?;
    let quiet = ResponseDynamics {
        noise_rms_v: 0.0,
        edge_threshold_pa: dynamics.edge_threshold_pa.min(0.5 * pressure_pa),
        ..*dynamics
    };
    let out = simulate(&trace, params, &CeState::off(), &quiet)?;
    Ok(out.ac.samples.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
}

/// Smallest grid pressure whose simulated AC peak reaches
/// `criterion × noise_rms`.
pub fn detection_limit(
    params: &TransducerParams,
    dynamics: &ResponseDynamics,
    criterion: f64,
    grid: &DetectionGrid,
) -> Result<f64> {
    if !(criterion > 0.0) {
        return Err(invalid("detection criterion must be > 0"));
    }
    if !(grid.min_pa > 0.0 && grid.max_pa > grid.min_pa && grid.points_per_decade > 0) {
        return Err(invalid("detection grid must be increasing and positive"));
    }
    let threshold = criterion * dynamics.noise_rms_v;
    for p in grid.pressures() {
        if press_peak(params, dynamics, p)? >= threshold {
            return Ok(p);
        }
    }
    Err(Error::Detection(format!(
        "no pressure up to {} Pa reaches {threshold} V",
        grid.max_pa
    )))
}
