//! Characterization engine: fits measured voltage-pressure curves and
//! extracts the headline metrics (sensitivity regions, response and recovery
//! times, detection limit).
//!
//! Fits work in rescaled units internally (pressure in kPa, voltage divided
//! by the largest magnitude) and report back in SI.

mod detection;
mod exponential;
mod linalg;
mod piecewise;
mod timing;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use detection::{detection_limit, DetectionGrid};
pub use exponential::{fit_exponential, ExpFit};
pub use piecewise::{fit_piecewise, PiecewiseFit, MAX_SEGMENTS};
pub use timing::{extract_response_times, ResponseTimes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensingMode {
    #[default]
    Static,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvPoint {
    pub pressure_pa: f64,
    pub voltage_v: f64,
}

/// Voltage-pressure samples with strictly increasing pressure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvSamples {
    points: Vec<PvPoint>,
    pub mode: SensingMode,
}

impl PvSamples {
    pub fn new(points: Vec<PvPoint>, mode: SensingMode) -> Result<Self> {
        if points.len() < 4 {
            return Err(invalid(format!(
                "need at least 4 voltage-pressure points, got {}",
                points.len()
            )));
        }
        if points
            .iter()
            .any(|p| !p.pressure_pa.is_finite() || !p.voltage_v.is_finite())
        {
            return Err(invalid("voltage-pressure points must be finite"));
        }
        if points.windows(2).any(|w| w[1].pressure_pa <= w[0].pressure_pa) {
            return Err(invalid("pressures must be strictly increasing"));
        }
        Ok(Self { points, mode })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>, mode: SensingMode) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(pressure_pa, voltage_v)| PvPoint {
                    pressure_pa,
                    voltage_v,
                })
                .collect(),
            mode,
        )
    }

    pub fn points(&self) -> &[PvPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Pressures in kPa and voltages divided by `scale`.
    fn scaled(&self) -> (Vec<f64>, Vec<f64>, f64) {
        let scale = self
            .points
            .iter()
            .map(|p| p.voltage_v.abs())
            .fold(0.0, f64::max);
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let x = self.points.iter().map(|p| p.pressure_pa / 1e3).collect();
        let y = self.points.iter().map(|p| p.voltage_v / scale).collect();
        (x, y, scale)
    }
}

/// Either fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Fit {
    Piecewise(PiecewiseFit),
    Exponential(ExpFit),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub pressure_lo_pa: f64,
    pub pressure_hi_pa: f64,
    pub sensitivity_v_per_pa: f64,
}

impl SensitivityRow {
    pub fn sensitivity_v_per_kpa(&self) -> f64 {
        self.sensitivity_v_per_pa * 1e3
    }
}

/// Region table: one row per segment for piecewise fits; one row per entry
/// of `at_pressures_pa` for exponential fits (local slope V_max·k·e^(−kP)).
pub fn sensitivity_report(fit: &Fit, at_pressures_pa: &[f64]) -> Vec<SensitivityRow> {
    match fit {
        Fit::Piecewise(f) => {
            let mut edges = vec![f.domain_pa[0]];
            edges.extend_from_slice(&f.breakpoints_pa);
            edges.push(f.domain_pa[1]);
            f.slopes_v_per_pa
                .iter()
                .enumerate()
                .map(|(i, &s)| SensitivityRow {
                    pressure_lo_pa: edges[i],
                    pressure_hi_pa: edges[i + 1],
                    sensitivity_v_per_pa: s,
                })
                .collect()
        }
        Fit::Exponential(f) => at_pressures_pa
            .iter()
            .map(|&p| SensitivityRow {
                pressure_lo_pa: p,
                pressure_hi_pa: p,
                sensitivity_v_per_pa: f.sensitivity(p),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_validation() {
        assert!(PvSamples::from_pairs([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)], SensingMode::Static).is_err());
        assert!(PvSamples::from_pairs(
            [(0.0, 0.0), (1.0, 1.0), (1.0, 2.0), (3.0, 3.0)],
            SensingMode::Static
        )
        .is_err());
        assert!(PvSamples::from_pairs(
            [(0.0, 0.0), (1.0, f64::NAN), (2.0, 2.0), (3.0, 3.0)],
            SensingMode::Static
        )
        .is_err());
    }

    #[test]
    fn exponential_report_at_zero_is_initial_slope() {
        let fit = Fit::Exponential(ExpFit {
            saturation_voltage_v: 163.6,
            k_per_pa: 4.2e-4,
            rmse_v: 0.0,
            gradient_norm: 0.0,
            at_search_bound: false,
        });
        let rows = sensitivity_report(&fit, &[0.0, 1e3]);
        assert_eq!(rows.len(), 2);
        assert!((rows[0].sensitivity_v_per_pa - 163.6 * 4.2e-4).abs() < 1e-15);
        assert!(rows[1].sensitivity_v_per_pa < rows[0].sensitivity_v_per_pa);
    }
}
