use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Physical quantity carried by a [`Trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    PressurePa,
    VoltageDc,
    VoltageAc,
    CurrentA,
    ChargeC,
}

impl Channel {
    pub const ALL: [Channel; 5] = [
        Channel::PressurePa,
        Channel::VoltageDc,
        Channel::VoltageAc,
        Channel::CurrentA,
        Channel::ChargeC,
    ];

    /// CSV column name, units included.
    pub fn column(self) -> &'static str {
        match self {
            Channel::PressurePa => "pressure_pa",
            Channel::VoltageDc => "voltage_dc_v",
            Channel::VoltageAc => "voltage_ac_v",
            Channel::CurrentA => "current_a",
            Channel::ChargeC => "charge_c",
        }
    }

    pub fn from_column(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.column() == name)
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.column())
    }
}

/// Uniformly sampled time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
    pub channel: Channel,
}

impl Trace {
    pub fn new(t0: f64, dt: f64, samples: Vec<f64>, channel: Channel) -> Result<Self> {
        let trace = Self {
            t0,
            dt,
            samples,
            channel,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("trace dt must be > 0, got {}", self.dt)));
        }
        if !self.t0.is_finite() {
            return Err(invalid("trace t0 must be finite"));
        }
        if self.samples.is_empty() {
            return Err(invalid("trace must contain at least one sample"));
        }
        if let Some(i) = self.samples.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("trace sample {i} is not finite")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.dt
    }

    pub fn time(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |i| self.time(i))
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.samples.len() - 1)
    }

    /// Linear interpolation at `t`, clamped to the end samples.
    pub fn value_at(&self, t: f64) -> f64 {
        let pos = (t - self.t0) / self.dt;
        if pos <= 0.0 {
            return self.samples[0];
        }
        let last = self.samples.len() - 1;
        if pos >= last as f64 {
            return self.samples[last];
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        self.samples[i] + frac * (self.samples[i + 1] - self.samples[i])
    }

    /// Same time base, new samples and channel.
    pub fn with_samples(&self, samples: Vec<f64>, channel: Channel) -> Self {
        Self {
            t0: self.t0,
            dt: self.dt,
            samples,
            channel,
        }
    }

    pub fn same_time_base(&self, other: &Trace) -> bool {
        self.samples.len() == other.samples.len()
            && (self.t0 - other.t0).abs() <= 1e-9 * self.dt
            && ((self.dt - other.dt) / self.dt).abs() <= 1e-9
    }

    /// Resample onto `reference`'s time base by linear interpolation.
    pub fn resample_like(&self, reference: &Trace) -> Self {
        let samples = reference.times().map(|t| self.value_at(t)).collect();
        reference.with_samples(samples, self.channel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_traces() {
        assert!(Trace::new(0.0, 0.0, vec![1.0], Channel::PressurePa).is_err());
        assert!(Trace::new(0.0, 1e-3, vec![], Channel::PressurePa).is_err());
        assert!(Trace::new(0.0, 1e-3, vec![f64::NAN], Channel::PressurePa).is_err());
    }

    #[test]
    fn interpolation_and_resampling() {
        let t = Trace::new(1.0, 0.5, vec![0.0, 2.0, 4.0], Channel::VoltageDc).unwrap();
        assert_eq!(t.value_at(1.25), 1.0);
        assert_eq!(t.value_at(-3.0), 0.0);
        assert_eq!(t.value_at(9.0), 4.0);
        assert_eq!(t.end_time(), 2.0);
        let fine = Trace::new(1.0, 0.25, vec![0.0; 5], Channel::VoltageAc).unwrap();
        let r = t.resample_like(&fine);
        assert_eq!(r.samples, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(r.same_time_base(&fine));
        assert_eq!(r.channel, Channel::VoltageDc);
    }

    #[test]
    fn column_names_round_trip() {
        for c in Channel::ALL {
            assert_eq!(Channel::from_column(c.column()), Some(c));
        }
        assert_eq!(Channel::from_column("pressure_kpa"), None);
    }
}
