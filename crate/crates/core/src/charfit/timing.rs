use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseTimes {
    /// 10 % → 90 % of the step amplitude.
    pub rise_ms: f64,
    /// 90 % → 10 %.
    pub fall_ms: f64,
}

/// Time at which `u` crosses `level` between samples `i − 1` and `i`.
fn crossing(trace: &Trace, u: &[f64], i: usize, level: f64) -> f64 {
    let (a, b) = (u[i - 1], u[i]);
    let frac = if b != a { (level - a) / (b - a) } else { 0.0 };
    trace.time(i - 1) + frac * trace.dt
}

/// Rise and fall times of a single press-and-release step.
///
/// The baseline is the first sample, the step amplitude is the largest
/// excursion from it; crossings are linearly interpolated.
pub fn extract_response_times(step: &Trace) -> Result<ResponseTimes> {
    let s = &step.samples;
    if s.len() < 4 {
        return Err(Error::Detection("trace too short for a step".into()));
    }
    let base = s[0];
    let peak = (0..s.len())
        .max_by(|&a, &b| (s[a] - base).abs().total_cmp(&(s[b] - base).abs()))
        .unwrap_or(0);
    let amplitude = s[peak] - base;
    if amplitude == 0.0 {
        return Err(Error::Detection("no transition found: trace is flat".into()));
    }
    let u: Vec<f64> = s.iter().map(|v| (v - base) / amplitude).collect();

    // last 10 % crossing before the peak, then the first 90 % after it
    let lo_up = (1..=peak)
        .rev()
        .find(|&i| u[i - 1] < 0.1 && u[i] >= 0.1)
        .ok_or_else(|| Error::Detection("no rising 10 % crossing".into()))?;
    let hi_up = (lo_up..=peak)
        .find(|&i| u[i - 1] < 0.9 && u[i] >= 0.9)
        .ok_or_else(|| Error::Detection("no rising 90 % crossing".into()))?;
    let hi_down = (peak + 1..s.len())
        .find(|&i| u[i - 1] > 0.9 && u[i] <= 0.9)
        .ok_or_else(|| Error::Detection("no falling 90 % crossing".into()))?;
    let lo_down = (hi_down..s.len())
        .find(|&i| u[i - 1] > 0.1 && u[i] <= 0.1)
        .ok_or_else(|| Error::Detection("no falling 10 % crossing".into()))?;

    let rise = crossing(step, &u, hi_up, 0.9) - crossing(step, &u, lo_up, 0.1);
    let fall = crossing(step, &u, lo_down, 0.1) - crossing(step, &u, hi_down, 0.9);
    Ok(ResponseTimes {
        rise_ms: rise * 1e3,
        fall_ms: fall * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Channel;

    fn first_order_step(tau_rise: f64, tau_fall: f64, on: f64, off: f64, rate: f64, n: usize) -> Trace {
        // closed-form response sampled directly
        let level_at_off = 1.0 - (-(off - on) / tau_rise).exp();
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 / rate;
                if t < on {
                    0.0
                } else if t < off {
                    1.0 - (-(t - on) / tau_rise).exp()
                } else {
                    level_at_off * (-(t - off) / tau_fall).exp()
                }
            })
            .collect();
        Trace::new(0.0, 1.0 / rate, samples, Channel::VoltageDc).unwrap()
    }

    #[test]
    fn recovers_tau_ln9() {
        let t = first_order_step(0.03778, 0.01957, 0.2, 1.4, 1000.0, 2000);
        let r = extract_response_times(&t).unwrap();
        assert!((r.rise_ms - 83.0).abs() <= 1.0, "{r:?}");
        assert!((r.fall_ms - 43.0).abs() <= 1.0, "{r:?}");
    }

    #[test]
    fn ideal_step_is_resolution_bound() {
        let samples = (0..1000).map(|i| if (200..600).contains(&i) { 5.0 } else { 0.0 }).collect();
        let t = Trace::new(0.0, 1e-3, samples, Channel::VoltageDc).unwrap();
        let r = extract_response_times(&t).unwrap();
        assert!(r.rise_ms <= 2.0 && r.fall_ms <= 2.0);
    }

    #[test]
    fn negative_steps_work() {
        let mut t = first_order_step(0.03778, 0.01957, 0.2, 1.4, 1000.0, 2000);
        t.samples.iter_mut().for_each(|v| *v = 1.0 - 3.0 * *v);
        let r = extract_response_times(&t).unwrap();
        assert!((r.rise_ms - 83.0).abs() <= 1.0);
    }

    #[test]
    fn flat_or_unreleased_traces_fail() {
        let flat = Trace::new(0.0, 1e-3, vec![1.0; 100], Channel::VoltageDc).unwrap();
        assert!(matches!(extract_response_times(&flat), Err(Error::Detection(_))));
        let t = first_order_step(0.03778, 0.01957, 0.2, 10.0, 1000.0, 2000);
        assert!(extract_response_times(&t).is_err());
    }
}
