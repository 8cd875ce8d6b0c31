use serde::{Deserialize, Serialize};

use super::events::{Event, EventKind};
use crate::error::{Error, Result};
use crate::trace::Trace;

pub const MAX_GESTURE: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum CommandKind {
    /// Fraction of full finger flexion, 0..=1.
    Bend(f64),
    /// Static hand sign, 1..=3.
    Trigger(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlCommand {
    pub t: f64,
    #[serde(flatten)]
    pub kind: CommandKind,
}

pub fn gesture_name(gesture: u8) -> &'static str {
    match gesture {
        1 => "One",
        2 => "Two",
        3 => "Three",
        _ => "Unknown",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MappingConfig {
    /// DC voltage mapped to level 0.
    pub v_zero_v: f64,
    /// DC voltage mapped to level 1.
    pub v_full_v: f64,
    pub gesture_window_s: f64,
    pub control_rate_hz: f64,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            v_zero_v: -0.152,
            v_full_v: 4.014,
            gesture_window_s: 1.0,
            control_rate_hz: 50.0,
        }
    }
}

impl MappingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_full_v != self.v_zero_v && self.v_full_v.is_finite() && self.v_zero_v.is_finite()) {
            return Err(Error::Config("mapping.v_full_v must differ from mapping.v_zero_v".into()));
        }
        if !(self.gesture_window_s > 0.0) {
            return Err(Error::Config("mapping.gesture_window_s must be > 0".into()));
        }
        if !(self.control_rate_hz > 0.0 && self.control_rate_hz.is_finite()) {
            return Err(Error::Config("mapping.control_rate_hz must be > 0".into()));
        }
        Ok(())
    }

    pub fn level(&self, dc_v: f64) -> f64 {
        ((dc_v - self.v_zero_v) / (self.v_full_v - self.v_zero_v)).clamp(0.0, 1.0)
    }
}

/// Turn classified events into a time-ordered command stream.
///
/// Plateaus emit `Bend` at the control rate using the DC level at each
/// tick. Spikes are grouped into gesture windows opened by the first spike;
/// each window emits one `Trigger(count)` when it closes.
pub fn map_control(events: &[Event], dc: &Trace, cfg: &MappingConfig) -> Result<Vec<ControlCommand>> {
    cfg.validate()?;
    let period = 1.0 / cfg.control_rate_hz;
    let mut cmds = Vec::new();
    for p in events.iter().filter(|e| e.kind == EventKind::StaticPlateau) {
        let ticks = ((p.t_end - p.t_start) / period + 1e-9).floor() as usize;
        for k in 0..=ticks {
            let t = p.t_start + k as f64 * period;
            cmds.push(ControlCommand {
                t,
                kind: CommandKind::Bend(cfg.level(dc.value_at(t))),
            });
        }
    }

    let mut taps = events.iter().filter(|e| e.kind == EventKind::DynamicSpike).peekable();
    while let Some(first) = taps.next() {
        let close = first.t_start + cfg.gesture_window_s;
        let mut count = 1usize;
        while taps.next_if(|e| e.t_start < close).is_some() {
            count += 1;
        }
        cmds.push(ControlCommand {
            t: close,
            kind: CommandKind::Trigger(count.min(MAX_GESTURE as usize) as u8),
        });
    }
    cmds.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(cmds)
}
