use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    StaticPlateau,
    DynamicSpike,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub t_start: f64,
    pub t_end: f64,
    /// Median DC level for plateaus, signed peak for spikes.
    pub amplitude_v: f64,
    /// Sign of the first excursion; +1 for plateaus above zero.
    pub polarity: i8,
    /// A spike made of a merged positive/negative pair.
    pub bipolar: bool,
}

impl Event {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub dc_threshold_v: f64,
    /// Minimum time |dc| must stay above threshold to count as a plateau.
    pub hold_s: f64,
    pub ac_threshold_v: f64,
    /// A spike ends once |ac| falls below `release_ratio × ac_threshold_v`.
    pub release_ratio: f64,
    /// Opposite-sign spikes whose peaks fall within this window are one tap.
    pub pair_window_s: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            dc_threshold_v: 0.05,
            hold_s: 0.3,
            ac_threshold_v: 0.5,
            release_ratio: 0.5,
            pair_window_s: 0.12,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("classifier.{name} must be > 0")))
            }
        };
        positive(self.dc_threshold_v, "dc_threshold_v")?;
        positive(self.ac_threshold_v, "ac_threshold_v")?;
        positive(self.hold_s, "hold_s")?;
        positive(self.pair_window_s, "pair_window_s")?;
        if !(self.release_ratio > 0.0 && self.release_ratio <= 1.0) {
            return Err(Error::Config("classifier.release_ratio must be in (0, 1]".into()));
        }
        Ok(())
    }
}

struct Spike {
    start: usize,
    end: usize,
    peak: usize,
    peak_v: f64,
}

fn plateaus(dc: &Trace, cfg: &ClassifierConfig) -> Vec<Event> {
    let s = &dc.samples;
    let mut out = Vec::new();
    let mut i = 0;
    while i < s.len() {
        if s[i].abs() <= cfg.dc_threshold_v {
            i += 1;
            continue;
        }
        let start = i;
        while i < s.len() && s[i].abs() > cfg.dc_threshold_v {
            i += 1;
        }
        let end = i - 1;
        let (t_start, t_end) = (dc.time(start), dc.time(end));
        if t_end - t_start + 1e-9 * dc.dt >= cfg.hold_s {
            let mut run = s[start..=end].to_vec();
            run.sort_by(f64::total_cmp);
            let median = if run.len() % 2 == 1 {
                run[run.len() / 2]
            } else {
                0.5 * (run[run.len() / 2 - 1] + run[run.len() / 2])
            };
            out.push(Event {
                kind: EventKind::StaticPlateau,
                t_start,
                t_end,
                amplitude_v: median,
                polarity: if median < 0.0 { -1 } else { 1 },
                bipolar: false,
            });
        }
    }
    out
}

fn raw_spikes(ac: &Trace, cfg: &ClassifierConfig) -> Vec<Spike> {
    let release = cfg.release_ratio * cfg.ac_threshold_v;
    let mut out: Vec<Spike> = Vec::new();
    let mut current: Option<Spike> = None;
    for (i, &v) in ac.samples.iter().enumerate() {
        if let Some(sp) = current.as_mut() {
            let same_sign = v.signum() == sp.peak_v.signum();
            if same_sign && v.abs() >= release {
                if v.abs() > sp.peak_v.abs() {
                    sp.peak = i;
                    sp.peak_v = v;
                }
                sp.end = i;
                continue;
            }
            out.extend(current.take());
        }
        if v.abs() > cfg.ac_threshold_v {
            current = Some(Spike { start: i, end: i, peak: i, peak_v: v });
        }
    }
    out.extend(current);
    out
}

fn spikes(ac: &Trace, cfg: &ClassifierConfig) -> Vec<Event> {
    let raw = raw_spikes(ac, cfg);
    let mut out = Vec::new();
    let mut i = 0;
    while i < raw.len() {
        let a = &raw[i];
        let partner = raw.get(i + 1).filter(|b| {
            b.peak_v.signum() != a.peak_v.signum() && ac.time(b.peak) - ac.time(a.peak) <= cfg.pair_window_s
        });
        let (end, amplitude, bipolar) = match partner {
            Some(b) => {
                let amp = if b.peak_v.abs() > a.peak_v.abs() { b.peak_v } else { a.peak_v };
                (b.end, amp, true)
            }
            None => (a.end, a.peak_v, false),
        };
        out.push(Event {
            kind: EventKind::DynamicSpike,
            t_start: ac.time(a.start),
            t_end: ac.time(end),
            amplitude_v: amplitude,
            polarity: if a.peak_v < 0.0 { -1 } else { 1 },
            bipolar,
        });
        i += if bipolar { 2 } else { 1 };
    }
    out
}

/// Detect static plateaus on `dc` and dynamic spikes on `ac`.
///
/// Spikes that overlap a plateau (widened by the pair window) are the
/// press and release edges of that hold and are not reported separately.
/// `ac` is resampled onto the DC time base when they differ.
pub fn classify(dc: &Trace, ac: &Trace, cfg: &ClassifierConfig) -> Result<Vec<Event>> {
    cfg.validate()?;
    let ac = if ac.same_time_base(dc) { ac.clone() } else { ac.resample_like(dc) };
    let holds = plateaus(dc, cfg);
    let margin = cfg.pair_window_s;
    let taps = spikes(&ac, cfg).into_iter().filter(|sp| {
        !holds
            .iter()
            .any(|p| sp.t_end >= p.t_start - margin && sp.t_start <= p.t_end + margin)
    });
    let mut events: Vec<Event> = holds.iter().copied().chain(taps).collect();
    events.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
    Ok(events)
}
