//! CSV and JSON files. All writes go through a temporary file in the
//! target directory and are renamed into place.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::charfit::{PvSamples, SensingMode};
use crate::control::{HandTrajectory, FINGER_NAMES};
use crate::error::{Error, Result};
use crate::trace::{Channel, Trace};

/// Relative tolerance on the spacing of time stamps.
pub const DT_TOLERANCE: f64 = 1e-9;

/// Write `bytes` to `path` atomically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let named = |e: std::io::Error| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(named)?;
    tmp.write_all(bytes).map_err(named)?;
    tmp.as_file().sync_all().map_err(named)?;
    tmp.persist(path).map_err(|e| named(e.error))?;
    Ok(())
}

/// Read a file, naming it in any I/O error.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn format_trace(trace: &Trace) -> String {
    let mut out = String::with_capacity(trace.len() * 44 + 32);
    let _ = writeln!(out, "time_s,{}", trace.channel.column());
    for (i, v) in trace.samples.iter().enumerate() {
        let _ = writeln!(out, "{:.14e},{:.14e}", trace.time(i), v);
    }
    out
}

pub fn write_trace(path: &Path, trace: &Trace) -> Result<()> {
    write_atomic(path, format_trace(trace).as_bytes())
}

/// Parse a two-column trace CSV. With `expected` set, the value column
/// must name that channel.
pub fn parse_trace(text: &str, expected: Option<Channel>) -> Result<Trace> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_error(1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let expected_cols = || match expected {
        Some(c) => format!("time_s,{}", c.column()),
        None => "time_s,<channel>".to_string(),
    };
    if cols.len() != 2 || cols[0] != "time_s" {
        return Err(parse_error(1, format!("header must be `{}`, found `{header}`", expected_cols())));
    }
    let channel = Channel::from_column(cols[1]).ok_or_else(|| {
        parse_error(1, format!("unknown channel column `{}`; expected `{}`", cols[1], expected_cols()))
    })?;
    if let Some(want) = expected {
        if want != channel {
            return Err(parse_error(
                1,
                format!("expected channel `{}`, found `{}`", want.column(), channel.column()),
            ));
        }
    }

    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let mut fields = line.split(',');
        let (Some(t), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_error(lineno, "expected 2 fields"));
        };
        let t: f64 = t.trim().parse().map_err(|_| parse_error(lineno, format!("bad time `{t}`")))?;
        let v: f64 = v.trim().parse().map_err(|_| parse_error(lineno, format!("bad value `{v}`")))?;
        if !t.is_finite() || !v.is_finite() {
            return Err(parse_error(lineno, "non-finite number"));
        }
        times.push((lineno, t));
        samples.push(v);
    }
    if times.is_empty() {
        return Err(parse_error(1, "no samples"));
    }
    let t0 = times[0].1;
    let dt = if times.len() > 1 { (times[times.len() - 1].1 - t0) / (times.len() - 1) as f64 } else { 1.0 };
    if !(dt > 0.0) {
        return Err(parse_error(times[0].0, "time must increase"));
    }
    for (i, &(lineno, t)) in times.iter().enumerate() {
        let want = t0 + i as f64 * dt;
        if (t - want).abs() > DT_TOLERANCE * dt.max(want.abs()) {
            return Err(parse_error(lineno, format!("non-uniform sampling: t = {t}, expected {want}")));
        }
    }
    Trace::new(t0, dt, samples, channel)
}

pub fn read_trace(path: &Path, expected: Option<Channel>) -> Result<Trace> {
    parse_trace(&read_text(path)?, expected)
}

/// Pressure-voltage samples with columns `pressure_kpa,voltage_v`.
pub fn parse_pv(text: &str, mode: SensingMode) -> Result<PvSamples> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_error(1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["pressure_kpa", "voltage_v"] {
        return Err(parse_error(1, format!("header must be `pressure_kpa,voltage_v`, found `{header}`")));
    }
    let mut pairs = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let mut fields = line.split(',');
        let (Some(p), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_error(lineno, "expected 2 fields"));
        };
        let p: f64 = p.trim().parse().map_err(|_| parse_error(lineno, format!("bad pressure `{p}`")))?;
        let v: f64 = v.trim().parse().map_err(|_| parse_error(lineno, format!("bad voltage `{v}`")))?;
        pairs.push((p * 1e3, v));
    }
    PvSamples::from_pairs(pairs, mode)
}

pub fn read_pv(path: &Path, mode: SensingMode) -> Result<PvSamples> {
    parse_pv(&read_text(path)?, mode)
}

pub fn format_pv(data: &PvSamples) -> String {
    let mut out = String::from("pressure_kpa,voltage_v\n");
    for p in data.points() {
        let _ = writeln!(out, "{:.14e},{:.14e}", p.pressure_pa / 1e3, p.voltage_v);
    }
    out
}

/// Hand trajectory as `t_s,<finger>_deg...,grasp_closed`.
pub fn format_hand_trajectory(traj: &HandTrajectory) -> String {
    let mut out = String::from("t_s");
    for f in FINGER_NAMES {
        let _ = write!(out, ",{f}_deg");
    }
    out.push_str(",grasp_closed\n");
    for (i, s) in traj.states.iter().enumerate() {
        let _ = write!(out, "{:.6}", traj.time(i));
        for a in s.finger_angles_deg {
            let _ = write!(out, ",{a:.6}");
        }
        let _ = writeln!(out, ",{}", u8::from(s.grasp_closed));
    }
    out
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

/// One compact JSON object per line.
pub fn write_json_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.push(b'\n');
    }
    write_atomic(path, &out)
}

pub fn read_json_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_error(i + 1, e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_mismatch_names_expected_channel() {
        let err = parse_trace("time_s,voltage_ac_v\n0,1\n", Some(Channel::PressurePa)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("pressure_pa") && msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_trace("time_s,pressure_pa\n0,1\n0.001,x\n", None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn non_uniform_sampling_rejected() {
        let err = parse_trace("time_s,pressure_pa\n0,1\n0.001,1\n0.0025,1\n0.003,1\n", None).unwrap_err();
        assert!(err.to_string().contains("non-uniform"), "{err}");
    }

    #[test]
    fn pv_round_trip() {
        let d = PvSamples::from_pairs((1..10).map(|i| (i as f64 * 1e3, i as f64 * 0.5)), SensingMode::Static).unwrap();
        let back = parse_pv(&format_pv(&d), SensingMode::Static).unwrap();
        for (a, b) in d.points().iter().zip(back.points()) {
            assert!((a.pressure_pa - b.pressure_pa).abs() < 1e-9);
            assert_eq!(a.voltage_v, b.voltage_v);
        }
        assert!(parse_pv("p,v\n1,2\n", SensingMode::Static).is_err());
    }

    #[test]
    fn files_are_written_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let t = Trace::new(0.0, 1e-3, vec![1.0, 2.0, 3.0], Channel::VoltageDc).unwrap();
        write_trace(&path, &t).unwrap();
        write_trace(&path, &t).unwrap();
        assert_eq!(read_trace(&path, Some(Channel::VoltageDc)).unwrap().samples, t.samples);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    proptest! {
        #[test]
        fn trace_round_trip(
            samples in proptest::collection::vec(-1e6f64..1e6, 2..200),
            t0 in -10.0f64..10.0,
            rate in 1.0f64..1e6,
        ) {
            let t = Trace::new(t0, 1.0 / rate, samples, Channel::VoltageAc).unwrap();
            let back = parse_trace(&format_trace(&t), Some(Channel::VoltageAc)).unwrap();
            prop_assert_eq!(back.len(), t.len());
            for i in [0, t.len() / 2, t.len() - 1] {
                prop_assert!((back.time(i) - t.time(i)).abs() <= 1e-12 * t.time(i).abs().max(1.0));
            }
            for (a, b) in t.samples.iter().zip(&back.samples) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
            }
        }
    }
}
