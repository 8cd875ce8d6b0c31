use serde::{Deserialize, Serialize};

use super::mapping::{CommandKind, ControlCommand, MAX_GESTURE};
use crate::error::{Error, Result};

pub const FINGER_NAMES: [&str; 5] = ["thumb", "index", "middle", "ring", "little"];
pub const MAX_ANGLE_DEG: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandState {
    /// Flexion per finger, thumb first. 0° is extended, 90° fully bent.
    pub finger_angles_deg: [f64; 5],
    pub grasp_closed: bool,
}

impl HandState {
    pub fn open() -> Self {
        Self::from_angles([0.0; 5])
    }

    pub fn from_angles(angles: [f64; 5]) -> Self {
        let finger_angles_deg = angles.map(|a| a.clamp(0.0, MAX_ANGLE_DEG));
        Self {
            finger_angles_deg,
            grasp_closed: finger_angles_deg.iter().all(|&a| a >= MAX_ANGLE_DEG / 2.0),
        }
    }
}

impl Default for HandState {
    fn default() -> Self {
        Self::open()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuatorConfig {
    /// First-order actuator time constant; 0 tracks targets instantly.
    pub tau_s: f64,
    pub sample_rate_hz: f64,
    /// Simulated time after the last command.
    pub tail_s: f64,
    /// Target angles for gestures 1, 2 and 3.
    pub poses_deg: [[f64; 5]; 3],
}

impl Default for ActuatorConfig {
    fn default() -> Self {
        const B: f64 = MAX_ANGLE_DEG;
        Self {
            tau_s: 0.05,
            sample_rate_hz: 100.0,
            tail_s: 0.5,
            poses_deg: [
                [B, 0.0, B, B, B],
                [B, 0.0, 0.0, B, B],
                [B, 0.0, 0.0, 0.0, B],
            ],
        }
    }
}

impl ActuatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_s >= 0.0 && self.tau_s.is_finite()) {
            return Err(Error::Config("hand.tau_s must be >= 0".into()));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::Config("hand.sample_rate_hz must be > 0".into()));
        }
        if !(self.tail_s >= 0.0) {
            return Err(Error::Config("hand.tail_s must be >= 0".into()));
        }
        if self.poses_deg.iter().flatten().any(|a| !(0.0..=MAX_ANGLE_DEG).contains(a)) {
            return Err(Error::Config("hand pose angles must lie in [0, 90] degrees".into()));
        }
        Ok(())
    }

    fn target(&self, kind: CommandKind) -> [f64; 5] {
        match kind {
            CommandKind::Bend(level) => [level.clamp(0.0, 1.0) * MAX_ANGLE_DEG; 5],
            CommandKind::Trigger(g) => self.poses_deg[(g.clamp(1, MAX_GESTURE) - 1) as usize],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandTrajectory {
    pub dt: f64,
    pub states: Vec<HandState>,
}

impl HandTrajectory {
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn last(&self) -> Option<&HandState> {
        self.states.last()
    }
}

/// Drive the hand with a time-ordered command stream, sampled from t = 0
/// until `tail_s` after the last command.
pub fn actuate(cmds: &[ControlCommand], initial: HandState, cfg: &ActuatorConfig) -> Result<HandTrajectory> {
    cfg.validate()?;
    let dt = 1.0 / cfg.sample_rate_hz;
    let end = cmds.iter().map(|c| c.t).fold(0.0, f64::max) + cfg.tail_s;
    let n = (end / dt).ceil() as usize + 1;
    let alpha = if cfg.tau_s == 0.0 { 1.0 } else { -(-dt / cfg.tau_s).exp_m1() };

    let mut angles = initial.finger_angles_deg;
    let mut target = angles;
    let mut next = 0;
    let mut states = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 * dt;
        while next < cmds.len() && cmds[next].t <= t + 1e-12 {
            target = cfg.target(cmds[next].kind);
            next += 1;
        }
        if i > 0 {
            for (a, goal) in angles.iter_mut().zip(target) {
                *a += alpha * (goal - *a);
            }
        }
        states.push(HandState::from_angles(angles));
    }
    Ok(HandTrajectory { dt, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cmd(t: f64, kind: CommandKind) -> ControlCommand {
        ControlCommand { t, kind }
    }

    #[test]
    fn instant_full_bend() {
        let cfg = ActuatorConfig { tau_s: 0.0, ..Default::default() };
        let traj = actuate(&[cmd(0.1, CommandKind::Bend(1.0))], HandState::open(), &cfg).unwrap();
        let last = traj.last().unwrap();
        assert_eq!(last.finger_angles_deg, [90.0; 5]);
        assert!(last.grasp_closed);
    }

    #[test]
    fn gesture_two_extends_two_fingers() {
        let cfg = ActuatorConfig { tau_s: 0.0, ..Default::default() };
        let traj = actuate(&[cmd(0.0, CommandKind::Trigger(2))], HandState::open(), &cfg).unwrap();
        let a = traj.last().unwrap().finger_angles_deg;
        assert_eq!(a.iter().filter(|&&x| x == 0.0).count(), 2);
        assert_eq!(a.iter().filter(|&&x| x == 90.0).count(), 3);
        for g in 1..=3u8 {
            let traj = actuate(&[cmd(0.0, CommandKind::Trigger(g))], HandState::open(), &cfg).unwrap();
            let a = traj.last().unwrap().finger_angles_deg;
            assert_eq!(a.iter().filter(|&&x| x == 0.0).count(), g as usize);
        }
    }

    #[test]
    fn lag_approaches_target() {
        let cfg = ActuatorConfig::default();
        let traj = actuate(&[cmd(0.0, CommandKind::Bend(0.5))], HandState::open(), &cfg).unwrap();
        // one τ after the command: 1 − e⁻¹ of the way
        let at_tau = traj.states[5].finger_angles_deg[0];
        assert!((at_tau - 45.0 * (1.0 - (-1f64).exp())).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = ActuatorConfig { tau_s: -1.0, ..Default::default() };
        assert!(actuate(&[], HandState::open(), &cfg).is_err());
    }

    proptest! {
        #[test]
        fn monotone_bends_monotone_angles(mut levels in proptest::collection::vec(-0.5f64..1.5, 1..30), tau in 0.0f64..0.3) {
            levels.sort_by(f64::total_cmp);
            let cmds: Vec<_> = levels.iter().enumerate().map(|(i, &l)| cmd(i as f64 * 0.02, CommandKind::Bend(l))).collect();
            let cfg = ActuatorConfig { tau_s: tau, ..Default::default() };
            let traj = actuate(&cmds, HandState::open(), &cfg).unwrap();
            for w in traj.states.windows(2) {
                for f in 0..5 {
                    prop_assert!(w[1].finger_angles_deg[f] >= w[0].finger_angles_deg[f]);
                }
            }
        }

        #[test]
        fn angles_stay_in_range(kinds in proptest::collection::vec((0.0f64..2.0, -1.0f64..2.0, 0u8..6), 0..20)) {
            let cmds: Vec<_> = kinds.iter().map(|&(t, l, g)| {
                cmd(t, if g == 0 { CommandKind::Bend(l) } else { CommandKind::Trigger(g) })
            }).collect();
            let mut cmds = cmds;
            cmds.sort_by(|a, b| a.t.total_cmp(&b.t));
            let traj = actuate(&cmds, HandState::open(), &ActuatorConfig::default()).unwrap();
            for s in &traj.states {
                prop_assert!(s.finger_angles_deg.iter().all(|a| (0.0..=90.0).contains(a)));
            }
        }
    }
}
