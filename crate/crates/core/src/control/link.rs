use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mapping::ControlCommand;
use crate::error::{Error, Result};

/// Lossy, fixed-latency wireless link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub latency_s: f64,
    pub drop_probability: f64,
    pub seed: u64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            latency_s: 0.0,
            drop_probability: 0.0,
            seed: 0,
        }
    }
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.latency_s >= 0.0 && self.latency_s.is_finite()) {
            return Err(Error::Config("link.latency_s must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.drop_probability) {
            return Err(Error::Config("link.drop_probability must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Delay every command by the latency and drop each independently.
pub fn transmit(cmds: &[ControlCommand], ch: &ChannelModel) -> Result<Vec<ControlCommand>> {
    ch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(ch.seed);
    Ok(cmds
        .iter()
        .filter(|_| !rng.random_bool(ch.drop_probability))
        .map(|c| ControlCommand {
            t: c.t + ch.latency_s,
            ..*c
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::CommandKind;
    use proptest::prelude::*;

    fn stream(n: usize) -> Vec<ControlCommand> {
        (0..n)
            .map(|i| ControlCommand {
                t: i as f64 * 0.02,
                kind: CommandKind::Bend((i % 100) as f64 / 100.0),
            })
            .collect()
    }

    #[test]
    fn ideal_link_is_identity() {
        let s = stream(50);
        assert_eq!(transmit(&s, &ChannelModel::default()).unwrap(), s);
    }

    #[test]
    fn latency_shifts_timestamps() {
        let s = stream(50);
        let out = transmit(&s, &ChannelModel { latency_s: 0.02, ..Default::default() }).unwrap();
        for (a, b) in s.iter().zip(&out) {
            assert_eq!(b.t, a.t + 0.02);
            assert_eq!(a.kind, b.kind);
        }
    }

    #[test]
    fn drop_rate_is_binomial() {
        let out = transmit(&stream(10_000), &ChannelModel { drop_probability: 0.5, seed: 7, ..Default::default() }).unwrap();
        // 3σ = 3·sqrt(10⁴·0.25) = 150
        assert!((out.len() as f64 - 5000.0).abs() <= 150.0, "{}", out.len());
    }

    #[test]
    fn rejects_invalid_model() {
        assert!(transmit(&[], &ChannelModel { drop_probability: 1.0, ..Default::default() }).is_err());
        assert!(transmit(&[], &ChannelModel { latency_s: -1.0, ..Default::default() }).is_err());
    }

    proptest! {
        #[test]
        fn order_preserved(p in 0.0f64..0.99, seed in any::<u64>(), lat in 0.0f64..1.0) {
            let out = transmit(&stream(300), &ChannelModel { latency_s: lat, drop_probability: p, seed }).unwrap();
            prop_assert!(out.windows(2).all(|w| w[0].t < w[1].t));
        }
    }
}
