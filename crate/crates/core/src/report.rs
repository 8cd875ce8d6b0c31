//! Run reports: metadata identifying the inputs plus whatever metrics the
//! run produced.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::charfit::{Fit, ResponseTimes, SensitivityRow};
use crate::config::Config;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
}

impl RunMetadata {
    pub fn for_config(cfg: &Config) -> Self {
        Self {
            config_hash: cfg.hash(),
            seed: cfg.seed,
            tool_version: TOOL_VERSION.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Metrics {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<Fit>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sensitivities: Vec<SensitivityRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response_times: Option<ResponseTimes>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection_limit_pa: Option<f64>,
    /// Named scalar results (event counts, final voltages, ...).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
}

impl Metrics {
    /// Fold `other` into `self`; scalars in `other` win on name clashes.
    pub fn merge(&mut self, other: Metrics) {
        self.fits.extend(other.fits);
        self.sensitivities.extend(other.sensitivities);
        if other.response_times.is_some() {
            self.response_times = other.response_times;
        }
        if other.detection_limit_pa.is_some() {
            self.detection_limit_pa = other.detection_limit_pa;
        }
        self.values.extend(other.values);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub run: RunMetadata,
    pub metrics: Metrics,
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn new(cfg: &Config) -> Self {
        Self {
            run: RunMetadata::for_config(cfg),
            metrics: Metrics::default(),
            artifacts: Vec::new(),
        }
    }

    pub fn with_value(mut self, name: &str, value: f64) -> Self {
        self.metrics.values.insert(name.to_string(), value);
        self
    }

    pub fn with_artifact(mut self, path: impl Into<String>) -> Self {
        self.artifacts.push(path.into());
        self
    }

    /// Combine reports from the same configuration. Artifacts are
    /// concatenated without duplicates.
    pub fn absorb(&mut self, other: Report) {
        self.metrics.merge(other.metrics);
        for a in other.artifacts {
            if !self.artifacts.contains(&a) {
                self.artifacts.push(a);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metadata_identifies_config() {
        let a = Report::new(&Config::default());
        let b = Report::new(&Config { seed: 3, ..Default::default() });
        assert_ne!(a.run.config_hash, b.run.config_hash);
        assert_eq!(a.run.tool_version, TOOL_VERSION);
    }

    #[test]
    fn absorb_merges() {
        let mut a = Report::new(&Config::default()).with_value("x", 1.0).with_artifact("a.csv");
        let b = Report::new(&Config::default()).with_value("y", 2.0).with_artifact("a.csv").with_artifact("b.csv");
        a.absorb(b);
        assert_eq!(a.metrics.values.len(), 2);
        assert_eq!(a.artifacts, vec!["a.csv", "b.csv"]);
        let json = serde_json::to_string(&a).unwrap();
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }
}
