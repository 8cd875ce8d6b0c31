//! Run configuration.
//!
//! The file is a flat list of `section.key = value` lines (TOML dotted
//! keys), e.g.
//!
//! ```text
//! seed = 7
//! static.charge_c = 1e-9
//! excitation.kind = "square"
//! classifier.hold_s = 0.3
//! ```
//!
//! Every key is optional and falls back to the default listed by
//! [`Config::defaults_document`]. Unknown keys are rejected. The
//! `ISD_SEED` environment variable overrides `seed`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::charfit::{DetectionGrid, PiecewiseFit};
use crate::conditioning::ConditioningNetwork;
use crate::control::{ActuatorConfig, ChannelModel, ClassifierConfig, MappingConfig};
use crate::error::{Error, Result};
use crate::excitation::{ExcitationKind, ExcitationSpec, WeightStep};
use crate::gradient::{reference_areas, GradientStack};
use crate::harvest::HarvestConfig;
use crate::physics::{DynamicParams, Geometry, PermittivityMode, StaticParams};
use crate::transducer::{CeMode, CeState, DynamicTarget, ResponseDynamics, StaticTarget, TransducerParams};

pub const SEED_ENV: &str = "ISD_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaticModel {
    Physics,
    Gradient,
    /// Piecewise-linear curve from `static.breakpoints_pa` etc.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicModel {
    Saturating,
    Peak,
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub contact_area_m2: f64,
    pub dielectric_thickness_m: f64,
    pub gap_m: f64,
    pub relative_permittivity: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        let g = Geometry::default();
        Self {
            contact_area_m2: g.contact_area_m2,
            dielectric_thickness_m: g.dielectric_thickness_m,
            gap_m: g.gap_m,
            relative_permittivity: g.relative_permittivity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaticSection {
    pub model: StaticModel,
    pub charge_c: f64,
    pub area_expansion_m2_per_pa: f64,
    pub compression_m_per_pa: f64,
    pub breakpoints_pa: Vec<f64>,
    pub slopes_v_per_pa: Vec<f64>,
    pub intercept_v: f64,
}

impl Default for StaticSection {
    fn default() -> Self {
        let p = StaticParams::default();
        Self {
            model: StaticModel::Physics,
            charge_c: p.charge_c,
            area_expansion_m2_per_pa: p.area_expansion_m2_per_pa,
            compression_m_per_pa: p.compression_m_per_pa,
            breakpoints_pa: vec![11e3, 26e3],
            slopes_v_per_pa: vec![2.6e-3, 0.7e-3, 0.2e-3],
            intercept_v: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicSection {
    pub model: DynamicModel,
    pub max_charge_density_c_per_m2: f64,
    pub charge_saturation_per_pa: f64,
    pub saturation_voltage_v: f64,
    pub sensitivity_per_pa: f64,
    pub permittivity: PermittivityMode,
}

impl Default for DynamicSection {
    fn default() -> Self {
        let p = DynamicParams::default();
        Self {
            model: DynamicModel::Saturating,
            max_charge_density_c_per_m2: p.max_charge_density_c_per_m2,
            charge_saturation_per_pa: p.charge_saturation_per_pa,
            saturation_voltage_v: p.saturation_voltage_v,
            sensitivity_per_pa: p.sensitivity_per_pa,
            permittivity: PermittivityMode::Corrected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradientSection {
    /// Layer footprints from the top (smallest) down.
    pub areas_m2: Vec<f64>,
    pub first_engage_pa: f64,
    pub last_engage_pa: f64,
    pub layer_thickness_m: f64,
    pub smoothing_fraction: f64,
}

impl Default for GradientSection {
    fn default() -> Self {
        let r = GradientStack::reference();
        Self {
            areas_m2: reference_areas().to_vec(),
            first_engage_pa: 6.0,
            last_engage_pa: 3600.0,
            layer_thickness_m: r.layer_thickness_m,
            smoothing_fraction: r.smoothing_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CeSection {
    pub mode: CeMode,
    pub static_gain: f64,
    pub dynamic_gain: f64,
}

impl Default for CeSection {
    fn default() -> Self {
        let pce = CeState::pce();
        Self {
            mode: CeMode::Off,
            static_gain: pce.static_gain,
            dynamic_gain: pce.dynamic_gain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    pub tau_rise_s: f64,
    pub tau_fall_s: f64,
    pub noise_rms_v: f64,
    pub pulse_width_s: f64,
    pub edge_threshold_pa: f64,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        let r = ResponseDynamics::reference();
        Self {
            tau_rise_s: r.tau_rise_s,
            tau_fall_s: r.tau_fall_s,
            noise_rms_v: r.noise_rms_v,
            pulse_width_s: r.pulse_width_s,
            edge_threshold_pa: r.edge_threshold_pa,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExcitationSection {
    pub kind: ExcitationKind,
    pub amplitude_pa: f64,
    pub frequency_hz: f64,
    pub duty: f64,
    pub tap_width_s: f64,
    pub step_masses_kg: Vec<f64>,
    pub step_durations_s: Vec<f64>,
    /// 0 means "use geometry.contact_area_m2".
    pub device_area_m2: f64,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub noise_rms_pa: f64,
}

impl Default for ExcitationSection {
    fn default() -> Self {
        let s = ExcitationSpec::default();
        Self {
            kind: s.kind,
            amplitude_pa: s.amplitude_pa,
            frequency_hz: s.frequency_hz,
            duty: s.duty,
            tap_width_s: s.tap_width_s,
            step_masses_kg: Vec::new(),
            step_durations_s: Vec::new(),
            device_area_m2: 0.0,
            duration_s: s.duration_s,
            sample_rate_hz: s.sample_rate_hz,
            noise_rms_pa: s.noise_rms_pa,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditioningSection {
    pub series_r_ohm: f64,
    pub parallel_c_f: f64,
    pub sensor_c_f: f64,
    pub pulse_threshold_v: f64,
}

impl Default for ConditioningSection {
    fn default() -> Self {
        let n = ConditioningNetwork::default();
        Self {
            series_r_ohm: n.series_r_ohm,
            parallel_c_f: n.parallel_c_f,
            sensor_c_f: n.sensor_c_f,
            pulse_threshold_v: n.pulse_threshold_v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarvestSection {
    pub storage_c_f: f64,
    pub pulses_per_cycle: u32,
    pub charge_per_pulse_c: f64,
    pub frequency_hz: f64,
    pub duration_s: f64,
    pub diode_drop_v: f64,
    /// Source open-circuit peak; 0 means unlimited headroom.
    pub source_peak_v: f64,
    pub sample_rate_hz: f64,
}

impl Default for HarvestSection {
    fn default() -> Self {
        let h = HarvestConfig::default();
        Self {
            storage_c_f: h.storage_c_f,
            pulses_per_cycle: h.pulses_per_cycle,
            charge_per_pulse_c: h.charge_per_pulse_c,
            frequency_hz: h.frequency_hz,
            duration_s: h.duration_s,
            diode_drop_v: h.diode_drop_v,
            source_peak_v: 0.0,
            sample_rate_hz: h.sample_rate_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSection {
    pub dc_threshold_v: f64,
    pub hold_s: f64,
    pub ac_threshold_v: f64,
    pub release_ratio: f64,
    pub pair_window_s: f64,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        let c = ClassifierConfig::default();
        Self {
            dc_threshold_v: c.dc_threshold_v,
            hold_s: c.hold_s,
            ac_threshold_v: c.ac_threshold_v,
            release_ratio: c.release_ratio,
            pair_window_s: c.pair_window_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MappingSection {
    pub v_zero_v: f64,
    pub v_full_v: f64,
    pub gesture_window_s: f64,
    pub control_rate_hz: f64,
}

impl Default for MappingSection {
    fn default() -> Self {
        let m = MappingConfig::default();
        Self {
            v_zero_v: m.v_zero_v,
            v_full_v: m.v_full_v,
            gesture_window_s: m.gesture_window_s,
            control_rate_hz: m.control_rate_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub latency_s: f64,
    pub drop_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HandSection {
    pub tau_s: f64,
    pub sample_rate_hz: f64,
    pub tail_s: f64,
    pub pose_one_deg: [f64; 5],
    pub pose_two_deg: [f64; 5],
    pub pose_three_deg: [f64; 5],
}

impl Default for HandSection {
    fn default() -> Self {
        let a = ActuatorConfig::default();
        Self {
            tau_s: a.tau_s,
            sample_rate_hz: a.sample_rate_hz,
            tail_s: a.tail_s,
            pose_one_deg: a.poses_deg[0],
            pose_two_deg: a.poses_deg[1],
            pose_three_deg: a.poses_deg[2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionSection {
    pub criterion: f64,
    pub min_pa: f64,
    pub max_pa: f64,
    pub points_per_decade: usize,
}

impl Default for DetectionSection {
    fn default() -> Self {
        let g = DetectionGrid::default();
        Self {
            criterion: 3.0,
            min_pa: g.min_pa,
            max_pa: g.max_pa,
            points_per_decade: g.points_per_decade,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Seed for every random stream (pressure noise, voltage noise, link drops).
    pub seed: u64,
    pub geometry: GeometrySection,
    #[serde(rename = "static")]
    pub static_model: StaticSection,
    pub dynamic: DynamicSection,
    pub gradient: GradientSection,
    pub ce: CeSection,
    pub dynamics: DynamicsSection,
    pub excitation: ExcitationSection,
    pub conditioning: ConditioningSection,
    pub harvest: HarvestSection,
    pub classifier: ClassifierSection,
    pub mapping: MappingSection,
    pub link: LinkSection,
    pub hand: HandSection,
    pub detection: DetectionSection,
}

/// Flatten a TOML table into `section.key = value` lines.
fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<String>) {
    for (key, value) in table {
        let name = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        match value {
            toml::Value::Table(t) => flatten(&name, t, out),
            v => out.push(format!("{name} = {v}")),
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load from `path` (defaults when `None`), then apply `ISD_SEED`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::parse(&crate::io::read_text(p)?)?,
            None => Self::default(),
        };
        if let Ok(seed) = std::env::var(SEED_ENV) {
            cfg.seed = seed
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got {seed:?}")))?;
        }
        Ok(cfg)
    }

    /// Every key with its default value, one `section.key = value` per line.
    pub fn defaults_document() -> String {
        Self::default().to_document()
    }

    pub fn to_document(&self) -> String {
        let table = toml::Table::try_from(self).expect("config serializes to a table");
        let mut lines = Vec::new();
        flatten("", &table, &mut lines);
        lines.join("\n") + "\n"
    }

    /// SHA-256 of the resolved configuration, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    /// Build every derived parameter set so invalid values fail up front.
    pub fn validate(&self) -> Result<()> {
        self.transducer()?;
        self.ce_state().validate()?;
        self.response_dynamics().validate()?;
        self.excitation_spec().validate()?;
        self.conditioning_network().validate()?;
        self.harvest_config().validate()?;
        self.classifier_config().validate()?;
        self.mapping_config().validate()?;
        self.channel_model().validate()?;
        self.actuator_config().validate()?;
        let d = &self.detection;
        if !(d.criterion > 0.0 && d.min_pa > 0.0 && d.max_pa > d.min_pa && d.points_per_decade > 0) {
            return Err(Error::Config(
                "detection needs criterion > 0, 0 < min_pa < max_pa and points_per_decade > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Geometry {
        let g = &self.geometry;
        Geometry {
            contact_area_m2: g.contact_area_m2,
            dielectric_thickness_m: g.dielectric_thickness_m,
            gap_m: g.gap_m,
            relative_permittivity: g.relative_permittivity,
        }
    }

    pub fn static_params(&self) -> StaticParams {
        let s = &self.static_model;
        StaticParams {
            charge_c: s.charge_c,
            area_expansion_m2_per_pa: s.area_expansion_m2_per_pa,
            compression_m_per_pa: s.compression_m_per_pa,
            geometry: self.geometry(),
        }
    }

    pub fn dynamic_params(&self) -> DynamicParams {
        let d = &self.dynamic;
        DynamicParams {
            max_charge_density_c_per_m2: d.max_charge_density_c_per_m2,
            charge_saturation_per_pa: d.charge_saturation_per_pa,
            saturation_voltage_v: d.saturation_voltage_v,
            sensitivity_per_pa: d.sensitivity_per_pa,
            geometry: self.geometry(),
        }
    }

    pub fn gradient_stack(&self) -> Result<GradientStack> {
        let g = &self.gradient;
        GradientStack::uniform(&g.areas_m2, g.first_engage_pa, g.last_engage_pa, g.layer_thickness_m)?
            .with_smoothing(g.smoothing_fraction)
    }

    /// Transduction models without charge-excitation gains.
    pub fn transducer(&self) -> Result<TransducerParams> {
        let sp = self.static_params();
        sp.validate()?;
        let dp = self.dynamic_params();
        dp.validate()?;
        let stat = match self.static_model.model {
            StaticModel::Physics => StaticTarget::Physics(sp),
            StaticModel::Gradient => StaticTarget::Gradient {
                stack: self.gradient_stack()?,
                params: sp,
            },
            StaticModel::Empirical => StaticTarget::Empirical(PiecewiseFit::new(
                self.static_model.breakpoints_pa.clone(),
                self.static_model.slopes_v_per_pa.clone(),
                self.static_model.intercept_v,
            )?),
        };
        let mode = self.dynamic.permittivity;
        let dynamic = match self.dynamic.model {
            DynamicModel::Saturating => DynamicTarget::Saturating(dp),
            DynamicModel::Peak => DynamicTarget::Peak { params: dp, mode },
            DynamicModel::Gradient => DynamicTarget::Gradient {
                stack: self.gradient_stack()?,
                params: dp,
                mode,
            },
        };
        Ok(TransducerParams::new(stat, dynamic))
    }

    /// The configured gains apply only when `ce.mode` is not `off`.
    pub fn ce_state(&self) -> CeState {
        match self.ce.mode {
            CeMode::Off => CeState::off(),
            mode => CeState {
                mode,
                static_gain: self.ce.static_gain,
                dynamic_gain: self.ce.dynamic_gain,
            },
        }
    }

    pub fn response_dynamics(&self) -> ResponseDynamics {
        let d = &self.dynamics;
        ResponseDynamics {
            tau_rise_s: d.tau_rise_s,
            tau_fall_s: d.tau_fall_s,
            noise_rms_v: d.noise_rms_v,
            seed: self.seed,
            pulse_width_s: d.pulse_width_s,
            edge_threshold_pa: d.edge_threshold_pa,
        }
    }

    pub fn excitation_spec(&self) -> ExcitationSpec {
        let e = &self.excitation;
        let area = if e.device_area_m2 > 0.0 { e.device_area_m2 } else { self.geometry.contact_area_m2 };
        ExcitationSpec {
            kind: e.kind,
            amplitude_pa: e.amplitude_pa,
            frequency_hz: e.frequency_hz,
            duty: e.duty,
            tap_width_s: e.tap_width_s,
            steps: e
                .step_masses_kg
                .iter()
                .zip(&e.step_durations_s)
                .map(|(&mass_kg, &duration_s)| WeightStep { mass_kg, duration_s })
                .collect(),
            device_area_m2: Some(area),
            duration_s: e.duration_s,
            sample_rate_hz: e.sample_rate_hz,
            noise_rms_pa: e.noise_rms_pa,
            seed: self.seed,
        }
    }

    pub fn conditioning_network(&self) -> ConditioningNetwork {
        let c = &self.conditioning;
        ConditioningNetwork {
            series_r_ohm: c.series_r_ohm,
            parallel_c_f: c.parallel_c_f,
            sensor_c_f: c.sensor_c_f,
            pulse_threshold_v: c.pulse_threshold_v,
        }
    }

    pub fn harvest_config(&self) -> HarvestConfig {
        let h = &self.harvest;
        HarvestConfig {
            storage_c_f: h.storage_c_f,
            pulses_per_cycle: h.pulses_per_cycle,
            charge_per_pulse_c: h.charge_per_pulse_c,
            frequency_hz: h.frequency_hz,
            duration_s: h.duration_s,
            diode_drop_v: h.diode_drop_v,
            source_peak_v: (h.source_peak_v > 0.0).then_some(h.source_peak_v),
            sample_rate_hz: h.sample_rate_hz,
        }
    }

    pub fn classifier_config(&self) -> ClassifierConfig {
        let c = &self.classifier;
        ClassifierConfig {
            dc_threshold_v: c.dc_threshold_v,
            hold_s: c.hold_s,
            ac_threshold_v: c.ac_threshold_v,
            release_ratio: c.release_ratio,
            pair_window_s: c.pair_window_s,
        }
    }

    pub fn mapping_config(&self) -> MappingConfig {
        let m = &self.mapping;
        MappingConfig {
            v_zero_v: m.v_zero_v,
            v_full_v: m.v_full_v,
            gesture_window_s: m.gesture_window_s,
            control_rate_hz: m.control_rate_hz,
        }
    }

    pub fn channel_model(&self) -> ChannelModel {
        ChannelModel {
            latency_s: self.link.latency_s,
            drop_probability: self.link.drop_probability,
            seed: self.seed,
        }
    }

    pub fn actuator_config(&self) -> ActuatorConfig {
        let h = &self.hand;
        ActuatorConfig {
            tau_s: h.tau_s,
            sample_rate_hz: h.sample_rate_hz,
            tail_s: h.tail_s,
            poses_deg: [h.pose_one_deg, h.pose_two_deg, h.pose_three_deg],
        }
    }

    pub fn detection_grid(&self) -> DetectionGrid {
        DetectionGrid {
            min_pa: self.detection.min_pa,
            max_pa: self.detection.max_pa,
            points_per_decade: self.detection.points_per_decade,
        }
    }
}
