//! Stepped-pyramid sponge stack with progressive contact.
//!
//! Layers are ordered top (smallest, engages first) to bottom. Pressing the
//! stack against the flat film brings successively wider layers into contact;
//! only the widest engaged face touches the film, so the contact area is that
//! layer's footprint rather than a cumulative sum.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::physics::{
    cycle_charge, minimum_capacitance, static_voltage, DynamicParams, PermittivityMode,
    StaticParams,
};

/// Default ramp width as a fraction of each layer's engagement pressure.
pub const DEFAULT_SMOOTHING_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub area_m2: f64,
    pub engage_pressure_pa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientStack {
    layers: Vec<Layer>,
    pub layer_thickness_m: f64,
    /// Contact ramp width relative to the layer's engagement pressure.
    pub smoothing_fraction: f64,
}

impl GradientStack {
    pub fn new(layers: Vec<Layer>, layer_thickness_m: f64) -> Result<Self> {
        let stack = Self {
            layers,
            layer_thickness_m,
            smoothing_fraction: DEFAULT_SMOOTHING_FRACTION,
        };
        stack.validate()?;
        Ok(stack)
    }

    /// Layers with engagement pressures spread uniformly over `[first_pa, last_pa]`.
    pub fn uniform(
        areas_m2: &[f64],
        first_pa: f64,
        last_pa: f64,
        layer_thickness_m: f64,
    ) -> Result<Self> {
        let n = areas_m2.len();
        let layers = areas_m2
            .iter()
            .enumerate()
            .map(|(i, &area_m2)| {
                let frac = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                Layer {
                    area_m2,
                    engage_pressure_pa: first_pa + frac * (last_pa - first_pa),
                }
            })
            .collect();
        Self::new(layers, layer_thickness_m)
    }

    /// Five 2 mm layers, 0.9 cm to 4.5 cm wide by 4.5 cm deep, engaging
    /// uniformly between 6 Pa and 3.6 kPa.
    pub fn reference() -> Self {
        Self::uniform(&reference_areas(), 6.0, 3600.0, 2e-3).expect("reference stack is valid")
    }

    pub fn with_smoothing(mut self, fraction: f64) -> Result<Self> {
        self.smoothing_fraction = fraction;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.layer_thickness_m >= 0.0 && self.layer_thickness_m.is_finite()) {
            return Err(invalid("layer thickness must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.smoothing_fraction) {
            return Err(invalid("smoothing fraction must be in [0, 1)"));
        }
        for layer in &self.layers {
            if !(layer.area_m2 > 0.0 && layer.area_m2.is_finite()) {
                return Err(invalid("layer areas must be > 0"));
            }
            if !(layer.engage_pressure_pa >= 0.0 && layer.engage_pressure_pa.is_finite()) {
                return Err(invalid("engagement pressures must be >= 0"));
            }
        }
        for pair in self.layers.windows(2) {
            if pair[1].area_m2 <= pair[0].area_m2 {
                return Err(invalid("layer areas must increase strictly top to bottom"));
            }
            if pair[1].engage_pressure_pa <= pair[0].engage_pressure_pa {
                return Err(invalid(
                    "engagement pressures must increase strictly top to bottom",
                ));
            }
        }
        Ok(())
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Footprint of the bottom (widest) layer; 0 for an empty stack.
    pub fn footprint_m2(&self) -> f64 {
        self.layers.last().map_or(0.0, |l| l.area_m2)
    }

    /// Area of the deepest layer whose engagement pressure is ≤ `pressure_pa`.
    pub fn engaged_area(&self, pressure_pa: f64) -> f64 {
        self.layers
            .iter()
            .rev()
            .find(|l| l.engage_pressure_pa <= pressure_pa)
            .map_or(0.0, |l| l.area_m2)
    }

    /// [`engaged_area`](Self::engaged_area) with each contact step replaced by
    /// a linear ramp ending at the layer's engagement pressure.
    pub fn smoothed_area(&self, pressure_pa: f64) -> f64 {
        self.layers
            .iter()
            .map(|l| {
                let width = self.smoothing_fraction * l.engage_pressure_pa;
                l.area_m2 * ramp(pressure_pa, l.engage_pressure_pa, width)
            })
            .fold(0.0, f64::max)
    }

    /// Contact fraction of the full footprint.
    pub fn engaged_fraction(&self, pressure_pa: f64) -> f64 {
        let footprint = self.footprint_m2();
        if footprint > 0.0 {
            self.smoothed_area(pressure_pa) / footprint
        } else {
            0.0
        }
    }
}

pub fn reference_areas() -> [f64; 5] {
    [0.9, 1.8, 2.7, 3.6, 4.5].map(|w_cm: f64| w_cm * 4.5 * 1e-4)
}

fn ramp(pressure: f64, end: f64, width: f64) -> f64 {
    if pressure >= end {
        1.0
    } else if width > 0.0 && pressure > end - width {
        (pressure - (end - width)) / width
    } else {
        0.0
    }
}

/// Base model a gradient stack feeds into.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseModel {
    Static(StaticParams),
    Dynamic(DynamicParams, PermittivityMode),
}

/// Voltage of a sensor whose contact is made through `stack`.
///
/// Charge is generated only over the engaged area while the electrode
/// capacitance spans the full stack footprint, so both channels scale with
/// the engaged fraction. With every layer engaged the result equals the base
/// model evaluated with the footprint as contact area; with nothing engaged
/// it is 0.
pub fn gradient_response(stack: &GradientStack, base: &BaseModel, pressure_pa: f64) -> Result<f64> {
    let footprint = stack.footprint_m2();
    match base {
        BaseModel::Static(p) => {
            if footprint <= 0.0 {
                return Ok(0.0);
            }
            let full = StaticParams {
                geometry: p.geometry.with_area(footprint),
                ..*p
            };
            let v = static_voltage(&full, pressure_pa)?;
            Ok(v * stack.engaged_fraction(pressure_pa))
        }
        BaseModel::Dynamic(p, mode) => {
            if !(pressure_pa >= 0.0) {
                return Err(crate::Error::Domain(format!(
                    "pressure must be >= 0, got {pressure_pa}"
                )));
            }
            if footprint <= 0.0 {
                return Ok(0.0);
            }
            let charge = cycle_charge(p, stack.smoothed_area(pressure_pa), pressure_pa);
            let c_min = minimum_capacitance(&p.geometry.with_area(footprint), *mode);
            Ok(charge / c_min)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{dynamic_peak_voltage, Geometry};
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn zero_start_stack() -> GradientStack {
        GradientStack::uniform(&reference_areas(), 0.0, 3600.0, 2e-3).unwrap()
    }

    #[test]
    fn engaged_area_endpoints() {
        let s = zero_start_stack();
        assert!(rel(s.engaged_area(0.0), 4.05e-4) < 1e-12);
        assert!(rel(s.engaged_area(1e5), 20.25e-4) < 1e-12);
        assert!(rel(s.footprint_m2(), 20.25e-4) < 1e-12);
        let empty = GradientStack::new(vec![], 2e-3).unwrap();
        for p in [0.0, 10.0, 1e6] {
            assert_eq!(empty.engaged_area(p), 0.0);
            assert_eq!(empty.smoothed_area(p), 0.0);
        }
    }

    #[test]
    fn smoothed_matches_steps_outside_ramps() {
        let s = GradientStack::reference();
        for p in [0.0, 3.0, 6.0, 100.0, 904.5, 2000.0, 3600.0, 5000.0] {
            assert_eq!(s.smoothed_area(p), s.engaged_area(p), "P={p}");
        }
        // inside the ramp ending at 904.5 Pa
        let mid = 904.5 * (1.0 - 0.01);
        let a = s.smoothed_area(mid);
        assert!(a > s.engaged_area(mid) && a < reference_areas()[1]);
    }

    #[test]
    fn rejects_unordered_layers() {
        let bad = vec![
            Layer { area_m2: 2e-4, engage_pressure_pa: 0.0 },
            Layer { area_m2: 1e-4, engage_pressure_pa: 10.0 },
        ];
        assert!(GradientStack::new(bad, 1e-3).is_err());
        let bad = vec![
            Layer { area_m2: 1e-4, engage_pressure_pa: 10.0 },
            Layer { area_m2: 2e-4, engage_pressure_pa: 10.0 },
        ];
        assert!(GradientStack::new(bad, 1e-3).is_err());
    }

    #[test]
    fn no_contact_gives_zero() {
        let s = GradientStack::reference().with_smoothing(0.0).unwrap();
        let st = BaseModel::Static(StaticParams::default());
        let dy = BaseModel::Dynamic(DynamicParams::default(), PermittivityMode::Corrected);
        assert_eq!(gradient_response(&s, &st, 5.0).unwrap(), 0.0);
        assert_eq!(gradient_response(&s, &dy, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn full_engagement_equals_flat_model() {
        let s = GradientStack::reference();
        let footprint = s.footprint_m2();
        let sp = StaticParams {
            area_expansion_m2_per_pa: 1e-9,
            compression_m_per_pa: 1e-9,
            ..Default::default()
        };
        let flat = StaticParams {
            geometry: sp.geometry.with_area(footprint),
            ..sp
        };
        let v = gradient_response(&s, &BaseModel::Static(sp), 4000.0).unwrap();
        assert!(rel(v, static_voltage(&flat, 4000.0).unwrap()) < 1e-12);

        let dp = DynamicParams::default();
        let v = gradient_response(&s, &BaseModel::Dynamic(dp, PermittivityMode::Corrected), 4000.0)
            .unwrap();
        let flat = dynamic_peak_voltage(&dp, 4000.0, PermittivityMode::Corrected);
        assert!(rel(v, flat) < 1e-12);
    }

    #[test]
    fn gradient_beats_uniform_column_in_lowest_band() {
        // Comparator: a flat stack whose layers all share the top footprint,
        // read out over the same electrode.
        let s = GradientStack::reference();
        let dp = DynamicParams::default();
        let mode = PermittivityMode::Corrected;
        let base = BaseModel::Dynamic(dp, mode);
        let top = reference_areas()[0];
        let c_min = minimum_capacitance(&Geometry::default().with_area(s.footprint_m2()), mode);
        let flat = |p: f64| cycle_charge(&dp, top, p) / c_min;
        let (lo, hi) = (s.layers()[0].engage_pressure_pa, s.layers()[1].engage_pressure_pa);
        let grad_slope = (gradient_response(&s, &base, hi).unwrap()
            - gradient_response(&s, &base, lo).unwrap())
            / (hi - lo);
        let flat_slope = (flat(hi) - flat(lo)) / (hi - lo);
        assert!(grad_slope > flat_slope, "{grad_slope} vs {flat_slope}");
    }

    #[test]
    fn static_domain_errors_propagate() {
        let s = GradientStack::reference();
        let sp = StaticParams {
            compression_m_per_pa: 1e-7,
            ..Default::default()
        };
        assert!(gradient_response(&s, &BaseModel::Static(sp), 1e4).is_err());
    }

    fn arb_stack() -> impl Strategy<Value = GradientStack> {
        prop::collection::vec((1e-5f64..1e-3, 1.0f64..2000.0), 1..6).prop_map(|raw| {
            let mut area = 0.0;
            let mut pressure = 0.0;
            let layers = raw
                .into_iter()
                .map(|(da, dp)| {
                    area += da;
                    pressure += dp;
                    Layer { area_m2: area, engage_pressure_pa: pressure }
                })
                .collect();
            GradientStack::new(layers, 2e-3).unwrap()
        })
    }

    proptest! {
        #[test]
        fn engaged_area_monotone_and_saturating(stack in arb_stack(), p in 0.0f64..2e4, dp in 0.0f64..1e3) {
            prop_assert!(stack.engaged_area(p + dp) >= stack.engaged_area(p));
            prop_assert!(stack.smoothed_area(p + dp) >= stack.smoothed_area(p));
            prop_assert!(stack.engaged_area(p) <= stack.footprint_m2());
            prop_assert_eq!(stack.engaged_area(1e9), stack.footprint_m2());
        }

        #[test]
        fn response_is_continuous(stack in arb_stack(), p in 0.0f64..1.2e4) {
            let base = BaseModel::Dynamic(DynamicParams::default(), PermittivityMode::Corrected);
            let h = 1e-6;
            let a = gradient_response(&stack, &base, p).unwrap();
            let b = gradient_response(&stack, &base, p + h).unwrap();
            // slope bounded by the steepest contact ramp
            let min_width = stack.layers()[0].engage_pressure_pa * stack.smoothing_fraction;
            let vmax = dynamic_peak_voltage(&DynamicParams::default(), 1e9, PermittivityMode::Corrected);
            prop_assert!((b - a).abs() <= vmax * h * (1.0 / min_width + 1e-3) + 1e-9);
        }

        #[test]
        fn adding_a_top_layer_never_lowers_output(
            stack in arb_stack(),
            shrink in 0.1f64..0.99,
            earlier in 0.1f64..0.99,
            p in 0.0f64..1.2e4,
        ) {
            let first = stack.layers()[0];
            let mut layers = vec![Layer {
                area_m2: first.area_m2 * shrink,
                engage_pressure_pa: first.engage_pressure_pa * earlier,
            }];
            layers.extend_from_slice(stack.layers());
            let taller = GradientStack::new(layers, stack.layer_thickness_m).unwrap();
            for base in [
                BaseModel::Static(StaticParams::default()),
                BaseModel::Dynamic(DynamicParams::default(), PermittivityMode::Corrected),
            ] {
                let before = gradient_response(&stack, &base, p).unwrap();
                let after = gradient_response(&taller, &base, p).unwrap();
                prop_assert!(after >= before);
            }
        }
    }
}
