//! Closed-form transduction models.
//!
//! Static channel: the ePTFE film and electrode form a parallel-plate
//! capacitor holding a fixed transferred charge; pressure grows the contact
//! area and compresses the dielectric.
//!
//! Dynamic channel: each contact-separation cycle transfers a
//! pressure-dependent surface charge that is read out across the minimum
//! capacitance at full separation. The saturating empirical forms
//! [`dynamic_voltage`] / [`dynamic_sensitivity`] are kept alongside.
//!
//! All functions are pure. Pressures are in Pa.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Vacuum permittivity in F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Relative permittivity used when none is configured (typical PTFE).
pub const DEFAULT_RELATIVE_PERMITTIVITY: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    /// Initial contact area, m².
    pub contact_area_m2: f64,
    /// ePTFE dielectric thickness, m.
    pub dielectric_thickness_m: f64,
    /// Preset separation gap, m.
    pub gap_m: f64,
    pub relative_permittivity: f64,
}

impl Geometry {
    pub fn new(
        contact_area_m2: f64,
        dielectric_thickness_m: f64,
        gap_m: f64,
        relative_permittivity: f64,
    ) -> Result<Self> {
        let g = Self {
            contact_area_m2,
            dielectric_thickness_m,
            gap_m,
            relative_permittivity,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.contact_area_m2 > 0.0 && self.contact_area_m2.is_finite()) {
            return Err(invalid("contact area must be > 0"));
        }
        if !(self.dielectric_thickness_m > 0.0 && self.dielectric_thickness_m.is_finite()) {
            return Err(invalid("dielectric thickness must be > 0"));
        }
        if !(self.gap_m >= 0.0 && self.gap_m.is_finite()) {
            return Err(invalid("separation gap must be >= 0"));
        }
        if !(self.relative_permittivity >= 1.0 && self.relative_permittivity.is_finite()) {
            return Err(invalid("relative permittivity must be >= 1"));
        }
        Ok(())
    }

    /// Same geometry with a different contact area.
    pub fn with_area(&self, contact_area_m2: f64) -> Self {
        Self {
            contact_area_m2,
            ..*self
        }
    }
}

impl Default for Geometry {
    /// 4 cm × 4 cm electrode, 0.5 mm ePTFE, 1 mm preset gap.
    fn default() -> Self {
        Self {
            contact_area_m2: 1.6e-3,
            dielectric_thickness_m: 5e-4,
            gap_m: 1e-3,
            relative_permittivity: DEFAULT_RELATIVE_PERMITTIVITY,
        }
    }
}

/// Parameters of the parallel-plate static model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticParams {
    /// Transferred charge, C. Either sign.
    pub charge_c: f64,
    /// Area expansion coefficient α, m²/Pa.
    pub area_expansion_m2_per_pa: f64,
    /// Thickness compression coefficient β, m/Pa.
    pub compression_m_per_pa: f64,
    pub geometry: Geometry,
}

impl StaticParams {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if !self.charge_c.is_finite() {
            return Err(invalid("transferred charge must be finite"));
        }
        if !(self.area_expansion_m2_per_pa >= 0.0 && self.area_expansion_m2_per_pa.is_finite()) {
            return Err(invalid("area expansion coefficient must be >= 0"));
        }
        if !(self.compression_m_per_pa >= 0.0 && self.compression_m_per_pa.is_finite()) {
            return Err(invalid("compression coefficient must be >= 0"));
        }
        Ok(())
    }

    /// Pressure at which the dielectric would be fully compressed (∞ if β = 0).
    pub fn collapse_pressure_pa(&self) -> f64 {
        if self.compression_m_per_pa > 0.0 {
            self.geometry.dielectric_thickness_m / self.compression_m_per_pa
        } else {
            f64::INFINITY
        }
    }

    /// Contact area A(P) = A0 + αP.
    pub fn area_at(&self, pressure_pa: f64) -> f64 {
        self.geometry.contact_area_m2 + self.area_expansion_m2_per_pa * pressure_pa
    }

    /// Dielectric thickness d(P) = d − βP.
    pub fn thickness_at(&self, pressure_pa: f64) -> f64 {
        self.geometry.dielectric_thickness_m - self.compression_m_per_pa * pressure_pa
    }

    fn check_pressure(&self, pressure_pa: f64) -> Result<()> {
        if !(pressure_pa >= 0.0) || !pressure_pa.is_finite() {
            return Err(Error::Domain(format!(
                "pressure must be finite and >= 0, got {pressure_pa}"
            )));
        }
        if self.thickness_at(pressure_pa) <= 0.0 {
            return Err(Error::Domain(format!(
                "dielectric fully compressed at {pressure_pa} Pa (collapse at {} Pa)",
                self.collapse_pressure_pa()
            )));
        }
        Ok(())
    }
}

impl Default for StaticParams {
    fn default() -> Self {
        Self {
            charge_c: 1e-9,
            area_expansion_m2_per_pa: 0.0,
            compression_m_per_pa: 0.0,
            geometry: Geometry::default(),
        }
    }
}

/// Parameters of the dynamic (contact-separation) model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicParams {
    /// Maximum surface charge density σ0, C/m².
    pub max_charge_density_c_per_m2: f64,
    /// Charge-density saturation constant m, 1/Pa.
    pub charge_saturation_per_pa: f64,
    /// Saturation voltage of the empirical form, V.
    pub saturation_voltage_v: f64,
    /// Empirical sensitivity constant k, 1/Pa.
    pub sensitivity_per_pa: f64,
    pub geometry: Geometry,
}

impl DynamicParams {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if !(self.max_charge_density_c_per_m2 >= 0.0 && self.max_charge_density_c_per_m2.is_finite())
        {
            return Err(invalid("maximum charge density must be >= 0"));
        }
        if !(self.charge_saturation_per_pa > 0.0) {
            return Err(invalid("charge saturation constant must be > 0"));
        }
        if !(self.saturation_voltage_v >= 0.0 && self.saturation_voltage_v.is_finite()) {
            return Err(invalid("saturation voltage must be >= 0"));
        }
        if !(self.sensitivity_per_pa > 0.0 && self.sensitivity_per_pa.is_finite()) {
            return Err(invalid("sensitivity constant must be > 0"));
        }
        Ok(())
    }
}

impl Default for DynamicParams {
    /// 163.6 V saturation amplitude with k = 0.5 kPa⁻¹.
    fn default() -> Self {
        Self {
            max_charge_density_c_per_m2: 1e-5,
            charge_saturation_per_pa: 5e-4,
            saturation_voltage_v: 163.6,
            sensitivity_per_pa: 5e-4,
            geometry: Geometry::default(),
        }
    }
}

/// How the series dielectric/air stack is combined into one permittivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermittivityMode {
    /// 1/ε_eff = (d/(x+d))/ε_r + (x/(x+d)).
    #[default]
    Corrected,
    /// 1/ε_eff = (d/(x+d))/ε_r + (d/(x+d)); the dielectric fraction is
    /// repeated for the air term. Kept for comparison with published numbers.
    Literal,
}

/// C(P) = ε0·ε_r·A(P)/d(P).
pub fn static_capacitance(p: &StaticParams, pressure_pa: f64) -> Result<f64> {
    p.check_pressure(pressure_pa)?;
    Ok(VACUUM_PERMITTIVITY * p.geometry.relative_permittivity * p.area_at(pressure_pa)
        / p.thickness_at(pressure_pa))
}

/// V(P) = Q·(d − βP) / (ε0·ε_r·(A0 + αP)).
pub fn static_voltage(p: &StaticParams, pressure_pa: f64) -> Result<f64> {
    p.check_pressure(pressure_pa)?;
    Ok(p.charge_c * p.thickness_at(pressure_pa)
        / (VACUUM_PERMITTIVITY * p.geometry.relative_permittivity * p.area_at(pressure_pa)))
}

/// Signed dV/dP of [`static_voltage`], V/Pa.
pub fn static_sensitivity(p: &StaticParams, pressure_pa: f64) -> Result<f64> {
    p.check_pressure(pressure_pa)?;
    let alpha = p.area_expansion_m2_per_pa;
    let beta = p.compression_m_per_pa;
    let area = p.area_at(pressure_pa);
    let thickness = p.thickness_at(pressure_pa);
    let numerator = -beta * area - alpha * thickness;
    Ok(p.charge_c / (VACUUM_PERMITTIVITY * p.geometry.relative_permittivity) * numerator
        / (area * area))
}

/// σ(P) = σ0·(1 − e^(−mP)).
pub fn charge_density(p: &DynamicParams, pressure_pa: f64) -> f64 {
    p.max_charge_density_c_per_m2 * -(-p.charge_saturation_per_pa * pressure_pa).exp_m1()
}

pub fn effective_permittivity(g: &Geometry, mode: PermittivityMode) -> f64 {
    let total = g.gap_m + g.dielectric_thickness_m;
    let dielectric_fraction = g.dielectric_thickness_m / total;
    let air_fraction = match mode {
        PermittivityMode::Corrected => g.gap_m / total,
        PermittivityMode::Literal => dielectric_fraction,
    };
    1.0 / (dielectric_fraction / g.relative_permittivity + air_fraction)
}

/// Charge transferred in one cycle over `area_m2`.
pub fn cycle_charge(p: &DynamicParams, area_m2: f64, pressure_pa: f64) -> f64 {
    charge_density(p, pressure_pa) * area_m2
}

/// Minimum capacitance at full separation, ε0·ε_eff·A/(x + d).
pub fn minimum_capacitance(g: &Geometry, mode: PermittivityMode) -> f64 {
    VACUUM_PERMITTIVITY * effective_permittivity(g, mode) * g.contact_area_m2
        / (g.gap_m + g.dielectric_thickness_m)
}

/// Peak open-circuit voltage per cycle, σ(P)·(x + d)/(ε0·ε_eff). Independent
/// of the contact area.
pub fn dynamic_peak_voltage(p: &DynamicParams, pressure_pa: f64, mode: PermittivityMode) -> f64 {
    let g = &p.geometry;
    charge_density(p, pressure_pa) * (g.gap_m + g.dielectric_thickness_m)
        / (VACUUM_PERMITTIVITY * effective_permittivity(g, mode))
}

/// V(P) = V_max·(1 − e^(−kP)).
pub fn dynamic_voltage(p: &DynamicParams, pressure_pa: f64) -> f64 {
    p.saturation_voltage_v * -(-p.sensitivity_per_pa * pressure_pa).exp_m1()
}

/// dV/dP = V_max·k·e^(−kP).
pub fn dynamic_sensitivity(p: &DynamicParams, pressure_pa: f64) -> f64 {
    p.saturation_voltage_v * p.sensitivity_per_pa * (-p.sensitivity_per_pa * pressure_pa).exp()
}
