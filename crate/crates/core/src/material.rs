//! Temperature-dependent thermophysical properties with latent-heat
//! phase change folded into a modified heat capacity.
//!
//! Property tables are piecewise-linear with clamped extrapolation; the
//! liquid-fraction ramp is differentiated analytically, so the latent-heat
//! contribution is an exact boxcar of height `L_f / (T_L - T_s)` over the
//! mushy zone.

use serde::Deserialize;

use crate::error::{CoreError, Result};

pub const MATERIAL_SCHEMA_VERSION: u32 = 1;

/// Ordered (temperature [K], value) breakpoints, interpolated linearly and
/// clamped outside the table range.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyTable {
    breakpoints: Vec<(f64, f64)>,
}

impl PropertyTable {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(CoreError::Material(
                "property table needs at least 2 breakpoints".into(),
            ));
        }
        for window in breakpoints.windows(2) {
            if !(window[1].0 > window[0].0) {
                return Err(CoreError::Material(format!(
                    "table temperatures must be strictly increasing ({} then {})",
                    window[0].0, window[1].0
                )));
            }
        }
        for &(t, v) in &breakpoints {
            if !t.is_finite() || !v.is_finite() || t <= 0.0 || v <= 0.0 {
                return Err(CoreError::Material(format!(
                    "table entries must be finite and positive, got ({t}, {v})"
                )));
            }
        }
        Ok(Self { breakpoints })
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// Piecewise-linear interpolation, clamped to the end values.
    pub fn value_at(&self, temperature: f64) -> f64 {
        let pts = &self.breakpoints;
        if temperature <= pts[0].0 {
            return pts[0].1;
        }
        if temperature >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        let idx = pts.partition_point(|&(t, _)| t <= temperature);
        let (t0, v0) = pts[idx - 1];
        let (t1, v1) = pts[idx];
        v0 + (v1 - v0) * (temperature - t0) / (t1 - t0)
    }

    pub fn min_value(&self) -> f64 {
        self.breakpoints.iter().map(|p| p.1).fold(f64::MAX, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.breakpoints.iter().map(|p| p.1).fold(f64::MIN, f64::max)
    }
}

/// An alloy with temperature-dependent conductivity and specific heat.
#[derive(Debug, Clone)]
pub struct Material {
    pub name: String,
    /// Density [kg/m^3].
    pub density: f64,
    /// Latent heat of fusion [J/kg].
    pub latent_heat_fusion: f64,
    /// Solidus temperature [K].
    pub t_solidus: f64,
    /// Liquidus temperature [K].
    pub t_liquidus: f64,
    /// Melting temperature used for the melt-pool isotherm [K].
    pub t_melt: f64,
    /// Laser absorptivity, in (0, 1].
    pub absorptivity: f64,
    /// Thermal conductivity k(T) [W/(m K)].
    pub conductivity: PropertyTable,
    /// Specific heat C_p(T) [J/(kg K)].
    pub specific_heat: PropertyTable,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialFile {
    schema_version: u32,
    name: String,
    density: f64,
    latent_heat_fusion: f64,
    t_solidus: f64,
    t_liquidus: f64,
    t_melt: Option<f64>,
    absorptivity: f64,
    conductivity: Vec<(f64, f64)>,
    specific_heat: Vec<(f64, f64)>,
}

fn check_temperature(t: f64) -> Result<()> {
    if !t.is_finite() || t <= 0.0 {
        return Err(CoreError::Domain(format!(
            "temperature must be finite and positive, got {t}"
        )));
    }
    Ok(())
}

impl Material {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        density: f64,
        latent_heat_fusion: f64,
        t_solidus: f64,
        t_liquidus: f64,
        t_melt: Option<f64>,
        absorptivity: f64,
        conductivity: PropertyTable,
        specific_heat: PropertyTable,
    ) -> Result<Self> {
        if !(density > 0.0) {
            return Err(CoreError::Material(format!("density must be > 0, got {density}")));
        }
        if !(latent_heat_fusion >= 0.0) {
            return Err(CoreError::Material(format!(
                "latent heat of fusion must be >= 0, got {latent_heat_fusion}"
            )));
        }
        if !(absorptivity > 0.0 && absorptivity <= 1.0) {
            return Err(CoreError::Material(format!(
                "absorptivity must be in (0, 1], got {absorptivity}"
            )));
        }
        if !(t_solidus < t_liquidus) {
            return Err(CoreError::Material(format!(
                "solidus {t_solidus} must be below liquidus {t_liquidus}"
            )));
        }
        // melting temperature defaults to the mushy-zone midpoint
        let t_melt = t_melt.unwrap_or(0.5 * (t_solidus + t_liquidus));
        if !(t_solidus <= t_melt && t_melt <= t_liquidus) {
            return Err(CoreError::Material(format!(
                "melting temperature {t_melt} must lie in [{t_solidus}, {t_liquidus}]"
            )));
        }
        Ok(Self {
            name: name.into(),
            density,
            latent_heat_fusion,
            t_solidus,
            t_liquidus,
            t_melt,
            absorptivity,
            conductivity,
            specific_heat,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: MaterialFile =
            toml::from_str(text).map_err(|e| CoreError::Material(format!("parse error: {e}")))?;
        if raw.schema_version != MATERIAL_SCHEMA_VERSION {
            return Err(CoreError::Material(format!(
                "unsupported material schema version {} (expected {})",
                raw.schema_version, MATERIAL_SCHEMA_VERSION
            )));
        }
        Self::new(
            raw.name,
            raw.density,
            raw.latent_heat_fusion,
            raw.t_solidus,
            raw.t_liquidus,
            raw.t_melt,
            raw.absorptivity,
            PropertyTable::new(raw.conductivity)?,
            PropertyTable::new(raw.specific_heat)?,
        )
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// The bundled Ti-6Al-4V property file (literature data, see the file
    /// header for sources).
    pub fn ti6al4v() -> Self {
        Self::from_toml_str(include_str!("../data/ti6al4v.toml"))
            .expect("bundled Ti-6Al-4V data is valid")
    }

    /// Thermal conductivity k(T) [W/(m K)].
    pub fn conductivity(&self, temperature: f64) -> Result<f64> {
        check_temperature(temperature)?;
        Ok(self.conductivity.value_at(temperature))
    }

    /// Specific heat C_p(T) [J/(kg K)], without the latent-heat term.
    pub fn specific_heat(&self, temperature: f64) -> Result<f64> {
        check_temperature(temperature)?;
        Ok(self.specific_heat.value_at(temperature))
    }

    /// Liquid fraction: 0 below solidus, 1 above liquidus, linear ramp
    /// across the mushy zone.
    pub fn liquid_fraction(&self, temperature: f64) -> Result<f64> {
        check_temperature(temperature)?;
        Ok(if temperature <= self.t_solidus {
            0.0
        } else if temperature >= self.t_liquidus {
            1.0
        } else {
            (temperature - self.t_solidus) / (self.t_liquidus - self.t_solidus)
        })
    }

    /// C_p^m(T) = C_p(T) + L_f * d(f_l)/dT, with the ramp derivative taken
    /// analytically: 1/(T_L - T_s) inside the mushy zone, 0 outside.
    pub fn modified_heat_capacity(&self, temperature: f64) -> Result<f64> {
        let base = self.specific_heat(temperature)?;
        let in_mushy = temperature >= self.t_solidus && temperature <= self.t_liquidus;
        Ok(if in_mushy {
            base + self.latent_heat_fusion / (self.t_liquidus - self.t_solidus)
        } else {
            base
        })
    }

    /// alpha(T) = k(T) / (rho * C_p^m(T)) [m^2/s].
    pub fn thermal_diffusivity(&self, temperature: f64) -> Result<f64> {
        Ok(self.conductivity(temperature)? / (self.density * self.modified_heat_capacity(temperature)?))
    }
}
