//! Run configuration: TOML schema, validation, and conversion to SI types.
//!
//! Config files use presentation units (mm, mm/s, um, degrees C, W); every
//! value is converted to SI on the way in.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use meltsim_core::heat_source::{HeatSourceGeometry, ProcessParameters};
use meltsim_core::material::Material;
use meltsim_core::meltpool::ExtractionOptions;
use meltsim_core::quadrature::QuadratureSpec;
use meltsim_core::thermal_field::ScanPattern;
use meltsim_core::units::{celsius_to_kelvin, mm_to_m, um_to_m};

use crate::error::{AppError, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub material: MaterialSection,
    pub geometry: GeometrySection,
    pub process: ProcessSection,
    #[serde(default)]
    pub scan: ScanSection,
    /// Probe time [s], or "end" for the instant the final segment ends.
    #[serde(default)]
    pub probe_time: ProbeTime,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    /// Path to a material TOML file, relative to the config file.
    pub file: Option<PathBuf>,
    /// Name of a bundled material ("ti6al4v").
    pub builtin: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub a_mm: f64,
    pub b_mm: f64,
    pub c_mm: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSection {
    pub power_w: f64,
    pub speed_mm_s: f64,
    #[serde(default = "default_ambient_c")]
    pub ambient_c: f64,
}

fn default_ambient_c() -> f64 {
    20.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub tracks: usize,
    pub track_length_mm: f64,
    pub hatch_spacing_um: f64,
    pub time_spacing_s: f64,
    pub layer_thickness_um: f64,
    pub layers: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            tracks: 1,
            track_length_mm: 2.0,
            hatch_spacing_um: 0.0,
            time_spacing_s: 0.0,
            layer_thickness_um: 0.0,
            layers: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum ProbeTime {
    Seconds(f64),
    Keyword(ProbeKeyword),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKeyword {
    End,
}

impl Default for ProbeTime {
    fn default() -> Self {
        ProbeTime::Keyword(ProbeKeyword::End)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub coarse_samples: usize,
}

impl Default for NumericsSection {
    fn default() -> Self {
        let quad = QuadratureSpec::default();
        let extraction = ExtractionOptions::default();
        Self {
            rel_tol: quad.rel_tol,
            abs_tol: quad.abs_tol,
            max_subdivisions: quad.max_subdivisions,
            coarse_samples: extraction.coarse_samples,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub grid_n1: usize,
    pub grid_n2: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            grid_n1: 81,
            grid_n2: 61,
        }
    }
}

/// Scan-pattern defaults in SI units, reusable across sweep rows.
#[derive(Debug, Clone, Copy)]
pub struct ScanDefaults {
    pub tracks: usize,
    pub track_length: f64,
    pub hatch_spacing: f64,
    pub time_spacing: f64,
    pub layer_thickness: f64,
    pub layers: usize,
}

impl ScanDefaults {
    pub fn pattern(&self, speed: f64, power: f64) -> Result<ScanPattern> {
        ScanPattern::unidirectional(
            self.tracks,
            self.track_length,
            speed,
            power,
            self.hatch_spacing,
            self.time_spacing,
            self.layer_thickness,
            self.layers,
        )
        .map_err(AppError::from_config_err)
    }
}

/// A fully validated run: SI units throughout.
pub struct Run {
    pub material: Material,
    pub geometry: HeatSourceGeometry,
    pub process: ProcessParameters,
    pub scan: ScanDefaults,
    pub pattern: ScanPattern,
    /// "end" in the config resolves to the pattern end at load time; an
    /// explicit value is carried as-is.
    pub probe_is_end: bool,
    /// Probe time [s].
    pub probe_time: f64,
    pub quadrature: QuadratureSpec,
    pub extraction: ExtractionOptions,
    pub grid_n1: usize,
    pub grid_n2: usize,
    /// Raw config bytes, for the output metadata hash.
    pub config_bytes: Vec<u8>,
}

pub fn load(config_path: &Path) -> Result<Run> {
    let bytes = std::fs::read(config_path)
        .map_err(|e| AppError::io(format!("reading {}: {e}", config_path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| AppError::config("config file is not valid UTF-8".into()))?;
    let file: ConfigFile =
        toml::from_str(&text).map_err(|e| AppError::config(format!("config parse error: {e}")))?;

    let material = load_material(&file.material, config_path)?;

    let geometry = HeatSourceGeometry::new(
        mm_to_m(file.geometry.a_mm),
        mm_to_m(file.geometry.b_mm),
        mm_to_m(file.geometry.c_mm),
    )
    .map_err(AppError::from_config_err)?;

    let ambient = celsius_to_kelvin(file.process.ambient_c);
    if ambient >= material.t_liquidus {
        return Err(AppError::config(format!(
            "ambient temperature {} C is at or above the material liquidus",
            file.process.ambient_c
        )));
    }
    let process =
        ProcessParameters::new(file.process.power_w, mm_to_m(file.process.speed_mm_s), ambient)
            .map_err(AppError::from_config_err)?;
    if process.speed <= 0.0 {
        return Err(AppError::config("scan speed must be > 0".into()));
    }

    let scan = ScanDefaults {
        tracks: file.scan.tracks,
        track_length: mm_to_m(file.scan.track_length_mm),
        hatch_spacing: um_to_m(file.scan.hatch_spacing_um),
        time_spacing: file.scan.time_spacing_s,
        layer_thickness: um_to_m(file.scan.layer_thickness_um),
        layers: file.scan.layers,
    };
    let pattern = scan.pattern(process.speed, process.power)?;

    let (probe_is_end, probe_time) = match file.probe_time {
        ProbeTime::Keyword(ProbeKeyword::End) => (true, pattern.end_time()),
        ProbeTime::Seconds(s) => {
            if !(s > 0.0) || !s.is_finite() {
                return Err(AppError::config(format!(
                    "probe time must be a positive number of seconds or \"end\", got {s}"
                )));
            }
            (false, s)
        }
    };

    let numerics = &file.numerics;
    if !(numerics.rel_tol > 0.0) || !(numerics.abs_tol >= 0.0) {
        return Err(AppError::config(
            "quadrature tolerances must be positive".into(),
        ));
    }
    if numerics.coarse_samples < 2 {
        return Err(AppError::config("coarse_samples must be >= 2".into()));
    }
    let quadrature = QuadratureSpec {
        rel_tol: numerics.rel_tol,
        abs_tol: numerics.abs_tol,
        max_subdivisions: numerics.max_subdivisions,
    };
    let extraction = ExtractionOptions {
        coarse_samples: numerics.coarse_samples,
        ..ExtractionOptions::default()
    };

    if file.output.grid_n1 < 2 || file.output.grid_n2 < 2 {
        return Err(AppError::config(
            "output grid resolution must be >= 2 per axis".into(),
        ));
    }

    Ok(Run {
        material,
        geometry,
        process,
        scan,
        pattern,
        probe_is_end,
        probe_time,
        quadrature,
        extraction,
        grid_n1: file.output.grid_n1,
        grid_n2: file.output.grid_n2,
        config_bytes: bytes,
    })
}

fn load_material(section: &MaterialSection, config_path: &Path) -> Result<Material> {
    match (&section.file, &section.builtin) {
        (Some(_), Some(_)) => Err(AppError::config(
            "material section must set either file or builtin, not both".into(),
        )),
        (Some(path), None) => {
            let resolved = if path.is_absolute() {
                path.clone()
            } else {
                config_path.parent().unwrap_or(Path::new(".")).join(path)
            };
            if !resolved.exists() {
                return Err(AppError::io(format!(
                    "material file not found: {}",
                    resolved.display()
                )));
            }
            Material::load(&resolved).map_err(AppError::from_config_err)
        }
        (None, Some(name)) => match name.to_ascii_lowercase().as_str() {
            "ti6al4v" | "ti-6al-4v" => Ok(Material::ti6al4v()),
            other => Err(AppError::config(format!("unknown builtin material {other:?}"))),
        },
        (None, None) => Err(AppError::config(
            "material section must set file or builtin".into(),
        )),
    }
}

/// Sweep specification: cross product of powers, speeds, and geometries.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub powers_w: Vec<f64>,
    pub speeds_mm_s: Vec<f64>,
    /// (a, b, c) triples in mm.
    pub geometries_mm: Vec<[f64; 3]>,
}

pub fn load_sweep_spec(path: &Path) -> Result<SweepSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::io(format!("reading {}: {e}", path.display())))?;
    let spec: SweepSpec =
        toml::from_str(&text).map_err(|e| AppError::config(format!("sweep spec parse error: {e}")))?;
    if spec.powers_w.is_empty() || spec.speeds_mm_s.is_empty() || spec.geometries_mm.is_empty() {
        return Err(AppError::config(
            "sweep spec lists must be non-empty".into(),
        ));
    }
    Ok(spec)
}

/// Calibration bounds on the heat-source semi-axes, in mm.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsFile {
    pub lower_mm: [f64; 3],
    pub upper_mm: [f64; 3],
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

fn default_max_iterations() -> usize {
    300
}

pub fn load_bounds(path: &Path) -> Result<BoundsFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::io(format!("reading {}: {e}", path.display())))?;
    let bounds: BoundsFile =
        toml::from_str(&text).map_err(|e| AppError::config(format!("bounds parse error: {e}")))?;
    for i in 0..3 {
        if !(bounds.lower_mm[i] > 0.0 && bounds.lower_mm[i] <= bounds.upper_mm[i]) {
            return Err(AppError::config(format!(
                "bounds must be positive and ordered on axis {i}"
            )));
        }
    }
    Ok(bounds)
}
