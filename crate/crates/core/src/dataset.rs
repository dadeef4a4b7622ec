//! Experimental melt-pool records: ingestion, model scoring, and
//! heat-source geometry calibration.
//!
//! Dataset files follow the experimental tables' units (W, mm/s, um);
//! everything is converted to SI at the boundary.

use std::collections::BTreeMap;
use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::heat_source::{HeatSourceGeometry, ProcessParameters};
use crate::material::Material;
use crate::meltpool::{self, ExtractionOptions, MeltPoolDimensions, SearchBox};
use crate::optim::{self, NelderMeadOptions};
use crate::quadrature::QuadratureSpec;
use crate::thermal_field;
use crate::units::mm_to_m;

/// One measured melt pool. Presentation units (W, mm/s, um).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub material: String,
    pub power_w: f64,
    pub speed_mm_s: f64,
    pub depth_um: f64,
    pub width_um: f64,
    pub length_um: f64,
    #[serde(default)]
    pub source: String,
}

impl ExperimentRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        if !(self.power_w > 0.0) {
            return Err(format!("power must be > 0, got {}", self.power_w));
        }
        if !(self.speed_mm_s > 0.0) {
            return Err(format!("speed must be > 0, got {}", self.speed_mm_s));
        }
        for (name, v) in [
            ("depth", self.depth_um),
            ("width", self.width_um),
            ("length", self.length_um),
        ] {
            if !(v > 0.0) {
                return Err(format!("{name} must be > 0, got {v}"));
            }
        }
        Ok(())
    }
}

/// A rejected input row with its line number and reason.
#[derive(Debug, Clone, Serialize)]
pub struct RowIssue {
    pub line: u64,
    pub message: String,
}

/// Loaded dataset plus per-row diagnostics for rejected rows.
#[derive(Debug)]
pub struct DatasetLoad {
    pub records: Vec<ExperimentRecord>,
    pub rejected: Vec<RowIssue>,
}

/// Parse a comma- or tab-delimited dataset with the header
/// `material,power_w,speed_mm_s,depth_um,width_um,length_um,source`.
/// Malformed rows are reported and skipped; an empty result is an error.
pub fn load_dataset<R: Read>(reader: R) -> Result<DatasetLoad> {
    let mut text = String::new();
    let mut reader = reader;
    reader.read_to_string(&mut text)?;
    let delimiter = if text.lines().next().is_some_and(|l| l.contains('\t')) {
        b'\t'
    } else {
        b','
    };

    let mut csv_reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for row in csv_reader.deserialize::<ExperimentRecord>() {
        match row {
            Ok(record) => match record.validate() {
                Ok(()) => records.push(record),
                Err(message) => rejected.push(RowIssue {
                    line: records.len() as u64 + rejected.len() as u64 + 2,
                    message,
                }),
            },
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line())
                    .unwrap_or(records.len() as u64 + rejected.len() as u64 + 2);
                rejected.push(RowIssue {
                    line,
                    message: e.to_string(),
                });
            }
        }
    }
    if records.is_empty() {
        return Err(CoreError::Dataset("empty dataset".into()));
    }
    Ok(DatasetLoad { records, rejected })
}

/// Forward-model settings shared by validation and calibration.
#[derive(Debug, Clone)]
pub struct ForwardSettings {
    /// Ambient temperature [K].
    pub ambient: f64,
    /// Simulated track length [m]; the probe time is the track end.
    pub track_length: f64,
    pub quadrature: QuadratureSpec,
    pub extraction: ExtractionOptions,
}

impl Default for ForwardSettings {
    fn default() -> Self {
        Self {
            ambient: 293.15,
            track_length: 2e-3,
            quadrature: QuadratureSpec::default(),
            extraction: ExtractionOptions::default(),
        }
    }
}

/// Run the single-track model for one (power [W], speed [mm/s]) condition
/// and extract the melt-pool dimensions at the end of the track.
pub fn predict_dimensions(
    geom: &HeatSourceGeometry,
    mat: &Material,
    power_w: f64,
    speed_mm_s: f64,
    settings: &ForwardSettings,
) -> Result<MeltPoolDimensions> {
    let speed = mm_to_m(speed_mm_s);
    let proc = ProcessParameters::new(power_w, speed, settings.ambient)?;
    let t = settings.track_length / speed;
    let evaluator = |point: [f64; 3], time: f64| {
        thermal_field::single_track_temperature(
            point,
            time,
            geom,
            &proc,
            mat,
            mat.absorptivity,
            &settings.quadrature,
        )
        .map(|s| s.temperature)
    };
    let source = [settings.track_length, 0.0, 0.0];
    let boxed = SearchBox::around_source(source, geom.a, geom.b, geom.c);
    meltpool::melt_pool_dimensions(&evaluator, t, mat.t_melt, &boxed, &settings.extraction)
}

/// Per-record comparison of prediction vs measurement.
#[derive(Debug, Clone, Serialize)]
pub struct RecordScore {
    pub record: ExperimentRecord,
    /// Predicted (length, width, depth) [um], when the simulation succeeded.
    pub predicted_um: Option<(f64, f64, f64)>,
    pub rel_err_length: Option<f64>,
    pub rel_err_width: Option<f64>,
    pub rel_err_depth: Option<f64>,
    /// Model predicted "no melt" against a positive measurement.
    pub no_melt_misprediction: bool,
    pub simulation_error: Option<String>,
}

/// Aggregate validation over a record set.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub scores: Vec<RecordScore>,
    /// Mean absolute percentage errors over scored records.
    pub mape_length: f64,
    pub mape_width: f64,
    pub mape_depth: f64,
    pub no_melt_mispredictions: usize,
    pub record_count: usize,
}

fn condition_key(power_w: f64, speed_mm_s: f64) -> (u64, u64) {
    (power_w.to_bits(), speed_mm_s.to_bits())
}

/// Score records against a per-condition prediction function. Repeated
/// (power, speed) conditions are simulated once and every measurement row is
/// scored against that single prediction.
pub fn score_records<F>(records: &[ExperimentRecord], predict: F) -> ValidationReport
where
    F: Fn(f64, f64) -> Result<MeltPoolDimensions> + Sync,
{
    let mut conditions: BTreeMap<(u64, u64), (f64, f64)> = BTreeMap::new();
    for r in records {
        conditions
            .entry(condition_key(r.power_w, r.speed_mm_s))
            .or_insert((r.power_w, r.speed_mm_s));
    }
    let condition_list: Vec<((u64, u64), (f64, f64))> =
        conditions.iter().map(|(k, v)| (*k, *v)).collect();
    let predictions: BTreeMap<(u64, u64), std::result::Result<MeltPoolDimensions, String>> =
        condition_list
            .par_iter()
            .map(|(key, (p, v))| (*key, predict(*p, *v).map_err(|e| e.to_string())))
            .collect();

    let mut scores = Vec::with_capacity(records.len());
    let (mut sum_l, mut sum_w, mut sum_d) = (0.0, 0.0, 0.0);
    let mut scored = 0usize;
    let mut no_melt = 0usize;
    for record in records {
        let prediction = &predictions[&condition_key(record.power_w, record.speed_mm_s)];
        let score = match prediction {
            Err(e) => RecordScore {
                record: record.clone(),
                predicted_um: None,
                rel_err_length: None,
                rel_err_width: None,
                rel_err_depth: None,
                no_melt_misprediction: false,
                simulation_error: Some(e.clone()),
            },
            Ok(dims) if !dims.melted => {
                no_melt += 1;
                RecordScore {
                    record: record.clone(),
                    predicted_um: Some((0.0, 0.0, 0.0)),
                    rel_err_length: None,
                    rel_err_width: None,
                    rel_err_depth: None,
                    no_melt_misprediction: true,
                    simulation_error: None,
                }
            }
            Ok(dims) => {
                let pred_um = (
                    crate::units::m_to_um(dims.length),
                    crate::units::m_to_um(dims.width),
                    crate::units::m_to_um(dims.depth),
                );
                let rel = |pred: f64, meas: f64| (pred - meas) / meas;
                let (el, ew, ed) = (
                    rel(pred_um.0, record.length_um),
                    rel(pred_um.1, record.width_um),
                    rel(pred_um.2, record.depth_um),
                );
                sum_l += el.abs();
                sum_w += ew.abs();
                sum_d += ed.abs();
                scored += 1;
                RecordScore {
                    record: record.clone(),
                    predicted_um: Some(pred_um),
                    rel_err_length: Some(el),
                    rel_err_width: Some(ew),
                    rel_err_depth: Some(ed),
                    no_melt_misprediction: false,
                    simulation_error: None,
                }
            }
        };
        scores.push(score);
    }

    let denom = scored.max(1) as f64;
    ValidationReport {
        scores,
        mape_length: 100.0 * sum_l / denom,
        mape_width: 100.0 * sum_w / denom,
        mape_depth: 100.0 * sum_d / denom,
        no_melt_mispredictions: no_melt,
        record_count: records.len(),
    }
}

/// Validate model predictions against the record set.
pub fn validate(
    records: &[ExperimentRecord],
    geom: &HeatSourceGeometry,
    mat: &Material,
    settings: &ForwardSettings,
) -> Result<ValidationReport> {
    for r in records {
        if !r.material.eq_ignore_ascii_case(&mat.name) {
            return Err(CoreError::Dataset(format!(
                "record material {:?} does not match loaded material {:?}",
                r.material, mat.name
            )));
        }
    }
    Ok(score_records(records, |p, v| {
        predict_dimensions(geom, mat, p, v, settings)
    }))
}

/// Fit heat-source semi-axes to measurements by derivative-free least
/// squares on summed squared relative errors. Bounds in meters, ordered
/// (a, b, c). Deterministic given the fixed starting simplex (bound-box
/// midpoint).
pub fn calibrate_geometry(
    records: &[ExperimentRecord],
    mat: &Material,
    lower: [f64; 3],
    upper: [f64; 3],
    settings: &ForwardSettings,
    nm_opts: &NelderMeadOptions,
) -> Result<(HeatSourceGeometry, f64)> {
    if records.len() < 3 {
        return Err(CoreError::Dataset(
            "calibration needs at least 3 records".into(),
        ));
    }
    for i in 0..3 {
        if !(lower[i] > 0.0 && lower[i] <= upper[i]) {
            return Err(CoreError::Dataset(format!(
                "calibration bounds must be positive and ordered on axis {i}"
            )));
        }
    }

    // residual for a no-melt or failed prediction against a real melt pool
    const MISS_PENALTY: f64 = 9.0;

    let objective = |x: &[f64]| -> f64 {
        let Ok(geom) = HeatSourceGeometry::new(x[0], x[1], x[2]) else {
            return f64::INFINITY;
        };
        let report = score_records(records, |p, v| {
            predict_dimensions(&geom, mat, p, v, settings)
        });
        let mut total = 0.0;
        let mut any_success = false;
        for s in &report.scores {
            match (s.rel_err_length, s.rel_err_width, s.rel_err_depth) {
                (Some(el), Some(ew), Some(ed)) => {
                    any_success = true;
                    total += el * el + ew * ew + ed * ed;
                }
                _ => total += MISS_PENALTY,
            }
        }
        if any_success {
            total
        } else {
            f64::INFINITY
        }
    };

    let x0 = [
        0.5 * (lower[0] + upper[0]),
        0.5 * (lower[1] + upper[1]),
        0.5 * (lower[2] + upper[2]),
    ];
    let first = optim::minimize_bounded(&objective, &x0, &lower, &upper, nm_opts)?;
    // restart with a fresh, smaller simplex to polish past any collapse
    let polish_opts = NelderMeadOptions {
        initial_step: 0.25 * nm_opts.initial_step,
        ..nm_opts.clone()
    };
    let second = optim::minimize_bounded(&objective, &first.x, &lower, &upper, &polish_opts)?;
    let minimum = if second.value < first.value {
        second
    } else {
        first
    };
    if !minimum.value.is_finite() {
        return Err(CoreError::Dataset(
            "all calibration simulations failed or predicted no melt".into(),
        ));
    }
    Ok((
        HeatSourceGeometry::new(minimum.x[0], minimum.x[1], minimum.x[2])?,
        minimum.value,
    ))
}

/// Helper for building synthetic records from model output [m] -> [um].
pub fn record_from_dimensions(
    material: &str,
    power_w: f64,
    speed_mm_s: f64,
    dims: &MeltPoolDimensions,
    source: &str,
) -> ExperimentRecord {
    ExperimentRecord {
        material: material.to_string(),
        power_w,
        speed_mm_s,
        depth_um: crate::units::m_to_um(dims.depth),
        width_um: crate::units::m_to_um(dims.width),
        length_um: crate::units::m_to_um(dims.length),
        source: source.to_string(),
    }
}
