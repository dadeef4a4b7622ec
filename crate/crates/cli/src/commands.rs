//! Command implementations: simulate, sweep, contour, validate, calibrate.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use meltsim_core::dataset::{self, ForwardSettings};
use meltsim_core::heat_source::HeatSourceGeometry;
use meltsim_core::meltpool::{self, MeltPoolDimensions, Plane, SearchBox};
use meltsim_core::optim::NelderMeadOptions;
use meltsim_core::thermal_field::{self, ScanPattern};
use meltsim_core::units::{kelvin_to_celsius, m_to_mm, mm_to_m};

use crate::config::{self, Run};
use crate::error::{AppError, Result};

/// Source center position at probe time: the active (or most recent)
/// segment's laser position.
fn source_position(pattern: &ScanPattern, t: f64) -> [f64; 3] {
    let segment = pattern
        .segments
        .iter()
        .rev()
        .find(|s| s.start_time <= t)
        .unwrap_or(&pattern.segments[0]);
    segment.position_at(t)
}

fn field_evaluator<'a>(
    run: &'a Run,
) -> impl Fn([f64; 3], f64) -> meltsim_core::error::Result<f64> + Sync + 'a {
    move |point, t| {
        thermal_field::multi_track_temperature(
            point,
            t,
            &run.pattern,
            &run.geometry,
            &run.process,
            &run.material,
            run.material.absorptivity,
            &run.quadrature,
        )
        .map(|s| s.temperature)
    }
}

fn extract_dimensions(run: &Run) -> Result<MeltPoolDimensions> {
    let evaluator = field_evaluator(run);
    let source = source_position(&run.pattern, run.probe_time);
    let search = SearchBox::around_source(source, run.geometry.a, run.geometry.b, run.geometry.c);
    meltpool::melt_pool_dimensions(
        &evaluator,
        run.probe_time,
        run.material.t_melt,
        &search,
        &run.extraction,
    )
    .map_err(AppError::from_simulation_err)
}

#[derive(Serialize)]
struct Summary {
    material: String,
    geometry_mm: [f64; 3],
    power_w: f64,
    speed_mm_s: f64,
    tracks: usize,
    probe_time_s: f64,
    melted: bool,
    length_mm: f64,
    width_mm: f64,
    depth_mm: f64,
    peak_t_c: f64,
}

fn summarize(run: &Run, dims: &MeltPoolDimensions) -> Summary {
    Summary {
        material: run.material.name.clone(),
        geometry_mm: [
            m_to_mm(run.geometry.a),
            m_to_mm(run.geometry.b),
            m_to_mm(run.geometry.c),
        ],
        power_w: run.process.power,
        speed_mm_s: m_to_mm(run.process.speed),
        tracks: run.pattern.segments.len(),
        probe_time_s: run.probe_time,
        melted: dims.melted,
        length_mm: m_to_mm(dims.length),
        width_mm: m_to_mm(dims.width),
        depth_mm: m_to_mm(dims.depth),
        peak_t_c: kelvin_to_celsius(dims.peak_temperature),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| AppError::simulation(format!("serializing report: {e}")))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| AppError::io(format!("writing {}: {e}", path.display())))?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| AppError::io(format!("creating {}: {e}", dir.display())))
}

pub fn run_simulate(
    config_path: &Path,
    contour: Option<Plane>,
    out: Option<&Path>,
) -> Result<()> {
    let run = config::load(config_path)?;
    let dims = extract_dimensions(&run)?;
    let summary = summarize(&run, &dims);
    let text = serde_json::to_string_pretty(&summary)
        .map_err(|e| AppError::simulation(format!("serializing summary: {e}")))?;
    println!("{text}");

    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_json(&dir.join("summary.json"), &summary)?;
    }
    if let Some(plane) = contour {
        let dir = out.unwrap_or(Path::new("."));
        ensure_dir(dir)?;
        export_contour(&run, plane, run.grid_n1, run.grid_n2, dir)?;
    }
    Ok(())
}

/// Default contour window: the full pattern footprint with a source-scaled
/// margin.
fn contour_ranges(run: &Run, plane: Plane) -> ((f64, f64), (f64, f64)) {
    let geom = &run.geometry;
    let pattern = &run.pattern;
    let x_max = pattern
        .segments
        .iter()
        .map(|s| s.position_at(s.end_time())[0])
        .fold(f64::MIN, f64::max);
    let x_min = pattern
        .segments
        .iter()
        .map(|s| s.start_position[0])
        .fold(f64::MAX, f64::min);
    let y_max = pattern
        .segments
        .iter()
        .map(|s| s.start_position[1])
        .fold(f64::MIN, f64::max);
    let x_range = (x_min - 6.0 * geom.a, x_max + 4.0 * geom.a);
    match plane {
        Plane::Top => (x_range, (-6.0 * geom.b, y_max + 6.0 * geom.b)),
        Plane::Side => (x_range, (-8.0 * geom.c, 0.0)),
    }
}

#[derive(Serialize)]
struct ContourExport {
    config_sha256: String,
    plane: Plane,
    probe_time_s: f64,
    x_range_mm: (f64, f64),
    second_axis_range_mm: (f64, f64),
    n1: usize,
    n2: usize,
    /// Row-major temperatures [C], rows along the second axis.
    temperatures_c: Vec<f64>,
}

fn config_hash(run: &Run) -> String {
    let mut hasher = Sha256::new();
    hasher.update(&run.config_bytes);
    format!("{:x}", hasher.finalize())
}

fn export_contour(run: &Run, plane: Plane, n1: usize, n2: usize, dir: &Path) -> Result<()> {
    let evaluator = field_evaluator(run);
    let (r1, r2) = contour_ranges(run, plane);
    let grid = meltpool::contour_grid(&evaluator, run.probe_time, plane, r1, r2, n1, n2)
        .map_err(AppError::from_simulation_err)?;
    let name = match plane {
        Plane::Top => "top",
        Plane::Side => "side",
    };
    let hash = config_hash(run);

    let csv_path = dir.join(format!("contour_{name}.csv"));
    let mut buffer = Vec::new();
    writeln!(buffer, "# meltsim contour, plane {name}").ok();
    writeln!(buffer, "# config_sha256: {hash}").ok();
    writeln!(buffer, "# probe_time_s: {}", run.probe_time).ok();
    writeln!(buffer, "# units: mm, C").ok();
    grid.to_csv(&mut buffer)
        .map_err(AppError::from_simulation_err)?;
    std::fs::write(&csv_path, buffer)
        .map_err(|e| AppError::io(format!("writing {}: {e}", csv_path.display())))?;

    let export = ContourExport {
        config_sha256: hash,
        plane,
        probe_time_s: run.probe_time,
        x_range_mm: (m_to_mm(grid.axis1_range.0), m_to_mm(grid.axis1_range.1)),
        second_axis_range_mm: (m_to_mm(grid.axis2_range.0), m_to_mm(grid.axis2_range.1)),
        n1: grid.n1,
        n2: grid.n2,
        temperatures_c: grid
            .temperatures
            .iter()
            .map(|&t| kelvin_to_celsius(t))
            .collect(),
    };
    write_json(&dir.join(format!("contour_{name}.json")), &export)?;
    println!("wrote {}", csv_path.display());
    Ok(())
}

pub fn run_contour(config_path: &Path, plane: Plane, res: (usize, usize), out: &Path) -> Result<()> {
    let run = config::load(config_path)?;
    if res.0 < 2 || res.1 < 2 {
        return Err(AppError::config(
            "contour resolution must be >= 2 per axis".into(),
        ));
    }
    ensure_dir(out)?;
    export_contour(&run, plane, res.0, res.1, out)
}

pub fn run_sweep(config_path: &Path, spec_path: &Path) -> Result<()> {
    let run = config::load(config_path)?;
    let spec = config::load_sweep_spec(spec_path)?;

    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    writeln!(
        w,
        "a_mm,b_mm,c_mm,power_w,speed_mm_s,length_mm,width_mm,depth_mm,peak_t_c,status"
    )
    .map_err(|e| AppError::io(format!("writing sweep table: {e}")))?;

    for &[a_mm, b_mm, c_mm] in &spec.geometries_mm {
        let geometry = HeatSourceGeometry::new(mm_to_m(a_mm), mm_to_m(b_mm), mm_to_m(c_mm))
            .map_err(AppError::from_config_err)?;
        for &power in &spec.powers_w {
            for &speed_mm_s in &spec.speeds_mm_s {
                let row = sweep_cell(&run, &geometry, power, speed_mm_s);
                let (l, wd, d, peak, status) = match row {
                    Ok(dims) if dims.melted => (
                        format!("{:.6}", m_to_mm(dims.length)),
                        format!("{:.6}", m_to_mm(dims.width)),
                        format!("{:.6}", m_to_mm(dims.depth)),
                        format!("{:.1}", kelvin_to_celsius(dims.peak_temperature)),
                        "ok".to_string(),
                    ),
                    Ok(dims) => (
                        String::new(),
                        String::new(),
                        String::new(),
                        format!("{:.1}", kelvin_to_celsius(dims.peak_temperature)),
                        "no-melt".to_string(),
                    ),
                    Err(e) => (
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        format!("error: {e}"),
                    ),
                };
                writeln!(
                    w,
                    "{a_mm},{b_mm},{c_mm},{power},{speed_mm_s},{l},{wd},{d},{peak},{status}"
                )
                .map_err(|e| AppError::io(format!("writing sweep table: {e}")))?;
            }
        }
    }
    Ok(())
}

fn sweep_cell(
    run: &Run,
    geometry: &HeatSourceGeometry,
    power: f64,
    speed_mm_s: f64,
) -> Result<MeltPoolDimensions> {
    let speed = mm_to_m(speed_mm_s);
    let process =
        meltsim_core::heat_source::ProcessParameters::new(power, speed, run.process.ambient)
            .map_err(AppError::from_config_err)?;
    if speed <= 0.0 {
        return Err(AppError::config("sweep speed must be > 0".into()));
    }
    let pattern = run.scan.pattern(speed, power)?;
    let probe_time = if run.probe_is_end {
        pattern.end_time()
    } else {
        run.probe_time
    };
    let evaluator = |point: [f64; 3], t: f64| {
        thermal_field::multi_track_temperature(
            point,
            t,
            &pattern,
            geometry,
            &process,
            &run.material,
            run.material.absorptivity,
            &run.quadrature,
        )
        .map(|s| s.temperature)
    };
    let source = source_position(&pattern, probe_time);
    let search = SearchBox::around_source(source, geometry.a, geometry.b, geometry.c);
    meltpool::melt_pool_dimensions(
        &evaluator,
        probe_time,
        run.material.t_melt,
        &search,
        &run.extraction,
    )
    .map_err(AppError::from_simulation_err)
}

fn forward_settings(run: &Run) -> ForwardSettings {
    ForwardSettings {
        ambient: run.process.ambient,
        track_length: run.scan.track_length,
        quadrature: run.quadrature.clone(),
        extraction: run.extraction,
    }
}

fn load_records(data_path: &Path) -> Result<Vec<dataset::ExperimentRecord>> {
    let file = std::fs::File::open(data_path)
        .map_err(|e| AppError::io(format!("reading {}: {e}", data_path.display())))?;
    let load = dataset::load_dataset(file).map_err(AppError::from_config_err)?;
    for issue in &load.rejected {
        eprintln!(
            "warning: {} line {}: {}",
            data_path.display(),
            issue.line,
            issue.message
        );
    }
    Ok(load.records)
}

pub fn run_validate(config_path: &Path, data_path: &Path, out: &Path) -> Result<()> {
    let run = config::load(config_path)?;
    let records = load_records(data_path)?;
    let settings = forward_settings(&run);
    let report = dataset::validate(&records, &run.geometry, &run.material, &settings)
        .map_err(AppError::from_simulation_err)?;

    println!(
        "{:>7} {:>9} {:>10} {:>10} {:>10} {:>10} {:>8}",
        "power_w", "v_mm_s", "meas_l_um", "pred_l_um", "err_l", "err_w", "status"
    );
    for score in &report.scores {
        let r = &score.record;
        let (pred_l, err_l, err_w, status) = match (&score.predicted_um, score.rel_err_length) {
            (Some(p), Some(el)) => (
                format!("{:.1}", p.0),
                format!("{:+.1}%", el * 100.0),
                format!("{:+.1}%", score.rel_err_width.unwrap_or(f64::NAN) * 100.0),
                "ok",
            ),
            (Some(_), None) => ("-".into(), "-".into(), "-".into(), "no-melt"),
            _ => ("-".into(), "-".into(), "-".into(), "error"),
        };
        println!(
            "{:>7} {:>9} {:>10} {:>10} {:>10} {:>10} {:>8}",
            r.power_w, r.speed_mm_s, r.length_um, pred_l, err_l, err_w, status
        );
    }
    println!(
        "MAPE: length {:.1}%, width {:.1}%, depth {:.1}%; {} records, {} no-melt mispredictions",
        report.mape_length,
        report.mape_width,
        report.mape_depth,
        report.record_count,
        report.no_melt_mispredictions
    );

    ensure_dir(out)?;
    write_json(&out.join("validation.json"), &report)?;
    Ok(())
}

#[derive(Serialize)]
struct CalibrationReport {
    fitted_geometry_mm: [f64; 3],
    residual: f64,
    records_used: usize,
    lower_bounds_mm: [f64; 3],
    upper_bounds_mm: [f64; 3],
}

pub fn run_calibrate(
    config_path: &Path,
    data_path: &Path,
    bounds_path: &Path,
    out: &Path,
) -> Result<()> {
    let run = config::load(config_path)?;
    let records = load_records(data_path)?;
    let bounds = config::load_bounds(bounds_path)?;
    let settings = forward_settings(&run);
    let lower = bounds.lower_mm.map(mm_to_m);
    let upper = bounds.upper_mm.map(mm_to_m);
    let opts = NelderMeadOptions {
        max_iterations: bounds.max_iterations,
        ..NelderMeadOptions::default()
    };
    let (fitted, residual) =
        dataset::calibrate_geometry(&records, &run.material, lower, upper, &settings, &opts)
            .map_err(AppError::from_simulation_err)?;

    let report = CalibrationReport {
        fitted_geometry_mm: [m_to_mm(fitted.a), m_to_mm(fitted.b), m_to_mm(fitted.c)],
        residual,
        records_used: records.len(),
        lower_bounds_mm: bounds.lower_mm,
        upper_bounds_mm: bounds.upper_mm,
    };
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| AppError::simulation(format!("serializing report: {e}")))?;
    println!("{text}");
    ensure_dir(out)?;
    write_json(&out.join("calibration.json"), &report)?;
    Ok(())
}
