//! Melt-pool dimension extraction and contour export.
//!
//! The melting isotherm is handled as the superlevel set {T >= T_m}; extents
//! are located by a coarse scan along the axis lines through the temperature
//! peak, refined by bisection on T - T_m. A 2-D sampling grid supports the
//! contour exports, with marching-squares polyline extraction.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::thermal_field::Point;
use crate::units::{kelvin_to_celsius, m_to_mm};

/// A temperature evaluator over space at a fixed scenario: (point, time) -> K.
pub trait FieldEvaluator: Sync {
    fn temperature(&self, point: Point, t: f64) -> Result<f64>;
}

impl<F> FieldEvaluator for F
where
    F: Fn(Point, f64) -> Result<f64> + Sync,
{
    fn temperature(&self, point: Point, t: f64) -> Result<f64> {
        self(point, t)
    }
}

/// Extracted isotherm extents [m]. `melted == false` forces zero dimensions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeltPoolDimensions {
    pub length: f64,
    pub width: f64,
    pub depth: f64,
    pub melted: bool,
    pub peak_temperature: f64,
}

impl MeltPoolDimensions {
    fn no_melt(peak_temperature: f64) -> Self {
        Self {
            length: 0.0,
            width: 0.0,
            depth: 0.0,
            melted: false,
            peak_temperature,
        }
    }
}

/// Axis-aligned search bounds [m].
#[derive(Debug, Clone, Copy)]
pub struct SearchBox {
    pub min: Point,
    pub max: Point,
}

impl SearchBox {
    pub fn new(min: Point, max: Point) -> Result<Self> {
        for i in 0..3 {
            if !(max[i] > min[i]) {
                return Err(CoreError::Domain(format!(
                    "search box must have positive extent on axis {i}"
                )));
            }
        }
        Ok(Self { min, max })
    }

    /// Default box: 6a x 6b x 6c centered on the instantaneous source
    /// position (z clipped to the surface).
    pub fn around_source(center: Point, a: f64, b: f64, c: f64) -> Self {
        Self {
            min: [center[0] - 3.0 * a, center[1] - 3.0 * b, -6.0 * c],
            max: [center[0] + 3.0 * a, center[1] + 3.0 * b, 0.0],
        }
    }

    fn doubled(&self) -> Self {
        let mut out = *self;
        for i in 0..3 {
            let half = 0.5 * (self.max[i] - self.min[i]);
            let center = 0.5 * (self.max[i] + self.min[i]);
            out.min[i] = center - 2.0 * half;
            out.max[i] = center + 2.0 * half;
        }
        // keep the box inside the body
        if out.max[2] > 0.0 {
            out.max[2] = 0.0;
        }
        out
    }
}

/// Options for the extent search.
#[derive(Debug, Clone, Copy)]
pub struct ExtractionOptions {
    /// Samples per axis of the coarse scan (>= 64 by contract).
    pub coarse_samples: usize,
    /// Bisection refinement target [m].
    pub refine_tol: f64,
    /// Automatic search-box doublings on boundary clipping.
    pub max_doublings: usize,
}

impl Default for ExtractionOptions {
    fn default() -> Self {
        Self {
            coarse_samples: 64,
            refine_tol: 1e-9,
            max_doublings: 3,
        }
    }
}

struct LineScan {
    positions: Vec<f64>,
    temperatures: Vec<f64>,
}

fn scan_line<E: FieldEvaluator>(
    evaluator: &E,
    t: f64,
    base: Point,
    axis: usize,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<LineScan> {
    let positions: Vec<f64> = (0..samples)
        .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
        .collect();
    let temperatures = positions
        .par_iter()
        .map(|&s| {
            let mut p = base;
            p[axis] = s;
            evaluator.temperature(p, t)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(LineScan {
        positions,
        temperatures,
    })
}

/// Bisect the sign change of T - level between an inside and outside sample.
fn refine_crossing<E: FieldEvaluator>(
    evaluator: &E,
    t: f64,
    base: Point,
    axis: usize,
    inside: f64,
    outside: f64,
    level: f64,
    tol: f64,
) -> Result<f64> {
    let (mut s_in, mut s_out) = (inside, outside);
    while (s_out - s_in).abs() > tol {
        let mid = 0.5 * (s_in + s_out);
        let mut p = base;
        p[axis] = mid;
        if evaluator.temperature(p, t)? >= level {
            s_in = mid;
        } else {
            s_out = mid;
        }
    }
    Ok(0.5 * (s_in + s_out))
}

/// Golden-section maximization of the temperature along one axis line.
fn refine_axis_peak<E: FieldEvaluator>(
    evaluator: &E,
    t: f64,
    base: Point,
    axis: usize,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let eval_at = |s: f64| -> Result<f64> {
        let mut p = base;
        p[axis] = s;
        evaluator.temperature(p, t)
    };
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval_at(c)?;
    let mut fd = eval_at(d)?;
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval_at(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval_at(d)?;
        }
    }
    let s = 0.5 * (a + b);
    Ok((s, eval_at(s)?))
}

struct AxisExtent {
    lo: f64,
    hi: f64,
    clipped_lo: bool,
    clipped_hi: bool,
    peak_temperature: f64,
}

impl AxisExtent {
    fn clipped(&self) -> bool {
        self.clipped_lo || self.clipped_hi
    }
}

fn axis_extent<E: FieldEvaluator>(
    evaluator: &E,
    t: f64,
    base: Point,
    axis: usize,
    lo: f64,
    hi: f64,
    level: f64,
    opts: &ExtractionOptions,
) -> Result<Option<AxisExtent>> {
    let scan = scan_line(evaluator, t, base, axis, lo, hi, opts.coarse_samples)?;
    let n = scan.positions.len();
    let peak_idx = (0..n)
        .max_by(|&i, &j| scan.temperatures[i].total_cmp(&scan.temperatures[j]))
        .expect("non-empty scan");
    let above: Vec<bool> = scan.temperatures.iter().map(|&v| v >= level).collect();
    let Some(first) = above.iter().position(|&b| b) else {
        return Ok(None);
    };
    let last = above.iter().rposition(|&b| b).expect("first exists");

    let lo_edge = if first == 0 {
        scan.positions[0]
    } else {
        refine_crossing(
            evaluator,
            t,
            base,
            axis,
            scan.positions[first],
            scan.positions[first - 1],
            level,
            opts.refine_tol,
        )?
    };
    let hi_edge = if last == n - 1 {
        scan.positions[n - 1]
    } else {
        refine_crossing(
            evaluator,
            t,
            base,
            axis,
            scan.positions[last],
            scan.positions[last + 1],
            level,
            opts.refine_tol,
        )?
    };
    Ok(Some(AxisExtent {
        lo: lo_edge,
        hi: hi_edge,
        clipped_lo: first == 0,
        clipped_hi: last == n - 1,
        peak_temperature: scan.temperatures[peak_idx],
    }))
}

/// Extract melt-pool length (x), width (y), and depth (|z|) as the maximal
/// extents of the T >= `t_melt` superlevel set.
///
/// The extent search runs along the axis lines through the temperature-peak
/// point. On boundary clipping the search box is doubled up to
/// `max_doublings` times before erroring.
pub fn melt_pool_dimensions<E: FieldEvaluator>(
    evaluator: &E,
    t: f64,
    t_melt: f64,
    search_box: &SearchBox,
    opts: &ExtractionOptions,
) -> Result<MeltPoolDimensions> {
    if opts.coarse_samples < 2 {
        return Err(CoreError::Domain("need at least 2 coarse samples".into()));
    }
    let mut tries = 0usize;
    let mut boxed = *search_box;
    loop {
        match try_extract(evaluator, t, t_melt, &boxed, opts)? {
            Extraction::Done(dims) => return Ok(dims),
            Extraction::Clipped(axis) => {
                if tries >= opts.max_doublings {
                    return Err(CoreError::SearchBoxClipped { axis });
                }
                boxed = boxed.doubled();
                tries += 1;
            }
        }
    }
}

enum Extraction {
    Done(MeltPoolDimensions),
    Clipped(&'static str),
}

fn try_extract<E: FieldEvaluator>(
    evaluator: &E,
    t: f64,
    t_melt: f64,
    boxed: &SearchBox,
    opts: &ExtractionOptions,
) -> Result<Extraction> {
    let center = [
        0.5 * (boxed.min[0] + boxed.max[0]),
        0.5 * (boxed.min[1] + boxed.max[1]),
        boxed.max[2],
    ];

    // locate the temperature peak: x-line through the box center at the
    // surface, then y and z lines through each successive peak coordinate
    let x_scan = scan_line(
        evaluator,
        t,
        center,
        0,
        boxed.min[0],
        boxed.max[0],
        opts.coarse_samples,
    )?;
    let xi = (0..x_scan.positions.len())
        .max_by(|&i, &j| x_scan.temperatures[i].total_cmp(&x_scan.temperatures[j]))
        .expect("non-empty scan");
    let n = x_scan.positions.len();
    let bracket = |positions: &[f64], idx: usize| {
        (
            positions[idx.saturating_sub(1)],
            positions[(idx + 1).min(n - 1)],
        )
    };
    let (x_lo, x_hi) = bracket(&x_scan.positions, xi);
    let mut peak = [x_scan.positions[xi], center[1], center[2]];
    let mut peak_temperature = x_scan.temperatures[xi];
    let (xp, txp) = refine_axis_peak(evaluator, t, peak, 0, x_lo, x_hi, opts.refine_tol)?;
    peak[0] = xp;
    peak_temperature = peak_temperature.max(txp);

    let y_scan = scan_line(
        evaluator,
        t,
        peak,
        1,
        boxed.min[1],
        boxed.max[1],
        opts.coarse_samples,
    )?;
    let yi = (0..y_scan.positions.len())
        .max_by(|&i, &j| y_scan.temperatures[i].total_cmp(&y_scan.temperatures[j]))
        .expect("non-empty scan");
    let (y_lo, y_hi) = bracket(&y_scan.positions, yi);
    peak[1] = y_scan.positions[yi];
    peak_temperature = peak_temperature.max(y_scan.temperatures[yi]);
    let (yp, typ) = refine_axis_peak(evaluator, t, peak, 1, y_lo, y_hi, opts.refine_tol)?;
    peak[1] = yp;
    peak_temperature = peak_temperature.max(typ);

    // one more coordinate-descent pass now that both coordinates moved
    let (xp, txp) = refine_axis_peak(evaluator, t, peak, 0, x_lo, x_hi, opts.refine_tol)?;
    peak[0] = xp;
    peak_temperature = peak_temperature.max(txp);
    let (yp, typ) = refine_axis_peak(evaluator, t, peak, 1, y_lo, y_hi, opts.refine_tol)?;
    peak[1] = yp;
    peak_temperature = peak_temperature.max(typ);

    if peak_temperature < t_melt {
        return Ok(Extraction::Done(MeltPoolDimensions::no_melt(
            peak_temperature,
        )));
    }

    let Some(x_ext) = axis_extent(
        evaluator,
        t,
        peak,
        0,
        boxed.min[0],
        boxed.max[0],
        t_melt,
        opts,
    )?
    else {
        return Ok(Extraction::Done(MeltPoolDimensions::no_melt(
            peak_temperature,
        )));
    };
    if x_ext.clipped() {
        return Ok(Extraction::Clipped("x"));
    }
    peak_temperature = peak_temperature.max(x_ext.peak_temperature);

    let Some(y_ext) = axis_extent(
        evaluator,
        t,
        peak,
        1,
        boxed.min[1],
        boxed.max[1],
        t_melt,
        opts,
    )?
    else {
        return Ok(Extraction::Done(MeltPoolDimensions::no_melt(
            peak_temperature,
        )));
    };
    if y_ext.clipped() {
        return Ok(Extraction::Clipped("y"));
    }
    peak_temperature = peak_temperature.max(y_ext.peak_temperature);

    let z_ext = axis_extent(
        evaluator,
        t,
        peak,
        2,
        boxed.min[2],
        boxed.max[2],
        t_melt,
        opts,
    )?;
    let mut depth = match z_ext {
        Some(e) => {
            // the melt pool reaching the surface (upper z bound) is expected;
            // only the deep edge hitting the box floor is clipping
            if e.clipped_lo {
                return Ok(Extraction::Clipped("z"));
            }
            peak_temperature = peak_temperature.max(e.peak_temperature);
            e.lo.abs().max(e.hi.abs())
        }
        None => 0.0,
    };
    let mut width = y_ext.hi - y_ext.lo;

    // the widest and deepest sections of a moving pool trail the temperature
    // peak, so sweep cross-sections over the pool's x-range for the maximal
    // transverse and depth chords
    let sections = opts.coarse_samples;
    for i in 0..sections {
        let x = x_ext.lo
            + (x_ext.hi - x_ext.lo) * (i as f64 + 1.0) / (sections as f64 + 1.0);
        let base = [x, peak[1], peak[2]];
        if evaluator.temperature(base, t)? < t_melt {
            continue;
        }
        if let Some(e) = axis_extent(
            evaluator,
            t,
            base,
            1,
            boxed.min[1],
            boxed.max[1],
            t_melt,
            opts,
        )? {
            if e.clipped() {
                return Ok(Extraction::Clipped("y"));
            }
            width = width.max(e.hi - e.lo);
        }
        if let Some(e) = axis_extent(
            evaluator,
            t,
            base,
            2,
            boxed.min[2],
            boxed.max[2],
            t_melt,
            opts,
        )? {
            if e.clipped_lo {
                return Ok(Extraction::Clipped("z"));
            }
            depth = depth.max(e.lo.abs().max(e.hi.abs()));
        }
    }

    Ok(Extraction::Done(MeltPoolDimensions {
        length: x_ext.hi - x_ext.lo,
        width,
        depth,
        melted: true,
        peak_temperature,
    }))
}

/// Sampling plane for contour grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    /// z = 0, axes (x, y).
    Top,
    /// y = 0, axes (x, z).
    Side,
}

/// Regular 2-D temperature grid sampled from the field.
#[derive(Debug, Clone, Serialize)]
pub struct ContourGrid {
    pub plane: Plane,
    /// First-axis range [m] (x for both planes).
    pub axis1_range: (f64, f64),
    /// Second-axis range [m] (y for top, z for side).
    pub axis2_range: (f64, f64),
    pub n1: usize,
    pub n2: usize,
    /// Row-major temperatures [K], rows along axis2.
    pub temperatures: Vec<f64>,
    pub probe_time: f64,
}

impl ContourGrid {
    pub fn axis1_coord(&self, i: usize) -> f64 {
        let (lo, hi) = self.axis1_range;
        lo + (hi - lo) * i as f64 / (self.n1 - 1) as f64
    }

    pub fn axis2_coord(&self, j: usize) -> f64 {
        let (lo, hi) = self.axis2_range;
        lo + (hi - lo) * j as f64 / (self.n2 - 1) as f64
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.temperatures[j * self.n1 + i]
    }

    pub fn max_temperature(&self) -> f64 {
        self.temperatures.iter().copied().fold(f64::MIN, f64::max)
    }

    /// CSV rows `x_mm, y_mm|z_mm, T_c`.
    pub fn to_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let second = match self.plane {
            Plane::Top => "y_mm",
            Plane::Side => "z_mm",
        };
        writeln!(w, "x_mm,{second},T_c")?;
        for j in 0..self.n2 {
            for i in 0..self.n1 {
                writeln!(
                    w,
                    "{},{},{}",
                    m_to_mm(self.axis1_coord(i)),
                    m_to_mm(self.axis2_coord(j)),
                    kelvin_to_celsius(self.at(i, j))
                )?;
            }
        }
        Ok(())
    }
}

/// Sample the field on a regular grid in the given plane.
pub fn contour_grid<E: FieldEvaluator>(
    evaluator: &E,
    t: f64,
    plane: Plane,
    axis1_range: (f64, f64),
    axis2_range: (f64, f64),
    n1: usize,
    n2: usize,
) -> Result<ContourGrid> {
    if n1 < 2 || n2 < 2 {
        return Err(CoreError::Domain(
            "contour grid needs resolution >= 2 per axis".into(),
        ));
    }
    let coords: Vec<(usize, usize)> = (0..n2)
        .flat_map(|j| (0..n1).map(move |i| (i, j)))
        .collect();
    let temperatures = coords
        .par_iter()
        .map(|&(i, j)| {
            let u = axis1_range.0 + (axis1_range.1 - axis1_range.0) * i as f64 / (n1 - 1) as f64;
            let v = axis2_range.0 + (axis2_range.1 - axis2_range.0) * j as f64 / (n2 - 1) as f64;
            let p = match plane {
                Plane::Top => [u, v, 0.0],
                Plane::Side => [u, 0.0, v],
            };
            evaluator.temperature(p, t)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ContourGrid {
        plane,
        axis1_range,
        axis2_range,
        n1,
        n2,
        temperatures,
        probe_time: t,
    })
}

/// A level-set polyline in physical plane coordinates [m].
pub type Polyline = Vec<[f64; 2]>;

/// Marching-squares extraction of the `level` isotherm. Polylines are closed
/// (first == last) or terminate on the grid boundary. Returns an empty list
/// when the level is never crossed.
pub fn isotherm_polyline(grid: &ContourGrid, level: f64) -> Result<Vec<Polyline>> {
    if !level.is_finite() {
        return Err(CoreError::Domain("isotherm level must be finite".into()));
    }
    // Each cell edge crossing becomes a graph node keyed by (cell, edge);
    // segments connect nodes within a cell, polylines follow the links.
    type EdgeKey = (usize, usize, u8); // (i, j, edge: 0 bottom, 1 right, 2 top, 3 left)

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    let interp = |va: f64, vb: f64| -> f64 {
        if (vb - va).abs() < f64::EPSILON {
            0.5
        } else {
            ((level - va) / (vb - va)).clamp(0.0, 1.0)
        }
    };

    for j in 0..grid.n2 - 1 {
        for i in 0..grid.n1 - 1 {
            let v = [
                grid.at(i, j),
                grid.at(i + 1, j),
                grid.at(i + 1, j + 1),
                grid.at(i, j + 1),
            ];
            let mut case = 0u8;
            for (bit, &val) in v.iter().enumerate() {
                if val >= level {
                    case |= 1 << bit;
                }
            }
            if case == 0 || case == 15 {
                continue;
            }
            // edges crossed per case, as pairs
            let pairs: &[(u8, u8)] = match case {
                1 => &[(3, 0)],
                2 => &[(0, 1)],
                3 => &[(3, 1)],
                4 => &[(1, 2)],
                5 => &[(3, 2), (1, 0)], // saddle
                6 => &[(0, 2)],
                7 => &[(3, 2)],
                8 => &[(2, 3)],
                9 => &[(2, 0)],
                10 => &[(0, 3), (2, 1)], // saddle
                11 => &[(2, 1)],
                12 => &[(1, 3)],
                13 => &[(1, 0)],
                14 => &[(0, 3)],
                _ => unreachable!(),
            };
            for &(ea, eb) in pairs {
                segments.push(((i, j, ea), (i, j, eb)));
            }
        }
    }

    // canonical key per shared edge so neighboring cells connect
    let canonical = |k: EdgeKey| -> (usize, usize, bool) {
        let (i, j, e) = k;
        match e {
            0 => (i, j, true),      // horizontal edge at row j
            2 => (i, j + 1, true),  // horizontal edge at row j+1
            3 => (i, j, false),     // vertical edge at column i
            1 => (i + 1, j, false), // vertical edge at column i+1
            _ => unreachable!(),
        }
    };

    let edge_point = |k: EdgeKey| -> [f64; 2] {
        let (i, j, e) = k;
        let (x0, x1) = (grid.axis1_coord(i), grid.axis1_coord(i + 1));
        let (y0, y1) = (grid.axis2_coord(j), grid.axis2_coord(j + 1));
        match e {
            0 => {
                let t = interp(grid.at(i, j), grid.at(i + 1, j));
                [x0 + t * (x1 - x0), y0]
            }
            1 => {
                let t = interp(grid.at(i + 1, j), grid.at(i + 1, j + 1));
                [x1, y0 + t * (y1 - y0)]
            }
            2 => {
                let t = interp(grid.at(i, j + 1), grid.at(i + 1, j + 1));
                [x0 + t * (x1 - x0), y1]
            }
            3 => {
                let t = interp(grid.at(i, j), grid.at(i, j + 1));
                [x0, y0 + t * (y1 - y0)]
            }
            _ => unreachable!(),
        }
    };

    use std::collections::HashMap;
    let mut adjacency: HashMap<(usize, usize, bool), Vec<usize>> = HashMap::new();
    for (idx, &(a, b)) in segments.iter().enumerate() {
        adjacency.entry(canonical(a)).or_default().push(idx);
        adjacency.entry(canonical(b)).or_default().push(idx);
    }

    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();

    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a0, b0) = segments[start];
        let mut chain = vec![a0, b0];

        // extend forward from the tail, then backward from the head
        for forward in [true, false] {
            loop {
                let tip = if forward {
                    *chain.last().unwrap()
                } else {
                    chain[0]
                };
                let key = canonical(tip);
                let next = adjacency
                    .get(&key)
                    .and_then(|ids| ids.iter().find(|&&id| !used[id]).copied());
                let Some(id) = next else { break };
                used[id] = true;
                let (a, b) = segments[id];
                let follow = if canonical(a) == key { b } else { a };
                if forward {
                    chain.push(follow);
                } else {
                    chain.insert(0, follow);
                }
            }
        }

        let mut pts: Vec<[f64; 2]> = chain.iter().map(|&k| edge_point(k)).collect();
        if chain.len() > 2 && canonical(chain[0]) == canonical(*chain.last().unwrap()) {
            // closed loop: snap endpoints together
            let first = pts[0];
            *pts.last_mut().unwrap() = first;
        }
        polylines.push(pts);
    }

    Ok(polylines)
}
