//! Transient temperature field of moving semi-ellipsoidal heat sources.
//!
//! The single-track solution is the time-quadrature of superposed
//! instantaneous point sources: convolving the Gaussian source with the heat
//! kernel gives an integrand with denominators `12*alpha*(t - t') + axis^2`.
//! The adiabatic free surface enters through a mirror image about z = 0; for
//! a surface track the image doubles the closed-form coefficient to
//! `6*sqrt(3)*A*P / (rho*c*pi^1.5)`. Multi-track fields are superpositions of
//! per-segment rises; temperature-dependent properties are resolved by a
//! damped fixed-point loop on the probe temperature.

use crate::error::{CoreError, Result};
use crate::heat_source::{DimensionlessGroups, HeatSourceGeometry, ProcessParameters};
use crate::material::Material;
use crate::quadrature::{self, QuadratureSpec};

pub type Point = [f64; 3];

/// One straight scan segment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSegment {
    /// Time the laser starts this segment [s].
    pub start_time: f64,
    /// Starting position [m]; z <= 0 (z < 0 only for buried layers).
    pub start_position: Point,
    /// Unit scan direction in the surface plane.
    pub direction: [f64; 2],
    /// Scan speed [m/s].
    pub speed: f64,
    /// Laser power [W].
    pub power: f64,
    /// Time the laser is on [s].
    pub duration: f64,
}

impl TrackSegment {
    pub fn new(
        start_time: f64,
        start_position: Point,
        direction: [f64; 2],
        speed: f64,
        power: f64,
        duration: f64,
    ) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(CoreError::Domain(format!(
                "segment duration must be > 0, got {duration}"
            )));
        }
        if !(speed >= 0.0) || !(power >= 0.0) {
            return Err(CoreError::Domain(format!(
                "segment speed and power must be >= 0, got ({speed}, {power})"
            )));
        }
        let norm = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(CoreError::Domain(format!(
                "scan direction must be a unit vector, |d| = {norm}"
            )));
        }
        if start_position[2] > 0.0 {
            return Err(CoreError::Domain(format!(
                "segment must start at or below the surface, z = {}",
                start_position[2]
            )));
        }
        Ok(Self {
            start_time,
            start_position,
            direction,
            speed,
            power,
            duration,
        })
    }

    /// Source center position at laser time t' (clamped to the segment).
    pub fn position_at(&self, t_source: f64) -> Point {
        let dt = (t_source - self.start_time).clamp(0.0, self.duration);
        [
            self.start_position[0] + self.direction[0] * self.speed * dt,
            self.start_position[1] + self.direction[1] * self.speed * dt,
            self.start_position[2],
        ]
    }

    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration
    }
}

/// Ordered scan segments with hatch and time spacing metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPattern {
    pub segments: Vec<TrackSegment>,
    /// Hatch spacing between adjacent tracks [m].
    pub hatch_spacing: f64,
    /// Idle interval between consecutive tracks [s].
    pub time_spacing: f64,
    /// Layer thickness [m]; 0 disables layer stacking.
    pub layer_thickness: f64,
}

impl ScanPattern {
    pub fn new(
        segments: Vec<TrackSegment>,
        hatch_spacing: f64,
        time_spacing: f64,
        layer_thickness: f64,
    ) -> Result<Self> {
        if segments.is_empty() {
            return Err(CoreError::Domain("scan pattern must have segments".into()));
        }
        if !(hatch_spacing >= 0.0) || !(time_spacing >= 0.0) || !(layer_thickness >= 0.0) {
            return Err(CoreError::Domain(
                "hatch spacing, time spacing, and layer thickness must be >= 0".into(),
            ));
        }
        for w in segments.windows(2) {
            if w[1].start_time < w[0].start_time {
                return Err(CoreError::Domain(
                    "segment start times must be non-decreasing".into(),
                ));
            }
        }
        Ok(Self {
            segments,
            hatch_spacing,
            time_spacing,
            layer_thickness,
        })
    }

    /// Unidirectional scan: `tracks` parallel +x segments per layer, each
    /// offset +y by the hatch spacing, consecutive starts separated by
    /// duration + time spacing. With `layers > 1` earlier layers sit deeper
    /// by one layer thickness each.
    #[allow(clippy::too_many_arguments)]
    pub fn unidirectional(
        tracks: usize,
        track_length: f64,
        speed: f64,
        power: f64,
        hatch_spacing: f64,
        time_spacing: f64,
        layer_thickness: f64,
        layers: usize,
    ) -> Result<Self> {
        if tracks == 0 || layers == 0 {
            return Err(CoreError::Domain("need at least one track and layer".into()));
        }
        if !(speed > 0.0) || !(track_length > 0.0) {
            return Err(CoreError::Domain(
                "unidirectional pattern needs positive speed and track length".into(),
            ));
        }
        let duration = track_length / speed;
        let mut segments = Vec::with_capacity(tracks * layers);
        for layer in 0..layers {
            let z = -layer_thickness * (layers - 1 - layer) as f64;
            for track in 0..tracks {
                let idx = (layer * tracks + track) as f64;
                segments.push(TrackSegment::new(
                    idx * (duration + time_spacing),
                    [0.0, track as f64 * hatch_spacing, z],
                    [1.0, 0.0],
                    speed,
                    power,
                    duration,
                )?);
            }
        }
        Self::new(segments, hatch_spacing, time_spacing, layer_thickness)
    }

    pub fn end_time(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.end_time())
            .fold(0.0, f64::max)
    }
}

/// Material property snapshot used by the frozen-property kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyState {
    /// k [W/(m K)].
    pub conductivity: f64,
    /// Modified heat capacity C_p^m [J/(kg K)].
    pub heat_capacity: f64,
    /// alpha [m^2/s].
    pub diffusivity: f64,
}

impl PropertyState {
    pub fn of(mat: &Material, temperature: f64) -> Result<Self> {
        Ok(Self {
            conductivity: mat.conductivity(temperature)?,
            heat_capacity: mat.modified_heat_capacity(temperature)?,
            diffusivity: mat.thermal_diffusivity(temperature)?,
        })
    }
}

/// Temperature at a probe with property-iteration diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct ThermalSample {
    pub temperature: f64,
    pub iterations_used: usize,
    pub converged: bool,
    pub property_state: PropertyState,
}

/// Instantaneous point-source rise (adiabatic surface via image about z = 0).
///
/// `dq` [J] released at `source_point` at `t_source`; evaluated at
/// `field_point` and time `t > t_source`. `rho_c` is the volumetric heat
/// capacity [J/(m^3 K)].
pub fn point_source_temperature_rise(
    dq: f64,
    source_point: Point,
    t_source: f64,
    field_point: Point,
    t: f64,
    alpha: f64,
    rho_c: f64,
) -> Result<f64> {
    if !(t > t_source) {
        return Err(CoreError::Domain(format!(
            "field time {t} must exceed source time {t_source}"
        )));
    }
    let tau = t - t_source;
    let dx = field_point[0] - source_point[0];
    let dy = field_point[1] - source_point[1];
    let dz = field_point[2] - source_point[2];
    let dz_img = field_point[2] + source_point[2];
    let denom = 4.0 * alpha * tau;
    let planar = dx * dx + dy * dy;
    let kernel = (-(planar + dz * dz) / denom).exp() + (-(planar + dz_img * dz_img) / denom).exp();
    Ok(dq / (rho_c * (std::f64::consts::PI * denom).powf(1.5)) * kernel)
}

/// Temperature rise of one segment with frozen properties.
///
/// Closed form of the point-source superposition over the Gaussian source:
/// coefficient `3*sqrt(3)*A*P / (rho_c*pi^1.5)` times direct + image depth
/// factors (which sum to 2 for a surface track).
pub fn segment_rise_frozen(
    point: Point,
    t: f64,
    segment: &TrackSegment,
    geom: &HeatSourceGeometry,
    absorptivity: f64,
    state: &PropertyState,
    rho: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let t_end = t.min(segment.end_time());
    if t_end <= segment.start_time || segment.power == 0.0 {
        return Ok(0.0);
    }
    let alpha = state.diffusivity;
    let rho_c = rho * state.heat_capacity;
    let coeff = 3.0 * 3.0f64.sqrt() * absorptivity * segment.power
        / (rho_c * std::f64::consts::PI.powf(1.5));
    let (ux, uy) = (segment.direction[0], segment.direction[1]);
    let (a2, b2, c2) = (geom.a * geom.a, geom.b * geom.b, geom.c * geom.c);
    let z0 = segment.start_position[2];

    let integrand = |t_source: f64| {
        let tau = t - t_source;
        let da = 12.0 * alpha * tau + a2;
        let db = 12.0 * alpha * tau + b2;
        let dc = 12.0 * alpha * tau + c2;
        let travel = segment.speed * (t_source - segment.start_time);
        let dx = point[0] - (segment.start_position[0] + ux * travel);
        let dy = point[1] - (segment.start_position[1] + uy * travel);
        // local scan coordinates: along the track pairs with a, transverse with b
        let along = dx * ux + dy * uy;
        let trans = -dx * uy + dy * ux;
        let dz = point[2] - z0;
        let dz_img = point[2] + z0;
        let planar = -3.0 * along * along / da - 3.0 * trans * trans / db;
        let depth =
            (planar - 3.0 * dz * dz / dc).exp() + (planar - 3.0 * dz_img * dz_img / dc).exp();
        depth / (da * db * dc).sqrt()
    };

    let r = quadrature::integrate(integrand, segment.start_time, t_end, quad)?;
    Ok(coeff * r.value)
}

/// Superposed frozen-property rise of a whole pattern.
pub fn pattern_rise_frozen(
    point: Point,
    t: f64,
    pattern: &ScanPattern,
    geom: &HeatSourceGeometry,
    absorptivity: f64,
    state: &PropertyState,
    rho: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let mut total = 0.0;
    for segment in &pattern.segments {
        total += segment_rise_frozen(point, t, segment, geom, absorptivity, state, rho, quad)?;
    }
    Ok(total)
}

/// Damped fixed-point resolution of temperature-dependent properties.
///
/// `rise_evaluator` maps a property state to the full temperature it
/// implies. Iterates T_{k+1} = (1 - w) T_k + w E(T_k) with w = 0.5 until the
/// implied update |E(T_k) - T_k| < 0.1 K, capped at 50 iterations. When the
/// property state at the implied target matches the state just evaluated,
/// the target is an exact fixed point and is accepted immediately; materials
/// with flat properties resolve on the first evaluation this way.
///
/// The damped iteration can cycle without converging where the modified heat
/// capacity makes the map expansive (the mushy zone); in that case the fixed
/// point is found by bisection on E(T) - T instead, which always brackets a
/// root because E(ambient) >= ambient and E is bounded. The flag only stays
/// false if even the bracket cannot be established.
pub fn resolve_properties_selfconsistent<F>(
    initial_temperature: f64,
    mut rise_evaluator: F,
    mat: &Material,
) -> Result<ThermalSample>
where
    F: FnMut(&PropertyState) -> Result<f64>,
{
    const OMEGA: f64 = 0.5;
    const TOL: f64 = 0.1;
    const MAX_ITERS: usize = 50;

    let mut t_k = initial_temperature;
    let mut iterations = 0usize;

    while iterations < MAX_ITERS {
        let state = PropertyState::of(mat, t_k)?;
        let target = rise_evaluator(&state)?;
        iterations += 1;

        let state_at_target = PropertyState::of(mat, target)?;
        let same_state = (state_at_target.conductivity - state.conductivity).abs()
            <= 1e-9 * state.conductivity
            && (state_at_target.heat_capacity - state.heat_capacity).abs()
                <= 1e-9 * state.heat_capacity;
        if (target - t_k).abs() < TOL || same_state {
            return Ok(ThermalSample {
                temperature: target,
                iterations_used: iterations,
                converged: true,
                property_state: state_at_target,
            });
        }
        t_k = (1.0 - OMEGA) * t_k + OMEGA * target;
    }

    // bisection fallback on g(T) = E(T) - T
    let residual = |t: f64, rise_evaluator: &mut F| -> Result<f64> {
        Ok(rise_evaluator(&PropertyState::of(mat, t)?)? - t)
    };
    let mut lo = initial_temperature;
    let g_lo = residual(lo, &mut rise_evaluator)?;
    iterations += 1;
    if g_lo <= 0.0 {
        // no rise at all; the ambient state is the answer
        return Ok(ThermalSample {
            temperature: lo + g_lo,
            iterations_used: iterations,
            converged: true,
            property_state: PropertyState::of(mat, lo + g_lo)?,
        });
    }
    let mut hi = t_k.max(lo + TOL);
    let mut g_hi = residual(hi, &mut rise_evaluator)?;
    iterations += 1;
    let mut expansions = 0usize;
    while g_hi > 0.0 {
        if expansions >= 60 {
            return Ok(ThermalSample {
                temperature: t_k,
                iterations_used: iterations,
                converged: false,
                property_state: PropertyState::of(mat, t_k)?,
            });
        }
        lo = hi;
        hi = initial_temperature + 2.0 * (hi - initial_temperature);
        g_hi = residual(hi, &mut rise_evaluator)?;
        iterations += 1;
        expansions += 1;
    }
    while hi - lo > TOL {
        let mid = 0.5 * (lo + hi);
        if residual(mid, &mut rise_evaluator)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let temperature = 0.5 * (lo + hi);
    Ok(ThermalSample {
        temperature,
        iterations_used: iterations,
        converged: true,
        property_state: PropertyState::of(mat, temperature)?,
    })
}

/// Single-track temperature: laser starts at the origin at t = 0 moving
/// along +x, on for the whole interval [0, t].
pub fn single_track_temperature(
    point: Point,
    t: f64,
    geom: &HeatSourceGeometry,
    proc: &ProcessParameters,
    mat: &Material,
    absorptivity: f64,
    quad: &QuadratureSpec,
) -> Result<ThermalSample> {
    if t < 0.0 {
        return Err(CoreError::Domain(format!("time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(ThermalSample {
            temperature: proc.ambient,
            iterations_used: 0,
            converged: true,
            property_state: PropertyState::of(mat, proc.ambient)?,
        });
    }
    let segment = TrackSegment::new(0.0, [0.0; 3], [1.0, 0.0], proc.speed, proc.power, t)?;
    resolve_properties_selfconsistent(
        proc.ambient,
        |state| {
            Ok(proc.ambient
                + segment_rise_frozen(point, t, &segment, geom, absorptivity, state, mat.density, quad)?)
        },
        mat,
    )
}

/// Multi-track temperature by superposition of the pattern's segments, with
/// properties resolved once on the total.
pub fn multi_track_temperature(
    point: Point,
    t: f64,
    pattern: &ScanPattern,
    geom: &HeatSourceGeometry,
    proc: &ProcessParameters,
    mat: &Material,
    absorptivity: f64,
    quad: &QuadratureSpec,
) -> Result<ThermalSample> {
    if t < 0.0 {
        return Err(CoreError::Domain(format!("time must be >= 0, got {t}")));
    }
    resolve_properties_selfconsistent(
        proc.ambient,
        |state| {
            Ok(proc.ambient
                + pattern_rise_frozen(point, t, pattern, geom, absorptivity, state, mat.density, quad)?)
        },
        mat,
    )
}

/// Dimensionless temperature theta/n for the moving ellipsoidal source.
pub fn dimensionless_temperature(
    groups: &DimensionlessGroups,
    xi: f64,
    psi: f64,
    lambda: f64,
    upper_limit: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(upper_limit >= 0.0) {
        return Err(CoreError::Domain(format!(
            "upper limit must be >= 0, got {upper_limit}"
        )));
    }
    let (ua2, ub2, uc2) = (
        groups.u_a * groups.u_a,
        groups.u_b * groups.u_b,
        groups.u_c * groups.u_c,
    );
    let integrand = |tau: f64| {
        let da = tau + ua2;
        let db = tau + ub2;
        let dc = tau + uc2;
        let a1 = (-(xi + tau) * (xi + tau) / (2.0 * dc)
            - psi * psi / (2.0 * da)
            - lambda * lambda / (2.0 * db))
            .exp();
        a1 / (da * db * dc).sqrt()
    };
    let r = quadrature::integrate(integrand, 0.0, upper_limit, quad)?;
    Ok(r.value / (2.0 * std::f64::consts::PI).sqrt())
}
