//! Semi-ellipsoidal volumetric heat source and dimensionless process groups.
//!
//! The flux is a 3-D Gaussian truncated to the half-space z <= 0, normalized
//! so its half-space integral equals the absorbed power A*P. Axis mapping is
//! a<->x (scan direction), b<->y (transverse), c<->z (depth).

use crate::error::{CoreError, Result};
use crate::material::Material;
use crate::quadrature::{self, QuadratureSpec};

/// Semi-ellipsoid semi-axes [m]: a along the scan direction, b transverse
/// (half-width), c into the depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatSourceGeometry {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HeatSourceGeometry {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && c > 0.0) || !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(CoreError::Domain(format!(
                "heat source semi-axes must be positive and finite, got ({a}, {b}, {c})"
            )));
        }
        Ok(Self { a, b, c })
    }
}

/// Laser power [W], scan speed [m/s], and ambient temperature [K].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessParameters {
    pub power: f64,
    pub speed: f64,
    pub ambient: f64,
}

impl ProcessParameters {
    pub fn new(power: f64, speed: f64, ambient: f64) -> Result<Self> {
        if !(power >= 0.0) || !(speed >= 0.0) || !(ambient > 0.0) {
            return Err(CoreError::Domain(format!(
                "need power >= 0, speed >= 0, ambient > 0; got ({power}, {speed}, {ambient})"
            )));
        }
        Ok(Self {
            power,
            speed,
            ambient,
        })
    }
}

/// Dimensionless source-size numbers, operating parameter, and time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessGroups {
    pub u_a: f64,
    pub u_b: f64,
    pub u_c: f64,
    pub n: f64,
    pub tau: f64,
}

/// Volumetric flux [W/m^3] at a point in the source-centered frame.
/// Zero above the surface (z > 0).
pub fn flux(
    geom: &HeatSourceGeometry,
    proc: &ProcessParameters,
    absorptivity: f64,
    x: f64,
    y: f64,
    z: f64,
) -> f64 {
    if z > 0.0 {
        return 0.0;
    }
    let coeff = 6.0 * 3.0f64.sqrt() * absorptivity * proc.power
        / (geom.a * geom.b * geom.c * std::f64::consts::PI.powf(1.5));
    let exponent = -3.0 * x * x / (geom.a * geom.a)
        - 3.0 * y * y / (geom.b * geom.b)
        - 3.0 * z * z / (geom.c * geom.c);
    coeff * exponent.exp()
}

/// Numerical half-space integral of the flux; equals A*P by construction.
///
/// The Gaussian is truncated at 5 semi-axes per coordinate (relative error
/// ~1e-30), then integrated with nested adaptive quadrature.
pub fn total_deposited_power(
    geom: &HeatSourceGeometry,
    proc: &ProcessParameters,
    absorptivity: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let inner_spec = QuadratureSpec {
        rel_tol: spec.rel_tol * 0.1,
        abs_tol: 0.0,
        max_subdivisions: spec.max_subdivisions,
    };
    let ext = 5.0;
    let r = quadrature::integrate(
        |z| {
            let fy = quadrature::integrate(
                |y| {
                    let fx = quadrature::integrate(
                        |x| flux(geom, proc, absorptivity, x, y, z),
                        -ext * geom.a,
                        ext * geom.a,
                        &inner_spec,
                    )
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN);
                    fx
                },
                -ext * geom.b,
                ext * geom.b,
                &inner_spec,
            );
            fy.map(|r| r.value).unwrap_or(f64::NAN)
        },
        -ext * geom.c,
        0.0,
        spec,
    )?;
    if !r.value.is_finite() {
        return Err(CoreError::Quadrature {
            estimate: r.value,
            achieved: f64::INFINITY,
            requested: spec.rel_tol,
        });
    }
    Ok(r.value)
}

/// Dimensionless groups for a configuration: u_i = v*i/(2*sqrt(6)*alpha),
/// tau = v^2 (t_source - t_elapsed) / (2 alpha), and the operating parameter
/// n = A*P*v / (4 pi alpha^2 rho C (T_m - T_0)) with C the modified heat
/// capacity at ambient.
pub fn dimensionless_groups(
    geom: &HeatSourceGeometry,
    proc: &ProcessParameters,
    alpha: f64,
    mat: &Material,
    t_elapsed: f64,
    t_source: f64,
) -> Result<DimensionlessGroups> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(CoreError::Domain(format!(
            "thermal diffusivity must be positive, got {alpha}"
        )));
    }
    if !(mat.t_melt > proc.ambient) {
        return Err(CoreError::Domain(format!(
            "melting temperature {} must exceed ambient {}",
            mat.t_melt, proc.ambient
        )));
    }
    let scale = proc.speed / (2.0 * 6.0f64.sqrt() * alpha);
    let capacity = mat.modified_heat_capacity(proc.ambient)?;
    let n = mat.absorptivity * proc.power * proc.speed
        / (4.0
            * std::f64::consts::PI
            * alpha
            * alpha
            * mat.density
            * capacity
            * (mat.t_melt - proc.ambient));
    Ok(DimensionlessGroups {
        u_a: scale * geom.a,
        u_b: scale * geom.b,
        u_c: scale * geom.c,
        n,
        tau: proc.speed * proc.speed * (t_source - t_elapsed) / (2.0 * alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::Material;
    use proptest::prelude::*;

    fn unit_geom() -> HeatSourceGeometry {
        HeatSourceGeometry::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn center_flux_matches_coefficient() {
        let proc = ProcessParameters::new(1.0, 0.0, 293.15).unwrap();
        let q = flux(&unit_geom(), &proc, 1.0, 0.0, 0.0, 0.0);
        let expected = 6.0 * 3.0f64.sqrt() / std::f64::consts::PI.powf(1.5);
        assert!((q - expected).abs() < 1e-12);
        assert!((expected - 1.8663).abs() < 1e-4);
    }

    #[test]
    fn flux_decays_e3_at_one_semi_axis() {
        let proc = ProcessParameters::new(5.0, 0.0, 293.15).unwrap();
        let geom = HeatSourceGeometry::new(0.8e-3, 0.15e-3, 0.07e-3).unwrap();
        let center = flux(&geom, &proc, 0.9, 0.0, 0.0, 0.0);
        let edge = flux(&geom, &proc, 0.9, geom.a, 0.0, 0.0);
        assert!((edge - center * (-3.0f64).exp()).abs() < 1e-9 * center);
    }

    #[test]
    fn zero_power_means_zero_flux() {
        let proc = ProcessParameters::new(0.0, 0.1, 293.15).unwrap();
        assert_eq!(flux(&unit_geom(), &proc, 1.0, 0.1, -0.2, -0.3), 0.0);
    }

    #[test]
    fn flux_vanishes_above_surface() {
        let proc = ProcessParameters::new(100.0, 0.1, 293.15).unwrap();
        assert_eq!(flux(&unit_geom(), &proc, 1.0, 0.0, 0.0, 0.1), 0.0);
    }

    #[test]
    fn deposited_power_equals_absorbed_power() {
        let proc = ProcessParameters::new(100.0, 0.1, 293.15).unwrap();
        let geom = HeatSourceGeometry::new(0.8e-3, 0.15e-3, 0.07e-3).unwrap();
        let spec = QuadratureSpec::default();
        let p = total_deposited_power(&geom, &proc, 1.0, &spec).unwrap();
        assert!((p - 100.0).abs() / 100.0 < 1e-6);

        let half = total_deposited_power(&geom, &ProcessParameters::new(200.0, 0.1, 293.15).unwrap(), 0.5, &spec).unwrap();
        assert!((half - 100.0).abs() / 100.0 < 1e-6);

        let scaled_geom = HeatSourceGeometry::new(8e-3, 1.5e-3, 0.7e-3).unwrap();
        let p10 = total_deposited_power(&scaled_geom, &proc, 1.0, &spec).unwrap();
        assert!((p10 - p).abs() / p < 1e-6);
    }

    #[test]
    fn groups_zero_speed() {
        let mat = Material::ti6al4v();
        let geom = HeatSourceGeometry::new(0.8e-3, 0.15e-3, 0.07e-3).unwrap();
        let proc = ProcessParameters::new(150.0, 0.0, 293.15).unwrap();
        let g = dimensionless_groups(&geom, &proc, 2.875e-6, &mat, 0.0, 0.01).unwrap();
        assert_eq!(g.u_a, 0.0);
        assert_eq!(g.u_b, 0.0);
        assert_eq!(g.u_c, 0.0);
        assert_eq!(g.n, 0.0);
    }

    #[test]
    fn groups_direct_value() {
        let mat = Material::ti6al4v();
        let geom = HeatSourceGeometry::new(0.8e-3, 0.15e-3, 0.07e-3).unwrap();
        let proc = ProcessParameters::new(150.0, 0.1, 293.15).unwrap();
        let g = dimensionless_groups(&geom, &proc, 2.875e-6, &mat, 0.0, 0.01).unwrap();
        let expected = 0.1 * 8e-4 / (2.0 * 6.0f64.sqrt() * 2.875e-6);
        assert!((g.u_a - expected).abs() < 1e-9);
        assert!((expected - 5.68).abs() < 0.01);
    }

    #[test]
    fn groups_reject_bad_alpha() {
        let mat = Material::ti6al4v();
        let geom = unit_geom();
        let proc = ProcessParameters::new(1.0, 1.0, 293.15).unwrap();
        assert!(dimensionless_groups(&geom, &proc, 0.0, &mat, 0.0, 1.0).is_err());
        assert!(dimensionless_groups(&geom, &proc, -1.0, &mat, 0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn flux_nonnegative_even_and_peaked_at_origin(
            x in -2e-3f64..2e-3,
            y in -5e-4f64..5e-4,
            z in -5e-4f64..0.0,
        ) {
            let geom = HeatSourceGeometry::new(0.8e-3, 0.15e-3, 0.07e-3).unwrap();
            let proc = ProcessParameters::new(150.0, 0.1, 293.15).unwrap();
            let q = flux(&geom, &proc, 0.66, x, y, z);
            prop_assert!(q >= 0.0);
            prop_assert!((q - flux(&geom, &proc, 0.66, -x, y, z)).abs() <= 1e-12 * q.max(1.0));
            prop_assert!((q - flux(&geom, &proc, 0.66, x, -y, z)).abs() <= 1e-12 * q.max(1.0));
            prop_assert!(q <= flux(&geom, &proc, 0.66, 0.0, 0.0, 0.0));
        }

        #[test]
        fn groups_scale_linearly_in_speed(v in 1e-3f64..1.0, k in 0.5f64..4.0) {
            let mat = Material::ti6al4v();
            let geom = HeatSourceGeometry::new(0.8e-3, 0.15e-3, 0.07e-3).unwrap();
            let p1 = ProcessParameters::new(150.0, v, 293.15).unwrap();
            let p2 = ProcessParameters::new(150.0, k * v, 293.15).unwrap();
            let g1 = dimensionless_groups(&geom, &p1, 2.875e-6, &mat, 0.0, 0.0).unwrap();
            let g2 = dimensionless_groups(&geom, &p2, 2.875e-6, &mat, 0.0, 0.0).unwrap();
            prop_assert!((g2.u_a - k * g1.u_a).abs() <= 1e-9 * g1.u_a.abs().max(1e-30));
            prop_assert!((g2.u_b / g2.u_a - g1.u_b / g1.u_a).abs() < 1e-12);
            prop_assert!((g2.n - k * g1.n).abs() <= 1e-9 * g1.n.abs().max(1e-30));
        }
    }
}
