//! Unit conversions at the I/O boundary.
//!
//! All internal computation is strictly SI (m, s, K, W). Files and the CLI
//! speak the presentation units of the AM literature: mm, mm/s, um, degC.

pub const KELVIN_OFFSET: f64 = 273.15;

#[inline]
pub fn mm_to_m(v: f64) -> f64 {
    v * 1e-3
}

#[inline]
pub fn m_to_mm(v: f64) -> f64 {
    v * 1e3
}

#[inline]
pub fn um_to_m(v: f64) -> f64 {
    v * 1e-6
}

#[inline]
pub fn m_to_um(v: f64) -> f64 {
    v * 1e6
}

#[inline]
pub fn celsius_to_kelvin(v: f64) -> f64 {
    v + KELVIN_OFFSET
}

#[inline]
pub fn kelvin_to_celsius(v: f64) -> f64 {
    v - KELVIN_OFFSET
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn length_round_trips(v in -1e6f64..1e6) {
            prop_assert!((m_to_mm(mm_to_m(v)) - v).abs() <= 1e-12 * v.abs().max(1.0));
            prop_assert!((m_to_um(um_to_m(v)) - v).abs() <= 1e-12 * v.abs().max(1.0));
        }

        #[test]
        fn temperature_round_trips(v in -500f64..5000.0) {
            prop_assert!((kelvin_to_celsius(celsius_to_kelvin(v)) - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }
}
