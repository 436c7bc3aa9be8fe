//! Power-law (Hellmann) wind shear.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::WindSeries;

/// Open-terrain shear exponent, 1/7 rounded.
pub const DEFAULT_ALPHA: f64 = 0.143;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShearParams {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

impl Default for ShearParams {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA }
    }
}

impl ShearParams {
    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::Domain(format!("shear exponent {} is not finite", self.alpha)));
        }
        Ok(())
    }
}

/// `v0 * (z / z0)^alpha`.
pub fn extrapolate(v0: f64, z0: f64, z: f64, alpha: f64) -> Result<f64> {
    if !(z0 > 0.0 && z > 0.0) {
        return Err(Error::Domain(format!("heights must be positive (z0 = {z0}, z = {z})")));
    }
    if !(v0 >= 0.0) {
        return Err(Error::Domain(format!("wind speed {v0} must be non-negative")));
    }
    if z == z0 {
        return Ok(v0);
    }
    Ok(v0 * (z / z0).powf(alpha))
}

/// Lifts every speed of `series` to `hub_height_m`. Missing stays missing.
pub fn extrapolate_series(series: &WindSeries, hub_height_m: f64, params: ShearParams) -> Result<WindSeries> {
    params.validate()?;
    let z0 = series.height_m();
    // validates the heights once; per-sample calls cannot fail after this
    let factor = extrapolate(1.0, z0, hub_height_m, params.alpha)?;
    let speeds = series
        .speeds()
        .iter()
        .map(|v| v.map(|v| v * factor))
        .collect();
    series.with_speeds(speeds, hub_height_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_at_reference_height() {
        assert_eq!(extrapolate(5.0, 20.0, 20.0, 0.143).unwrap(), 5.0);
    }

    #[test]
    fn zero_speed_stays_zero() {
        assert_eq!(extrapolate(0.0, 20.0, 134.0, 0.143).unwrap(), 0.0);
        assert_eq!(extrapolate(0.0, 3.0, 1.0, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn hub_height_134() {
        // 5 * exp(0.143 * ln 6.7), evaluated independently
        let expected = 5.0 * (0.143f64 * (134.0f64 / 20.0).ln()).exp();
        let v = extrapolate(5.0, 20.0, 134.0, 0.143).unwrap();
        assert!((v - 6.5630).abs() < 5e-4, "{v}");
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn non_positive_height_is_domain_error() {
        assert!(matches!(extrapolate(5.0, 0.0, 10.0, 0.143), Err(Error::Domain(_))));
        assert!(matches!(extrapolate(5.0, 10.0, -1.0, 0.143), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn monotone_in_height(v in 0.0f64..40.0, z0 in 1.0f64..200.0, a in 1.0f64..200.0, b in 1.0f64..200.0, alpha in 0.01f64..0.6) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(extrapolate(v, z0, hi, alpha).unwrap() >= extrapolate(v, z0, lo, alpha).unwrap());
        }

        #[test]
        fn linear_in_speed(v in 0.0f64..40.0, c in 0.0f64..10.0, z0 in 1.0f64..200.0, z in 1.0f64..200.0, alpha in -0.5f64..0.6) {
            let lhs = extrapolate(c * v, z0, z, alpha).unwrap();
            let rhs = c * extrapolate(v, z0, z, alpha).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300));
        }
    }
}
