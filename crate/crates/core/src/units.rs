//! Physical constants and unit conversions.

use core::f64::consts::PI;

/// Boltzmann constant, J/K (exact SI).
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Speed of light in vacuum, m/s (exact SI).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Standard gravity, m/s².
pub const STANDARD_GRAVITY: f64 = 9.806_65;

/// ν = ω / 2π.
#[inline]
pub fn rad_to_hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

/// ω = 2π ν.
#[inline]
pub fn hz_to_rad(freq_hz: f64) -> f64 {
    2.0 * PI * freq_hz
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hz_rad_round_trip() {
        let w = hz_to_rad(4.72);
        assert!((w - 29.656_634_649_887_646).abs() < 1e-12);
        assert!((rad_to_hz(w) - 4.72).abs() < 1e-15);
    }
}
