use core::f64::consts::PI;

use crate::error::{require_positive, Error, Result};
use crate::spectrum::NoiseSpectrum;

/// Heterodyne interferometer: apparent position `y = x + x_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HliReadout {
    wavelength: f64,
    imprecision: NoiseSpectrum,
    lpf_corner: f64,
    het_freq: f64,
}

impl HliReadout {
    /// `imprecision` is the displacement imprecision PSD S_xx^n in m²/Hz.
    pub fn new(wavelength: f64, imprecision: NoiseSpectrum, lpf_corner: f64, het_freq: f64) -> Result<Self> {
        require_positive("wavelength", wavelength)?;
        require_positive("lpf_corner", lpf_corner)?;
        require_positive("het_freq", het_freq)?;
        if imprecision.is_zero() {
            return Err(Error::Domain {
                what: "imprecision",
                requirement: "> 0",
                value: 0.0,
            });
        }
        if let NoiseSpectrum::Flat { psd } = imprecision {
            require_positive("imprecision psd", psd)?;
        }
        Ok(Self {
            wavelength,
            imprecision,
            lpf_corner,
            het_freq,
        })
    }

    /// 1064 nm, 5 pm/√Hz white imprecision, 1 kHz phasemeter corner,
    /// 10 kHz heterodyne frequency.
    pub fn reference_default() -> Self {
        Self::new(1064e-9, NoiseSpectrum::flat_asd(5e-12), 1e3, 1e4).expect("valid constants")
    }

    pub fn with_imprecision(&self, imprecision: NoiseSpectrum) -> Result<Self> {
        Self::new(self.wavelength, imprecision, self.lpf_corner, self.het_freq)
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }
    pub fn imprecision(&self) -> &NoiseSpectrum {
        &self.imprecision
    }
    pub fn lpf_corner(&self) -> f64 {
        self.lpf_corner
    }
    pub fn het_freq(&self) -> f64 {
        self.het_freq
    }

    /// Imprecision PSD at `omega`, m²/Hz.
    pub fn imprecision_psd(&self, omega: f64) -> f64 {
        self.imprecision.psd_at(omega)
    }

    /// The phasemeter corner must sit at least `min_ratio` above the
    /// mechanical resonance so its phase lag is negligible in band.
    pub fn check_mechanical_band(&self, omega0: f64, min_ratio: f64) -> Result<()> {
        let ratio = self.lpf_corner / (omega0 / (2.0 * PI));
        if ratio < min_ratio {
            return Err(Error::Config(alloc::format!(
                "phasemeter corner {} Hz is only {ratio:.1}× the resonance; need ≥ {min_ratio}×",
                self.lpf_corner
            )));
        }
        Ok(())
    }

    /// `y = x + noise_draw`. No range limit.
    pub fn sample(&self, x: f64, noise_draw: f64) -> f64 {
        x + noise_draw
    }

    /// Per-sample standard deviation of discretised white imprecision at
    /// sample rate `fs`: `sqrt(S f_s / 2)` (single-sided PSD), evaluated
    /// at `omega`.
    pub fn per_sample_std(&self, sample_rate: f64, omega: f64) -> f64 {
        (self.imprecision_psd(omega) * sample_rate / 2.0).sqrt()
    }

    /// Interferometric phase to displacement, `φ λ / 2π`.
    pub fn phase_to_displacement(&self, phase: f64) -> f64 {
        phase * self.wavelength / (2.0 * PI)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeededStreams, Stream};

    #[test]
    fn sample_is_additive() {
        let h = HliReadout::reference_default();
        assert_eq!(h.sample(3e-6, 0.0), 3e-6);
        let n = 1.5e-12;
        let (x1, x2) = (2e-6, -7e-7);
        assert!((h.sample(x1 + x2, n) - (h.sample(x1, n) + x2)).abs() < 1e-21);
    }

    #[test]
    fn white_noise_sample_variance() {
        let h = HliReadout::reference_default();
        let fs = 1000.0;
        let sigma = h.per_sample_std(fs, 1.0);
        let mut rng = SeededStreams::new(11).stream(Stream::Imprecision);
        let n = 1_000_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let y = h.sample(0.0, sigma * rng.gaussian());
            acc += y * y;
        }
        let var = acc / n as f64;
        let expect = (5e-12f64).powi(2) * fs / 2.0;
        assert!(((var - expect) / expect).abs() < 0.05);
    }

    #[test]
    fn band_check() {
        let h = HliReadout::reference_default();
        assert!(h.check_mechanical_band(2.0 * PI * 4.72, 100.0).is_ok());
        assert!(h.check_mechanical_band(2.0 * PI * 50.0, 100.0).is_err());
        assert!(HliReadout::new(1064e-9, NoiseSpectrum::Flat { psd: 0.0 }, 1e3, 1e4).is_err());
    }

    #[test]
    fn phase_conversion() {
        let h = HliReadout::reference_default();
        assert!((h.phase_to_displacement(2.0 * PI) - 1064e-9).abs() < 1e-20);
    }
}
