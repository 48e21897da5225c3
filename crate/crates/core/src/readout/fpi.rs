use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::resonator::MechanicalResonator;
use crate::spectrum::{NoiseSpectrum, SpectrumKind, SpectrumRecord};
use crate::units::SPEED_OF_LIGHT;

/// Placeholder cavity finesse; only the capture threshold λ/𝓕 uses it.
pub const DEFAULT_FINESSE: f64 = 1000.0;

/// Fabry-Perot frequency readout: `ν = x c / (λ̄ L̄)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FpiReadout {
    length: f64,
    wavelength: f64,
    tuning_range: f64,
    finesse: f64,
    freq_noise: NoiseSpectrum,
}

impl FpiReadout {
    /// `freq_noise` is the readout frequency-noise PSD in Hz²/Hz.
    pub fn new(
        length: f64,
        wavelength: f64,
        tuning_range: f64,
        finesse: f64,
        freq_noise: NoiseSpectrum,
    ) -> Result<Self> {
        require_positive("length", length)?;
        require_positive("wavelength", wavelength)?;
        require_positive("tuning_range", tuning_range)?;
        if !(finesse.is_finite() && finesse > 1.0) {
            return Err(Error::Domain {
                what: "finesse",
                requirement: "finite and > 1",
                value: finesse,
            });
        }
        let fpi = Self {
            length,
            wavelength,
            tuning_range,
            finesse,
            freq_noise,
        };
        if fpi.capture_range() >= fpi.dynamic_range() {
            return Err(Error::Config(format!(
                "capture range λ/F = {:e} m must be below the dynamic range {:e} m",
                fpi.capture_range(),
                fpi.dynamic_range()
            )));
        }
        Ok(fpi)
    }

    /// 50 mm cavity at 1064 nm, 10 GHz laser tuning range, finesse 1000,
    /// noiseless frequency readout.
    pub fn reference_default() -> Self {
        Self::new(50e-3, 1064e-9, 10e9, DEFAULT_FINESSE, NoiseSpectrum::Flat { psd: 0.0 }).expect("valid constants")
    }

    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }
    pub fn tuning_range(&self) -> f64 {
        self.tuning_range
    }
    pub fn finesse(&self) -> f64 {
        self.finesse
    }
    pub fn freq_noise(&self) -> &NoiseSpectrum {
        &self.freq_noise
    }

    /// Frequency shift per metre of cavity length change, c/(λ̄ L̄), Hz/m.
    pub fn hz_per_metre(&self) -> f64 {
        SPEED_OF_LIGHT / (self.wavelength * self.length)
    }

    /// Largest trackable length change, ΔL = λ̄ L̄ Δν / c.
    pub fn dynamic_range(&self) -> f64 {
        self.tuning_range / self.hz_per_metre()
    }

    /// Linear-regime displacement threshold λ̄/𝓕.
    pub fn capture_range(&self) -> f64 {
        self.wavelength / self.finesse
    }

    pub fn freq_from_displacement(&self, x: f64) -> Result<f64> {
        let range = self.dynamic_range();
        if !(x.abs() < range) {
            return Err(Error::OutOfRange {
                x,
                dynamic_range: range,
            });
        }
        Ok(x * self.hz_per_metre())
    }

    pub fn displacement_from_freq(&self, nu: f64) -> Result<f64> {
        if !(nu.abs() < self.tuning_range) {
            return Err(Error::OutOfRange {
                x: nu / self.hz_per_metre(),
                dynamic_range: self.dynamic_range(),
            });
        }
        Ok(nu / self.hz_per_metre())
    }

    /// True iff `rms_x < λ̄/𝓕` (strict).
    pub fn capture_check(&self, rms_x: f64) -> bool {
        rms_x < self.capture_range()
    }

    /// Acceleration equivalent of the dynamic range as the estimate
    /// ΔL ω0 / √Q is usually quoted. Not dimensionally an acceleration.
    pub fn range_equivalent_accel_quoted(&self, res: &MechanicalResonator) -> f64 {
        self.dynamic_range() * res.omega0() / res.quality_factor().sqrt()
    }

    /// Dimensionally consistent variant ΔL ω0² / √Q, m s⁻².
    pub fn range_equivalent_accel(&self, res: &MechanicalResonator) -> f64 {
        self.dynamic_range() * res.omega0() * res.omega0() / res.quality_factor().sqrt()
    }

    /// ASD of the detected laser frequency, Hz/√Hz.
    ///
    /// Combines the external acceleration ASD `a_ext`, the thermal
    /// acceleration (if `include_thermal`) and the readout noise ν_n as
    /// independent terms (root-sum-square). The mechanical denominator
    /// carries feedback-broadened damping `(1 + g) γ_m(ω) ω`. The output grid
    /// is the part of `a_ext`'s grid covered by a tabulated ν_n.
    pub fn output_spectrum(
        &self,
        res: &MechanicalResonator,
        g: f64,
        a_ext: &SpectrumRecord,
        include_thermal: bool,
    ) -> Result<SpectrumRecord> {
        require_non_negative("g", g)?;
        let a_ext_asd = a_ext.to_asd(a_ext.unit())?;
        let a_vals = a_ext_asd.densities().expect("density record");
        let band = match &self.freq_noise {
            NoiseSpectrum::Flat { .. } => None,
            NoiseSpectrum::Shaped(rec) => Some(rec.band()),
        };
        let k = self.hz_per_metre();
        let w0sq = res.omega0() * res.omega0();
        let mut omegas = Vec::new();
        let mut values = Vec::new();
        for (&w, &a) in a_ext_asd.omegas().iter().zip(a_vals) {
            if let Some((lo, hi)) = band {
                if w < lo || w > hi {
                    continue;
                }
            }
            let denom = Complex64::new(w0sq - w * w, (1.0 + g) * res.damping_rate(w) * w).norm();
            let a_th = if include_thermal {
                res.thermal_accel_asd(w)?
            } else {
                0.0
            };
            let mech = k * k * (a * a + a_th * a_th) / (denom * denom);
            let nu_n_sq = self.freq_noise.psd_at(w);
            omegas.push(w);
            values.push((mech + nu_n_sq).sqrt());
        }
        if omegas.is_empty() {
            return Err(Error::Spectrum(format!(
                "no overlap between the acceleration grid and the readout-noise band {:?}",
                band
            )));
        }
        SpectrumRecord::density(SpectrumKind::Asd, omegas, values, "Hz/rtHz")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::log_grid;
    use alloc::vec;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn dynamic_range_values() {
        let f = FpiReadout::reference_default();
        assert!(rel(f.dynamic_range(), 1.775e-6) < 1e-3, "{}", f.dynamic_range());
        assert!(rel(f.dynamic_range(), 1.8e-6) < 0.02);
        let doubled = FpiReadout::new(50e-3, 1064e-9, 20e9, 1000.0, NoiseSpectrum::Flat { psd: 0.0 }).unwrap();
        assert!(rel(doubled.dynamic_range(), 2.0 * f.dynamic_range()) < 1e-15);
        let short = FpiReadout::new(25e-3, 1064e-9, 10e9, 1000.0, NoiseSpectrum::Flat { psd: 0.0 }).unwrap();
        assert!(rel(short.dynamic_range(), 0.5 * f.dynamic_range()) < 1e-15);
    }

    #[test]
    fn frequency_conversion() {
        let f = FpiReadout::reference_default();
        assert_eq!(f.freq_from_displacement(0.0).unwrap(), 0.0);
        assert!(rel(f.freq_from_displacement(1e-9).unwrap(), 5.635e6) < 1e-3);
        let a = f.freq_from_displacement(3e-7).unwrap();
        assert_eq!(f.freq_from_displacement(6e-7).unwrap(), 2.0 * a);
        match f.freq_from_displacement(2e-6) {
            Err(Error::OutOfRange { dynamic_range, .. }) => assert!(rel(dynamic_range, 1.775e-6) < 1e-3),
            other => panic!("{other:?}"),
        }
        assert!(f.freq_from_displacement(f.dynamic_range()).is_err());
    }

    #[test]
    fn capture_threshold_is_strict() {
        let f = FpiReadout::reference_default();
        assert!(f.capture_check(0.0));
        assert!(f.capture_check(1e-9));
        assert!(!f.capture_check(2e-9));
        assert!(!f.capture_check(f.capture_range()));
    }

    #[test]
    fn invalid_cavities() {
        let n = || NoiseSpectrum::Flat { psd: 0.0 };
        assert!(FpiReadout::new(0.0, 1064e-9, 1e10, 1000.0, n()).is_err());
        assert!(FpiReadout::new(0.05, 1064e-9, 1e10, 1.0, n()).is_err());
        // capture range above dynamic range
        assert!(FpiReadout::new(0.05, 1064e-9, 1e6, 2.0, n()).is_err());
    }

    #[test]
    fn equivalent_acceleration_forms() {
        let f = FpiReadout::reference_default();
        let r = MechanicalResonator::reference_device();
        let quoted = f.range_equivalent_accel_quoted(&r) / crate::units::STANDARD_GRAVITY;
        assert!(rel(quoted, 8e-9) < 0.05, "{quoted}");
        let consistent = f.range_equivalent_accel(&r);
        assert!(rel(consistent / quoted / crate::units::STANDARD_GRAVITY, r.omega0()) < 1e-12);
    }

    fn zero_on(grid: &[f64]) -> SpectrumRecord {
        SpectrumRecord::density(SpectrumKind::Asd, grid.to_vec(), vec![0.0; grid.len()], "m/s2/rtHz").unwrap()
    }

    #[test]
    fn thermal_only_matches_transfer_function() {
        let f = FpiReadout::reference_default();
        let r = MechanicalResonator::reference_device();
        let grid = log_grid(r.omega0() / 10.0, r.omega0() * 10.0, 401);
        let out = f.output_spectrum(&r, 0.0, &zero_on(&grid), true).unwrap();
        for (w, v) in out.omegas().iter().zip(out.densities().unwrap()) {
            let expect =
                f.hz_per_metre() * r.acceleration_transfer(*w).unwrap().norm() * r.thermal_accel_asd(*w).unwrap();
            assert!(rel(*v, expect) < 1e-9);
        }
    }

    #[test]
    fn feedback_suppresses_thermal_peak() {
        let f = FpiReadout::reference_default();
        let r = MechanicalResonator::reference_device();
        let grid = vec![r.omega0()];
        let open = f
            .output_spectrum(&r, 0.0, &zero_on(&grid), true)
            .unwrap()
            .densities()
            .unwrap()[0];
        let closed = f
            .output_spectrum(&r, 99.0, &zero_on(&grid), true)
            .unwrap()
            .densities()
            .unwrap()[0];
        assert!(rel(open / closed, 100.0) < 1e-9);
    }

    #[test]
    fn off_resonance_external_acceleration() {
        let f = FpiReadout::reference_default();
        let r = MechanicalResonator::reference_device();
        let w = 2.0 * r.omega0();
        let a = SpectrumRecord::density(SpectrumKind::Asd, vec![w], vec![1e-9], "m/s2/rtHz").unwrap();
        let v = f.output_spectrum(&r, 0.0, &a, false).unwrap().densities().unwrap()[0];
        let expect = f.hz_per_metre() * 1e-9 / (3.0 * r.omega0().powi(2));
        assert!(rel(v, expect) < 0.01);
    }

    #[test]
    fn readout_noise_and_overlap() {
        let r = MechanicalResonator::reference_device();
        let noise_grid = log_grid(100.0, 200.0, 5);
        let nu_n = SpectrumRecord::density(SpectrumKind::Asd, noise_grid.clone(), vec![3.0; 5], "Hz/rtHz").unwrap();
        let f = FpiReadout::new(50e-3, 1064e-9, 10e9, 1000.0, NoiseSpectrum::shaped(&nu_n).unwrap()).unwrap();
        let low = log_grid(1.0, 10.0, 5);
        assert!(f.output_spectrum(&r, 0.0, &zero_on(&low), false).is_err());
        let out = f.output_spectrum(&r, 0.0, &zero_on(&noise_grid), false).unwrap();
        assert!(out.densities().unwrap().iter().all(|v| rel(*v, 3.0) < 1e-12));
    }

    proptest! {
        #[test]
        fn round_trip(frac in -0.999f64..0.999) {
            let f = FpiReadout::reference_default();
            let x = frac * f.dynamic_range();
            let nu = f.freq_from_displacement(x).unwrap();
            let back = f.displacement_from_freq(nu).unwrap();
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1e-30));
        }
    }
}
