//! Sampled spectra on an angular-frequency grid.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units::rad_to_hz;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    /// Amplitude spectral density, `unit/√Hz`.
    Asd,
    /// Power spectral density, `unit²/Hz`.
    Psd,
    /// Complex frequency response.
    Response,
}

#[derive(Debug, Clone, PartialEq)]
enum Values {
    Density(Vec<f64>),
    Response(Vec<Complex64>),
}

/// Single-sided spectral density (or complex response) samples.
///
/// Frequencies are stored in rad/s, strictly increasing and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRecord {
    omegas: Vec<f64>,
    values: Values,
    kind: SpectrumKind,
    unit: String,
}

fn check_grid(omegas: &[f64], n_values: usize) -> Result<()> {
    if omegas.is_empty() {
        return Err(Error::Spectrum("empty frequency grid".to_string()));
    }
    if omegas.len() != n_values {
        return Err(Error::Spectrum(alloc::format!(
            "{} frequencies but {} values",
            omegas.len(),
            n_values
        )));
    }
    if !omegas.iter().all(|w| w.is_finite() && *w > 0.0) {
        return Err(Error::Spectrum("frequencies must be finite and > 0".to_string()));
    }
    if omegas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Spectrum("frequencies must be strictly increasing".to_string()));
    }
    Ok(())
}

impl SpectrumRecord {
    /// Builds an ASD or PSD record.
    pub fn density(kind: SpectrumKind, omegas: Vec<f64>, values: Vec<f64>, unit: impl Into<String>) -> Result<Self> {
        if kind == SpectrumKind::Response {
            return Err(Error::Spectrum("density record cannot be of kind Response".to_string()));
        }
        check_grid(&omegas, values.len())?;
        if !values.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::Spectrum("density values must be finite and >= 0".to_string()));
        }
        Ok(Self {
            omegas,
            values: Values::Density(values),
            kind,
            unit: unit.into(),
        })
    }

    pub fn response(omegas: Vec<f64>, values: Vec<Complex64>, unit: impl Into<String>) -> Result<Self> {
        check_grid(&omegas, values.len())?;
        Ok(Self {
            omegas,
            values: Values::Response(values),
            kind: SpectrumKind::Response,
            unit: unit.into(),
        })
    }

    /// Samples `f` on `omegas`.
    pub fn from_fn(
        kind: SpectrumKind,
        omegas: Vec<f64>,
        unit: impl Into<String>,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values = omegas.iter().map(|&w| f(w)).collect();
        Self::density(kind, omegas, values, unit)
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn freqs_hz(&self) -> impl Iterator<Item = f64> + '_ {
        self.omegas.iter().map(|&w| rad_to_hz(w))
    }

    pub fn densities(&self) -> Option<&[f64]> {
        match &self.values {
            Values::Density(v) => Some(v),
            Values::Response(_) => None,
        }
    }

    pub fn responses(&self) -> Option<&[Complex64]> {
        match &self.values {
            Values::Response(v) => Some(v),
            Values::Density(_) => None,
        }
    }

    /// Lowest and highest grid frequency, rad/s.
    pub fn band(&self) -> (f64, f64) {
        (self.omegas[0], self.omegas[self.omegas.len() - 1])
    }

    /// Squares an ASD into a PSD; a PSD is returned unchanged.
    pub fn to_psd(&self, unit: impl Into<String>) -> Result<Self> {
        match (&self.values, self.kind) {
            (Values::Density(v), SpectrumKind::Asd) => Self::density(
                SpectrumKind::Psd,
                self.omegas.clone(),
                v.iter().map(|a| a * a).collect(),
                unit,
            ),
            (Values::Density(_), SpectrumKind::Psd) => Ok(self.clone()),
            _ => Err(Error::Spectrum("complex response has no PSD".to_string())),
        }
    }

    /// Square root of a PSD; an ASD is returned unchanged.
    pub fn to_asd(&self, unit: impl Into<String>) -> Result<Self> {
        match (&self.values, self.kind) {
            (Values::Density(v), SpectrumKind::Psd) => Self::density(
                SpectrumKind::Asd,
                self.omegas.clone(),
                v.iter().map(|p| p.sqrt()).collect(),
                unit,
            ),
            (Values::Density(_), SpectrumKind::Asd) => Ok(self.clone()),
            _ => Err(Error::Spectrum("complex response has no ASD".to_string())),
        }
    }

    /// Log-log interpolation of a density inside the grid; `None` outside it
    /// or for response records. Zero samples fall back to linear interpolation.
    pub fn interpolate(&self, omega: f64) -> Option<f64> {
        let v = self.densities()?;
        let (lo, hi) = self.band();
        if !(omega >= lo && omega <= hi) {
            return None;
        }
        let idx = self.omegas.partition_point(|&w| w <= omega);
        if idx == 0 {
            return Some(v[0]);
        }
        if idx >= self.omegas.len() {
            return Some(v[v.len() - 1]);
        }
        let (w0, w1) = (self.omegas[idx - 1], self.omegas[idx]);
        let (y0, y1) = (v[idx - 1], v[idx]);
        if y0 > 0.0 && y1 > 0.0 {
            let s = (omega / w0).ln() / (w1 / w0).ln();
            Some((y0.ln() + s * (y1 / y0).ln()).exp())
        } else {
            let s = (omega - w0) / (w1 - w0);
            Some(y0 + s * (y1 - y0))
        }
    }

    /// Like [`interpolate`](Self::interpolate) but holds the end values
    /// outside the grid.
    pub fn interpolate_clamped(&self, omega: f64) -> Option<f64> {
        let v = self.densities()?;
        let (lo, hi) = self.band();
        if omega < lo {
            Some(v[0])
        } else if omega > hi {
            Some(v[v.len() - 1])
        } else {
            self.interpolate(omega)
        }
    }

    /// Trapezoidal `∫ S df` over the grid (df in Hz). Meaningful for PSDs.
    pub fn integrate_hz(&self) -> Option<f64> {
        let v = self.densities()?;
        let mut acc = 0.0;
        for i in 1..v.len() {
            let df = rad_to_hz(self.omegas[i] - self.omegas[i - 1]);
            acc += 0.5 * (v[i] + v[i - 1]) * df;
        }
        Some(acc)
    }
}

/// A noise floor that is either white or tabulated.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpectrum {
    /// White noise with the given single-sided PSD.
    Flat { psd: f64 },
    /// Tabulated PSD, held constant beyond its grid.
    Shaped(SpectrumRecord),
}

impl NoiseSpectrum {
    pub fn flat_asd(asd: f64) -> Self {
        NoiseSpectrum::Flat { psd: asd * asd }
    }

    /// Accepts an ASD or PSD record and stores it as a PSD.
    pub fn shaped(record: &SpectrumRecord) -> Result<Self> {
        let unit = alloc::format!("({})^2", record.unit());
        Ok(NoiseSpectrum::Shaped(record.to_psd(unit)?))
    }

    pub fn psd_at(&self, omega: f64) -> f64 {
        match self {
            NoiseSpectrum::Flat { psd } => *psd,
            NoiseSpectrum::Shaped(rec) => rec.interpolate_clamped(omega).unwrap_or(0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            NoiseSpectrum::Flat { psd } => *psd == 0.0,
            NoiseSpectrum::Shaped(rec) => rec.densities().is_some_and(|v| v.iter().all(|x| *x == 0.0)),
        }
    }
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_bad_grids() {
        assert!(SpectrumRecord::density(SpectrumKind::Psd, vec![], vec![], "x").is_err());
        assert!(SpectrumRecord::density(SpectrumKind::Psd, vec![2.0, 1.0], vec![1.0, 1.0], "x").is_err());
        assert!(SpectrumRecord::density(SpectrumKind::Psd, vec![0.0, 1.0], vec![1.0, 1.0], "x").is_err());
        assert!(SpectrumRecord::density(SpectrumKind::Psd, vec![1.0, 2.0], vec![1.0, -1.0], "x").is_err());
        assert!(SpectrumRecord::density(SpectrumKind::Response, vec![1.0], vec![1.0], "x").is_err());
    }

    #[test]
    fn asd_squared_is_psd() {
        let asd =
            SpectrumRecord::density(SpectrumKind::Asd, vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 0.5], "m/rtHz").unwrap();
        let psd = asd.to_psd("m2/Hz").unwrap();
        assert_eq!(psd.densities().unwrap(), &[4.0, 9.0, 0.25]);
        let back = psd.to_asd("m/rtHz").unwrap();
        assert_eq!(back.densities().unwrap(), asd.densities().unwrap());
    }

    #[test]
    fn log_log_interpolation_of_power_law() {
        let w = log_grid(1.0, 100.0, 5);
        let rec = SpectrumRecord::from_fn(SpectrumKind::Psd, w, "u", |w| 1.0 / (w * w)).unwrap();
        let v = rec.interpolate(7.0).unwrap();
        assert!((v - 1.0 / 49.0).abs() < 1e-12);
        assert!(rec.interpolate(0.5).is_none());
        assert_eq!(rec.interpolate_clamped(1000.0).unwrap(), 1e-4);
    }

    #[test]
    fn log_grid_endpoints_exact() {
        let g = log_grid(0.1, 10.0, 7);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[6], 10.0);
        assert!((g[3] - 1.0).abs() < 1e-12);
    }
}
