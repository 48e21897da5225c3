//! Welch-averaged single-sided PSD with a periodic Hann window.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{require_positive, Error, Result};
use crate::fft::fft_in_place;
use crate::spectrum::{SpectrumKind, SpectrumRecord};

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos()))
        .collect()
}

/// Equivalent noise bandwidth of the Hann window, f_s Σw² / (Σw)², Hz.
pub fn hann_enbw(segment: usize, sample_rate: f64) -> f64 {
    let w = hann(segment);
    let s1: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|v| v * v).sum();
    sample_rate * s2 / (s1 * s1)
}

/// Averages windowed periodograms of `segment`-sample pieces overlapping by
/// `overlap` (fraction in [0, 1)). Each segment has its mean removed. The
/// result excludes DC and is scaled by Σw² so that its integral equals the
/// series variance. `segment` must be a power of two.
pub fn estimate_psd(series: &[f64], dt: f64, segment: usize, overlap: f64, unit: &str) -> Result<SpectrumRecord> {
    require_positive("dt", dt)?;
    if segment < 8 || !segment.is_power_of_two() {
        return Err(Error::Config(alloc::format!(
            "segment length {segment} must be a power of two ≥ 8"
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Config(alloc::format!("overlap {overlap} must be in [0, 1)")));
    }
    if series.len() < 2 * segment {
        return Err(Error::Config(alloc::format!(
            "series of {} samples is shorter than two segments of {segment}",
            series.len()
        )));
    }
    let fs = 1.0 / dt;
    let hop = (((1.0 - overlap) * segment as f64).round() as usize).max(1);
    let w = hann(segment);
    let norm: f64 = w.iter().map(|v| v * v).sum::<f64>() * fs;
    let half = segment / 2;
    let mut acc = alloc::vec![0.0; half];
    let mut buf = alloc::vec![Complex64::new(0.0, 0.0); segment];
    let mut count = 0usize;
    let mut start = 0;
    while start + segment <= series.len() {
        let seg = &series[start..start + segment];
        let mean = seg.iter().sum::<f64>() / segment as f64;
        for ((b, &s), &wi) in buf.iter_mut().zip(seg).zip(&w) {
            *b = Complex64::new((s - mean) * wi, 0.0);
        }
        fft_in_place(&mut buf)?;
        for (k, a) in acc.iter_mut().enumerate() {
            let bin = k + 1;
            let scale = if bin == half { 1.0 } else { 2.0 };
            *a += scale * buf[bin].norm_sqr() / norm;
        }
        count += 1;
        start += hop;
    }
    let omegas = (1..=half).map(|k| 2.0 * PI * k as f64 * fs / segment as f64).collect();
    let values = acc.into_iter().map(|a| a / count as f64).collect();
    SpectrumRecord::density(SpectrumKind::Psd, omegas, values, unit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeededStreams, Stream};

    #[test]
    fn white_noise_is_flat() {
        let mut s = SeededStreams::new(7).stream(Stream::Aux);
        let seg = 256;
        let x: Vec<f64> = (0..seg * 101).map(|_| s.gaussian()).collect();
        let fs = 100.0;
        let psd = estimate_psd(&x, 1.0 / fs, seg, 0.0, "1/Hz").unwrap();
        let d = psd.densities().unwrap();
        let inner = &d[2..d.len() - 2];
        let mean = inner.iter().sum::<f64>() / inner.len() as f64;
        assert!((mean * fs / 2.0 - 1.0).abs() < 0.1, "{}", mean * fs / 2.0);
    }

    #[test]
    fn parseval_for_noise() {
        let mut s = SeededStreams::new(8).stream(Stream::Aux);
        let x: Vec<f64> = (0..65536).map(|_| 3.0 * s.gaussian()).collect();
        let psd = estimate_psd(&x, 1e-3, 1024, 0.5, "m²/Hz").unwrap();
        let var = psd.integrate_hz().unwrap();
        assert!((var / 9.0 - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn tone_power() {
        let fs = 1000.0;
        let seg = 4096;
        let a = 2.5;
        let f = 123.4;
        let x: Vec<f64> = (0..seg * 16)
            .map(|n| a * (2.0 * PI * f * n as f64 / fs).sin())
            .collect();
        let psd = estimate_psd(&x, 1.0 / fs, seg, 0.5, "V²/Hz").unwrap();
        let d = psd.densities().unwrap();
        let df = fs / seg as f64;
        let peak: f64 = psd
            .omegas()
            .iter()
            .zip(d)
            .filter(|(w, _)| (**w / (2.0 * PI) - f).abs() < 10.0 * df)
            .map(|(_, p)| p * df)
            .sum();
        assert!((peak / (a * a / 2.0) - 1.0).abs() < 0.02, "{}", peak / (a * a / 2.0));
    }

    #[test]
    fn enbw_of_hann() {
        assert!((hann_enbw(1024, 1024.0) - 1.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_short_or_bad_segments() {
        let x = [0.0; 100];
        assert!(estimate_psd(&x, 1.0, 64, 0.5, "").is_err());
        assert!(estimate_psd(&x, 1.0, 48, 0.5, "").is_err());
        assert!(estimate_psd(&x, 1.0, 32, 1.0, "").is_err());
    }
}
