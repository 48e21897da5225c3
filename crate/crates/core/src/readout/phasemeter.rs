use core::f64::consts::PI;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// First-order low-pass designed with the bilinear transform (prewarped).
#[derive(Debug, Clone, Copy)]
struct OnePole {
    b: f64,
    a1: f64,
    x_prev: f64,
    y_prev: f64,
}

impl OnePole {
    fn new(corner: f64, sample_rate: f64) -> Self {
        let k = (PI * corner / sample_rate).tan();
        Self {
            b: k / (1.0 + k),
            a1: (k - 1.0) / (k + 1.0),
            x_prev: 0.0,
            y_prev: 0.0,
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.b * (x + self.x_prev) - self.a1 * self.y_prev;
        self.x_prev = x;
        self.y_prev = y;
        y
    }
}

/// Streaming digital phasemeter for a heterodyne beat note.
///
/// Mixes the input with a local oscillator at the heterodyne frequency,
/// low-passes I and Q, takes the four-quadrant angle and unwraps it.
/// For a beat `cos(2π f_het t + φ)` the output converges to `φ`.
#[derive(Debug, Clone)]
pub struct Phasemeter {
    lo_step: f64,
    lo_phase: f64,
    i_lpf: OnePole,
    q_lpf: OnePole,
    last_raw: f64,
    unwrapped: f64,
}

impl Phasemeter {
    /// Requires `sample_rate > 4 f_het` and `lpf_corner < f_het / 2`.
    pub fn new(sample_rate: f64, het_freq: f64, lpf_corner: f64) -> Result<Self> {
        if !(het_freq > 0.0 && lpf_corner > 0.0 && sample_rate.is_finite()) {
            return Err(Error::Config(format!(
                "phasemeter needs positive frequencies (fs {sample_rate}, f_het {het_freq}, corner {lpf_corner})"
            )));
        }
        if !(sample_rate > 4.0 * het_freq) {
            return Err(Error::Config(format!(
                "sample rate {sample_rate} Hz must exceed 4 × heterodyne frequency {het_freq} Hz"
            )));
        }
        if !(lpf_corner < het_freq / 2.0) {
            return Err(Error::Config(format!(
                "low-pass corner {lpf_corner} Hz must be below half the heterodyne frequency {het_freq} Hz"
            )));
        }
        Ok(Self {
            lo_step: het_freq / sample_rate,
            lo_phase: 0.0,
            i_lpf: OnePole::new(lpf_corner, sample_rate),
            q_lpf: OnePole::new(lpf_corner, sample_rate),
            last_raw: 0.0,
            unwrapped: 0.0,
        })
    }

    /// Feeds one beat sample; returns the unwrapped phase estimate, rad.
    pub fn process(&mut self, sample: f64) -> f64 {
        let arg = 2.0 * PI * self.lo_phase;
        let (s, c) = arg.sin_cos();
        self.lo_phase += self.lo_step;
        self.lo_phase -= self.lo_phase.floor();

        let i = self.i_lpf.step(sample * c);
        let q = self.q_lpf.step(-sample * s);
        let raw = q.atan2(i);
        let mut d = raw - self.last_raw;
        if d > PI {
            d -= 2.0 * PI;
        } else if d <= -PI {
            d += 2.0 * PI;
        }
        self.unwrapped += d;
        self.last_raw = raw;
        self.unwrapped
    }
}

/// Runs a fresh [`Phasemeter`] over a whole record.
pub fn extract_phase(beat: &[f64], sample_rate: f64, het_freq: f64, lpf_corner: f64) -> Result<Vec<f64>> {
    let mut pm = Phasemeter::new(sample_rate, het_freq, lpf_corner)?;
    Ok(beat.iter().map(|&b| pm.process(b)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn beat(n: usize, fs: f64, f_het: f64, phase: impl Fn(f64) -> f64, amp: f64) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let t = k as f64 / fs;
                amp * (2.0 * PI * f_het * t + phase(t)).cos()
            })
            .collect()
    }

    fn tail_mean(v: &[f64], n: usize) -> f64 {
        v[v.len() - n..].iter().sum::<f64>() / n as f64
    }

    #[test]
    fn constant_phase_settles() {
        let (fs, f_het, fc) = (5000.0, 1000.0, 1.0);
        let tau = 1.0 / (2.0 * PI * fc);
        let n = (12.0 * tau * fs) as usize;
        let out = extract_phase(&beat(n, fs, f_het, |_| 0.7, 1.0), fs, f_het, fc).unwrap();
        let settle = (10.0 * tau * fs) as usize;
        for p in &out[settle..] {
            assert!((p - 0.7).abs() < 1e-3, "{p}");
        }
        let zero = extract_phase(&beat(n, fs, f_het, |_| 0.0, 1.0), fs, f_het, fc).unwrap();
        assert!(zero[settle..].iter().all(|p| p.abs() < 1e-3));
    }

    #[test]
    fn ramp_slope() {
        let (fs, f_het, fc) = (50_000.0, 10_000.0, 100.0);
        let rate = 2.0 * PI * 0.1;
        let n = 250_000;
        let out = extract_phase(&beat(n, fs, f_het, |t| rate * t, 1.0), fs, f_het, fc).unwrap();
        // least-squares slope over the settled part
        let start = 5_000;
        let pts: Vec<(f64, f64)> = out[start..]
            .iter()
            .enumerate()
            .map(|(i, p)| ((start + i) as f64 / fs, *p))
            .collect();
        let m = pts.len() as f64;
        let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
        let slope = sxy / sxx;
        assert!(((slope - rate) / rate).abs() < 5e-3, "{slope}");
    }

    #[test]
    fn unwrap_over_many_cycles() {
        let (fs, f_het, fc) = (5000.0, 1000.0, 20.0);
        let cycles = 25.0;
        let ramp_end = 5.0;
        let n = 40_000;
        let phase = move |t: f64| 2.0 * PI * cycles * (t / ramp_end).min(1.0);
        let out = extract_phase(&beat(n, fs, f_het, phase, 1.0), fs, f_het, fc).unwrap();
        // mean over whole ripple periods (2.5 samples each)
        let last = tail_mean(&out, 1000);
        assert!(
            (last - 2.0 * PI * cycles).abs() < 1e-6 * cycles,
            "{}",
            last - 2.0 * PI * cycles
        );
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(Phasemeter::new(4000.0, 1000.0, 10.0).is_err());
        assert!(Phasemeter::new(5000.0, 1000.0, 600.0).is_err());
        assert!(Phasemeter::new(5000.0, 0.0, 10.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn amplitude_invariant(amp in 1e-3f64..1e3, phi in -3.0f64..3.0) {
            let (fs, f_het, fc) = (5000.0, 1000.0, 5.0);
            let a = extract_phase(&beat(4000, fs, f_het, |_| phi, 1.0), fs, f_het, fc).unwrap();
            let b = extract_phase(&beat(4000, fs, f_het, |_| phi, amp), fs, f_het, fc).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
