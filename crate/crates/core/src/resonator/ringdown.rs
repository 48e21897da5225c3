//! Quality-factor extraction from free-decay (ringdown) data.
//!
//! The amplitude envelope is fitted in log space with ordinary least squares;
//! for raw oscillation records the envelope is first extracted by picking
//! the |x| maximum of every half-cycle (lobe between zero crossings).

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingdownFit {
    pub q: f64,
    pub omega0: f64,
    /// Fitted envelope amplitude at t = 0.
    pub amplitude0: f64,
    /// Slope of ln(envelope), 1/s (negative for a decay).
    pub slope: f64,
    /// RMS residual of the log-envelope fit.
    pub residual_rms: f64,
    pub samples: usize,
}

/// Envelope maxima extracted from an oscillating record.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub times: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Oscillation frequency from the mean zero-crossing spacing, rad/s.
    pub omega0: f64,
}

fn fit_failure(reason: alloc::string::String) -> Error {
    Error::FitFailure { reason }
}

/// Fits `a(t) = a0 exp(slope · t)` to envelope samples; `Q = ω0 / (2|slope|)`.
///
/// Needs at least ten samples spanning one e-fold of decay.
pub fn fit_ringdown_envelope(times: &[f64], amplitudes: &[f64], omega0: f64) -> Result<RingdownFit> {
    if times.len() != amplitudes.len() {
        return Err(fit_failure(format!(
            "{} times but {} amplitudes",
            times.len(),
            amplitudes.len()
        )));
    }
    let n = times.len();
    if n < MIN_SAMPLES {
        return Err(fit_failure(format!(
            "{n} envelope samples, need at least {MIN_SAMPLES}"
        )));
    }
    if !(omega0.is_finite() && omega0 > 0.0) {
        return Err(fit_failure(format!("omega0 must be positive, got {omega0}")));
    }
    if let Some(a) = amplitudes.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(fit_failure(format!("non-positive envelope sample {a}")));
    }

    let logs: Vec<f64> = amplitudes.iter().map(|a| a.ln()).collect();
    let nf = n as f64;
    let t_mean = times.iter().sum::<f64>() / nf;
    let y_mean = logs.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (t, y) in times.iter().zip(&logs) {
        sxx += (t - t_mean) * (t - t_mean);
        sxy += (t - t_mean) * (y - y_mean);
    }
    if sxx <= 0.0 {
        return Err(fit_failure(format!("samples do not span any time (sxx = {sxx})")));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * t_mean;
    let residual_rms = (times
        .iter()
        .zip(&logs)
        .map(|(t, y)| {
            let r = y - (intercept + slope * t);
            r * r
        })
        .sum::<f64>()
        / nf)
        .sqrt();

    if !(slope < 0.0) {
        return Err(fit_failure(format!(
            "envelope is not decaying (slope {slope:e} 1/s, residual rms {residual_rms:e})"
        )));
    }
    let span =
        times.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - times.iter().cloned().fold(f64::INFINITY, f64::min);
    let efolds = -slope * span;
    if efolds < 1.0 {
        return Err(fit_failure(format!(
            "record spans {efolds:.3} e-folds of decay, need at least 1 (slope {slope:e} 1/s)"
        )));
    }
    Ok(RingdownFit {
        q: omega0 / (2.0 * slope.abs()),
        omega0,
        amplitude0: intercept.exp(),
        slope,
        residual_rms,
        samples: n,
    })
}

/// Picks the |x| maximum of every complete half-cycle (refined by a
/// three-point parabola) and estimates ω0 from the zero-crossing spacing.
pub fn extract_envelope(times: &[f64], x: &[f64]) -> Result<Envelope> {
    if times.len() != x.len() || x.len() < 3 {
        return Err(fit_failure(format!(
            "need matching time/value series of length >= 3 (got {} and {})",
            times.len(),
            x.len()
        )));
    }
    // linearly interpolated zero crossings
    let mut crossings: Vec<(usize, f64)> = Vec::new();
    for i in 1..x.len() {
        let (a, b) = (x[i - 1], x[i]);
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            let s = a / (a - b);
            crossings.push((i, times[i - 1] + s * (times[i] - times[i - 1])));
        }
    }
    if crossings.len() < 3 {
        return Err(fit_failure(format!(
            "only {} zero crossings; record does not oscillate",
            crossings.len()
        )));
    }
    let half_period = (crossings[crossings.len() - 1].1 - crossings[0].1) / (crossings.len() - 1) as f64;
    let omega0 = core::f64::consts::PI / half_period;

    let mut env_t = Vec::with_capacity(crossings.len());
    let mut env_a = Vec::with_capacity(crossings.len());
    for pair in crossings.windows(2) {
        let (lo, hi) = (pair[0].0, pair[1].0);
        if hi <= lo {
            continue;
        }
        let (mut best, mut best_abs) = (lo, x[lo].abs());
        for (i, v) in x.iter().enumerate().take(hi).skip(lo) {
            if v.abs() > best_abs {
                best = i;
                best_abs = v.abs();
            }
        }
        let (mut tp, mut ap) = (times[best], best_abs);
        if best > 0 && best + 1 < x.len() {
            let (y0, y1, y2) = (x[best - 1].abs(), best_abs, x[best + 1].abs());
            let denom = y0 - 2.0 * y1 + y2;
            if denom < 0.0 {
                let d = 0.5 * (y0 - y2) / denom;
                if d.abs() <= 1.0 {
                    let dt = times[best + 1] - times[best];
                    tp += d * dt;
                    ap = y1 - 0.25 * (y0 - y2) * d;
                }
            }
        }
        env_t.push(tp);
        env_a.push(ap);
    }
    Ok(Envelope {
        times: env_t,
        amplitudes: env_a,
        omega0,
    })
}

/// Envelope extraction followed by the log-linear fit.
pub fn fit_ringdown_trace(times: &[f64], x: &[f64]) -> Result<RingdownFit> {
    let env = extract_envelope(times, x)?;
    fit_ringdown_envelope(&env.times, &env.amplitudes, env.omega0)
}
