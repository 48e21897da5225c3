//! Adaptive Gauss-Kronrod quadrature and golden-section minimisation.

use alloc::vec::Vec;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 0.0,
            max_intervals: 5000,
        }
    }
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting from the given
/// subdivision and bisecting the worst interval until the summed error
/// estimate meets `max(abs_tol, rel_tol |I|)`.
pub fn integrate(f: impl Fn(f64) -> f64, breaks: &[f64], opts: QuadratureOptions) -> Result<Quadrature> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup();
    if pts.len() < 2 {
        return Ok(Quadrature {
            value: 0.0,
            error_estimate: 0.0,
            intervals: 0,
        });
    }
    let mut parts: Vec<(f64, f64, f64, f64)> = pts
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(Error::Integration {
                estimate: total,
                error_estimate: err,
                intervals: parts.len(),
            });
        }
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            return Ok(Quadrature {
                value: total,
                error_estimate: err,
                intervals: parts.len(),
            });
        }
        if parts.len() >= opts.max_intervals {
            return Err(Error::Integration {
                estimate: total,
                error_estimate: err,
                intervals: parts.len(),
            });
        }
        let (worst, _) =
            parts.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc },
            );
        let (a, b, _, _) = parts[worst];
        let m = 0.5 * (a + b);
        let (v1, e1) = gk15(&f, a, m);
        let (v2, e2) = gk15(&f, m, b);
        parts[worst] = (a, m, v1, e1);
        parts.push((m, b, v2, e2));
    }
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
/// Returns `(x_min, f(x_min))`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, x_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..500 {
        if (hi - lo).abs() <= x_tol {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x| 3.0 * x * x + 1.0, &[0.0, 2.0], QuadratureOptions::default()).unwrap();
        assert!((q.value - 10.0).abs() < 1e-13);
    }

    #[test]
    fn narrow_lorentzian_with_seeded_breaks() {
        // ∫ (γ/π) / ((x−1)² + γ²) over [0, 2] → (2/π) atan(1/γ)
        let g = 1e-6;
        let f = |x: f64| g / PI / ((x - 1.0).powi(2) + g * g);
        let mut breaks = alloc::vec![0.0, 2.0];
        for k in 1..=10 {
            breaks.push(1.0 - k as f64 * g);
            breaks.push(1.0 + k as f64 * g);
        }
        breaks.push(1.0);
        let q = integrate(f, &breaks, QuadratureOptions::default()).unwrap();
        let exact = 2.0 / PI * (1.0 / g).atan();
        assert!(((q.value - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn reports_non_convergence() {
        let opts = QuadratureOptions {
            rel_tol: 1e-14,
            abs_tol: 0.0,
            max_intervals: 4,
        };
        let r = integrate(|x: f64| 1.0 / x.sqrt(), &[1e-12, 1.0], opts);
        assert!(matches!(r, Err(Error::Integration { .. })));
    }

    #[test]
    fn golden_section_parabola() {
        let (x, fx) = golden_section_min(|x| (x - 1.3).powi(2) + 2.0, -10.0, 10.0, 1e-10);
        assert!((x - 1.3).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-12);
    }
}
