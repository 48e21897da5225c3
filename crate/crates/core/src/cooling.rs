//! Closed-loop cold-damping analysis in the frequency domain.
//!
//! Derivative (velocity) feedback `χ_fb(ω) = i m g γ_m(ω) ω` multiplies the
//! damping by `1 + g` without touching the thermal force, so the resonant
//! thermal motion drops by `1 + g` while the readout imprecision is fed
//! back as a real force. The trade-off sets an optimal gain and a minimum
//! effective temperature `2 sqrt(T T_n)`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{require_non_negative, require_positive, Result};
use crate::numeric::{golden_section_min, integrate, QuadratureOptions};
use crate::resonator::MechanicalResonator;
use crate::spectrum::NoiseSpectrum;
use crate::units::BOLTZMANN;

/// Band of the numerical variance integrals, in units of ω0.
pub const INTEGRATION_BAND: (f64, f64) = (0.1, 10.0);

/// Derivative feedback gain i m g γ_m(ω) ω, N/m.
pub fn derivative_feedback(res: &MechanicalResonator, g: f64, omega: f64) -> Complex64 {
    Complex64::new(0.0, res.mass() * g * res.damping_rate(omega) * omega)
}

/// Closed-loop susceptibility from any open-loop χ_m and feedback χ_fb:
/// χ_m / (1 + χ_m χ_fb).
pub fn close_loop(chi_m: Complex64, chi_fb: Complex64) -> Complex64 {
    chi_m / (1.0 + chi_m * chi_fb)
}

/// 1 / (m (ω0² − ω² + i (1+g) γ_m(ω) ω)), m/N. Requires `omega > 0`.
pub fn effective_susceptibility(res: &MechanicalResonator, g: f64, omega: f64) -> Complex64 {
    res.susceptibility_unchecked(omega, g)
}

/// Open-loop thermal variance ⟨x²_th,0⟩ = k_B T / (m ω0²).
pub fn open_loop_variance(res: &MechanicalResonator) -> f64 {
    res.thermal_variance()
}

/// Resonant readout-noise variance ⟨x_n²⟩ ≈ Γ_m S_xx^n(ω0) / 4.
pub fn imprecision_variance(res: &MechanicalResonator, imprecision_psd_at_resonance: f64) -> f64 {
    res.resonance_damping_rate() * imprecision_psd_at_resonance / 4.0
}

/// Apparent temperature of the readout noise, T_n = m ω0² ⟨x_n²⟩ / k_B.
pub fn noise_temperature(res: &MechanicalResonator, imprecision_psd_at_resonance: f64) -> f64 {
    res.mass() * res.omega0() * res.omega0() * imprecision_variance(res, imprecision_psd_at_resonance) / BOLTZMANN
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveTemperature {
    /// T / (1+g) + g² T_n / (1+g), K.
    pub t_eff: f64,
    /// Lower bound 2 sqrt(T T_n) over all gains, K.
    pub floor: f64,
}

pub fn effective_temperature(res: &MechanicalResonator, g: f64, t_n: f64) -> Result<EffectiveTemperature> {
    require_non_negative("g", g)?;
    require_non_negative("t_n", t_n)?;
    let t = res.temperature();
    Ok(EffectiveTemperature {
        t_eff: (t + g * g * t_n) / (1.0 + g),
        floor: 2.0 * (t * t_n).sqrt(),
    })
}

/// Inputs to the closed-loop displacement spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct CoolingSetup {
    pub res: MechanicalResonator,
    pub g: f64,
    /// Readout imprecision S_xx^n, m²/Hz.
    pub imprecision: NoiseSpectrum,
    /// External force PSD S_FF^ext, N²/Hz.
    pub external_force: Option<NoiseSpectrum>,
}

impl CoolingSetup {
    pub fn new(res: MechanicalResonator, g: f64, imprecision: NoiseSpectrum) -> Result<Self> {
        require_non_negative("g", g)?;
        Ok(Self {
            res,
            g,
            imprecision,
            external_force: None,
        })
    }

    pub fn with_external_force(mut self, force: NoiseSpectrum) -> Self {
        self.external_force = Some(force);
        self
    }

    pub fn with_gain(&self, g: f64) -> Result<Self> {
        require_non_negative("g", g)?;
        let mut s = self.clone();
        s.g = g;
        Ok(s)
    }

    fn imprecision_at_resonance(&self) -> f64 {
        self.imprecision.psd_at(self.res.omega0())
    }
}

/// Contributions to S_xx(ω) or to ⟨x²⟩.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Parts {
    pub thermal: f64,
    pub feedthrough: f64,
    pub external: f64,
}

impl Parts {
    pub fn total(&self) -> f64 {
        self.thermal + self.feedthrough + self.external
    }
}

/// Terms of S_xx(ω) = |χ_eff|² (S_FF^th + S_FF^ext + |χ_fb|² S_xx^n), m²/Hz.
pub fn closed_loop_psd_parts(setup: &CoolingSetup, omega: f64) -> Parts {
    let res = &setup.res;
    let chi2 = effective_susceptibility(res, setup.g, omega).norm_sqr();
    let s_th = 4.0 * BOLTZMANN * res.temperature() * res.mass() * res.damping_rate(omega);
    let fb2 = derivative_feedback(res, setup.g, omega).norm_sqr();
    Parts {
        thermal: chi2 * s_th,
        feedthrough: chi2 * fb2 * setup.imprecision.psd_at(omega),
        external: setup.external_force.as_ref().map_or(0.0, |f| chi2 * f.psd_at(omega)),
    }
}

pub fn closed_loop_psd(setup: &CoolingSetup, omega: f64) -> f64 {
    closed_loop_psd_parts(setup, omega).total()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingResult {
    /// Numerical integral of the closed-loop PSD (authoritative).
    pub numeric: Parts,
    /// High-Q, resonant approximation: thermal/(1+g) and g²⟨x_n²⟩/(1+g).
    /// The external term is always the numerical one.
    pub analytic: Parts,
    /// Effective temperature from the numerical variance, K.
    pub t_eff: f64,
    /// Readout-noise temperature, K.
    pub t_n: f64,
}

impl CoolingResult {
    pub fn variance(&self) -> f64 {
        self.numeric.total()
    }
}

/// Breakpoints for the variance integrals: log-spaced over the band plus a
/// dense set at ω0 ± k γ_eff so the narrow resonance is always resolved.
pub fn integration_breaks(res: &MechanicalResonator, g: f64) -> Vec<f64> {
    let w0 = res.omega0();
    let (lo, hi) = (w0 * INTEGRATION_BAND.0, w0 * INTEGRATION_BAND.1);
    let gamma_eff = (1.0 + g) * res.resonance_damping_rate();
    let mut breaks = crate::spectrum::log_grid(lo, hi, 17);
    breaks.push(w0);
    for k in 1..=10 {
        for side in [-1.0, 1.0] {
            let w = w0 + side * k as f64 * gamma_eff;
            if w > lo && w < hi {
                breaks.push(w);
            }
        }
    }
    breaks
}

fn integrate_part(setup: &CoolingSetup, breaks: &[f64], pick: impl Fn(&Parts) -> f64) -> Result<f64> {
    let q = integrate(
        |w| pick(&closed_loop_psd_parts(setup, w)) / (2.0 * core::f64::consts::PI),
        breaks,
        QuadratureOptions::default(),
    )?;
    Ok(q.value)
}

/// Closed-loop displacement variance, both integrated numerically over
/// ω ∈ [ω0/10, 10 ω0] and in the resonant approximation.
pub fn closed_loop_variance(setup: &CoolingSetup) -> Result<CoolingResult> {
    let res = &setup.res;
    let breaks = integration_breaks(res, setup.g);
    let numeric = Parts {
        thermal: integrate_part(setup, &breaks, |p| p.thermal)?,
        feedthrough: integrate_part(setup, &breaks, |p| p.feedthrough)?,
        external: if setup.external_force.is_some() {
            integrate_part(setup, &breaks, |p| p.external)?
        } else {
            0.0
        },
    };
    let g = setup.g;
    let s_n = setup.imprecision_at_resonance();
    let analytic = Parts {
        thermal: open_loop_variance(res) / (1.0 + g),
        feedthrough: g * g * imprecision_variance(res, s_n) / (1.0 + g),
        external: numeric.external,
    };
    let k = res.mass() * res.omega0() * res.omega0() / BOLTZMANN;
    Ok(CoolingResult {
        numeric,
        analytic,
        t_eff: k * numeric.total(),
        t_n: noise_temperature(res, s_n),
    })
}

/// Resonant-approximation variance without external force:
/// ⟨x²_th,0⟩/(1+g) + g² ⟨x_n²⟩/(1+g).
pub fn analytic_variance(res: &MechanicalResonator, g: f64, imprecision_psd_at_resonance: f64) -> f64 {
    (open_loop_variance(res) + g * g * imprecision_variance(res, imprecision_psd_at_resonance)) / (1.0 + g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalGain {
    /// sqrt(4 k_B T / (m ω0² Γ_m S_xx^n)).
    pub closed_form: f64,
    /// Golden-section minimiser of [`analytic_variance`].
    pub numeric: f64,
    /// Variance at the numeric minimiser, m².
    pub min_variance: f64,
}

pub fn optimal_gain(res: &MechanicalResonator, imprecision_psd_at_resonance: f64) -> Result<OptimalGain> {
    let s_n = require_positive("imprecision psd", imprecision_psd_at_resonance)?;
    require_positive("temperature", res.temperature())?;
    let closed_form = (open_loop_variance(res) / imprecision_variance(res, s_n)).sqrt();
    let f = |u: f64| analytic_variance(res, u.exp_m1(), s_n);
    let hi = (100.0 * closed_form.max(1.0)).ln_1p();
    let (u, min_variance) = golden_section_min(f, 0.0, hi, 1e-12);
    Ok(OptimalGain {
        closed_form,
        numeric: u.exp_m1(),
        min_variance,
    })
}

/// Gain minimising the numerically integrated variance of `setup` (its own
/// `g` is ignored). Searches a decade either side of `guess`.
pub fn optimal_gain_integrated(setup: &CoolingSetup, guess: f64) -> Result<(f64, f64)> {
    require_positive("guess", guess)?;
    let eval = |u: f64| -> f64 {
        setup
            .with_gain(u.exp())
            .and_then(|s| closed_loop_variance(&s))
            .map_or(f64::INFINITY, |r| r.variance())
    };
    let (u, v) = golden_section_min(eval, (guess / 10.0).ln(), (guess * 10.0).ln(), 1e-6);
    Ok((u.exp(), v))
}

/// Numerical minimum of T_eff(g) and the minimising gain. The exact
/// minimum, 2 (sqrt(T_n (T + T_n)) − T_n), lies below the floor
/// 2 sqrt(T T_n) by a relative amount of about sqrt(T_n / T).
pub fn min_effective_temperature(res: &MechanicalResonator, t_n: f64) -> Result<(f64, f64)> {
    require_positive("t_n", t_n)?;
    let ratio = res.temperature() / t_n;
    let hi = (100.0 * ratio.sqrt().max(1.0)).ln_1p();
    let f = |u: f64| (res.temperature() + u.exp_m1().powi(2) * t_n) / (1.0 + u.exp_m1());
    let (u, t) = golden_section_min(f, 0.0, hi, 1e-12);
    Ok((u.exp_m1(), t))
}
