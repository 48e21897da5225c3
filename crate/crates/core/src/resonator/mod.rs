//! Mechanical test-mass resonator: susceptibility, thermal noise, ringdown.

mod ringdown;

pub use ringdown::{extract_envelope, fit_ringdown_envelope, fit_ringdown_trace, Envelope, RingdownFit};

use num_complex::Complex64;

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::units::{hz_to_rad, BOLTZMANN};

/// Single-mode mechanical resonator with viscous and structural damping.
///
/// Structural loss follows `φ(ω) = (ω/ω0)^p / Q_int`; with the default
/// `p = 0` the loss angle is constant. `Q_int = ∞` disables structural
/// damping entirely (purely viscous resonator).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanicalResonator {
    mass: f64,
    omega0: f64,
    q_int: f64,
    gamma_v: f64,
    temperature: f64,
    loss_exponent: f64,
}

impl MechanicalResonator {
    pub fn new(mass: f64, omega0: f64, q_int: f64, gamma_v: f64, temperature: f64, loss_exponent: f64) -> Result<Self> {
        require_positive("mass", mass)?;
        require_positive("omega0", omega0)?;
        if !(q_int > 0.0) {
            return Err(Error::Domain {
                what: "q_int",
                requirement: "> 0 (may be infinite)",
                value: q_int,
            });
        }
        require_non_negative("gamma_v", gamma_v)?;
        require_non_negative("temperature", temperature)?;
        if !loss_exponent.is_finite() {
            return Err(Error::Domain {
                what: "loss_exponent",
                requirement: "finite",
                value: loss_exponent,
            });
        }
        if q_int.is_infinite() && gamma_v == 0.0 {
            return Err(Error::Domain {
                what: "gamma_v",
                requirement: "> 0 when q_int is infinite (resonator would be lossless)",
                value: gamma_v,
            });
        }
        Ok(Self {
            mass,
            omega0,
            q_int,
            gamma_v,
            temperature,
            loss_exponent,
        })
    }

    /// The fused-silica device: 2.6 g test mass, 4.72 Hz, Q = 4.77e5,
    /// structural damping only, 300 K.
    pub fn reference_device() -> Self {
        Self::new(2.6e-3, hz_to_rad(4.72), 4.77e5, 0.0, 300.0, 0.0).expect("valid constants")
    }

    /// Purely viscous resonator with quality factor `q`.
    pub fn viscous(mass: f64, omega0: f64, q: f64, temperature: f64) -> Result<Self> {
        require_positive("q", q)?;
        Self::new(mass, omega0, f64::INFINITY, omega0 / q, temperature, 0.0)
    }

    /// Same mass, resonance and temperature, but viscous damping with the
    /// given `q`. Used to build desk-scale simulation presets.
    pub fn with_viscous_q(&self, q: f64) -> Result<Self> {
        Self::viscous(self.mass, self.omega0, q, self.temperature)
    }

    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        Self::new(
            self.mass,
            self.omega0,
            self.q_int,
            self.gamma_v,
            temperature,
            self.loss_exponent,
        )
    }

    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        Self::new(
            mass,
            self.omega0,
            self.q_int,
            self.gamma_v,
            self.temperature,
            self.loss_exponent,
        )
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn omega0(&self) -> f64 {
        self.omega0
    }
    pub fn q_int(&self) -> f64 {
        self.q_int
    }
    pub fn gamma_v(&self) -> f64 {
        self.gamma_v
    }
    pub fn temperature(&self) -> f64 {
        self.temperature
    }
    pub fn loss_exponent(&self) -> f64 {
        self.loss_exponent
    }

    /// Structural loss angle φ(ω).
    pub fn loss_angle(&self, omega: f64) -> f64 {
        if self.q_int.is_infinite() {
            0.0
        } else {
            (omega / self.omega0).powf(self.loss_exponent) / self.q_int
        }
    }

    /// γ_m(ω) = γ_v + ω0² φ(ω) / ω, rad/s.
    pub fn damping_rate(&self, omega: f64) -> f64 {
        self.gamma_v + self.omega0 * self.omega0 * self.loss_angle(omega) / omega
    }

    /// Damping rate on resonance, Γ_m = γ_m(ω0).
    pub fn resonance_damping_rate(&self) -> f64 {
        self.damping_rate(self.omega0)
    }

    /// Total quality factor on resonance, ω0 / γ_m(ω0).
    pub fn quality_factor(&self) -> f64 {
        self.omega0 / self.resonance_damping_rate()
    }

    /// Open-loop thermal variance k_B T / (m ω0²), m².
    pub fn thermal_variance(&self) -> f64 {
        BOLTZMANN * self.temperature / (self.mass * self.omega0 * self.omega0)
    }

    /// χ_m(ω) = 1 / (m (ω0² − ω² + i γ_m(ω) ω)), m/N.
    pub fn force_susceptibility(&self, omega: f64) -> Result<Complex64> {
        check_omega(omega)?;
        Ok(self.susceptibility_unchecked(omega, 0.0))
    }

    /// χ for damping multiplied by (1 + g); shared with the closed-loop
    /// models. Caller guarantees `omega > 0`.
    pub(crate) fn susceptibility_unchecked(&self, omega: f64, g: f64) -> Complex64 {
        let re = self.omega0 * self.omega0 - omega * omega;
        let im = (1.0 + g) * self.damping_rate(omega) * omega;
        Complex64::new(re, im).inv() / self.mass
    }

    /// x/a transfer function, s². Equal to −m χ_m(ω): the test mass lags
    /// the frame acceleration with opposite sign.
    pub fn acceleration_transfer(&self, omega: f64) -> Result<Complex64> {
        Ok(-self.force_susceptibility(omega)? * self.mass)
    }

    /// Thermal acceleration noise ASD, m s⁻²/√Hz (single-sided):
    /// `sqrt(4 k_B T γ_m(ω) / m)`.
    pub fn thermal_accel_asd(&self, omega: f64) -> Result<f64> {
        check_omega(omega)?;
        Ok((4.0 * BOLTZMANN * self.temperature * self.damping_rate(omega) / self.mass).sqrt())
    }

    /// Thermal force PSD S_FF^th(ω) = 4 k_B T m γ_m(ω), N²/Hz.
    pub fn thermal_force_psd(&self, omega: f64) -> Result<f64> {
        check_omega(omega)?;
        Ok(4.0 * BOLTZMANN * self.temperature * self.mass * self.damping_rate(omega))
    }

    /// Free-decay amplitude envelope `x0 exp(−γ_m(ω0) t / 2)`.
    pub fn ringdown_envelope(&self, x0: f64, t: f64) -> Result<f64> {
        require_non_negative("t", t)?;
        Ok(x0 * (-self.resonance_damping_rate() * t / 2.0).exp())
    }
}

fn check_omega(omega: f64) -> Result<()> {
    require_positive("omega", omega).map(|_| ())
}
