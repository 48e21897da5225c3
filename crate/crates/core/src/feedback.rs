//! Radiation-pressure feedback transduction chain.
//!
//! Measured displacement → phase (2π/λ) → DAC voltage (G_DAC, V/rad) →
//! optical power through an electro-optic amplitude modulator (EOAM) →
//! radiation-pressure force (2/c for a perfect reflector). All gains are
//! reported as magnitudes; the loop polarity lives in the controller.

use core::f64::consts::{FRAC_PI_2, PI};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::resonator::MechanicalResonator;
use crate::units::SPEED_OF_LIGHT;

/// Placeholder half-wave voltage for a free-space EOAM, V.
pub const DEFAULT_V_PI: f64 = 200.0;
/// Optical power above which the modulator crystal risks damage, W.
pub const DEFAULT_DAMAGE_THRESHOLD: f64 = 0.1;

/// Radiation-pressure actuator gain dF/dP = 2/c, N/W.
pub fn actuator_gain() -> f64 {
    2.0 / SPEED_OF_LIGHT
}

/// Largest DAC gain that keeps the EOAM drive within one half-wave voltage
/// over a peak-to-peak displacement `x_pp`: `Vπ λ / (2π x_pp)`, V/rad.
pub fn max_dac_gain(v_pi: f64, wavelength: f64, x_pp: f64) -> Result<f64> {
    require_positive("v_pi", v_pi)?;
    require_positive("wavelength", wavelength)?;
    require_positive("x_pp", x_pp)?;
    Ok(v_pi * wavelength / (2.0 * PI * x_pp))
}

/// Intensity modulator transmitting `P0 cos²(π V / Vπ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eoam {
    v_pi: f64,
    p0: f64,
    bias_angle: f64,
    damage_threshold: f64,
}

impl Eoam {
    pub fn new(v_pi: f64, p0: f64, bias_angle: f64, damage_threshold: f64) -> Result<Self> {
        require_positive("v_pi", v_pi)?;
        require_positive("p0", p0)?;
        require_positive("damage_threshold", damage_threshold)?;
        if p0 > damage_threshold {
            return Err(Error::PowerLimit {
                required: p0,
                allowed: damage_threshold,
            });
        }
        if !(0.0..=FRAC_PI_2).contains(&bias_angle) {
            return Err(Error::Domain {
                what: "bias_angle",
                requirement: "within [0, π/2]",
                value: bias_angle,
            });
        }
        Ok(Self {
            v_pi,
            p0,
            bias_angle,
            damage_threshold,
        })
    }

    pub fn v_pi(&self) -> f64 {
        self.v_pi
    }
    pub fn p0(&self) -> f64 {
        self.p0
    }
    pub fn bias_angle(&self) -> f64 {
        self.bias_angle
    }
    pub fn damage_threshold(&self) -> f64 {
        self.damage_threshold
    }

    /// Transmitted power at drive voltage `v`, W.
    pub fn power(&self, v: f64) -> f64 {
        let c = (PI * v / self.v_pi).cos();
        self.p0 * c * c
    }

    /// Bias voltage θ Vπ / π.
    pub fn bias_voltage(&self) -> f64 {
        self.bias_angle * self.v_pi / PI
    }

    /// |dP/dV| at the bias point, `(π P0 / Vπ) sin 2θ`, W/V.
    pub fn gain(&self) -> f64 {
        PI * self.p0 / self.v_pi * (2.0 * self.bias_angle).sin().abs()
    }

    pub fn with_p0(&self, p0: f64) -> Result<Self> {
        Self::new(self.v_pi, p0, self.bias_angle, self.damage_threshold)
    }
}

/// The composed feedback chain χ_fb = G_FP · G_PV · G_DAC · 2π/λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackChain {
    eoam: Eoam,
    g_dac: f64,
    wavelength: f64,
}

impl FeedbackChain {
    pub fn new(eoam: Eoam, g_dac: f64, wavelength: f64) -> Result<Self> {
        require_non_negative("g_dac", g_dac)?;
        require_positive("wavelength", wavelength)?;
        Ok(Self {
            eoam,
            g_dac,
            wavelength,
        })
    }

    pub fn eoam(&self) -> &Eoam {
        &self.eoam
    }
    pub fn g_dac(&self) -> f64 {
        self.g_dac
    }
    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn with_g_dac(&self, g_dac: f64) -> Result<Self> {
        Self::new(self.eoam, g_dac, self.wavelength)
    }

    pub fn with_p0(&self, p0: f64) -> Result<Self> {
        Self::new(self.eoam.with_p0(p0)?, self.g_dac, self.wavelength)
    }

    /// Displacement-to-voltage gain G_DAC · 2π/λ, V/m.
    pub fn voltage_per_metre(&self) -> f64 {
        self.g_dac * 2.0 * PI / self.wavelength
    }

    /// |χ_fb| at low frequency, N/m.
    pub fn static_feedback_gain(&self) -> f64 {
        actuator_gain() * self.eoam.gain() * self.voltage_per_metre()
    }

    /// Static gain the chain would have at optical power `p0`, ignoring the
    /// damage threshold. Linear in `p0`.
    pub fn static_feedback_gain_at(&self, p0: f64) -> f64 {
        self.static_feedback_gain() * p0 / self.eoam.p0
    }

    /// Dimensionless cooling gain g = |χ_fb| Q / (m ω0²).
    pub fn gain_factor(&self, res: &MechanicalResonator) -> f64 {
        gain_from_static(self.static_feedback_gain(), res)
    }

    /// Gain factor per watt of optical power at this chain's G_DAC and bias.
    pub fn gain_per_watt(&self, res: &MechanicalResonator) -> f64 {
        self.gain_factor(res) / self.eoam.p0
    }

    /// Optical power needed for `g_target`, without the damage check.
    pub fn required_power(&self, res: &MechanicalResonator, g_target: f64) -> Result<f64> {
        require_positive("g_target", g_target)?;
        let per_watt = self.gain_per_watt(res);
        if !(per_watt > 0.0) {
            return Err(Error::Domain {
                what: "chain gain per watt",
                requirement: "> 0 (G_DAC and sin 2θ must be non-zero)",
                value: per_watt,
            });
        }
        Ok(g_target / per_watt)
    }

    /// Optical power needed for `g_target`; fails when it exceeds the
    /// modulator damage threshold.
    pub fn power_for_gain(&self, res: &MechanicalResonator, g_target: f64) -> Result<f64> {
        let p = self.required_power(res, g_target)?;
        if p > self.eoam.damage_threshold {
            return Err(Error::PowerLimit {
                required: p,
                allowed: self.eoam.damage_threshold,
            });
        }
        Ok(p)
    }
}

/// g = |χ_fb| Q / (m ω0²) with Q the total on-resonance quality factor.
pub fn gain_from_static(static_gain: f64, res: &MechanicalResonator) -> f64 {
    static_gain * res.quality_factor() / (res.mass() * res.omega0() * res.omega0())
}

/// Convenience: gain factor of `chain` on `res`.
pub fn gain_from_power(chain: &FeedbackChain, res: &MechanicalResonator) -> f64 {
    chain.gain_factor(res)
}
