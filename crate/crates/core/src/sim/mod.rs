//! Seeded Langevin simulation of the feedback-cooled resonator.
//!
//! Integrates `m ẍ = −m ω0² x − m γ ẋ + F_th + F_ext + F_fb` with
//! semi-implicit Euler. Time-domain runs use the viscous-equivalent damping
//! γ = ω0/Q at resonance; structural damping has no exact time-domain form.
//! The reference resonator relaxes over days, so [`Preset`] offers the same
//! mass and frequency at Q = 100, 1e3 and 1e5.

mod montecarlo;
mod welch;

pub use montecarlo::{aggregate, monte_carlo_variance, seed_variance, MonteCarloResult, SeedVariance};
pub use welch::{estimate_psd, hann_enbw};

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::feedback::{actuator_gain, FeedbackChain};
use crate::readout::HliReadout;
use crate::resonator::MechanicalResonator;
use crate::rng::{SeededStreams, Stream};
use crate::spectrum::NoiseSpectrum;
use crate::units::BOLTZMANN;

/// Samples per mechanical period used by [`default_dt`].
pub const DEFAULT_SAMPLES_PER_PERIOD: f64 = 100.0;
/// Fewest samples per mechanical period accepted.
pub const MIN_SAMPLES_PER_PERIOD: f64 = 20.0;
/// Default quality factor of the optional velocity bandpass.
pub const DEFAULT_BANDPASS_Q: f64 = 10.0;
/// |x| beyond this multiple of the initial scale counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Desk-scale resonators: reference mass, frequency and temperature, viscous
/// damping at a reduced Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Q100,
    Q1e3,
    Q1e5,
}

impl Preset {
    pub fn q(self) -> f64 {
        match self {
            Preset::Q100 => 1e2,
            Preset::Q1e3 => 1e3,
            Preset::Q1e5 => 1e5,
        }
    }

    pub fn resonator(self) -> MechanicalResonator {
        let p = MechanicalResonator::reference_device();
        MechanicalResonator::viscous(p.mass(), p.omega0(), self.q(), p.temperature()).expect("valid preset")
    }
}

/// 1 / (100 f0).
pub fn default_dt(res: &MechanicalResonator) -> f64 {
    2.0 * PI / (DEFAULT_SAMPLES_PER_PERIOD * res.omega0())
}

/// White imprecision that makes `g` the optimal gain for `res`:
/// S = 4 ⟨x²_th⟩ / (γ g²).
pub fn imprecision_for_optimal_gain(res: &MechanicalResonator, g: f64) -> Result<NoiseSpectrum> {
    require_positive("g", g)?;
    Ok(NoiseSpectrum::Flat {
        psd: 4.0 * res.thermal_variance() / (res.resonance_damping_rate() * g * g),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExternalForce {
    None,
    /// `amplitude sin(2π f t)`, N and Hz.
    Sinusoid {
        amplitude: f64,
        freq_hz: f64,
    },
    /// One value per step, N; zero once exhausted.
    Series(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Controller {
    Off,
    /// `F = −m g γ ẏ_est`.
    Derivative {
        g: f64,
        bandpass_q: Option<f64>,
    },
    /// Full transduction: DAC voltage, EOAM cos² transmission, radiation
    /// pressure. `dac_lsb` quantises the drive voltage (V).
    Chain {
        chain: FeedbackChain,
        dac_lsb: Option<f64>,
        bandpass_q: Option<f64>,
    },
}

impl Controller {
    /// Nominal small-signal gain factor on `res`.
    pub fn gain_factor(&self, res: &MechanicalResonator) -> f64 {
        match self {
            Controller::Off => 0.0,
            Controller::Derivative { g, .. } => *g,
            Controller::Chain { chain, .. } => chain.gain_factor(res),
        }
    }

    fn bandpass_q(&self) -> Option<f64> {
        match self {
            Controller::Off => None,
            Controller::Derivative { bandpass_q, .. } | Controller::Chain { bandpass_q, .. } => *bandpass_q,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    pub x0: f64,
    pub v0: f64,
    pub external: ExternalForce,
    pub controller: Controller,
    /// Viscous damping on. Off only for integrator checks.
    pub damping: bool,
}

impl SimConfig {
    pub fn new(res: &MechanicalResonator, duration: f64, seed: u64) -> Self {
        Self {
            dt: default_dt(res),
            duration,
            seed,
            x0: 0.0,
            v0: 0.0,
            external: ExternalForce::None,
            controller: Controller::Off,
            damping: true,
        }
    }

    pub fn with_controller(mut self, controller: Controller) -> Self {
        self.controller = controller;
        self
    }

    pub fn with_initial(mut self, x0: f64, v0: f64) -> Self {
        self.x0 = x0;
        self.v0 = v0;
        self
    }

    pub fn with_external(mut self, external: ExternalForce) -> Self {
        self.external = external;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn validate(&self, res: &MechanicalResonator) -> Result<()> {
        require_positive("dt", self.dt)?;
        require_positive("duration", self.duration)?;
        let f0 = res.omega0() / (2.0 * PI);
        if self.dt > 1.0 / (MIN_SAMPLES_PER_PERIOD * f0) * (1.0 + 1e-12) {
            return Err(Error::Config(alloc::format!(
                "dt = {} s gives fewer than {MIN_SAMPLES_PER_PERIOD} samples per period",
                self.dt
            )));
        }
        if self.duration < 100.0 * self.dt {
            return Err(Error::Config(alloc::format!(
                "duration {} s is shorter than 100 steps",
                self.duration
            )));
        }
        if !(self.x0.is_finite() && self.v0.is_finite()) {
            return Err(Error::Config("initial state must be finite".into()));
        }
        match &self.controller {
            Controller::Off => {}
            Controller::Derivative { g, .. } => {
                require_non_negative("g", *g)?;
            }
            Controller::Chain { dac_lsb, .. } => {
                if let Some(lsb) = dac_lsb {
                    require_positive("dac_lsb", *lsb)?;
                }
            }
        }
        if let Some(q) = self.controller.bandpass_q() {
            require_positive("bandpass_q", q)?;
        }
        if let ExternalForce::Sinusoid { amplitude, freq_hz } = self.external {
            require_non_negative("external amplitude", amplitude.abs())?;
            require_non_negative("external frequency", freq_hz)?;
        }
        Ok(())
    }
}

/// One integrator step as seen by a sink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub step: usize,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub force: f64,
    /// NaN unless the chain controller is active.
    pub voltage: f64,
    /// NaN unless the chain controller is active.
    pub power: f64,
}

/// Uniformly sampled realisation. Index `n` is time `n dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub config: SimConfig,
    pub x: Vec<f64>,
    /// Readout, `x` plus imprecision.
    pub y: Vec<f64>,
    pub force: Vec<f64>,
    pub voltage: Option<Vec<f64>>,
    pub power: Option<Vec<f64>>,
}

impl SimTrace {
    pub fn seed(&self) -> u64 {
        self.config.seed
    }
    pub fn dt(&self) -> f64 {
        self.config.dt
    }
    pub fn len(&self) -> usize {
        self.x.len()
    }
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.config.dt
    }
}

/// Second-order bandpass, unity gain and zero phase at its centre;
/// bilinear transform prewarped at the centre.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
}

impl Biquad {
    fn bandpass(omega0: f64, q: f64, dt: f64) -> Self {
        let k = omega0 / (omega0 * dt / 2.0).tan();
        let bw = omega0 * k / q;
        let a0 = k * k + bw + omega0 * omega0;
        Self {
            b0: bw / a0,
            b2: -bw / a0,
            a1: 2.0 * (omega0 * omega0 - k * k) / a0,
            a2: (k * k - bw + omega0 * omega0) / a0,
            x1: 0.0,
            x2: 0.0,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn process(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.b2 * self.x2 - self.a1 * self.y1 - self.a2 * self.y2;
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Runs the simulation, handing every step to `sink`. Returns the number
/// of steps taken.
pub fn simulate_with(
    cfg: &SimConfig,
    res: &MechanicalResonator,
    hli: Option<&HliReadout>,
    mut sink: impl FnMut(&Sample),
) -> Result<usize> {
    cfg.validate(res)?;
    let dt = cfg.dt;
    let fs = 1.0 / dt;
    let m = res.mass();
    let w0 = res.omega0();
    let w02 = w0 * w0;
    let gamma = if cfg.damping { res.resonance_damping_rate() } else { 0.0 };
    let sigma_th = (4.0 * BOLTZMANN * res.temperature() * m * gamma * fs / 2.0).sqrt();
    let sigma_n = hli.map_or(0.0, |h| h.per_sample_std(fs, w0));

    let streams = SeededStreams::new(cfg.seed);
    let mut thermal = streams.stream(Stream::ThermalForce);
    let mut imprecision = streams.stream(Stream::Imprecision);
    let mut bandpass = cfg.controller.bandpass_q().map(|q| Biquad::bandpass(w0, q, dt));

    let ext_scale = match &cfg.external {
        ExternalForce::None => 0.0,
        ExternalForce::Sinusoid { amplitude, .. } => amplitude.abs(),
        ExternalForce::Series(s) => s.iter().fold(0.0, |a: f64, b| a.max(b.abs())),
    };
    let bound = [
        cfg.x0.abs(),
        cfg.v0.abs() / w0,
        res.thermal_variance().sqrt(),
        sigma_n,
        ext_scale * res.quality_factor() / (m * w02),
    ]
    .into_iter()
    .fold(f64::MIN_POSITIVE, f64::max)
        * DIVERGENCE_FACTOR;

    let g_rate = match cfg.controller {
        Controller::Derivative { g, .. } => m * g * res.resonance_damping_rate(),
        _ => 0.0,
    };
    let chain_parts = match cfg.controller {
        Controller::Chain { chain, dac_lsb, .. } => {
            let e = *chain.eoam();
            let v_bias = e.bias_voltage();
            Some((e, v_bias, e.power(v_bias), chain.voltage_per_metre() / w0, dac_lsb))
        }
        _ => None,
    };

    let (mut x, mut v) = (cfg.x0, cfg.v0);
    let (mut y1, mut y2) = (0.0, 0.0);
    let steps = cfg.steps();
    for n in 0..steps {
        let t = n as f64 * dt;
        if !x.is_finite() || x.abs() > bound {
            return Err(Error::Divergence { step: n, x });
        }
        let y = x + if sigma_n > 0.0 {
            sigma_n * imprecision.gaussian()
        } else {
            0.0
        };
        let ydot = if n >= 2 { (y - y2) / (2.0 * dt) } else { 0.0 };
        let ydot = match bandpass.as_mut() {
            Some(bp) => bp.process(ydot),
            None => ydot,
        };
        y2 = y1;
        y1 = y;

        let (force, voltage, power) = match cfg.controller {
            Controller::Off => (0.0, f64::NAN, f64::NAN),
            Controller::Derivative { .. } => (-g_rate * ydot, f64::NAN, f64::NAN),
            Controller::Chain { .. } => {
                let (e, v_bias, p_bias, k, lsb) = chain_parts.expect("chain controller");
                let mut volt = v_bias + k * ydot;
                if let Some(lsb) = lsb {
                    volt = (volt / lsb).round() * lsb;
                }
                let p = e.power(volt);
                (actuator_gain() * (p - p_bias), volt, p)
            }
        };
        let f_ext = match &cfg.external {
            ExternalForce::None => 0.0,
            ExternalForce::Sinusoid { amplitude, freq_hz } => amplitude * (2.0 * PI * freq_hz * t).sin(),
            ExternalForce::Series(s) => s.get(n).copied().unwrap_or(0.0),
        };
        let f_th = if sigma_th > 0.0 {
            sigma_th * thermal.gaussian()
        } else {
            0.0
        };

        sink(&Sample {
            step: n,
            t,
            x,
            y,
            force,
            voltage,
            power,
        });

        v += ((f_th + f_ext + force) / m - w02 * x - gamma * v) * dt;
        x += v * dt;
    }
    Ok(steps)
}

/// Runs the simulation and records the full trace.
pub fn simulate(cfg: &SimConfig, res: &MechanicalResonator, hli: Option<&HliReadout>) -> Result<SimTrace> {
    let n = cfg.steps();
    let chain = matches!(cfg.controller, Controller::Chain { .. });
    let mut trace = SimTrace {
        config: cfg.clone(),
        x: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        force: Vec::with_capacity(n),
        voltage: chain.then(|| Vec::with_capacity(n)),
        power: chain.then(|| Vec::with_capacity(n)),
    };
    simulate_with(cfg, res, hli, |s| {
        trace.x.push(s.x);
        trace.y.push(s.y);
        trace.force.push(s.force);
        if let Some(v) = trace.voltage.as_mut() {
            v.push(s.voltage);
        }
        if let Some(p) = trace.power.as_mut() {
            p.push(s.power);
        }
    })?;
    Ok(trace)
}
