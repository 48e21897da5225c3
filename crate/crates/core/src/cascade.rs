//! Cascaded cold damping: piecewise-constant gain stages at fixed optical
//! power.
//!
//! The DAC gain may never drive the modulator beyond one half-wave voltage,
//! so its ceiling scales as 1/x_pp. As the motion shrinks the ceiling rises
//! and the loop gain can be stepped up without adding optical power. Each
//! stage runs for `n_settle` closed-loop e-folds, then x_pp is re-estimated
//! as `2 k_safe` times the rms amplitude and G_DAC is raised to its new
//! ceiling, capped at the value that gives the optimal gain.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::cooling::{analytic_variance, optimal_gain};
use crate::error::{require_positive, Error, Result};
use crate::feedback::{actuator_gain, max_dac_gain, FeedbackChain};
use crate::readout::FpiReadout;
use crate::resonator::MechanicalResonator;
use crate::spectrum::NoiseSpectrum;
use crate::units::BOLTZMANN;

pub const DEFAULT_N_SETTLE: f64 = 7.0;
pub const DEFAULT_K_SAFE: f64 = 5.0;
/// Hard ceiling on the number of stages whatever the termination rule.
pub const STAGE_LIMIT: usize = 10_000;

/// ⟨x²(t)⟩ = ⟨x²(0)⟩/(1+g) · (1 + g e^{−(1+g) γ t}) for `t ≥ 0`, `g ≥ 0`.
pub fn variance_evolution(g: f64, x2_0: f64, gamma: f64, t: f64) -> f64 {
    x2_0 / (1.0 + g) * (1.0 + g * (-(1.0 + g) * gamma * t).exp())
}

/// When the schedule stops.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    /// Run until the optimal gain is reached and the motion has settled on
    /// the imprecision floor.
    ReachOptimal,
    /// Stop at the first stage whose exit rms is inside the Fabry-Perot
    /// capture range. With `continue_with` set, the loop switches to that
    /// imprecision (m²/Hz) and keeps going to the new optimum.
    Handover { continue_with: Option<NoiseSpectrum> },
    /// Stop after this many stages (or earlier at the floor).
    MaxStages(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeConfig {
    pub g0: f64,
    /// Optical power incident on the modulator, W. Held fixed.
    pub p0: f64,
    pub n_settle: f64,
    pub k_safe: f64,
    pub termination: Termination,
    /// Initial displacement variance, m².
    pub x2_0: f64,
}

impl CascadeConfig {
    pub fn new(g0: f64, p0: f64, x2_0: f64) -> Result<Self> {
        let cfg = Self {
            g0,
            p0,
            n_settle: DEFAULT_N_SETTLE,
            k_safe: DEFAULT_K_SAFE,
            termination: Termination::ReachOptimal,
            x2_0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Initial variance matching a peak-to-peak amplitude `x_pp`:
    /// (x_pp / 2 k_safe)².
    pub fn variance_for_amplitude(x_pp: f64, k_safe: f64) -> f64 {
        (x_pp / (2.0 * k_safe)).powi(2)
    }

    /// Configuration whose P0 is the least power giving `g0` with G_DAC at
    /// its ceiling for the initial amplitude.
    pub fn at_minimum_power(g0: f64, x2_0: f64, chain: &FeedbackChain, res: &MechanicalResonator) -> Result<Self> {
        let mut cfg = Self::new(g0, 1.0, x2_0)?;
        cfg.p0 = cfg.minimum_power(chain, res)?;
        Ok(cfg)
    }

    pub fn with_settle(mut self, n_settle: f64, k_safe: f64) -> Result<Self> {
        self.n_settle = n_settle;
        self.k_safe = k_safe;
        self.validate()?;
        Ok(self)
    }

    pub fn with_termination(mut self, termination: Termination) -> Self {
        self.termination = termination;
        self
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("g0", self.g0)?;
        require_positive("p0", self.p0)?;
        require_positive("x2_0", self.x2_0)?;
        for (what, v) in [("n_settle", self.n_settle), ("k_safe", self.k_safe)] {
            if !(v.is_finite() && v >= 1.0) {
                return Err(Error::Domain {
                    what,
                    requirement: "finite and >= 1",
                    value: v,
                });
            }
        }
        Ok(())
    }

    fn x_pp(&self, x2: f64) -> f64 {
        2.0 * self.k_safe * x2.sqrt()
    }

    /// Least P0 at which `g0` is reachable from the initial amplitude.
    pub fn minimum_power(&self, chain: &FeedbackChain, res: &MechanicalResonator) -> Result<f64> {
        let g_dac = max_dac_gain(chain.eoam().v_pi(), chain.wavelength(), self.x_pp(self.x2_0))?;
        Ok(self.g0 / (gain_coefficient(chain, res)? * g_dac))
    }
}

/// g per watt per V/rad of DAC gain:
/// (2/c) (π/Vπ) sin 2θ (2π/λ) Q / (m ω0²).
pub fn gain_coefficient(chain: &FeedbackChain, res: &MechanicalResonator) -> Result<f64> {
    let e = chain.eoam();
    let k = actuator_gain() * PI / e.v_pi() * (2.0 * e.bias_angle()).sin().abs() * 2.0 * PI / chain.wavelength()
        * res.quality_factor()
        / (res.mass() * res.omega0() * res.omega0());
    if k > 0.0 {
        Ok(k)
    } else {
        Err(Error::Domain {
            what: "modulator slope sin 2θ",
            requirement: "non-zero",
            value: 0.0,
        })
    }
}

/// Which readout closes the loop during a stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Readout {
    Heterodyne,
    FabryPerot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub index: usize,
    pub g: f64,
    /// V/rad.
    pub g_dac: f64,
    pub t_start: f64,
    pub duration: f64,
    pub x2_entry: f64,
    pub x2_exit: f64,
    /// Imprecision floor for this gain and readout, m².
    pub x2_floor: f64,
    pub teff_exit: f64,
    /// Exit variance was clamped to the floor rather than the decay law.
    pub floor_limited: bool,
    pub readout: Readout,
}

impl Stage {
    /// Scheduled variance at absolute time `t` within the stage.
    pub fn variance_at(&self, t: f64, gamma: f64) -> f64 {
        let tau = (t - self.t_start).clamp(0.0, self.duration);
        variance_evolution(self.g, self.x2_entry, gamma, tau).max(self.x2_floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ReachedOptimal,
    Handover,
    MaxStages,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSchedule {
    pub stages: Vec<Stage>,
    pub reason: StopReason,
    pub total_time: f64,
    pub p0: f64,
    /// Optimal gain for the readout in use at the end.
    pub g_opt: f64,
    /// Index of the first stage whose exit rms is inside the FPI capture
    /// range, if any.
    pub handover_stage: Option<usize>,
    /// P0 exceeds the modulator damage threshold. Reported, not fatal.
    pub over_damage_threshold: bool,
    /// Damping rate γ_m(ω0) the schedule was computed for, rad/s.
    pub gamma: f64,
}

impl CascadeSchedule {
    pub fn final_stage(&self) -> &Stage {
        self.stages.last().expect("schedules are never empty")
    }

    pub fn final_teff(&self) -> f64 {
        self.final_stage().teff_exit
    }

    /// Number of distinct G_DAC settings used.
    pub fn gain_steps(&self) -> usize {
        let mut n = 0;
        let mut last = f64::NAN;
        for s in &self.stages {
            if s.g_dac != last {
                n += 1;
                last = s.g_dac;
            }
        }
        n
    }

    /// Scheduled variance at time `t` (clamped to the schedule span).
    pub fn variance_at(&self, t: f64) -> f64 {
        let i = self
            .stages
            .partition_point(|s| s.t_start + s.duration < t)
            .min(self.stages.len() - 1);
        self.stages[i].variance_at(t, self.gamma)
    }

    /// `(t, ⟨x²⟩, T_eff)` at t = 0 and `n` log-uniform times from a
    /// thousandth of the first stage to the end of the schedule.
    pub fn time_series(&self, res: &MechanicalResonator, n: usize) -> Vec<(f64, f64, f64)> {
        let k = res.mass() * res.omega0() * res.omega0() / BOLTZMANN;
        let t_lo = 1e-3 * self.stages[0].duration;
        let t_hi = self.total_time;
        let mut out = Vec::with_capacity(n + 1);
        let x0 = self.stages[0].x2_entry;
        out.push((0.0, x0, k * x0));
        let (l0, l1) = (t_lo.ln(), t_hi.ln());
        for i in 0..n {
            let f = if n > 1 { i as f64 / (n - 1) as f64 } else { 1.0 };
            let t = (l0 + f * (l1 - l0)).exp();
            let x2 = self.variance_at(t);
            out.push((t, x2, k * x2));
        }
        out
    }
}

/// True iff the rms motion is strictly inside λ/𝓕.
pub fn handover_check(x2: f64, fpi: &FpiReadout) -> bool {
    fpi.capture_check(x2.sqrt())
}

struct Noise {
    psd: f64,
    g_opt: f64,
    readout: Readout,
}

impl Noise {
    fn new(res: &MechanicalResonator, spectrum: &NoiseSpectrum, readout: Readout) -> Result<Self> {
        let psd = spectrum.psd_at(res.omega0());
        Ok(Self {
            psd,
            g_opt: optimal_gain(res, psd)?.closed_form,
            readout,
        })
    }
}

/// Plans the stage sequence. `hli_imprecision` is the heterodyne S_xx^n
/// used before any handover.
pub fn plan_cascade(
    cfg: &CascadeConfig,
    chain: &FeedbackChain,
    res: &MechanicalResonator,
    hli_imprecision: &NoiseSpectrum,
    fpi: &FpiReadout,
) -> Result<CascadeSchedule> {
    cfg.validate()?;
    let coef = gain_coefficient(chain, res)?;
    let min_power = cfg.minimum_power(chain, res)?;
    if cfg.p0 < min_power * (1.0 - 1e-12) {
        return Err(Error::Infeasible {
            g0: cfg.g0,
            power: cfg.p0,
            min_power,
        });
    }
    let gamma = res.resonance_damping_rate();
    let k_teff = res.mass() * res.omega0() * res.omega0() / BOLTZMANN;
    let v_pi = chain.eoam().v_pi();
    let lambda = chain.wavelength();

    let mut noise = Noise::new(res, hli_imprecision, Readout::Heterodyne)?;
    let mut g = cfg.g0;
    let mut g_dac = g / (coef * cfg.p0);
    let mut x2 = cfg.x2_0;
    let mut t = 0.0;
    let mut stages = Vec::new();
    let mut handover_stage = None;
    let reason = loop {
        let index = stages.len();
        let duration = cfg.n_settle / ((1.0 + g) * gamma);
        let decayed = variance_evolution(g, x2, gamma, duration);
        let floor = analytic_variance(res, g, noise.psd);
        let floor_limited = decayed <= floor;
        let exit = decayed.max(floor);
        stages.push(Stage {
            index,
            g,
            g_dac,
            t_start: t,
            duration,
            x2_entry: x2,
            x2_exit: exit,
            x2_floor: floor,
            teff_exit: k_teff * exit,
            floor_limited,
            readout: noise.readout,
        });
        t += duration;
        x2 = exit;

        let at_optimum = g >= noise.g_opt && floor_limited;
        if handover_stage.is_none() && handover_check(exit, fpi) {
            handover_stage = Some(index);
            if let Termination::Handover { continue_with } = &cfg.termination {
                match continue_with {
                    None => break StopReason::Handover,
                    Some(s) => noise = Noise::new(res, s, Readout::FabryPerot)?,
                }
            }
        }
        let switched = noise.readout == Readout::FabryPerot && handover_stage == Some(index);
        if at_optimum && !switched {
            break StopReason::ReachedOptimal;
        }
        if let Termination::MaxStages(n) = cfg.termination {
            if stages.len() >= n {
                break StopReason::MaxStages;
            }
        }
        if stages.len() >= STAGE_LIMIT {
            break StopReason::MaxStages;
        }

        let ceiling = max_dac_gain(v_pi, lambda, cfg.x_pp(exit))?;
        let g_cand = coef * cfg.p0 * ceiling;
        if g_cand >= noise.g_opt {
            g = noise.g_opt;
            g_dac = g / (coef * cfg.p0);
        } else if g_cand > g {
            g = g_cand;
            g_dac = ceiling;
        }
    };

    Ok(CascadeSchedule {
        stages,
        reason,
        total_time: t,
        p0: cfg.p0,
        g_opt: noise.g_opt,
        handover_stage,
        over_damage_threshold: cfg.p0 > chain.eoam().damage_threshold(),
        gamma,
    })
}

/// Single-step versus cascaded cooling to the same gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub g_target: f64,
    /// Power giving `g_target` directly at the initial G_DAC ceiling, W.
    pub single_power: f64,
    /// n_settle e-folds at `g_target`, s.
    pub single_time: f64,
    /// Single-step power exceeds the modulator damage threshold.
    pub single_power_limited: bool,
    pub cascade_power: f64,
    pub cascade_time: f64,
    /// cascade / single.
    pub power_ratio: f64,
    /// cascade / single.
    pub time_ratio: f64,
}

impl Comparison {
    /// power_ratio × time_ratio; order one when fewer watts cost
    /// proportionally more time.
    pub fn tradeoff_product(&self) -> f64 {
        self.power_ratio * self.time_ratio
    }
}

pub fn compare_single_step(
    schedule: &CascadeSchedule,
    cfg: &CascadeConfig,
    chain: &FeedbackChain,
    res: &MechanicalResonator,
) -> Result<Comparison> {
    let g_target = schedule.g_opt;
    let single = CascadeConfig {
        g0: g_target,
        ..cfg.clone()
    };
    let single_power = single.minimum_power(chain, res)?;
    let single_time = cfg.n_settle / ((1.0 + g_target) * res.resonance_damping_rate());
    Ok(Comparison {
        g_target,
        single_power,
        single_time,
        single_power_limited: single_power > chain.eoam().damage_threshold(),
        cascade_power: schedule.p0,
        cascade_time: schedule.total_time,
        power_ratio: schedule.p0 / single_power,
        time_ratio: schedule.total_time / single_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooling::{effective_temperature, noise_temperature};
    use crate::feedback::Eoam;
    use core::f64::consts::{E, FRAC_PI_4};
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn chain() -> FeedbackChain {
        FeedbackChain::new(Eoam::new(200.0, 1e-3, FRAC_PI_4, 0.1).unwrap(), 0.1, 1064e-9).unwrap()
    }

    fn hli() -> NoiseSpectrum {
        NoiseSpectrum::flat_asd(5e-12)
    }

    fn reference_cfg(g0: f64) -> CascadeConfig {
        let res = MechanicalResonator::reference_device();
        let x2 = CascadeConfig::variance_for_amplitude(200e-6, DEFAULT_K_SAFE);
        CascadeConfig::at_minimum_power(g0, x2, &chain(), &res).unwrap()
    }

    fn plan(cfg: &CascadeConfig) -> CascadeSchedule {
        plan_cascade(
            cfg,
            &chain(),
            &MechanicalResonator::reference_device(),
            &hli(),
            &FpiReadout::reference_default(),
        )
        .unwrap()
    }

    #[test]
    fn evolution_endpoints_and_time_constant() {
        let (g, x0, gam) = (100.0, 4e-10, 6.2e-5);
        assert!(rel(variance_evolution(g, x0, gam, 0.0), x0) < 1e-15);
        assert!(rel(variance_evolution(g, x0, gam, 1e12), x0 / 101.0) < 1e-12);
        let tau = 1.0 / (101.0 * gam);
        let expect = x0 * (1.0 + g / E) / 101.0;
        assert!(rel(variance_evolution(g, x0, gam, tau), expect) < 1e-12);
        assert_eq!(variance_evolution(0.0, x0, gam, 1e9), x0);
    }

    #[test]
    fn initial_power_matches_gain_one() {
        let cfg = reference_cfg(1.0);
        assert!(rel(cfg.x2_0, 4e-10) < 1e-12);
        assert!(rel(cfg.p0, 45.8e-3) < 2e-3, "{}", cfg.p0);
    }

    #[test]
    fn infeasible_start_reports_minimum() {
        let mut cfg = reference_cfg(1.0);
        let need = cfg.p0;
        cfg.p0 = need / 2.0;
        let err = plan_cascade(
            &cfg,
            &chain(),
            &MechanicalResonator::reference_device(),
            &hli(),
            &FpiReadout::reference_default(),
        );
        match err {
            Err(Error::Infeasible { min_power, .. }) => assert!(rel(min_power, need) < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schedule_invariants() {
        let s = plan(&reference_cfg(1.0));
        assert_eq!(s.reason, StopReason::ReachedOptimal);
        let gamma = s.gamma;
        for w in s.stages.windows(2) {
            assert!(w[1].g >= w[0].g);
            assert!(w[1].x2_exit < w[0].x2_exit);
            assert_eq!(w[1].x2_entry, w[0].x2_exit);
            assert!(rel(w[1].t_start, w[0].t_start + w[0].duration) < 1e-12);
            assert!(rel(w[1].g / w[0].g, w[1].g_dac / w[0].g_dac) < 1e-12);
        }
        for st in &s.stages {
            assert!(st.duration > 0.0);
            let law = variance_evolution(st.g, st.x2_entry, gamma, st.duration);
            if st.floor_limited {
                assert_eq!(st.x2_exit, st.x2_floor);
            } else {
                assert!(rel(st.x2_exit, law) < 1e-12);
            }
        }
        assert!(s.final_stage().floor_limited);
        assert_eq!(s.final_stage().g, s.g_opt);
    }

    #[test]
    fn cascade_reaches_single_step_temperature() {
        let res = MechanicalResonator::reference_device();
        let s = plan(&reference_cfg(1.0));
        let t_n = noise_temperature(&res, hli().psd_at(res.omega0()));
        let single = effective_temperature(&res, s.g_opt, t_n).unwrap().t_eff;
        assert!(rel(s.final_teff(), single) < 0.05);
    }

    #[test]
    fn larger_initial_gain_is_faster() {
        let runs: Vec<_> = [1.0, 2.0, 5.0, 10.0].iter().map(|&g| plan(&reference_cfg(g))).collect();
        for w in runs.windows(2) {
            assert!(w[1].total_time <= w[0].total_time);
            assert!(w[1].stages.len() <= w[0].stages.len());
        }
        assert!(runs[3].gain_steps() < runs[2].gain_steps() || runs[3].stages.len() < runs[2].stages.len());
        assert!(runs[2].gain_steps() < runs[0].gain_steps());
        assert!(runs[3].total_time < runs[2].total_time && runs[2].total_time < runs[0].total_time);
    }

    #[test]
    fn degenerate_single_stage() {
        let res = MechanicalResonator::reference_device();
        let g_opt = optimal_gain(&res, hli().psd_at(res.omega0())).unwrap().closed_form;
        let floor = analytic_variance(&res, g_opt, hli().psd_at(res.omega0()));
        let x2 = floor * 1.0001;
        let cfg = CascadeConfig::at_minimum_power(g_opt, x2, &chain(), &res).unwrap();
        let s = plan(&cfg);
        assert_eq!(s.stages.len(), 1);
        assert!(rel(s.total_time, 7.0 / ((1.0 + g_opt) * res.resonance_damping_rate())) < 1e-12);
    }

    #[test]
    fn single_step_comparison() {
        let cfg = reference_cfg(1.0);
        let res = MechanicalResonator::reference_device();
        let s = plan(&cfg);
        let c = compare_single_step(&s, &cfg, &chain(), &res).unwrap();
        assert!(rel(c.single_power / c.cascade_power, s.g_opt / cfg.g0) < 1e-12);
        assert!(rel(c.single_time, 52.1) < 0.01, "{}", c.single_time);
        assert!(c.single_power_limited);
        let p = c.tradeoff_product();
        assert!((0.1..=10.0).contains(&p), "{p}");
        let t34 = 7.0 / ((1.0 + 3.4e4) * res.resonance_damping_rate());
        assert!(rel(t34, 3.31) < 0.01, "{t34}");
    }

    #[test]
    fn handover_threshold_strict() {
        let fpi = FpiReadout::reference_default();
        assert!(handover_check(1e-24, &fpi));
        assert!(!handover_check(1e-12, &fpi));
        let edge = fpi.capture_range();
        assert!(!handover_check(edge * edge, &fpi));
    }

    #[test]
    fn handover_stop_and_continuation() {
        let cfg = reference_cfg(1.0);
        let full = plan(&cfg);
        let h = full.handover_stage.expect("reference cascade ends well inside λ/F");
        let stop = plan(
            &cfg.clone()
                .with_termination(Termination::Handover { continue_with: None }),
        );
        assert_eq!(stop.reason, StopReason::Handover);
        assert_eq!(stop.stages.len(), h + 1);
        let fpi_noise = NoiseSpectrum::flat_asd(2e-13);
        let cont = plan(&cfg.with_termination(Termination::Handover {
            continue_with: Some(fpi_noise),
        }));
        assert_eq!(cont.reason, StopReason::ReachedOptimal);
        assert!(cont.g_opt > full.g_opt);
        assert!(cont.final_teff() < full.final_teff());
        assert!(cont.stages[h + 1..].iter().all(|s| s.readout == Readout::FabryPerot));
    }

    #[test]
    fn max_stages_stop() {
        let s = plan(&reference_cfg(1.0).with_termination(Termination::MaxStages(3)));
        assert_eq!(s.stages.len(), 3);
        assert_eq!(s.reason, StopReason::MaxStages);
    }

    #[test]
    fn time_series_is_monotone() {
        let res = MechanicalResonator::reference_device();
        let s = plan(&reference_cfg(5.0));
        let ts = s.time_series(&res, 400);
        assert_eq!(ts.len(), 401);
        assert_eq!(ts[0].1, s.stages[0].x2_entry);
        assert!(rel(ts[400].1, s.final_stage().x2_exit) < 1e-9);
        for w in ts.windows(2) {
            assert!(w[1].0 > w[0].0);
            assert!(w[1].1 <= w[0].1);
        }
    }

    proptest! {
        #[test]
        fn evolution_monotone(g in 0.0f64..1e5, t1 in 0.0f64..1e6, dt in 0.0f64..1e6) {
            let a = variance_evolution(g, 1.0, 6e-5, t1);
            let b = variance_evolution(g, 1.0, 6e-5, t1 + dt);
            prop_assert!(b <= a);
        }

        #[test]
        fn final_state_matches_single_step(g0 in 0.5f64..50.0, settle in 3.0f64..10.0) {
            let res = MechanicalResonator::reference_device();
            let x2 = CascadeConfig::variance_for_amplitude(200e-6, DEFAULT_K_SAFE);
            let cfg = CascadeConfig::at_minimum_power(g0, x2, &chain(), &res).unwrap()
                .with_settle(settle, DEFAULT_K_SAFE).unwrap();
            let s = plan(&cfg);
            let psd = hli().psd_at(res.omega0());
            let t_n = noise_temperature(&res, psd);
            let single = effective_temperature(&res, s.g_opt, t_n).unwrap().t_eff;
            prop_assert!(rel(s.final_teff(), single) < 0.02);
        }
    }
}
