//! Command dispatch. Each command writes its artifacts under the output
//! directory and returns their paths.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use optomech_core::cascade::gain_coefficient;
use optomech_core::cooling::{
    closed_loop_psd_parts, closed_loop_variance, effective_susceptibility, effective_temperature,
    min_effective_temperature, noise_temperature, optimal_gain, optimal_gain_integrated, CoolingSetup,
};
use optomech_core::feedback::{actuator_gain, max_dac_gain};
use optomech_core::readout::HliReadout;
use optomech_core::resonator::{fit_ringdown_envelope, fit_ringdown_trace, MechanicalResonator};
use optomech_core::sim::{
    estimate_psd, imprecision_for_optimal_gain, simulate, Controller, MonteCarloResult, SimConfig, DEFAULT_BANDPASS_Q,
};
use optomech_core::spectrum::{log_grid, NoiseSpectrum, SpectrumKind, SpectrumRecord};
use optomech_core::units::{hz_to_rad, BOLTZMANN};

use crate::cli::{CascadeAction, ChainAction, Cli, Command, ControllerKind, CoolAction};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::parallel;
use crate::report;
use crate::table::{fmt_num, read_csv, write_numeric_csv, write_spectrum, write_text, Header};

pub struct Context {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
    pub seed: u64,
}

impl Context {
    fn header(&self, command: &str) -> Header {
        Header::new(command, self.seed, self.cfg.echo())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn kv(key: &str, v: f64, unit: &str) -> String {
    format!("{key} = {} {unit}", fmt_num(v)).trim_end().to_string()
}

/// Loads the config and runs the command.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::reference(),
    };
    let ctx = Context {
        cfg,
        out: cli.out.clone(),
        seed: cli.seed,
    };
    dispatch(&ctx, &cli.command)
}

pub fn dispatch(ctx: &Context, command: &Command) -> Result<Vec<PathBuf>, CliError> {
    match command {
        Command::Susceptibility {
            gains,
            fmin_hz,
            fmax_hz,
            points,
        } => susceptibility(ctx, gains, *fmin_hz, *fmax_hz, *points),
        Command::NoiseBudget {
            gain,
            fmin_hz,
            fmax_hz,
            points,
        } => noise_budget(ctx, gain.unwrap_or(ctx.cfg.cooling.gain), *fmin_hz, *fmax_hz, *points),
        Command::Cool { action } => match action {
            CoolAction::Sweep => cool_sweep(ctx),
            CoolAction::Optimum => cool_optimum(ctx),
        },
        Command::Cascade {
            action: CascadeAction::Run { g0 },
        } => {
            let g0s = if g0.is_empty() {
                vec![ctx.cfg.cascade.g0]
            } else {
                g0.clone()
            };
            cascade_run(ctx, &g0s)
        }
        Command::Simulate {
            controller,
            gain,
            duration,
            x0,
            dac_lsb,
            monte_carlo,
            bandpass_sensitivity,
        } => {
            let setup = SimSetup::new(
                &ctx.cfg,
                *controller,
                gain.unwrap_or(ctx.cfg.sim.gain),
                duration.unwrap_or(ctx.cfg.sim.duration),
                ctx.seed,
                *dac_lsb,
            )?
            .with_x0(*x0);
            if *monte_carlo {
                simulate_monte_carlo(ctx, &setup, *bandpass_sensitivity)
            } else {
                simulate_trace(ctx, &setup)
            }
        }
        Command::Psd {
            input,
            column,
            segment,
            overlap,
        } => psd(ctx, input, column, *segment, overlap.unwrap_or(ctx.cfg.sim.overlap)),
        Command::RingdownFit {
            input,
            column,
            synthetic,
        } => ringdown(ctx, input.as_deref(), column, *synthetic),
        Command::Chain {
            action: ChainAction::Report,
        } => chain_report(ctx),
        Command::PaperReport => reference_report(ctx),
    }
}

fn grid_with_resonance(
    res: &MechanicalResonator,
    fmin_hz: f64,
    fmax_hz: f64,
    points: usize,
) -> Result<Vec<f64>, CliError> {
    if !(fmin_hz > 0.0 && fmax_hz > fmin_hz && points >= 2) {
        return Err(CliError::Input("need 0 < fmin_hz < fmax_hz and points >= 2".into()));
    }
    let mut w = log_grid(hz_to_rad(fmin_hz), hz_to_rad(fmax_hz), points);
    let w0 = res.omega0();
    if w0 > w[0] && w0 < w[w.len() - 1] && !w.contains(&w0) {
        let i = w.partition_point(|&x| x < w0);
        w.insert(i, w0);
    }
    Ok(w)
}

fn susceptibility(ctx: &Context, gains: &[f64], fmin: f64, fmax: f64, points: usize) -> Result<Vec<PathBuf>, CliError> {
    let res = &ctx.cfg.resonator;
    let w = grid_with_resonance(res, fmin, fmax, points)?;
    let mut out = Vec::new();
    for &g in gains {
        if g.is_nan() || g < 0.0 {
            return Err(CliError::Input(format!("gain {g} must be >= 0")));
        }
        let vals = w.iter().map(|&x| effective_susceptibility(res, g, x)).collect();
        let rec = SpectrumRecord::response(w.clone(), vals, "m/N")?;
        let h = ctx.header("susceptibility").with(format!("g = {}", fmt_num(g)));
        out.push(write_spectrum(
            &ctx.path(&format!("susceptibility_g{g}.csv")),
            &h,
            &rec,
        )?);
    }
    Ok(out)
}

fn noise_budget(ctx: &Context, g: f64, fmin: f64, fmax: f64, points: usize) -> Result<Vec<PathBuf>, CliError> {
    let cfg = &ctx.cfg;
    let res = &cfg.resonator;
    let w = grid_with_resonance(res, fmin, fmax, points)?;
    let setup = CoolingSetup::new(*res, g, cfg.hli.imprecision().clone())?;
    let open = setup.with_gain(0.0)?;
    let zero_accel = SpectrumRecord::density(SpectrumKind::Asd, w.clone(), vec![0.0; w.len()], "m s^-2/rtHz")?;
    let fpi = cfg.fpi.output_spectrum(res, g, &zero_accel, true)?;
    let fpi_vals = fpi.densities().expect("density");
    let rows: Vec<Vec<f64>> = w
        .iter()
        .zip(fpi_vals)
        .map(|(&x, &nu)| {
            let p = closed_loop_psd_parts(&setup, x);
            let o = closed_loop_psd_parts(&open, x);
            let a_th = res.thermal_accel_asd(x).unwrap_or(f64::NAN);
            vec![x / (2.0 * PI), p.thermal, p.feedthrough, p.total(), o.thermal, a_th, nu]
        })
        .collect();
    let h = ctx.header("noise-budget").with(format!("g = {}", fmt_num(g)));
    let path = write_numeric_csv(
        &ctx.path("noise_budget.csv"),
        &h,
        &[
            "freq_hz",
            "thermal_m2_per_hz",
            "feedthrough_m2_per_hz",
            "total_m2_per_hz",
            "open_loop_m2_per_hz",
            "thermal_accel_m_s2_per_rthz",
            "fpi_output_hz_per_rthz",
        ],
        &rows,
    )?;
    Ok(vec![path])
}

fn cool_sweep(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let cfg = &ctx.cfg;
    let c = &cfg.cooling;
    let gains = log_grid(c.sweep_min, c.sweep_max, c.sweep_points);
    let k = cfg.resonator.mass() * cfg.resonator.omega0().powi(2) / BOLTZMANN;
    let mut out = Vec::new();
    for &asd in &c.sweep_asd {
        let base = CoolingSetup::new(cfg.resonator, 0.0, NoiseSpectrum::flat_asd(asd))?;
        let rows = gains
            .par_iter()
            .map(|&g| {
                let r = closed_loop_variance(&base.with_gain(g)?)?;
                let v = r.variance();
                Ok(vec![g, k * v, v, r.numeric.thermal, r.numeric.feedthrough])
            })
            .collect::<Result<Vec<_>, optomech_core::Error>>()?;
        let h = ctx.header("cool sweep").with(kv("imprecision_asd", asd, "m/rtHz"));
        out.push(write_numeric_csv(
            &ctx.path(&format!("cool_sweep_{asd:.3e}.csv")),
            &h,
            &["g", "T_eff_K", "x2_m2", "thermal_m2", "feedthrough_m2"],
            &rows,
        )?);
    }
    Ok(out)
}

fn cool_optimum(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let cfg = &ctx.cfg;
    let res = &cfg.resonator;
    let s = cfg.hli_psd_at_resonance();
    let opt = optimal_gain(res, s)?;
    let setup = CoolingSetup::new(*res, opt.closed_form, cfg.hli.imprecision().clone())?;
    let (g_int, v_int) = optimal_gain_integrated(&setup, opt.closed_form)?;
    let at_opt = closed_loop_variance(&setup)?;
    let t_n = noise_temperature(res, s);
    let te = effective_temperature(res, opt.closed_form, t_n)?;
    let (g_min, t_min) = min_effective_temperature(res, t_n)?;
    let body = vec![
        kv("imprecision_psd_at_resonance", s, "m^2/Hz"),
        kv("g_opt_closed_form", opt.closed_form, ""),
        kv("g_opt_numeric", opt.numeric, ""),
        kv("g_opt_integrated", g_int, ""),
        kv("x2_at_g_opt_analytic", at_opt.analytic.total(), "m^2"),
        kv("x2_at_g_opt_numeric", at_opt.variance(), "m^2"),
        kv("x2_min_integrated", v_int, "m^2"),
        kv("T_n", t_n, "K"),
        kv("T_eff_at_g_opt", te.t_eff, "K"),
        kv("T_eff_at_g_opt_numeric", at_opt.t_eff, "K"),
        kv("T_eff_floor", te.floor, "K"),
        kv("T_eff_min", t_min, "K"),
        kv("g_at_T_eff_min", g_min, ""),
    ];
    Ok(vec![write_text(
        &ctx.path("cool_optimum.txt"),
        &ctx.header("cool optimum"),
        &body,
    )?])
}

fn cascade_run(ctx: &Context, g0s: &[f64]) -> Result<Vec<PathBuf>, CliError> {
    let runs = parallel::cascade_sweep(&ctx.cfg, g0s)?;
    let mut out = Vec::new();
    let mut summary = Vec::new();
    for run in &runs {
        let s = &run.schedule;
        let c = &run.comparison;
        let tag = format!("g0_{}", run.config.g0);
        let h = ctx
            .header("cascade run")
            .with(kv("g0", run.config.g0, ""))
            .with(kv("p0", s.p0, "W"));
        let rows: Vec<Vec<f64>> = s
            .stages
            .iter()
            .map(|st| {
                vec![
                    st.index as f64,
                    st.g,
                    st.g_dac,
                    st.t_start,
                    st.duration,
                    st.x2_exit,
                    st.teff_exit,
                ]
            })
            .collect();
        out.push(write_numeric_csv(
            &ctx.path(&format!("cascade_{tag}.csv")),
            &h,
            &[
                "stage",
                "g",
                "gdac_v_per_rad",
                "t_start_s",
                "duration_s",
                "x2_exit_m2",
                "teff_exit_K",
            ],
            &rows,
        )?);
        let series: Vec<Vec<f64>> = s
            .time_series(&ctx.cfg.resonator, ctx.cfg.cascade.series_points)
            .into_iter()
            .map(|(t, x2, te)| vec![t, x2, te])
            .collect();
        out.push(write_numeric_csv(
            &ctx.path(&format!("cascade_{tag}_series.csv")),
            &h,
            &["t_s", "x2_m2", "teff_K"],
            &series,
        )?);
        let mut body = vec![
            kv("g0", run.config.g0, ""),
            kv("p0", s.p0, "W"),
            format!("p0_over_damage_threshold = {}", s.over_damage_threshold),
            format!("termination = {:?}", s.reason),
            format!("stages = {}", s.stages.len()),
            format!("gain_steps = {}", s.gain_steps()),
            format!(
                "handover_stage = {}",
                s.handover_stage.map_or("none".to_string(), |i| i.to_string())
            ),
            kv("g_opt", s.g_opt, ""),
            kv("total_time", s.total_time, "s"),
            kv("final_teff", s.final_teff(), "K"),
            kv("single_step_power", c.single_power, "W"),
            format!("single_step_power_over_damage_threshold = {}", c.single_power_limited),
            kv("single_step_time", c.single_time, "s"),
            kv("power_ratio_cascade_over_single", c.power_ratio, ""),
            kv("time_ratio_cascade_over_single", c.time_ratio, ""),
            kv("tradeoff_product", c.tradeoff_product(), ""),
            "stage g gdac_v_per_rad t_start_s duration_s x2_entry_m2 x2_exit_m2 teff_exit_K floor_limited readout"
                .into(),
        ];
        for st in &s.stages {
            body.push(format!(
                "{} {} {} {} {} {} {} {} {} {:?}",
                st.index,
                fmt_num(st.g),
                fmt_num(st.g_dac),
                fmt_num(st.t_start),
                fmt_num(st.duration),
                fmt_num(st.x2_entry),
                fmt_num(st.x2_exit),
                fmt_num(st.teff_exit),
                st.floor_limited,
                st.readout
            ));
        }
        out.push(write_text(&ctx.path(&format!("cascade_{tag}.txt")), &h, &body)?);
        summary.push(format!(
            "g0 = {} stages = {} gain_steps = {} total_time = {} s final_teff = {} K",
            fmt_num(run.config.g0),
            s.stages.len(),
            s.gain_steps(),
            fmt_num(s.total_time),
            fmt_num(s.final_teff())
        ));
    }
    out.push(write_text(
        &ctx.path("cascade_summary.txt"),
        &ctx.header("cascade run"),
        &summary,
    )?);
    Ok(out)
}

/// Everything a desk-scale simulation needs, derived from the config.
#[derive(Debug, Clone)]
pub struct SimSetup {
    pub res: MechanicalResonator,
    pub hli: HliReadout,
    pub sim: SimConfig,
    pub gain: f64,
}

impl SimSetup {
    /// Preset resonator, HLI imprecision chosen so that
    /// `sim.imprecision_gain` is optimal, and the requested controller at
    /// gain `g`. The chain controller keeps the configured P0 and sets
    /// G_DAC to reach `g`.
    pub fn new(
        cfg: &ExperimentConfig,
        kind: ControllerKind,
        g: f64,
        duration: f64,
        seed: u64,
        dac_lsb: Option<f64>,
    ) -> Result<Self, CliError> {
        let res = cfg.sim.preset.resonator();
        let hli = cfg
            .hli
            .with_imprecision(imprecision_for_optimal_gain(&res, cfg.sim.imprecision_gain)?)?;
        let bandpass_q = cfg.sim.bandpass_q;
        let controller = match kind {
            ControllerKind::Off => Controller::Off,
            ControllerKind::Derivative => Controller::Derivative { g, bandpass_q },
            ControllerKind::Chain => {
                // Keep the modulator linear: G_DAC at the Vpi ceiling for the
                // sensed excursion (open-loop thermal motion plus readout
                // noise on the velocity estimate), P0 set by the gain.
                let dt = SimConfig::new(&res, duration, seed).dt;
                let w0 = res.omega0();
                let s_y = hli.imprecision_psd(w0);
                let sensed = res.thermal_variance() + s_y / (2.0 * dt) / (2.0 * dt * dt * w0 * w0);
                let x_pp = 2.0 * cfg.cascade.k_safe * sensed.sqrt();
                let g_dac = max_dac_gain(cfg.chain.eoam().v_pi(), cfg.chain.wavelength(), x_pp)?;
                let k = gain_coefficient(&cfg.chain, &res)?;
                let chain = cfg.chain.with_g_dac(g_dac)?.with_p0(g / (k * g_dac))?;
                Controller::Chain {
                    chain,
                    dac_lsb,
                    bandpass_q,
                }
            }
        };
        let sim = SimConfig::new(&res, duration, seed).with_controller(controller);
        sim.validate(&res)?;
        Ok(Self {
            res,
            hli,
            sim,
            gain: if kind == ControllerKind::Off { 0.0 } else { g },
        })
    }

    pub fn with_x0(mut self, x0: f64) -> Self {
        self.sim.x0 = x0;
        self
    }

    /// Frequency-domain prediction of the steady-state variance.
    pub fn predicted_variance(&self) -> Result<f64, CliError> {
        let s = CoolingSetup::new(self.res, self.gain, self.hli.imprecision().clone())?;
        Ok(closed_loop_variance(&s)?.variance())
    }

    fn echo(&self) -> Vec<String> {
        vec![
            kv("sim.q", self.res.quality_factor(), ""),
            kv("sim.dt", self.sim.dt, "s"),
            kv("sim.duration_used", self.sim.duration, "s"),
            kv("sim.g", self.gain, ""),
            kv(
                "sim.imprecision_psd",
                self.hli.imprecision_psd(self.res.omega0()),
                "m^2/Hz",
            ),
            format!("sim.controller = {:?}", self.sim.controller),
        ]
    }
}

fn simulate_trace(ctx: &Context, setup: &SimSetup) -> Result<Vec<PathBuf>, CliError> {
    let tr = simulate(&setup.sim, &setup.res, Some(&setup.hli))?;
    let mut h = ctx.header("simulate");
    for l in setup.echo() {
        h = h.with(l);
    }
    let chain = tr.voltage.is_some();
    let mut cols = vec!["t_s", "x_m", "y_m"];
    if chain {
        cols.extend(["v_volt", "p_watt"]);
    }
    cols.push("f_fb_newton");
    let rows: Vec<Vec<f64>> = (0..tr.len())
        .map(|n| {
            let mut r = vec![tr.time(n), tr.x[n], tr.y[n]];
            if let (Some(v), Some(p)) = (&tr.voltage, &tr.power) {
                r.extend([v[n], p[n]]);
            }
            r.push(tr.force[n]);
            r
        })
        .collect();
    let trace = write_numeric_csv(&ctx.path("trace.csv"), &h, &cols, &rows)?;

    let half = &tr.x[tr.len() / 2..];
    let mean = half.iter().sum::<f64>() / half.len() as f64;
    let var = half.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / half.len() as f64;
    let pred = setup.predicted_variance()?;
    let k = setup.res.mass() * setup.res.omega0().powi(2) / BOLTZMANN;
    let mut body = vec![
        format!("samples = {}", tr.len()),
        kv("x2_second_half", var, "m^2"),
        kv("x2_predicted", pred, "m^2"),
        kv("ratio", var / pred, ""),
        kv("T_eff_second_half", k * var, "K"),
    ];
    if let (Some(v), Controller::Chain { chain, .. }) = (&tr.voltage, &setup.sim.controller) {
        let e = chain.eoam();
        let vb = e.bias_voltage();
        let rms = (v.iter().map(|x| (x - vb).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        body.push(kv("chain.g_dac_used", chain.g_dac(), "V/rad"));
        body.push(kv("chain.p0_used", e.p0(), "W"));
        body.push(format!(
            "chain.p0_over_damage_threshold = {}",
            e.p0() > e.damage_threshold()
        ));
        body.push(kv("voltage_rms_over_v_pi", rms / e.v_pi(), ""));
    }
    let summary = write_text(&ctx.path("simulate_summary.txt"), &h, &body)?;
    Ok(vec![trace, summary])
}

fn mc_lines(label: &str, r: &MonteCarloResult, pred: f64) -> Vec<String> {
    vec![
        format!("[{label}]"),
        format!("seeds = {}", r.per_seed.len()),
        kv("x2_mean", r.mean, "m^2"),
        kv("x2_ci95", r.ci95, "m^2"),
        kv("x2_predicted", pred, "m^2"),
        kv("ratio", r.mean / pred, ""),
        format!("non_stationary = {}", r.non_stationary),
    ]
}

fn simulate_monte_carlo(ctx: &Context, setup: &SimSetup, bandpass_sensitivity: bool) -> Result<Vec<PathBuf>, CliError> {
    let seeds: Vec<u64> = (0..ctx.cfg.sim.seeds as u64).map(|i| ctx.seed + i).collect();
    let pred = setup.predicted_variance()?;
    let r = parallel::monte_carlo(&setup.sim, &setup.res, Some(&setup.hli), &seeds)?;
    let mut body = mc_lines("configured", &r, pred);
    if bandpass_sensitivity {
        for q in [5.0, DEFAULT_BANDPASS_Q, 20.0] {
            let mut s = setup.sim.clone();
            s.controller = match s.controller {
                Controller::Derivative { g, .. } => Controller::Derivative { g, bandpass_q: Some(q) },
                Controller::Chain { chain, dac_lsb, .. } => Controller::Chain {
                    chain,
                    dac_lsb,
                    bandpass_q: Some(q),
                },
                Controller::Off => Controller::Off,
            };
            let rq = parallel::monte_carlo(&s, &setup.res, Some(&setup.hli), &seeds)?;
            body.extend(mc_lines(&format!("bandpass_q_{q}"), &rq, pred));
        }
    }
    let mut h = ctx.header("simulate --monte-carlo");
    for l in setup.echo() {
        h = h.with(l);
    }
    Ok(vec![write_text(&ctx.path("monte_carlo.txt"), &h, &body)?])
}

fn psd(
    ctx: &Context,
    input: &Path,
    column: &str,
    segment: Option<usize>,
    overlap: f64,
) -> Result<Vec<PathBuf>, CliError> {
    let t = read_csv(input)?;
    let times = t.column("t_s")?;
    let x = t.column(column)?;
    if times.len() < 2 {
        return Err(CliError::Input(format!(
            "{}: need at least two samples",
            input.display()
        )));
    }
    let dt = times[1] - times[0];
    let seg = match segment {
        Some(s) => s,
        None => {
            let cap = (x.len() / 2).max(1);
            let mut s = ctx.cfg.sim.segment.max(8);
            while s > cap && s > 8 {
                s /= 2;
            }
            s
        }
    };
    let unit = match column.rsplit_once('_').map(|(_, u)| u) {
        Some("m") => "m^2/Hz",
        Some("newton") => "N^2/Hz",
        Some("volt") => "V^2/Hz",
        Some("watt") => "W^2/Hz",
        _ => "1/Hz",
    };
    let rec = estimate_psd(&x, dt, seg, overlap, unit)?;
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64;
    let h = ctx
        .header("psd")
        .with(format!("input = {}", input.display()))
        .with(format!("column = {column}"))
        .with(format!("segment = {seg}"))
        .with(kv("overlap", overlap, ""))
        .with(kv("series_variance", var, ""))
        .with(kv("psd_integral", rec.integrate_hz().unwrap_or(f64::NAN), ""));
    Ok(vec![write_spectrum(&ctx.path("psd.csv"), &h, &rec)?])
}

fn ringdown(ctx: &Context, input: Option<&Path>, column: &str, synthetic: bool) -> Result<Vec<PathBuf>, CliError> {
    let res = &ctx.cfg.resonator;
    let mut out = Vec::new();
    let input = input.filter(|_| !synthetic);
    let (fit, source) = if let Some(path) = input {
        let t = read_csv(path)?;
        let times = t.column("t_s")?;
        let fit = if t.columns.iter().any(|c| c == "amplitude_m") {
            fit_ringdown_envelope(&times, &t.column("amplitude_m")?, res.omega0())?
        } else {
            fit_ringdown_trace(&times, &t.column(column)?)?
        };
        (fit, path.display().to_string())
    } else {
        let gamma = res.resonance_damping_rate();
        let n = 200;
        let span = 3.0 * 2.0 / gamma;
        let times: Vec<f64> = (0..n).map(|i| span * i as f64 / (n - 1) as f64).collect();
        let amps = times
            .iter()
            .map(|&t| res.ringdown_envelope(1e-6, t))
            .collect::<Result<Vec<_>, _>>()?;
        let rows: Vec<Vec<f64>> = times.iter().zip(&amps).map(|(t, a)| vec![*t, *a]).collect();
        out.push(write_numeric_csv(
            &ctx.path("ringdown_envelope.csv"),
            &ctx.header("ringdown-fit --synthetic"),
            &["t_s", "amplitude_m"],
            &rows,
        )?);
        (
            fit_ringdown_envelope(&times, &amps, res.omega0())?,
            "synthetic".to_string(),
        )
    };
    let body = vec![
        format!("source = {source}"),
        kv("q", fit.q, ""),
        kv("omega0", fit.omega0, "rad/s"),
        kv("amplitude0", fit.amplitude0, "m"),
        kv("slope", fit.slope, "1/s"),
        kv("residual_rms", fit.residual_rms, ""),
        format!("samples = {}", fit.samples),
    ];
    out.push(write_text(
        &ctx.path("ringdown_fit.txt"),
        &ctx.header("ringdown-fit"),
        &body,
    )?);
    Ok(out)
}

fn chain_report(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let cfg = &ctx.cfg;
    let res = &cfg.resonator;
    let ch = &cfg.chain;
    let e = ch.eoam();
    let g_opt = optimal_gain(res, cfg.hli_psd_at_resonance())?.closed_form;
    let ceiling = max_dac_gain(e.v_pi(), ch.wavelength(), cfg.cascade.x_pp)?;
    let power_line = |name: &str, g: f64| -> Result<Vec<String>, CliError> {
        let p = ch.required_power(res, g)?;
        Ok(vec![
            kv(name, p, "W"),
            format!("{name}_within_damage_threshold = {}", p <= e.damage_threshold()),
        ])
    };
    let mut body = vec![
        kv("G_FP", actuator_gain(), "N/W"),
        kv("G_PV", e.gain(), "W/V"),
        kv("G_DAC", ch.g_dac(), "V/rad"),
        kv("G_DAC_ceiling", ceiling, "V/rad"),
        kv("phase_per_metre", 2.0 * PI / ch.wavelength(), "rad/m"),
        kv("voltage_per_metre", ch.voltage_per_metre(), "V/m"),
        kv("chi_fb_static", ch.static_feedback_gain(), "N/m"),
        kv("g_at_p0", ch.gain_factor(res), ""),
        kv("g_per_watt", ch.gain_per_watt(res), "1/W"),
        kv("g_per_watt_per_v_per_rad", gain_coefficient(ch, res)?, "1/(W V/rad)"),
        kv("damage_threshold", e.damage_threshold(), "W"),
        kv("g_opt", g_opt, ""),
    ];
    body.extend(power_line("p0_for_g1", 1.0)?);
    body.extend(power_line("p0_for_g_opt", g_opt)?);
    Ok(vec![write_text(
        &ctx.path("chain_report.txt"),
        &ctx.header("chain report"),
        &body,
    )?])
}

fn reference_report(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let rows = report::compute(&ctx.cfg)?;
    let body = report::render(&rows);
    for l in &body {
        println!("{l}");
    }
    Ok(vec![write_text(
        &ctx.path("paper_report.txt"),
        &ctx.header("paper-report"),
        &body,
    )?])
}
