use core::f64::consts::PI;

use proptest::prelude::*;

use optomech_core::cascade::{plan_cascade, CascadeConfig, StopReason};
use optomech_core::cooling::{
    closed_loop_variance, effective_temperature, noise_temperature, optimal_gain, CoolingSetup,
};
use optomech_core::feedback::{Eoam, FeedbackChain};
use optomech_core::readout::{FpiReadout, HliReadout};
use optomech_core::resonator::{fit_ringdown_envelope, MechanicalResonator};
use optomech_core::rng::{SeededStreams, Stream};
use optomech_core::sim::{estimate_psd, simulate, Preset, SimConfig};
use optomech_core::spectrum::NoiseSpectrum;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn reference_chain() -> FeedbackChain {
    FeedbackChain::new(Eoam::new(200.0, 1.16e-3, PI / 4.0, 0.1).unwrap(), 1.0, 1064e-9).unwrap()
}

#[test]
fn high_q_ringdown_envelope_recovers_q() {
    let res = MechanicalResonator::reference_device();
    let tau = 2.0 / res.resonance_damping_rate();
    let times: Vec<f64> = (0..400).map(|i| 4.0 * tau * i as f64 / 399.0).collect();
    let amps: Vec<f64> = times.iter().map(|&t| res.ringdown_envelope(3e-7, t).unwrap()).collect();
    let fit = fit_ringdown_envelope(&times, &amps, res.omega0()).unwrap();
    assert!(rel(fit.q, 4.77e5) < 1e-6);
}

#[test]
fn thermal_psd_matches_susceptibility_over_twenty_seeds() {
    let res = Preset::Q100.resonator();
    let (w0, gamma) = (res.omega0(), res.resonance_damping_rate());
    let mut per_seed: Vec<f64> = (1..=20u64)
        .map(|seed| {
            let cfg = SimConfig::new(&res, 1400.0, seed);
            let tr = simulate(&cfg, &res, None).unwrap();
            let psd = estimate_psd(&tr.x, cfg.dt, 65536, 0.5, "m^2/Hz").unwrap();
            let ratios: Vec<f64> = psd
                .omegas()
                .iter()
                .zip(psd.densities().unwrap())
                .filter(|(w, _)| (**w - w0).abs() <= 10.0 * gamma)
                .map(|(&w, &v)| {
                    v / (res.force_susceptibility(w).unwrap().norm_sqr() * res.thermal_force_psd(w).unwrap())
                })
                .collect();
            ratios.iter().sum::<f64>() / ratios.len() as f64
        })
        .collect();
    per_seed.sort_by(|a, b| a.total_cmp(b));
    let median = 0.5 * (per_seed[9] + per_seed[10]);
    assert!((median - 1.0).abs() < 0.15, "{median}");
}

#[test]
fn welch_white_noise_and_tone() {
    let fs = 100.0;
    let mut rng = SeededStreams::new(9).stream(Stream::Aux);
    let n = 256 * 101;
    let white: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
    let psd = estimate_psd(&white, 1.0 / fs, 256, 0.0, "1/Hz").unwrap();
    let v = psd.densities().unwrap();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    assert!(rel(mean, 2.0 / fs) < 0.1, "{mean}");
    // Parseval: integral ≈ variance
    assert!(rel(psd.integrate_hz().unwrap(), 1.0) < 0.1);

    let a = 0.3;
    let f = 12.5;
    let tone: Vec<f64> = (0..8192).map(|k| a * (2.0 * PI * f * k as f64 / fs).sin()).collect();
    let psd = estimate_psd(&tone, 1.0 / fs, 1024, 0.5, "1/Hz").unwrap();
    assert!(rel(psd.integrate_hz().unwrap(), a * a / 2.0) < 0.02);
}

#[test]
fn numeric_variance_agrees_with_analytic_form_at_high_q() {
    let res = MechanicalResonator::reference_device();
    let imprecision = NoiseSpectrum::flat_asd(5e-12);
    for g in [10.0, 300.0, 2159.0, 1e4] {
        let r = closed_loop_variance(&CoolingSetup::new(res, g, imprecision.clone()).unwrap()).unwrap();
        assert!(rel(r.variance(), r.analytic.total()) < 0.02, "g = {g}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn completed_cascade_reaches_single_step_temperature(
        g0 in 1.0f64..10.0,
        asd in 1e-12f64..2e-11,
        n_settle in 3.0f64..12.0,
    ) {
        let res = MechanicalResonator::reference_device();
        let chain = reference_chain();
        let hli = NoiseSpectrum::flat_asd(asd);
        let cfg = CascadeConfig::at_minimum_power(g0, 4e-10, &chain, &res)
            .unwrap()
            .with_settle(n_settle, 5.0)
            .unwrap();
        let s = plan_cascade(&cfg, &chain, &res, &hli, &FpiReadout::reference_default()).unwrap();
        prop_assert_eq!(s.reason, StopReason::ReachedOptimal);
        let t_n = noise_temperature(&res, asd * asd);
        let g_opt = optimal_gain(&res, asd * asd).unwrap().closed_form;
        let single = effective_temperature(&res, g_opt, t_n).unwrap().t_eff;
        prop_assert!(rel(s.final_teff(), single) < 0.02);
        prop_assert!(s.stages.windows(2).all(|w| w[1].x2_exit < w[0].x2_exit && w[1].g >= w[0].g));
        let total: f64 = s.stages.iter().map(|st| st.duration).sum();
        prop_assert!(rel(total, s.total_time) < 1e-12);
    }

    #[test]
    fn fpi_round_trip_inside_dynamic_range(frac in -0.999f64..0.999) {
        let fpi = FpiReadout::reference_default();
        let x = frac * fpi.dynamic_range();
        let back = fpi.displacement_from_freq(fpi.freq_from_displacement(x).unwrap()).unwrap();
        prop_assert!((back - x).abs() <= 1e-15 * fpi.dynamic_range());
        prop_assert!(fpi.freq_from_displacement(1.001 * fpi.dynamic_range()).is_err());
    }

    #[test]
    fn hli_imprecision_reaches_sampled_readout(asd in 1e-13f64..1e-10) {
        let hli = HliReadout::reference_default().with_imprecision(NoiseSpectrum::flat_asd(asd)).unwrap();
        let w0 = 2.0 * PI * 4.72;
        prop_assert!(rel(hli.imprecision_psd(w0), asd * asd) < 1e-12);
        // one-sided PSD S sampled at fs has per-sample variance S fs / 2
        let fs = 472.0;
        prop_assert!(rel(hli.per_sample_std(fs, w0), (asd * asd * fs / 2.0).sqrt()) < 1e-12);
    }
}
