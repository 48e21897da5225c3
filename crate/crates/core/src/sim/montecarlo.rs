//! Steady-state variance across seeds.

use alloc::vec::Vec;

use super::{simulate_with, SimConfig};
use crate::error::{Error, Result};
use crate::readout::HliReadout;
use crate::resonator::MechanicalResonator;

/// Fewest seeds accepted by [`aggregate`].
pub const MIN_SEEDS: usize = 10;
/// Least run length in closed-loop relaxation times.
pub const MIN_RELAXATION_TIMES: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedVariance {
    pub seed: u64,
    /// Variance of x over the first half of the run, m².
    pub first_half: f64,
    /// Variance of x over the second half of the run, m².
    pub second_half: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    /// Mean second-half variance across seeds, m².
    pub mean: f64,
    /// Half-width of the 95% normal-approximation interval, m².
    pub ci95: f64,
    pub per_seed: Vec<SeedVariance>,
    /// First- and second-half variances differ by more than 3σ.
    pub non_stationary: bool,
}

#[derive(Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn variance(&self) -> f64 {
        self.m2 / self.n
    }
}

/// Runs one seed and returns the two half-run variances of x.
pub fn seed_variance(
    cfg: &SimConfig,
    res: &MechanicalResonator,
    hli: Option<&HliReadout>,
    seed: u64,
) -> Result<SeedVariance> {
    let g = cfg.controller.gain_factor(res);
    let needed = MIN_RELAXATION_TIMES / ((1.0 + g) * res.resonance_damping_rate());
    if cfg.duration < needed {
        return Err(Error::Config(alloc::format!(
            "duration {} s is shorter than {MIN_RELAXATION_TIMES} relaxation times ({needed} s)",
            cfg.duration
        )));
    }
    let cfg = cfg.clone().with_seed(seed);
    let half = cfg.steps() / 2;
    let (mut a, mut b) = (Moments::default(), Moments::default());
    simulate_with(
        &cfg,
        res,
        hli,
        |s| {
            if s.step < half {
                a.push(s.x)
            } else {
                b.push(s.x)
            }
        },
    )?;
    Ok(SeedVariance {
        seed,
        first_half: a.variance(),
        second_half: b.variance(),
    })
}

/// Mean, 95% interval and stationarity flag over per-seed results. The
/// result does not depend on the order of `runs`.
pub fn aggregate(runs: &[SeedVariance]) -> Result<MonteCarloResult> {
    if runs.len() < MIN_SEEDS {
        return Err(Error::Config(alloc::format!(
            "{} seeds given, need at least {MIN_SEEDS}",
            runs.len()
        )));
    }
    let mut sorted = runs.to_vec();
    sorted.sort_by_key(|r| r.seed);
    let n = sorted.len() as f64;
    let stats = |f: &dyn Fn(&SeedVariance) -> f64| {
        let mut m = Moments::default();
        for r in &sorted {
            m.push(f(r));
        }
        (m.mean, (m.m2 / (n - 1.0)).sqrt())
    };
    let (mean, sd) = stats(&|r| r.second_half);
    let (diff, diff_sd) = stats(&|r| r.second_half - r.first_half);
    Ok(MonteCarloResult {
        mean,
        ci95: 1.96 * sd / n.sqrt(),
        non_stationary: diff.abs() > 3.0 * diff_sd / n.sqrt(),
        per_seed: sorted,
    })
}

/// Sequential Monte-Carlo over `seeds`.
pub fn monte_carlo_variance(
    cfg: &SimConfig,
    res: &MechanicalResonator,
    hli: Option<&HliReadout>,
    seeds: &[u64],
) -> Result<MonteCarloResult> {
    let runs = seeds
        .iter()
        .map(|&s| seed_variance(cfg, res, hli, s))
        .collect::<Result<Vec<_>>>()?;
    aggregate(&runs)
}
