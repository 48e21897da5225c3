//! Independent jobs fanned out with rayon. Results are collected in input
//! order, so output never depends on scheduling.

use rayon::prelude::*;

use optomech_core::cascade::{compare_single_step, plan_cascade, CascadeConfig, CascadeSchedule, Comparison};
use optomech_core::readout::HliReadout;
use optomech_core::resonator::MechanicalResonator;
use optomech_core::sim::{aggregate, seed_variance, MonteCarloResult, SimConfig};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Monte-Carlo over `seeds`, one seed per task.
pub fn monte_carlo(
    cfg: &SimConfig,
    res: &MechanicalResonator,
    hli: Option<&HliReadout>,
    seeds: &[u64],
) -> Result<MonteCarloResult, CliError> {
    let runs = seeds
        .par_iter()
        .map(|&s| seed_variance(cfg, res, hli, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(&runs)?)
}

#[derive(Debug, Clone)]
pub struct CascadeRun {
    pub config: CascadeConfig,
    pub schedule: CascadeSchedule,
    pub comparison: Comparison,
}

/// One cascade per initial gain, each at the least power reaching it.
pub fn cascade_sweep(cfg: &ExperimentConfig, g0s: &[f64]) -> Result<Vec<CascadeRun>, CliError> {
    let c = &cfg.cascade;
    g0s.par_iter()
        .map(|&g0| {
            let config = CascadeConfig::at_minimum_power(g0, c.initial_variance(), &cfg.chain, &cfg.resonator)?
                .with_settle(c.n_settle, c.k_safe)?
                .with_termination(c.termination());
            let schedule = plan_cascade(&config, &cfg.chain, &cfg.resonator, cfg.hli.imprecision(), &cfg.fpi)?;
            let comparison = compare_single_step(&schedule, &config, &cfg.chain, &cfg.resonator)?;
            Ok(CascadeRun {
                config,
                schedule,
                comparison,
            })
        })
        .collect()
}
