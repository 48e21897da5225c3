use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

/// Optomechanical inertial sensor models: susceptibility, noise budgets,
/// feedback cooling, cascaded gain schedules and Langevin simulation.
#[derive(Debug, Parser)]
#[command(name = "optomech", version)]
pub struct Cli {
    /// Experiment config (sectioned `key = value unit`); defaults to the
    /// built-in device parameters.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, env = "OPTOMECH_OUT", default_value = "optomech-out")]
    pub out: PathBuf,
    /// Seed for every stochastic run.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ControllerKind {
    Off,
    Derivative,
    Chain,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-loop susceptibility χ_eff for a list of gains.
    Susceptibility {
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 2500.0, 5000.0, 10000.0])]
        gains: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        fmin_hz: f64,
        #[arg(long, default_value_t = 20.0)]
        fmax_hz: f64,
        #[arg(long, default_value_t = 2001)]
        points: usize,
    },
    /// Closed-loop displacement PSD terms and readout spectra.
    NoiseBudget {
        /// Gain factor; defaults to cooling.gain.
        #[arg(long)]
        gain: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        fmin_hz: f64,
        #[arg(long, default_value_t = 50.0)]
        fmax_hz: f64,
        #[arg(long, default_value_t = 2001)]
        points: usize,
    },
    /// Cold-damping analysis.
    Cool {
        #[command(subcommand)]
        action: CoolAction,
    },
    /// Cascaded gain schedules.
    Cascade {
        #[command(subcommand)]
        action: CascadeAction,
    },
    /// Langevin time-domain run on a desk-scale preset.
    Simulate {
        #[arg(long, value_enum, default_value_t = ControllerKind::Derivative)]
        controller: ControllerKind,
        /// Gain factor; defaults to sim.gain.
        #[arg(long)]
        gain: Option<f64>,
        /// Duration, s; defaults to sim.duration.
        #[arg(long)]
        duration: Option<f64>,
        /// Initial displacement, m.
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
        /// DAC quantisation step for the chain controller, V.
        #[arg(long)]
        dac_lsb: Option<f64>,
        /// Run sim.seeds seeds and report steady-state variance statistics
        /// instead of writing a trace.
        #[arg(long)]
        monte_carlo: bool,
        /// With --monte-carlo, also rerun with bandpass Q in {5, 10, 20}.
        #[arg(long)]
        bandpass_sensitivity: bool,
    },
    /// Welch PSD of one column of a trace CSV.
    Psd {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "x_m")]
        column: String,
        /// Segment length (power of two); defaults to sim.segment, reduced
        /// to fit at least two segments.
        #[arg(long)]
        segment: Option<usize>,
        #[arg(long)]
        overlap: Option<f64>,
    },
    /// Quality factor from a ringdown record.
    RingdownFit {
        /// CSV with `t_s` and either `amplitude_m` (envelope) or an
        /// oscillating column.
        #[arg(long, conflicts_with = "synthetic")]
        input: Option<PathBuf>,
        #[arg(long, default_value = "x_m")]
        column: String,
        /// Fit an analytic envelope of the configured resonator.
        #[arg(long)]
        synthetic: bool,
    },
    /// Feedback-chain composition.
    Chain {
        #[command(subcommand)]
        action: ChainAction,
    },
    /// Computed values next to the published ones.
    PaperReport,
}

#[derive(Debug, Subcommand)]
pub enum CoolAction {
    /// T_eff and variance versus gain for each cooling.sweep_asd.
    Sweep,
    /// Optimal gain and temperature floor.
    Optimum,
}

#[derive(Debug, Subcommand)]
pub enum CascadeAction {
    /// Plan cascades for one or more initial gains.
    Run {
        /// Initial gains; defaults to cascade.g0.
        #[arg(long, value_delimiter = ',')]
        g0: Vec<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ChainAction {
    /// All composed gains with units.
    Report,
}
