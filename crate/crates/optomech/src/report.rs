//! Computed values next to the published ones, flagged MATCH or DEVIATION.

use optomech_core::cooling::optimal_gain;
use optomech_core::units::STANDARD_GRAVITY;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::table::fmt_num;

/// Relative agreement counted as a match.
pub const MATCH_TOLERANCE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flag {
    Match,
    Deviation,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::Match => "MATCH",
            Flag::Deviation => "DEVIATION",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub key: &'static str,
    pub computed: f64,
    pub quoted: f64,
    pub unit: &'static str,
    pub note: &'static str,
}

impl ReportRow {
    /// computed / quoted.
    pub fn ratio(&self) -> f64 {
        self.computed / self.quoted
    }

    pub fn flag(&self) -> Flag {
        if (self.ratio() - 1.0).abs() <= MATCH_TOLERANCE {
            Flag::Match
        } else {
            Flag::Deviation
        }
    }
}

pub fn compute(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>, CliError> {
    let res = &cfg.resonator;
    let w0 = res.omega0();
    let g_opt = optimal_gain(res, cfg.hli_psd_at_resonance())?.closed_form;
    Ok(vec![
        ReportRow {
            key: "g_opt",
            computed: g_opt,
            quoted: 3.40e4,
            unit: "1",
            note: "sqrt(4 kB T / (m w0^2 gamma S_n)) with the configured imprecision",
        },
        ReportRow {
            key: "P0(g=1)",
            computed: cfg.chain.required_power(res, 1.0)?,
            quoted: 1.16e-3,
            unit: "W",
            note: "G_DAC at the Vpi ceiling for cascade.x_pp",
        },
        ReportRow {
            key: "P0(g_opt)",
            computed: cfg.chain.required_power(res, g_opt)?,
            quoted: 34.43,
            unit: "W",
            note: "same G_DAC; scales with the computed g_opt",
        },
        ReportRow {
            key: "a_th(w0)",
            computed: res.thermal_accel_asd(w0)?,
            quoted: 1e-11,
            unit: "m s^-2/rtHz",
            note: "sqrt(4 kB T gamma / m), single-sided",
        },
        ReportRow {
            key: "dL",
            computed: cfg.fpi.dynamic_range(),
            quoted: 1.8e-6,
            unit: "m",
            note: "dnu lambda L / c",
        },
        ReportRow {
            key: "gamma_m",
            computed: res.resonance_damping_rate(),
            quoted: 2.0 * std::f64::consts::PI * 10e-6,
            unit: "rad/s",
            note: "w0 / Q",
        },
        ReportRow {
            key: "a_range(dL w0/sqrt(Q))",
            computed: cfg.fpi.range_equivalent_accel_quoted(res) / STANDARD_GRAVITY,
            quoted: 8e-9,
            unit: "g_n",
            note: "expression as quoted; dimensionally m/s, see dL w0^2/sqrt(Q) below",
        },
        ReportRow {
            key: "a_range(dL w0^2/sqrt(Q))",
            computed: cfg.fpi.range_equivalent_accel(res) / STANDARD_GRAVITY,
            quoted: 8e-9,
            unit: "g_n",
            note: "dimensionally consistent variant",
        },
    ])
}

pub fn render(rows: &[ReportRow]) -> Vec<String> {
    let mut out = vec![format!(
        "{:<26} {:>17} {:>17} {:>17} {:<10} {:<12} note",
        "quantity", "computed", "quoted", "ratio", "flag", "unit"
    )];
    for r in rows {
        out.push(format!(
            "{:<26} {:>17} {:>17} {:>17} {:<10} {:<12} {}",
            r.key,
            fmt_num(r.computed),
            fmt_num(r.quoted),
            fmt_num(r.ratio()),
            r.flag().as_str(),
            r.unit,
            r.note
        ));
    }
    out
}
