//! Sectioned `key = value unit` experiment configuration.
//!
//! Values are converted to SI on load. Unknown keys are rejected, missing
//! required keys are reported by their full `section.key` path, and every
//! resolved value can be echoed back into artifact headers.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use optomech_core::cascade::{CascadeConfig, Termination};
use optomech_core::feedback::{max_dac_gain, Eoam, FeedbackChain};
use optomech_core::readout::{FpiReadout, HliReadout};
use optomech_core::resonator::MechanicalResonator;
use optomech_core::sim::Preset;
use optomech_core::spectrum::NoiseSpectrum;

use crate::error::CliError;
use crate::table;

/// The built-in configuration with the reference device parameters.
pub const DEFAULT_CONFIG: &str = include_str!("../config/default.conf");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Mass,
    Length,
    AngularFrequency,
    Frequency,
    Rate,
    Temperature,
    Power,
    Voltage,
    VoltPerRad,
    Angle,
    Time,
    Scalar,
    DisplacementAsd,
    FrequencyAsd,
    Count,
    Text,
}

impl Dim {
    fn si_unit(self) -> &'static str {
        match self {
            Dim::Mass => "kg",
            Dim::Length => "m",
            Dim::AngularFrequency | Dim::Rate => "rad/s",
            Dim::Frequency => "Hz",
            Dim::Temperature => "K",
            Dim::Power => "W",
            Dim::Voltage => "V",
            Dim::VoltPerRad => "V/rad",
            Dim::Angle => "rad",
            Dim::Time => "s",
            Dim::DisplacementAsd => "m/rtHz",
            Dim::FrequencyAsd => "Hz/rtHz",
            Dim::Scalar | Dim::Count | Dim::Text => "",
        }
    }

    fn factor(self, unit: &str) -> Option<f64> {
        let u = unit.replace('µ', "u").replace("√Hz", "rtHz").replace("sqrtHz", "rtHz");
        let f = match (self, u.as_str()) {
            (Dim::Mass, "kg") => 1.0,
            (Dim::Mass, "g") => 1e-3,
            (Dim::Mass, "mg") => 1e-6,
            (Dim::Length, "m") => 1.0,
            (Dim::Length, "cm") => 1e-2,
            (Dim::Length, "mm") => 1e-3,
            (Dim::Length, "um") => 1e-6,
            (Dim::Length, "nm") => 1e-9,
            (Dim::Length, "pm") => 1e-12,
            (Dim::AngularFrequency, "rad/s") => 1.0,
            (Dim::AngularFrequency, "Hz") => 2.0 * PI,
            (Dim::AngularFrequency, "mHz") => 2.0 * PI * 1e-3,
            (Dim::AngularFrequency, "kHz") => 2.0 * PI * 1e3,
            (Dim::Frequency, "Hz") => 1.0,
            (Dim::Frequency, "mHz") => 1e-3,
            (Dim::Frequency, "kHz") => 1e3,
            (Dim::Frequency, "MHz") => 1e6,
            (Dim::Frequency, "GHz") => 1e9,
            (Dim::Rate, "rad/s") | (Dim::Rate, "1/s") => 1.0,
            (Dim::Temperature, "K") => 1.0,
            (Dim::Temperature, "mK") => 1e-3,
            (Dim::Power, "W") => 1.0,
            (Dim::Power, "mW") => 1e-3,
            (Dim::Power, "uW") => 1e-6,
            (Dim::Voltage, "V") => 1.0,
            (Dim::Voltage, "mV") => 1e-3,
            (Dim::Voltage, "kV") => 1e3,
            (Dim::VoltPerRad, "V/rad") => 1.0,
            (Dim::VoltPerRad, "mV/rad") => 1e-3,
            (Dim::Angle, "rad") => 1.0,
            (Dim::Angle, "deg") => PI / 180.0,
            (Dim::Time, "s") => 1.0,
            (Dim::Time, "ms") => 1e-3,
            (Dim::Time, "min") => 60.0,
            (Dim::Time, "h") => 3600.0,
            (Dim::Time, "day") => 86400.0,
            (Dim::DisplacementAsd, "m/rtHz") => 1.0,
            (Dim::DisplacementAsd, "nm/rtHz") => 1e-9,
            (Dim::DisplacementAsd, "pm/rtHz") => 1e-12,
            (Dim::DisplacementAsd, "fm/rtHz") => 1e-15,
            (Dim::FrequencyAsd, "Hz/rtHz") => 1.0,
            (Dim::FrequencyAsd, "mHz/rtHz") => 1e-3,
            (Dim::Scalar, "") | (Dim::Scalar, "1") => 1.0,
            _ => return None,
        };
        Some(f)
    }
}

struct KeyDef {
    path: &'static str,
    dim: Dim,
    required: bool,
}

const fn req(path: &'static str, dim: Dim) -> KeyDef {
    KeyDef {
        path,
        dim,
        required: true,
    }
}

const fn opt(path: &'static str, dim: Dim) -> KeyDef {
    KeyDef {
        path,
        dim,
        required: false,
    }
}

const SCHEMA: &[KeyDef] = &[
    req("resonator.mass", Dim::Mass),
    req("resonator.omega0", Dim::AngularFrequency),
    req("resonator.q_int", Dim::Scalar),
    req("resonator.gamma_v", Dim::Rate),
    req("resonator.temperature", Dim::Temperature),
    req("resonator.loss_exponent", Dim::Scalar),
    req("fpi.length", Dim::Length),
    req("fpi.wavelength", Dim::Length),
    req("fpi.tuning_range", Dim::Frequency),
    req("fpi.finesse", Dim::Scalar),
    req("fpi.freq_noise_asd", Dim::FrequencyAsd),
    req("hli.wavelength", Dim::Length),
    req("hli.imprecision_asd", Dim::DisplacementAsd),
    opt("hli.imprecision_csv", Dim::Text),
    req("hli.lpf_corner", Dim::Frequency),
    req("hli.het_freq", Dim::Frequency),
    req("chain.v_pi", Dim::Voltage),
    req("chain.p0", Dim::Power),
    req("chain.bias_angle", Dim::Angle),
    req("chain.damage_threshold", Dim::Power),
    req("chain.g_dac", Dim::VoltPerRad),
    req("chain.wavelength", Dim::Length),
    req("cooling.gain", Dim::Scalar),
    req("cooling.sweep_min", Dim::Scalar),
    req("cooling.sweep_max", Dim::Scalar),
    req("cooling.sweep_points", Dim::Count),
    req("cooling.sweep_asd", Dim::DisplacementAsd),
    req("cascade.g0", Dim::Scalar),
    req("cascade.x_pp", Dim::Length),
    req("cascade.n_settle", Dim::Scalar),
    req("cascade.k_safe", Dim::Scalar),
    req("cascade.handover", Dim::Text),
    opt("cascade.fpi_imprecision_asd", Dim::DisplacementAsd),
    opt("cascade.max_stages", Dim::Count),
    req("cascade.series_points", Dim::Count),
    req("sim.preset", Dim::Text),
    req("sim.duration", Dim::Time),
    req("sim.gain", Dim::Scalar),
    req("sim.imprecision_gain", Dim::Scalar),
    req("sim.seeds", Dim::Count),
    req("sim.bandpass_q", Dim::Scalar),
    req("sim.segment", Dim::Count),
    req("sim.overlap", Dim::Scalar),
];

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Numbers(Vec<f64>),
    Text(String),
}

struct Raw {
    line: usize,
    value: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandoverMode {
    Off,
    Stop,
    Continue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoolingSection {
    pub gain: f64,
    pub sweep_min: f64,
    pub sweep_max: f64,
    pub sweep_points: usize,
    /// Imprecision ASDs for the T_eff(g) family, m/√Hz.
    pub sweep_asd: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSection {
    pub g0: f64,
    pub x_pp: f64,
    pub n_settle: f64,
    pub k_safe: f64,
    pub handover: HandoverMode,
    pub fpi_imprecision_asd: Option<f64>,
    pub max_stages: Option<usize>,
    pub series_points: usize,
}

impl CascadeSection {
    pub fn initial_variance(&self) -> f64 {
        CascadeConfig::variance_for_amplitude(self.x_pp, self.k_safe)
    }

    pub fn termination(&self) -> Termination {
        if let Some(n) = self.max_stages {
            return Termination::MaxStages(n);
        }
        match self.handover {
            HandoverMode::Off => Termination::ReachOptimal,
            HandoverMode::Stop => Termination::Handover { continue_with: None },
            HandoverMode::Continue => Termination::Handover {
                continue_with: self.fpi_imprecision_asd.map(NoiseSpectrum::flat_asd),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSection {
    pub preset: Preset,
    pub duration: f64,
    pub gain: f64,
    /// Gain at which the preset imprecision is optimal.
    pub imprecision_gain: f64,
    pub seeds: usize,
    pub bandpass_q: Option<f64>,
    pub segment: usize,
    pub overlap: f64,
}

/// Fully resolved experiment, SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub resonator: MechanicalResonator,
    pub fpi: FpiReadout,
    pub hli: HliReadout,
    pub chain: FeedbackChain,
    pub cooling: CoolingSection,
    pub cascade: CascadeSection,
    pub sim: SimSection,
    echo: Vec<String>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_number(s: &str) -> Option<f64> {
    match s {
        "inf" | "infinity" => Some(f64::INFINITY),
        _ => s.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

/// Splits `"1.5, 2, 3 pm/rtHz"` into numbers and the unit.
fn split_value(raw: &str) -> (Vec<&str>, &str) {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    let last = *parts.last().unwrap_or(&"");
    let (num, unit) = match last.split_once(char::is_whitespace) {
        Some((n, u)) => (n.trim(), u.trim()),
        None => (last, ""),
    };
    let mut nums: Vec<&str> = parts[..parts.len() - 1].to_vec();
    nums.push(num);
    (nums, unit)
}

fn resolve(def: &KeyDef, raw: &Raw) -> Result<Value, CliError> {
    let at = |msg: String| config_err(format!("{} (line {}): {msg}", def.path, raw.line));
    match def.dim {
        Dim::Text => Ok(Value::Text(raw.value.clone())),
        Dim::Count => raw
            .value
            .parse::<usize>()
            .map(|n| Value::Numbers(vec![n as f64]))
            .map_err(|_| at(format!("expected a non-negative integer, got {:?}", raw.value))),
        dim => {
            if dim == Dim::Scalar && raw.value == "off" {
                return Ok(Value::Text("off".into()));
            }
            if dim == Dim::VoltPerRad && raw.value == "auto" {
                return Ok(Value::Text("auto".into()));
            }
            let (nums, unit) = split_value(&raw.value);
            let factor = dim.factor(unit).ok_or_else(|| {
                if unit.is_empty() {
                    at(format!("missing unit, expected e.g. {}", dim.si_unit()))
                } else {
                    at(format!("unit {unit:?} is not valid here (SI unit {})", dim.si_unit()))
                }
            })?;
            let values = nums
                .iter()
                .map(|n| {
                    parse_number(n)
                        .map(|v| v * factor)
                        .ok_or_else(|| at(format!("{n:?} is not a number")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Value::Numbers(values))
        }
    }
}

struct Resolved {
    values: BTreeMap<&'static str, Value>,
}

impl Resolved {
    fn num(&self, path: &str) -> Result<f64, CliError> {
        match self.values.get(path) {
            Some(Value::Numbers(v)) if v.len() == 1 => Ok(v[0]),
            Some(Value::Numbers(_)) => Err(config_err(format!("{path}: expected a single value"))),
            Some(Value::Text(t)) => Err(config_err(format!("{path}: {t:?} is not allowed here"))),
            None => Err(config_err(format!("missing required key {path}"))),
        }
    }

    fn list(&self, path: &str) -> Result<Vec<f64>, CliError> {
        match self.values.get(path) {
            Some(Value::Numbers(v)) => Ok(v.clone()),
            _ => Err(config_err(format!("{path}: expected a list of values"))),
        }
    }

    fn text(&self, path: &str) -> Option<&str> {
        match self.values.get(path) {
            Some(Value::Text(t)) => Some(t.as_str()),
            _ => None,
        }
    }

    fn count(&self, path: &str) -> Result<usize, CliError> {
        Ok(self.num(path)? as usize)
    }

    fn opt_num(&self, path: &str) -> Result<Option<f64>, CliError> {
        match self.values.get(path) {
            None => Ok(None),
            Some(_) if self.text(path) == Some("off") => Ok(None),
            Some(_) => self.num(path).map(Some),
        }
    }
}

fn model_err(path: &str) -> impl Fn(optomech_core::Error) -> CliError + '_ {
    move |e| config_err(format!("{path}: {e}"))
}

impl ExperimentConfig {
    pub fn reference() -> Self {
        Self::parse(DEFAULT_CONFIG, None).expect("built-in config is valid")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    /// Parses config text. Relative file references resolve against
    /// `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, CliError> {
        let mut raw: BTreeMap<String, Raw> = BTreeMap::new();
        let mut section = String::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {line_no}: expected `key = value unit`")))?;
            if section.is_empty() {
                return Err(config_err(format!("line {line_no}: key outside any [section]")));
            }
            let path = format!("{section}.{}", key.trim());
            if !SCHEMA.iter().any(|s| s.path == path) {
                return Err(config_err(format!("unknown key {path} (line {line_no})")));
            }
            let entry = Raw {
                line: line_no,
                value: value.trim().to_string(),
            };
            if raw.insert(path.clone(), entry).is_some() {
                return Err(config_err(format!("duplicate key {path} (line {line_no})")));
            }
        }

        let mut values = BTreeMap::new();
        let mut echo = Vec::new();
        for def in SCHEMA {
            match raw.get(def.path) {
                Some(r) => {
                    let v = resolve(def, r)?;
                    echo.push(match &v {
                        Value::Text(t) => format!("{} = {t}", def.path),
                        Value::Numbers(n) => {
                            let nums: Vec<String> = n.iter().map(|x| table::fmt_num(*x)).collect();
                            format!("{} = {} {}", def.path, nums.join(", "), def.dim.si_unit())
                                .trim_end()
                                .to_string()
                        }
                    });
                    values.insert(def.path, v);
                }
                None if def.required => {
                    return Err(config_err(format!("missing required key {}", def.path)));
                }
                None => {}
            }
        }
        let r = Resolved { values };
        Self::build(&r, base_dir, echo)
    }

    fn build(r: &Resolved, base_dir: Option<&Path>, echo: Vec<String>) -> Result<Self, CliError> {
        let resonator = MechanicalResonator::new(
            r.num("resonator.mass")?,
            r.num("resonator.omega0")?,
            r.num("resonator.q_int")?,
            r.num("resonator.gamma_v")?,
            r.num("resonator.temperature")?,
            r.num("resonator.loss_exponent")?,
        )
        .map_err(model_err("resonator"))?;

        let fpi = FpiReadout::new(
            r.num("fpi.length")?,
            r.num("fpi.wavelength")?,
            r.num("fpi.tuning_range")?,
            r.num("fpi.finesse")?,
            NoiseSpectrum::flat_asd(r.num("fpi.freq_noise_asd")?),
        )
        .map_err(model_err("fpi"))?;

        let imprecision = match r.text("hli.imprecision_csv") {
            Some(file) => {
                let path = base_dir.map_or_else(|| Path::new(file).to_path_buf(), |d| d.join(file));
                let rec = table::read_asd_csv(&path)?;
                NoiseSpectrum::shaped(&rec).map_err(model_err("hli.imprecision_csv"))?
            }
            None => NoiseSpectrum::flat_asd(r.num("hli.imprecision_asd")?),
        };
        let hli = HliReadout::new(
            r.num("hli.wavelength")?,
            imprecision,
            r.num("hli.lpf_corner")?,
            r.num("hli.het_freq")?,
        )
        .map_err(model_err("hli"))?;

        let cascade = CascadeSection {
            g0: r.num("cascade.g0")?,
            x_pp: r.num("cascade.x_pp")?,
            n_settle: r.num("cascade.n_settle")?,
            k_safe: r.num("cascade.k_safe")?,
            handover: match r.text("cascade.handover") {
                Some("off") => HandoverMode::Off,
                Some("stop") => HandoverMode::Stop,
                Some("continue") => HandoverMode::Continue,
                other => {
                    return Err(config_err(format!(
                        "cascade.handover: expected off, stop or continue, got {other:?}"
                    )))
                }
            },
            fpi_imprecision_asd: r.opt_num("cascade.fpi_imprecision_asd")?,
            max_stages: r.opt_num("cascade.max_stages")?.map(|n| n as usize),
            series_points: r.count("cascade.series_points")?,
        };
        if cascade.handover == HandoverMode::Continue && cascade.fpi_imprecision_asd.is_none() {
            return Err(config_err(
                "cascade.fpi_imprecision_asd is required when cascade.handover = continue",
            ));
        }

        let eoam = Eoam::new(
            r.num("chain.v_pi")?,
            r.num("chain.p0")?,
            r.num("chain.bias_angle")?,
            r.num("chain.damage_threshold")?,
        )
        .map_err(model_err("chain"))?;
        let chain_lambda = r.num("chain.wavelength")?;
        let g_dac = match r.text("chain.g_dac") {
            Some("auto") => max_dac_gain(eoam.v_pi(), chain_lambda, cascade.x_pp).map_err(model_err("chain.g_dac"))?,
            _ => r.num("chain.g_dac")?,
        };
        let chain = FeedbackChain::new(eoam, g_dac, chain_lambda).map_err(model_err("chain"))?;

        let cooling = CoolingSection {
            gain: r.num("cooling.gain")?,
            sweep_min: r.num("cooling.sweep_min")?,
            sweep_max: r.num("cooling.sweep_max")?,
            sweep_points: r.count("cooling.sweep_points")?,
            sweep_asd: r.list("cooling.sweep_asd")?,
        };
        if !(cooling.sweep_min > 0.0 && cooling.sweep_max > cooling.sweep_min && cooling.sweep_points >= 2) {
            return Err(config_err(
                "cooling.sweep_*: need 0 < sweep_min < sweep_max and sweep_points >= 2",
            ));
        }

        let sim = SimSection {
            preset: match r.text("sim.preset") {
                Some("q100") => Preset::Q100,
                Some("q1e3") => Preset::Q1e3,
                Some("q1e5") => Preset::Q1e5,
                other => {
                    return Err(config_err(format!(
                        "sim.preset: expected q100, q1e3 or q1e5, got {other:?}"
                    )))
                }
            },
            duration: r.num("sim.duration")?,
            gain: r.num("sim.gain")?,
            imprecision_gain: r.num("sim.imprecision_gain")?,
            seeds: r.count("sim.seeds")?,
            bandpass_q: r.opt_num("sim.bandpass_q")?,
            segment: r.count("sim.segment")?,
            overlap: r.num("sim.overlap")?,
        };

        Ok(Self {
            resonator,
            fpi,
            hli,
            chain,
            cooling,
            cascade,
            sim,
            echo,
        })
    }

    /// One `section.key = value unit` line per loaded key, in SI.
    pub fn echo(&self) -> &[String] {
        &self.echo
    }

    /// Imprecision PSD of the HLI at the resonance, m²/Hz.
    pub fn hli_psd_at_resonance(&self) -> f64 {
        self.hli.imprecision_psd(self.resonator.omega0())
    }
}
