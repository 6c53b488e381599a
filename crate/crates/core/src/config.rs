//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments run to the end of the line
//! f_ck = 262000
//! integrator = ideal
//! seeds = 1, 2, 3
//! ```
//!
//! Every key has a default equal to the prototype operating point; unknown
//! or repeated keys are errors.

use std::collections::HashSet;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::ResolutionSettings;
use crate::error::{Error, Result};
use crate::input::Input;
use crate::modulator::{ModulatorConfig, NoiseFolding};
use crate::physics::{BridgeVariant, CommonMode, SensorParameters};

/// Figure-level experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Figure {
    /// Analytic and simulated noise transfer of both loops.
    Ntf7,
    /// Bit-stream spectrum of a 16 Hz, 1 g tone at 131 kHz.
    #[default]
    Spectrum8,
    /// Signal transfer of both loops.
    Stf9,
    /// In-band resolution against clock frequency.
    Sweep10,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Ntf7, Figure::Spectrum8, Figure::Stf9, Figure::Sweep10];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Ntf7 => "ntf7",
            Figure::Spectrum8 => "spectrum8",
            Figure::Stf9 => "stf9",
            Figure::Sweep10 => "sweep10",
        }
    }
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure {s:?}; expected ntf7|spectrum8|stf9|sweep10")))
    }
}

impl Display for Figure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything a CLI run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sensor: SensorParameters,
    pub modulator: ModulatorConfig,
    pub experiment: Figure,
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    /// Stimulus of `simulate`, `spectrum8` and `sweep10`.
    pub input: Input,
    pub resolution: ResolutionSettings,
    /// Bit-streams longer than this are analysed on the fly, never stored.
    pub memory_budget_bits: u64,
    /// Bin width of the full-rate spectrum (Hz).
    pub spectrum_bin_width: f64,
    /// Sweep clocks are f_ck · 2^k for k in [sweep_k_min, sweep_k_max].
    pub sweep_k_min: i32,
    pub sweep_k_max: i32,
    pub stf_amplitude: f64,
    pub stf_f_min: f64,
    pub stf_f_max: f64,
    pub stf_points_per_decade: usize,
    pub stf_min_duration: f64,
    /// Equivalent comparator-noise density of the noise-only spectra
    /// (fraction of a feedback quantum, RMS).
    pub ntf_dither: f64,
    /// DC input of the noise-only spectra (g).
    pub ntf_input: f64,
    pub ntf_f_ck: f64,
    pub ntf_duration: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sensor: SensorParameters::prototype(),
            modulator: ModulatorConfig::default(),
            experiment: Figure::Spectrum8,
            out_dir: PathBuf::from("out"),
            seeds: (1..=5).collect(),
            input: Input::Sine { freq: 16.0, amp: 1.0 },
            resolution: ResolutionSettings::default(),
            memory_budget_bits: 200_000_000,
            spectrum_bin_width: 0.5,
            sweep_k_min: -3,
            sweep_k_max: 6,
            stf_amplitude: 1.0,
            stf_f_min: 10.0,
            stf_f_max: 10e3,
            stf_points_per_decade: 10,
            stf_min_duration: 0.5,
            ntf_dither: 0.3,
            ntf_input: 0.025,
            ntf_f_ck: 131e3,
            ntf_duration: 20.0,
        }
    }
}

/// Keys with a one-line description, in dump order.
pub const KEYS: &[(&str, &str)] = &[
    ("heater_power", "heater power (W)"),
    ("t_ambient", "ambient temperature (K)"),
    ("r_th_heater", "heater thermal resistance (K/W)"),
    ("r_th_detector", "detector thermal resistance (K/W)"),
    ("tau_d", "detector thermal time constant (s)"),
    ("tcr", "detector temperature coefficient (1/K)"),
    ("r_nominal", "detector resistance at t_reference (ohm)"),
    ("t_reference", "TCR reference temperature (K)"),
    ("gamma", "conduction nonlinearity (1/K)"),
    ("r1", "conduction inner radius (m)"),
    ("r2", "conduction outer radius (m)"),
    ("r_detector", "detector radius (m)"),
    ("rho", "gas density (kg/m^3)"),
    ("beta", "gas expansion coefficient (1/K)"),
    ("mu", "gas viscosity (kg/(m s))"),
    ("l", "cavity dimension (m)"),
    ("tau_fluid", "fluid time constant (s)"),
    ("fit_coefficient", "Grashof fitting coefficient (K)"),
    ("common_mode", "detector common mode: fraction of heater rise, or `conduction`"),
    ("vdd", "bridge supply (V)"),
    ("noise_bandwidth", "comparator noise bandwidth (Hz)"),
    ("f_ck", "modulator clock (Hz)"),
    ("full_scale", "full scale (g)"),
    ("integrator", "loop filter: thermal | ideal"),
    ("noise", "comparator noise on: true | false"),
    ("noise_folding", "aliased | nyquist"),
    ("noise_density", "override of the bridge noise density (V/sqrt(Hz)); `auto` keeps it"),
    ("bridge_variant", "bridge seen by the comparator: two | four"),
    ("fluid_lag", "apply the fluid lag to the input: true | false"),
    ("common_mode_shift", "raise T_CM by the mean feedback heating: true | false"),
    ("seed", "seed of single runs"),
    ("duration", "recorded duration (s)"),
    ("settle", "discarded settling time (s)"),
    ("experiment", "figure run when none is named: ntf7 | spectrum8 | stf9 | sweep10"),
    ("out_dir", "output directory"),
    ("seeds", "comma-separated seeds of multi-seed figures"),
    ("input", "stimulus: dc:<g> | sine:<hz>,<g> | file:<csv>"),
    ("band_low", "resolution band lower edge (Hz)"),
    ("band_high", "resolution band upper edge (Hz)"),
    ("band_bin_width", "bin width of the in-band spectrum (Hz)"),
    ("exclusion_bins", "bins removed around the tone and each harmonic"),
    ("max_harmonic", "highest harmonic removed"),
    ("min_decimated_rate", "lowest rate after CIC decimation (Hz)"),
    ("memory_budget_bits", "longest bit-stream kept in memory"),
    ("spectrum_bin_width", "bin width of the full-rate spectrum (Hz)"),
    ("sweep_k_min", "lowest sweep clock exponent"),
    ("sweep_k_max", "highest sweep clock exponent"),
    ("stf_amplitude", "STF test amplitude (g)"),
    ("stf_f_min", "lowest STF frequency (Hz)"),
    ("stf_f_max", "highest STF frequency (Hz)"),
    ("stf_points_per_decade", "STF grid density"),
    ("stf_min_duration", "shortest STF record (s)"),
    ("ntf_dither", "noise-only spectra: comparator noise, RMS fraction of a feedback quantum"),
    ("ntf_input", "noise-only spectra: DC input (g)"),
    ("ntf_f_ck", "noise-only spectra: clock (Hz)"),
    ("ntf_duration", "noise-only spectra: recorded duration (s)"),
];

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true or false, got {v:?}"))),
    }
}

impl ExperimentConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.to_owned()) {
                return Err(Error::Config(format!("line {}: `{k}` set twice", i + 1)));
            }
            cfg.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, strip_prefix(e))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let s = &mut self.sensor;
        let m = &mut self.modulator;
        match key {
            "heater_power" => s.heater_power = parse(key, v)?,
            "t_ambient" => s.t_ambient = parse(key, v)?,
            "r_th_heater" => s.bridge.r_th_heater = parse(key, v)?,
            "r_th_detector" => s.bridge.r_th_detector = parse(key, v)?,
            "tau_d" => s.bridge.tau_d = parse(key, v)?,
            "tcr" => s.bridge.tcr = parse(key, v)?,
            "r_nominal" => s.bridge.r_nominal = parse(key, v)?,
            "t_reference" => s.bridge.t_reference = parse(key, v)?,
            "gamma" => s.bridge.gamma = parse(key, v)?,
            "r1" => s.bridge.r1 = parse(key, v)?,
            "r2" => s.bridge.r2 = parse(key, v)?,
            "r_detector" => s.bridge.r_detector = parse(key, v)?,
            "rho" => s.gas.rho = parse(key, v)?,
            "beta" => s.gas.beta = parse(key, v)?,
            "mu" => s.gas.mu = parse(key, v)?,
            "l" => s.gas.l = parse(key, v)?,
            "tau_fluid" => s.gas.tau_fluid = parse(key, v)?,
            "fit_coefficient" => s.fit_coefficient = parse(key, v)?,
            "common_mode" => {
                s.common_mode = if v == "conduction" {
                    CommonMode::Conduction
                } else {
                    CommonMode::Fraction(parse(key, v)?)
                }
            }
            "vdd" => s.vdd = parse(key, v)?,
            "noise_bandwidth" => s.noise_bandwidth = parse(key, v)?,
            "f_ck" => m.f_ck = parse(key, v)?,
            "full_scale" => m.full_scale = parse(key, v)?,
            "integrator" => m.integrator = v.parse()?,
            "noise" => m.noise_enabled = parse_bool(key, v)?,
            "noise_folding" => {
                m.noise_folding = match v {
                    "aliased" => NoiseFolding::Aliased,
                    "nyquist" => NoiseFolding::NyquistLimited,
                    _ => return Err(Error::Config(format!("`{key}`: expected aliased|nyquist, got {v:?}"))),
                }
            }
            "noise_density" => {
                m.noise_density = if v == "auto" { None } else { Some(parse(key, v)?) }
            }
            "bridge_variant" => {
                m.bridge_variant = match v {
                    "two" => BridgeVariant::TwoResistor,
                    "four" => BridgeVariant::FourResistor,
                    _ => return Err(Error::Config(format!("`{key}`: expected two|four, got {v:?}"))),
                }
            }
            "fluid_lag" => m.fluid_lag = parse_bool(key, v)?,
            "common_mode_shift" => m.common_mode_shift = parse_bool(key, v)?,
            "seed" => m.seed = parse(key, v)?,
            "duration" => m.duration = parse(key, v)?,
            "settle" => m.settle = parse(key, v)?,
            "experiment" => self.experiment = v.parse()?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "seeds" => {
                self.seeds = v
                    .split(',')
                    .map(|x| parse(key, x.trim()))
                    .collect::<Result<Vec<u64>>>()?
            }
            "input" => self.input = v.parse()?,
            "band_low" => self.resolution.band.0 = parse(key, v)?,
            "band_high" => self.resolution.band.1 = parse(key, v)?,
            "band_bin_width" => self.resolution.bin_width = parse(key, v)?,
            "exclusion_bins" => self.resolution.exclusion_bins = parse(key, v)?,
            "max_harmonic" => self.resolution.max_harmonic = parse(key, v)?,
            "min_decimated_rate" => self.resolution.min_decimated_rate = parse(key, v)?,
            "memory_budget_bits" => self.memory_budget_bits = parse(key, v)?,
            "spectrum_bin_width" => self.spectrum_bin_width = parse(key, v)?,
            "sweep_k_min" => self.sweep_k_min = parse(key, v)?,
            "sweep_k_max" => self.sweep_k_max = parse(key, v)?,
            "stf_amplitude" => self.stf_amplitude = parse(key, v)?,
            "stf_f_min" => self.stf_f_min = parse(key, v)?,
            "stf_f_max" => self.stf_f_max = parse(key, v)?,
            "stf_points_per_decade" => self.stf_points_per_decade = parse(key, v)?,
            "stf_min_duration" => self.stf_min_duration = parse(key, v)?,
            "ntf_dither" => self.ntf_dither = parse(key, v)?,
            "ntf_input" => self.ntf_input = parse(key, v)?,
            "ntf_f_ck" => self.ntf_f_ck = parse(key, v)?,
            "ntf_duration" => self.ntf_duration = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Text form of one key.
    pub fn get(&self, key: &str) -> Option<String> {
        let s = &self.sensor;
        let m = &self.modulator;
        let b = |x: bool| x.to_string();
        Some(match key {
            "heater_power" => s.heater_power.to_string(),
            "t_ambient" => s.t_ambient.to_string(),
            "r_th_heater" => s.bridge.r_th_heater.to_string(),
            "r_th_detector" => s.bridge.r_th_detector.to_string(),
            "tau_d" => s.bridge.tau_d.to_string(),
            "tcr" => s.bridge.tcr.to_string(),
            "r_nominal" => s.bridge.r_nominal.to_string(),
            "t_reference" => s.bridge.t_reference.to_string(),
            "gamma" => s.bridge.gamma.to_string(),
            "r1" => s.bridge.r1.to_string(),
            "r2" => s.bridge.r2.to_string(),
            "r_detector" => s.bridge.r_detector.to_string(),
            "rho" => s.gas.rho.to_string(),
            "beta" => s.gas.beta.to_string(),
            "mu" => s.gas.mu.to_string(),
            "l" => s.gas.l.to_string(),
            "tau_fluid" => s.gas.tau_fluid.to_string(),
            "fit_coefficient" => s.fit_coefficient.to_string(),
            "common_mode" => match s.common_mode {
                CommonMode::Conduction => "conduction".into(),
                CommonMode::Fraction(f) => f.to_string(),
            },
            "vdd" => s.vdd.to_string(),
            "noise_bandwidth" => s.noise_bandwidth.to_string(),
            "f_ck" => m.f_ck.to_string(),
            "full_scale" => m.full_scale.to_string(),
            "integrator" => m.integrator.to_string(),
            "noise" => b(m.noise_enabled),
            "noise_folding" => match m.noise_folding {
                NoiseFolding::Aliased => "aliased".into(),
                NoiseFolding::NyquistLimited => "nyquist".into(),
            },
            "noise_density" => m.noise_density.map_or("auto".into(), |d| d.to_string()),
            "bridge_variant" => match m.bridge_variant {
                BridgeVariant::TwoResistor => "two".into(),
                BridgeVariant::FourResistor => "four".into(),
            },
            "fluid_lag" => b(m.fluid_lag),
            "common_mode_shift" => b(m.common_mode_shift),
            "seed" => m.seed.to_string(),
            "duration" => m.duration.to_string(),
            "settle" => m.settle.to_string(),
            "experiment" => self.experiment.to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            "seeds" => self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(", "),
            "input" => match &self.input {
                Input::Dc(a) => format!("dc:{a}"),
                Input::Sine { freq, amp } => format!("sine:{freq},{amp}"),
                Input::Samples(_) => "file:<samples>".into(),
            },
            "band_low" => self.resolution.band.0.to_string(),
            "band_high" => self.resolution.band.1.to_string(),
            "band_bin_width" => self.resolution.bin_width.to_string(),
            "exclusion_bins" => self.resolution.exclusion_bins.to_string(),
            "max_harmonic" => self.resolution.max_harmonic.to_string(),
            "min_decimated_rate" => self.resolution.min_decimated_rate.to_string(),
            "memory_budget_bits" => self.memory_budget_bits.to_string(),
            "spectrum_bin_width" => self.spectrum_bin_width.to_string(),
            "sweep_k_min" => self.sweep_k_min.to_string(),
            "sweep_k_max" => self.sweep_k_max.to_string(),
            "stf_amplitude" => self.stf_amplitude.to_string(),
            "stf_f_min" => self.stf_f_min.to_string(),
            "stf_f_max" => self.stf_f_max.to_string(),
            "stf_points_per_decade" => self.stf_points_per_decade.to_string(),
            "stf_min_duration" => self.stf_min_duration.to_string(),
            "ntf_dither" => self.ntf_dither.to_string(),
            "ntf_input" => self.ntf_input.to_string(),
            "ntf_f_ck" => self.ntf_f_ck.to_string(),
            "ntf_duration" => self.ntf_duration.to_string(),
            _ => return None,
        })
    }

    /// Complete config file with every key at its current value.
    pub fn dump(&self) -> String {
        KEYS.iter()
            .map(|(k, doc)| format!("# {doc}\n{k} = {}\n", self.get(k).unwrap_or_default()))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(strip_prefix(e));
        self.sensor.validate().map_err(wrap)?;
        self.modulator.validate().map_err(wrap)?;
        if self.seeds.is_empty() {
            return Err(Error::Config("`seeds` is empty".into()));
        }
        let (lo, hi) = self.resolution.band;
        if !(lo >= 0.0 && hi > lo) {
            return Err(Error::Config(format!("bad band [{lo}, {hi}]")));
        }
        for (k, v) in [
            ("band_bin_width", self.resolution.bin_width),
            ("min_decimated_rate", self.resolution.min_decimated_rate),
            ("spectrum_bin_width", self.spectrum_bin_width),
            ("stf_amplitude", self.stf_amplitude),
            ("stf_f_min", self.stf_f_min),
            ("stf_min_duration", self.stf_min_duration),
            ("ntf_f_ck", self.ntf_f_ck),
            ("ntf_duration", self.ntf_duration),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("`{k}` must be positive, got {v}")));
            }
        }
        if self.stf_f_max < self.stf_f_min || self.stf_points_per_decade == 0 {
            return Err(Error::Config("empty STF grid".into()));
        }
        if self.sweep_k_max < self.sweep_k_min {
            return Err(Error::Config("empty sweep grid".into()));
        }
        if !(self.ntf_dither >= 0.0) {
            return Err(Error::Config("`ntf_dither` must be ≥ 0".into()));
        }
        Ok(())
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(s) => s,
        other => other.to_string(),
    }
}
