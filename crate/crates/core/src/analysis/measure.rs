//! In-band resolution: CIC decimation of the bit-stream, a fine Welch
//! spectrum of the decimated signal, and band metrics around a test tone.

use crate::bitstream::BitStream;
use crate::error::{Error, Result};
use crate::input::Input;
use crate::modulator::{run_streaming, ModulatorConfig, RunSummary};
use crate::physics::SensorParameters;

use super::spectrum::{
    band_rms, harmonic_distortion, tone_exclusions, Spectrum, WelchAccumulator, WelchConfig,
};

/// Third-order CIC decimator on ±1 input with unit DC gain.
///
/// Integrators wrap in two's complement; the combs undo the wrap as long as
/// R³ fits in an i64.
#[derive(Debug, Clone)]
pub struct Cic3 {
    ratio: u64,
    integ: [i64; 3],
    comb: [i64; 3],
    phase: u64,
    norm: f64,
}

impl Cic3 {
    pub fn new(ratio: u64) -> Result<Self> {
        if ratio == 0 || ratio > 1 << 20 {
            return Err(Error::Analysis(format!("decimation ratio {ratio} out of range")));
        }
        Ok(Self {
            ratio,
            integ: [0; 3],
            comb: [0; 3],
            phase: 0,
            norm: 1.0 / (ratio as f64).powi(3),
        })
    }

    pub fn ratio(&self) -> u64 {
        self.ratio
    }

    /// Group delay plus start-up: outputs before this many are incomplete.
    pub const WARMUP_OUTPUTS: usize = 3;

    #[inline]
    pub fn push(&mut self, x: i64) -> Option<f64> {
        self.integ[0] = self.integ[0].wrapping_add(x);
        self.integ[1] = self.integ[1].wrapping_add(self.integ[0]);
        self.integ[2] = self.integ[2].wrapping_add(self.integ[1]);
        self.phase += 1;
        if self.phase < self.ratio {
            return None;
        }
        self.phase = 0;
        let mut y = self.integ[2];
        for c in &mut self.comb {
            let d = y.wrapping_sub(*c);
            *c = y;
            y = d;
        }
        Some(y as f64 * self.norm)
    }
}

/// Band and exclusions for resolution measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionSettings {
    /// (f_low, f_high) in Hz.
    pub band: (f64, f64),
    /// Welch bin width of the decimated spectrum (Hz).
    pub bin_width: f64,
    /// Bins removed on either side of the tone and each harmonic.
    pub exclusion_bins: usize,
    /// Highest harmonic excluded.
    pub max_harmonic: usize,
    /// Decimated rate floor (Hz); the CIC ratio is the largest power of two
    /// keeping f_ck / R above it.
    pub min_decimated_rate: f64,
}

impl Default for ResolutionSettings {
    fn default() -> Self {
        Self {
            band: (1.0, 20.0),
            bin_width: 0.5,
            exclusion_bins: 3,
            max_harmonic: 5,
            min_decimated_rate: 8000.0,
        }
    }
}

impl ResolutionSettings {
    pub fn decimation_ratio(&self, f_ck: f64) -> u64 {
        let mut r = 1u64;
        while f_ck / (2 * r) as f64 >= self.min_decimated_rate && r < 1 << 20 {
            r *= 2;
        }
        r
    }
}

/// Noise and tone figures over one band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandMetrics {
    pub band: (f64, f64),
    /// RMS of everything in the band except the tone and its harmonics (g).
    pub rms_noise: f64,
    /// RMS of the tone (g); 0 without one.
    pub signal_rms: f64,
    /// Third-harmonic to fundamental amplitude ratio.
    pub hd3_ratio: Option<f64>,
}

/// Band metrics of `sp`, removing `tone` (Hz) and its harmonics.
pub fn band_metrics(sp: &Spectrum, tone: Option<f64>, s: &ResolutionSettings) -> Result<BandMetrics> {
    let (lo, hi) = s.band;
    let exclude = tone
        .map(|f0| tone_exclusions(f0, s.exclusion_bins, s.max_harmonic, sp.resolution_bw))
        .unwrap_or_default();
    let rms_noise = band_rms(sp, lo, hi, &exclude)?;
    let (signal_rms, hd3_ratio) = match tone {
        Some(f0) => (
            sp.tone_power_above_floor(f0).sqrt(),
            harmonic_distortion(sp, f0, 3).ok(),
        ),
        None => (0.0, None),
    };
    Ok(BandMetrics {
        band: s.band,
        rms_noise,
        signal_rms,
        hd3_ratio,
    })
}

/// Streaming decimate-and-estimate chain producing the in-band spectrum.
pub struct BandMeter {
    cic: Cic3,
    welch: WelchAccumulator,
    scale: f64,
    skip: usize,
}

impl BandMeter {
    /// `scale` converts the ±1 bits to g.
    pub fn new(f_ck: f64, scale: f64, s: &ResolutionSettings) -> Result<Self> {
        let cic = Cic3::new(s.decimation_ratio(f_ck))?;
        let rate = f_ck / cic.ratio() as f64;
        let welch = WelchAccumulator::new(rate, WelchConfig::for_bin_width(rate, s.bin_width))?;
        Ok(Self {
            cic,
            welch,
            scale,
            skip: Cic3::WARMUP_OUTPUTS,
        })
    }

    #[inline]
    pub fn push(&mut self, bit: i8) {
        if let Some(y) = self.cic.push(i64::from(bit)) {
            if self.skip > 0 {
                self.skip -= 1;
            } else {
                self.welch.push(y * self.scale);
            }
        }
    }

    pub fn decimation_ratio(&self) -> u64 {
        self.cic.ratio()
    }

    /// Records shorter than one segment fall back to a single periodogram.
    pub fn finish(self) -> Result<Spectrum> {
        self.welch.finish_or_partial()
    }
}

/// In-band spectrum of a stored bit-stream.
pub fn band_spectrum(stream: &BitStream, s: &ResolutionSettings) -> Result<Spectrum> {
    let mut meter = BandMeter::new(stream.f_ck, stream.scale, s)?;
    for b in stream.iter() {
        meter.push(b);
    }
    meter.finish()
}

/// Everything measured on one simulated run.
#[derive(Debug, Clone)]
pub struct RunAnalysis {
    pub summary: RunSummary,
    /// Spectrum of the decimated stream (fine bins, band of interest).
    pub band_spectrum: Spectrum,
    /// Spectrum at the full clock rate, when requested.
    pub full_spectrum: Option<Spectrum>,
    pub metrics: BandMetrics,
}

/// Simulates one run and analyses it on the fly; memory stays bounded by
/// the Welch segments whatever the run length.
pub fn analyze_run(
    sensor: &SensorParameters,
    cfg: &ModulatorConfig,
    input: &Input,
    settings: &ResolutionSettings,
    full_rate: Option<WelchConfig>,
) -> Result<RunAnalysis> {
    let scale = cfg.full_scale;
    let mut meter = BandMeter::new(cfg.f_ck, scale, settings)?;
    let mut full = full_rate
        .map(|w| WelchAccumulator::new(cfg.f_ck, w))
        .transpose()?;
    let summary = run_streaming(sensor, cfg, input, |b| {
        meter.push(b);
        if let Some(acc) = full.as_mut() {
            acc.push(f64::from(b) * scale);
        }
    })?;
    let band_spectrum = meter.finish()?;
    let full_spectrum = full.map(|acc| acc.finish_or_partial()).transpose()?;
    let metrics = band_metrics(&band_spectrum, tone_of(input), settings)?;
    Ok(RunAnalysis {
        summary,
        band_spectrum,
        full_spectrum,
        metrics,
    })
}

/// Test-tone frequency of an input, if it has one.
pub fn tone_of(input: &Input) -> Option<f64> {
    match input {
        Input::Sine { freq, .. } => Some(*freq),
        _ => None,
    }
}
