//! Signal transfer measured by coherent demodulation of the bit-stream.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::input::Input;
use crate::modulator::{run_streaming, ModulatorConfig};
use crate::physics::SensorParameters;

/// Record length per test frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StfSettings {
    pub min_periods: u32,
    /// s
    pub min_duration: f64,
}

impl Default for StfSettings {
    fn default() -> Self {
        Self {
            min_periods: 20,
            min_duration: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StfPoint {
    pub freq: f64,
    /// Output / input amplitude, mean over seeds.
    pub gain: f64,
    pub gain_db: f64,
    /// Spread of the per-seed gains (dB); 0 for a single seed.
    pub std_db: f64,
}

/// Gain of one run at `freq`: single-bin DFT over a whole number of periods.
pub fn stf_gain(
    sensor: &SensorParameters,
    cfg: &ModulatorConfig,
    freq: f64,
    amp: f64,
    settings: &StfSettings,
) -> Result<f64> {
    if !(freq > 0.0 && freq < 0.5 * cfg.f_ck) {
        return Err(invalid("freq", format!("{freq} Hz not in (0, f_ck/2)")));
    }
    if !(amp > 0.0 && amp < cfg.full_scale) {
        return Err(invalid("amp", format!("{amp} g not in (0, full scale)")));
    }
    let periods = (freq * settings.min_duration).ceil().max(f64::from(settings.min_periods));
    let n = (periods * cfg.f_ck / freq).round();
    let run = ModulatorConfig {
        duration: n / cfg.f_ck,
        fluid_lag: false,
        ..cfg.clone()
    };
    let w = 2.0 * PI * freq / cfg.f_ck;
    let (mut re, mut im, mut k) = (0.0, 0.0, 0u64);
    run_streaming(sensor, &run, &Input::Sine { freq, amp }, |b| {
        let (s, c) = (w * k as f64).sin_cos();
        re += f64::from(b) * c;
        im -= f64::from(b) * s;
        k += 1;
    })?;
    let out_amp = 2.0 * re.hypot(im) / k as f64 * cfg.full_scale;
    Ok(out_amp / amp)
}

/// Signal transfer of the loop over `freqs`, averaged over `seeds`.
///
/// The fluid lag acts before the loop and is not part of its transfer, so
/// it is switched off for these runs.
pub fn stf_measure(
    sensor: &SensorParameters,
    cfg: &ModulatorConfig,
    freqs: &[f64],
    amp: f64,
    seeds: &[u64],
    settings: &StfSettings,
) -> Result<Vec<StfPoint>> {
    let seeds: Vec<u64> = if seeds.is_empty() { vec![cfg.seed] } else { seeds.to_vec() };
    let jobs: Vec<(f64, u64)> = freqs
        .iter()
        .flat_map(|&f| seeds.iter().map(move |&s| (f, s)))
        .collect();
    let gains = jobs
        .par_iter()
        .map(|&(f, s)| stf_gain(sensor, &cfg.with_seed(s), f, amp, settings))
        .collect::<Result<Vec<f64>>>()?;
    Ok(freqs
        .iter()
        .zip(gains.chunks(seeds.len()))
        .map(|(&freq, g)| {
            let gain = g.iter().sum::<f64>() / g.len() as f64;
            let db: Vec<f64> = g.iter().map(|x| 20.0 * x.log10()).collect();
            StfPoint {
                freq,
                gain,
                gain_db: 20.0 * gain.log10(),
                std_db: sample_std(&db),
            }
        })
        .collect())
}

/// Frequency where the gain has fallen 3 dB below the first point's,
/// interpolated linearly in dB over log f.
pub fn cutoff_3db(points: &[StfPoint]) -> Option<f64> {
    let reference = points.first()?.gain_db;
    let target = reference - 3.0;
    points.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        (a.gain_db >= target && b.gain_db < target).then(|| {
            let t = (a.gain_db - target) / (a.gain_db - b.gain_db);
            (a.freq.ln() + t * (b.freq.ln() - a.freq.ln())).exp()
        })
    })
}

/// `per_decade` log-spaced frequencies from `f_lo` up to at most `f_hi`.
pub fn log_grid(f_lo: f64, f_hi: f64, per_decade: usize) -> Vec<f64> {
    let step = 10f64.powf(1.0 / per_decade as f64);
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let f = f_lo * step.powi(k);
        if f > f_hi * (1.0 + 1e-9) {
            break;
        }
        out.push(f);
        k += 1;
    }
    out
}

pub(crate) fn sample_std(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}
