//! Resolution against modulator clock.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::input::Input;
use crate::modulator::ModulatorConfig;
use crate::physics::SensorParameters;

use super::measure::{analyze_run, ResolutionSettings};
use super::stf::sample_std;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub f_ck: f64,
    /// Mean in-band resolution over seeds (g).
    pub resolution: f64,
    pub stddev: f64,
    pub n_seeds: usize,
}

/// `base`·2^k for k in `k_lo..=k_hi`.
pub fn octave_grid(base: f64, k_lo: i32, k_hi: i32) -> Vec<f64> {
    (k_lo..=k_hi).map(|k| base * 2f64.powi(k)).collect()
}

/// In-band resolution for every clock in `fcks` and seed in `seeds`. Runs
/// execute in parallel; rows come back in `fcks` order.
pub fn resolution_vs_fck(
    sensor: &SensorParameters,
    base: &ModulatorConfig,
    input: &Input,
    fcks: &[f64],
    seeds: &[u64],
    settings: &ResolutionSettings,
) -> Result<Vec<SweepRow>> {
    if seeds.is_empty() {
        return Err(Error::Analysis("sweep needs at least one seed".into()));
    }
    let jobs: Vec<(f64, u64)> = fcks
        .iter()
        .flat_map(|&f| seeds.iter().map(move |&s| (f, s)))
        .collect();
    let res = jobs
        .par_iter()
        .map(|&(f_ck, seed)| {
            let cfg = ModulatorConfig { f_ck, seed, ..base.clone() };
            analyze_run(sensor, &cfg, input, settings, None).map(|r| r.metrics.rms_noise)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(fcks
        .iter()
        .zip(res.chunks(seeds.len()))
        .map(|(&f_ck, r)| SweepRow {
            f_ck,
            resolution: r.iter().sum::<f64>() / r.len() as f64,
            stddev: sample_std(r),
            n_seeds: r.len(),
        })
        .collect())
}

/// Least-squares slope of 20·log10(resolution) against log2(f_ck), in dB
/// per octave.
pub fn slope_db_per_octave(rows: &[SweepRow]) -> Result<f64> {
    if rows.len() < 2 {
        return Err(Error::Analysis("slope needs at least two clocks".into()));
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.f_ck.log2(), 20.0 * r.resolution.log10()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
