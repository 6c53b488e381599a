//! Spectra, transfer functions and resolution metrics of bit-streams.

pub mod csv;
mod measure;
mod spectrum;
mod stf;
mod sweep;
mod transfer;

pub use measure::{
    analyze_run, band_metrics, band_spectrum, tone_of, BandMeter, BandMetrics, Cic3, ResolutionSettings,
    RunAnalysis,
};
pub use spectrum::{
    band_rms, harmonic_distortion, psd, psd_samples, tone_exclusions, Exclusion, Spectrum,
    WelchAccumulator, WelchConfig, Window,
};
pub use stf::{cutoff_3db, log_grid, stf_gain, stf_measure, StfPoint, StfSettings};
pub use sweep::{octave_grid, resolution_vs_fck, slope_db_per_octave, SweepRow};
pub use transfer::{ntf_corner, ntf_crossover, ntf_magnitude, quantization_noise_density, NtfKind};
