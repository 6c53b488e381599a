//! Figure-level experiments driven by an [`ExperimentConfig`].

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{
    self, analyze_run, csv, cutoff_3db, log_grid, ntf_magnitude, octave_grid,
    quantization_noise_density, resolution_vs_fck, slope_db_per_octave, stf_measure, NtfKind,
    Spectrum, StfPoint, StfSettings, SweepRow, WelchAccumulator, WelchConfig,
};
use crate::config::{ExperimentConfig, Figure};
use crate::error::{Error, Result};
use crate::input::Input;
use crate::modulator::{run_streaming, Integrator, Modulator, ModulatorConfig};
use crate::physics::{BridgeVariant, SensorParameters};

/// Writes `path` through a sibling temporary file and a rename, so readers
/// never see a partial file.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    let result = (|| {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        body(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Operating-point report for both bridge variants.
pub fn operating_point_report(sensor: &SensorParameters) -> Result<String> {
    let mut out = String::new();
    for variant in [BridgeVariant::TwoResistor, BridgeVariant::FourResistor] {
        let op = sensor.operating_point(variant)?;
        let name = match variant {
            BridgeVariant::TwoResistor => "2-resistor bridge",
            BridgeVariant::FourResistor => "4-resistor bridge",
        };
        let res = op.intrinsic_resolution(1.0, 20.0)?;
        let _ = writeln!(out, "{name}");
        let _ = writeln!(out, "  heater temperature      {:.1} K", op.t_heater);
        let _ = writeln!(out, "  common-mode temperature {:.1} K", op.t_cm);
        let _ = writeln!(out, "  K_MEMS                  {:.4} K/g", op.k_mems);
        let _ = writeln!(out, "  S_wheat                 {:.4} mV/K", op.s_wheat * 1e3);
        let _ = writeln!(out, "  sensitivity             {:.4} mV/g", op.sensitivity * 1e3);
        let _ = writeln!(out, "  noise density           {:.2} nV/sqrt(Hz)", op.noise_density * 1e9);
        if res.is_finite() {
            let _ = writeln!(out, "  resolution 1-20 Hz      {:.1} ug rms", res * 1e6);
        } else {
            let _ = writeln!(out, "  resolution 1-20 Hz      unbounded (zero sensitivity)");
        }
    }
    Ok(out)
}

/// Analytic and simulated noise transfer of both loops.
#[derive(Debug, Clone)]
pub struct NtfFigure {
    pub f_ck: f64,
    pub freqs: Vec<f64>,
    pub ideal: Vec<f64>,
    pub thermal: Vec<f64>,
    /// Noise-only bit-stream spectra (thermal, ideal).
    pub simulated: [Spectrum; 2],
    /// Band-by-band comparison of each simulated spectrum with |NTF|²
    /// (thermal, ideal).
    pub fits: [NtfFit; 2],
}

/// Simulated versus analytic noise shape in third-octave bands.
#[derive(Debug, Clone)]
pub struct NtfFit {
    /// Band centres (Hz).
    pub centres: Vec<f64>,
    /// 10·log10(simulated / (|NTF|² · FS²/3 / (f_ck/2))) per band (dB).
    pub ratio_db: Vec<f64>,
    /// Mean of `ratio_db`: the level offset to the white quantizer model.
    pub offset_db: f64,
    /// Largest |ratio − offset|: the shape error (dB).
    pub shape_error_db: f64,
}

/// Compares `sp` with the white quantizer shaped by the analytic NTF in
/// third-octave bands over [f_low, f_high].
pub fn ntf_fit(sp: &Spectrum, kind: NtfKind, f_ck: f64, full_scale: f64, f_low: f64, f_high: f64) -> Result<NtfFit> {
    let white = full_scale * full_scale / 3.0 / (0.5 * f_ck);
    let step = 2f64.powf(1.0 / 3.0);
    let (mut centres, mut ratio_db) = (Vec::new(), Vec::new());
    let mut lo = f_low;
    while lo * step <= f_high * (1.0 + 1e-9) {
        let hi = lo * step;
        let (mut sim, mut model, mut n) = (0.0, 0.0, 0usize);
        for k in 0..sp.psd.len() {
            let f = sp.freq(k);
            if f >= lo && f < hi {
                sim += sp.psd[k];
                model += ntf_magnitude(f, f_ck, kind).powi(2) * white;
                n += 1;
            }
        }
        if n > 0 {
            centres.push((lo * hi).sqrt());
            ratio_db.push(10.0 * (sim / model).log10());
        }
        lo = hi;
    }
    if ratio_db.is_empty() {
        return Err(Error::Analysis("no bins in the comparison band".into()));
    }
    let offset_db = ratio_db.iter().sum::<f64>() / ratio_db.len() as f64;
    let shape_error_db = ratio_db.iter().fold(0.0f64, |m, r| m.max((r - offset_db).abs()));
    Ok(NtfFit { centres, ratio_db, offset_db, shape_error_db })
}

/// Noise-only run: small DC input, comparator noise replaced by a dither of
/// `cfg.ntf_dither` feedback quanta RMS.
pub fn noise_only_spectrum(cfg: &ExperimentConfig, integrator: Integrator) -> Result<Spectrum> {
    let mut m = ModulatorConfig {
        f_ck: cfg.ntf_f_ck,
        duration: cfg.ntf_duration,
        integrator,
        noise_enabled: true,
        ..cfg.modulator.clone()
    };
    let probe = Modulator::new(&cfg.sensor, &m)?;
    let sigma = cfg.ntf_dither * probe.feedback_step() * probe.operating_point().s_wheat;
    m.noise_density = Some(sigma / cfg.sensor.noise_bandwidth.sqrt());
    m.noise_folding = crate::modulator::NoiseFolding::Aliased;
    let scale = m.full_scale;
    let mut acc = WelchAccumulator::new(m.f_ck, WelchConfig::for_bin_width(m.f_ck, 2.0))?;
    run_streaming(&cfg.sensor, &m, &Input::Dc(cfg.ntf_input), |b| acc.push(f64::from(b) * scale))?;
    acc.finish()
}

pub fn ntf_figure(cfg: &ExperimentConfig) -> Result<NtfFigure> {
    let f_ck = cfg.ntf_f_ck;
    let tau_d = cfg.sensor.bridge.tau_d;
    let freqs = log_grid(1.0, f_ck / 2.0, 50);
    let ideal = freqs.iter().map(|&f| ntf_magnitude(f, f_ck, NtfKind::Ideal)).collect();
    let thermal = freqs
        .iter()
        .map(|&f| ntf_magnitude(f, f_ck, NtfKind::Thermal { tau_d }))
        .collect();
    let loops = [Integrator::Thermal, Integrator::Ideal];
    let spectra = loops
        .par_iter()
        .map(|&i| noise_only_spectrum(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    let fits = loops
        .iter()
        .zip(&spectra)
        .map(|(&i, s)| {
            ntf_fit(s, NtfKind::for_integrator(i, tau_d), f_ck, cfg.modulator.full_scale, 48.0, f_ck / 4.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let [thermal_sp, ideal_sp]: [Spectrum; 2] = spectra.try_into().expect("two loops");
    let [thermal_fit, ideal_fit]: [NtfFit; 2] = fits.try_into().expect("two loops");
    Ok(NtfFigure {
        f_ck,
        freqs,
        ideal,
        thermal,
        simulated: [thermal_sp, ideal_sp],
        fits: [thermal_fit, ideal_fit],
    })
}

/// Figures of one seed of the spectrum experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedMetrics {
    pub seed: u64,
    /// In-band resolution (g rms).
    pub resolution: f64,
    /// Mean density over [1.6 kHz, f_ck/2] (g/√Hz).
    pub floor: f64,
    pub hd3: f64,
    pub signal_rms: f64,
    pub mean_bit: f64,
}

#[derive(Debug, Clone)]
pub struct SpectrumFigure {
    pub integrator: Integrator,
    pub per_seed: Vec<SeedMetrics>,
    /// Full-rate spectrum of the first seed.
    pub spectrum: Spectrum,
    /// White-quantizer floor for the measured tone amplitude.
    pub predicted_floor: f64,
}

impl SpectrumFigure {
    fn mean(&self, f: impl Fn(&SeedMetrics) -> f64) -> f64 {
        self.per_seed.iter().map(f).sum::<f64>() / self.per_seed.len() as f64
    }
    pub fn resolution(&self) -> f64 {
        self.mean(|m| m.resolution)
    }
    pub fn floor(&self) -> f64 {
        self.mean(|m| m.floor)
    }
    pub fn hd3(&self) -> f64 {
        self.mean(|m| m.hd3)
    }
    pub fn signal_rms(&self) -> f64 {
        self.mean(|m| m.signal_rms)
    }
}

/// Spectrum of the configured input for the configured loop, one run per
/// seed. Runs are analysed on the fly, so their length is not limited by
/// memory.
pub fn spectrum_figure(cfg: &ExperimentConfig) -> Result<SpectrumFigure> {
    let m = &cfg.modulator;
    let bin = cfg.spectrum_bin_width.max(m.f_ck / (1 << 20) as f64);
    let full = WelchConfig::for_bin_width(m.f_ck, bin);
    let floor_band = (1.6e3_f64.min(m.f_ck / 4.0), m.f_ck / 2.0);
    let runs = cfg
        .seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| {
            let run = analyze_run(&cfg.sensor, &m.with_seed(seed), &cfg.input, &cfg.resolution, Some(full))?;
            let sp = run.full_spectrum.expect("requested");
            let floor = sp.band_density(floor_band.0, floor_band.1, &[])?;
            let metrics = SeedMetrics {
                seed,
                resolution: run.metrics.rms_noise,
                floor,
                hd3: run.metrics.hd3_ratio.unwrap_or(0.0),
                signal_rms: run.metrics.signal_rms,
                mean_bit: run.summary.mean(),
            };
            Ok((metrics, (i == 0).then_some(sp)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut spectrum = None;
    let mut per_seed = Vec::with_capacity(runs.len());
    for (metrics, sp) in runs {
        per_seed.push(metrics);
        spectrum = spectrum.or(sp);
    }
    let fig = SpectrumFigure {
        integrator: m.integrator,
        per_seed,
        spectrum: spectrum.ok_or_else(|| Error::Config("`seeds` is empty".into()))?,
        predicted_floor: 0.0,
    };
    let predicted_floor = quantization_noise_density(fig.signal_rms(), m.f_ck, m.full_scale);
    Ok(SpectrumFigure { predicted_floor, ..fig })
}

#[derive(Debug, Clone)]
pub struct StfFigure {
    pub thermal: Vec<StfPoint>,
    pub ideal: Vec<StfPoint>,
}

impl StfFigure {
    pub fn cutoffs(&self) -> (Option<f64>, Option<f64>) {
        (cutoff_3db(&self.thermal), cutoff_3db(&self.ideal))
    }

    /// Ideal minus thermal gain at the lowest frequency (dB).
    pub fn low_frequency_deficit_db(&self) -> f64 {
        self.ideal[0].gain_db - self.thermal[0].gain_db
    }
}

pub fn stf_figure(cfg: &ExperimentConfig) -> Result<StfFigure> {
    let freqs = log_grid(cfg.stf_f_min, cfg.stf_f_max.min(0.45 * cfg.modulator.f_ck), cfg.stf_points_per_decade);
    let settings = StfSettings {
        min_duration: cfg.stf_min_duration,
        ..Default::default()
    };
    let run = |i: Integrator| {
        stf_measure(
            &cfg.sensor,
            &cfg.modulator.with_integrator(i),
            &freqs,
            cfg.stf_amplitude,
            &cfg.seeds,
            &settings,
        )
    };
    Ok(StfFigure {
        thermal: run(Integrator::Thermal)?,
        ideal: run(Integrator::Ideal)?,
    })
}

#[derive(Debug, Clone)]
pub struct SweepFigure {
    pub rows: Vec<SweepRow>,
    pub slope_db_per_octave: Option<f64>,
}

/// Resolution at f_ck · 2^k for the configured k range.
pub fn sweep_figure(cfg: &ExperimentConfig) -> Result<SweepFigure> {
    let fcks = octave_grid(cfg.modulator.f_ck, cfg.sweep_k_min, cfg.sweep_k_max);
    sweep_at(cfg, &fcks)
}

pub fn sweep_at(cfg: &ExperimentConfig, fcks: &[f64]) -> Result<SweepFigure> {
    let rows = resolution_vs_fck(&cfg.sensor, &cfg.modulator, &cfg.input, fcks, &cfg.seeds, &cfg.resolution)?;
    let slope_db_per_octave = slope_db_per_octave(&rows).ok();
    Ok(SweepFigure { rows, slope_db_per_octave })
}

/// Files written and the one-line headline of a figure run.
#[derive(Debug, Clone)]
pub struct FigureOutput {
    pub files: Vec<PathBuf>,
    pub headline: String,
}

fn emit(out: &mut Vec<PathBuf>, dir: &Path, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let path = dir.join(name);
    write_atomic(&path, body)?;
    out.push(path);
    Ok(())
}

/// Runs `figure` and writes its CSV files under `cfg.out_dir`.
pub fn run_figure(cfg: &ExperimentConfig, figure: Figure) -> Result<FigureOutput> {
    let dir = cfg.out_dir.as_path();
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let headline = match figure {
        Figure::Ntf7 => {
            let fig = ntf_figure(cfg)?;
            emit(&mut files, dir, "ntf7_analytic.csv", |w| {
                csv::write_columns(w, &["ideal", "thermal"], &fig.freqs, &[fig.ideal.clone(), fig.thermal.clone()])
            })?;
            emit(&mut files, dir, "ntf7_thermal_psd.csv", |w| csv::write_spectrum(w, &fig.simulated[0]))?;
            emit(&mut files, dir, "ntf7_ideal_psd.csv", |w| csv::write_spectrum(w, &fig.simulated[1]))?;
            let dc = ntf_magnitude(0.0, fig.f_ck, NtfKind::Thermal { tau_d: cfg.sensor.bridge.tau_d });
            format!(
                "thermal NTF at DC {:.3e}, corner {:.1} Hz; simulated shape error {:.2} dB (thermal), {:.2} dB (ideal)",
                dc,
                analysis::ntf_corner(fig.f_ck, cfg.sensor.bridge.tau_d),
                fig.fits[0].shape_error_db,
                fig.fits[1].shape_error_db
            )
        }
        Figure::Spectrum8 => {
            let fig = spectrum_figure(cfg)?;
            let name = format!("spectrum8_{}.csv", fig.integrator);
            emit(&mut files, dir, &name, |w| csv::write_spectrum(w, &fig.spectrum))?;
            format!(
                "{} loop: resolution {:.3} mg over {}-{} Hz, floor {:.2} mg/sqrt(Hz) (white estimate {:.2}), HD3 {:.2e}, {} seeds",
                fig.integrator,
                fig.resolution() * 1e3,
                cfg.resolution.band.0,
                cfg.resolution.band.1,
                fig.floor() * 1e3,
                fig.predicted_floor * 1e3,
                fig.hd3(),
                fig.per_seed.len()
            )
        }
        Figure::Stf9 => {
            let fig = stf_figure(cfg)?;
            emit(&mut files, dir, "stf9_thermal.csv", |w| csv::write_stf(w, &fig.thermal))?;
            emit(&mut files, dir, "stf9_ideal.csv", |w| csv::write_stf(w, &fig.ideal))?;
            let (t, i) = fig.cutoffs();
            let hz = |x: Option<f64>| x.map_or("none".into(), |f| format!("{f:.0} Hz"));
            format!(
                "-3 dB at {} (thermal), {} (ideal); thermal low-frequency gain {:.2} dB below ideal",
                hz(t),
                hz(i),
                fig.low_frequency_deficit_db()
            )
        }
        Figure::Sweep10 => {
            let fig = sweep_figure(cfg)?;
            emit(&mut files, dir, "sweep10.csv", |w| csv::write_sweep(w, &fig.rows))?;
            let last = fig.rows.last().expect("non-empty grid");
            format!(
                "slope {} dB/octave; {:.1} ug at {:.4} MHz",
                fig.slope_db_per_octave.map_or("n/a".into(), |s| format!("{s:.2}")),
                last.resolution * 1e6,
                last.f_ck / 1e6
            )
        }
    };
    Ok(FigureOutput { files, headline })
}
