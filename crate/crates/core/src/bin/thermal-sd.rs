//! Command-line runner. Exit codes: 0 success, 1 configuration error,
//! 2 runtime error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use thermal_sd::analysis::{band_metrics, band_spectrum, tone_of, BandMeter, BandMetrics, Spectrum};
use thermal_sd::bitstream::PackedWriter;
use thermal_sd::config::{ExperimentConfig, Figure};
use thermal_sd::experiments::{operating_point_report, run_figure, sweep_at, write_atomic};
use thermal_sd::modulator::{run_streaming, RunSummary};
use thermal_sd::{analysis, simulate, Error, Input, Integrator};

const DEFAULTS_NOTE: &str = "\
Defaults reproduce the prototype operating point: 42 mW heater at 720 K, \
detectors at 423 K, K_MEMS = 1.53 K/g, 50 kOhm detectors with TCR 900 ppm/K, \
R_th = 10^4 K/W and tau_D = 3.3 ms, 131 kHz clock, +/-2 g full scale, \
16 Hz / 1 g test tone, resolution over 1-20 Hz.";

#[derive(Parser, Debug)]
#[command(name = "thermal-sd", version, about = "Convective accelerometer with an electro-thermal sigma-delta loop")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` config file; see `thermal-sd --help` for the keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed of single runs, first seed of `--seeds` [default: 1].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of consecutive seeds for multi-seed figures [default: 5].
    #[arg(long, global = true, value_name = "N")]
    seeds: Option<u64>,
    /// Output directory [default: out].
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Modulator clock in Hz [default: 131000].
    #[arg(long, global = true, value_name = "HZ")]
    fck: Option<f64>,
    /// Full scale in g; sets the feedback duty cycle [default: 2, i.e. duty 0.34].
    #[arg(long, global = true, value_name = "G")]
    full_scale: Option<f64>,
    /// Disable the bridge Johnson noise at the comparator.
    #[arg(long, global = true)]
    no_noise: bool,
    /// Loop filter [default: thermal, the detector lag].
    #[arg(long, global = true, value_parser = ["thermal", "ideal"])]
    integrator: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Print temperatures, sensitivities, noise and intrinsic resolution of
    /// both bridge variants (defaults: 1.55 mV/g and 3.1 mV/g).
    OperatingPoint,
    /// Write the data behind a figure and print its headline metric.
    ///
    /// ntf7: analytic |NTF| of both loops plus noise-only spectra.
    /// spectrum8: 16 Hz / 1 g tone at 131 kHz, resolution over 1-20 Hz.
    /// stf9: signal transfer of both loops, -3 dB points.
    /// sweep10: resolution at 131 kHz * 2^k, k = -3..6, and its slope.
    Figure {
        /// ntf7 | spectrum8 | stf9 | sweep10 [default: the config's `experiment`, spectrum8].
        name: Option<String>,
    },
    /// Simulate one run, write its bit-stream and print metrics.
    Simulate {
        /// dc:<g> | sine:<hz>,<g> | file:<csv of time,accel> [default: sine:16,1].
        #[arg(long)]
        input: Option<String>,
        /// Bit-stream encoding.
        #[arg(long, default_value = "packed", value_parser = ["packed", "text"])]
        format: String,
    },
    /// Resolution against clock frequency, written as sweep.csv.
    Sweep {
        /// Comma-separated clocks in Hz [default: f_ck * 2^k, k = -3..6].
        #[arg(long, value_delimiter = ',', value_name = "HZ,...")]
        fcks: Option<Vec<f64>>,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter { .. } | Error::ModelInvalid(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let keys = format!("{DEFAULTS_NOTE}\n\nConfig keys and defaults:\n\n{}", ExperimentConfig::default().dump());
    let matches = match Cli::command().after_long_help(keys).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn load(c: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    let m = &mut cfg.modulator;
    if let Some(s) = c.seed {
        m.seed = s;
    }
    if let Some(n) = c.seeds {
        if n == 0 {
            return Err(Failure::Config("--seeds must be at least 1".into()));
        }
        cfg.seeds = (m.seed..m.seed + n).collect();
    } else if c.seed.is_some() {
        cfg.seeds = vec![m.seed];
    }
    if let Some(f) = c.fck {
        m.f_ck = f;
    }
    if let Some(fs) = c.full_scale {
        m.full_scale = fs;
    }
    if c.no_noise {
        m.noise_enabled = false;
    }
    if let Some(i) = &c.integrator {
        m.integrator = i.parse::<Integrator>()?;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load(&cli.common)?;
    match cli.cmd {
        Cmd::OperatingPoint => print!("{}", operating_point_report(&cfg.sensor)?),
        Cmd::Figure { name } => {
            let figure = match name {
                Some(n) => n.parse::<Figure>()?,
                None => cfg.experiment,
            };
            let out = run_figure(&cfg, figure)?;
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            println!("{figure}: {}", out.headline);
        }
        Cmd::Simulate { input, format } => {
            let input = match input {
                Some(s) => s.parse::<Input>()?,
                None => cfg.input.clone(),
            };
            cmd_simulate(&cfg, &input, &format)?;
        }
        Cmd::Sweep { fcks } => {
            let fig = match fcks {
                Some(f) => sweep_at(&cfg, &f)?,
                None => thermal_sd::experiments::sweep_figure(&cfg)?,
            };
            fs::create_dir_all(&cfg.out_dir).map_err(Error::from)?;
            let path = cfg.out_dir.join("sweep.csv");
            write_atomic(&path, |w| analysis::csv::write_sweep(w, &fig.rows))?;
            println!("wrote {}", path.display());
            for r in &fig.rows {
                println!("{:>12.0} Hz  {:>9.2} ug  (sd {:.2}, {} seeds)", r.f_ck, r.resolution * 1e6, r.stddev * 1e6, r.n_seeds);
            }
            if let Some(s) = fig.slope_db_per_octave {
                println!("slope {s:.2} dB/octave");
            }
        }
    }
    Ok(())
}

/// Streams above the memory budget go straight to disk and through the
/// band meter; shorter ones are held whole.
fn cmd_simulate(cfg: &ExperimentConfig, input: &Input, format: &str) -> Result<(), Failure> {
    let m = &cfg.modulator;
    fs::create_dir_all(&cfg.out_dir).map_err(Error::from)?;
    let ext = if format == "text" { "txt" } else { "tsdb" };
    let path = cfg.out_dir.join(format!("bitstream_seed{}.{ext}", m.seed));
    let n = m.n_samples();
    let tone = tone_of(input);

    let measure = |sp: Result<Spectrum, Error>| -> Result<Option<BandMetrics>, Failure> {
        match sp {
            Ok(sp) => Ok(Some(band_metrics(&sp, tone, &cfg.resolution)?)),
            Err(Error::Analysis(e)) => {
                eprintln!("warning: no band metrics: {e}");
                Ok(None)
            }
            Err(e) => Err(e.into()),
        }
    };

    let (summary, metrics, streamed): (RunSummary, Option<BandMetrics>, bool) = if n <= cfg.memory_budget_bits {
        let bs = simulate(&cfg.sensor, m, input)?;
        write_atomic(&path, |w| if format == "text" { bs.write_text(w) } else { bs.write_packed(w) })?;
        let metrics = measure(band_spectrum(&bs, &cfg.resolution))?;
        let ones = bs.count_high() as u64;
        let summary = RunSummary {
            n_samples: n,
            feedback1: n - ones,
            feedback2: ones,
            sum_bits: 2 * ones as i64 - n as i64,
            max_abs_delta_t: f64::NAN,
        };
        (summary, metrics, false)
    } else {
        if format == "text" {
            return Err(Failure::Config(format!(
                "{n} bits exceed memory_budget_bits; use the packed format"
            )));
        }
        let mut meter = BandMeter::new(m.f_ck, m.full_scale, &cfg.resolution)?;
        let mut result = Ok(());
        let mut summary = None;
        write_atomic(&path, |w| {
            let mut pw = PackedWriter::new(w, m.f_ck, m.full_scale, n, m.seed)?;
            summary = Some(run_streaming(&cfg.sensor, m, input, |b| {
                meter.push(b);
                if result.is_ok() {
                    result = pw.push(b);
                }
            })?);
            result?;
            pw.finish()?;
            Ok(())
        })?;
        (summary.expect("run completed"), measure(meter.finish())?, true)
    };

    let opt = |v: Option<f64>| v.map_or("null".to_string(), |x| format!("{x:e}"));
    let json = format!(
        "{{\n  \"file\": \"{}\",\n  \"n_samples\": {},\n  \"f_ck_hz\": {},\n  \"seed\": {},\n  \"integrator\": \"{}\",\n  \"streamed\": {},\n  \"mean_bit\": {:e},\n  \"mean_g\": {:e},\n  \"feedback1\": {},\n  \"feedback2\": {},\n  \"resolution_g\": {},\n  \"signal_rms_g\": {},\n  \"hd3\": {}\n}}\n",
        path.display(),
        summary.n_samples,
        m.f_ck,
        m.seed,
        m.integrator,
        streamed,
        summary.mean(),
        summary.mean() * m.full_scale,
        summary.feedback1,
        summary.feedback2,
        opt(metrics.map(|m| m.rms_noise)),
        opt(metrics.map(|m| m.signal_rms)),
        opt(metrics.and_then(|m| m.hd3_ratio)),
    );
    let mpath = cfg.out_dir.join(format!("metrics_seed{}.json", m.seed));
    write_atomic(&mpath, |w| Ok(w.write_all(json.as_bytes())?))?;
    print!("{json}");
    Ok(())
}
