//! Closed-loop spectrum of a 16 Hz, 1 g tone at 131 kHz for both loop
//! filters: in-band resolution, floor above 1.6 kHz and third harmonic.
//!
//! ```text
//! cargo run --release --example bitstream_spectrum -- [seconds] [seed]
//! ```

use std::time::Instant;

use thermal_sd::analysis::{analyze_run, quantization_noise_density, ResolutionSettings, WelchConfig};
use thermal_sd::{Input, Integrator, ModulatorConfig, SensorParameters};

fn main() -> thermal_sd::Result<()> {
    let mut args = std::env::args().skip(1);
    let duration: f64 = args.next().map_or(Ok(8.0), |s| s.parse()).expect("seconds");
    let seed: u64 = args.next().map_or(Ok(1), |s| s.parse()).expect("seed");

    let sensor = SensorParameters::prototype();
    let input = Input::Sine { freq: 16.0, amp: 1.0 };
    let settings = ResolutionSettings::default();

    for integrator in [Integrator::Thermal, Integrator::Ideal] {
        let cfg = ModulatorConfig { integrator, duration, seed, ..Default::default() };
        let t0 = Instant::now();
        let run = analyze_run(&sensor, &cfg, &input, &settings, Some(WelchConfig::for_bin_width(cfg.f_ck, 0.5)))?;
        let elapsed = t0.elapsed().as_secs_f64();
        let full = run.full_spectrum.as_ref().expect("requested");
        let floor = full.band_density(1.6e3, cfg.f_ck / 2.0, &[])?;
        let m = run.metrics;
        println!("{integrator} loop");
        println!("  resolution 1-20 Hz   {:.3} mg", m.rms_noise * 1e3);
        println!("  tone                 {:.4} g rms", m.signal_rms);
        println!("  HD3                  {:.2e}", m.hd3_ratio.unwrap_or(f64::NAN));
        println!("  floor 1.6k-f_ck/2    {:.2} mg/sqrt(Hz)", floor * 1e3);
        println!("  white estimate       {:.2} mg/sqrt(Hz)", quantization_noise_density(m.signal_rms, cfg.f_ck, cfg.full_scale) * 1e3);
        println!("  mean bit             {:.2e}", run.summary.mean());
        println!("  {:.1} Msteps/s", cfg.n_samples() as f64 / elapsed / 1e6);
    }
    Ok(())
}
