//! Signal transfer of both loops from coherent demodulation of the
//! bit-stream, with the -3 dB points.
//!
//! ```text
//! cargo run --release --example signal_transfer
//! ```

use thermal_sd::analysis::{cutoff_3db, log_grid, stf_measure, StfSettings};
use thermal_sd::{Integrator, ModulatorConfig, SensorParameters};

fn main() -> thermal_sd::Result<()> {
    let sensor = SensorParameters::prototype();
    let freqs = log_grid(10.0, 10e3, 5);
    let seeds = [1, 2, 3];
    let mut curves = Vec::new();
    for integrator in [Integrator::Thermal, Integrator::Ideal] {
        let cfg = ModulatorConfig { integrator, ..Default::default() };
        curves.push(stf_measure(&sensor, &cfg, &freqs, 1.0, &seeds, &StfSettings::default())?);
    }
    println!("{:>10} {:>12} {:>12}", "f (Hz)", "thermal dB", "ideal dB");
    for (t, i) in curves[0].iter().zip(&curves[1]) {
        println!("{:>10.1} {:>12.2} {:>12.2}", t.freq, t.gain_db, i.gain_db);
    }
    let hz = |c: Option<f64>| c.map_or("-".into(), |f| format!("{f:.0} Hz"));
    println!("\n-3 dB: thermal {}, ideal {}", hz(cutoff_3db(&curves[0])), hz(cutoff_3db(&curves[1])));
    println!("low-frequency deficit {:.2} dB", curves[1][0].gain_db - curves[0][0].gain_db);
    Ok(())
}
