//! Noise transfer of the leaky (thermal) and ideal loops: analytic |NTF|
//! and third-octave comparison with dithered noise-only bit-streams.
//!
//! ```text
//! cargo run --release --example noise_transfer
//! ```

use thermal_sd::analysis::{ntf_corner, ntf_crossover, ntf_magnitude, NtfKind};
use thermal_sd::config::ExperimentConfig;
use thermal_sd::experiments::ntf_figure;

fn main() -> thermal_sd::Result<()> {
    let cfg = ExperimentConfig::default();
    let f_ck = cfg.ntf_f_ck;
    let tau_d = cfg.sensor.bridge.tau_d;
    let thermal = NtfKind::Thermal { tau_d };

    println!("f_ck = {f_ck} Hz, tau_D = {tau_d} s, pole {:.6}", thermal.pole(f_ck));
    println!("thermal corner {:.1} Hz, curves cross at {:.0} Hz\n", ntf_corner(f_ck, tau_d), ntf_crossover(f_ck, tau_d));
    println!("{:>10} {:>12} {:>12}", "f (Hz)", "ideal dB", "thermal dB");
    for f in [0.0, 1.0, 10.0, 48.0, 100.0, 1e3, 1e4, f_ck / 2.0] {
        let db = |k| 20.0 * f64::log10(ntf_magnitude(f, f_ck, k));
        println!("{f:>10.0} {:>12.1} {:>12.1}", db(NtfKind::Ideal), db(thermal));
    }

    let fig = ntf_figure(&cfg)?;
    for (name, fit) in ["thermal", "ideal"].iter().zip(&fig.fits) {
        println!("\n{name}: level offset {:+.2} dB, shape error {:.2} dB", fit.offset_db, fit.shape_error_db);
        for (c, r) in fit.centres.iter().zip(&fit.ratio_db).step_by(3) {
            println!("  {c:>8.0} Hz  {:+.2} dB", r - fit.offset_db);
        }
    }
    Ok(())
}
