//! In-band resolution against clock frequency and its slope in dB/octave.
//!
//! ```text
//! cargo run --release --example clock_sweep -- [k_max] [seeds]
//! ```

use thermal_sd::analysis::{octave_grid, resolution_vs_fck, slope_db_per_octave, ResolutionSettings};
use thermal_sd::{Input, ModulatorConfig, SensorParameters};

fn main() -> thermal_sd::Result<()> {
    let mut args = std::env::args().skip(1);
    let k_max: i32 = args.next().map_or(3, |s| s.parse().expect("k_max"));
    let n_seeds: u64 = args.next().map_or(3, |s| s.parse().expect("seeds"));

    let sensor = SensorParameters::prototype();
    let base = ModulatorConfig { duration: 4.0, ..Default::default() };
    let fcks = octave_grid(base.f_ck, -3, k_max);
    let seeds: Vec<u64> = (1..=n_seeds).collect();
    let rows = resolution_vs_fck(
        &sensor,
        &base,
        &Input::Sine { freq: 16.0, amp: 1.0 },
        &fcks,
        &seeds,
        &ResolutionSettings::default(),
    )?;
    for r in &rows {
        println!("{:>10.0} Hz  {:>8.1} ug  sd {:>6.1}", r.f_ck, r.resolution * 1e6, r.stddev * 1e6);
    }
    println!("slope {:.2} dB/octave", slope_db_per_octave(&rows)?);
    Ok(())
}
