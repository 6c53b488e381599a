//! One clock period at a time: comparator decision, switch command and the
//! detector temperature for a step of acceleration.
//!
//! ```text
//! cargo run --example loop_internals
//! ```

use thermal_sd::dynamics::FirstOrderLag;
use thermal_sd::modulator::{feedback_power, FeedbackCommand};
use thermal_sd::{Modulator, ModulatorConfig, SensorParameters};

fn main() -> thermal_sd::Result<()> {
    let sensor = SensorParameters::prototype();
    let cfg = ModulatorConfig { noise_enabled: false, fluid_lag: false, ..Default::default() };
    let mut m = Modulator::new(&sensor, &cfg)?;
    let op = *m.operating_point();

    println!("switch table (W):");
    for cmd in [FeedbackCommand::None, FeedbackCommand::Feedback1, FeedbackCommand::Feedback2] {
        let (p1, p2) = feedback_power(cmd, op.p0, op.p_max);
        println!("  {cmd:?}: bridge 1 {p1:.3e}, bridge 2 {p2:.3e}");
    }
    let lag = FirstOrderLag::new(sensor.bridge.r_th_detector, sensor.bridge.tau_d)?;
    let d = lag.discretize(cfg.f_ck)?;
    println!("detector lag: corner {:.1} Hz, pole {:.6}, DC gain {:.0} K/W", lag.cutoff_frequency(), d.pole, d.dc_gain());
    println!("duty {:.3}, feedback quantum {:.3e} K per clock\n", m.duty(), m.feedback_step());

    println!("{:>6} {:>5} {:>12} {:>12}", "n", "bit", "dT (mK)", "bridge (uV)");
    let mut ones = 0;
    for n in 0..2000 {
        let a = if n < 1000 { 0.0 } else { 1.0 };
        let b = m.step(a);
        if n >= 1000 && b > 0 {
            ones += 1;
        }
        if n % 200 == 0 || (995..1005).contains(&n) {
            println!("{n:>6} {b:>5} {:>12.4} {:>12.3}", m.detector_delta_t() * 1e3, m.bridge_output() * 1e6);
        }
    }
    println!("\nafter the 1 g step: {ones} of 1000 bits high (expect about {:.0})", 1000.0 * (1.0 + 1.0 / cfg.full_scale) / 2.0);
    Ok(())
}
