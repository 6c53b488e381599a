//! Static sensor model: heater point, conduction profile, convective
//! sensitivity and the read-out figures of both bridge variants.
//!
//! ```text
//! cargo run --example operating_point -- [heater_power_w]
//! ```

use thermal_sd::experiments::operating_point_report;
use thermal_sd::physics::{calibrate_gamma, conduction_temperature, CommonMode};
use thermal_sd::SensorParameters;

fn main() -> thermal_sd::Result<()> {
    let mut sensor = SensorParameters::prototype();
    if let Some(p) = std::env::args().nth(1) {
        sensor.heater_power = p.parse().expect("heater power in W");
    }
    print!("{}", operating_point_report(&sensor)?);

    // Conduction profile between heater and cavity wall.
    let op = sensor.operating_point(Default::default())?;
    let b = sensor.bridge;
    println!("\nconduction profile (gamma = {})", b.gamma);
    for k in 0..=8 {
        let r = b.r1 * (b.r2 / b.r1).powf(k as f64 / 8.0);
        let t = conduction_temperature(r, op.t_heater, op.t_ambient, &b)?;
        println!("  r = {:8.1} um   T = {:6.1} K", r * 1e6, t);
    }

    // Nonlinear conduction: place the detectors at mid-radius and solve the
    // γ that still puts them at the common-mode temperature.
    let mid = (b.r1 * b.r2).sqrt();
    let moved = thermal_sd::physics::BridgeParameters { r_detector: mid, ..b };
    let gamma = calibrate_gamma(op.t_heater, op.t_ambient, op.t_cm, &moved)?;
    let calibrated = SensorParameters {
        bridge: thermal_sd::physics::BridgeParameters { gamma, ..moved },
        common_mode: CommonMode::Conduction,
        ..sensor
    };
    let op2 = calibrated.operating_point(Default::default())?;
    println!(
        "\ndetectors at r = {:.1} um need gamma = {:.4e} 1/K; T_CM = {:.3} K, sensitivity {:.4} mV/g",
        mid * 1e6,
        gamma,
        op2.t_cm,
        op2.sensitivity * 1e3
    );
    Ok(())
}
