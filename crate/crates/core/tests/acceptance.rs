//! Acceptance run: one PASS/FAIL line per criterion, defaults throughout,
//! stochastic figures averaged over five seeds.

use std::process::ExitCode;
use std::time::Instant;

use rustfft::num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use thermal_sd::analysis::{
    ntf_magnitude, psd_samples, quantization_noise_density, NtfKind, WelchConfig,
};
use thermal_sd::config::ExperimentConfig;
use thermal_sd::dynamics::FirstOrderLag;
use thermal_sd::experiments::{ntf_figure, spectrum_figure, stf_figure, sweep_figure, SpectrumFigure};
use thermal_sd::modulator::{feedback_power, run_streaming, FeedbackCommand};
use thermal_sd::physics::{conduction_rhs, conduction_temperature};
use thermal_sd::{simulate, BridgeVariant, Input, Integrator, Modulator, ModulatorConfig, SensorParameters};

struct Report {
    failed: Vec<u32>,
}

impl Report {
    fn check(&mut self, n: u32, name: &str, t0: Instant, checks: &[(bool, String)]) {
        let ok = checks.iter().all(|(p, _)| *p);
        if !ok {
            self.failed.push(n);
        }
        let detail: Vec<&str> = checks.iter().map(|(_, d)| d.as_str()).collect();
        println!(
            "criterion {n} {name}: {} ({:.1} s) {}",
            if ok { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64(),
            detail.join("; ")
        );
    }
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x / target - 1.0).abs() <= rel
}

fn operating_point(r: &mut Report) {
    let t0 = Instant::now();
    let s = SensorParameters::prototype();
    let two = s.operating_point(BridgeVariant::TwoResistor).unwrap();
    let four = s.operating_point(BridgeVariant::FourResistor).unwrap();
    let res2 = two.intrinsic_resolution(1.0, 20.0).unwrap();
    let res4 = four.intrinsic_resolution(1.0, 20.0).unwrap();
    r.check(1, "operating point", t0, &[
        (within(two.sensitivity, 1.55e-3, 0.03), format!("S2 {:.4} mV/g", two.sensitivity * 1e3)),
        (within(four.sensitivity, 3.1e-3, 0.03), format!("S4 {:.4} mV/g", four.sensitivity * 1e3)),
        (within(two.noise_density, 34e-9, 0.02), format!("Johnson {:.2} nV/rtHz", two.noise_density * 1e9)),
        (within(res2, 98e-6, 0.05), format!("res2 {:.1} ug", res2 * 1e6)),
        (within(res4, 49e-6, 0.05), format!("res4 {:.1} ug", res4 * 1e6)),
    ]);
}

fn noise_transfer(r: &mut Report, cfg: &ExperimentConfig) {
    let t0 = Instant::now();
    let f_ck = cfg.modulator.f_ck;
    let tau_d = cfg.sensor.bridge.tau_d;
    let thermal = NtfKind::Thermal { tau_d };
    let a_z = Modulator::new(&cfg.sensor, &cfg.modulator).unwrap().loop_filter().pole;
    let dc = ntf_magnitude(0.0, f_ck, thermal);
    let (mut flat, mut exact) = (true, 0.0f64);
    let mut f = 0.0;
    while f <= 48.0 {
        let m = ntf_magnitude(f, f_ck, thermal);
        flat &= (20.0 * (m / dc).log10()).abs() <= 3.0;
        let z = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f / f_ck);
        exact = exact.max((m - (1.0 - a_z * z).norm()).abs() / m);
        f += 0.25;
    }
    let fig = ntf_figure(cfg).unwrap();
    let [th, id] = &fig.fits;
    r.check(2, "noise transfer", t0, &[
        (flat, format!("thermal flat to 48 Hz (DC {dc:.3e})")),
        (exact <= 1e-12, format!("|1 - a_z e^-jw| rel err {exact:.1e}")),
        (ntf_magnitude(0.0, f_ck, NtfKind::Ideal) == 0.0, "ideal 0 at DC".into()),
        (th.shape_error_db <= 3.0, format!("thermal shape {:.2} dB", th.shape_error_db)),
        (id.shape_error_db <= 3.0, format!("ideal shape {:.2} dB", id.shape_error_db)),
    ]);
}

fn spectra(cfg: &ExperimentConfig) -> (SpectrumFigure, SpectrumFigure) {
    let run = |i: Integrator| {
        let mut c = cfg.clone();
        c.modulator.integrator = i;
        spectrum_figure(&c).unwrap()
    };
    (run(Integrator::Thermal), run(Integrator::Ideal))
}

fn resolution(r: &mut Report, th: &SpectrumFigure, id: &SpectrumFigure, t0: Instant, duration: f64) {
    let worse = th.per_seed.iter().zip(&id.per_seed).all(|(a, b)| a.seed == b.seed && a.resolution > b.resolution);
    r.check(3, "bit-stream resolution", t0, &[
        (duration >= 2.0 && th.per_seed.len() >= 5, format!("{} seeds x {duration} s", th.per_seed.len())),
        (within(th.resolution(), 1.48e-3, 0.30), format!("thermal {:.3} mg", th.resolution() * 1e3)),
        (within(id.resolution(), 0.26e-3, 0.30), format!("ideal {:.3} mg", id.resolution() * 1e3)),
        (worse, "thermal worse on every seed".into()),
    ]);
}

fn floor(r: &mut Report, th: &SpectrumFigure) {
    let t0 = Instant::now();
    let predicted = quantization_noise_density(1.0 / 2f64.sqrt(), 131e3, 2.0) * 1e3;
    let four_sig = format!("{predicted:.3}");
    let measured = th.floor() * 1e3;
    r.check(4, "quantization floor", t0, &[
        (four_sig == "7.310", format!("predicted {four_sig} mg/rtHz")),
        ((6.5..=8.5).contains(&measured), format!("measured {measured:.3} mg/rtHz")),
    ]);
}

fn distortion(r: &mut Report, th: &SpectrumFigure, id: &SpectrumFigure) {
    let t0 = Instant::now();
    r.check(5, "distortion", t0, &[
        (th.hd3() < 1e-3, format!("thermal HD3 {:.3e}", th.hd3())),
        (id.hd3() < 1e-3, format!("ideal HD3 {:.3e}", id.hd3())),
    ]);
}

fn signal_transfer(r: &mut Report, cfg: &ExperimentConfig) {
    let t0 = Instant::now();
    let fig = stf_figure(cfg).unwrap();
    let (ct, ci) = fig.cutoffs();
    let band = |c: Option<f64>| c.is_some_and(|c| (1.1e3..=2.1e3).contains(&c));
    let deficit = fig.low_frequency_deficit_db();
    r.check(6, "signal transfer", t0, &[
        (band(ct), format!("thermal -3 dB {:.0} Hz", ct.unwrap_or(f64::NAN))),
        (band(ci), format!("ideal -3 dB {:.0} Hz", ci.unwrap_or(f64::NAN))),
        (deficit > 0.0 && deficit <= 0.5, format!("LF deficit {deficit:.3} dB (reference 0.3 dB)")),
    ]);
}

fn clock_sweep(r: &mut Report, cfg: &ExperimentConfig) {
    let t0 = Instant::now();
    let fig = sweep_figure(cfg).unwrap();
    let slope = fig.slope_db_per_octave.unwrap_or(f64::NAN);
    let top = fig.rows.last().unwrap();
    r.check(7, "clock sweep", t0, &[
        ((-4.0..=-2.0).contains(&slope), format!("slope {slope:.2} dB/oct over {:.0} Hz-{:.3} MHz", fig.rows[0].f_ck, top.f_ck / 1e6)),
        (
            top.f_ck > 8.3e6 && (100e-6..=170e-6).contains(&top.resolution),
            format!("{:.0} ug at {:.3} MHz", top.resolution * 1e6, top.f_ck / 1e6),
        ),
    ]);
}

fn properties(r: &mut Report) {
    let t0 = Instant::now();
    let sensor = SensorParameters::prototype();

    // conduction root against bisection
    let mut root_err = 0.0f64;
    for gamma in [-1.2e-3, -3e-4, 0.0, 5e-4, 2e-3] {
        let b = thermal_sd::physics::BridgeParameters { gamma, ..sensor.bridge };
        for k in 0..=10 {
            let rad = b.r1 * (b.r2 / b.r1).powf(k as f64 / 10.0);
            let t = conduction_temperature(rad, 720.0, 298.0, &b).unwrap();
            let c = conduction_rhs(rad, 720.0, 298.0, &b);
            let (mut lo, mut hi) = (297.0, 721.0);
            for _ in 0..200 {
                let mid: f64 = 0.5 * (lo + hi);
                if mid + 0.5 * gamma * mid * mid > c { hi = mid } else { lo = mid }
            }
            root_err = root_err.max((t - 0.5 * (lo + hi)).abs() / t);
        }
    }

    // filter DC gain
    let mut gain_err = 0.0f64;
    for (k, tau, f) in [(1e4, 3.3e-3, 131e3), (1.0, 3e-3, 8.384e6), (-7.5, 1e-2, 16375.0)] {
        let lag = FirstOrderLag::new(k, tau).unwrap().discretize(f).unwrap();
        gain_err = gain_err.max((lag.dc_gain() - k).abs() / k.abs());
    }

    // determinism
    let cfg = ModulatorConfig { duration: 0.2, ..Default::default() };
    let tone = Input::Sine { freq: 16.0, amp: 1.0 };
    let deterministic = simulate(&sensor, &cfg, &tone).unwrap() == simulate(&sensor, &cfg, &tone).unwrap();

    // mean tracking, noise off, 10⁵ samples
    let mut tracking = true;
    let mut worst = 0.0f64;
    for integrator in [Integrator::Thermal, Integrator::Ideal] {
        let cfg = ModulatorConfig {
            integrator,
            noise_enabled: false,
            duration: 1e5 / 131e3,
            settle: 0.1,
            ..Default::default()
        };
        let leak = 1.0 - Modulator::new(&sensor, &cfg).unwrap().loop_filter().pole;
        for frac in [-0.95, -0.5, -0.1, 0.0, 0.25, 0.5, 0.95] {
            let a = frac * cfg.full_scale;
            let s = run_streaming(&sensor, &cfg, &Input::Dc(a), |_| {}).unwrap();
            let lsb = cfg.full_scale * (2.0 / s.n_samples as f64).max(leak);
            let err = (s.mean() * cfg.full_scale - a).abs() / lsb;
            worst = worst.max(err);
            tracking &= err <= 1.0 && s.n_samples >= 100_000;
        }
    }

    // Parseval
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let normal = Normal::new(0.0, 0.7).unwrap();
    let x: Vec<f64> = (0..1 << 17).map(|_| normal.sample(&mut rng)).collect();
    let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let sp = psd_samples(&x, 1e4, &WelchConfig::for_bin_width(1e4, 10.0)).unwrap();
    let parseval = (sp.total_power() / var - 1.0).abs();

    // feedback power table
    let op = sensor.operating_point(BridgeVariant::TwoResistor).unwrap();
    let table = within(op.p0, 225e-6, 1e-12)
        && within(op.p_max, 900e-6, 1e-12)
        && feedback_power(FeedbackCommand::None, op.p0, op.p_max) == (op.p0, op.p0)
        && feedback_power(FeedbackCommand::Feedback1, op.p0, op.p_max) == (op.p_max, 0.0)
        && feedback_power(FeedbackCommand::Feedback2, op.p0, op.p_max) == (0.0, op.p_max);

    r.check(8, "properties", t0, &[
        (root_err <= 1e-9, format!("conduction root {root_err:.1e}")),
        (gain_err <= 1e-12, format!("DC gain {gain_err:.1e}")),
        (deterministic, "deterministic".into()),
        (tracking, format!("mean tracking worst {worst:.2} LSB")),
        (parseval < 0.01, format!("Parseval {:.2}%", parseval * 100.0)),
        (table, format!("P0 {:.1} uW, Pmax {:.1} uW", op.p0 * 1e6, op.p_max * 1e6)),
    ]);
}

fn main() -> ExitCode {
    let cfg = ExperimentConfig::default();
    let mut r = Report { failed: Vec::new() };
    let start = Instant::now();

    operating_point(&mut r);
    noise_transfer(&mut r, &cfg);
    let t0 = Instant::now();
    let (th, id) = spectra(&cfg);
    resolution(&mut r, &th, &id, t0, cfg.modulator.duration);
    floor(&mut r, &th);
    distortion(&mut r, &th, &id);
    signal_transfer(&mut r, &cfg);
    clock_sweep(&mut r, &cfg);
    properties(&mut r);

    println!("acceptance: {} of 8 criteria passed in {:.1} s", 8 - r.failed.len(), start.elapsed().as_secs_f64());
    if r.failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {:?}", r.failed);
        ExitCode::FAILURE
    }
}
