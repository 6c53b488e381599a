//! Invariants of the physics, loop and spectral code, checked over random
//! parameters.

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use thermal_sd::analysis::{
    band_rms, harmonic_distortion, ntf_magnitude, psd_samples, NtfKind, WelchConfig, Window,
};
use thermal_sd::dynamics::{DiscreteLag, FirstOrderLag};
use thermal_sd::modulator::{feedback_power, run_streaming, FeedbackCommand};
use thermal_sd::physics::{
    conduction_rhs, conduction_temperature, detector_resistances, heater_temperature,
    BridgeParameters,
};
use thermal_sd::{simulate, BridgeVariant, Input, Integrator, Modulator, ModulatorConfig, SensorParameters};

fn bridge(gamma: f64) -> BridgeParameters {
    BridgeParameters { gamma, ..SensorParameters::prototype().bridge }
}

/// Root of T + γT²/2 = C on [lo, hi] by plain bisection.
fn bisect_conduction(c: f64, gamma: f64, mut lo: f64, mut hi: f64) -> f64 {
    let f = |t: f64| t + 0.5 * gamma * t * t - c;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn noiseless(integrator: Integrator, samples: f64) -> ModulatorConfig {
    ModulatorConfig {
        integrator,
        noise_enabled: false,
        duration: samples / 131e3,
        // long enough for the fluid lag to reach the constant input
        settle: 0.1,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn conduction_matches_bisection(
        gamma in -1.3e-3f64..3e-3,
        frac in 0.0f64..=1.0,
        t_h in 500.0f64..760.0,
    ) {
        let b = bridge(gamma);
        let r = b.r1 * (b.r2 / b.r1).powf(frac);
        let t_a = 298.0;
        let t = conduction_temperature(r, t_h, t_a, &b).unwrap();
        let c = conduction_rhs(r, t_h, t_a, &b);
        let oracle = bisect_conduction(c, gamma, t_a - 1.0, t_h + 1.0);
        prop_assert!((t - oracle).abs() <= 1e-9 * oracle, "{t} vs {oracle}");
        prop_assert!(t >= t_a - 1e-9 && t <= t_h + 1e-9);
    }

    #[test]
    fn conduction_falls_with_radius(gamma in 0.0f64..5e-3, f1 in 0.0f64..1.0, f2 in 0.0f64..1.0) {
        let b = bridge(gamma);
        let (lo, hi) = (f1.min(f2), f1.max(f2));
        prop_assume!(hi - lo > 1e-9);
        let at = |f: f64| conduction_temperature(b.r1 * (b.r2 / b.r1).powf(f), 720.0, 298.0, &b).unwrap();
        prop_assert!(at(lo) > at(hi));
    }

    #[test]
    fn heater_rise_is_affine(p1 in 0.0f64..0.1, p2 in 0.0f64..0.1, r_th in 1e3f64..1e5) {
        let t_a = 298.0;
        let rise = |p: f64| heater_temperature(p, r_th, t_a).unwrap() - t_a;
        prop_assert!((rise(p1 + p2) - rise(p1) - rise(p2)).abs() <= 1e-9 * rise(p1 + p2).max(1.0));
        prop_assert_eq!(heater_temperature(0.0, r_th, t_a).unwrap(), t_a);
    }

    #[test]
    fn detector_pair_sum_is_constant(t_cm in 300.0f64..600.0, dt in -20.0f64..20.0) {
        let b = bridge(0.0);
        let (r1, r2) = detector_resistances(t_cm, dt, &b);
        let (z1, z2) = detector_resistances(t_cm, 0.0, &b);
        prop_assert!((r1 + r2 - (z1 + z2)).abs() <= 1e-9 * (z1 + z2));
        prop_assert!((r1 > r2) == (dt > 0.0) || dt == 0.0);
    }

    #[test]
    fn lag_dc_gain_is_exact(k in -1e5f64..1e5, tau in 1e-5f64..1.0, f_ck in 1e3f64..1e7) {
        let lag = FirstOrderLag::new(k, tau).unwrap().discretize(f_ck).unwrap();
        prop_assert!((lag.dc_gain() - k).abs() <= 1e-12 * k.abs().max(1e-300));
    }

    #[test]
    fn lags_commute(
        k1 in 0.1f64..10.0, t1 in 1e-4f64..1e-2,
        k2 in 0.1f64..10.0, t2 in 1e-4f64..1e-2,
        seed in any::<u64>(),
    ) {
        let f_ck = 131e3;
        let a = FirstOrderLag::new(k1, t1).unwrap().discretize(f_ck).unwrap();
        let b = FirstOrderLag::new(k2, t2).unwrap().discretize(f_ck).unwrap();
        let (mut ab, mut ba) = ((a, b), (b, a));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, 1.0).unwrap();
        for _ in 0..2000 {
            let x = n.sample(&mut rng);
            let y1 = { let u = ab.0.output(); ab.0.step(x); let v = ab.1.output(); ab.1.step(u); v };
            let y2 = { let u = ba.0.output(); ba.0.step(x); let v = ba.1.output(); ba.1.step(u); v };
            prop_assert!((y1 - y2).abs() <= 1e-9 * (1.0 + y1.abs()));
        }
    }

    #[test]
    fn ntf_is_inverse_loop_gain_shape(f in 0.0f64..65.5e3) {
        let f_ck = 131e3;
        let lag = FirstOrderLag::new(1e4, 3.3e-3).unwrap().discretize(f_ck).unwrap();
        let ntf = ntf_magnitude(f, f_ck, NtfKind::Thermal { tau_d: 3.3e-3 });
        prop_assert!((ntf - lag.gain / lag.magnitude(f, f_ck)).abs() <= 1e-12 * ntf.max(1e-12));
        let acc = DiscreteLag::accumulator(1e4, 3.3e-3, 1.0 / f_ck);
        prop_assume!(f > 0.0);
        let ideal = ntf_magnitude(f, f_ck, NtfKind::Ideal);
        prop_assert!((ideal - acc.gain / acc.magnitude(f, f_ck)).abs() <= 1e-12 * ideal.max(1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(16) })]

    /// Noise off, constant input in (−FS, FS), 10⁵ samples: the bit-stream
    /// mean times FS matches the input within one LSB-equivalent, taken as
    /// one bit flip (2·FS/N) or, for the leaky loop, its DC feedback quantum
    /// (1 − a_z)·FS, whichever is larger.
    #[test]
    fn mean_tracks_dc_input(frac in -0.999f64..0.999, ideal in any::<bool>()) {
        let integrator = if ideal { Integrator::Ideal } else { Integrator::Thermal };
        let cfg = noiseless(integrator, 1e5);
        let fs = cfg.full_scale;
        let a = frac * fs;
        let m = Modulator::new(&SensorParameters::prototype(), &cfg).unwrap();
        let leak = 1.0 - m.loop_filter().pole;
        let r = run_streaming(&SensorParameters::prototype(), &cfg, &Input::Dc(a), |_| {}).unwrap();
        let lsb = fs * (2.0 / r.n_samples as f64).max(leak);
        prop_assert!(r.n_samples >= 100_000);
        prop_assert!((r.mean() * fs - a).abs() <= lsb, "{integrator} a={a}: {} vs lsb {lsb}", r.mean() * fs);
    }

    #[test]
    fn ideal_loop_stays_bounded(frac in -0.999f64..0.999) {
        let sensor = SensorParameters::prototype();
        let cfg = noiseless(Integrator::Ideal, 1e5);
        let a = frac * cfg.full_scale;
        let mut m = Modulator::new(&sensor, &cfg).unwrap();
        let step = m.feedback_step();
        for _ in 0..100_000 {
            m.step(a);
            prop_assert!(m.detector_delta_t().abs() <= 3.0 * step, "{} vs {step}", m.detector_delta_t());
        }
    }

    #[test]
    fn same_seed_same_stream(seed in any::<u64>(), ideal in any::<bool>()) {
        let integrator = if ideal { Integrator::Ideal } else { Integrator::Thermal };
        let cfg = ModulatorConfig { seed, integrator, duration: 0.05, ..Default::default() };
        let input = Input::Sine { freq: 16.0, amp: 1.0 };
        let a = simulate(&SensorParameters::prototype(), &cfg, &input).unwrap();
        let b = simulate(&SensorParameters::prototype(), &cfg, &input).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.iter().all(|x| x * x == 1));
        let c = simulate(&SensorParameters::prototype(), &cfg.with_seed(seed.wrapping_add(1)), &input).unwrap();
        prop_assert_ne!(&a, &c);
    }

    #[test]
    fn parseval_within_one_percent(seed in any::<u64>(), sigma in 1e-3f64..1e3, hann in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, sigma).unwrap();
        let x: Vec<f64> = (0..1 << 16).map(|_| n.sample(&mut rng)).collect();
        let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        let window = if hann { Window::Hann } else { Window::Rectangular };
        let cfg = WelchConfig { window, ..WelchConfig::for_bin_width(1000.0, 1000.0 / 1024.0) };
        let sp = psd_samples(&x, 1000.0, &cfg).unwrap();
        prop_assert!((sp.total_power() / var - 1.0).abs() < 0.01, "{} vs {var}", sp.total_power());
    }

    #[test]
    fn band_power_is_additive(seed in any::<u64>(), split in 2.0f64..498.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..1 << 14).map(|_| n.sample(&mut rng)).collect();
        let sp = psd_samples(&x, 1000.0, &WelchConfig::for_bin_width(1000.0, 1.0)).unwrap();
        let whole = sp.band_power(1.0, 500.0, &[]).unwrap();
        let parts = sp.band_power(1.0, split, &[]).unwrap() + sp.band_power(split, 500.0, &[]).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * whole);
    }
}

#[test]
fn white_noise_density_within_five_percent() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sigma = 0.3;
    let fs = 2000.0;
    let n = Normal::new(0.0, sigma).unwrap();
    let x: Vec<f64> = (0..1 << 18).map(|_| n.sample(&mut rng)).collect();
    let sp = psd_samples(&x, fs, &WelchConfig::for_bin_width(fs, 4.0)).unwrap();
    let density = sp.band_density(10.0, 990.0, &[]).unwrap();
    let expected = sigma / (fs / 2.0).sqrt();
    assert!((density / expected - 1.0).abs() < 0.05, "{density} vs {expected}");
    let rms = band_rms(&sp, 10.0, 990.0, &[]).unwrap();
    assert_relative_eq!(rms, density * 980f64.sqrt(), max_relative = 0.02);
}

#[test]
fn synthetic_third_harmonic() {
    let fs = 4096.0;
    let f0 = 16.0;
    let h3 = 2e-3;
    let x: Vec<f64> = (0..1 << 16)
        .map(|i| {
            let w = 2.0 * std::f64::consts::PI * f0 * i as f64 / fs;
            w.sin() + h3 * (3.0 * w).sin()
        })
        .collect();
    let sp = psd_samples(&x, fs, &WelchConfig::for_bin_width(fs, 0.5)).unwrap();
    let d = harmonic_distortion(&sp, f0, 3).unwrap();
    assert_relative_eq!(d, h3, max_relative = 0.01);
}

#[test]
fn feedback_power_table() {
    let op = SensorParameters::prototype().operating_point(BridgeVariant::TwoResistor).unwrap();
    assert_relative_eq!(op.p0, 225e-6, max_relative = 1e-12);
    assert_eq!(op.p_max, 4.0 * op.p0);
    assert_eq!(feedback_power(FeedbackCommand::None, op.p0, op.p_max), (op.p0, op.p0));
    assert_eq!(feedback_power(FeedbackCommand::Feedback1, op.p0, op.p_max), (op.p_max, 0.0));
    assert_eq!(feedback_power(FeedbackCommand::Feedback2, op.p0, op.p_max), (0.0, op.p_max));
}

#[test]
fn half_scale_reads_half() {
    let sensor = SensorParameters::prototype();
    let cfg = noiseless(Integrator::Ideal, 1e4);
    let r = run_streaming(&sensor, &cfg, &Input::Dc(cfg.full_scale / 2.0), |_| {}).unwrap();
    assert!((r.sum_bits as f64 - 0.5 * r.n_samples as f64).abs() <= 2.0, "{}", r.sum_bits);
}

#[test]
fn overrange_input_saturates() {
    let sensor = SensorParameters::prototype();
    let mut cfg = noiseless(Integrator::Thermal, 2e4);
    cfg.full_scale = 1.0;
    let r = run_streaming(&sensor, &cfg, &Input::Dc(2.0), |_| {}).unwrap();
    assert!(r.mean() > 0.99, "{}", r.mean());
    assert!(r.max_abs_delta_t > 1.0);
}
