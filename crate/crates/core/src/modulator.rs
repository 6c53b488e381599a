//! First-order electro-thermal sigma-delta loop.
//!
//! Each clock period has a read phase and a feedback phase. During the read
//! phase the bridge is regularly biased, its output (plus Johnson noise) is
//! compared against zero and a bit is emitted: +1 when bridge 1 is warmer.
//! During the feedback phase the MOS switches short one bridge and bias the
//! other at the full supply, heating the colder side:
//!
//! | command     | bridge 1 | bridge 2 |
//! |-------------|----------|----------|
//! | none        | P0       | P0       |
//! | feedback 1  | P_max    | 0        |
//! | feedback 2  | 0        | P_max    |
//!
//! The plant only sees the period-averaged differential power
//! ±duty·P_max, since the detector lag spans hundreds of clock periods.
//! The detector thermal lag is the loop filter (a leaky integrator); the
//! reference modulator swaps it for an ideal accumulator with the same
//! high-frequency gain.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bitstream::BitStream;
use crate::dynamics::{DiscreteLag, FirstOrderLag};
use crate::error::{invalid, Result};
use crate::input::Input;
use crate::physics::{BridgeParameters, BridgeVariant, OperatingPoint, SensorParameters};

/// Loop filter of the modulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Integrator {
    /// Detector thermal lag, T(z) = z⁻¹ / (1 − a·z⁻¹).
    #[default]
    Thermal,
    /// Ideal accumulator, T(z) = z⁻¹ / (1 − z⁻¹).
    Ideal,
}

impl std::str::FromStr for Integrator {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thermal" => Ok(Integrator::Thermal),
            "ideal" => Ok(Integrator::Ideal),
            _ => Err(invalid("integrator", format!("expected thermal|ideal, got {s:?}"))),
        }
    }
}

impl std::fmt::Display for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Integrator::Thermal => "thermal",
            Integrator::Ideal => "ideal",
        })
    }
}

/// MOS-switch command for the feedback phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeedbackCommand {
    None,
    /// Bridge 2 shorted, bridge 1 at full supply.
    Feedback1,
    /// Bridge 1 shorted, bridge 2 at full supply.
    Feedback2,
}

/// Dissipation (bridge 1, bridge 2) for a switch command.
pub fn feedback_power(cmd: FeedbackCommand, p0: f64, p_max: f64) -> (f64, f64) {
    match cmd {
        FeedbackCommand::None => (p0, p0),
        FeedbackCommand::Feedback1 => (p_max, 0.0),
        FeedbackCommand::Feedback2 => (0.0, p_max),
    }
}

/// Acceleration whose convective power the feedback can just cancel:
/// duty · P_max · R_th / K_MEMS.
pub fn full_scale_from_duty(
    duty: f64,
    p_max: f64,
    bridge: &BridgeParameters,
    op: &OperatingPoint,
) -> Result<f64> {
    if !(duty > 0.0 && duty <= 1.0) {
        return Err(invalid("duty_alpha", format!("must lie in (0, 1], got {duty}")));
    }
    Ok(duty * p_max * bridge.r_th_detector / op.k_mems)
}

/// Inverse of [`full_scale_from_duty`].
pub fn duty_for_full_scale(
    full_scale: f64,
    p_max: f64,
    bridge: &BridgeParameters,
    op: &OperatingPoint,
) -> Result<f64> {
    if !(full_scale > 0.0) {
        return Err(invalid("full_scale", "must be positive"));
    }
    let duty = full_scale * op.k_mems / (p_max * bridge.r_th_detector);
    if !(duty > 0.0 && duty <= 1.0) {
        return Err(invalid(
            "full_scale",
            format!("{full_scale} g needs duty {duty}, outside (0, 1]"),
        ));
    }
    Ok(duty)
}

/// How the comparator sees the band-limited bridge noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NoiseFolding {
    /// Every decision samples the full band-limited noise: σ = e_n·√B.
    /// Noise above f_ck/2 folds into the first Nyquist zone.
    #[default]
    Aliased,
    /// Noise pre-limited to the first Nyquist zone: σ = e_n·√min(f_ck/2, B).
    NyquistLimited,
}

/// Gaussian comparator-input noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSource {
    /// V/√Hz
    pub density: f64,
    /// Hz
    pub bandwidth_limit: f64,
    pub seed: u64,
    pub folding: NoiseFolding,
}

impl NoiseSource {
    /// Per-decision standard deviation (V).
    pub fn sigma(&self, f_ck: f64) -> f64 {
        let bw = match self.folding {
            NoiseFolding::Aliased => self.bandwidth_limit,
            NoiseFolding::NyquistLimited => self.bandwidth_limit.min(0.5 * f_ck),
        };
        self.density * bw.sqrt()
    }

    pub fn sampler(&self, f_ck: f64) -> NoiseSampler {
        NoiseSampler {
            sigma: self.sigma(f_ck),
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        }
    }
}

/// Reproducible white Gaussian sequence for one run.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    sigma: f64,
    rng: ChaCha8Rng,
}

impl NoiseSampler {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// One comparator noise sample (V).
    #[inline]
    pub fn sample(&mut self) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        let z: f64 = StandardNormal.sample(&mut self.rng);
        self.sigma * z
    }
}

/// Run settings of one modulator instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatorConfig {
    /// Clock (Hz).
    pub f_ck: f64,
    /// ± full scale (g); sets the feedback duty cycle.
    pub full_scale: f64,
    pub integrator: Integrator,
    pub noise_enabled: bool,
    pub seed: u64,
    /// Recorded duration (s).
    pub duration: f64,
    /// Simulated before recording starts and discarded (s).
    pub settle: f64,
    /// Bridge whose sensitivity the comparator sees.
    pub bridge_variant: BridgeVariant,
    /// Apply the fluid time constant to the acceleration path.
    pub fluid_lag: bool,
    pub noise_folding: NoiseFolding,
    /// Replaces the bridge Johnson density (V/√Hz) when set.
    pub noise_density: Option<f64>,
    /// Shift T_CM by the mean compensation heating (duty·P_max/2)·R_th.
    pub common_mode_shift: bool,
}

impl Default for ModulatorConfig {
    fn default() -> Self {
        Self {
            f_ck: 131e3,
            full_scale: 2.0,
            integrator: Integrator::Thermal,
            noise_enabled: true,
            seed: 1,
            duration: 8.0,
            settle: 5.0 * crate::physics::reference::DETECTOR_TIME_CONSTANT,
            bridge_variant: BridgeVariant::TwoResistor,
            fluid_lag: true,
            noise_folding: NoiseFolding::Aliased,
            noise_density: None,
            common_mode_shift: true,
        }
    }
}

impl ModulatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_ck > 0.0 && self.f_ck.is_finite()) {
            return Err(invalid("f_ck", "must be positive"));
        }
        if !(self.full_scale > 0.0) {
            return Err(invalid("full_scale", "must be positive"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(invalid("duration", format!("must be positive, got {}", self.duration)));
        }
        if !(self.settle >= 0.0) {
            return Err(invalid("settle", "must be ≥ 0"));
        }
        if matches!(self.noise_density, Some(d) if !(d >= 0.0)) {
            return Err(invalid("noise_density", "must be ≥ 0"));
        }
        Ok(())
    }

    /// Recorded length, round(duration · f_ck).
    pub fn n_samples(&self) -> u64 {
        (self.duration * self.f_ck).round() as u64
    }

    pub fn n_settle(&self) -> u64 {
        (self.settle * self.f_ck).round() as u64
    }

    pub fn with_integrator(&self, integrator: Integrator) -> Self {
        Self {
            integrator,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Stateful loop: detector (or ideal) integrator, optional fluid lag,
/// comparator noise.
#[derive(Debug, Clone)]
pub struct Modulator {
    loop_filter: DiscreteLag,
    fluid: Option<DiscreteLag>,
    noise: NoiseSampler,
    s_wheat: f64,
    /// ΔP_D per g (W/g).
    power_per_g: f64,
    /// duty · P_max (W)
    feedback_power: f64,
    duty: f64,
    p0: f64,
    p_max: f64,
    feedback1: u64,
    feedback2: u64,
    op: OperatingPoint,
}

impl Modulator {
    pub fn new(sensor: &SensorParameters, cfg: &ModulatorConfig) -> Result<Self> {
        cfg.validate()?;
        let base = sensor.operating_point(cfg.bridge_variant)?;
        let bridge = &sensor.bridge;
        let duty = duty_for_full_scale(cfg.full_scale, base.p_max, bridge, &base)?;
        let op = if cfg.common_mode_shift {
            base.with_common_mode_shift(0.5 * duty * base.p_max * bridge.r_th_detector)
        } else {
            base
        };

        let t_e = 1.0 / cfg.f_ck;
        let detector = FirstOrderLag::new(bridge.r_th_detector, bridge.tau_d)?;
        let loop_filter = match cfg.integrator {
            Integrator::Thermal => detector.discretize(cfg.f_ck)?,
            Integrator::Ideal => DiscreteLag::accumulator(bridge.r_th_detector, bridge.tau_d, t_e),
        };
        let fluid = if cfg.fluid_lag {
            Some(FirstOrderLag::new(1.0, sensor.gas.tau_fluid)?.discretize(cfg.f_ck)?)
        } else {
            None
        };
        let density = if cfg.noise_enabled {
            cfg.noise_density.unwrap_or(op.noise_density)
        } else {
            0.0
        };
        let noise = NoiseSource {
            density,
            bandwidth_limit: op.noise_bandwidth,
            seed: cfg.seed,
            folding: cfg.noise_folding,
        }
        .sampler(cfg.f_ck);

        Ok(Self {
            loop_filter,
            fluid,
            noise,
            s_wheat: op.s_wheat,
            power_per_g: base.k_mems / bridge.r_th_detector,
            feedback_power: duty * base.p_max,
            duty,
            p0: base.p0,
            p_max: base.p_max,
            feedback1: 0,
            feedback2: 0,
            op,
        })
    }

    /// One clock period with acceleration `a` (g) held over it.
    #[inline]
    pub fn step(&mut self, a: f64) -> i8 {
        // read phase
        let v = self.s_wheat * self.loop_filter.output() + self.noise.sample();
        let bit: i8 = if v >= 0.0 { 1 } else { -1 };

        // feedback phase: heat the colder bridge
        let cmd = if bit < 0 {
            self.feedback1 += 1;
            FeedbackCommand::Feedback1
        } else {
            self.feedback2 += 1;
            FeedbackCommand::Feedback2
        };
        let (p1, p2) = feedback_power(cmd, self.p0, self.p_max);
        let p_fb = self.duty * (p1 - p2);

        let p_in = self.power_per_g * a;
        let p_conv = match &mut self.fluid {
            Some(lag) => {
                let out = lag.output();
                lag.step(p_in);
                out
            }
            None => p_in,
        };
        self.loop_filter.step(p_conv + p_fb);
        bit
    }

    /// Differential detector temperature T1 − T2 (K).
    pub fn detector_delta_t(&self) -> f64 {
        self.loop_filter.output()
    }

    /// Comparator input without noise (V).
    pub fn bridge_output(&self) -> f64 {
        self.s_wheat * self.loop_filter.output()
    }

    /// (feedback 1, feedback 2) activations since the last reset.
    pub fn feedback_counts(&self) -> (u64, u64) {
        (self.feedback1, self.feedback2)
    }

    pub fn reset_counts(&mut self) {
        self.feedback1 = 0;
        self.feedback2 = 0;
    }

    pub fn duty(&self) -> f64 {
        self.duty
    }

    /// Per-decision comparator noise σ (V).
    pub fn noise_sigma(&self) -> f64 {
        self.noise.sigma()
    }

    /// Feedback quantum per clock in detector temperature (K).
    pub fn feedback_step(&self) -> f64 {
        self.loop_filter.gain * self.feedback_power
    }

    /// Operating point the comparator sees, after any common-mode shift.
    pub fn operating_point(&self) -> &OperatingPoint {
        &self.op
    }

    pub fn loop_filter(&self) -> &DiscreteLag {
        &self.loop_filter
    }
}

/// Bookkeeping of one recorded run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub n_samples: u64,
    pub feedback1: u64,
    pub feedback2: u64,
    pub sum_bits: i64,
    pub max_abs_delta_t: f64,
}

impl RunSummary {
    pub fn mean(&self) -> f64 {
        self.sum_bits as f64 / self.n_samples as f64
    }
}

/// Runs the loop and hands each recorded bit to `sink` without storing the
/// stream. The settling prefix is simulated first and discarded; the input
/// is evaluated at t = (n − n_settle)/f_ck so recording starts at t = 0.
pub fn run_streaming(
    sensor: &SensorParameters,
    cfg: &ModulatorConfig,
    input: &Input,
    mut sink: impl FnMut(i8),
) -> Result<RunSummary> {
    let mut m = Modulator::new(sensor, cfg)?;
    let t_e = 1.0 / cfg.f_ck;
    let n_settle = cfg.n_settle();
    for i in 0..n_settle {
        let t = -((n_settle - i) as f64) * t_e;
        m.step(input.at(t));
    }
    m.reset_counts();
    let n = cfg.n_samples();
    let mut sum = 0i64;
    let mut max_abs = 0f64;
    for i in 0..n {
        let b = m.step(input.at(i as f64 * t_e));
        sum += i64::from(b);
        max_abs = max_abs.max(m.detector_delta_t().abs());
        sink(b);
    }
    let (feedback1, feedback2) = m.feedback_counts();
    Ok(RunSummary {
        n_samples: n,
        feedback1,
        feedback2,
        sum_bits: sum,
        max_abs_delta_t: max_abs,
    })
}

/// Runs the loop selected by `cfg.integrator` and collects the bit-stream
/// (1 bit of storage per sample).
pub fn simulate(sensor: &SensorParameters, cfg: &ModulatorConfig, input: &Input) -> Result<BitStream> {
    cfg.validate()?;
    let n = cfg.n_samples();
    let mut bs = BitStream::with_capacity(cfg.f_ck, cfg.full_scale, cfg.seed, n as usize);
    run_streaming(sensor, cfg, input, |b| bs.push(b))?;
    Ok(bs)
}

/// Same loop with the thermal lag replaced by an ideal accumulator.
pub fn simulate_ideal(
    sensor: &SensorParameters,
    cfg: &ModulatorConfig,
    input: &Input,
) -> Result<BitStream> {
    simulate(sensor, &cfg.with_integrator(Integrator::Ideal), input)
}
