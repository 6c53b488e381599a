//! Static (DC) model of the convective sensing cell.
//!
//! The chain is heater power → heater temperature → conduction profile →
//! common-mode detector temperature, plus the convective differential
//! temperature produced by acceleration, the PTC detector resistances and the
//! Wheatstone read-out with its Johnson noise floor.
//!
//! Temperatures are absolute (K) except where a function says it takes a
//! *rise*. Accelerations are in g, 1 g = [`STANDARD_GRAVITY`].

use crate::error::{invalid, Error, Result};

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// 1 g in m/s².
pub const STANDARD_GRAVITY: f64 = 9.806_65;

/// Values quoted for the CMOS prototype; the calibrated defaults are built
/// from these.
pub mod reference {
    /// Heater Joule power (W).
    pub const HEATER_POWER: f64 = 42e-3;
    /// Average heater temperature at [`HEATER_POWER`] (K).
    pub const HEATER_TEMPERATURE: f64 = 720.0;
    /// Detector common-mode temperature (K).
    pub const COMMON_MODE_TEMPERATURE: f64 = 423.0;
    /// Not stated for the prototype; room temperature is assumed.
    pub const AMBIENT_TEMPERATURE: f64 = 298.0;
    /// Linearised convective sensitivity (K/g).
    pub const K_MEMS: f64 = 1.53;
    /// Open-loop sensitivity of the two-resistor bridge (V/g).
    pub const SENSITIVITY_TWO_RESISTOR: f64 = 1.55e-3;
    /// Detector resistance at the common-mode temperature (Ω).
    pub const DETECTOR_RESISTANCE: f64 = 50e3;
    /// Per-bridge dissipation under regular bias, P0 (W).
    pub const BIAS_POWER: f64 = 225e-6;
    /// Thermal resistance of a detecting bridge (K/W).
    pub const DETECTOR_THERMAL_RESISTANCE: f64 = 1e4;
    /// Detector thermal time constant (s).
    pub const DETECTOR_TIME_CONSTANT: f64 = 3.3e-3;
    /// Fluid time constant (s); the cell allows 0.5 to 12 ms.
    pub const FLUID_TIME_CONSTANT: f64 = 3e-3;
    /// Polysilicon temperature coefficient of resistance (1/K).
    pub const TCR: f64 = 9e-4;
    /// Comparator-limited noise bandwidth (Hz).
    pub const NOISE_BANDWIDTH: f64 = 6e6;
}

/// Plausible range of the fluid time constant (s).
pub const FLUID_TIME_CONSTANT_RANGE: (f64, f64) = (0.5e-3, 12e-3);

/// Linearisation holds while |ΔT_D| stays below this fraction of the heater
/// rise.
pub const LINEAR_VALIDITY_FRACTION: f64 = 0.1;

/// Gas filling the cavity, as it enters the Grashof number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasProperties {
    /// Density (kg/m³).
    pub rho: f64,
    /// Expansion coefficient (1/K).
    pub beta: f64,
    /// Dynamic viscosity (kg/(m·s)).
    pub mu: f64,
    /// Characteristic cavity dimension (m).
    pub l: f64,
    /// Fluid time constant (s).
    pub tau_fluid: f64,
}

impl Default for GasProperties {
    /// Air near 300 K in a 500 µm cavity. Only the product with the fitting
    /// coefficient matters, and that is calibrated to K_MEMS.
    fn default() -> Self {
        Self {
            rho: 1.16,
            beta: 1.0 / 300.0,
            mu: 1.86e-5,
            l: 500e-6,
            tau_fluid: reference::FLUID_TIME_CONSTANT,
        }
    }
}

impl GasProperties {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rho", self.rho),
            ("beta", self.beta),
            ("mu", self.mu),
            ("l", self.l),
            ("tau_fluid", self.tau_fluid),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !self.fluid_time_constant_in_range() {
            log::warn!(
                "fluid time constant {} s is outside the usual {:?} s range",
                self.tau_fluid,
                FLUID_TIME_CONSTANT_RANGE
            );
        }
        Ok(())
    }

    pub fn fluid_time_constant_in_range(&self) -> bool {
        let (lo, hi) = FLUID_TIME_CONSTANT_RANGE;
        (lo..=hi).contains(&self.tau_fluid)
    }
}

/// Thermal and electrical parameters of the heater and detector bridges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeParameters {
    /// Heater thermal resistance (K/W).
    pub r_th_heater: f64,
    /// Detector-bridge thermal resistance (K/W).
    pub r_th_detector: f64,
    /// Detector thermal time constant (s).
    pub tau_d: f64,
    /// Temperature coefficient of resistance (1/K).
    pub tcr: f64,
    /// Detector resistance at `t_reference` (Ω).
    pub r_nominal: f64,
    /// Temperature at which the linear TCR law equals `r_nominal` (K).
    pub t_reference: f64,
    /// Conduction nonlinearity coefficient (1/K); 0 is linear conduction.
    pub gamma: f64,
    /// Inner radius of the cylindrical conduction model (m).
    pub r1: f64,
    /// Outer radius of the cylindrical conduction model (m).
    pub r2: f64,
    /// Detector distance from the heater axis (m).
    pub r_detector: f64,
}

impl BridgeParameters {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r_th_heater", self.r_th_heater),
            ("r_th_detector", self.r_th_detector),
            ("tau_d", self.tau_d),
            ("tcr", self.tcr),
            ("r_nominal", self.r_nominal),
            ("r1", self.r1),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.r1 < self.r_detector && self.r_detector < self.r2) {
            return Err(invalid(
                "r_detector",
                format!(
                    "need r1 < r_detector < r2, got {} / {} / {}",
                    self.r1, self.r_detector, self.r2
                ),
            ));
        }
        Ok(())
    }

    /// Linear PTC law R(T) = r_nominal · (1 + tcr · (T − t_reference)).
    pub fn resistance_at(&self, t: f64) -> f64 {
        self.r_nominal * (1.0 + self.tcr * (t - self.t_reference))
    }
}

/// Bridge topology of the read-out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BridgeVariant {
    /// Two sensing resistors, two fixed.
    #[default]
    TwoResistor,
    /// All four bridge resistors are sensing; twice the sensitivity.
    FourResistor,
}

impl BridgeVariant {
    pub fn factor(self) -> f64 {
        match self {
            BridgeVariant::TwoResistor => 1.0,
            BridgeVariant::FourResistor => 2.0,
        }
    }
}

/// How the detector common-mode temperature is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CommonMode {
    /// Fixed fraction of the heater rise above ambient.
    Fraction(f64),
    /// Conduction profile evaluated at `BridgeParameters::r_detector`.
    Conduction,
}

/// Heater rise: T_H = T_A + R_th · P_H.
pub fn heater_temperature(p_heater: f64, r_th_heater: f64, t_ambient: f64) -> Result<f64> {
    if p_heater < 0.0 || !p_heater.is_finite() {
        return Err(invalid("p_heater", format!("must be ≥ 0, got {p_heater}")));
    }
    if r_th_heater <= 0.0 {
        return Err(invalid("r_th_heater", "must be positive"));
    }
    Ok(t_ambient + r_th_heater * p_heater)
}

/// Heater thermal resistance that maps `p_heater` to `t_heater`.
pub fn heater_resistance_for(p_heater: f64, t_heater: f64, t_ambient: f64) -> Result<f64> {
    if p_heater <= 0.0 {
        return Err(invalid("p_heater", "calibration needs a positive power"));
    }
    if t_heater <= t_ambient {
        return Err(invalid("t_heater", "must exceed ambient"));
    }
    Ok((t_heater - t_ambient) / p_heater)
}

fn kirchhoff(t: f64, gamma: f64) -> f64 {
    t + 0.5 * gamma * t * t
}

/// Right-hand side C(r) of the cylindrical conduction law
/// T + γT²/2 = C(r), pinned to the heater at r1 and to ambient at r2.
pub fn conduction_rhs(r: f64, t_heater: f64, t_ambient: f64, bridge: &BridgeParameters) -> f64 {
    let g = bridge.gamma;
    let drop = kirchhoff(t_heater, g) - kirchhoff(t_ambient, g);
    kirchhoff(t_heater, g) - drop * (r / bridge.r1).ln() / (bridge.r2 / bridge.r1).ln()
}

/// Conduction temperature at radius `r` from the heater axis.
pub fn conduction_temperature(
    r: f64,
    t_heater: f64,
    t_ambient: f64,
    bridge: &BridgeParameters,
) -> Result<f64> {
    if !(bridge.r1..=bridge.r2).contains(&r) {
        return Err(invalid(
            "r",
            format!("{r} outside [{}, {}]", bridge.r1, bridge.r2),
        ));
    }
    let c = conduction_rhs(r, t_heater, t_ambient, bridge);
    let g = bridge.gamma;
    if g == 0.0 {
        return Ok(c);
    }
    if g < 0.0 && t_heater.max(t_ambient) >= -1.0 / g {
        return Err(Error::ModelInvalid(format!(
            "T + γT²/2 is not monotone up to {t_heater} K for γ = {g}"
        )));
    }
    let disc = 1.0 + 2.0 * g * c;
    if disc < 0.0 {
        return Err(Error::ModelInvalid(format!(
            "conduction law has no real root (1 + 2γC = {disc})"
        )));
    }
    // (−1 + √(1+2γC))/γ, rearranged to avoid cancellation for small γ
    Ok(2.0 * c / (1.0 + disc.sqrt()))
}

/// Solves γ so that the conduction profile passes through `t_target` at the
/// detector radius.
pub fn calibrate_gamma(
    t_heater: f64,
    t_ambient: f64,
    t_target: f64,
    bridge: &BridgeParameters,
) -> Result<f64> {
    if !(t_ambient < t_target && t_target < t_heater) {
        return Err(invalid("t_target", "must lie between ambient and heater"));
    }
    let residual = |g: f64| -> Option<f64> {
        let b = BridgeParameters { gamma: g, ..*bridge };
        conduction_temperature(bridge.r_detector, t_heater, t_ambient, &b)
            .ok()
            .map(|t| t - t_target)
    };
    let f0 = residual(0.0).expect("γ = 0 is always valid");
    if f0 == 0.0 {
        return Ok(0.0);
    }
    // Walk outwards geometrically on both sides until the residual flips.
    // Negative γ is only valid while T + γT²/2 rises up to T_H.
    let neg_limit = (1.0 - 1e-9) / t_heater;
    let mut bracket = None;
    'outer: for k in 0..60 {
        let step = 1e-6 * 2f64.powi(k);
        for g in [step, -step.min(neg_limit)] {
            if let Some(f) = residual(g) {
                if f.signum() != f0.signum() {
                    bracket = Some((0.0, g));
                    break 'outer;
                }
            }
        }
    }
    let (mut lo, mut hi) =
        bracket.ok_or_else(|| Error::ModelInvalid("no γ reproduces the target".into()))?;
    let flo = f0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = residual(mid).ok_or_else(|| Error::ModelInvalid("γ left valid region".into()))?;
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Static convective differential temperature ΔT_D = K_MEMS · a.
pub fn convective_delta_t(a: f64, op: &OperatingPoint) -> f64 {
    let dt = op.k_mems * a;
    let limit = LINEAR_VALIDITY_FRACTION * (op.t_heater - op.t_ambient);
    if dt.abs() > limit {
        log::warn!("ΔT_D = {dt} K exceeds the linear range ({limit} K)");
    }
    dt
}

/// Coefficient of `a` (in m/s²) in the Grashof law:
/// S · β ρ² (T_H − T_A) l³ / μ². Multiply by [`STANDARD_GRAVITY`] for K/g.
pub fn grashof_sensitivity(
    gas: &GasProperties,
    t_heater: f64,
    t_ambient: f64,
    s_fit: f64,
) -> Result<f64> {
    if gas.mu <= 0.0 {
        return Err(invalid("mu", "viscosity must be positive"));
    }
    gas.validate()?;
    Ok(s_fit * gas.beta * gas.rho.powi(2) * (t_heater - t_ambient) * gas.l.powi(3)
        / gas.mu.powi(2))
}

/// Fitting coefficient S that makes the Grashof law yield `k_mems` (K/g).
pub fn fit_coefficient_for(
    gas: &GasProperties,
    t_heater: f64,
    t_ambient: f64,
    k_mems: f64,
) -> Result<f64> {
    let unit = grashof_sensitivity(gas, t_heater, t_ambient, 1.0)? * STANDARD_GRAVITY;
    if unit == 0.0 {
        return Err(invalid("t_heater", "no heater rise, S is undefined"));
    }
    Ok(k_mems / unit)
}

/// Static detector resistances (bridge 1, bridge 2) for a common-mode
/// temperature and a differential temperature T1 − T2.
pub fn detector_resistances(t_cm: f64, delta_t: f64, bridge: &BridgeParameters) -> (f64, f64) {
    (
        bridge.resistance_at(t_cm + 0.5 * delta_t),
        bridge.resistance_at(t_cm - 0.5 * delta_t),
    )
}

/// Wheatstone sensitivity (V/K): (Vdd/4) · TCR / (1 + TCR · rise), doubled
/// for the four-resistor bridge. `t_cm_rise` is measured from the TCR
/// reference temperature.
pub fn wheatstone_sensitivity(vdd: f64, tcr: f64, t_cm_rise: f64, variant: BridgeVariant) -> f64 {
    vdd / 4.0 * tcr / (1.0 + tcr * t_cm_rise) * variant.factor()
}

/// Johnson noise density √(4 k_B T R) in V/√Hz.
pub fn johnson_noise_density(r: f64, t: f64) -> f64 {
    (4.0 * BOLTZMANN * t * r).sqrt()
}

/// Input-referred RMS noise over [f_low, f_high] for a white floor.
pub fn intrinsic_resolution(
    noise_density: f64,
    sensitivity: f64,
    f_low: f64,
    f_high: f64,
) -> Result<f64> {
    if !(f_low >= 0.0 && f_high >= f_low) {
        return Err(invalid("f_high", "band must satisfy 0 ≤ f_low ≤ f_high"));
    }
    if sensitivity == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(noise_density / sensitivity * (f_high - f_low).sqrt())
}

/// Everything needed to derive an [`OperatingPoint`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorParameters {
    /// Heater power (W).
    pub heater_power: f64,
    /// Ambient temperature (K).
    pub t_ambient: f64,
    pub bridge: BridgeParameters,
    pub gas: GasProperties,
    /// Grashof fitting coefficient S (K).
    pub fit_coefficient: f64,
    pub common_mode: CommonMode,
    /// Bridge supply (V).
    pub vdd: f64,
    /// Comparator-limited noise bandwidth (Hz).
    pub noise_bandwidth: f64,
}

impl Default for SensorParameters {
    fn default() -> Self {
        Self::prototype()
    }
}

impl SensorParameters {
    /// Parameters calibrated to the prototype's reference values.
    ///
    /// * heater thermal resistance from (42 mW, 720 K, 298 K)
    /// * common-mode fraction from 423 K
    /// * S from K_MEMS = 1.53 K/g
    /// * Vdd from P0 = Vdd²/(2R) = 225 µW at R = 50 kΩ
    /// * TCR reference temperature from S_wheat · K_MEMS = 1.55 mV/g
    /// * conduction geometry placed so that γ = 0 reproduces 423 K
    pub fn prototype() -> Self {
        use reference::*;
        let t_a = AMBIENT_TEMPERATURE;
        let t_h = HEATER_TEMPERATURE;
        let r_th_heater = heater_resistance_for(HEATER_POWER, t_h, t_a).expect("reference values");
        let cm_fraction = (COMMON_MODE_TEMPERATURE - t_a) / (t_h - t_a);

        let gas = GasProperties::default();
        let fit_coefficient = fit_coefficient_for(&gas, t_h, t_a, K_MEMS).expect("reference gas");

        let vdd = (2.0 * DETECTOR_RESISTANCE * BIAS_POWER).sqrt();
        let s_target = SENSITIVITY_TWO_RESISTOR / K_MEMS;
        // vdd/4 · tcr / (1 + tcr·rise) = s_target
        let rise = (vdd * TCR / (4.0 * s_target) - 1.0) / TCR;
        let t_reference = COMMON_MODE_TEMPERATURE - rise;
        let r_nominal = DETECTOR_RESISTANCE / (1.0 + TCR * rise);

        let r1: f64 = 20e-6;
        let r2 = 1e-3;
        let r_detector = r1 * (r2 / r1).powf(1.0 - cm_fraction);

        Self {
            heater_power: HEATER_POWER,
            t_ambient: t_a,
            bridge: BridgeParameters {
                r_th_heater,
                r_th_detector: DETECTOR_THERMAL_RESISTANCE,
                tau_d: DETECTOR_TIME_CONSTANT,
                tcr: TCR,
                r_nominal,
                t_reference,
                gamma: 0.0,
                r1,
                r2,
                r_detector,
            },
            gas,
            fit_coefficient,
            common_mode: CommonMode::Fraction(cm_fraction),
            vdd,
            noise_bandwidth: NOISE_BANDWIDTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bridge.validate()?;
        self.gas.validate()?;
        if !(self.vdd > 0.0) {
            return Err(invalid("vdd", "must be positive"));
        }
        if !(self.noise_bandwidth > 0.0) {
            return Err(invalid("noise_bandwidth", "must be positive"));
        }
        if let CommonMode::Fraction(f) = self.common_mode {
            if !(0.0..1.0).contains(&f) {
                return Err(invalid("common_mode_fraction", "must lie in [0, 1)"));
            }
        }
        Ok(())
    }

    pub fn operating_point(&self, variant: BridgeVariant) -> Result<OperatingPoint> {
        OperatingPoint::new(self, variant)
    }
}

/// Derived static state of the sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    /// Heater power (W).
    pub p_heater: f64,
    /// Ambient temperature (K).
    pub t_ambient: f64,
    /// Heater temperature (K).
    pub t_heater: f64,
    /// Detector common-mode temperature (K).
    pub t_cm: f64,
    /// Convective sensitivity (K/g).
    pub k_mems: f64,
    /// Wheatstone sensitivity (V/K).
    pub s_wheat: f64,
    /// Open-loop sensitivity s_wheat · k_mems (V/g).
    pub sensitivity: f64,
    /// Bridge Johnson noise (V/√Hz).
    pub noise_density: f64,
    /// Comparator-limited noise bandwidth (Hz).
    pub noise_bandwidth: f64,
    pub variant: BridgeVariant,
    /// Detector resistance at `t_cm` (Ω).
    pub detector_resistance: f64,
    /// Per-bridge dissipation under regular bias (W).
    pub p0: f64,
    /// Dissipation of a bridge biased at the full supply (W).
    pub p_max: f64,
    vdd: f64,
    tcr: f64,
    t_reference: f64,
}

impl OperatingPoint {
    pub fn new(sensor: &SensorParameters, variant: BridgeVariant) -> Result<Self> {
        sensor.validate()?;
        let b = &sensor.bridge;
        let t_a = sensor.t_ambient;
        let t_h = heater_temperature(sensor.heater_power, b.r_th_heater, t_a)?;
        let t_cm = match sensor.common_mode {
            CommonMode::Fraction(f) => t_a + f * (t_h - t_a),
            CommonMode::Conduction => conduction_temperature(b.r_detector, t_h, t_a, b)?,
        };
        let k_mems =
            grashof_sensitivity(&sensor.gas, t_h, t_a, sensor.fit_coefficient)? * STANDARD_GRAVITY;
        let mut op = Self {
            p_heater: sensor.heater_power,
            t_ambient: t_a,
            t_heater: t_h,
            t_cm,
            k_mems,
            s_wheat: 0.0,
            sensitivity: 0.0,
            noise_density: 0.0,
            noise_bandwidth: sensor.noise_bandwidth,
            variant,
            detector_resistance: 0.0,
            p0: 0.0,
            p_max: 0.0,
            vdd: sensor.vdd,
            tcr: b.tcr,
            t_reference: b.t_reference,
        };
        op.detector_resistance = b.resistance_at(t_cm);
        if op.detector_resistance <= 0.0 {
            return Err(Error::ModelInvalid(format!(
                "detector resistance {} Ω at {t_cm} K",
                op.detector_resistance
            )));
        }
        op.p0 = sensor.vdd.powi(2) / (2.0 * op.detector_resistance);
        op.p_max = 2.0 * sensor.vdd.powi(2) / op.detector_resistance;
        op.refresh_readout();
        Ok(op)
    }

    fn refresh_readout(&mut self) {
        let rise = self.t_cm - self.t_reference;
        self.s_wheat = wheatstone_sensitivity(self.vdd, self.tcr, rise, self.variant);
        self.sensitivity = self.s_wheat * self.k_mems;
        let r = self.detector_resistance_at(self.t_cm);
        self.noise_density = johnson_noise_density(r, self.t_cm);
    }

    fn detector_resistance_at(&self, t: f64) -> f64 {
        let r_nominal = self.detector_resistance / (1.0 + self.tcr * (self.t_cm - self.t_reference));
        r_nominal * (1.0 + self.tcr * (t - self.t_reference))
    }

    /// Bridge supply (V).
    pub fn vdd(&self) -> f64 {
        self.vdd
    }

    /// Same operating point with the read-out evaluated at a shifted
    /// common-mode temperature. Bias powers are left at the unshifted values.
    pub fn with_common_mode_shift(&self, delta_t: f64) -> Self {
        let mut op = *self;
        op.t_cm = self.t_cm + delta_t;
        op.refresh_readout();
        op.detector_resistance = self.detector_resistance_at(op.t_cm);
        op
    }

    /// RMS input-referred Johnson noise over a band (g).
    pub fn intrinsic_resolution(&self, f_low: f64, f_high: f64) -> Result<f64> {
        intrinsic_resolution(self.noise_density, self.sensitivity, f_low, f_high)
    }

    /// Noise density referred to acceleration (g/√Hz).
    pub fn input_noise_density(&self) -> f64 {
        self.noise_density / self.sensitivity
    }
}
