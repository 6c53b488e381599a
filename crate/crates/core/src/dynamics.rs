//! Small-signal dynamics: first-order thermal and fluid lags, their exact
//! zero-order-hold discretisation, and the acceleration → thermal power map.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::physics::{BridgeParameters, OperatingPoint};

/// Continuous-time pole K / (1 + τs) with a running output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderLag {
    pub dc_gain: f64,
    pub tau: f64,
    pub state: f64,
}

impl FirstOrderLag {
    pub fn new(dc_gain: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid("tau", format!("must be positive, got {tau}")));
        }
        Ok(Self {
            dc_gain,
            tau,
            state: 0.0,
        })
    }

    /// Discrete pole exp(−T_e/τ).
    pub fn pole(&self, t_e: f64) -> f64 {
        (-t_e / self.tau).exp()
    }

    /// Zero-order-hold equivalent at clock `f_ck`:
    /// y[n] = a·y[n−1] + K(1 − a)·x[n−1]. The current state carries over.
    pub fn discretize(&self, f_ck: f64) -> Result<DiscreteLag> {
        if !(f_ck > 0.0 && f_ck.is_finite()) {
            return Err(invalid("f_ck", format!("must be positive, got {f_ck}")));
        }
        let a = self.pole(1.0 / f_ck);
        Ok(DiscreteLag {
            pole: a,
            gain: self.dc_gain * (1.0 - a),
            state: self.state,
        })
    }

    /// Advances one sample of length `t_e` with input `x` held over it.
    pub fn step(&mut self, x: f64, t_e: f64) -> f64 {
        let a = self.pole(t_e);
        self.state = a * self.state + self.dc_gain * (1.0 - a) * x;
        self.state
    }

    pub fn cutoff_frequency(&self) -> f64 {
        1.0 / (2.0 * PI * self.tau)
    }

    /// |K / (1 + j2πfτ)|
    pub fn magnitude(&self, f: f64) -> f64 {
        self.dc_gain.abs() / (1.0 + (2.0 * PI * f * self.tau).powi(2)).sqrt()
    }
}

/// One-pole recurrence y[n] = pole·y[n−1] + gain·x[n−1].
///
/// `pole = 1` is an ideal accumulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteLag {
    pub pole: f64,
    pub gain: f64,
    pub state: f64,
}

impl DiscreteLag {
    /// Ideal accumulator matching the high-frequency asymptote K/(τs) of a
    /// lag sampled every `t_e`.
    pub fn accumulator(dc_gain: f64, tau: f64, t_e: f64) -> Self {
        Self {
            pole: 1.0,
            gain: dc_gain * t_e / tau,
            state: 0.0,
        }
    }

    #[inline]
    pub fn step(&mut self, x: f64) -> f64 {
        self.state = self.pole * self.state + self.gain * x;
        self.state
    }

    #[inline]
    pub fn output(&self) -> f64 {
        self.state
    }

    pub fn reset(&mut self) {
        self.state = 0.0;
    }

    /// gain / (1 − pole); infinite for an accumulator.
    pub fn dc_gain(&self) -> f64 {
        if self.pole == 1.0 {
            f64::INFINITY
        } else {
            self.gain / (1.0 - self.pole)
        }
    }

    /// |gain·z⁻¹ / (1 − pole·z⁻¹)| at z = exp(j2πf/f_s).
    pub fn magnitude(&self, f: f64, f_s: f64) -> f64 {
        let w = 2.0 * PI * f / f_s;
        let re = 1.0 - self.pole * w.cos();
        let im = self.pole * w.sin();
        self.gain.abs() / re.hypot(im)
    }
}

/// Differential thermal power produced by acceleration `a` (g), static part:
/// ΔP_D = (K_MEMS / R_th) · a.
pub fn acceleration_to_power(a: f64, op: &OperatingPoint, bridge: &BridgeParameters) -> f64 {
    op.k_mems / bridge.r_th_detector * a
}
