//! Analytic noise transfer of the linearised loop and the white-quantizer
//! floor estimate.

use std::f64::consts::PI;

use crate::modulator::Integrator;

/// Loop filter as seen by the noise transfer function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NtfKind {
    /// Leaky integrator with detector time constant `tau_d` (s).
    Thermal { tau_d: f64 },
    Ideal,
}

impl NtfKind {
    pub fn for_integrator(integrator: Integrator, tau_d: f64) -> Self {
        match integrator {
            Integrator::Thermal => NtfKind::Thermal { tau_d },
            Integrator::Ideal => NtfKind::Ideal,
        }
    }

    /// z-plane pole of the loop filter at clock `f_ck`.
    pub fn pole(&self, f_ck: f64) -> f64 {
        match *self {
            NtfKind::Thermal { tau_d } => (-1.0 / (f_ck * tau_d)).exp(),
            NtfKind::Ideal => 1.0,
        }
    }
}

/// |1 − a·e^(−j2πf/f_ck)| with a the loop-filter pole (1 for the ideal loop).
pub fn ntf_magnitude(f: f64, f_ck: f64, kind: NtfKind) -> f64 {
    let a = kind.pole(f_ck);
    let w = 2.0 * PI * f / f_ck;
    (1.0 - a * w.cos()).hypot(a * w.sin())
}

/// Floor of a white quantizer whose bit-stream power FS² splits into the
/// signal S_a² and noise spread over [0, f_ck/2]:
/// √(FS² − S_a²) / √(f_ck/2).
pub fn quantization_noise_density(signal_rms: f64, f_ck: f64, full_scale: f64) -> f64 {
    (full_scale * full_scale - signal_rms * signal_rms).max(0.0).sqrt() / (0.5 * f_ck).sqrt()
}

/// Frequency (Hz) above which the ideal loop's |NTF| is at least the
/// thermal loop's: 2(1 − a)(1 − cos w) ≥ (1 − a)².
pub fn ntf_crossover(f_ck: f64, tau_d: f64) -> f64 {
    let a = (-1.0 / (f_ck * tau_d)).exp();
    f_ck * (1.0 - 0.5 * (1.0 - a)).clamp(-1.0, 1.0).acos() / (2.0 * PI)
}

/// Frequency (Hz) where |NTF| has risen 3 dB above its DC value. Only the
/// leaky loop has one.
pub fn ntf_corner(f_ck: f64, tau_d: f64) -> f64 {
    let a = (-1.0 / (f_ck * tau_d)).exp();
    // |1 − a e^{−jw}|² = (1 − a)² + 2a(1 − cos w) = 2(1 − a)²
    let cos_w = 1.0 - (1.0 - a).powi(2) / (2.0 * a);
    f_ck * cos_w.clamp(-1.0, 1.0).acos() / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const F_CK: f64 = 131e3;
    const THERMAL: NtfKind = NtfKind::Thermal { tau_d: 3.3e-3 };

    #[test]
    fn dc_values() {
        assert_eq!(ntf_magnitude(0.0, F_CK, NtfKind::Ideal), 0.0);
        let dc = ntf_magnitude(0.0, F_CK, THERMAL);
        assert!((dc - 2.31e-3).abs() < 0.01e-3, "{dc}");
        assert_relative_eq!(dc, 1.0 - (-1.0 / (F_CK * 3.3e-3f64)).exp(), max_relative = 1e-12);
    }

    #[test]
    fn thermal_flat_to_corner() {
        let dc = ntf_magnitude(0.0, F_CK, THERMAL);
        let mut f = 0.1;
        while f <= 48.0 {
            let r = 20.0 * (ntf_magnitude(f, F_CK, THERMAL) / dc).log10();
            assert!((0.0..=3.0).contains(&r), "{f} Hz: {r} dB");
            f *= 1.1;
        }
        let corner = ntf_corner(F_CK, 3.3e-3);
        assert!((corner - 48.2).abs() < 0.2, "{corner}");
        assert!(ntf_magnitude(1e3, F_CK, THERMAL) > 10.0 * dc);
    }

    #[test]
    fn crossover() {
        let fx = ntf_crossover(F_CK, 3.3e-3);
        assert!((fx - 1001.0).abs() < 5.0, "{fx}");
        assert!(ntf_magnitude(0.0, F_CK, NtfKind::Ideal) < ntf_magnitude(0.0, F_CK, THERMAL));
        for f in [60.0, 200.0, 900.0] {
            assert!(ntf_magnitude(f, F_CK, NtfKind::Ideal) < ntf_magnitude(f, F_CK, THERMAL));
        }
        for f in [1.01 * fx, 2e3, 1e4, 65.5e3] {
            assert!(ntf_magnitude(f, F_CK, NtfKind::Ideal) >= ntf_magnitude(f, F_CK, THERMAL));
        }
        // above the thermal corner the curves stay within 3 dB
        let corner = ntf_corner(F_CK, 3.3e-3);
        let mut f = corner;
        while f < F_CK / 2.0 {
            let r = ntf_magnitude(f, F_CK, THERMAL) / ntf_magnitude(f, F_CK, NtfKind::Ideal);
            assert!(20.0 * r.log10() <= 3.01, "{f}: {r}");
            f *= 1.2;
        }
        assert_relative_eq!(ntf_magnitude(F_CK / 2.0, F_CK, NtfKind::Ideal), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn floor_density() {
        let d = quantization_noise_density(1.0 / 2f64.sqrt(), F_CK, 2.0);
        assert!((d * 1e3 - 7.31).abs() < 0.005, "{d}");
        assert_relative_eq!(quantization_noise_density(0.0, F_CK, 2.0), 2.0 / (F_CK / 2.0).sqrt());
        assert_eq!(quantization_noise_density(3.0, F_CK, 2.0), 0.0);
    }
}
