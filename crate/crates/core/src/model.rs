//! Physical parameters and the two periodic modulations.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::Vector6;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Rates, couplings and modulation settings, all in units of the mechanical
/// frequency.
///
/// Field names on the wire match the configuration keys (`Omega`, `E0`, `G`,
/// `N`, ...). Only `omega_m` is optional and defaults to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    #[serde(default = "unit")]
    pub omega_m: f64,
    /// Cavity-laser detuning.
    pub delta_c: f64,
    /// Maximum dot detuning reached by the electrical modulation.
    pub delta_0: f64,
    /// Frequency of the dot modulation.
    pub omega_e: f64,
    /// Frequency of the drive modulation.
    #[serde(rename = "Omega")]
    pub drive_freq: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
    /// Drive modulation depth.
    pub eps: f64,
    /// Radiation-pressure coupling.
    #[serde(rename = "G")]
    pub g_om: f64,
    /// Dot-cavity coupling.
    pub g0: f64,
    pub kappa_a: f64,
    pub kappa_d: f64,
    pub gamma_m: f64,
    /// Population inversion, held fixed.
    #[serde(rename = "N")]
    pub inversion: f64,
    /// Thermal occupation of the mechanical bath.
    pub n_b: f64,
}

fn unit() -> f64 {
    1.0
}

/// Configuration keys, in declaration order.
pub const PARAM_KEYS: [&str; 14] = [
    "omega_m", "delta_c", "delta_0", "omega_e", "Omega", "E0", "eps", "G", "g0", "kappa_a",
    "kappa_d", "gamma_m", "N", "n_b",
];

impl SystemParams {
    /// Pump amplitude `E0 + eps cos(Omega t)`.
    pub fn drive_amplitude(&self, t: f64) -> f64 {
        self.e0 + self.eps * (self.drive_freq * t).cos()
    }

    /// Dot detuning `delta_0 (1 - cos(omega_e t)) / 2`, always in `[0, delta_0]`.
    pub fn qd_detuning(&self, t: f64) -> f64 {
        0.5 * self.delta_0 * (1.0 - (self.omega_e * t).cos())
    }

    /// Modulation period `2 pi / Omega`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.drive_freq
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(self) -> Result<Self, ValidationErrors> {
        let mut errs = Vec::new();
        for key in PARAM_KEYS {
            let v = self.get(key).expect("known key");
            if !v.is_finite() {
                errs.push(ParamViolation::NonFinite(key));
            }
        }
        if !(self.omega_m > 0.0) {
            errs.push(ParamViolation::NonPositiveMechanicalFrequency);
        }
        if !(self.kappa_a > 0.0) {
            errs.push(ParamViolation::NonPositiveCavityDecay);
        }
        if !(self.kappa_d > 0.0) {
            errs.push(ParamViolation::NonPositiveQdDecay);
        }
        if self.gamma_m < 0.0 {
            errs.push(ParamViolation::NegativeMechanicalDamping);
        }
        if self.eps != 0.0 && !(self.drive_freq > 0.0) {
            errs.push(ParamViolation::NonPositiveDriveFrequency);
        }
        if self.delta_0 != 0.0 && !(self.omega_e > 0.0) {
            errs.push(ParamViolation::NonPositiveQdModulationFrequency);
        }
        if !(-1.0..=1.0).contains(&self.inversion) {
            errs.push(ParamViolation::InversionOutOfRange);
        }
        if self.n_b < 0.0 {
            errs.push(ParamViolation::NegativeThermalOccupation);
        }
        if errs.is_empty() {
            Ok(self)
        } else {
            Err(ValidationErrors(errs))
        }
    }

    /// Reads a field by its configuration key.
    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "omega_m" => self.omega_m,
            "delta_c" => self.delta_c,
            "delta_0" => self.delta_0,
            "omega_e" => self.omega_e,
            "Omega" => self.drive_freq,
            "E0" => self.e0,
            "eps" => self.eps,
            "G" => self.g_om,
            "g0" => self.g0,
            "kappa_a" => self.kappa_a,
            "kappa_d" => self.kappa_d,
            "gamma_m" => self.gamma_m,
            "N" => self.inversion,
            "n_b" => self.n_b,
            _ => return None,
        })
    }

    /// Writes a field by its configuration key; returns `false` for unknown keys.
    pub fn set(&mut self, key: &str, value: f64) -> bool {
        let slot = match key {
            "omega_m" => &mut self.omega_m,
            "delta_c" => &mut self.delta_c,
            "delta_0" => &mut self.delta_0,
            "omega_e" => &mut self.omega_e,
            "Omega" => &mut self.drive_freq,
            "E0" => &mut self.e0,
            "eps" => &mut self.eps,
            "G" => &mut self.g_om,
            "g0" => &mut self.g0,
            "kappa_a" => &mut self.kappa_a,
            "kappa_d" => &mut self.kappa_d,
            "gamma_m" => &mut self.gamma_m,
            "N" => &mut self.inversion,
            "n_b" => &mut self.n_b,
            _ => return false,
        };
        *slot = value;
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamViolation {
    NonFinite(&'static str),
    NonPositiveMechanicalFrequency,
    NonPositiveCavityDecay,
    NonPositiveQdDecay,
    NegativeMechanicalDamping,
    NonPositiveDriveFrequency,
    NonPositiveQdModulationFrequency,
    InversionOutOfRange,
    NegativeThermalOccupation,
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonFinite(key) => write!(f, "non-finite value for {key}"),
            Self::NonPositiveMechanicalFrequency => f.write_str("non-positive mechanical frequency"),
            Self::NonPositiveCavityDecay => f.write_str("non-positive cavity decay"),
            Self::NonPositiveQdDecay => f.write_str("non-positive QD decay"),
            Self::NegativeMechanicalDamping => f.write_str("negative mechanical damping"),
            Self::NonPositiveDriveFrequency => {
                f.write_str("non-positive drive modulation frequency with eps != 0")
            }
            Self::NonPositiveQdModulationFrequency => {
                f.write_str("non-positive QD modulation frequency with delta_0 != 0")
            }
            Self::InversionOutOfRange => f.write_str("inversion out of range"),
            Self::NegativeThermalOccupation => f.write_str("negative thermal occupation"),
        }
    }
}

/// Every invariant violated by a parameter set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationErrors(pub Vec<ParamViolation>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid parameters: ")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

/// Mean mirror position and momentum, cavity amplitude and exciton coherence.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanFieldState {
    pub q: f64,
    pub p: f64,
    pub a: Complex64,
    pub sigma: Complex64,
}

impl MeanFieldState {
    pub const COMPONENTS: [&'static str; 6] = ["q", "p", "Re(a)", "Im(a)", "Re(sigma)", "Im(sigma)"];

    pub fn new(q: f64, p: f64, a: Complex64, sigma: Complex64) -> Self {
        Self { q, p, a, sigma }
    }

    /// Packs as `(q, p, Re a, Im a, Re sigma, Im sigma)`.
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.q, self.p, self.a.re, self.a.im, self.sigma.re, self.sigma.im)
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            q: v[0],
            p: v[1],
            a: Complex64::new(v[2], v[3]),
            sigma: Complex64::new(v[4], v[5]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|x| x.is_finite())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn fig2() -> SystemParams {
        SystemParams {
            omega_m: 1.0,
            delta_c: 1.0,
            delta_0: 1.0,
            omega_e: 1.0,
            drive_freq: 1.0,
            e0: 1.0,
            eps: 0.6,
            g_om: 0.01,
            g0: 0.3,
            kappa_a: 0.1,
            kappa_d: 0.2,
            gamma_m: 0.01,
            inversion: 1.0,
            n_b: 0.0,
        }
    }

    #[test]
    fn drive_amplitude_examples() {
        let p = fig2();
        assert_eq!(p.drive_amplitude(0.0), 1.6);
        assert!((p.drive_amplitude(PI) - 0.4).abs() < 1e-15);
        let off = SystemParams { eps: 0.0, ..p };
        assert_eq!(off.drive_amplitude(3.7), 1.0);
    }

    #[test]
    fn qd_detuning_examples() {
        let p = fig2();
        assert_eq!(p.qd_detuning(0.0), 0.0);
        assert_eq!(p.qd_detuning(PI), 1.0);
        let off = SystemParams { delta_0: 0.0, ..p };
        assert_eq!(off.qd_detuning(2.1), 0.0);
    }

    #[test]
    fn fig2_set_is_valid() {
        assert_eq!(fig2().validate(), Ok(fig2()));
    }

    #[test]
    fn negative_cavity_decay_is_named() {
        let err = SystemParams { kappa_a: -0.1, ..fig2() }.validate().unwrap_err();
        assert_eq!(err.0, vec![ParamViolation::NonPositiveCavityDecay]);
        assert!(err.to_string().contains("non-positive cavity decay"));
    }

    #[test]
    fn inversion_out_of_range_is_named() {
        let err = SystemParams { inversion: 2.0, ..fig2() }.validate().unwrap_err();
        assert_eq!(err.0, vec![ParamViolation::InversionOutOfRange]);
        assert!(err.to_string().contains("inversion out of range"));
    }

    #[test]
    fn all_violations_reported() {
        let bad = SystemParams {
            kappa_a: 0.0,
            kappa_d: -1.0,
            inversion: -1.5,
            n_b: -0.1,
            ..fig2()
        };
        let err = bad.validate().unwrap_err();
        assert_eq!(err.0.len(), 4);
    }

    #[test]
    fn modulation_frequency_required_only_when_modulated() {
        let p = SystemParams { eps: 0.0, drive_freq: 0.0, ..fig2() };
        assert!(p.validate().is_ok());
        let p = SystemParams { drive_freq: 0.0, ..fig2() };
        assert_eq!(p.validate().unwrap_err().0, vec![ParamViolation::NonPositiveDriveFrequency]);
        let p = SystemParams { omega_e: -1.0, ..fig2() };
        assert_eq!(
            p.validate().unwrap_err().0,
            vec![ParamViolation::NonPositiveQdModulationFrequency]
        );
    }

    #[test]
    fn get_set_cover_every_key() {
        let mut p = fig2();
        for (i, key) in PARAM_KEYS.iter().enumerate() {
            assert!(p.set(key, i as f64 + 0.5));
            assert_eq!(p.get(key), Some(i as f64 + 0.5));
        }
        assert!(!p.set("kappa", 1.0));
        assert_eq!(p.get("kappa"), None);
    }

    #[test]
    fn state_vector_roundtrip() {
        let s = MeanFieldState::new(0.1, -0.2, Complex64::new(1.0, 2.0), Complex64::new(-3.0, 4.0));
        assert_eq!(MeanFieldState::from_vector(&s.to_vector()), s);
    }

    proptest! {
        #[test]
        fn modulations_are_periodic(t in -500.0f64..500.0, omega in 0.2f64..5.0, d0 in 0.0f64..3.0) {
            let p = SystemParams { drive_freq: omega, omega_e: omega, delta_0: d0, ..fig2() };
            let tau = 2.0 * PI / omega;
            prop_assert!((p.drive_amplitude(t + tau) - p.drive_amplitude(t)).abs() < 1e-11);
            prop_assert!((p.qd_detuning(t + tau) - p.qd_detuning(t)).abs() < 1e-11);
        }

        #[test]
        fn detuning_stays_in_range(t in -1e3f64..1e3, d0 in 0.0f64..5.0) {
            let p = SystemParams { delta_0: d0, ..fig2() };
            let v = p.qd_detuning(t);
            prop_assert!(v >= 0.0 && v <= d0);
        }

        #[test]
        fn validate_is_idempotent(ka in -1.0f64..1.0, n in -2.0f64..2.0, nb in -1.0f64..3.0) {
            let p = SystemParams { kappa_a: ka, inversion: n, n_b: nb, ..fig2() };
            let once = p.validate();
            if let Ok(v) = once {
                prop_assert_eq!(v.validate(), Ok(v));
                prop_assert_eq!(v, p);
            } else {
                prop_assert_eq!(p.validate(), once);
            }
        }
    }
}
