//! Modal descriptions of the cantilever beams and the fixed-free string.

use crate::error::{ensure, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelTag {
    EulerBernoulli,
    Timoshenko,
    String,
}

impl ModelTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelTag::EulerBernoulli => "euler-bernoulli",
            ModelTag::Timoshenko => "timoshenko",
            ModelTag::String => "string",
        }
    }
}

/// Natural frequencies, damping ratios and mass-normalized contact-point mode values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalStructure {
    pub omegas: Vec<f64>,
    pub dampings: Vec<f64>,
    pub tip_values: Vec<f64>,
    pub model_tag: ModelTag,
    pub nominal_alpha: f64,
    /// Number of leading modes that are trustworthy approximations of the continuum.
    pub resolved_modes: usize,
}

impl ModalStructure {
    /// Builds and validates a modal structure.
    pub fn new(
        omegas: Vec<f64>,
        dampings: Vec<f64>,
        tip_values: Vec<f64>,
        model_tag: ModelTag,
        nominal_alpha: f64,
    ) -> Result<Self> {
        let resolved_modes = omegas.len();
        let ms = ModalStructure { omegas, dampings, tip_values, model_tag, nominal_alpha, resolved_modes };
        ms.validate()?;
        Ok(ms)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.omegas.len();
        ensure(m >= 1, "modes", || "at least one mode is required".into())?;
        ensure(self.dampings.len() == m && self.tip_values.len() == m, "modes", || {
            format!(
                "omegas, dampings and tip_values must have equal length ({}, {}, {})",
                m,
                self.dampings.len(),
                self.tip_values.len()
            )
        })?;
        for (k, w) in self.omegas.iter().enumerate() {
            ensure(w.is_finite() && *w > 0.0, "omegas", || format!("mode {} has non-positive frequency {w}", k + 1))?;
            if k > 0 {
                ensure(*w >= self.omegas[k - 1], "omegas", || "frequencies must be nondecreasing".into())?;
            }
        }
        for d in &self.dampings {
            ensure((0.0..1.0).contains(d), "damping", || format!("{d} is outside [0, 1)"))?;
        }
        for n in &self.tip_values {
            ensure(n.is_finite(), "tip_values", || "non-finite tip value".into())?;
        }
        ensure(
            self.resolved_modes >= 1 && self.resolved_modes <= m,
            "resolved_modes",
            || format!("{} is outside 1..={m}", self.resolved_modes),
        )
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn max_omega(&self) -> f64 {
        self.omegas.iter().cloned().fold(0.0, f64::max)
    }
}

/// Overflow-safe form of the cantilever characteristic equation `1 + cos s cosh s = 0`.
pub fn eb_characteristic(s: f64) -> f64 {
    s.cos() + 1.0 / s.cosh()
}

/// First `m` natural frequencies `w_k = s_k^2` of the clamped-free beam.
pub fn eb_frequencies(m: usize) -> Result<Vec<f64>> {
    ensure(m >= 1, "modes", || "at least one mode is required".into())?;
    (1..=m)
        .map(|k| {
            let mut lo = (k - 1) as f64 * PI;
            let mut hi = k as f64 * PI;
            let mut f_lo = eb_characteristic(lo);
            let f_hi = eb_characteristic(hi);
            if f_lo == 0.0 {
                return Ok(lo * lo);
            }
            if f_lo.signum() == f_hi.signum() {
                return Err(Error::RootBracket { k });
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let f_mid = eb_characteristic(mid);
                if f_mid == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if f_mid.signum() == f_lo.signum() {
                    lo = mid;
                    f_lo = f_mid;
                } else {
                    hi = mid;
                }
            }
            let s = 0.5 * (lo + hi);
            if eb_characteristic(s).abs() >= 1e-10 {
                return Err(Error::RootBracket { k });
            }
            Ok(s * s)
        })
        .collect()
}

/// Clamped-free Euler-Bernoulli beam with tip values `(2, -2, 2, ...)`.
pub fn eb_structure(m: usize, damping: f64) -> Result<ModalStructure> {
    let omegas = eb_frequencies(m)?;
    let tips = (0..m).map(|k| if k % 2 == 0 { 2.0 } else { -2.0 }).collect();
    ModalStructure::new(omegas, vec![damping; m], tips, ModelTag::EulerBernoulli, 2.0)
}

/// Fixed-free string of unit length with wave speed `c`, contact at the free end.
pub fn string_structure(m: usize, wave_speed: f64, damping: f64) -> Result<ModalStructure> {
    ensure(m >= 1, "modes", || "at least one mode is required".into())?;
    ensure(wave_speed > 0.0 && wave_speed.is_finite(), "wave_speed", || format!("{wave_speed} must be positive"))?;
    let omegas = (1..=m).map(|k| (k as f64 - 0.5) * PI * wave_speed).collect();
    let tips = (0..m).map(|k| if k % 2 == 0 { 2f64.sqrt() } else { -(2f64.sqrt()) }).collect();
    ModalStructure::new(omegas, vec![damping; m], tips, ModelTag::String, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn first_eb_roots() {
        let w = eb_frequencies(2).unwrap();
        assert_relative_eq!(w[0].sqrt(), 1.875104068711961, max_relative = 1e-12);
        assert_relative_eq!(w[1].sqrt(), 4.694091132974175, max_relative = 1e-12);
        assert_relative_eq!(w[0], 3.51602, max_relative = 1e-5);
        assert_relative_eq!(w[1], 22.0345, max_relative = 1e-5);
    }

    #[test]
    fn high_eb_roots_approach_asymptote() {
        let w = eb_frequencies(20).unwrap();
        let asym = (20.0 * PI - PI / 2.0).powi(2);
        assert!(((w[19] - asym) / asym).abs() < 1e-6);
    }

    #[test]
    fn eb_roots_stay_finite_far_out() {
        let w = eb_frequencies(400).unwrap();
        for (k, wk) in w.iter().enumerate() {
            assert!(eb_characteristic(wk.sqrt()).abs() < 1e-10, "mode {}", k + 1);
        }
    }

    #[test]
    fn zero_modes_rejected() {
        assert!(matches!(eb_frequencies(0), Err(Error::Invalid { .. })));
    }

    #[test]
    fn eb_structure_values() {
        let ms = eb_structure(4, 0.0).unwrap();
        assert_eq!(ms.tip_values, vec![2.0, -2.0, 2.0, -2.0]);
        assert_eq!(eb_structure(1, 0.1).unwrap().dampings, vec![0.1]);
        assert_eq!(eb_structure(50, 0.1).unwrap().nominal_alpha, 2.0);
    }

    #[test]
    fn string_values() {
        let ms = string_structure(2, 1.0, 0.0).unwrap();
        assert_relative_eq!(ms.omegas[0], PI / 2.0);
        assert_relative_eq!(ms.omegas[1], 1.5 * PI);
        assert_relative_eq!(string_structure(1, 2.0, 0.0).unwrap().omegas[0], PI);
        for n in string_structure(9, 1.0, 0.0).unwrap().tip_values {
            assert_relative_eq!(n.abs(), 2f64.sqrt());
        }
    }

    #[test]
    fn invalid_damping_rejected() {
        assert!(eb_structure(3, 1.0).is_err());
        assert!(string_structure(3, 1.0, -0.1).is_err());
        assert!(string_structure(3, 0.0, 0.1).is_err());
    }
}
