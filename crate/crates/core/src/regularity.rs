//! Regular / singular classification from the behaviour of `L+` under refinement.

use crate::asymptotics::linear_fit;
use crate::collocation::{timoshenko_collocation_with, to_modal, TipRotation};
use crate::error::{ensure, Result};
use crate::kernel::{plateau_estimate, PlateauWindow, DEFAULT_REGULARITY_FLOOR};
use crate::projection::build_projection;
use crate::structure::{eb_structure, string_structure, ModalStructure, ModelTag};
use crate::system::{assemble_first_order, InitialCondition};
use serde::{Deserialize, Serialize};

/// Relative change of consecutive estimates accepted as converged.
pub const CONVERGED_CHANGE: f64 = 0.05;
/// Minimum relative decay per doubling for a singular sequence.
pub const SINGULAR_DECAY: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelFamily {
    EulerBernoulli { damping: f64 },
    Timoshenko {
        beta: f64,
        gamma: f64,
        damping: f64,
        #[serde(default)]
        tip_rotation: TipRotation,
    },
    String { wave_speed: f64, damping: f64 },
}

impl ModelFamily {
    pub fn tag(&self) -> ModelTag {
        match self {
            ModelFamily::EulerBernoulli { .. } => ModelTag::EulerBernoulli,
            ModelFamily::Timoshenko { .. } => ModelTag::Timoshenko,
            ModelFamily::String { .. } => ModelTag::String,
        }
    }

    /// Modal structure with `size` modes (collocation points for Timoshenko).
    pub fn structure(&self, size: usize) -> Result<ModalStructure> {
        match *self {
            ModelFamily::EulerBernoulli { damping } => eb_structure(size, damping),
            ModelFamily::Timoshenko { beta, gamma, damping, tip_rotation } => {
                to_modal(&timoshenko_collocation_with(size, beta, gamma, tip_rotation)?, damping)
            }
            ModelFamily::String { wave_speed, damping } => string_structure(size, wave_speed, damping),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVerdict {
    Regular,
    Singular,
    Indeterminate,
}

impl SweepVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVerdict::Regular => "regular",
            SweepVerdict::Singular => "singular",
            SweepVerdict::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub model: ModelTag,
    pub sizes: Vec<usize>,
    pub l_plus: Vec<f64>,
    pub windows: Vec<(f64, f64)>,
    /// `(L+_{i+1} - L+_i) / L+_i`.
    pub relative_changes: Vec<f64>,
    pub verdict: SweepVerdict,
    pub alpha: f64,
    /// 1-based mode range used for the exponent fit.
    pub alpha_modes: (usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    pub window: PlateauWindow,
    pub eps: f64,
    pub regularity_floor: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { window: PlateauWindow::default(), eps: 3.5e-5, regularity_floor: DEFAULT_REGULARITY_FLOOR }
    }
}

/// Growth exponent of the upper half of the trusted spectrum, from the spacing law
/// `w_{k+1} - w_k ~ k^(alpha - 1)`, which is insensitive to an additive offset in `w_k`.
pub fn fit_alpha(ms: &ModalStructure) -> Option<(f64, (usize, usize))> {
    let r = ms.resolved_modes.min(ms.len());
    if r < 4 {
        return None;
    }
    let first = r / 2;
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for k in first..r {
        let gap = ms.omegas[k] - ms.omegas[k - 1];
        if gap <= 0.0 {
            return None;
        }
        lx.push((k as f64 + 0.5).ln());
        ly.push(gap.ln());
    }
    if lx.len() < 2 {
        return None;
    }
    Some((1.0 + linear_fit(&lx, &ly).0, (first, r)))
}

/// Classifies a sequence of estimates against the sizes that produced them.
pub fn classify_sequence(sizes: &[usize], estimates: &[f64], floor: f64) -> SweepVerdict {
    let n = estimates.len();
    if n < 2 {
        return SweepVerdict::Indeterminate;
    }
    let (a, b) = (estimates[n - 2], estimates[n - 1]);
    let scale = a.abs().max(b.abs());
    if b.abs() > floor && scale > 0.0 && (a - b).abs() / scale < CONVERGED_CHANGE {
        return SweepVerdict::Regular;
    }
    let decays = (1..n).all(|i| {
        let doublings = (sizes[i] as f64 / sizes[i - 1] as f64).log2();
        let required = (1.0 - SINGULAR_DECAY).powf(doublings);
        estimates[i - 1] > 0.0 && estimates[i] >= 0.0 && estimates[i] <= required * estimates[i - 1]
    });
    if decays || b.abs() <= floor {
        SweepVerdict::Singular
    } else {
        SweepVerdict::Indeterminate
    }
}

pub fn regularity_sweep(family: &ModelFamily, sizes: &[usize], opts: &SweepOptions) -> Result<RegularityReport> {
    ensure(sizes.len() >= 2, "sizes", || "at least two sizes are required".into())?;
    ensure(sizes.windows(2).all(|w| w[1] > w[0]), "sizes", || "sizes must be strictly increasing".into())?;
    let mut l_plus = Vec::new();
    let mut windows = Vec::new();
    let mut last = None;
    for &size in sizes {
        let ms = family.structure(size)?;
        let sys = assemble_first_order(&ms, None, &InitialCondition::rest())?;
        let proj = build_projection(&sys)?;
        let est = plateau_estimate(&sys, &proj, &opts.window, opts.eps, opts.regularity_floor)?;
        l_plus.push(est.value[1]);
        windows.push(est.window);
        last = Some(ms);
    }
    let relative_changes = l_plus.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect();
    let (alpha, alpha_modes) = last.as_ref().and_then(fit_alpha).unwrap_or((f64::NAN, (0, 0)));
    Ok(RegularityReport {
        model: family.tag(),
        sizes: sizes.to_vec(),
        verdict: classify_sequence(sizes, &l_plus, opts.regularity_floor),
        l_plus,
        windows,
        relative_changes,
        alpha,
        alpha_modes,
    })
}
