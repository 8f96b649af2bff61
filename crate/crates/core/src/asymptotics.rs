//! Constant-force approximation of the contact force over a short overlap `dt`.
//!
//! A constant force `f` acts for `dt` so that the contact point returns to the stop:
//! `0 = n.x+(f = 0) + f sum_k psi_k dx_k+/df`. Its scaling with `dt` follows the
//! number of modes that still respond quasi-statically, `N ~ dt^(-1/alpha)`.

use crate::error::{ensure, Error, Result};
use crate::oscillator::Oscillator;
use crate::structure::{eb_structure, string_structure, ModalStructure, ModelTag};
use serde::{Deserialize, Serialize};

pub const DEFAULT_ETA: f64 = 0.1;
pub const DEFAULT_MODE_FACTOR: f64 = 4.0;

/// `psi_k dx_k+/df` for a unit constant force held over `dt`: `psi^2 (1 - c(dt)) / w^2`.
pub fn force_sensitivity(psi_sq: f64, omega: f64, damping: f64, delta_t: f64) -> f64 {
    psi_sq * Oscillator::new(omega, damping).step(delta_t)
}

/// `d(psi_k x'_k+)/df`, the matching velocity sensitivity.
pub fn velocity_sensitivity(psi_sq: f64, omega: f64, damping: f64, delta_t: f64) -> f64 {
    psi_sq * Oscillator::new(omega, damping).impulse(delta_t)
}

/// Contact-point displacement after `dt` of free flight from the stop with modal velocities `v`.
fn free_tip_displacement(ms: &ModalStructure, v_minus: &[f64], delta_t: f64) -> f64 {
    (0..ms.len())
        .map(|k| ms.tip_values[k] * Oscillator::new(ms.omegas[k], ms.dampings[k]).impulse(delta_t) * v_minus[k])
        .sum()
}

fn check_inputs(ms: &ModalStructure, v_minus: &[f64], delta_t: f64) -> Result<f64> {
    ensure(delta_t > 0.0 && delta_t.is_finite(), "delta_t", || format!("{delta_t} must be positive"))?;
    ensure(v_minus.len() == ms.len(), "v_minus", || format!("length {} differs from mode count {}", v_minus.len(), ms.len()))?;
    Ok(ms.tip_values.iter().zip(v_minus).map(|(n, v)| n * v).sum())
}

/// Constant force that closes the overlap after `dt`, starting on the stop.
pub fn constant_force_bvp(ms: &ModalStructure, v_minus: &[f64], delta_t: f64) -> Result<f64> {
    let approach = check_inputs(ms, v_minus, delta_t)?;
    if approach == 0.0 && v_minus.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let numerator = free_tip_displacement(ms, v_minus, delta_t);
    let denominator: f64 = (0..ms.len())
        .map(|k| force_sensitivity(ms.tip_values[k].powi(2), ms.omegas[k], ms.dampings[k], delta_t))
        .sum();
    if !(denominator.is_finite() && denominator > f64::MIN_POSITIVE) {
        return Err(Error::VanishingSensitivity { delta_t, modes_needed: ms.len().saturating_mul(2) });
    }
    Ok(-numerator / denominator)
}

/// The leading-order shortcut `n.x+ ~ dt n.v-` for the numerator, for comparison.
pub fn constant_force_leading_numerator(ms: &ModalStructure, v_minus: &[f64], delta_t: f64) -> Result<f64> {
    let approach = check_inputs(ms, v_minus, delta_t)?;
    let denominator: f64 = (0..ms.len())
        .map(|k| force_sensitivity(ms.tip_values[k].powi(2), ms.omegas[k], ms.dampings[k], delta_t))
        .sum();
    Ok(-delta_t * approach / denominator)
}

/// `N = ceil((2 sqrt(3 - 3 eta) / w0)^(1/alpha) dt^(-1/alpha))`, at least 1.
pub fn mode_count_estimate(omega0: f64, alpha: f64, eta: f64, delta_t: f64) -> usize {
    let base = (2.0 * (3.0 - 3.0 * eta).max(0.0).sqrt() / omega0).powf(1.0 / alpha) * delta_t.powf(-1.0 / alpha);
    (base.ceil() as usize).max(1)
}

/// Effective number of quasi-statically responding modes: the sum of normalized
/// sensitivities `2 X_k(dt) / dt^2`, weighted by `psi_k^2` over its mean.
pub fn measured_mode_count(ms: &ModalStructure, delta_t: f64) -> f64 {
    let mean_sq = ms.tip_values.iter().map(|n| n * n).sum::<f64>() / ms.len() as f64;
    if mean_sq == 0.0 {
        return 0.0;
    }
    (0..ms.len())
        .map(|k| {
            let psi_sq = ms.tip_values[k].powi(2);
            2.0 * force_sensitivity(psi_sq, ms.omegas[k], ms.dampings[k], delta_t) / (delta_t * delta_t) / mean_sq
        })
        .sum()
}

/// First mode whose expanded normalized coefficient `1 - 2/3 D w dt - (1 - 4 D^2)/12 (w dt)^2`
/// falls below `eta`; `None` if no mode in the structure does.
pub fn threshold_mode_index(ms: &ModalStructure, eta: f64, delta_t: f64) -> Option<usize> {
    (0..ms.len())
        .find(|&k| {
            let (w, d) = (ms.omegas[k], ms.dampings[k]);
            let u = w * delta_t;
            1.0 - 2.0 / 3.0 * d * u - (1.0 - 4.0 * d * d) / 12.0 * u * u < eta
        })
        .map(|k| k + 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReversalCheck {
    pub defect: f64,
    /// Change of each modal velocity over the overlap.
    pub velocity_changes: Vec<f64>,
    pub force: f64,
}

/// Propagates every mode under the constant force over `dt` and compares the
/// rebound velocity with the incident one.
pub fn reversal_check(ms: &ModalStructure, v_minus: &[f64], delta_t: f64) -> Result<ReversalCheck> {
    let approach = check_inputs(ms, v_minus, delta_t)?;
    ensure(approach < 0.0, "v_minus", || format!("contact point must approach the stop (n.v = {approach})"))?;
    let force = constant_force_bvp(ms, v_minus, delta_t)?;
    let mut rebound = 0.0;
    let mut velocity_changes = Vec::with_capacity(ms.len());
    for k in 0..ms.len() {
        let osc = Oscillator::new(ms.omegas[k], ms.dampings[k]);
        let n = ms.tip_values[k];
        let (_, v) = osc.propagate_loaded(0.0, v_minus[k], n * force, delta_t);
        velocity_changes.push(v - v_minus[k]);
        rebound += n * v;
    }
    Ok(ReversalCheck { defect: (rebound + approach).abs() / approach.abs(), velocity_changes, force })
}

/// Reversal defect when the modes up to `N` respond with their leading-order
/// sensitivities (`X ~ dt^2 / 2`, `s ~ dt`) and the rest are ignored.
pub fn leading_order_reversal_defect(ms: &ModalStructure, v_minus: &[f64], delta_t: f64, n_modes: usize) -> Result<f64> {
    let approach = check_inputs(ms, v_minus, delta_t)?;
    ensure(approach != 0.0, "v_minus", || "zero approach velocity".into())?;
    let sum_sq: f64 = ms.tip_values.iter().take(n_modes).map(|n| n * n).sum();
    let force = -2.0 * approach / (delta_t * sum_sq);
    let rebound = approach + force * delta_t * sum_sq;
    Ok((rebound + approach).abs() / approach.abs())
}

/// Families with analytic spectra for the overlap study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AnalyticFamily {
    EulerBernoulli { damping: f64 },
    String { wave_speed: f64, damping: f64 },
}

impl AnalyticFamily {
    pub fn tag(&self) -> ModelTag {
        match self {
            AnalyticFamily::EulerBernoulli { .. } => ModelTag::EulerBernoulli,
            AnalyticFamily::String { .. } => ModelTag::String,
        }
    }

    /// `(w0, alpha)` of the asymptotic law `w_k ~ w0 k^alpha`.
    pub fn scaling(&self) -> (f64, f64) {
        use std::f64::consts::PI;
        match *self {
            AnalyticFamily::EulerBernoulli { .. } => (PI * PI, 2.0),
            AnalyticFamily::String { wave_speed, .. } => (PI * wave_speed, 1.0),
        }
    }

    pub fn structure(&self, modes: usize) -> Result<ModalStructure> {
        match *self {
            AnalyticFamily::EulerBernoulli { damping } => eb_structure(modes, damping),
            AnalyticFamily::String { wave_speed, damping } => string_structure(modes, wave_speed, damping),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticsOptions {
    pub eta: f64,
    /// Modes used per grid point, as a multiple of the estimate `N`.
    pub mode_factor: f64,
}

impl Default for AsymptoticsOptions {
    fn default() -> Self {
        AsymptoticsOptions { eta: DEFAULT_ETA, mode_factor: DEFAULT_MODE_FACTOR }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub model: ModelTag,
    pub delta_t: Vec<f64>,
    pub fc: Vec<f64>,
    pub exponent_fit: f64,
    pub expected_exponent: f64,
    pub c_constant: f64,
    #[serde(rename = "N_measured")]
    pub n_measured: Vec<f64>,
    #[serde(rename = "N_estimated")]
    pub n_estimated: Vec<usize>,
    pub modes_used: Vec<usize>,
    pub reversal_defect: Vec<f64>,
    pub reversal_defect_leading_order: Vec<f64>,
    pub eta: f64,
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Runs the overlap study on a descending `dt` grid with a unit approach speed carried by mode 1.
pub fn asymptotics_report(family: &AnalyticFamily, grid: &[f64], opts: &AsymptoticsOptions) -> Result<AsymptoticsReport> {
    ensure(grid.len() >= 2, "delta_t", || "at least two grid points are required".into())?;
    ensure(grid.iter().all(|d| *d > 0.0 && d.is_finite()), "delta_t", || "grid must be positive".into())?;
    ensure(grid.windows(2).all(|w| w[1] < w[0]), "delta_t", || "grid must be strictly descending".into())?;
    ensure(opts.eta > 0.0 && opts.eta < 1.0, "eta", || format!("{} is outside (0, 1)", opts.eta))?;
    ensure(opts.mode_factor >= 1.0, "mode_factor", || format!("{} must be at least 1", opts.mode_factor))?;
    let (w0, alpha) = family.scaling();

    let mut report = AsymptoticsReport {
        model: family.tag(),
        delta_t: grid.to_vec(),
        fc: Vec::new(),
        exponent_fit: 0.0,
        expected_exponent: 1.0 / alpha - 1.0,
        c_constant: 0.0,
        n_measured: Vec::new(),
        n_estimated: Vec::new(),
        modes_used: Vec::new(),
        reversal_defect: Vec::new(),
        reversal_defect_leading_order: Vec::new(),
        eta: opts.eta,
    };
    for &dt in grid {
        let n_est = mode_count_estimate(w0, alpha, opts.eta, dt);
        let modes = ((opts.mode_factor * n_est as f64).ceil() as usize).max(n_est);
        let ms = family.structure(modes)?;
        let mut v_minus = vec![0.0; modes];
        v_minus[0] = -1.0 / ms.tip_values[0];
        let rev = reversal_check(&ms, &v_minus, dt)?;
        report.fc.push(rev.force);
        report.reversal_defect.push(rev.defect);
        report.reversal_defect_leading_order.push(leading_order_reversal_defect(&ms, &v_minus, dt, n_est)?);
        report.n_measured.push(measured_mode_count(&ms, dt));
        report.n_estimated.push(n_est);
        report.modes_used.push(modes);
    }
    let lx: Vec<f64> = grid.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = report.fc.iter().map(|f| f.abs().ln()).collect();
    let (slope, intercept) = linear_fit(&lx, &ly);
    report.exponent_fit = slope;
    report.c_constant = intercept.exp();
    Ok(report)
}

/// Log-spaced descending grid from `hi` to `lo`.
pub fn log_grid(hi: f64, lo: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points).map(|i| hi * (lo / hi).powf(i as f64 / (points - 1) as f64)).collect()
}
