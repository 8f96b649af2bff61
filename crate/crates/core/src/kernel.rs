//! Memory kernel `L(tau)`, drift constant `L_inf`, forcing term `g(t)` and the `L+` estimate.
//!
//! For the modal projection supported on mode `s`, the non-support modes of `R Q`
//! evolve as free damped oscillators, which gives the kernel in closed form:
//!
//! ```text
//! L1(tau) = 0
//! L2(tau) = sum_{k != s} n_k^2 [ (1 - w_s^2 / w_k^2) s_k(tau)
//!                              + (2 D_s w_s - 2 D_k w_s^2 / w_k) X_k(tau) ]
//! ```
//!
//! with `s_k` the impulse response and `X_k` the unit step response of mode `k`.

use crate::error::{ensure, Error, Result};
use crate::oscillator::Oscillator;
use crate::projection::Projection;
use crate::system::FirstOrderSystem;
use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-10;
pub const DEFAULT_REGULARITY_FLOOR: f64 = 1e-6;

/// `L_inf = A V R^-1 (0, n)`, using the block structure of `R`.
pub fn compute_l_infty(sys: &FirstOrderSystem, proj: &Projection) -> Result<[f64; 2]> {
    let n = sys.tip_values();
    // R (v1, v2) = (0, n) gives v2 = 0 and v1_k = -n_k / w_k^2.
    let mut y = Vector2::zeros();
    for (k, w) in sys.modal.omegas.iter().enumerate() {
        if *w == 0.0 {
            return Err(Error::Discretization(format!("R is singular: mode {} has zero frequency", k + 1)));
        }
        y[0] -= n[k] * n[k] / (w * w);
    }
    let l = proj.a * y;
    Ok([l[0], l[1]])
}

#[derive(Clone, Copy, Debug)]
struct KernelTerm {
    osc: Oscillator,
    impulse_weight: f64,
    step_weight: f64,
    /// `|L'|` contribution bound `C` with `|term'(tau)| <= C e^{-a tau}`.
    rate_bound: f64,
}

/// Closed-form kernel of a modal system.
#[derive(Clone, Debug)]
pub struct KernelFunction {
    terms: Vec<KernelTerm>,
    pub l_infty: [f64; 2],
    pub omega_min: f64,
    pub omega_max: f64,
}

impl KernelFunction {
    pub fn new(sys: &FirstOrderSystem, proj: &Projection) -> Result<Self> {
        let l_infty = compute_l_infty(sys, proj)?;
        let s = proj.support;
        let ms = &sys.modal;
        let (ws, ds) = (ms.omegas[s], ms.dampings[s]);
        let terms = (0..ms.len())
            .filter(|&k| k != s)
            .map(|k| {
                let (wk, dk, nk) = (ms.omegas[k], ms.dampings[k], ms.tip_values[k]);
                let osc = Oscillator::new(wk, dk);
                let impulse_weight = nk * nk * (1.0 - ws * ws / (wk * wk));
                let step_weight = nk * nk * (2.0 * ds * ws - 2.0 * dk * ws * ws / wk);
                let (bs, bds) = osc.envelope();
                KernelTerm { osc, impulse_weight, step_weight, rate_bound: impulse_weight.abs() * bds + step_weight.abs() * bs }
            })
            .collect();
        Ok(KernelFunction { terms, l_infty, omega_min: ms.omegas[0], omega_max: ms.max_omega() })
    }

    /// `L(tau)`.
    pub fn eval(&self, tau: f64) -> [f64; 2] {
        let l2 = self
            .terms
            .iter()
            .map(|t| t.impulse_weight * t.osc.impulse(tau) + t.step_weight * t.osc.step(tau))
            .sum();
        [0.0, l2]
    }

    /// `L'(tau) = V e^{RQ tau} (0, n) - L_inf`.
    pub fn rate(&self, tau: f64) -> [f64; 2] {
        let r2 = self
            .terms
            .iter()
            .map(|t| t.impulse_weight * t.osc.impulse_rate(tau) + t.step_weight * t.osc.impulse(tau))
            .sum();
        [0.0, r2]
    }

    /// Upper bound on `|L'(sigma)|` for all `sigma >= tau`.
    pub fn rate_bound(&self, tau: f64) -> f64 {
        self.terms.iter().map(|t| t.rate_bound * (-t.osc.decay() * tau).exp()).sum()
    }

    pub fn is_damped(&self) -> bool {
        self.terms.iter().all(|t| t.osc.decay() > 0.0)
    }

    fn mean_over(&self, a: f64, b: f64) -> [f64; 2] {
        const SAMPLES: usize = 400;
        let h = (b - a) / SAMPLES as f64;
        let mut acc = [0.0; 2];
        for i in 0..=SAMPLES {
            let wgt = if i == 0 || i == SAMPLES { 0.5 } else { 1.0 };
            let l = self.eval(a + h * i as f64);
            acc[0] += wgt * l[0];
            acc[1] += wgt * l[1];
        }
        [acc[0] / SAMPLES as f64, acc[1] / SAMPLES as f64]
    }

    /// First time on a log grid where the log-slope of `L2` drops below `threshold`.
    fn knee(&self, threshold: f64) -> Option<f64> {
        let lo = 1e-3 / self.omega_max;
        let hi = (20.0 / self.omega_min).max(lo * 10.0);
        let per_decade = 64.0;
        let steps = ((hi / lo).log10() * per_decade).ceil() as usize;
        (0..=steps).map(|i| lo * 10f64.powf(i as f64 / per_decade)).find(|&tau| {
            let l = self.eval(tau)[1];
            l > 0.0 && tau * self.rate(tau)[1] / l < threshold
        })
    }
}

/// How the plateau window for `L+` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PlateauWindow {
    /// Absolute window `[start, end]`.
    Fixed { start: f64, end: f64 },
    /// Window `[start eps, end eps]` in grid steps.
    GridMultiples { start: f64, end: f64 },
    /// Window `[tau_k, span tau_k]` where `tau_k` is where the early linear rise of `L2`
    /// bends over, detected as the log-slope falling below `slope`.
    Knee { slope: f64, span: f64 },
}

impl Default for PlateauWindow {
    fn default() -> Self {
        PlateauWindow::Knee { slope: 0.75, span: 2.0 }
    }
}

impl PlateauWindow {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PlateauWindow::Fixed { start, end } | PlateauWindow::GridMultiples { start, end } => {
                ensure(start > 0.0 && end > start, "plateau_window", || format!("need 0 < start < end, got [{start}, {end}]"))
            }
            PlateauWindow::Knee { slope, span } => {
                ensure(slope > 0.0 && slope < 1.0, "plateau_window.slope", || format!("{slope} is outside (0, 1)"))?;
                ensure(span > 1.0, "plateau_window.span", || format!("{span} must exceed 1"))
            }
        }
    }

    fn resolve(&self, f: &KernelFunction, eps: f64) -> (f64, f64) {
        match *self {
            PlateauWindow::Fixed { start, end } => (start, end),
            PlateauWindow::GridMultiples { start, end } => (start * eps, end * eps),
            PlateauWindow::Knee { slope, span } => match f.knee(slope) {
                Some(tk) => (tk, span * tk),
                None => (5.0 * eps, 50.0 * eps),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Regular,
    SingularCandidate,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Regular => "regular",
            Verdict::SingularCandidate => "singular-candidate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LPlusEstimate {
    pub value: [f64; 2],
    pub window: (f64, f64),
    pub verdict: Verdict,
}

/// A detected kernel discontinuity `L(tau+) - L(tau-)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelJump {
    pub tau: f64,
    pub delta: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelOptions {
    pub eps: f64,
    pub horizon: f64,
    pub truncation_tol: f64,
    pub window: PlateauWindow,
    pub regularity_floor: f64,
}

impl KernelOptions {
    pub fn new(eps: f64, horizon: f64) -> Self {
        KernelOptions {
            eps,
            horizon,
            truncation_tol: DEFAULT_TRUNCATION_TOL,
            window: PlateauWindow::default(),
            regularity_floor: DEFAULT_REGULARITY_FLOOR,
        }
    }
}

/// Tabulated kernel on the simulation grid.
#[derive(Clone, Debug)]
pub struct MemoryKernel {
    pub eps: f64,
    /// `values[0] = L+`, `values[j] = L(j eps)` for `j >= 1`.
    pub values: Vec<[f64; 2]>,
    pub l_infty: [f64; 2],
    pub l_plus: [f64; 2],
    pub l_plus_window: (f64, f64),
    pub verdict: Verdict,
    pub regularity_floor: f64,
    /// Index beyond which increments are below the truncation tolerance; `None` if not reached.
    pub truncation_index: Option<usize>,
    pub jump_table: Vec<KernelJump>,
    pub function: KernelFunction,
}

fn truncation_index(f: &KernelFunction, eps: f64, last: usize, tol: f64) -> Option<usize> {
    if !f.is_damped() {
        return None;
    }
    let bound = |j: usize| eps * f.rate_bound(j as f64 * eps);
    if bound(last) >= tol {
        return None;
    }
    let (mut lo, mut hi) = (0usize, last);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if bound(mid) < tol {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

fn line_fit_at(f: &KernelFunction, a: f64, b: f64, at: f64) -> [f64; 2] {
    const SAMPLES: usize = 64;
    let mut out = [0.0; 2];
    for (c, slot) in out.iter_mut().enumerate() {
        let (mut st, mut sl, mut stt, mut stl) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..SAMPLES {
            let t = a + (b - a) * i as f64 / (SAMPLES - 1) as f64;
            let l = f.eval(t)[c];
            let x = t - at;
            st += x;
            sl += l;
            stt += x * x;
            stl += x * l;
        }
        let nn = SAMPLES as f64;
        let slope = (nn * stl - st * sl) / (nn * stt - st * st);
        *slot = (sl - slope * st) / nn;
    }
    out
}

/// Scans the tabulated range for isolated steep fronts and measures each step by
/// extrapolating straight-line fits from both sides.
fn scan_jumps(f: &KernelFunction, eps: f64, last: usize, scale: f64, start: f64) -> Vec<KernelJump> {
    let w = 2.0 * std::f64::consts::PI / f.omega_max;
    let first = ((start.max(6.0 * w) / eps).ceil() as usize).max(1);
    let end = last.saturating_sub((6.0 * w / eps).ceil() as usize);
    if first >= end || scale <= 0.0 {
        return Vec::new();
    }
    let rates: Vec<f64> = (first..=end).map(|j| f.rate(j as f64 * eps)[1].abs()).collect();
    let mut sorted = rates.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let reach = ((2.0 * w / eps).ceil() as usize).max(1);
    let mut jumps: Vec<KernelJump> = Vec::new();
    let mut i = 0;
    while i < rates.len() {
        let r = rates[i];
        let lo = i.saturating_sub(reach);
        let hi = (i + reach).min(rates.len() - 1);
        let is_peak = r > 10.0 * median && rates[lo..=hi].iter().all(|&x| x <= r);
        if is_peak {
            let tau = (first + i) as f64 * eps;
            let right = line_fit_at(f, tau + w, tau + 5.0 * w, tau);
            let left = line_fit_at(f, tau - 5.0 * w, tau - w, tau);
            let delta = [right[0] - left[0], right[1] - left[1]];
            if delta[1].abs() >= 0.05 * scale {
                jumps.push(KernelJump { tau, delta });
                i = hi + 1;
                continue;
            }
        }
        i += 1;
    }
    jumps
}

fn classify(value: [f64; 2], floor: f64) -> Verdict {
    if value[1].abs() > floor {
        Verdict::Regular
    } else {
        Verdict::SingularCandidate
    }
}

/// Tabulates `L` on the grid `j eps` up to the horizon or the truncation index.
pub fn compute_kernel(sys: &FirstOrderSystem, proj: &Projection, opts: &KernelOptions) -> Result<MemoryKernel> {
    ensure(opts.eps > 0.0 && opts.eps.is_finite(), "eps", || format!("{} must be positive", opts.eps))?;
    ensure(opts.horizon >= opts.eps, "horizon", || format!("{} is shorter than eps", opts.horizon))?;
    ensure(opts.truncation_tol > 0.0, "truncation_tol", || "must be positive".into())?;
    ensure(opts.regularity_floor >= 0.0, "regularity_floor", || "must be nonnegative".into())?;
    opts.window.validate()?;

    let f = KernelFunction::new(sys, proj)?;
    let horizon_steps = (opts.horizon / opts.eps).ceil() as usize;
    let truncation = truncation_index(&f, opts.eps, horizon_steps, opts.truncation_tol);
    let last = truncation.unwrap_or(horizon_steps).max(1);

    let window = opts.window.resolve(&f, opts.eps);
    let l_plus = f.mean_over(window.0, window.1);
    let scale = l_plus[1].abs().max(opts.regularity_floor);
    let jump_table = scan_jumps(&f, opts.eps, last, scale, 2.0 * window.1);

    let mut values = Vec::with_capacity(last + 1);
    values.push(l_plus);
    values.extend((1..=last).map(|j| f.eval(j as f64 * opts.eps)));

    let kernel = MemoryKernel {
        eps: opts.eps,
        values,
        l_infty: f.l_infty,
        l_plus,
        l_plus_window: window,
        verdict: classify(l_plus, opts.regularity_floor),
        regularity_floor: opts.regularity_floor,
        truncation_index: truncation,
        jump_table,
        function: f,
    };
    check_window(&kernel, window)?;
    Ok(kernel)
}

fn check_window(kernel: &MemoryKernel, (start, end): (f64, f64)) -> Result<()> {
    match kernel.jump_table.iter().find(|j| j.tau <= end) {
        Some(j) => Err(Error::WindowOverlapsJump { start, end, tau: j.tau }),
        None => Ok(()),
    }
}

/// Mean of `L` over a plateau window, with the regular / singular-candidate verdict.
pub fn estimate_l_plus(kernel: &MemoryKernel, window: &PlateauWindow) -> Result<LPlusEstimate> {
    window.validate()?;
    let w = window.resolve(&kernel.function, kernel.eps);
    check_window(kernel, w)?;
    let value = kernel.function.mean_over(w.0, w.1);
    Ok(LPlusEstimate { value, window: w, verdict: classify(value, kernel.regularity_floor) })
}

/// `L+` from the closed-form kernel alone, without tabulating or scanning for jumps.
pub fn plateau_estimate(
    sys: &FirstOrderSystem,
    proj: &Projection,
    window: &PlateauWindow,
    eps: f64,
    floor: f64,
) -> Result<LPlusEstimate> {
    window.validate()?;
    let f = KernelFunction::new(sys, proj)?;
    let w = window.resolve(&f, eps);
    let value = f.mean_over(w.0, w.1);
    Ok(LPlusEstimate { value, window: w, verdict: classify(value, floor) })
}

/// `g(t) = (V R - A V) z_free(t) + V f(t)` with `z_free` the contact-free response in closed form.
pub fn forcing_term_g(sys: &FirstOrderSystem, proj: &Projection, t: f64) -> [f64; 2] {
    let (x, v) = sys.free_response(t);
    let mut g = forcing_term_from_state(sys, proj, &x, &v);
    if let Some(h) = sys.forcing {
        g[1] += sys.modal.tip_values[h.mode - 1] * h.amplitude * (h.frequency * t).cos();
    }
    g
}

pub(crate) fn forcing_term_from_state(sys: &FirstOrderSystem, proj: &Projection, x: &[f64], v: &[f64]) -> [f64; 2] {
    let ms = &sys.modal;
    let n = &ms.tip_values;
    let (mut y0, mut y1, mut vr0, mut vr1) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..ms.len() {
        let w = ms.omegas[k];
        y0 += n[k] * x[k];
        y1 += n[k] * v[k];
        vr0 += n[k] * v[k];
        vr1 += n[k] * (-w * w * x[k] - 2.0 * ms.dampings[k] * w * v[k]);
    }
    let a = &proj.a;
    [vr0 - (a[(0, 0)] * y0 + a[(0, 1)] * y1), vr1 - (a[(1, 0)] * y0 + a[(1, 1)] * y1)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::build_projection;
    use crate::structure::{ModalStructure, ModelTag};
    use crate::system::{assemble_first_order, HarmonicForcing, InitialCondition};
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    fn sys_of(w: Vec<f64>, d: Vec<f64>, n: Vec<f64>) -> FirstOrderSystem {
        let ms = ModalStructure::new(w, d, n, ModelTag::String, 1.0).unwrap();
        assemble_first_order(&ms, None, &InitialCondition::rest()).unwrap()
    }

    #[test]
    fn single_mode_kernel_vanishes() {
        let sys = sys_of(vec![2.0], vec![0.3], vec![0.8]);
        let p = build_projection(&sys).unwrap();
        let li = compute_l_infty(&sys, &p).unwrap();
        assert_eq!(li[0], 0.0);
        assert_relative_eq!(li[1], 0.64, max_relative = 1e-14);
        let k = compute_kernel(&sys, &p, &KernelOptions::new(1e-3, 1.0)).unwrap();
        assert!(k.values.iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
        assert_eq!(k.l_plus, [0.0, 0.0]);
        assert_eq!(k.verdict, Verdict::SingularCandidate);
    }

    #[test]
    fn single_mode_l_infty_ignores_damping() {
        for d in [0.0, 0.2, 0.7] {
            let sys = sys_of(vec![3.0], vec![d], vec![-1.5]);
            let p = build_projection(&sys).unwrap();
            assert_relative_eq!(compute_l_infty(&sys, &p).unwrap()[1], 2.25, max_relative = 1e-14);
        }
    }

    #[test]
    fn kernel_starts_at_zero() {
        let sys = sys_of(vec![1.0, 4.0, 9.0], vec![0.1; 3], vec![1.0, -1.0, 1.0]);
        let f = KernelFunction::new(&sys, &build_projection(&sys).unwrap()).unwrap();
        assert_eq!(f.eval(0.0), [0.0, 0.0]);
    }

    /// Dense oracle: integrate `V e^{RQ theta} (0, n) - L_inf` with Simpson's rule.
    fn dense_kernel(sys: &FirstOrderSystem, p: &Projection, tau: f64) -> f64 {
        let rq = &sys.r * p.q_matrix();
        let li = compute_l_infty(sys, p).unwrap();
        let integrand = |th: f64| -> f64 {
            let e: DMatrix<f64> = (&rq * th).exp();
            let z: DVector<f64> = e * &sys.influence;
            (&p.v * z)[1] - li[1]
        };
        let steps = 4000;
        let h = tau / steps as f64;
        let mut s = integrand(0.0) + integrand(tau);
        for i in 1..steps {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * integrand(h * i as f64);
        }
        s * h / 3.0
    }

    #[test]
    fn closed_form_matches_matrix_exponential() {
        let sys = sys_of(vec![1.3, 2.9, 5.1, 8.4], vec![0.05, 0.1, 0.0, 0.2], vec![0.9, -1.2, 0.4, 1.1]);
        let p = build_projection(&sys).unwrap();
        let f = KernelFunction::new(&sys, &p).unwrap();
        for tau in [0.05, 0.7, 2.3] {
            assert_relative_eq!(f.eval(tau)[1], dense_kernel(&sys, &p, tau), max_relative = 1e-8, epsilon = 1e-10);
        }
    }

    #[test]
    fn forcing_term_is_direct_load_for_single_mode() {
        let ms = ModalStructure::new(vec![2.0], vec![0.1], vec![1.0], ModelTag::String, 1.0).unwrap();
        let f = HarmonicForcing { mode: 1, amplitude: 5.0, frequency: 3.0 };
        let ic = InitialCondition { mode: 1, displacement: 1.0, velocity: 2.0 };
        let sys = assemble_first_order(&ms, Some(f), &ic).unwrap();
        let p = build_projection(&sys).unwrap();
        for t in [0.0, 0.4, 3.0] {
            let g = forcing_term_g(&sys, &p, t);
            assert!(g[0].abs() < 1e-14, "{g:?}");
            assert_relative_eq!(g[1], 5.0 * (3.0 * t).cos(), epsilon = 1e-13);
        }
    }

    #[test]
    fn forcing_term_vanishes_at_rest() {
        let sys = sys_of(vec![1.0, 4.0], vec![0.1; 2], vec![1.0, -1.0]);
        let p = build_projection(&sys).unwrap();
        assert_eq!(forcing_term_g(&sys, &p, 1.7), [0.0, 0.0]);
    }

    #[test]
    fn window_validation() {
        assert!(PlateauWindow::Fixed { start: 0.0, end: 1.0 }.validate().is_err());
        assert!(PlateauWindow::GridMultiples { start: 5.0, end: 2.0 }.validate().is_err());
        assert!(PlateauWindow::Knee { slope: 1.5, span: 2.0 }.validate().is_err());
        assert!(PlateauWindow::default().validate().is_ok());
    }
}
