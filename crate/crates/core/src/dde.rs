//! Explicit-Euler integrator for the reduced nonsmooth delay equation of the contact point.
//!
//! Free flight advances `y` with the Riemann-Stieltjes history sum over past force
//! increments. Contact holds `y = (stop, 0)` and advances the force instead. The
//! history keeps only nonzero force increments, so its cost scales with the number
//! of contact steps inside the kernel memory rather than with elapsed steps.

use crate::error::{ensure, Error, Result};
use crate::kernel::{compute_kernel, forcing_term_g, KernelOptions, MemoryKernel, Verdict};
use crate::projection::{build_projection, Projection};
use crate::system::FirstOrderSystem;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// How the stepper table treats the start of the kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableMode {
    /// `L_0 = L+`, with the unresolved early rise held at `L+` until the raw kernel reaches it.
    Stepper,
    /// `L_0 = L(0) = 0` and raw values throughout.
    Raw,
}

/// Projection, kernel table and forcing data for one structure.
#[derive(Clone, Debug)]
pub struct ReducedModel {
    pub system: FirstOrderSystem,
    pub projection: Projection,
    pub kernel: MemoryKernel,
    /// Kernel values used by the stepper.
    pub table: Vec<[f64; 2]>,
    /// First raw index kept; earlier entries are held at `L+`.
    pub bridge_index: usize,
    increments: [Vec<f64>; 2],
    first_component_active: bool,
}

impl ReducedModel {
    pub fn new(system: FirstOrderSystem, opts: &KernelOptions) -> Result<Self> {
        Self::with_table(system, opts, TableMode::Stepper)
    }

    pub fn with_table(system: FirstOrderSystem, opts: &KernelOptions, mode: TableMode) -> Result<Self> {
        let projection = build_projection(&system)?;
        let kernel = compute_kernel(&system, &projection, opts)?;
        let mut table = kernel.values.clone();
        let mut bridge_index = 1;
        match mode {
            TableMode::Raw => table[0] = [0.0, 0.0],
            TableMode::Stepper => {
                let lp = kernel.l_plus[1];
                if lp > 0.0 {
                    if let Some(jc) = table.iter().skip(1).position(|v| v[1] >= lp) {
                        bridge_index = jc + 1;
                        for v in table.iter_mut().take(bridge_index).skip(1) {
                            *v = kernel.l_plus;
                        }
                    }
                }
            }
        }
        let increments = [
            table.windows(2).map(|w| w[1][0] - w[0][0]).collect::<Vec<_>>(),
            table.windows(2).map(|w| w[1][1] - w[0][1]).collect::<Vec<_>>(),
        ];
        let first_component_active = increments[0].iter().any(|d| *d != 0.0);
        Ok(ReducedModel { system, projection, kernel, table, bridge_index, increments, first_component_active })
    }

    pub fn eps(&self) -> f64 {
        self.kernel.eps
    }

    pub fn g(&self, t: f64) -> [f64; 2] {
        forcing_term_g(&self.system, &self.projection, t)
    }

    /// Initial contact-point state `V z(0)`.
    pub fn initial_y(&self) -> [f64; 2] {
        self.system.resolve(&self.system.initial_state)
    }

    fn a_times(&self, y: [f64; 2]) -> [f64; 2] {
        let a = &self.projection.a;
        [a[(0, 0)] * y[0] + a[(0, 1)] * y[1], a[(1, 0)] * y[0] + a[(1, 1)] * y[1]]
    }
}

/// Sparse record of force increments `f_i - f_{i-1}`.
#[derive(Clone, Debug, Default)]
pub struct ForceHistory {
    entries: VecDeque<(usize, f64)>,
}

impl ForceHistory {
    pub fn push(&mut self, index: usize, delta: f64) {
        if delta != 0.0 {
            self.entries.push_back((index, delta));
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `sum_j (L_{j+1} - L_j)(f_{q-j} - f_{q-j-1})` for the current step `q`.
    fn convolve(&mut self, model: &ReducedModel, q: usize) -> [f64; 2] {
        let len = model.increments[1].len();
        while let Some(&(i, _)) = self.entries.front() {
            if q - i >= len {
                self.entries.pop_front();
            } else {
                break;
            }
        }
        let d2 = &model.increments[1];
        let s2: f64 = self.entries.iter().map(|&(i, df)| d2[q - i] * df).sum();
        let s1 = if model.first_component_active {
            let d1 = &model.increments[0];
            self.entries.iter().map(|&(i, df)| d1[q - i] * df).sum()
        } else {
            0.0
        };
        [s1, s2]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Onset,
    Release,
    SecondaryJump,
    Impact,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Onset => "onset",
            EventKind::Release => "release",
            EventKind::SecondaryJump => "secondary-jump",
            EventKind::Impact => "impact",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub t: f64,
    pub fc_before: f64,
    pub fc_after: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimulationResult {
    pub times: Vec<f64>,
    pub y: Vec<[f64; 2]>,
    pub fc: Vec<f64>,
    pub in_contact: Vec<bool>,
    pub events: Vec<Event>,
}

impl SimulationResult {
    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn push_sample(&mut self, t: f64, y: [f64; 2], fc: f64, in_contact: bool) {
        self.times.push(t);
        self.y.push(y);
        self.fc.push(fc);
        self.in_contact.push(in_contact);
    }
}

/// Stop position and time grid of a contact run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactConfig {
    pub stop: f64,
    pub eps: f64,
    pub t_end: f64,
}

impl ContactConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.eps > 0.0 && self.eps.is_finite(), "eps", || format!("{} must be positive", self.eps))?;
        ensure(self.t_end > 0.0 && self.t_end.is_finite(), "t_end", || format!("{} must be positive", self.t_end))?;
        ensure(self.stop.is_finite(), "stop", || "must be finite".into())
    }
}

/// `[y_{q+1}]_1 <= stop`.
pub fn detect_contact(y_next: [f64; 2], stop: f64) -> bool {
    y_next[0] <= stop
}

fn checked_l_plus(model: &ReducedModel) -> Result<f64> {
    let lp = model.kernel.l_plus[1];
    if lp.abs() < model.kernel.regularity_floor || model.kernel.verdict != Verdict::Regular {
        return Err(Error::SingularModel {
            detail: format!("[L+]_2 = {lp:e} is below the regularity floor {:e}", model.kernel.regularity_floor),
        });
    }
    Ok(lp)
}

/// Force right after the projection onto the stop, from the incident velocity `[y_q]_2`.
pub fn contact_onset(model: &ReducedModel, y_q: [f64; 2]) -> Result<f64> {
    Ok(-y_q[1] / checked_l_plus(model)?)
}

/// Predicted force change at a kernel discontinuity `delta_l` reached by a force `f0`.
pub fn predict_secondary_jump(l_plus: f64, delta_l: f64, f0: f64) -> f64 {
    -delta_l * f0 / l_plus
}

/// Stepper state between two grid points.
pub struct Stepper<'a> {
    model: &'a ReducedModel,
    config: ContactConfig,
    pub q: usize,
    pub y: [f64; 2],
    pub fc: f64,
    pub in_contact: bool,
    history: ForceHistory,
    pending_jumps: Vec<PendingJump>,
}

#[derive(Clone, Copy, Debug)]
struct PendingJump {
    center: usize,
    half_width: usize,
    fc_before: Option<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a ReducedModel, config: ContactConfig) -> Result<Self> {
        config.validate()?;
        ensure(
            (config.eps - model.eps()).abs() <= 1e-12 * model.eps(),
            "eps",
            || format!("run step {} differs from the kernel grid {}", config.eps, model.eps()),
        )?;
        Ok(Stepper {
            model,
            config,
            q: 0,
            y: model.initial_y(),
            fc: 0.0,
            in_contact: false,
            history: ForceHistory::default(),
            pending_jumps: Vec::new(),
        })
    }

    pub fn time(&self) -> f64 {
        self.q as f64 * self.config.eps
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    /// Free-flight update from `y` given the history sum and `g(q eps)`.
    pub fn step_free(&self, y: [f64; 2], conv: [f64; 2], g: [f64; 2]) -> [f64; 2] {
        let ay = self.model.a_times(y);
        let eps = self.config.eps;
        [y[0] + eps * (ay[0] + g[0]) + conv[0], y[1] + eps * (ay[1] + g[1]) + conv[1]]
    }

    /// Force update during contact.
    pub fn step_contact(&self, conv: [f64; 2], g: [f64; 2]) -> Result<f64> {
        let lp = checked_l_plus(self.model)?;
        let ay = self.model.a_times([self.config.stop, 0.0]);
        let li = self.model.kernel.l_infty[1];
        Ok(self.fc - self.config.eps / lp * (li * self.fc + ay[1] + g[1]) - conv[1] / lp)
    }

    /// Advances one grid step, appending any events.
    pub fn advance(&mut self, events: &mut Vec<Event>) -> Result<()> {
        let q = self.q;
        let t = self.time();
        let t_next = (q + 1) as f64 * self.config.eps;
        let g = self.model.g(t);
        let conv = self.history.convolve(self.model, q);
        let stop = [self.config.stop, 0.0];
        let f_old = self.fc;

        if !self.in_contact {
            let y_pred = self.step_free(self.y, conv, g);
            if detect_contact(y_pred, self.config.stop) {
                let f = contact_onset(self.model, self.y)?;
                self.fc = f.max(0.0);
                self.in_contact = true;
                self.y = stop;
                events.push(Event { kind: EventKind::Onset, t: t_next, fc_before: f_old, fc_after: self.fc });
                self.schedule_jumps(q + 1);
            } else {
                self.y = y_pred;
            }
        } else {
            let f_pred = self.step_contact(conv, g)?;
            if f_pred < 0.0 {
                // Leave the stop with the free update from the constrained state; the
                // separating step is not re-tested against the stop.
                self.fc = 0.0;
                self.in_contact = false;
                self.y = self.step_free(stop, conv, g);
                self.pending_jumps.clear();
                events.push(Event { kind: EventKind::Release, t: t_next, fc_before: f_old, fc_after: 0.0 });
            } else {
                self.fc = f_pred;
                self.y = stop;
                self.track_jumps(q + 1, events);
            }
        }
        if !(self.y[0].is_finite() && self.y[1].is_finite() && self.fc.is_finite()) {
            return Err(Error::NonFinite(format!("reduced state at t = {t_next}")));
        }
        self.history.push(q + 1, self.fc - f_old);
        self.q += 1;
        Ok(())
    }

    fn schedule_jumps(&mut self, onset: usize) {
        let eps = self.config.eps;
        let width = 4.0 * 2.0 * std::f64::consts::PI / self.model.kernel.function.omega_max;
        let half_width = ((width / eps).ceil() as usize).max(1);
        self.pending_jumps = self
            .model
            .kernel
            .jump_table
            .iter()
            .map(|j| PendingJump { center: onset + (j.tau / eps).round() as usize, half_width, fc_before: None })
            .collect();
    }

    fn track_jumps(&mut self, index: usize, events: &mut Vec<Event>) {
        let fc = self.fc;
        let eps = self.config.eps;
        self.pending_jumps.retain_mut(|p| {
            if p.fc_before.is_none() && index + p.half_width >= p.center {
                p.fc_before = Some(fc);
            }
            if index >= p.center + p.half_width {
                events.push(Event {
                    kind: EventKind::SecondaryJump,
                    t: p.center as f64 * eps,
                    fc_before: p.fc_before.unwrap_or(fc),
                    fc_after: fc,
                });
                return false;
            }
            true
        });
    }
}

/// Runs the contact state machine over `[0, t_end]`.
pub fn simulate(model: &ReducedModel, config: &ContactConfig) -> Result<SimulationResult> {
    if model.kernel.verdict != Verdict::Regular {
        checked_l_plus(model)?;
    }
    let mut stepper = Stepper::new(model, *config)?;
    let steps = (config.t_end / config.eps).round() as usize;
    let mut out = SimulationResult::default();
    out.push_sample(0.0, stepper.y, 0.0, false);
    for _ in 0..steps {
        stepper.advance(&mut out.events)?;
        out.push_sample(stepper.time(), stepper.y, stepper.fc, stepper.in_contact);
    }
    Ok(out)
}

/// Reduced trajectory under a prescribed contact force with no stop.
pub fn simulate_prescribed(model: &ReducedModel, force: impl Fn(f64) -> f64, t_end: f64) -> Result<Vec<[f64; 2]>> {
    let eps = model.eps();
    ensure(t_end > 0.0, "t_end", || format!("{t_end} must be positive"))?;
    let steps = (t_end / eps).round() as usize;
    let li = model.kernel.l_infty;
    let mut history = ForceHistory::default();
    let mut y = model.initial_y();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(y);
    let mut f_prev = force(0.0);
    history.push(0, f_prev);
    for q in 0..steps {
        let t = q as f64 * eps;
        let g = model.g(t);
        let conv = history.convolve(model, q);
        let ay = model.a_times(y);
        y = [
            y[0] + eps * (ay[0] + li[0] * f_prev + g[0]) + conv[0],
            y[1] + eps * (ay[1] + li[1] * f_prev + g[1]) + conv[1],
        ];
        let f = force((q + 1) as f64 * eps);
        history.push(q + 1, f - f_prev);
        f_prev = f;
        out.push(y);
    }
    Ok(out)
}
