//! Run configuration: JSON with defaults, strict keys and dotted-path overrides.

use crate::asymptotics::{AnalyticFamily, DEFAULT_ETA, DEFAULT_MODE_FACTOR};
use crate::collocation::TipRotation;
use crate::cor::{CorConfig, DEFAULT_MAX_EVENTS};
use crate::dde::ContactConfig;
use crate::error::{ensure, Error, Result};
use crate::kernel::{KernelOptions, PlateauWindow, DEFAULT_REGULARITY_FLOOR, DEFAULT_TRUNCATION_TOL};
use crate::regularity::{ModelFamily, SweepOptions};
use crate::structure::{ModalStructure, ModelTag};
use crate::system::{assemble_first_order, FirstOrderSystem, HarmonicForcing, InitialCondition};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(rename = "type")]
    pub kind: ModelTag,
    /// Modes (Euler-Bernoulli, string) or collocation points (Timoshenko).
    #[serde(default)]
    pub size: Option<usize>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_one")]
    pub wave_speed: f64,
    #[serde(default = "default_damping")]
    pub damping: f64,
    /// Timoshenko end condition on the rotation.
    #[serde(default)]
    pub tip_rotation: TipRotation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactSection {
    /// Stop position; `null` disables contact.
    #[serde(default = "default_stop")]
    pub stop: Option<f64>,
    #[serde(default = "default_one")]
    pub restitution: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSection {
    #[serde(default = "default_forcing_mode")]
    pub mode: usize,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_frequency")]
    pub frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcSection {
    #[serde(default = "default_ic_mode")]
    pub mode: usize,
    #[serde(default = "default_ic_amplitude")]
    pub displacement: f64,
    #[serde(default = "default_ic_amplitude")]
    pub velocity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsSection {
    #[serde(default = "default_dt_min")]
    pub delta_t_min: f64,
    #[serde(default = "default_dt_max")]
    pub delta_t_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_mode_factor")]
    pub mode_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Kernel table length in time units; defaults to `t_end`.
    #[serde(default)]
    pub kernel_horizon: Option<f64>,
    #[serde(default = "default_truncation_tol")]
    pub truncation_tol: f64,
    #[serde(default)]
    pub plateau_window: PlateauWindow,
    #[serde(default = "default_floor")]
    pub regularity_floor: f64,
    /// Sizes for the regularity sweep; defaults depend on the model type.
    #[serde(default)]
    pub sweep_sizes: Option<Vec<usize>>,
    #[serde(default = "default_max_events")]
    pub max_events: usize,
    /// Accepted for compatibility; every run is deterministic.
    #[serde(default = "default_true")]
    pub deterministic: bool,
    #[serde(default)]
    pub asymptotics: AsymptoticsSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub contact: ContactSection,
    /// `null` removes the external load.
    #[serde(default = "default_forcing")]
    pub forcing: Option<ForcingSection>,
    #[serde(default)]
    pub ic: IcSection,
    #[serde(default)]
    pub run: RunSection,
}

fn default_beta() -> f64 {
    4800.0
}
fn default_gamma() -> f64 {
    0.25
}
fn default_one() -> f64 {
    1.0
}
fn default_damping() -> f64 {
    0.1
}
fn default_stop() -> Option<f64> {
    Some(-0.05)
}
fn default_forcing_mode() -> usize {
    2
}
fn default_amplitude() -> f64 {
    30.0
}
fn default_frequency() -> f64 {
    13.0
}
fn default_ic_mode() -> usize {
    1
}
fn default_ic_amplitude() -> f64 {
    1.056
}
fn default_dt_min() -> f64 {
    1e-6
}
fn default_dt_max() -> f64 {
    1e-3
}
fn default_points() -> usize {
    7
}
fn default_eta() -> f64 {
    DEFAULT_ETA
}
fn default_mode_factor() -> f64 {
    DEFAULT_MODE_FACTOR
}
fn default_eps() -> f64 {
    3.5e-5
}
fn default_t_end() -> f64 {
    10.0
}
fn default_truncation_tol() -> f64 {
    DEFAULT_TRUNCATION_TOL
}
fn default_floor() -> f64 {
    DEFAULT_REGULARITY_FLOOR
}
fn default_max_events() -> usize {
    DEFAULT_MAX_EVENTS
}
fn default_true() -> bool {
    true
}
fn default_forcing() -> Option<ForcingSection> {
    Some(ForcingSection::default())
}

impl Default for ContactSection {
    fn default() -> Self {
        ContactSection { stop: default_stop(), restitution: 1.0 }
    }
}

impl Default for ForcingSection {
    fn default() -> Self {
        ForcingSection { mode: default_forcing_mode(), amplitude: default_amplitude(), frequency: default_frequency() }
    }
}

impl Default for IcSection {
    fn default() -> Self {
        IcSection { mode: 1, displacement: default_ic_amplitude(), velocity: default_ic_amplitude() }
    }
}

impl Default for AsymptoticsSection {
    fn default() -> Self {
        AsymptoticsSection {
            delta_t_min: default_dt_min(),
            delta_t_max: default_dt_max(),
            points: default_points(),
            eta: DEFAULT_ETA,
            mode_factor: DEFAULT_MODE_FACTOR,
        }
    }
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            eps: default_eps(),
            t_end: default_t_end(),
            kernel_horizon: None,
            truncation_tol: DEFAULT_TRUNCATION_TOL,
            plateau_window: PlateauWindow::default(),
            regularity_floor: DEFAULT_REGULARITY_FLOOR,
            sweep_sizes: None,
            max_events: DEFAULT_MAX_EVENTS,
            deterministic: true,
            asymptotics: AsymptoticsSection::default(),
        }
    }
}

impl ModelSection {
    pub fn size(&self) -> usize {
        self.size.unwrap_or(match self.kind {
            ModelTag::Timoshenko => 20,
            ModelTag::EulerBernoulli => 25,
            ModelTag::String => 64,
        })
    }

    pub fn family(&self) -> ModelFamily {
        match self.kind {
            ModelTag::EulerBernoulli => ModelFamily::EulerBernoulli { damping: self.damping },
            ModelTag::Timoshenko => ModelFamily::Timoshenko {
                beta: self.beta,
                gamma: self.gamma,
                damping: self.damping,
                tip_rotation: self.tip_rotation,
            },
            ModelTag::String => ModelFamily::String { wave_speed: self.wave_speed, damping: self.damping },
        }
    }

    /// Families with closed-form spectra; `None` for Timoshenko.
    pub fn analytic_family(&self) -> Option<AnalyticFamily> {
        match self.kind {
            ModelTag::EulerBernoulli => Some(AnalyticFamily::EulerBernoulli { damping: self.damping }),
            ModelTag::String => Some(AnalyticFamily::String { wave_speed: self.wave_speed, damping: self.damping }),
            ModelTag::Timoshenko => None,
        }
    }

    pub fn default_sweep(&self) -> Vec<usize> {
        match self.kind {
            ModelTag::EulerBernoulli => vec![25, 50, 100],
            ModelTag::Timoshenko => vec![20, 40],
            ModelTag::String => vec![32, 64, 128],
        }
    }
}

fn finite(x: f64, field: &str) -> Result<()> {
    ensure(x.is_finite(), field, || format!("{x} is not finite"))
}

impl RunConfig {
    /// Checks every constraint that does not require building the model.
    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        let size = m.size();
        let min_size = if m.kind == ModelTag::Timoshenko { 8 } else { 1 };
        ensure(size >= min_size, "model.size", || format!("{size} is below the minimum {min_size}"))?;
        ensure(m.damping >= 0.0 && m.damping.is_finite(), "model.damping", || format!("{} must be non-negative", m.damping))?;
        ensure(m.beta > 0.0 && m.beta.is_finite(), "model.beta", || format!("{} must be positive", m.beta))?;
        ensure(m.gamma > 0.0 && m.gamma.is_finite(), "model.gamma", || format!("{} must be positive", m.gamma))?;
        ensure(m.wave_speed > 0.0 && m.wave_speed.is_finite(), "model.wave_speed", || {
            format!("{} must be positive", m.wave_speed)
        })?;

        if let Some(stop) = self.contact.stop {
            finite(stop, "contact.stop")?;
        }
        let r = self.contact.restitution;
        ensure((0.0..=1.0).contains(&r), "contact.restitution", || format!("{r} is outside [0, 1]"))?;

        // Modes are counted after model construction for Timoshenko; the point count bounds them.
        let mode_bound = if m.kind == ModelTag::Timoshenko { 2 * size } else { size };
        if let Some(f) = &self.forcing {
            ensure(f.mode >= 1 && f.mode <= mode_bound, "forcing.mode", || format!("{} is outside 1..={mode_bound}", f.mode))?;
            finite(f.amplitude, "forcing.amplitude")?;
            finite(f.frequency, "forcing.frequency")?;
        }
        let ic = &self.ic;
        ensure(ic.mode >= 1 && ic.mode <= mode_bound, "ic.mode", || format!("{} is outside 1..={mode_bound}", ic.mode))?;
        finite(ic.displacement, "ic.displacement")?;
        finite(ic.velocity, "ic.velocity")?;

        let run = &self.run;
        ensure(run.eps > 0.0 && run.eps.is_finite(), "run.eps", || format!("{} must be positive", run.eps))?;
        ensure(run.t_end > run.eps && run.t_end.is_finite(), "run.t_end", || format!("{} must exceed run.eps", run.t_end))?;
        if let Some(h) = run.kernel_horizon {
            ensure(h >= run.eps && h.is_finite(), "run.kernel_horizon", || format!("{h} must be at least run.eps"))?;
        }
        ensure(run.truncation_tol > 0.0, "run.truncation_tol", || format!("{} must be positive", run.truncation_tol))?;
        ensure(run.regularity_floor > 0.0, "run.regularity_floor", || format!("{} must be positive", run.regularity_floor))?;
        run.plateau_window.validate()?;
        ensure(run.max_events > 0, "run.max_events", || "must be positive".into())?;
        if let Some(s) = &run.sweep_sizes {
            ensure(s.len() >= 2, "run.sweep_sizes", || "needs at least two sizes".into())?;
            ensure(s.windows(2).all(|w| w[1] > w[0]), "run.sweep_sizes", || "must be strictly increasing".into())?;
            ensure(s[0] >= min_size, "run.sweep_sizes", || format!("sizes must be at least {min_size}"))?;
        }
        let a = &run.asymptotics;
        ensure(a.delta_t_min > 0.0 && a.delta_t_max > a.delta_t_min, "run.asymptotics", || {
            format!("need 0 < delta_t_min < delta_t_max, got [{}, {}]", a.delta_t_min, a.delta_t_max)
        })?;
        ensure(a.points >= 2, "run.asymptotics.points", || format!("{} is below 2", a.points))?;
        ensure(a.eta > 0.0 && a.eta < 1.0, "run.asymptotics.eta", || format!("{} is outside (0, 1)", a.eta))?;
        ensure(a.mode_factor >= 1.0, "run.asymptotics.mode_factor", || format!("{} is below 1", a.mode_factor))
    }

    pub fn structure(&self) -> Result<ModalStructure> {
        self.model.family().structure(self.model.size())
    }

    pub fn harmonic_forcing(&self) -> Option<HarmonicForcing> {
        self.forcing.as_ref().map(|f| HarmonicForcing { mode: f.mode, amplitude: f.amplitude, frequency: f.frequency })
    }

    pub fn initial_condition(&self) -> InitialCondition {
        InitialCondition { mode: self.ic.mode, displacement: self.ic.displacement, velocity: self.ic.velocity }
    }

    pub fn system(&self, ms: &ModalStructure) -> Result<FirstOrderSystem> {
        assemble_first_order(ms, self.harmonic_forcing(), &self.initial_condition())
    }

    pub fn kernel_options(&self) -> KernelOptions {
        KernelOptions {
            eps: self.run.eps,
            horizon: self.run.kernel_horizon.unwrap_or(self.run.t_end),
            truncation_tol: self.run.truncation_tol,
            window: self.run.plateau_window,
            regularity_floor: self.run.regularity_floor,
        }
    }

    /// Contact settings, or `None` when the stop is disabled.
    pub fn contact_config(&self) -> Option<ContactConfig> {
        self.contact.stop.map(|stop| ContactConfig { stop, eps: self.run.eps, t_end: self.run.t_end })
    }

    pub fn cor_config(&self) -> Option<CorConfig> {
        self.contact.stop.map(|stop| CorConfig {
            stop,
            restitution: self.contact.restitution,
            eps: self.run.eps,
            t_end: self.run.t_end,
            max_events: self.run.max_events,
        })
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions { window: self.run.plateau_window, eps: self.run.eps, regularity_floor: self.run.regularity_floor }
    }

    pub fn sweep_sizes(&self) -> Vec<usize> {
        self.run.sweep_sizes.clone().unwrap_or_else(|| self.model.default_sweep())
    }
}

/// Sets `path` (dotted) in a JSON object tree, creating intermediate objects.
fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    ensure(parts.iter().all(|p| !p.is_empty()), "override", || format!("malformed key '{path}'"))?;
    let mut node = root;
    for (i, part) in parts.iter().enumerate() {
        if !node.is_object() {
            if node.is_null() {
                *node = Value::Object(Default::default());
            } else {
                return Err(Error::invalid("override", format!("'{}' is not an object", parts[..i].join("."))));
            }
        }
        let map = node.as_object_mut().expect("object checked above");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

/// Applies `key=value` overrides; values parse as JSON and fall back to plain strings.
pub fn apply_overrides(root: &mut Value, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| Error::invalid("override", format!("'{o}' is not of the form key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        set_path(root, key.trim(), value)?;
    }
    Ok(())
}

fn path_message(err: serde_json::Error) -> Error {
    Error::invalid("config", err.to_string())
}

/// Builds a validated configuration from JSON text and overrides.
pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut root: Value = if text.trim().is_empty() {
        Value::Object(Default::default())
    } else {
        serde_json::from_str(text).map_err(path_message)?
    };
    ensure(root.is_object(), "config", || "top level must be a JSON object".into())?;
    apply_overrides(&mut root, overrides)?;
    let has_type = root.get("model").and_then(|m| m.get("type")).is_some_and(|t| !t.is_null());
    if !has_type {
        return Err(Error::Missing("model.type".into()));
    }
    let cfg: RunConfig = serde_json::from_value(root).map_err(path_message)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_requires_model_type() {
        let err = parse_config_str("", &[]).unwrap_err();
        assert_eq!(err.to_string(), "model.type required");
        assert!(err.is_validation());
    }

    #[test]
    fn minimal_timoshenko_gets_scenario_defaults() {
        let cfg = parse_config_str(r#"{"model":{"type":"timoshenko"}}"#, &[]).unwrap();
        assert_eq!(cfg.model.size(), 20);
        assert_eq!(cfg.model.beta, 4800.0);
        assert_eq!(cfg.model.gamma, 0.25);
        assert_eq!(cfg.model.damping, 0.1);
        assert_eq!(cfg.contact.stop, Some(-0.05));
        let f = cfg.forcing.as_ref().unwrap();
        assert_eq!((f.mode, f.amplitude, f.frequency), (2, 30.0, 13.0));
        assert_eq!(cfg.run.eps, 3.5e-5);
        assert_eq!((cfg.ic.mode, cfg.ic.displacement, cfg.ic.velocity), (1, 1.056, 1.056));
    }

    #[test]
    fn zero_eps_rejected() {
        let err = parse_config_str(r#"{"model":{"type":"string"},"run":{"eps":0}}"#, &[]).unwrap_err();
        assert!(err.to_string().starts_with("run.eps"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse_config_str(r#"{"model":{"type":"string","sise":3}}"#, &[]).is_err());
        assert!(parse_config_str(r#"{"model":{"type":"string"},"extra":1}"#, &[]).is_err());
    }

    #[test]
    fn overrides_apply_by_path() {
        let o = vec!["model.type=euler-bernoulli".to_string(), "run.eps=1e-4".into(), "contact.stop=null".into()];
        let cfg = parse_config_str("", &o).unwrap();
        assert_eq!(cfg.model.kind, ModelTag::EulerBernoulli);
        assert_eq!(cfg.run.eps, 1e-4);
        assert_eq!(cfg.contact.stop, None);
        assert!(parse_config_str("", &["model.type".to_string()]).is_err());
    }

    #[test]
    fn mode_bounds_checked() {
        let err = parse_config_str(r#"{"model":{"type":"string","size":1}}"#, &[]).unwrap_err();
        assert!(err.to_string().starts_with("forcing.mode"));
    }
}
