//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each entry point takes plain numbers or a JSON config and returns a JSON string
//! that the page plots on a canvas.

use impact_core::app::asymptotics_for;
use impact_core::config::{parse_config_str, RunConfig};
use impact_core::dde::{simulate, ReducedModel};
use impact_core::kernel::KernelFunction;
use impact_core::projection::build_projection;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn to_js(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn json<T: Serialize>(value: &T) -> Result<String, JsValue> {
    serde_json::to_string(value).map_err(to_js)
}

#[derive(Serialize)]
struct Curve {
    label: String,
    l2: Vec<f64>,
    l_plus: f64,
}

#[derive(Serialize)]
struct KernelCurves {
    tau: Vec<f64>,
    curves: Vec<Curve>,
}

fn curve(cfg: &RunConfig, label: String, tau: &[f64]) -> impact_core::Result<Curve> {
    let sys = cfg.system(&cfg.structure()?)?;
    let proj = build_projection(&sys)?;
    let f = KernelFunction::new(&sys, &proj)?;
    let l_plus = impact_core::kernel::plateau_estimate(&sys, &proj, &cfg.run.plateau_window, cfg.run.eps, cfg.run.regularity_floor)?
        .value[1];
    Ok(Curve { label, l2: tau.iter().map(|t| f.eval(*t)[1]).collect(), l_plus })
}

/// `[L]_2` on `[0, tau_max]` for Euler-Bernoulli beams of the given sizes and one Timoshenko beam.
#[wasm_bindgen]
pub fn kernel_curves(eb_sizes: Vec<usize>, tm_size: usize, tau_max: f64, samples: usize) -> Result<String, JsValue> {
    let samples = samples.clamp(2, 20_000);
    let tau: Vec<f64> = (0..samples).map(|i| tau_max * i as f64 / (samples - 1) as f64).collect();
    let mut curves = Vec::new();
    for m in eb_sizes {
        let cfg = parse_config_str(&format!(r#"{{"model":{{"type":"euler-bernoulli","size":{m}}}}}"#), &[]).map_err(to_js)?;
        curves.push(curve(&cfg, format!("Euler-Bernoulli M={m}"), &tau).map_err(to_js)?);
    }
    let cfg = parse_config_str(&format!(r#"{{"model":{{"type":"timoshenko","size":{tm_size}}}}}"#), &[]).map_err(to_js)?;
    curves.push(curve(&cfg, format!("Timoshenko N={tm_size}"), &tau).map_err(to_js)?);
    json(&KernelCurves { tau, curves })
}

#[derive(Serialize)]
struct Trajectory {
    t: Vec<f64>,
    y1: Vec<f64>,
    fc: Vec<f64>,
    onsets: Vec<f64>,
    l_plus: f64,
}

/// Reduced-model impact run for a JSON config; the trajectory is thinned to about `points` samples.
#[wasm_bindgen]
pub fn simulate_impact(config_json: &str, points: usize) -> Result<String, JsValue> {
    let cfg = parse_config_str(config_json, &[]).map_err(to_js)?;
    impact_core::app::singular_guard(&cfg).map_err(to_js)?;
    let contact = cfg.contact_config().ok_or_else(|| to_js("contact.stop is required"))?;
    let sys = cfg.system(&cfg.structure().map_err(to_js)?).map_err(to_js)?;
    let model = ReducedModel::new(sys, &cfg.kernel_options()).map_err(to_js)?;
    let r = simulate(&model, &contact).map_err(to_js)?;
    let stride = (r.times.len() / points.max(2)).max(1);
    let pick = |v: Vec<f64>| v.into_iter().step_by(stride).collect::<Vec<_>>();
    json(&Trajectory {
        t: pick(r.times.clone()),
        y1: pick(r.y.iter().map(|y| y[0]).collect()),
        fc: pick(r.fc.clone()),
        onsets: r.events.iter().filter(|e| e.kind == impact_core::dde::EventKind::Onset).map(|e| e.t).collect(),
        l_plus: model.kernel.l_plus[1],
    })
}

/// Constant-force overlap study for `"euler-bernoulli"` or `"string"`.
#[wasm_bindgen]
pub fn delta_t_scaling(model: &str, delta_t_min: f64, delta_t_max: f64, points: usize) -> Result<String, JsValue> {
    let cfg = parse_config_str(
        &format!(
            r#"{{"model":{{"type":"{model}","damping":0}},
                "run":{{"asymptotics":{{"delta_t_min":{delta_t_min},"delta_t_max":{delta_t_max},"points":{points}}}}}}}"#
        ),
        &[],
    )
    .map_err(to_js)?;
    json(&asymptotics_for(&cfg).map_err(to_js)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_curves_separate_the_models() {
        let s = kernel_curves(vec![25, 50], 20, 0.01, 50).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        let curves = v["curves"].as_array().unwrap();
        assert_eq!(curves.len(), 3);
        let lp: Vec<f64> = curves.iter().map(|c| c["l_plus"].as_f64().unwrap()).collect();
        assert!(lp[1] < lp[0]);
        assert!(lp[2] > 0.02);
    }

    #[test]
    fn scaling_exponent_for_string() {
        let s = delta_t_scaling("string", 1e-5, 1e-3, 3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert!(v["exponent_fit"].as_f64().unwrap().abs() < 0.1);
    }
}
