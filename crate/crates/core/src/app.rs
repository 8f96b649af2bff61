//! Subcommand orchestration: every output is computed before any file is written.

use crate::asymptotics::{asymptotics_report, log_grid, AsymptoticsOptions, AsymptoticsReport};
use crate::config::RunConfig;
use crate::cor::{chatter_metrics, simulate_cor, ChatterMetrics};
use crate::dde::{simulate, EventKind, ReducedModel, SimulationResult};
use crate::error::{Error, Result};
use crate::kernel::compute_kernel;
use crate::output::{csv_string, events_json, fmt_num, kernel_csv, kernel_summary, modes_csv, to_json_string, trajectory_csv, write_text};
use crate::projection::build_projection;
use crate::regularity::{regularity_sweep, RegularityReport, SweepVerdict};
use crate::structure::ModelTag;
use serde::Serialize;
use std::path::{Path, PathBuf};

pub const SUBCOMMANDS: [&str; 6] = ["modes", "kernel", "regularity", "simulate", "compare-cor", "asymptotics"];

/// Named file contents produced by a subcommand.
pub type Outputs = Vec<(String, String)>;

/// Runs `name` and writes its files into `out_dir`, returning the written paths.
pub fn run_subcommand(name: &str, cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let outputs = compute_outputs(name, cfg)?;
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::with_capacity(outputs.len());
    for (file, text) in outputs {
        let path = out_dir.join(file);
        write_text(&path, &text)?;
        written.push(path);
    }
    Ok(written)
}

/// Runs `name` without touching the filesystem.
pub fn compute_outputs(name: &str, cfg: &RunConfig) -> Result<Outputs> {
    match name {
        "modes" => modes(cfg),
        "kernel" => kernel(cfg),
        "regularity" => regularity(cfg),
        "simulate" => simulate_cmd(cfg),
        "compare-cor" => compare_cor(cfg),
        "asymptotics" => asymptotics(cfg),
        other => Err(Error::invalid("subcommand", format!("'{other}' is not one of {}", SUBCOMMANDS.join(", ")))),
    }
}

fn modes(cfg: &RunConfig) -> Result<Outputs> {
    let ms = cfg.structure()?;
    Ok(vec![("modes.csv".into(), modes_csv(&ms)?)])
}

fn kernel(cfg: &RunConfig) -> Result<Outputs> {
    let sys = cfg.system(&cfg.structure()?)?;
    let proj = build_projection(&sys)?;
    let k = compute_kernel(&sys, &proj, &cfg.kernel_options())?;
    Ok(vec![("kernel.csv".into(), kernel_csv(&k)?), ("kernel.json".into(), to_json_string(&kernel_summary(&k))?)])
}

fn regularity(cfg: &RunConfig) -> Result<Outputs> {
    let report = sweep(cfg)?;
    Ok(vec![("regularity.json".into(), to_json_string(&report)?)])
}

fn sweep(cfg: &RunConfig) -> Result<RegularityReport> {
    regularity_sweep(&cfg.model.family(), &cfg.sweep_sizes(), &cfg.sweep_options())
}

/// Refuses contact simulation when refinement drives `[L+]_2` to zero.
pub fn singular_guard(cfg: &RunConfig) -> Result<()> {
    let report = sweep(cfg)?;
    if report.verdict == SweepVerdict::Singular {
        let seq: Vec<String> = report.sizes.iter().zip(&report.l_plus).map(|(m, l)| format!("{m}: {l:.3e}")).collect();
        return Err(Error::SingularModel {
            detail: format!("{} estimates of [L+]_2 vanish under refinement ({})", report.model.as_str(), seq.join(", ")),
        });
    }
    Ok(())
}

fn reduced_run(cfg: &RunConfig) -> Result<SimulationResult> {
    let contact = cfg
        .contact_config()
        .ok_or_else(|| Error::invalid("contact.stop", "a stop position is required for contact simulation"))?;
    singular_guard(cfg)?;
    let sys = cfg.system(&cfg.structure()?)?;
    let model = ReducedModel::new(sys, &cfg.kernel_options())?;
    simulate(&model, &contact)
}

fn simulate_cmd(cfg: &RunConfig) -> Result<Outputs> {
    let result = reduced_run(cfg)?;
    Ok(vec![("trajectory.csv".into(), trajectory_csv(&result)?), ("events.json".into(), events_json(&result.events)?)])
}

#[derive(Serialize)]
struct ReducedSummary {
    onsets: usize,
    releases: usize,
    secondary_jumps: usize,
    max_fc: f64,
    metrics: Option<ChatterMetrics>,
}

#[derive(Serialize)]
struct ChatterReport {
    reduced: ReducedSummary,
    cor: Option<ChatterMetrics>,
    cor_impacts: usize,
    /// CoR impacts per reduced-model contact onset.
    event_ratio: f64,
}

fn compare_cor(cfg: &RunConfig) -> Result<Outputs> {
    let reduced = reduced_run(cfg)?;
    let cor_cfg = cfg.cor_config().expect("contact checked by the reduced run");
    let sys = cfg.system(&cfg.structure()?)?;
    let cor = simulate_cor(&sys, &cor_cfg)?;
    let onset_times: Vec<f64> = reduced.events.iter().filter(|e| e.kind == EventKind::Onset).map(|e| e.t).collect();
    let onsets = onset_times.len();
    let report = ChatterReport {
        reduced: ReducedSummary {
            onsets,
            releases: reduced.count(EventKind::Release),
            secondary_jumps: reduced.count(EventKind::SecondaryJump),
            max_fc: reduced.fc.iter().cloned().fold(0.0, f64::max),
            metrics: crate::cor::chatter_metrics_from_times(&onset_times),
        },
        cor: chatter_metrics(&cor),
        cor_impacts: cor.events.len(),
        event_ratio: if onsets > 0 { cor.events.len() as f64 / onsets as f64 } else { f64::INFINITY },
    };
    Ok(vec![
        ("reduced_trajectory.csv".into(), trajectory_csv(&reduced)?),
        ("reduced_events.json".into(), events_json(&reduced.events)?),
        ("cor_trajectory.csv".into(), trajectory_csv(&cor)?),
        ("cor_events.json".into(), events_json(&cor.events)?),
        ("chatter.json".into(), to_json_string(&report)?),
    ])
}

/// Overlap-scaling study for the configured analytic family.
pub fn asymptotics_for(cfg: &RunConfig) -> Result<AsymptoticsReport> {
    let family = cfg.model.analytic_family().ok_or_else(|| {
        Error::invalid("model.type", format!("asymptotics needs a closed-form spectrum; '{}' is not supported", ModelTag::Timoshenko.as_str()))
    })?;
    let a = &cfg.run.asymptotics;
    let grid = log_grid(a.delta_t_max, a.delta_t_min, a.points);
    asymptotics_report(&family, &grid, &AsymptoticsOptions { eta: a.eta, mode_factor: a.mode_factor })
}

fn asymptotics(cfg: &RunConfig) -> Result<Outputs> {
    let r = asymptotics_for(cfg)?;
    let csv = csv_string(
        &["delta_t", "fc", "N_measured", "N_estimated", "modes_used", "reversal_defect", "reversal_defect_leading_order"],
        (0..r.delta_t.len()).map(|i| {
            vec![
                fmt_num(r.delta_t[i]),
                fmt_num(r.fc[i]),
                fmt_num(r.n_measured[i]),
                r.n_estimated[i].to_string(),
                r.modes_used[i].to_string(),
                fmt_num(r.reversal_defect[i]),
                fmt_num(r.reversal_defect_leading_order[i]),
            ]
        }),
    )?;
    Ok(vec![("asymptotics.json".into(), to_json_string(&r)?), ("asymptotics.csv".into(), csv)])
}
