//! Coefficient-of-restitution impacts on the full modal system.
//!
//! Modes are propagated exactly between events. Tip crossings of the stop are
//! located by bisection and resolved by an instantaneous velocity reflection along
//! the contact direction `n`.

use crate::dde::{Event, EventKind, SimulationResult};
use crate::error::{ensure, Error, Result};
use crate::oscillator::Oscillator;
use crate::system::FirstOrderSystem;
use serde::{Deserialize, Serialize};

pub const DEFAULT_MAX_EVENTS: usize = 10_000_000;

/// `v+ = (I - (1 + C_R) n n^T / (n.n)) v`.
pub fn cor_impact_map(v: &[f64], n: &[f64], restitution: f64) -> Result<Vec<f64>> {
    ensure(v.len() == n.len(), "n", || format!("length {} differs from velocity length {}", n.len(), v.len()))?;
    ensure((0.0..=1.0).contains(&restitution), "restitution", || format!("{restitution} is outside [0, 1]"))?;
    let nn: f64 = n.iter().map(|x| x * x).sum();
    ensure(nn > 0.0, "n", || "contact direction must be nonzero".into())?;
    let nv: f64 = n.iter().zip(v).map(|(a, b)| a * b).sum();
    let scale = (1.0 + restitution) * nv / nn;
    Ok(v.iter().zip(n).map(|(vi, ni)| vi - scale * ni).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorConfig {
    pub stop: f64,
    pub restitution: f64,
    /// Output sampling interval; also the reference step for the crossing tolerance.
    pub eps: f64,
    pub t_end: f64,
    pub max_events: usize,
}

impl CorConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.eps > 0.0 && self.eps.is_finite(), "eps", || format!("{} must be positive", self.eps))?;
        ensure(self.t_end > 0.0 && self.t_end.is_finite(), "t_end", || format!("{} must be positive", self.t_end))?;
        ensure((0.0..=1.0).contains(&self.restitution), "restitution", || format!("{} is outside [0, 1]", self.restitution))?;
        ensure(self.max_events > 0, "max_events", || "must be positive".into())
    }
}

struct ModalState<'a> {
    sys: &'a FirstOrderSystem,
    osc: &'a [Oscillator],
    x: Vec<f64>,
    v: Vec<f64>,
    t: f64,
}

impl<'a> ModalState<'a> {
    /// State at `t + h` without impacts.
    fn peek(&self, h: f64) -> (Vec<f64>, Vec<f64>) {
        let m = self.x.len();
        let mut x = vec![0.0; m];
        let mut v = vec![0.0; m];
        for k in 0..m {
            let (xp0, vp0) = self.sys.particular(k, self.t);
            let (xp1, vp1) = self.sys.particular(k, self.t + h);
            let (xh, vh) = self.osc[k].propagate(self.x[k] - xp0, self.v[k] - vp0, h);
            x[k] = xh + xp1;
            v[k] = vh + vp1;
        }
        (x, v)
    }

    fn tip(&self, x: &[f64]) -> f64 {
        self.sys.tip_values().iter().zip(x).map(|(n, xi)| n * xi).sum()
    }
}

/// Event-driven restitution simulation; the force column is identically zero.
pub fn simulate_cor(sys: &FirstOrderSystem, config: &CorConfig) -> Result<SimulationResult> {
    config.validate()?;
    let n = sys.tip_values().to_vec();
    let w_max = sys.modal.max_omega();
    let h_max = std::f64::consts::PI / (4.0 * w_max);
    let sub = (config.eps / h_max).ceil().max(1.0) as usize;
    let h = config.eps / sub as f64;
    let tol = 1e-10 * config.eps;
    let samples = (config.t_end / config.eps).round() as usize;

    let m = sys.modes();
    let mut st = ModalState {
        sys,
        osc: sys.oscillators(),
        x: sys.initial_state.rows(0, m).iter().cloned().collect(),
        v: sys.initial_state.rows(m, m).iter().cloned().collect(),
        t: 0.0,
    };
    let mut out = SimulationResult::default();
    let resolved = |st: &ModalState| [st.tip(&st.x), st.tip(&st.v)];
    out.push_sample(0.0, resolved(&st), 0.0, false);

    for sample in 1..=samples {
        for s in 1..=sub {
            let target = (sample - 1) as f64 * config.eps + s as f64 * h;
            loop {
                let dt = target - st.t;
                let (x1, v1) = st.peek(dt);
                if st.tip(&x1) - config.stop >= 0.0 {
                    st.x = x1;
                    st.v = v1;
                    st.t = target;
                    break;
                }
                // First instant in (t, target] below the stop; the current point counts as
                // above because it is either clear of the stop or separating from it.
                let penetrating = st.tip(&st.x) - config.stop < 0.0 && st.tip(&st.v) < 0.0;
                let (mut lo, mut hi) = (0.0, if penetrating { 0.0 } else { dt });
                while hi - lo > tol {
                    let mid = 0.5 * (lo + hi);
                    if st.tip(&st.peek(mid).0) - config.stop > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let (xc, vc) = st.peek(hi);
                if st.tip(&vc) >= 0.0 {
                    // Tangential touch at the resolution limit; nothing to reflect.
                    st.x = x1;
                    st.v = v1;
                    st.t = target;
                    break;
                }
                st.x = xc;
                st.v = cor_impact_map(&vc, &n, config.restitution)?;
                st.t += hi;
                out.events.push(Event { kind: EventKind::Impact, t: st.t, fc_before: 0.0, fc_after: 0.0 });
                if out.events.len() > config.max_events {
                    return Err(Error::ChatterOverflow { max_events: config.max_events });
                }
            }
        }
        if !st.x.iter().chain(&st.v).all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("restitution state at t = {}", st.t)));
        }
        out.push_sample(sample as f64 * config.eps, resolved(&st), 0.0, false);
    }
    Ok(out)
}

/// Impact-rate statistics of an event log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatterMetrics {
    pub event_rate: f64,
    pub dominant_event_frequency: f64,
    pub episodes: usize,
    pub events: usize,
}

/// Rate of events inside episodes (split at gaps above ten median intervals) and the
/// reciprocal median interval. `None` for fewer than two events.
pub fn chatter_metrics(result: &SimulationResult) -> Option<ChatterMetrics> {
    chatter_metrics_from_times(&result.events.iter().map(|e| e.t).collect::<Vec<_>>())
}

pub fn chatter_metrics_from_times(times: &[f64]) -> Option<ChatterMetrics> {
    if times.len() < 2 {
        return None;
    }
    let gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sorted = gaps.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    let split = 10.0 * median;
    let (mut count, mut span, mut episodes) = (0usize, 0.0, 0usize);
    let mut start = 0;
    for i in 0..=gaps.len() {
        if i == gaps.len() || gaps[i] > split {
            if i > start {
                count += i - start + 1;
                span += times[i] - times[start];
                episodes += 1;
            }
            start = i + 1;
        }
    }
    let event_rate = if span > 0.0 { count as f64 / span } else { f64::INFINITY };
    let dominant_event_frequency = if median > 0.0 { 1.0 / median } else { f64::INFINITY };
    Some(ChatterMetrics { event_rate, dominant_event_frequency, episodes, events: times.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn axis_reflection() {
        let v = cor_impact_map(&[-2.0, 3.0], &[1.0, 0.0], 1.0).unwrap();
        assert_eq!(v, vec![2.0, 3.0]);
    }

    #[test]
    fn grazing_is_unchanged() {
        let v = cor_impact_map(&[1.0, 1.0], &[1.0, -1.0], 0.7).unwrap();
        assert_eq!(v, vec![1.0, 1.0]);
    }

    #[test]
    fn normal_velocity_scaled_by_restitution() {
        let n = [0.3, -1.2, 2.0];
        let v = [1.0, 0.5, -0.7];
        let vp = cor_impact_map(&v, &n, 0.6).unwrap();
        let dot = |a: &[f64]| -> f64 { a.iter().zip(&n).map(|(x, y)| x * y).sum() };
        assert_relative_eq!(dot(&vp), -0.6 * dot(&v), epsilon = 1e-12);
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(cor_impact_map(&[1.0], &[0.0], 1.0).is_err());
        assert!(cor_impact_map(&[1.0], &[1.0], 1.5).is_err());
    }

    #[test]
    fn metrics_from_even_spacing() {
        let times: Vec<f64> = (0..100).map(|i| 0.5 + i as f64 * 0.1 / 99.0).collect();
        let m = chatter_metrics_from_times(&times).unwrap();
        assert_relative_eq!(m.dominant_event_frequency, 990.0, max_relative = 1e-9);
        assert_relative_eq!(m.event_rate, 1000.0, max_relative = 1e-9);
        assert_eq!(m.episodes, 1);
        assert!(chatter_metrics_from_times(&[1.0]).is_none());
    }

    #[test]
    fn episodes_split_at_long_gaps() {
        let mut times: Vec<f64> = (0..10).map(|i| i as f64 * 0.01).collect();
        times.extend((0..10).map(|i| 5.0 + i as f64 * 0.01));
        let m = chatter_metrics_from_times(&times).unwrap();
        assert_eq!(m.episodes, 2);
        assert_relative_eq!(m.event_rate, 20.0 / 0.18, max_relative = 1e-9);
    }
}
