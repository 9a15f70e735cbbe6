use serde::{Deserialize, Serialize};

use super::{drift, Policy};
use crate::error::{Error, Result};
use crate::numerics::Probability;
use crate::strategy::{ModelParams, Strategy};

/// A change of the active strategy, reported at step granularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub time: f64,
    /// `F` at the switch.
    pub f: Probability,
    pub old: Strategy,
    pub new: Strategy,
}

/// A sampled path `F(t)`.
///
/// `strategies[i]` is the strategy in force on the step that starts at
/// `times[i]` (the last entry repeats the final step's strategy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub f_values: Vec<Probability>,
    pub strategies: Vec<Strategy>,
    pub switch_events: Vec<SwitchEvent>,
    pub policy: Policy,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_f(&self) -> Probability {
        *self.f_values.last().expect("trajectory has at least one point")
    }
}

fn clamp_unit(x: f64) -> Probability {
    Probability::from_rounded(x.clamp(0.0, 1.0))
}

/// One RK4 step with `s` held fixed; `F` is clamped to `[0, 1]` at every
/// stage.
fn rk4_step(s: Strategy, f: f64, h: f64, eps: f64) -> f64 {
    let rhs = |x: f64| drift(s, clamp_unit(x), eps);
    let k1 = rhs(f);
    let k2 = rhs(f + 0.5 * h * k1);
    let k3 = rhs(f + 0.5 * h * k2);
    let k4 = rhs(f + h * k3);
    (f + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(0.0, 1.0)
}

/// Integrates the mean-field ODE from `f0` to `t_end` with fixed-step RK4.
///
/// The strategy is constant within each step. A best-response policy with
/// `commit = 0` re-optimises at every step; with `commit = T > 0` it
/// re-optimises only at the first step of each window `[kT, (k+1)T)`.
pub fn integrate(
    params: &ModelParams,
    f0: Probability,
    policy: Policy,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    if !(dt.is_finite() && dt > 0.0 && dt <= t_end) {
        return Err(Error::InvalidParameter(format!(
            "dt must lie in (0, t_end], got {dt}"
        )));
    }
    if let Policy::BestResponse { commit } = policy {
        if !(commit.is_finite() && commit >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "commitment interval must be non-negative, got {commit}"
            )));
        }
    }

    let n_steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let eps = params.eps();
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut f_values = Vec::with_capacity(n_steps + 1);
    let mut strategies = Vec::with_capacity(n_steps + 1);
    let mut switch_events = Vec::new();

    let mut f = f0.value();
    let mut current: Option<Strategy> = None;
    let mut window: Option<u64> = None;

    for i in 0..n_steps {
        let t = (i as f64 * dt).min(t_end);
        let t_next = ((i + 1) as f64 * dt).min(t_end);
        let fp = clamp_unit(f);

        let s = match policy {
            Policy::BestResponse { commit } if commit > 0.0 => {
                let k = (t / commit + 1e-9).floor() as u64;
                match (current, window) {
                    (Some(s), Some(w)) if w == k => s,
                    _ => {
                        window = Some(k);
                        policy.strategy_at(params, fp)
                    }
                }
            }
            _ => policy.strategy_at(params, fp),
        };
        if let Some(old) = current {
            if old != s {
                switch_events.push(SwitchEvent {
                    time: t,
                    f: fp,
                    old,
                    new: s,
                });
            }
        }
        current = Some(s);

        times.push(t);
        f_values.push(fp);
        strategies.push(s);

        f = rk4_step(s, f, t_next - t, eps);
    }
    times.push(t_end);
    f_values.push(clamp_unit(f));
    strategies.push(current.expect("at least one step"));

    Ok(Trajectory {
        times,
        f_values,
        strategies,
        switch_events,
        policy,
    })
}
