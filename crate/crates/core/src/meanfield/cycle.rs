use serde::{Deserialize, Serialize};

use super::{SwitchEvent, Trajectory};
use crate::error::{Error, Result};
use crate::numerics::Probability;
use crate::strategy::Strategy;

/// Resolution in `F` at which switch states are compared.
pub const CYCLE_QUANTUM: f64 = 1e-4;

/// Rate of change of `F` below which a trajectory counts as converged.
const CONVERGED_RATE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub detected: bool,
    pub period: Option<f64>,
    pub f_min: Probability,
    pub f_max: Probability,
    /// Strategies entered over one period, in order.
    pub strategy_sequence: Vec<Strategy>,
}

fn same_state(a: &SwitchEvent, b: &SwitchEvent) -> bool {
    a.new == b.new && a.old == b.old && (a.f.value() - b.f.value()).abs() < CYCLE_QUANTUM
}

/// Smallest `p` such that the later part of `events` is `p`-periodic
/// (at least two full repetitions, and the whole second half).
fn find_period(events: &[SwitchEvent]) -> Option<usize> {
    let n = events.len();
    (1..=n / 2).find(|&p| {
        let start = (n / 2).min(n - 2 * p);
        (start..n - p).all(|i| same_state(&events[i], &events[i + p]))
    })
}

/// Looks for a limit cycle in the part of `traj` after `transient`.
///
/// Switch events are reduced to `(old, new, F)` with `F` compared at
/// [`CYCLE_QUANTUM`]; a cycle is a repeating suffix of that sequence.
/// Oscillations whose amplitude is below the quantum are reported as a
/// fixed point.
pub fn detect_cycle(traj: &Trajectory, transient: f64) -> Result<CycleReport> {
    let t_last = *traj
        .times
        .last()
        .ok_or_else(|| Error::InsufficientData("empty trajectory".into()))?;
    if !(transient >= 0.0) || transient >= t_last {
        return Err(Error::InvalidParameter(format!(
            "transient {transient} must lie in [0, {t_last})"
        )));
    }

    let first = traj.times.partition_point(|&t| t < transient);
    let window = &traj.f_values[first..];
    let (f_min, f_max) = window.iter().fold((1.0f64, 0.0f64), |(lo, hi), f| {
        (lo.min(f.value()), hi.max(f.value()))
    });
    let fixed_point = CycleReport {
        detected: false,
        period: None,
        f_min: Probability::from_rounded(f_min),
        f_max: Probability::from_rounded(f_max),
        strategy_sequence: Vec::new(),
    };

    let events: Vec<SwitchEvent> = traj
        .switch_events
        .iter()
        .filter(|e| e.time >= transient)
        .copied()
        .collect();

    if events.len() < 2 {
        // Rate over the final unit of time (or the whole window if shorter).
        let t_ref = (t_last - 1.0).max(traj.times[first]);
        let i_ref = traj.times.partition_point(|&t| t < t_ref);
        let dt = t_last - traj.times[i_ref];
        let df = (traj.final_f().value() - traj.f_values[i_ref].value()).abs();
        if dt > 0.0 && df / dt > CONVERGED_RATE {
            return Err(Error::InsufficientData(format!(
                "fewer than two switches after t = {transient} and F still moving at rate {}",
                df / dt
            )));
        }
        return Ok(fixed_point);
    }

    if f_max - f_min < CYCLE_QUANTUM {
        return Ok(fixed_point);
    }

    match find_period(&events) {
        None => Ok(CycleReport {
            detected: false,
            ..fixed_point
        }),
        Some(p) => {
            let n = events.len();
            let start = (n / 2).min(n - 2 * p);
            let spans: Vec<f64> = (start..n - p)
                .map(|i| events[i + p].time - events[i].time)
                .collect();
            let period = spans.iter().sum::<f64>() / spans.len() as f64;
            Ok(CycleReport {
                detected: true,
                period: Some(period),
                strategy_sequence: events[n - p..].iter().map(|e| e.new).collect(),
                ..fixed_point
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield::{integrate, Policy};
    use crate::strategy::ModelParams;

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    fn ev(time: f64, f: f64, old: (u32, u32), new: (u32, u32)) -> SwitchEvent {
        SwitchEvent {
            time,
            f: p(f),
            old: Strategy::new(old.0, old.1),
            new: Strategy::new(new.0, new.1),
        }
    }

    fn synthetic(events: Vec<SwitchEvent>, t_end: f64) -> Trajectory {
        let n = (t_end * 10.0) as usize;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 / 10.0).collect();
        let f_values = times.iter().map(|t| p(0.5 + 0.1 * (t * 1.3).sin())).collect();
        Trajectory {
            strategies: vec![Strategy::new(1, 1); times.len()],
            times,
            f_values,
            switch_events: events,
            policy: Policy::BestResponse { commit: 1.0 },
        }
    }

    #[test]
    fn fixed_withdrawal_is_not_a_cycle() {
        let params = ModelParams::new(0.1, 0.4, 0.001).unwrap();
        let pol = Policy::Fixed {
            strategy: Strategy::WITHDRAW,
        };
        let traj = integrate(&params, p(0.3), pol, 40.0, 1e-2).unwrap();
        let report = detect_cycle(&traj, 10.0).unwrap();
        assert!(!report.detected);
        assert_eq!(report.f_min, report.f_max);
    }

    #[test]
    fn converged_trajectory_is_not_a_cycle() {
        let params = ModelParams::new(0.1, 0.4, 0.001).unwrap();
        let pol = Policy::Fixed {
            strategy: Strategy::new(3, 1),
        };
        let traj = integrate(&params, p(0.5), pol, 200.0, 1e-2).unwrap();
        let report = detect_cycle(&traj, 50.0).unwrap();
        assert!(!report.detected);
        assert!(report.f_max.value() - report.f_min.value() < 1e-9);
    }

    #[test]
    fn synthetic_period_two() {
        let mut events = Vec::new();
        for k in 0..20 {
            let t = 2.0 * k as f64;
            events.push(ev(t, 0.95, (9, 9), (10, 10)));
            events.push(ev(t + 1.0, 0.93, (10, 10), (9, 9)));
        }
        let report = detect_cycle(&synthetic(events, 40.0), 5.0).unwrap();
        assert!(report.detected);
        assert!((report.period.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(report.strategy_sequence.len(), 2);
    }

    #[test]
    fn aperiodic_switches_are_not_a_cycle() {
        let events = (0..30)
            .map(|k| {
                let s = if k % 2 == 0 { ((9, 9), (10, 10)) } else { ((10, 10), (9, 9)) };
                ev(k as f64, 0.5 + 0.01 * k as f64, s.0, s.1)
            })
            .collect();
        let report = detect_cycle(&synthetic(events, 30.0), 1.0).unwrap();
        assert!(!report.detected);
    }

    #[test]
    fn moving_without_switches_is_insufficient() {
        let params = ModelParams::new(0.1, 0.4, 0.001).unwrap();
        let pol = Policy::Fixed {
            strategy: Strategy::new(3, 1),
        };
        let traj = integrate(&params, p(0.2), pol, 4.0, 1e-2).unwrap();
        assert!(matches!(
            detect_cycle(&traj, 1.0),
            Err(Error::InsufficientData(_))
        ));
        assert!(detect_cycle(&traj, 10.0).is_err());
    }
}
