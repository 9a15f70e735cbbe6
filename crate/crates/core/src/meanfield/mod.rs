//! Deterministic dynamics of the expected functional fraction `F(t)`:
//!
//! ```text
//! dF/dt = P[Binomial(m, F) >= tau] - F (1 + eps)      (tau > 0)
//! dF/dt = 0                                           (tau = 0)
//! ```
//!
//! with `(m, tau)` chosen by a [`Policy`]. The right-hand side jumps wherever
//! the chosen strategy changes, so most of this module is about locating
//! those switches: phase portraits, the poverty-trap basin, the `(alpha, F)`
//! phase diagram, limit cycles under finite commitment, and the
//! buffer-versus-complexity sweep.

mod cycle;
mod dynamics;
mod portrait;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::numerics::{binomial_tail, Probability};
use crate::strategy::{best_response, ModelParams, Strategy};

pub use cycle::{detect_cycle, CycleReport, CYCLE_QUANTUM};
pub use dynamics::{integrate, SwitchEvent, Trajectory};
pub use portrait::{
    phase_diagram, phase_portrait, phase_portrait_for, trap_basin, trap_basin_for, DiagramCell,
    PhasePortrait, Segment, TrapBasin, BOUNDARY_PRECISION,
};
pub use sweep::{redundancy_sweep, SweepPoint};

/// `dF/dt` under strategy `s`.
pub fn drift(s: Strategy, f: Probability, eps: f64) -> f64 {
    if s.tau == 0 {
        return 0.0;
    }
    binomial_tail(s.m, s.tau, f).value() - f.value() * (1.0 + eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriftSign {
    Negative,
    Zero,
    Positive,
    Mixed,
}

impl DriftSign {
    pub fn of(value: f64) -> Self {
        if value > 0.0 {
            DriftSign::Positive
        } else if value < 0.0 {
            DriftSign::Negative
        } else {
            DriftSign::Zero
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DriftSign::Negative => "negative",
            DriftSign::Zero => "zero",
            DriftSign::Positive => "positive",
            DriftSign::Mixed => "mixed",
        }
    }
}

/// How agents pick `(m, tau)` as the economy evolves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    /// Best respond every `commit` time units; `commit = 0` re-optimises
    /// continuously.
    BestResponse { commit: f64 },
    /// Play `(m* + s, tau* + s)` where `(m*, tau*)` is the instantaneous
    /// best response.
    Overshoot { s: u32 },
    Fixed { strategy: Strategy },
}

impl Policy {
    pub const INSTANT_BEST_RESPONSE: Policy = Policy::BestResponse { commit: 0.0 };

    /// The strategy this policy would pick if it re-optimised at `f`.
    pub fn strategy_at(&self, params: &ModelParams, f: Probability) -> Strategy {
        match *self {
            Policy::BestResponse { .. } => best_response(params, f),
            Policy::Overshoot { s } => best_response(params, f).raised(s),
            Policy::Fixed { strategy } => strategy,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    #[test]
    fn drift_examples() {
        assert!((drift(Strategy::new(3, 1), p(0.5), 0.001) - 0.3745).abs() < 1e-15);
        assert_eq!(drift(Strategy::WITHDRAW, p(0.7), 0.3), 0.0);
        assert_eq!(drift(Strategy::new(4, 0), p(0.7), 0.3), 0.0);
        assert_eq!(drift(Strategy::new(2, 2), Probability::ONE, 0.0), 0.0);
        assert!((drift(Strategy::new(1, 1), p(0.4), 0.001) + 0.0004).abs() < 1e-15);
    }

    #[test]
    fn overshoot_drift_at_045() {
        let params = ModelParams::new(0.1, 0.4, 0.001).unwrap();
        let s = Policy::Overshoot { s: 2 }.strategy_at(&params, p(0.45));
        assert_eq!(s, Strategy::new(5, 3));
        assert!((drift(s, p(0.45), 0.001) + 0.0436).abs() < 1e-3);
    }
}
