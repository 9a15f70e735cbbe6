//! The agents' decision problem.
//!
//! An agent picks how many suppliers to contact (`m`) and how many
//! delivered inputs its product needs (`tau`). A successful product is worth
//! `tau^beta`, every contacted supplier costs `alpha`, and success happens
//! when at least `tau` of the `m` suppliers are functional:
//!
//! ```text
//! U(m, tau; F) = P[Binomial(m, F) >= tau] * tau^beta - alpha * m
//! ```
//!
//! The utility-maximising pair is found exactly by enumerating a finite
//! candidate set that provably contains every maximiser.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{binomial_tail, lambert_w0, Probability};

/// Cost, returns-to-complexity and exogenous failure rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    alpha: f64,
    beta: f64,
    eps: f64,
}

#[derive(Deserialize)]
struct RawParams {
    alpha: f64,
    beta: f64,
    eps: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.alpha, raw.beta, raw.eps)
    }
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, eps: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1), got {beta}"
            )));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must be non-negative, got {eps}"
            )));
        }
        Ok(ModelParams { alpha, beta, eps })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Same cost and returns, different failure rate.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        ModelParams::new(self.alpha, self.beta, eps)
    }

    /// `alpha^(-1/(1-beta))`: no strategy with `m > 0` beyond this bound can
    /// beat withdrawing.
    pub fn max_inputs(&self) -> f64 {
        self.alpha.powf(-1.0 / (1.0 - self.beta))
    }

    /// `(beta/alpha)^(1/(1-beta))`, the unconstrained optimum of
    /// `tau^beta - alpha * tau`.
    pub fn gamma(&self) -> f64 {
        (self.beta / self.alpha).powf(1.0 / (1.0 - self.beta))
    }
}

/// Attempted inputs `m` and required inputs `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Strategy {
    pub m: u32,
    pub tau: u32,
}

impl Strategy {
    /// Withdrawal from the economy: no inputs, nothing required.
    pub const WITHDRAW: Strategy = Strategy { m: 0, tau: 0 };

    pub const fn new(m: u32, tau: u32) -> Self {
        Strategy { m, tau }
    }

    pub fn buffer(&self) -> i64 {
        i64::from(self.m) - i64::from(self.tau)
    }

    /// `(m + s, tau + s)`.
    pub fn raised(&self, s: u32) -> Strategy {
        Strategy::new(self.m + s, self.tau + s)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.m, self.tau)
    }
}

/// Value of a successfully produced good requiring `tau` inputs; `0^beta`
/// is taken to be zero.
fn payoff(tau: u32, beta: f64) -> f64 {
    if tau == 0 {
        0.0
    } else {
        f64::from(tau).powf(beta)
    }
}

pub fn utility(s: Strategy, f: Probability, params: &ModelParams) -> f64 {
    let cost = params.alpha * f64::from(s.m);
    if s.tau == 0 {
        return -cost;
    }
    binomial_tail(s.m, s.tau, f).value() * payoff(s.tau, params.beta) - cost
}

/// Upper bound on `m` for diagonal strategies `m = tau` with positive
/// utility, from `F^m m^beta > alpha m` solved with the Lambert W function.
pub fn diagonal_bound(params: &ModelParams, f: Probability) -> f64 {
    let ln_f = f.value().ln();
    let b = params.beta - 1.0;
    let arg = params.max_inputs() * ln_f / b;
    match lambert_w0(arg) {
        Ok(w) => b / ln_f * w,
        Err(_) => 0.0,
    }
}

/// Every strategy that could be a best response at reliability `f`, in
/// lexicographic `(m, tau)` order.
pub fn candidate_set(params: &ModelParams, f: Probability) -> Vec<Strategy> {
    let fv = f.value();
    if fv == 0.0 {
        return vec![Strategy::WITHDRAW];
    }
    if fv == 1.0 {
        let gamma = params.gamma();
        let lo = gamma.floor() as u32;
        let hi = gamma.ceil() as u32;
        let mut out = vec![Strategy::new(lo, lo)];
        if hi != lo {
            out.push(Strategy::new(hi, hi));
        }
        return out;
    }

    let m_max = params.max_inputs().floor().min(f64::from(u32::MAX - 1)) as u32;
    let diag = diagonal_bound(params, f);
    let mut out = vec![Strategy::WITHDRAW];
    for m in 1..=m_max {
        for tau in 1..=m {
            let keep = if tau == m {
                f64::from(m) < diag
            } else {
                f64::from(m) < payoff(tau, params.beta) / params.alpha
            };
            if keep {
                out.push(Strategy::new(m, tau));
            }
        }
    }
    out
}

/// Utility-maximising strategy at reliability `f`.
///
/// Exact ties go to the lexicographically smaller `(m, tau)`.
pub fn best_response(params: &ModelParams, f: Probability) -> Strategy {
    best_two(params, f).0 .0
}

/// Best and runner-up `(strategy, utility)` pairs among the candidates.
pub fn best_two(params: &ModelParams, f: Probability) -> ((Strategy, f64), Option<(Strategy, f64)>) {
    if f.value() == 1.0 && params.alpha >= 1.0 {
        return ((Strategy::WITHDRAW, 0.0), None);
    }
    let mut best = (Strategy::WITHDRAW, f64::NEG_INFINITY);
    let mut second: Option<(Strategy, f64)> = None;
    for s in candidate_set(params, f) {
        // payoff - cost bounds the utility from above.
        let ceiling = payoff(s.tau, params.beta) - params.alpha * f64::from(s.m);
        if let Some((_, u2)) = second {
            if ceiling < u2 {
                continue;
            }
        }
        let u = utility(s, f, params);
        if u > best.1 {
            if best.1.is_finite() {
                second = Some(best);
            }
            best = (s, u);
        } else if second.is_none_or(|(_, u2)| u > u2) {
            second = Some((s, u));
        }
    }
    if best.0.m == 0 {
        best.0 = Strategy::WITHDRAW;
    }
    (best, second)
}

/// Closed-form indifference points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoints {
    /// `F = alpha`, where `(1, 1)` and `(0, 0)` give equal utility.
    pub f_exit_trap: Probability,
    /// `2^-(beta+1) (1 - sqrt(1 - alpha 2^(beta+2)))`, absent when the
    /// discriminant is negative.
    pub f_11_22: Option<Probability>,
}

pub fn analytic_breakpoints(params: &ModelParams) -> Breakpoints {
    let f_exit_trap = Probability::from_rounded(params.alpha.min(1.0));
    let beta = params.beta;
    let disc = 1.0 - params.alpha * 2f64.powf(beta + 2.0);
    let f_11_22 = if disc >= 0.0 {
        Probability::new(2f64.powf(-(beta + 1.0)) * (1.0 - disc.sqrt())).ok()
    } else {
        None
    };
    Breakpoints {
        f_exit_trap,
        f_11_22,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(0.1, 0.4, 0.001).unwrap()
    }

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.0, 0.4, 0.0).is_err());
        assert!(ModelParams::new(0.1, 1.0, 0.0).is_err());
        assert!(ModelParams::new(0.1, 0.0, 0.0).is_err());
        assert!(ModelParams::new(0.1, 0.4, -1e-3).is_err());
        assert!(ModelParams::new(0.1, 0.4, 0.0).is_ok());
    }

    #[test]
    fn utility_examples() {
        let pr = params();
        for f in [0.0, 0.3, 1.0] {
            assert_eq!(utility(Strategy::WITHDRAW, p(f), &pr), 0.0);
        }
        assert!((utility(Strategy::new(3, 1), p(0.5), &pr) - 0.575).abs() < 1e-14);
        let u = utility(Strategy::new(10, 10), Probability::ONE, &pr);
        assert!((u - (10f64.powf(0.4) - 1.0)).abs() < 1e-14);
        assert!((u - 1.511_886_5).abs() < 1e-7);
    }

    #[test]
    fn candidate_set_edge_cases() {
        let pr = params();
        assert_eq!(candidate_set(&pr, Probability::ZERO), vec![Strategy::WITHDRAW]);
        assert_eq!(
            candidate_set(&pr, Probability::ONE),
            vec![Strategy::new(10, 10), Strategy::new(11, 11)]
        );
        assert!((pr.gamma() - 10.079).abs() < 1e-3);
    }

    #[test]
    fn candidate_set_interior() {
        let pr = params();
        let set = candidate_set(&pr, p(0.5));
        assert!(set.contains(&Strategy::new(3, 1)));
        assert!(set.contains(&Strategy::new(6, 2)));
        assert_eq!(set[0], Strategy::WITHDRAW);
        for s in &set {
            if s.m > 0 {
                assert!(f64::from(s.m) < f64::from(s.tau).powf(0.4) / 0.1);
            }
        }
        let mut sorted = set.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, set);
    }

    #[test]
    fn best_response_examples() {
        let pr = params();
        assert_eq!(best_response(&pr, p(0.45)), Strategy::new(3, 1));
        assert_eq!(best_response(&pr, p(0.05)), Strategy::WITHDRAW);
        assert_eq!(best_response(&pr, Probability::ONE), Strategy::new(10, 10));
        // Tie at F = alpha goes to withdrawal.
        assert_eq!(best_response(&pr, p(0.1)), Strategy::WITHDRAW);
    }

    #[test]
    fn runner_up_at_one_half() {
        let ((s1, u1), second) = best_two(&params(), p(0.5));
        let (s2, u2) = second.unwrap();
        assert_eq!(s1, Strategy::new(6, 2));
        assert_eq!(s2, Strategy::new(3, 1));
        assert!((u1 - 0.575_186_733).abs() < 1e-8);
        assert!(u1 - u2 > 0.0 && u1 - u2 < 3e-4);
    }

    #[test]
    fn costly_inputs_at_full_reliability_withdraw() {
        let pr = ModelParams::new(1.2, 0.4, 0.0).unwrap();
        assert_eq!(best_response(&pr, Probability::ONE), Strategy::WITHDRAW);
    }

    #[test]
    fn breakpoints() {
        let b = analytic_breakpoints(&params());
        assert_eq!(b.f_exit_trap.value(), 0.1);
        assert!((b.f_11_22.unwrap().value() - 0.118_542).abs() < 1e-6);
        let b = analytic_breakpoints(&ModelParams::new(0.5, 0.4, 0.0).unwrap());
        assert!(b.f_11_22.is_none());
        let b = analytic_breakpoints(&ModelParams::new(3.0, 0.4, 0.0).unwrap());
        assert_eq!(b.f_exit_trap.value(), 1.0);
    }

    #[test]
    fn no_redundancy_near_full_reliability() {
        let pr = params();
        for f in [0.997, 0.999] {
            let s = best_response(&pr, p(f));
            assert_eq!(s.m, s.tau, "f = {f}: {s}");
        }
        // One spare input still pays at 0.995: U(11, 10) = 1.40853 > U(8, 8) = 1.40709.
        assert_eq!(best_response(&pr, p(0.995)), Strategy::new(11, 10));
    }
}
