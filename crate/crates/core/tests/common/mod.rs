//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use complexity_trap::strategy::utility;
use complexity_trap::{ModelParams, Probability, Strategy};

pub fn prob(x: f64) -> Probability {
    Probability::new(x).unwrap()
}

/// `P[Bin(m, f) >= tau]` summed term by term from binomial coefficients
/// built by the multiplicative formula.
pub fn tail_direct(m: u32, tau: u32, f: f64) -> f64 {
    if tau == 0 {
        return 1.0;
    }
    let mut total = 0.0;
    let mut coef = 1.0f64;
    for k in 0..=m {
        if k > 0 {
            coef = coef * f64::from(m - k + 1) / f64::from(k);
        }
        if k >= tau {
            total += coef * f.powi(k as i32) * (1.0 - f).powi((m - k) as i32);
        }
    }
    total
}

/// Utility written out from its definition.
pub fn utility_direct(m: u32, tau: u32, f: f64, alpha: f64, beta: f64) -> f64 {
    let gain = if tau == 0 {
        0.0
    } else {
        tail_direct(m, tau, f) * f64::from(tau).powf(beta)
    };
    gain - alpha * f64::from(m)
}

/// Exhaustive argmax over `0 <= tau <= m <= ceil(alpha^(-1/(1-beta)))`,
/// first maximiser in `(m, tau)` order.
pub fn brute_force_best(params: &ModelParams, f: Probability) -> (Strategy, f64) {
    let m_cap = params.max_inputs().ceil() as u32;
    let mut best = (Strategy::WITHDRAW, utility(Strategy::WITHDRAW, f, params));
    for m in 1..=m_cap {
        for tau in 0..=m {
            let s = Strategy::new(m, tau);
            let u = utility(s, f, params);
            if u > best.1 {
                best = (s, u);
            }
        }
    }
    best
}

/// Mean-field drift written out from its definition.
pub fn drift_direct(s: Strategy, f: f64, eps: f64) -> f64 {
    if s.tau == 0 {
        0.0
    } else {
        tail_direct(s.m, s.tau, f) - f * (1.0 + eps)
    }
}
