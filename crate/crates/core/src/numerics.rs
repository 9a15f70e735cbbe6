//! Special functions shared by the rest of the crate: binomial tail
//! probabilities, the principal branch of the Lambert W function and the
//! Student-t survival function.
//!
//! Everything here is a pure function of its arguments.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Absolute slack allowed when a probability comes out of arithmetic
/// slightly outside `[0, 1]`. Anything beyond it is an error.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    /// Builds a probability, clamping values within
    /// [`PROBABILITY_TOLERANCE`] of the unit interval.
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite()
            || value < -PROBABILITY_TOLERANCE
            || value > 1.0 + PROBABILITY_TOLERANCE
        {
            return Err(Error::Domain {
                what: "probability",
                value,
            });
        }
        Ok(Probability(value.clamp(0.0, 1.0)))
    }

    /// Clamps the result of an internal computation that is in `[0, 1]`
    /// up to rounding.
    pub(crate) fn from_rounded(value: f64) -> Self {
        debug_assert!(
            (-PROBABILITY_TOLERANCE..=1.0 + PROBABILITY_TOLERANCE).contains(&value),
            "probability {value} out of range"
        );
        Probability(value.clamp(0.0, 1.0))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Probability(1.0 - self.0)
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `ln C(m, k)` as a sum of `min(k, m - k)` logarithms.
fn ln_choose(m: u32, k: u32) -> f64 {
    let k = k.min(m - k);
    (1..=k)
        .map(|j| (f64::from(m - k + j) / f64::from(j)).ln())
        .sum()
}

/// `P[Binomial(m, f) = k]`, evaluated in log space.
fn binomial_pmf(m: u32, k: u32, ln_f: f64, ln_1mf: f64) -> f64 {
    (ln_choose(m, k) + f64::from(k) * ln_f + f64::from(m - k) * ln_1mf).exp()
}

/// `P[Binomial(m, f) >= tau]`.
///
/// The shorter of the two tails is summed term by term, starting next to
/// the mode and walking outwards with the pmf ratio, and the other tail is
/// obtained by complement. `tau == m` and `tau == 1` use closed forms.
pub fn binomial_tail(m: u32, tau: u32, f: Probability) -> Probability {
    let p = f.value();
    if tau == 0 {
        return Probability::ONE;
    }
    if tau > m || p == 0.0 {
        return Probability::ZERO;
    }
    if p == 1.0 {
        return Probability::ONE;
    }
    if tau == m {
        return Probability::from_rounded(p.powi(m as i32));
    }
    if tau == 1 {
        return Probability::from_rounded(-(f64::from(m) * (-p).ln_1p()).exp_m1());
    }

    let ln_f = p.ln();
    let ln_1mf = (-p).ln_1p();
    let odds = p / (1.0 - p);
    let mean = f64::from(m) * p;

    if f64::from(tau) > mean {
        // Upper tail: terms decrease from k = tau upwards.
        let mut term = binomial_pmf(m, tau, ln_f, ln_1mf);
        let mut sum = term;
        for k in tau..m {
            term *= f64::from(m - k) / f64::from(k + 1) * odds;
            if term == 0.0 {
                break;
            }
            sum += term;
        }
        Probability::from_rounded(sum)
    } else {
        // Lower tail: terms decrease from k = tau - 1 downwards.
        let mut term = binomial_pmf(m, tau - 1, ln_f, ln_1mf);
        let mut sum = term;
        for k in (1..tau).rev() {
            term *= f64::from(k) / f64::from(m - k + 1) / odds;
            if term == 0.0 {
                break;
            }
            sum += term;
        }
        Probability::from_rounded(1.0 - sum)
    }
}

const INV_E: f64 = 1.0 / std::f64::consts::E;

/// Principal branch `W0` of the Lambert W function: the `w >= -1` with
/// `w * exp(w) = x`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < -INV_E - PROBABILITY_TOLERANCE {
        return Err(Error::Domain {
            what: "lambert_w0",
            value: x,
        });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let q = x + INV_E;
    if q <= 0.0 {
        return Ok(-1.0);
    }

    let mut w = if q < 0.25 {
        // Series about the branch point.
        let p = (2.0 * std::f64::consts::E * q).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        x.ln_1p()
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    for _ in 0..50 {
        let ew = w.exp();
        let fw = w * ew - x;
        if fw == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        // Halley step.
        let step = fw / (ew * wp1 - (w + 2.0) * fw / (2.0 * wp1));
        w -= step;
        if step.abs() <= 1e-14 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w.max(-1.0))
}

/// `P[T > t]` for a Student-t variable with `dof` degrees of freedom.
pub fn student_t_sf(t: f64, dof: u32) -> Result<Probability> {
    if dof < 1 {
        return Err(Error::Domain {
            what: "student_t_sf degrees of freedom",
            value: f64::from(dof),
        });
    }
    if t.is_nan() {
        return Err(Error::Domain {
            what: "student_t_sf",
            value: t,
        });
    }
    let dist = StudentsT::new(0.0, 1.0, f64::from(dof)).map_err(|e| {
        Error::InvalidParameter(format!("student-t with {dof} degrees of freedom: {e}"))
    })?;
    Ok(Probability::from_rounded(dist.sf(t)))
}

/// Two-sided p-value `2 * P[T > |t|]`.
pub fn two_sided_p_value(t: f64, dof: u32) -> Result<Probability> {
    let one_sided = student_t_sf(t.abs(), dof)?;
    Probability::new(2.0 * one_sided.value())
}
