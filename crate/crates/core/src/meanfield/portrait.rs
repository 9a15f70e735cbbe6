use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{drift, DriftSign, Policy};
use crate::error::{Error, Result};
use crate::numerics::Probability;
use crate::strategy::{best_response, ModelParams, Strategy};

/// Absolute precision in `F` of refined strategy boundaries.
pub const BOUNDARY_PRECISION: f64 = 1e-9;

/// Interior points sampled when labelling a segment's drift sign.
const SIGN_SAMPLES: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub f_lo: Probability,
    pub f_hi: Probability,
    pub strategy: Strategy,
    pub drift_sign: DriftSign,
}

/// A partition of `[0, 1]` into maximal runs of a single strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePortrait {
    pub params: ModelParams,
    pub segments: Vec<Segment>,
}

impl PhasePortrait {
    /// Segment containing `f` (the left one on a shared endpoint).
    pub fn segment_at(&self, f: f64) -> Option<&Segment> {
        self.segments
            .iter()
            .find(|s| s.f_lo.value() <= f && f <= s.f_hi.value())
    }

    pub fn boundaries(&self) -> Vec<f64> {
        self.segments
            .iter()
            .skip(1)
            .map(|s| s.f_lo.value())
            .collect()
    }
}

fn prob(x: f64) -> Probability {
    Probability::from_rounded(x.clamp(0.0, 1.0))
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 100 {
        return Err(Error::InvalidParameter(format!(
            "resolution must be at least 100, got {resolution}"
        )));
    }
    Ok(())
}

/// Bisects `[lo, hi]` where `pred(lo)` holds and `pred(hi)` does not; returns
/// the final bracket.
fn bisect(mut lo: f64, mut hi: f64, tol: f64, pred: impl Fn(f64) -> bool) -> (f64, f64) {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

fn classify(s: Strategy, lo: f64, hi: f64, eps: f64) -> DriftSign {
    let mut seen: Option<DriftSign> = None;
    for j in 1..=SIGN_SAMPLES {
        let x = lo + (hi - lo) * j as f64 / (SIGN_SAMPLES + 1) as f64;
        let sign = DriftSign::of(drift(s, prob(x), eps));
        match seen {
            None => seen = Some(sign),
            Some(prev) if prev != sign => return DriftSign::Mixed,
            _ => {}
        }
    }
    seen.unwrap_or(DriftSign::Zero)
}

/// Phase portrait of the best-response dynamics.
pub fn phase_portrait(params: &ModelParams, resolution: usize) -> Result<PhasePortrait> {
    phase_portrait_for(params, Policy::INSTANT_BEST_RESPONSE, resolution)
}

/// Phase portrait of the strategy `policy` would apply pointwise.
///
/// `F` is scanned on `resolution + 1` uniform points; every change of
/// strategy between neighbours is refined by bisection to
/// [`BOUNDARY_PRECISION`], repeatedly, so that short runs falling between
/// two grid points are still split out once a bisection lands in them.
pub fn phase_portrait_for(
    params: &ModelParams,
    policy: Policy,
    resolution: usize,
) -> Result<PhasePortrait> {
    check_resolution(resolution)?;
    let rule = |x: f64| policy.strategy_at(params, prob(x));
    let grid: Vec<f64> = (0..=resolution).map(|i| i as f64 / resolution as f64).collect();
    let labels: Vec<Strategy> = grid.par_iter().map(|&x| rule(x)).collect();

    // (boundary, strategy to its right)
    let mut changes: Vec<(f64, Strategy)> = Vec::new();
    for i in 0..resolution {
        if labels[i] == labels[i + 1] {
            continue;
        }
        let (mut a, mut sa) = (grid[i], labels[i]);
        let b = grid[i + 1];
        loop {
            let (lo, hi) = bisect(a, b, BOUNDARY_PRECISION, |x| rule(x) == sa);
            let s_hi = rule(hi);
            changes.push((0.5 * (lo + hi), s_hi));
            if s_hi == labels[i + 1] || hi >= b {
                break;
            }
            a = hi;
            sa = s_hi;
        }
    }

    let mut segments = Vec::with_capacity(changes.len() + 1);
    let mut lo = 0.0;
    let mut current = labels[0];
    for (x, next) in changes {
        segments.push((lo, x, current));
        lo = x;
        current = next;
    }
    segments.push((lo, 1.0, current));

    let eps = params.eps();
    let segments = segments
        .into_par_iter()
        .map(|(lo, hi, s)| Segment {
            f_lo: prob(lo),
            f_hi: prob(hi),
            strategy: s,
            drift_sign: classify(s, lo, hi, eps),
        })
        .collect();
    Ok(PhasePortrait {
        params: *params,
        segments,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapBasin {
    pub f_star: Probability,
}

/// Poverty-trap basin of the best-response dynamics.
pub fn trap_basin(params: &ModelParams, resolution: usize) -> Result<TrapBasin> {
    trap_basin_for(params, Policy::INSTANT_BEST_RESPONSE, resolution)
}

/// Supremum of initial conditions that drain into the withdrawal region.
///
/// The withdrawal region is the initial interval `[0, z]` on which the best
/// response is `(0, 0)`. The basin extends from `z` upwards for as long as
/// the drift under `policy` is strictly negative, so a drift-neutral band
/// above `z` does not belong to it. If `policy` has positive drift inside
/// `[0, z]` the basin stops there instead.
pub fn trap_basin_for(params: &ModelParams, policy: Policy, resolution: usize) -> Result<TrapBasin> {
    check_resolution(resolution)?;
    let tol = BOUNDARY_PRECISION;
    let grid = |i: usize| i as f64 / resolution as f64;
    let eps = params.eps();
    let withdraws = |x: f64| best_response(params, prob(x)) == Strategy::WITHDRAW;
    let policy_drift = |x: f64| drift(policy.strategy_at(params, prob(x)), prob(x), eps);

    let z = match (1..=resolution).find(|&i| !withdraws(grid(i))) {
        None => 1.0,
        Some(i) => bisect(grid(i - 1), grid(i), tol, withdraws).0,
    };

    let not_rising = |x: f64| policy_drift(x) <= 0.0;
    let z_index = (z * resolution as f64).floor() as usize;
    if let Some(i) = (1..=z_index).find(|&i| !not_rising(grid(i))) {
        let f_star = bisect(grid(i - 1), grid(i), tol, not_rising).0;
        return Ok(TrapBasin { f_star: prob(f_star) });
    }
    if z >= 1.0 {
        return Ok(TrapBasin { f_star: Probability::ONE });
    }

    let falling = |x: f64| x <= z || policy_drift(x) < 0.0;
    let f_star = match (z_index + 1..=resolution).find(|&i| !falling(grid(i))) {
        None => 1.0,
        Some(i) => {
            let lo = grid(i - 1).max(z);
            bisect(lo, grid(i), tol, |x| x == lo || falling(x)).0
        }
    };
    Ok(TrapBasin { f_star: prob(f_star) })
}

/// One cell of the `(alpha, F)` phase diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramCell {
    pub alpha: f64,
    pub f: Probability,
    pub strategy: Strategy,
    pub drift_sign: DriftSign,
}

/// Best response and pointwise drift sign on an `alpha x F` grid, in
/// row-major `(alpha, F)` order.
pub fn phase_diagram(
    beta: f64,
    eps: f64,
    alpha_grid: &[f64],
    f_grid: &[f64],
) -> Result<Vec<DiagramCell>> {
    if alpha_grid.is_empty() || f_grid.is_empty() {
        return Err(Error::InvalidParameter("grids must be non-empty".into()));
    }
    let fs = f_grid
        .iter()
        .map(|&f| Probability::new(f))
        .collect::<Result<Vec<_>>>()?;
    let params = alpha_grid
        .iter()
        .map(|&a| ModelParams::new(a, beta, eps))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<DiagramCell>> = params
        .par_iter()
        .map(|p| {
            fs.iter()
                .map(|&f| {
                    let s = best_response(p, f);
                    DiagramCell {
                        alpha: p.alpha(),
                        f,
                        strategy: s,
                        drift_sign: DriftSign::of(drift(s, f, eps)),
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}
