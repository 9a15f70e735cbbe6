use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trap_basin;
use crate::error::{Error, Result};
use crate::numerics::Probability;
use crate::strategy::{best_response, ModelParams};

/// Grid used to locate the trap boundary for each `beta`.
const BASIN_RESOLUTION: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub beta: f64,
    pub f: Probability,
    pub tau_star: u32,
    pub buffer: i64,
}

/// Complexity `tau*` and buffer `m* - tau*` of the best response, for every
/// `(beta, F)` with `F` above the poverty-trap basin.
pub fn redundancy_sweep(
    alpha: f64,
    eps: f64,
    betas: &[f64],
    f_grid: &[f64],
) -> Result<Vec<SweepPoint>> {
    if betas.is_empty() || f_grid.is_empty() {
        return Err(Error::InvalidParameter("grids must be non-empty".into()));
    }
    let fs = f_grid
        .iter()
        .map(|&f| Probability::new(f))
        .collect::<Result<Vec<_>>>()?;
    let per_beta = betas
        .par_iter()
        .map(|&beta| {
            let params = ModelParams::new(alpha, beta, eps)?;
            let f_star = trap_basin(&params, BASIN_RESOLUTION)?.f_star;
            Ok(fs
                .iter()
                .filter(|f| **f > f_star)
                .map(|&f| {
                    let s = best_response(&params, f);
                    SweepPoint {
                        beta,
                        f,
                        tau_star: s.tau,
                        buffer: s.buffer(),
                    }
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_beta.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_examples() {
        let pts = redundancy_sweep(0.1, 0.001, &[0.4], &[0.05, 0.45, 1.0]).unwrap();
        assert_eq!(pts.len(), 2, "trapped point excluded");
        assert_eq!((pts[0].tau_star, pts[0].buffer), (1, 2));
        assert_eq!((pts[1].tau_star, pts[1].buffer), (10, 0));
    }

    #[test]
    fn invalid_inputs() {
        assert!(redundancy_sweep(0.1, 0.001, &[], &[0.5]).is_err());
        assert!(redundancy_sweep(0.1, 0.001, &[1.2], &[0.5]).is_err());
        assert!(redundancy_sweep(0.1, 0.001, &[0.4], &[1.5]).is_err());
    }
}
