//! Quadratic least-squares fits with classical inference, and ingestion of
//! country-level inventory/complexity data.

use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::SweepPoint;
use crate::numerics::{two_sided_p_value, Probability};

/// Relative size of a diagonal entry of `R` below which the quadratic design
/// is treated as singular.
const RANK_TOLERANCE: f64 = 1e-10;

/// Result of fitting `y = c0 + c1 x + c2 x^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub coefficients: [f64; 3],
    pub std_errors: [f64; 3],
    pub t_stats: [f64; 3],
    pub p_values: [Probability; 3],
    pub r_squared: f64,
    pub n_obs: usize,
}

impl FitResult {
    pub fn quadratic(&self) -> f64 {
        self.coefficients[2]
    }

    /// Fitted value at `x`.
    pub fn predict(&self, x: f64) -> f64 {
        let [c0, c1, c2] = self.coefficients;
        c0 + c1 * x + c2 * x * x
    }
}

/// Ordinary least squares on the design `[1, x, x^2]`.
///
/// The regressor is centred and scaled before a Householder QR
/// decomposition; coefficients and their covariance are mapped back to the
/// raw basis afterwards. Standard errors are the homoskedastic ones and
/// p-values are two-sided with `n - 3` degrees of freedom.
pub fn ols_quadratic(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let n = xs.len();
    if n < 4 {
        return Err(Error::InsufficientData(format!(
            "quadratic fit needs at least 4 observations, got {n}"
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite observation".into()));
    }

    let nf = n as f64;
    let x_mean = xs.iter().sum::<f64>() / nf;
    let x_scale = (xs.iter().map(|x| (x - x_mean).powi(2)).sum::<f64>() / nf).sqrt();
    if x_scale == 0.0 || !x_scale.is_finite() {
        return Err(Error::RankDeficient);
    }

    let design = DMatrix::from_fn(n, 3, |i, j| ((xs[i] - x_mean) / x_scale).powi(j as i32));
    let y = DVector::from_column_slice(ys);
    let qr = design.clone().qr();
    let r = qr.r();
    let r_max = (0..3).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..3).any(|i| r[(i, i)].abs() <= RANK_TOLERANCE * r_max) {
        return Err(Error::RankDeficient);
    }
    let qty = qr.q().transpose() * &y;
    let theta = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient)?;

    let residuals = &y - &design * &theta;
    let ssr = residuals.norm_squared();
    let y_mean = ys.iter().sum::<f64>() / nf;
    let sst = ys.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>();
    let r_squared = if sst > 0.0 {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    } else {
        0.0
    };

    let dof = n - 3;
    let sigma2 = ssr / dof as f64;
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or(Error::RankDeficient)?;
    let cov_scaled = &r_inv * r_inv.transpose() * sigma2;

    // Raw-basis coefficients are `to_raw * theta`.
    let (m, s) = (x_mean, x_scale);
    let to_raw = Matrix3::new(
        1.0, -m / s, m * m / (s * s),
        0.0, 1.0 / s, -2.0 * m / (s * s),
        0.0, 0.0, 1.0 / (s * s),
    );
    let theta3 = nalgebra::Vector3::new(theta[0], theta[1], theta[2]);
    let gamma = to_raw * theta3;
    let cov_scaled3 = Matrix3::from_fn(|i, j| cov_scaled[(i, j)]);
    let cov = to_raw * cov_scaled3 * to_raw.transpose();

    let mut std_errors = [0.0; 3];
    let mut t_stats = [0.0; 3];
    let mut p_values = [Probability::ONE; 3];
    for i in 0..3 {
        let se = cov[(i, i)].max(0.0).sqrt();
        std_errors[i] = se;
        let t = if se > 0.0 {
            gamma[i] / se
        } else if gamma[i] == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(gamma[i])
        };
        t_stats[i] = t;
        p_values[i] = if t.is_infinite() {
            Probability::ZERO
        } else {
            two_sided_p_value(t, dof as u32)?
        };
    }

    Ok(FitResult {
        coefficients: [gamma[0], gamma[1], gamma[2]],
        std_errors,
        t_stats,
        p_values,
        r_squared,
        n_obs: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryRecord {
    pub country_id: String,
    /// Days of main-input inventory.
    pub inventory_days: f64,
    /// Economic Complexity Index.
    pub eci: f64,
}

/// Column names used by [`load_country_csv`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryColumns {
    pub id: String,
    pub inventory: String,
    pub eci: String,
}

impl Default for CountryColumns {
    fn default() -> Self {
        CountryColumns {
            id: "country".into(),
            inventory: "inventory_days".into(),
            eci: "eci".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountryData {
    pub records: Vec<CountryRecord>,
    pub skipped: usize,
}

fn parse_cell(cell: Option<&str>) -> Option<f64> {
    cell.map(str::trim)
        .filter(|c| !c.is_empty())
        .and_then(|c| c.parse::<f64>().ok())
        .filter(|v| v.is_finite())
}

/// Reads a header-first CSV file. Rows whose inventory or ECI cell is
/// missing, non-numeric or (for inventory) negative are skipped and counted.
pub fn load_country_csv(path: &Path, columns: &CountryColumns) -> Result<CountryData> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| Error::MalformedHeader(format!("no column named {name:?}")))
    };
    let id_col = find(&columns.id)?;
    let inv_col = find(&columns.inventory)?;
    let eci_col = find(&columns.eci)?;

    let mut records = Vec::new();
    let mut skipped = 0;
    for row in reader.records() {
        let row = row?;
        let inventory = parse_cell(row.get(inv_col)).filter(|v| *v >= 0.0);
        let eci = parse_cell(row.get(eci_col));
        match (inventory, eci) {
            (Some(inventory_days), Some(eci)) => records.push(CountryRecord {
                country_id: row.get(id_col).unwrap_or_default().to_string(),
                inventory_days,
                eci,
            }),
            _ => skipped += 1,
        }
    }
    if records.is_empty() {
        return Err(Error::AllRowsSkipped(path.to_path_buf()));
    }
    Ok(CountryData { records, skipped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedUReport {
    pub fit: FitResult,
    pub is_inverted_u: bool,
}

/// Fits `y` on `x` quadratically; an inverted U is a negative quadratic
/// coefficient.
pub fn inverted_u_report(xs: &[f64], ys: &[f64]) -> Result<InvertedUReport> {
    let fit = ols_quadratic(xs, ys)?;
    let is_inverted_u = fit.quadratic() < 0.0;
    Ok(InvertedUReport { fit, is_inverted_u })
}

/// Inventory days against ECI.
pub fn country_report(records: &[CountryRecord]) -> Result<InvertedUReport> {
    let xs: Vec<f64> = records.iter().map(|r| r.eci).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.inventory_days).collect();
    inverted_u_report(&xs, &ys)
}

/// Buffer `m* - tau*` against complexity `tau*`.
pub fn sweep_report(points: &[SweepPoint]) -> Result<InvertedUReport> {
    let xs: Vec<f64> = points.iter().map(|p| f64::from(p.tau_star)).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.buffer as f64).collect();
    inverted_u_report(&xs, &ys)
}
