//! Tabulated CDF with monotone cubic interpolation in both directions.
//!
//! Fritsch-Carlson slope limiting keeps the interpolant monotone, so the
//! forward table is a genuine CDF and the inverse table a genuine quantile
//! function; the inverse runs on the strictly increasing subsequence of CDF
//! values (flat stretches, e.g. outside a bounded support, collapse).

use crate::error::{IhatError, Result};

pub(crate) fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        d.push((y[i + 1] - y[i]) / (x[i + 1] - x[i]));
    }
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    m
}

pub(crate) fn pchip_eval(x: &[f64], y: &[f64], m: &[f64], q: f64) -> f64 {
    let i = x.partition_point(|v| *v <= q).clamp(1, x.len() - 1) - 1;
    let h = x[i + 1] - x[i];
    let t = ((q - x[i]) / h).clamp(0.0, 1.0);
    let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
    let h10 = t * (1.0 - t) * (1.0 - t);
    let h01 = t * t * (3.0 - 2.0 * t);
    let h11 = t * t * (t - 1.0);
    h00 * y[i] + h10 * h * m[i] + h01 * y[i + 1] + h11 * h * m[i + 1]
}

/// CDF table over a log-spaced grid, invertible for sampling.
#[derive(Debug, Clone)]
pub struct CdfTable {
    ys: Vec<f64>,
    cdf: Vec<f64>,
    fwd_slopes: Vec<f64>,
    inv_u: Vec<f64>,
    inv_y: Vec<f64>,
    inv_slopes: Vec<f64>,
    raw_mass: f64,
}

impl CdfTable {
    /// Builds the table from a grid and its (already renormalized) CDF
    /// values; raw_mass records the quadrature total before renormalizing.
    pub(crate) fn from_grid(ys: Vec<f64>, cdf: Vec<f64>, raw_mass: f64) -> Result<CdfTable> {
        if ys.len() != cdf.len() || ys.len() < 16 {
            return Err(IhatError::Validation(format!(
                "cdf table needs matching grids of at least 16 points, got {} and {}",
                ys.len(),
                cdf.len()
            )));
        }
        for w in ys.windows(2) {
            if !(w[1] > w[0]) {
                return Err(IhatError::Validation(
                    "cdf table grid must be strictly increasing".into(),
                ));
            }
        }
        for w in cdf.windows(2) {
            if w[1] < w[0] - 1e-12 {
                return Err(IhatError::Validation(
                    "cdf values must be nondecreasing".into(),
                ));
            }
        }
        let fwd_slopes = pchip_slopes(&ys, &cdf);
        let mut inv_u = Vec::with_capacity(cdf.len());
        let mut inv_y = Vec::with_capacity(cdf.len());
        for (u, y) in cdf.iter().zip(ys.iter()) {
            if inv_u.last().map_or(true, |last| *u > last + 1e-15) {
                inv_u.push(*u);
                inv_y.push(*y);
            }
        }
        if inv_u.len() < 2 {
            return Err(IhatError::Validation(
                "cdf table is flat: no strictly increasing stretch to invert".into(),
            ));
        }
        let inv_slopes = pchip_slopes(&inv_u, &inv_y);
        Ok(CdfTable { ys, cdf, fwd_slopes, inv_u, inv_y, inv_slopes, raw_mass })
    }

    /// Grid endpoints.
    pub fn support(&self) -> (f64, f64) {
        (self.ys[0], *self.ys.last().expect("table is nonempty"))
    }

    /// Quadrature total before renormalization.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    /// Interpolated CDF, clamped to [0, 1]; 0 below the grid, 1 above it.
    pub fn cdf(&self, y: f64) -> f64 {
        if y <= self.ys[0] {
            return 0.0;
        }
        if y >= *self.ys.last().expect("table is nonempty") {
            return 1.0;
        }
        pchip_eval(&self.ys, &self.cdf, &self.fwd_slopes, y).clamp(0.0, 1.0)
    }

    /// Interpolated quantile; u is clamped to the tabulated CDF range.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(self.inv_u[0], *self.inv_u.last().expect("table is nonempty"));
        pchip_eval(&self.inv_u, &self.inv_y, &self.inv_slopes, u)
    }
}
