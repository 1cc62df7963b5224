//! Monte Carlo verification: deterministic sampling through a tabulated
//! inverse CDF, Kolmogorov-Smirnov comparison, and convolution oracles that
//! validate product/quotient densities without touching the merge rules.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::contour::gl_nodes;
use crate::dist::IhatDensity;
use crate::error::{IhatError, Result};
use crate::quad::{expand_log_bounds, find_anchor, integrate_log_axis};
use crate::rng::SplitMix64;
use crate::table::CdfTable;

/// KS significance level baked into the thresholds.
pub const KS_ALPHA: f64 = 0.01;

/// Default CDF tabulation grid.
pub const DEFAULT_GRID: usize = 2001;

/// A deterministic batch of draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub seed: u64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Pointwise,
    Ks,
    Moments,
}

/// Outcome of one verification check; `passed` is exactly
/// `statistic <= threshold`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub kind: ReportKind,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
    pub seed: u64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub details: Option<String>,
}

impl VerificationReport {
    pub fn new(kind: ReportKind, statistic: f64, threshold: f64, seed: u64, n: usize) -> Self {
        VerificationReport {
            kind,
            statistic,
            threshold,
            passed: statistic <= threshold,
            seed,
            n,
            details: None,
        }
    }
}

fn gl4() -> &'static ([f64; 4], [f64; 4]) {
    static GL4: OnceLock<([f64; 4], [f64; 4])> = OnceLock::new();
    GL4.get_or_init(gl_nodes::<4>)
}

/// Tabulates the CDF of a validated density on a log-spaced grid sized to
/// cover all but ~1e-9 of the mass. The quadrature total must land within
/// 1e-6 of 1; the stored CDF is renormalized by it.
pub fn tabulate_cdf(d: &IhatDensity, grid_size: usize) -> Result<CdfTable> {
    if !d.validated() {
        return Err(IhatError::Validation(format!(
            "refusing to tabulate an unvalidated density{}",
            d.detail().map(|s| format!(": {s}")).unwrap_or_default()
        )));
    }
    if grid_size < 16 {
        return Err(IhatError::Domain(format!(
            "cdf grid needs at least 16 points, got {grid_size}"
        )));
    }
    let (lo, hi) = d.mass_bounds()?;
    let (t_lo, t_hi) = (lo.ln(), hi.ln());
    let step = (t_hi - t_lo) / (grid_size - 1) as f64;
    let mut ys = Vec::with_capacity(grid_size);
    for i in 0..grid_size {
        ys.push((t_lo + step * i as f64).exp());
    }
    let (xs4, ws4) = gl4();
    let mut cdf = Vec::with_capacity(grid_size);
    cdf.push(0.0);
    let mut acc = 0.0;
    for i in 0..grid_size - 1 {
        let c = t_lo + step * (i as f64 + 0.5);
        let h = 0.5 * step;
        let mut inc = 0.0;
        for (x, w) in xs4.iter().zip(ws4.iter()) {
            let y = (c + h * x).exp();
            inc += w * d.pdf_with_tol(y, 1e-8)? * y;
        }
        acc += h * inc;
        cdf.push(acc);
    }
    let raw_mass = acc;
    if !((raw_mass - 1.0).abs() <= 1e-6) {
        return Err(IhatError::Validation(format!(
            "tabulated mass {raw_mass:.9} differs from 1 beyond 1e-6"
        )));
    }
    for v in cdf.iter_mut() {
        *v /= raw_mass;
    }
    CdfTable::from_grid(ys, cdf, raw_mass)
}

/// Draws n values from a tabulated CDF; deterministic in (table, seed).
pub fn sample_table(table: &CdfTable, n: usize, seed: u64) -> SampleBatch {
    let mut rng = SplitMix64::new(seed);
    let values = (0..n).map(|_| table.quantile(rng.next_uniform())).collect();
    SampleBatch { values, seed, n }
}

/// Tabulates the density (default grid) and draws n values.
pub fn sample(d: &IhatDensity, n: usize, seed: u64) -> Result<SampleBatch> {
    let table = tabulate_cdf(d, DEFAULT_GRID)?;
    Ok(sample_table(&table, n, seed))
}

fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

fn ks_threshold(n: usize) -> f64 {
    // c(alpha) = sqrt(-ln(alpha/2) / 2), the classical two-sided bound
    (-(KS_ALPHA / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Two-sided KS test of a batch against a tabulated CDF.
pub fn ks_compare_table(table: &CdfTable, batch: &SampleBatch) -> Result<VerificationReport> {
    if batch.values.is_empty() {
        return Err(IhatError::Domain("cannot run a KS test on an empty batch".into()));
    }
    let mut sorted = batch.values.clone();
    sorted.sort_by(f64::total_cmp);
    let stat = ks_statistic(&sorted, |x| table.cdf(x));
    Ok(VerificationReport::new(
        ReportKind::Ks,
        stat,
        ks_threshold(batch.values.len()),
        batch.seed,
        batch.n,
    ))
}

/// Two-sided KS test of a batch against a density (tabulated on the default
/// grid first).
pub fn ks_compare(d: &IhatDensity, batch: &SampleBatch) -> Result<VerificationReport> {
    let table = tabulate_cdf(d, DEFAULT_GRID)?;
    ks_compare_table(&table, batch)
}

/// Density of a product at y by direct convolution of two factor pdfs:
/// int f1(x) f2(y/x) dx / x. The factor pdfs are tolerance-aware closures
/// f(x, tol); nothing here depends on the parameter merge rules. support1
/// and support2 are the factors' upper support edges when bounded. Clamping
/// the domain to them keeps the integrand smooth: a support edge crossed in
/// the interior is a kink that forces deep refinement right where the factor
/// eval is at its most expensive.
pub fn convolution_oracle_product<F1, F2>(
    pdf1: &mut F1,
    pdf2: &mut F2,
    support1: Option<f64>,
    support2: Option<f64>,
    y: f64,
    abs_tol: f64,
) -> Result<f64>
where
    F1: FnMut(f64, f64) -> Result<f64>,
    F2: FnMut(f64, f64) -> Result<f64>,
{
    if !(y > 0.0) || !y.is_finite() {
        return Err(IhatError::Domain(format!(
            "oracle point must be positive and finite, got {y}"
        )));
    }
    // f2(y/x) vanishes for x < y / s2, f1(x) for x > s1
    let hard_lo = support2.map(|s2| y / s2).unwrap_or(0.0);
    let hard_hi = support1.unwrap_or(f64::INFINITY);
    if hard_lo >= hard_hi {
        return Ok(0.0);
    }
    let coarse = 1e-9;
    let mut mass = |x: f64| -> Result<f64> {
        Ok(pdf1(x, coarse)?.abs() * pdf2(y / x, coarse)?.abs())
    };
    let start = interior_start(y.sqrt(), hard_lo, hard_hi);
    let anchor = find_anchor(&mut mass, start)?;
    let (x_lo, x_hi) = expand_log_bounds(&mut mass, anchor, 1e-9, 1e-8)?;
    let (x_lo, x_hi) = (x_lo.max(hard_lo), x_hi.min(hard_hi));
    let mut integrand = |x: f64, tol: f64| -> Result<f64> {
        // error of f1 f2 / x is bounded by (d1 |f2| + d2 |f1|) / x; the
        // factor pdfs stay O(1) on the retained domain
        let each = tol * x / 6.0;
        Ok(pdf1(x, each)? * pdf2(y / x, each)? / x)
    };
    let (v, _) = integrate_log_axis(&mut integrand, x_lo, x_hi, abs_tol, 4096)?;
    Ok(v)
}

/// Density of a quotient at y by direct convolution:
/// int f1(y x) f2(x) x dx, with the same closure conventions as the
/// product oracle.
pub fn quotient_oracle<F1, F2>(
    pdf1: &mut F1,
    pdf2: &mut F2,
    support1: Option<f64>,
    support2: Option<f64>,
    y: f64,
    abs_tol: f64,
) -> Result<f64>
where
    F1: FnMut(f64, f64) -> Result<f64>,
    F2: FnMut(f64, f64) -> Result<f64>,
{
    if !(y > 0.0) || !y.is_finite() {
        return Err(IhatError::Domain(format!(
            "oracle point must be positive and finite, got {y}"
        )));
    }
    // f1(y x) vanishes for x > s1 / y, f2(x) for x > s2
    let hard_hi = match (support1, support2) {
        (Some(s1), Some(s2)) => (s1 / y).min(s2),
        (Some(s1), None) => s1 / y,
        (None, Some(s2)) => s2,
        (None, None) => f64::INFINITY,
    };
    if hard_hi <= 0.0 {
        return Ok(0.0);
    }
    let coarse = 1e-9;
    let mut mass = |x: f64| -> Result<f64> {
        Ok(pdf1(y * x, coarse)?.abs() * pdf2(x, coarse)?.abs() * x * x)
    };
    let start = interior_start(1.0, 0.0, hard_hi);
    let anchor = find_anchor(&mut mass, start)?;
    let (x_lo, x_hi) = expand_log_bounds(&mut mass, anchor, 1e-9, 1e-8)?;
    let x_hi = x_hi.min(hard_hi);
    let mut integrand = |x: f64, tol: f64| -> Result<f64> {
        let each = tol / (6.0 * x);
        Ok(pdf1(y * x, each)? * pdf2(x, each)? * x)
    };
    let (v, _) = integrate_log_axis(&mut integrand, x_lo, x_hi, abs_tol, 4096)?;
    Ok(v)
}

/// Nudges a probe start into the open interval (lo, hi), geometrically.
fn interior_start(candidate: f64, lo: f64, hi: f64) -> f64 {
    if candidate > lo && candidate < hi {
        return candidate;
    }
    if hi.is_finite() {
        if lo > 0.0 {
            (lo * hi).sqrt()
        } else {
            hi / 3.0
        }
    } else {
        // hi is infinite, so the candidate must have fallen at or below lo
        lo.max(candidate) * 3.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeOp {
    Product,
    Quotient,
}

/// Compares a merged density against the matching convolution oracle on a
/// log grid of points spanning the bulk of the mass. The statistic is the
/// worst relative deviation.
pub fn pointwise_oracle_report(
    op: MergeOp,
    merged: &IhatDensity,
    d1: &IhatDensity,
    d2: &IhatDensity,
    n_points: usize,
    rel_tol: f64,
) -> Result<VerificationReport> {
    if n_points == 0 {
        return Err(IhatError::Domain("pointwise check needs at least one point".into()));
    }
    // milder trimming than normalization: points stay where the density is
    // large enough for a relative comparison to mean something
    let (lo, hi) = merged.mass_bounds_with(1e-5)?;
    let span = (hi / lo).ln();
    let mut worst = 0.0_f64;
    for i in 0..n_points {
        let y = lo * (span * (i as f64 + 0.5) / n_points as f64).exp();
        let v = merged.pdf_with_tol(y, 1e-10)?;
        let oracle_tol = (v.abs() * rel_tol / 4.0).max(1e-12);
        let mut f1 = |x: f64, tol: f64| d1.pdf_with_tol(x, tol);
        let mut f2 = |x: f64, tol: f64| d2.pdf_with_tol(x, tol);
        let (s1, s2) = (d1.support_hi(), d2.support_hi());
        let o = match op {
            MergeOp::Product => {
                convolution_oracle_product(&mut f1, &mut f2, s1, s2, y, oracle_tol)?
            }
            MergeOp::Quotient => quotient_oracle(&mut f1, &mut f2, s1, s2, y, oracle_tol)?,
        };
        worst = worst.max((v - o).abs() / o.abs().max(1e-12));
    }
    Ok(VerificationReport::new(ReportKind::Pointwise, worst, rel_tol, 0, n_points))
}
