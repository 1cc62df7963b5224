//! Adaptive quadrature on a logarithmic axis.
//!
//! Shared by the Mellin-transform oracles, the convolution oracles and
//! density normalization checks. Integrands here are expensive (each point
//! is itself a contour integral), so the integrand signature carries a
//! per-point tolerance: `f(x, tol)` may compute its value to absolute
//! accuracy `tol`. Panels that get bisected pass a doubled tolerance to
//! their children, since each child's weight in the total has halved.

use std::sync::OnceLock;

use crate::contour::gl_nodes;
use crate::error::{IhatError, Result};

struct GlPair {
    x16: [f64; 16],
    w16: [f64; 16],
    x8: [f64; 8],
    w8: [f64; 8],
}

fn gl_pair() -> &'static GlPair {
    static PAIR: OnceLock<GlPair> = OnceLock::new();
    PAIR.get_or_init(|| {
        let (x16, w16) = gl_nodes::<16>();
        let (x8, w8) = gl_nodes::<8>();
        GlPair { x16, w16, x8, w8 }
    })
}

struct LogPanel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    point_tol: f64,
}

impl LogPanel {
    fn floored(&self) -> bool {
        self.err <= 64.0 * f64::EPSILON * self.value.abs()
            || (self.b - self.a) < 1e-12 * (1.0 + self.a.abs().max(self.b.abs()))
    }
}

fn eval_panel<F>(f: &mut F, a: f64, b: f64, point_tol: f64) -> Result<LogPanel>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let gl = gl_pair();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    // the log-axis jacobian scales a point error by x, so the tolerance
    // handed to the integrand shrinks by the same factor
    let mut v16 = 0.0;
    for (t, w) in gl.x16.iter().zip(gl.w16.iter()) {
        let x = (c + h * t).exp();
        v16 += w * f(x, point_tol / x)? * x;
    }
    v16 *= h;
    let mut v8 = 0.0;
    for (t, w) in gl.x8.iter().zip(gl.w8.iter()) {
        let x = (c + h * t).exp();
        v8 += w * f(x, point_tol / x)? * x;
    }
    v8 *= h;
    Ok(LogPanel { a, b, value: v16, err: (v16 - v8).abs(), point_tol })
}

/// Integral of f over [x_lo, x_hi], substituted onto u = ln x. Returns the
/// value and the quadrature error estimate; point tolerances are budgeted
/// so their total stays below abs_tol/2 alongside it.
pub(crate) fn integrate_log_axis<F>(
    f: &mut F,
    x_lo: f64,
    x_hi: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<(f64, f64)>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    if !(x_lo > 0.0 && x_hi > x_lo && x_hi.is_finite()) {
        return Err(IhatError::Domain(format!(
            "quadrature bounds must satisfy 0 < lo < hi < inf, got [{x_lo}, {x_hi}]"
        )));
    }
    let u_lo = x_lo.ln();
    let u_hi = x_hi.ln();
    let span = u_hi - u_lo;
    let k = (span / 2.0).ceil().max(8.0) as usize;
    let tol0 = abs_tol / (4.0 * span);
    let mut panels = Vec::with_capacity(k + 16);
    for i in 0..k {
        let a = u_lo + span * i as f64 / k as f64;
        let b = u_lo + span * (i + 1) as f64 / k as f64;
        panels.push(eval_panel(f, a, b, tol0)?);
    }
    loop {
        let active: f64 = panels.iter().filter(|p| !p.floored()).map(|p| p.err).sum();
        if active <= 0.5 * abs_tol {
            break;
        }
        if panels.len() + 1 > max_panels {
            return Err(IhatError::Convergence(format!(
                "log-axis quadrature needs more than {max_panels} panels \
                 (error estimate {active:.3e} vs tolerance {abs_tol:.3e})"
            )));
        }
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.floored())
            .max_by(|a, b| a.1.err.total_cmp(&b.1.err))
            .map(|(i, _)| i)
            .expect("nonzero active error implies an active panel");
        let LogPanel { a, b, point_tol, .. } = panels.swap_remove(worst);
        let mid = 0.5 * (a + b);
        panels.push(eval_panel(f, a, mid, 2.0 * point_tol)?);
        panels.push(eval_panel(f, mid, b, 2.0 * point_tol)?);
    }
    let mut sum = 0.0;
    let mut comp = 0.0;
    for p in &panels {
        let t = sum + p.value;
        if sum.abs() >= p.value.abs() {
            comp += (sum - t) + p.value;
        } else {
            comp += (p.value - t) + sum;
        }
        sum = t;
    }
    let err = panels.iter().map(|p| p.err).sum::<f64>();
    Ok((sum + comp, err))
}

const ANCHOR_FLOOR: f64 = 1e-8;

/// Walks start * 2^(+-k) until g is appreciable; falls back to the largest
/// value seen. g is the log-axis mass density x |f(x)|.
pub(crate) fn find_anchor<F>(g: &mut F, start: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let v0 = g(start)?;
    if v0 > ANCHOR_FLOOR {
        return Ok(start);
    }
    let mut best = (start, v0);
    for k in 1..=40 {
        let scale = (k as f64).exp2();
        for x in [start * scale, start / scale] {
            let v = g(x)?;
            if v > ANCHOR_FLOOR {
                return Ok(x);
            }
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    Ok(best.0)
}

/// Expands [anchor, anchor] outward on the log axis until the estimated
/// remaining tail mass drops below tail_mass relative to the peak. The
/// local decay rate lambda = d ln g / d ln x is measured from the last two
/// points. Readings at or below floor (relative to the anchor reading, so
/// integrands of any magnitude truncate proportionally) count as the end
/// of the tail: below the probe's own accuracy they carry no direction (a
/// hard zero from bounded support is the floor = 0 case). The breaking
/// point itself stays inside the bounds, since every tail estimate holds
/// beyond it.
pub(crate) fn expand_log_bounds<F>(
    g: &mut F,
    anchor: f64,
    tail_mass: f64,
    floor: f64,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let g_anchor = g(anchor)?;
    let scale = g_anchor.max(1e-300);
    let mut y_lo = anchor;
    let mut g_prev = g_anchor;
    for _ in 0..5000 {
        let y = y_lo * 0.7;
        let g0 = g(y)?;
        let lam = ((g_prev + 1e-300).ln() - (g0 + 1e-300).ln()) / (y_lo / y).ln();
        y_lo = y;
        if g0 <= floor * scale || g0 / lam.max(0.2) < tail_mass * scale {
            break;
        }
        g_prev = g0;
    }
    let mut y_hi = anchor;
    g_prev = g_anchor;
    for _ in 0..5000 {
        let y = y_hi * 1.35;
        let g0 = g(y)?;
        let lam = ((g0 + 1e-300).ln() - (g_prev + 1e-300).ln()) / (y / y_hi).ln();
        y_hi = y;
        if g0 <= floor * scale || g0 / (-lam).max(0.2) < tail_mass * scale {
            break;
        }
        g_prev = g0;
    }
    Ok((y_lo, y_hi))
}
