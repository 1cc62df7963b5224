//! Vertical-line inverse-Mellin evaluation.
//!
//! The integral (1/2 pi i) int chi(s) z^{-s} ds is taken along
//! s = shift + i t. The integrand is conjugate-symmetric in t, so only
//! [0, T] is quadratured and the real part doubled. Panels use a
//! Gauss-Legendre 16/8 pair; the interval is first extended rightward until
//! a certified tail bound drops below tolerance, then the worst panels are
//! bisected until the summed error estimates do.

use std::cell::Cell;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{IhatError, Result};
use crate::spec::IhatSpec;

/// Quadrature configuration for one evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Contour {
    /// Real part of the integration line. `None` picks one automatically:
    /// the envelope-minimizing point of the strip when the kernel decays
    /// exponentially, the plain strip default otherwise.
    pub shift: Option<f64>,
    /// Absolute tolerance on the returned value.
    pub abs_tol: f64,
    /// Budget of kernel evaluations (one node = one kernel evaluation).
    pub max_nodes: usize,
    /// Width of the first panel at t = 0.
    pub initial_halfwidth: f64,
}

impl Default for Contour {
    fn default() -> Self {
        Contour {
            shift: None,
            abs_tol: 1e-10,
            max_nodes: 1 << 16,
            initial_halfwidth: 1.0,
        }
    }
}

impl Contour {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Contour { abs_tol, ..Contour::default() }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return Err(IhatError::Domain(format!(
                "contour abs_tol must be positive and finite, got {}",
                self.abs_tol
            )));
        }
        if self.max_nodes < 64 {
            return Err(IhatError::Domain(format!(
                "contour max_nodes must be at least 64, got {}",
                self.max_nodes
            )));
        }
        if !(self.initial_halfwidth > 0.0) || !self.initial_halfwidth.is_finite() {
            return Err(IhatError::Domain(format!(
                "contour initial_halfwidth must be positive and finite, got {}",
                self.initial_halfwidth
            )));
        }
        if let Some(s) = self.shift {
            if !s.is_finite() {
                return Err(IhatError::Domain(format!(
                    "contour shift must be finite, got {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Evaluation outcome with its accounting.
#[derive(Debug, Clone, Copy)]
pub struct EvalReport {
    pub value: f64,
    /// Sum of panel error estimates plus the certified tail bound.
    pub est_error: f64,
    /// Kernel evaluations spent.
    pub nodes: usize,
    /// Final truncation height T of the contour.
    pub half_range: f64,
}

struct GlPair {
    x16: [f64; 16],
    w16: [f64; 16],
    x8: [f64; 8],
    w8: [f64; 8],
}

/// Gauss-Legendre nodes by Newton iteration on the Legendre recurrence.
pub(crate) fn gl_nodes<const N: usize>() -> ([f64; N], [f64; N]) {
    let mut xs = [0.0; N];
    let mut ws = [0.0; N];
    let n = N as f64;
    for i in 0..N {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=N {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

fn gl_pair() -> &'static GlPair {
    static PAIR: OnceLock<GlPair> = OnceLock::new();
    PAIR.get_or_init(|| {
        let (x16, w16) = gl_nodes::<16>();
        let (x8, w8) = gl_nodes::<8>();
        GlPair { x16, w16, x8, w8 }
    })
}

/// Compensated (Neumaier) sum; the panel values alternate in sign, a plain
/// sum would lose digits against 1e-12 tolerances.
pub(crate) fn neumaier_sum<I: Iterator<Item = f64>>(iter: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in iter {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub(crate) struct Panel {
    pub(crate) err: f64,
    pub(crate) a: f64,
    pub(crate) b: f64,
    pub(crate) value: f64,
}

impl Panel {
    /// A panel whose error estimate sits at the floating-point cancellation
    /// floor (or whose width has collapsed) cannot be improved by bisection;
    /// its estimate still counts toward est_error.
    pub(crate) fn floored(&self) -> bool {
        self.err <= 64.0 * f64::EPSILON * self.value.abs()
            || (self.b - self.a) < 1e-12 * (1.0 + self.b)
    }
}

/// 16/8 embedded Gauss-Legendre rule on [a, b].
pub(crate) fn panel_quad<F>(f: &mut F, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    let gl = gl_pair();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut v16 = 0.0;
    for (x, w) in gl.x16.iter().zip(gl.w16.iter()) {
        v16 += w * f(c + h * x)?;
    }
    v16 *= h;
    let mut v8 = 0.0;
    for (x, w) in gl.x8.iter().zip(gl.w8.iter()) {
        v8 += w * f(c + h * x)?;
    }
    v8 *= h;
    Ok(Panel { err: (v16 - v8).abs(), a, b, value: v16 })
}

/// Bisects the worst non-floored panel until their summed error estimates
/// drop to `target`. `budget` is consulted before each bisection.
pub(crate) fn refine_to<F, B>(
    f: &mut F,
    panels: &mut Vec<Panel>,
    target: f64,
    budget: B,
) -> Result<()>
where
    F: FnMut(f64) -> Result<f64>,
    B: Fn() -> Result<()>,
{
    loop {
        let active: f64 = panels.iter().filter(|p| !p.floored()).map(|p| p.err).sum();
        if active <= target {
            return Ok(());
        }
        budget()?;
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.floored())
            .max_by(|a, b| a.1.err.total_cmp(&b.1.err))
            .map(|(i, _)| i)
            .expect("nonzero active error implies an active panel");
        let Panel { a, b, .. } = panels.swap_remove(worst);
        let mid = 0.5 * (a + b);
        let left = panel_quad(f, a, mid)?;
        let right = panel_quad(f, mid, b)?;
        panels.push(left);
        panels.push(right);
    }
}

/// Golden-section minimizer of log|integrand(t=0)| over the admissible strip.
/// Any admissible shift gives the same integral; keeping the t = 0 magnitude
/// small keeps the doubled-real-part sum away from catastrophic cancellation
/// when z sits far from the kernel's natural scale.
fn optimized_shift(spec: &IhatSpec, ln_z: f64) -> f64 {
    let (lo, hi) = spec.strip();
    let (mut a, mut b) = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => {
            let w = hi - lo;
            (lo + 1e-3 * w, hi - 1e-3 * w)
        }
        (true, false) => (lo + 1e-3, lo + 60.0),
        (false, true) => (hi - 60.0, hi - 1e-3),
        (false, false) => (-30.0, 30.0),
    };
    let obj = |sig: f64| -> f64 {
        match spec.theta_log(Complex64::new(sig, 0.0)) {
            Ok(t) => t.re - sig * ln_z,
            Err(_) => f64::INFINITY,
        }
    };
    let gr = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let mut fc = obj(c);
    let mut fd = obj(d);
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = obj(d);
        }
    }
    0.5 * (a + b)
}

/// Slow-decay admission threshold: with no exponential decay the kernel must
/// fall at least like t^{-1.2} for the tail bound to close.
const RHO_GATE: f64 = -1.2;
const DELTA1_EPS: f64 = 1e-12;

/// Evaluates the function at z > 0 and reports the error accounting.
pub fn ihat_eval_report(spec: &IhatSpec, z: f64, contour: &Contour) -> Result<EvalReport> {
    contour.validate()?;
    if !(z > 0.0) || !z.is_finite() {
        return Err(IhatError::Domain(format!(
            "argument must be positive and finite, got {z}"
        )));
    }
    let d1 = spec.delta1();
    if d1 < -DELTA1_EPS {
        return Err(IhatError::Convergence(format!(
            "contour integral diverges: delta1 = {d1} is negative"
        )));
    }
    let ln_z = z.ln();
    let (lo, hi) = spec.strip();
    let shift = match contour.shift {
        Some(s) => {
            if !(lo < s && s < hi) {
                return Err(IhatError::Strip(format!(
                    "shift {s} outside the admissible strip ({lo}, {hi})"
                )));
            }
            s
        }
        None => {
            // minimizing the t = 0 envelope also kills the z^{-shift} tail
            // inflation; without exponential decay the optimum must still
            // satisfy the algebraic-decay gate, else fall back
            let cand = optimized_shift(spec, ln_z);
            if d1 > DELTA1_EPS || spec.rho(cand) <= RHO_GATE {
                cand
            } else {
                spec.default_shift()
            }
        }
    };
    // delta1 = 0 with no upper heads means bounded support: for z at or
    // beyond delta_star the contour closes to the right over a pole-free
    // half plane, so the value is exactly zero.
    if d1.abs() <= DELTA1_EPS && spec.n() == 0 && ln_z >= spec.log_delta_star() {
        return Ok(EvalReport { value: 0.0, est_error: 0.0, nodes: 0, half_range: 0.0 });
    }
    let rho = spec.rho(shift);
    if d1.abs() <= DELTA1_EPS && rho > RHO_GATE {
        return Err(IhatError::Convergence(format!(
            "kernel modulus decays only like t^({rho:.3}) at shift {shift:.6}; \
             need an exponent of {RHO_GATE} or less when delta1 = 0"
        )));
    }
    let omega = (spec.log_delta_star() - ln_z).abs();
    let h0 = contour.initial_halfwidth;

    let nodes = Cell::new(0usize);
    // Re of the full integrand at height t.
    let mut integrand = |t: f64| -> Result<f64> {
        nodes.set(nodes.get() + 1);
        let s = Complex64::new(shift, t);
        let w = spec.theta_log(s)? - s * ln_z;
        Ok(w.exp().re)
    };
    // Modulus envelope exp(Re theta_log - shift ln z): monotone-decaying
    // where the oscillating integrand itself passes through zero, which is
    // what the tail bounds need.
    let envelope = |t: f64| -> Result<f64> {
        nodes.set(nodes.get() + 1);
        let s = Complex64::new(shift, t);
        Ok((spec.theta_log(s)? - s * ln_z).re.exp())
    };

    let phase = PhaseBounds::new(spec, shift);
    let mut panels: Vec<Panel> = Vec::new();
    let mut half_range = 0.0_f64;
    let mut width = h0;
    let mut prev_env = f64::INFINITY;
    let mut tail_correction = 0.0_f64;
    let tail = loop {
        let p = panel_quad(&mut integrand, half_range, half_range + width)?;
        half_range = p.b;
        panels.push(p);

        let env = envelope(half_range)? + 1e-300;
        // Tail candidates are only trusted once the envelope has stopped
        // rising; before its peak every closed-form bound undershoots.
        let settled = env <= prev_env * 1.05;
        let mut tail = f64::INFINITY;
        if settled {
            if d1 > DELTA1_EPS {
                // exponential decay at rate pi/2 * delta1, with safety 1.5
                tail = tail.min(env * 2.0 / (std::f64::consts::PI * d1) * 1.5);
            } else {
                // pure algebraic decay t^rho, rho <= -1.2 guaranteed above
                tail = tail.min(env * half_range / (rho.abs() - 1.0));
            }
            // oscillation bound, valid once the phase is dominated by
            // -t ln(z/delta_star) rather than the kernel's own drift
            if omega > 0.0 && omega * half_range >= 3.0 * (rho.abs() + 1.0) {
                tail = tail.min(env * 3.0 / omega);
            }
        }
        prev_env = prev_env.min(env);
        if tail < 0.5 * contour.abs_tol {
            break tail;
        }
        // Slowly decaying kernels: complete the oscillating tail by parts
        // instead of pushing T out. The endpoint antiderivative is exact in
        // theta's digamma derivatives; what remains is one more order down
        // in 1/T and is certified by the same lobe bound.
        if settled && d1.abs() <= DELTA1_EPS {
            nodes.set(nodes.get() + 3);
            if let Some((corr, resid)) =
                by_parts_tail(spec, shift, half_range, ln_z, env, &phase)?
            {
                if resid < 0.5 * contour.abs_tol {
                    tail_correction = corr;
                    break resid;
                }
            }
        }
        if nodes.get() > contour.max_nodes {
            return Err(IhatError::Convergence(format!(
                "node budget {} exhausted at T = {half_range:.3e} with tail bound {tail:.3e}",
                contour.max_nodes
            )));
        }
        // width growth capped by the local oscillation scale
        let om_loc = 0.5 * d1.max(0.0) * (2.0 + half_range).ln() + omega + 0.3;
        width = (2.0 * width).min(h0.max(0.4 * half_range)).min(10.0 / om_loc);
    };

    refine_to(&mut integrand, &mut panels, 0.25 * contour.abs_tol, || {
        if nodes.get() > contour.max_nodes {
            Err(IhatError::Convergence(format!(
                "node budget {} exhausted while refining on [0, {half_range:.3e}]",
                contour.max_nodes
            )))
        } else {
            Ok(())
        }
    })?;

    let total = neumaier_sum(panels.iter().map(|p| p.value)) + tail_correction;
    let est_error = panels.iter().map(|p| p.err).sum::<f64>() + tail;
    Ok(EvalReport {
        value: total / std::f64::consts::PI,
        est_error,
        nodes: nodes.get(),
        half_range,
    })
}

/// Evaluates the function at z > 0.
pub fn ihat_eval(spec: &IhatSpec, z: f64, contour: &Contour) -> Result<f64> {
    ihat_eval_report(spec, z, contour).map(|r| r.value)
}

const SOFT_TOL_CAP: f64 = 1e-4;

/// Evaluation with a tolerance ladder for quadrature clients: a node-budget
/// failure retries 100x looser, up to 1e-4. Slowly decaying kernels become
/// infeasibly expensive right at a support edge where the value itself is
/// negligible; integrals over such points can afford the local relaxation
/// because the affected region carries no mass. Returns (value, achieved
/// error).
pub(crate) fn ihat_eval_soft(spec: &IhatSpec, z: f64, contour: &Contour) -> Result<(f64, f64)> {
    let mut c = *contour;
    loop {
        match ihat_eval_report(spec, z, &c) {
            Ok(r) => return Ok((r.value, r.est_error)),
            Err(IhatError::Convergence(msg)) => {
                if c.abs_tol >= SOFT_TOL_CAP {
                    return Err(IhatError::Convergence(msg));
                }
                c.abs_tol = (c.abs_tol * 100.0).min(SOFT_TOL_CAP);
            }
            Err(e) => return Err(e),
        }
    }
}
