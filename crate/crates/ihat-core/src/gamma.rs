//! Complex log-gamma on the principal branch.
//!
//! Strategy: upward recurrence pushes the argument out to |w| >= 10, where a
//! ten-term Stirling series is accurate to ~1e-15 relative; arguments left of
//! Re(w) = 1/2 go through the reflection formula with a branch-stable
//! log-sin so the result stays on the principal branch for any height.

use num_complex::Complex64;

use crate::error::{IhatError, Result};

/// Half-width of the exclusion zone around poles and the negative real axis.
pub const CUT_EPSILON: f64 = 1e-12;

/// Recurrence is applied until the argument modulus reaches this radius.
const STIRLING_RADIUS: f64 = 10.0;

/// Stirling series coefficients B_{2k} / (2k (2k-1)) for k = 1..=10.
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43_867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_74;
const LN_2: f64 = std::f64::consts::LN_2;
const PI: f64 = std::f64::consts::PI;

fn stirling(w: Complex64) -> Complex64 {
    let lw = w.ln();
    let mut res = (w - 0.5) * lw - w + LN_SQRT_2PI;
    let w2 = w * w;
    let mut wp = w;
    for a in STIRLING {
        res += a / wp;
        wp *= w2;
    }
    res
}

/// Right half-plane recurrence + Stirling. Caller guarantees the argument
/// never walks through a pole (Re >= 0.5, or real positive).
fn log_gamma_right(mut w: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    while w.norm_sqr() < STIRLING_RADIUS * STIRLING_RADIUS {
        acc += w.ln();
        w += 1.0;
    }
    stirling(w) - acc
}

/// log(sin(pi w)) without the catastrophic overflow of forming sin directly:
/// for Im(w) > 0, sin(pi w) = e^{-i pi w} (1 - e^{2 i pi w}) * i/2, and the
/// factored logs keep every term bounded. Conjugate-symmetric for Im < 0.
fn log_sin_pi(w: Complex64) -> Complex64 {
    let y = w.im;
    if y == 0.0 {
        return Complex64::new((PI * w.re).sin(), 0.0).ln();
    }
    let i_pi = Complex64::new(0.0, PI);
    if y > 0.0 {
        -i_pi * w + (1.0 - (2.0 * i_pi * w).exp()).ln() + Complex64::new(-LN_2, 0.5 * PI)
    } else {
        i_pi * w + (1.0 - (-2.0 * i_pi * w).exp()).ln() + Complex64::new(-LN_2, -0.5 * PI)
    }
}

/// Principal-branch log-gamma.
///
/// Errors: `Pole` within `CUT_EPSILON` of a nonpositive integer, `BranchCut`
/// on the rest of the closed negative real axis. Both are fenced off rather
/// than guessed at: downstream contour code relies on arguments staying
/// strictly off the cut, and an arbitrary branch choice here would corrupt
/// powered factors silently.
pub fn log_gamma(w: Complex64) -> Result<Complex64> {
    if !w.re.is_finite() || !w.im.is_finite() {
        return Err(IhatError::Domain(format!("log-gamma of non-finite {w}")));
    }
    if w.im.abs() < CUT_EPSILON {
        let nearest = w.re.round();
        if nearest <= 0.0 && (w.re - nearest).abs() < CUT_EPSILON {
            return Err(IhatError::Pole(w));
        }
        if w.re < 0.0 {
            return Err(IhatError::BranchCut(w));
        }
    }
    if w.re >= 0.5 || (w.im == 0.0 && w.re > 0.0) {
        Ok(log_gamma_right(w))
    } else {
        // reflection: log Gamma(w) = log pi - log sin(pi w) - log Gamma(1 - w)
        Ok(Complex64::new(PI.ln(), 0.0) - log_sin_pi(w) - log_gamma_right(1.0 - w))
    }
}

/// expo * log_gamma(w): the logarithm of a gamma factor raised to a real
/// power. Working in logs is the whole point, Gamma^expo itself overflows
/// long before the contour tails are reached.
pub fn powered_gamma_log(w: Complex64, expo: f64) -> Result<Complex64> {
    if !(expo > 0.0) || !expo.is_finite() {
        return Err(IhatError::Domain(format!(
            "powered gamma exponent must be positive and finite, got {expo}"
        )));
    }
    Ok(log_gamma(w)? * expo)
}

/// Digamma series coefficients -B_{2k} / (2k) for k = 1..=5; the series for
/// psi(w) is ln w - 1/(2w) + sum_k coeff_k w^{-2k}.
const PSI_TAIL: [f64; 5] = [
    -1.0 / 12.0,
    1.0 / 120.0,
    -1.0 / 252.0,
    1.0 / 240.0,
    -1.0 / 132.0,
];

/// Trigamma series: psi'(w) = 1/w + 1/(2w^2) + sum_k B_{2k} w^{-2k-1}.
const PSI1_TAIL: [f64; 5] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
];

fn pole_fenced(w: Complex64) -> Result<()> {
    if !w.re.is_finite() || !w.im.is_finite() {
        return Err(IhatError::Domain(format!("gamma derivative of non-finite {w}")));
    }
    if w.im.abs() < CUT_EPSILON && w.re <= 0.5 {
        let nearest = w.re.round();
        if nearest <= 0.0 && (w.re - nearest).abs() < CUT_EPSILON {
            return Err(IhatError::Pole(w));
        }
    }
    Ok(())
}

/// cot(pi w) through e^{2 pi i w}, bounded for any height. Caller keeps w
/// off the poles.
fn cot_pi(w: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    if w.im >= 0.0 {
        let e = (2.0 * PI * i * w).exp();
        i * (e + 1.0) / (e - 1.0)
    } else {
        cot_pi(w.conj()).conj()
    }
}

/// pi^2 / sin^2(pi w) in the same factored style.
fn pi2_over_sin2(w: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    if w.im >= 0.0 {
        let e = (2.0 * PI * i * w).exp();
        let d = e - 1.0;
        -4.0 * PI * PI * e / (d * d)
    } else {
        pi2_over_sin2(w.conj()).conj()
    }
}

/// Digamma psi(w) = d/dw log Gamma(w). Same recurrence radius and reflection
/// structure as log_gamma; poles are fenced identically.
pub fn digamma(w: Complex64) -> Result<Complex64> {
    pole_fenced(w)?;
    if w.re < 0.5 {
        // psi(w) = psi(1 - w) - pi cot(pi w)
        return Ok(digamma_right(1.0 - w) - PI * cot_pi(w));
    }
    Ok(digamma_right(w))
}

fn digamma_right(mut w: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    while w.norm_sqr() < STIRLING_RADIUS * STIRLING_RADIUS {
        acc -= 1.0 / w;
        w += 1.0;
    }
    let iw = 1.0 / w;
    let iw2 = iw * iw;
    let mut res = w.ln() - 0.5 * iw;
    let mut wp = iw2;
    for a in PSI_TAIL {
        res += a * wp;
        wp *= iw2;
    }
    acc + res
}

/// Trigamma psi'(w).
pub fn trigamma(w: Complex64) -> Result<Complex64> {
    pole_fenced(w)?;
    if w.re < 0.5 {
        // psi'(w) + psi'(1 - w) = pi^2 / sin^2(pi w)
        return Ok(pi2_over_sin2(w) - trigamma_right(1.0 - w));
    }
    Ok(trigamma_right(w))
}

fn trigamma_right(mut w: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    while w.norm_sqr() < STIRLING_RADIUS * STIRLING_RADIUS {
        acc += 1.0 / (w * w);
        w += 1.0;
    }
    let iw = 1.0 / w;
    let iw2 = iw * iw;
    let mut res = iw + 0.5 * iw2;
    let mut wp = iw * iw2;
    for a in PSI1_TAIL {
        res += a * wp;
        wp *= iw2;
    }
    acc + res
}
