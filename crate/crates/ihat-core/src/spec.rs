//! Parameter algebra for the evaluated function family.
//!
//! A spec holds two ordered factor lists. The first `m` lower factors and
//! first `n` upper factors are "heads": they sit in the numerator of the
//! Mellin kernel and must carry exponent 1. The remaining "tail" factors sit
//! in the denominator raised to their (possibly non-integer) exponents. The
//! kernel along a vertical line s = sigma + i t is
//!
//!   chi(s) = prod_heads Gamma(b_j + f_j s) * Gamma(1 - a_j - e_j s)
//!          / prod_tails Gamma(1 - b_j - f_j s)^{B_j} * Gamma(a_j + e_j s)^{A_j}
//!
//! and the evaluated function is the inverse Mellin transform of chi.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{IhatError, Result};
use crate::gamma::{digamma, powered_gamma_log, trigamma};

/// One gamma factor: Gamma(param + coeff * s) placed by its list position,
/// raised to `expo` when in tail position. Head positions require expo = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaFactor {
    pub param: f64,
    pub coeff: f64,
    pub expo: f64,
}

impl GammaFactor {
    pub fn new(param: f64, coeff: f64, expo: f64) -> Self {
        GammaFactor { param, coeff, expo }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct UpperJson {
    a: f64,
    e: f64,
    #[serde(rename = "A")]
    big_a: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LowerJson {
    b: f64,
    f: f64,
    #[serde(rename = "B")]
    big_b: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpecJson {
    m: usize,
    n: usize,
    upper: Vec<UpperJson>,
    lower: Vec<LowerJson>,
}

/// Validated parameter set. Constructed only through [`IhatSpec::new`], so a
/// value of this type always has positive finite coefficients and exponents,
/// unit head exponents, and a nonempty contour strip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecJson", into = "SpecJson")]
pub struct IhatSpec {
    m: usize,
    n: usize,
    upper: Vec<GammaFactor>,
    lower: Vec<GammaFactor>,
}

fn check_factor(side: &str, idx: usize, g: &GammaFactor, is_head: bool) -> Result<()> {
    if !g.param.is_finite() {
        return Err(IhatError::Domain(format!(
            "{side}[{idx}]: param must be finite, got {}",
            g.param
        )));
    }
    if !(g.coeff > 0.0) || !g.coeff.is_finite() {
        return Err(IhatError::Domain(format!(
            "{side}[{idx}]: coeff must be positive and finite, got {}",
            g.coeff
        )));
    }
    if !(g.expo > 0.0) || !g.expo.is_finite() {
        return Err(IhatError::Domain(format!(
            "{side}[{idx}]: expo must be positive and finite, got {}",
            g.expo
        )));
    }
    if is_head && g.expo != 1.0 {
        return Err(IhatError::Domain(format!(
            "{side}[{idx}]: head factors must carry exponent 1, got {}",
            g.expo
        )));
    }
    Ok(())
}

impl IhatSpec {
    /// Builds and validates a spec. `m` and `n` are the head counts of the
    /// lower and upper lists respectively.
    pub fn new(
        m: usize,
        n: usize,
        upper: Vec<GammaFactor>,
        lower: Vec<GammaFactor>,
    ) -> Result<Self> {
        if m > lower.len() {
            return Err(IhatError::Domain(format!(
                "m = {m} exceeds lower list length {}",
                lower.len()
            )));
        }
        if n > upper.len() {
            return Err(IhatError::Domain(format!(
                "n = {n} exceeds upper list length {}",
                upper.len()
            )));
        }
        for (j, g) in upper.iter().enumerate() {
            check_factor("upper", j, g, j < n)?;
        }
        for (j, g) in lower.iter().enumerate() {
            check_factor("lower", j, g, j < m)?;
        }
        let spec = IhatSpec { m, n, upper, lower };
        let (lo, hi) = spec.strip();
        if !(lo < hi) {
            return Err(IhatError::Strip(format!(
                "empty contour strip ({lo}, {hi})"
            )));
        }
        Ok(spec)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total upper factor count (heads + tails).
    pub fn p(&self) -> usize {
        self.upper.len()
    }

    /// Total lower factor count (heads + tails).
    pub fn q(&self) -> usize {
        self.lower.len()
    }

    pub fn upper(&self) -> &[GammaFactor] {
        &self.upper
    }

    pub fn lower(&self) -> &[GammaFactor] {
        &self.lower
    }

    /// Log of the Mellin kernel at a contour point. Summed in log space so
    /// powered tails neither overflow nor lose the branch.
    pub fn theta_log(&self, s: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, g) in self.lower.iter().enumerate() {
            if j < self.m {
                acc += powered_gamma_log(Complex64::new(g.param, 0.0) + s * g.coeff, 1.0)?;
            } else {
                acc -= powered_gamma_log(Complex64::new(1.0 - g.param, 0.0) - s * g.coeff, g.expo)?;
            }
        }
        for (j, g) in self.upper.iter().enumerate() {
            if j < self.n {
                acc += powered_gamma_log(Complex64::new(1.0 - g.param, 0.0) - s * g.coeff, 1.0)?;
            } else {
                acc -= powered_gamma_log(Complex64::new(g.param, 0.0) + s * g.coeff, g.expo)?;
            }
        }
        Ok(acc)
    }

    /// The Mellin kernel chi(s) itself.
    pub fn theta_eval(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.theta_log(s)?.exp())
    }

    /// d/ds of theta_log: the same factor walk through digamma.
    pub(crate) fn theta_log_deriv(&self, s: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, g) in self.lower.iter().enumerate() {
            if j < self.m {
                acc += g.coeff * digamma(Complex64::new(g.param, 0.0) + s * g.coeff)?;
            } else {
                acc += g.expo
                    * g.coeff
                    * digamma(Complex64::new(1.0 - g.param, 0.0) - s * g.coeff)?;
            }
        }
        for (j, g) in self.upper.iter().enumerate() {
            if j < self.n {
                acc -= g.coeff * digamma(Complex64::new(1.0 - g.param, 0.0) - s * g.coeff)?;
            } else {
                acc -= g.expo * g.coeff * digamma(Complex64::new(g.param, 0.0) + s * g.coeff)?;
            }
        }
        Ok(acc)
    }

    /// d^2/ds^2 of theta_log, through trigamma.
    pub(crate) fn theta_log_deriv2(&self, s: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, g) in self.lower.iter().enumerate() {
            let q2 = g.coeff * g.coeff;
            if j < self.m {
                acc += q2 * trigamma(Complex64::new(g.param, 0.0) + s * g.coeff)?;
            } else {
                acc -= g.expo * q2 * trigamma(Complex64::new(1.0 - g.param, 0.0) - s * g.coeff)?;
            }
        }
        for (j, g) in self.upper.iter().enumerate() {
            let q2 = g.coeff * g.coeff;
            if j < self.n {
                acc += q2 * trigamma(Complex64::new(1.0 - g.param, 0.0) - s * g.coeff)?;
            } else {
                acc -= g.expo * q2 * trigamma(Complex64::new(g.param, 0.0) + s * g.coeff)?;
            }
        }
        Ok(acc)
    }

    /// Net head-minus-tail coefficient mass. Positive means the kernel decays
    /// exponentially along vertical lines (rate pi/2 * delta1) and the
    /// contour integral converges for every positive argument.
    pub fn delta1(&self) -> f64 {
        let mut d = 0.0;
        for (j, g) in self.lower.iter().enumerate() {
            d += if j < self.m { g.coeff } else { -g.expo * g.coeff };
        }
        for (j, g) in self.upper.iter().enumerate() {
            d += if j < self.n { g.coeff } else { -g.expo * g.coeff };
        }
        d
    }

    /// ln of the natural argument scale: when delta1 = 0 the kernel behaves
    /// like (delta_star / z)^{i t} along the line, so |ln(delta_star) - ln z|
    /// is the tail oscillation frequency.
    pub fn log_delta_star(&self) -> f64 {
        let mut d = 0.0;
        for (j, g) in self.lower.iter().enumerate() {
            let t = g.coeff * g.coeff.ln();
            d += if j < self.m { t } else { -g.expo * t };
        }
        for (j, g) in self.upper.iter().enumerate() {
            let t = g.coeff * g.coeff.ln();
            d += if j < self.n { t } else { -g.expo * t };
        }
        d
    }

    /// Algebraic decay exponent of |chi(sigma + i t)| as t -> infinity:
    /// |chi| ~ const * t^{rho(sigma)} * exp(-pi/2 * delta1 * t). Follows from
    /// the Stirling modulus |Gamma(x+iy)| ~ |y|^{x-1/2} e^{-pi|y|/2} applied
    /// factor by factor.
    pub fn rho(&self, sigma: f64) -> f64 {
        let mut r = 0.0;
        for (j, g) in self.lower.iter().enumerate() {
            if j < self.m {
                r += g.param + g.coeff * sigma - 0.5;
            } else {
                r -= g.expo * (0.5 - g.param - g.coeff * sigma);
            }
        }
        for (j, g) in self.upper.iter().enumerate() {
            if j < self.n {
                r += 0.5 - g.param - g.coeff * sigma;
            } else {
                r -= g.expo * (g.param + g.coeff * sigma - 0.5);
            }
        }
        r
    }

    /// Admissible interval for the contour shift. Head factors separate the
    /// two pole families; tail factors additionally require positive real
    /// arguments on the axis (their powered logs reject the branch cut).
    pub fn strip(&self) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (j, g) in self.lower.iter().enumerate() {
            if j < self.m {
                lo = lo.max(-g.param / g.coeff);
            } else {
                hi = hi.min((1.0 - g.param) / g.coeff);
            }
        }
        for (j, g) in self.upper.iter().enumerate() {
            if j < self.n {
                hi = hi.min((1.0 - g.param) / g.coeff);
            } else {
                lo = lo.max(-g.param / g.coeff);
            }
        }
        (lo, hi)
    }

    /// Midpoint of the strip; one unit inside a single finite edge; 0 when
    /// the strip is the whole line.
    pub fn default_shift(&self) -> f64 {
        let (lo, hi) = self.strip();
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo + 1.0,
            (false, true) => hi - 1.0,
            (false, false) => 0.0,
        }
    }

    /// (c, d): the value behaves like z^c as z -> 0 and is O(z^d) as
    /// z -> infinity. No lower heads means flatter-than-any-power at 0
    /// (c = +inf); no upper heads means faster-than-any-power decay at
    /// infinity (d = -inf).
    pub fn asymptotic_exponents(&self) -> (f64, f64) {
        let mut c = f64::INFINITY;
        for g in self.lower.iter().take(self.m) {
            c = c.min(g.param / g.coeff);
        }
        let mut d = f64::NEG_INFINITY;
        for g in self.upper.iter().take(self.n) {
            d = d.max((g.param - 1.0) / g.coeff);
        }
        (c, d)
    }

    /// Argument-power identity: eval(self, z^sigma) = prefactor * eval(out, z)
    /// where `out` divides every coefficient by sigma and prefactor = 1/sigma.
    pub fn apply_power_identity(&self, sigma: f64) -> Result<(IhatSpec, f64)> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(IhatError::Domain(format!(
                "power identity needs sigma > 0, got {sigma}"
            )));
        }
        let scale = |g: &GammaFactor| GammaFactor::new(g.param, g.coeff / sigma, g.expo);
        let spec = IhatSpec::new(
            self.m,
            self.n,
            self.upper.iter().map(scale).collect(),
            self.lower.iter().map(scale).collect(),
        )?;
        Ok((spec, 1.0 / sigma))
    }

    /// Prefactor-absorption identity: z^sigma * eval(self, z) = eval(out, z)
    /// where `out` shifts every param by sigma * coeff.
    pub fn apply_shift_identity(&self, sigma: f64) -> Result<IhatSpec> {
        if !sigma.is_finite() {
            return Err(IhatError::Domain(format!(
                "shift identity needs finite sigma, got {sigma}"
            )));
        }
        let shift = |g: &GammaFactor| GammaFactor::new(g.param + sigma * g.coeff, g.coeff, g.expo);
        IhatSpec::new(
            self.m,
            self.n,
            self.upper.iter().map(shift).collect(),
            self.lower.iter().map(shift).collect(),
        )
    }

    /// True when every tail exponent is 1, i.e. the value is an ordinary
    /// H-type function with no powered factors.
    pub fn is_h_reducible(&self) -> bool {
        self.upper.iter().chain(self.lower.iter()).all(|g| g.expo == 1.0)
    }
}

impl TryFrom<SpecJson> for IhatSpec {
    type Error = IhatError;

    fn try_from(j: SpecJson) -> Result<Self> {
        IhatSpec::new(
            j.m,
            j.n,
            j.upper
                .into_iter()
                .map(|u| GammaFactor::new(u.a, u.e, u.big_a))
                .collect(),
            j.lower
                .into_iter()
                .map(|l| GammaFactor::new(l.b, l.f, l.big_b))
                .collect(),
        )
    }
}

impl From<IhatSpec> for SpecJson {
    fn from(s: IhatSpec) -> Self {
        SpecJson {
            m: s.m,
            n: s.n,
            upper: s
                .upper
                .iter()
                .map(|g| UpperJson { a: g.param, e: g.coeff, big_a: g.expo })
                .collect(),
            lower: s
                .lower
                .iter()
                .map(|g| LowerJson { b: g.param, f: g.coeff, big_b: g.expo })
                .collect(),
        }
    }
}
