//! Probability densities carried by the kernel.
//!
//! A base distribution has pdf(x) = sigma z^{s1/sigma} phi x^{s1-1}
//! Ihat(z x^sigma). Products and quotients of independent base variables
//! stay in the family: their densities are C y^r Ihat(Z y^P) for merged
//! parameter lists, which is the single shape `IhatDensity` stores.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::{ihat_eval, ihat_eval_soft, Contour};
use crate::error::{IhatError, Result};
use crate::quad::{expand_log_bounds, find_anchor, integrate_log_axis};
use crate::spec::{GammaFactor, IhatSpec};

/// Normalizer 1/chi(u) at real u strictly inside the kernel strip.
pub fn phi(spec: &IhatSpec, u: f64) -> Result<f64> {
    let (lo, hi) = spec.strip();
    if !(u > lo && u < hi) {
        return Err(IhatError::Strip(format!(
            "phi evaluation point {u} is outside the admissible strip ({lo}, {hi})"
        )));
    }
    Ok(1.0 / spec.theta_eval(Complex64::new(u, 0.0))?.re)
}

#[derive(Serialize, Deserialize)]
struct BaseParamsJson {
    spec: IhatSpec,
    z: f64,
    sigma: f64,
    s1: f64,
}

/// Parameters of a base distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "BaseParamsJson", into = "BaseParamsJson")]
pub struct BaseParams {
    spec: IhatSpec,
    z: f64,
    sigma: f64,
    s1: f64,
}

impl BaseParams {
    pub fn new(spec: IhatSpec, z: f64, sigma: f64, s1: f64) -> Result<Self> {
        for (name, v) in [("z", z), ("sigma", sigma), ("s1", s1)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(IhatError::Domain(format!(
                    "base parameter {name} must be positive and finite, got {v}"
                )));
            }
        }
        let (lo, hi) = spec.strip();
        let u = s1 / sigma;
        if !(u > lo && u < hi) {
            return Err(IhatError::Domain(format!(
                "s1/sigma = {u} must lie strictly inside the kernel strip ({lo}, {hi})"
            )));
        }
        Ok(BaseParams { spec, z, sigma, s1 })
    }

    pub fn spec(&self) -> &IhatSpec {
        &self.spec
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn s1(&self) -> f64 {
        self.s1
    }

    /// Gamma(k) with unit rate: kernel chi(s) = Gamma(s), s1 = k.
    pub fn gamma(k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(IhatError::Domain(format!(
                "gamma shape must be positive and finite, got {k}"
            )));
        }
        let spec = IhatSpec::new(1, 0, vec![], vec![GammaFactor::new(0.0, 1.0, 1.0)])?;
        BaseParams::new(spec, 1.0, 1.0, k)
    }

    /// Exponential with unit rate: Gamma(1).
    pub fn exponential() -> Result<Self> {
        BaseParams::gamma(1.0)
    }

    /// Beta(a, b): kernel chi(s) = Gamma(s)/Gamma(b + s), s1 = a.
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(IhatError::Domain(format!(
                    "beta shape {name} must be positive and finite, got {v}"
                )));
            }
        }
        let spec = IhatSpec::new(
            1,
            0,
            vec![GammaFactor::new(b, 1.0, 1.0)],
            vec![GammaFactor::new(0.0, 1.0, 1.0)],
        )?;
        BaseParams::new(spec, 1.0, 1.0, a)
    }

    /// Closed-form Mellin moment E[X^{s-1}].
    pub fn moment(&self, s: f64) -> Result<f64> {
        let u = (self.s1 - 1.0 + s) / self.sigma;
        let (lo, hi) = self.spec.strip();
        if !(u > lo && u < hi) {
            return Err(IhatError::Strip(format!(
                "moment point (s1 - 1 + s)/sigma = {u} is outside the strip ({lo}, {hi})"
            )));
        }
        let chi = self.spec.theta_eval(Complex64::new(u, 0.0))?.re;
        Ok(self.z.powf((1.0 - s) / self.sigma) * phi(&self.spec, self.s1 / self.sigma)? * chi)
    }
}

impl TryFrom<BaseParamsJson> for BaseParams {
    type Error = IhatError;

    fn try_from(j: BaseParamsJson) -> Result<Self> {
        BaseParams::new(j.spec, j.z, j.sigma, j.s1)
    }
}

impl From<BaseParams> for BaseParamsJson {
    fn from(b: BaseParams) -> Self {
        BaseParamsJson { spec: b.spec, z: b.z, sigma: b.sigma, s1: b.s1 }
    }
}

#[derive(Serialize, Deserialize)]
struct IhatDensityJson {
    spec: IhatSpec,
    #[serde(rename = "Z")]
    z: f64,
    #[serde(rename = "P")]
    p: f64,
    r: f64,
    #[serde(rename = "C")]
    c: f64,
    validated: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    detail: Option<String>,
}

/// A density of the closed shape pdf(y) = C y^r Ihat(Z y^P) on y > 0.
///
/// `validated` records whether the eager construction-time checks
/// (unit mass, nonnegativity on a log grid) passed; samplers refuse
/// unvalidated densities.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "IhatDensityJson", into = "IhatDensityJson")]
pub struct IhatDensity {
    spec: IhatSpec,
    z: f64,
    p: f64,
    r: f64,
    c: f64,
    validated: bool,
    detail: Option<String>,
}

impl TryFrom<IhatDensityJson> for IhatDensity {
    type Error = IhatError;

    fn try_from(j: IhatDensityJson) -> Result<Self> {
        for (name, v) in [("Z", j.z), ("P", j.p), ("C", j.c)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(IhatError::Domain(format!(
                    "density field {name} must be positive and finite, got {v}"
                )));
            }
        }
        if !j.r.is_finite() {
            return Err(IhatError::Domain(format!(
                "density field r must be finite, got {}",
                j.r
            )));
        }
        Ok(IhatDensity {
            spec: j.spec,
            z: j.z,
            p: j.p,
            r: j.r,
            c: j.c,
            validated: j.validated,
            detail: j.detail,
        })
    }
}

impl From<IhatDensity> for IhatDensityJson {
    fn from(d: IhatDensity) -> Self {
        IhatDensityJson {
            spec: d.spec,
            z: d.z,
            p: d.p,
            r: d.r,
            c: d.c,
            validated: d.validated,
            detail: d.detail,
        }
    }
}

impl IhatDensity {
    fn from_parts(spec: IhatSpec, z: f64, p: f64, r: f64, c: f64) -> Self {
        IhatDensity { spec, z, p, r, c, validated: false, detail: None }
    }

    pub fn spec(&self) -> &IhatSpec {
        &self.spec
    }

    /// Argument scale Z.
    pub fn scale(&self) -> f64 {
        self.z
    }

    /// Argument power P.
    pub fn power(&self) -> f64 {
        self.p
    }

    /// Prefactor exponent r.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Prefactor constant C.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn validated(&self) -> bool {
        self.validated
    }

    /// Reason the construction-time checks failed, if they did.
    pub fn detail(&self) -> Option<&str> {
        self.detail.as_deref()
    }

    /// Density value at y. Zero off the support; tiny negative values from
    /// contour roundoff are clamped to zero.
    pub fn pdf(&self, y: f64, contour: &Contour) -> Result<f64> {
        if y.is_nan() {
            return Err(IhatError::Domain("pdf point must not be NaN".into()));
        }
        if y <= 0.0 || y.is_infinite() {
            return Ok(0.0);
        }
        let v = ihat_eval(&self.spec, self.z * y.powf(self.p), contour)?;
        let val = self.c * y.powf(self.r) * v;
        Ok(if val < 0.0 && val > -1e-12 { 0.0 } else { val })
    }

    /// Density value computed to absolute accuracy pdf_tol: the contour
    /// tolerance is rescaled by the prefactor C y^r. Near a support edge,
    /// where a slowly decaying kernel would need an infeasible node count
    /// for a negligible value, the tolerance is relaxed instead of failing.
    pub fn pdf_with_tol(&self, y: f64, pdf_tol: f64) -> Result<f64> {
        Ok(self.pdf_soft(y, pdf_tol)?.0)
    }

    /// pdf_with_tol plus the achieved absolute error estimate.
    pub(crate) fn pdf_soft(&self, y: f64, pdf_tol: f64) -> Result<(f64, f64)> {
        if y.is_nan() {
            return Err(IhatError::Domain("pdf point must not be NaN".into()));
        }
        if y <= 0.0 || y.is_infinite() {
            return Ok((0.0, 0.0));
        }
        let w = self.c * y.powf(self.r);
        let contour = Contour {
            abs_tol: (pdf_tol / w).clamp(1e-14, 1e-4),
            max_nodes: 1 << 22,
            ..Contour::default()
        };
        let (v, err) = ihat_eval_soft(&self.spec, self.z * y.powf(self.p), &contour)?;
        let val = w * v;
        Ok((if val < 0.0 && val > -1e-12 { 0.0 } else { val }, w.abs() * err))
    }

    /// Closed-form Mellin moment E[Y^{s-1}] = C chi((s+r)/P) / (P Z^{(s+r)/P}).
    pub fn moment(&self, s: f64) -> Result<f64> {
        let u = (s + self.r) / self.p;
        let (lo, hi) = self.spec.strip();
        if !(u > lo && u < hi) {
            return Err(IhatError::Strip(format!(
                "moment point (s + r)/P = {u} is outside the strip ({lo}, {hi})"
            )));
        }
        let chi = self.spec.theta_eval(Complex64::new(u, 0.0))?.re;
        Ok(self.c * chi / (self.p * self.z.powf(u)))
    }

    /// Upper support edge, when the kernel decay implies one. None means
    /// unbounded support. The pdf is exactly zero beyond the edge.
    pub fn support_hi(&self) -> Option<f64> {
        if self.spec.delta1().abs() <= 1e-12 && self.spec.n() == 0 {
            let edge = ((self.spec.log_delta_star() - self.z.ln()) / self.p).exp();
            if edge.is_finite() {
                return Some(edge);
            }
        }
        None
    }

    /// Integration bounds leaving out at most ~tail_mass of the total.
    pub(crate) fn mass_bounds_with(&self, tail_mass: f64) -> Result<(f64, f64)> {
        let mut probe = |y: f64| self.pdf_with_tol(y, 1e-9).map(|v| v.abs() * y);
        let anchor = find_anchor(&mut probe, 1.0)?;
        let (lo, mut hi) = expand_log_bounds(&mut probe, anchor, tail_mass, 1e-8)?;
        // bounded support: snap the upper bound to the exact edge so fixed
        // grids never straddle the kink where the density hits zero
        if let Some(edge) = self.support_hi() {
            if edge > lo && edge <= 2.0 * hi {
                hi = edge;
            }
        }
        Ok((lo, hi))
    }

    /// Integration bounds covering all but ~1e-9 of the mass.
    pub(crate) fn mass_bounds(&self) -> Result<(f64, f64)> {
        self.mass_bounds_with(1e-9)
    }

    /// Total mass by tolerance-aware quadrature of the pdf itself.
    pub fn normalization(&self, abs_tol: f64) -> Result<f64> {
        let (lo, hi) = self.mass_bounds()?;
        let mut f = |y: f64, tol: f64| self.pdf_with_tol(y, tol);
        let (mass, _) = integrate_log_axis(&mut f, lo, hi, abs_tol, 4096)?;
        Ok(mass)
    }

    fn validation_outcome(&self) -> std::result::Result<(), String> {
        let (lo, hi) = self
            .mass_bounds()
            .map_err(|e| format!("density probe failed: {e}"))?;
        let mut f = |y: f64, tol: f64| self.pdf_with_tol(y, tol);
        let (mass, _) = integrate_log_axis(&mut f, lo, hi, 1e-7, 4096)
            .map_err(|e| format!("normalization quadrature failed: {e}"))?;
        if !((mass - 1.0).abs() <= 1e-6) {
            return Err(format!("total mass {mass:.9} differs from 1 beyond 1e-6"));
        }
        // nonnegativity sweep; the floor scales with the achieved error
        // estimate so genuine sign defects are separated from noise
        let contour = Contour { abs_tol: 1e-9, max_nodes: 1 << 21, ..Contour::default() };
        let span = (hi / lo).ln();
        for i in 0..200 {
            let y = lo * (span * (i as f64 + 0.5) / 200.0).exp();
            let (v, err) = ihat_eval_soft(&self.spec, self.z * y.powf(self.p), &contour)
                .map_err(|e| format!("pdf evaluation failed at y = {y:.6e}: {e}"))?;
            let w = self.c * y.powf(self.r);
            let val = w * v;
            let floor = (3.0 * w.abs() * err).max(1e-10);
            if val < -floor {
                return Err(format!("pdf is negative at y = {y:.6e}: {val:.3e}"));
            }
        }
        Ok(())
    }

    fn run_validation(mut self) -> Self {
        match self.validation_outcome() {
            Ok(()) => {
                self.validated = true;
                self.detail = None;
            }
            Err(msg) => {
                self.validated = false;
                self.detail = Some(msg);
            }
        }
        self
    }
}

/// Density of a base distribution: C = sigma z^{s1/sigma} phi, r = s1 - 1,
/// argument z y^sigma. Validation runs eagerly; a failure comes back as
/// `validated = false` with the reason attached, not as an error.
pub fn make_base_dist(params: &BaseParams) -> Result<IhatDensity> {
    let c = params.sigma
        * params.z.powf(params.s1 / params.sigma)
        * phi(&params.spec, params.s1 / params.sigma)?;
    let d = IhatDensity::from_parts(
        params.spec.clone(),
        params.z,
        params.sigma,
        params.s1 - 1.0,
        c,
    );
    Ok(d.run_validation())
}

/// Density of the product X1 X2 of independent base variables.
///
/// Head and tail lists of both factors merge with shifted parameters and
/// cross-multiplied coefficients; heads stay heads, so the merged kernel
/// has orders (m1 + m2, n1 + n2).
pub fn product_dist(b1: &BaseParams, b2: &BaseParams) -> Result<IhatDensity> {
    let (sig, mu) = (b1.sigma, b2.sigma);
    let (s1, s2) = (b1.s1, b2.s1);
    let mut up: Vec<GammaFactor> = Vec::new();
    let mut lo: Vec<GammaFactor> = Vec::new();
    for (j, g) in b1.spec.upper().iter().enumerate() {
        if j < b1.spec.n() {
            up.push(GammaFactor::new(g.param + (s1 / sig) * g.coeff, mu * g.coeff, 1.0));
        }
    }
    for (j, g) in b2.spec.upper().iter().enumerate() {
        if j < b2.spec.n() {
            up.push(GammaFactor::new(g.param + (s2 / mu) * g.coeff, sig * g.coeff, 1.0));
        }
    }
    for (j, g) in b1.spec.upper().iter().enumerate() {
        if j >= b1.spec.n() {
            up.push(GammaFactor::new(g.param + (s1 / sig) * g.coeff, mu * g.coeff, g.expo));
        }
    }
    for (j, g) in b2.spec.upper().iter().enumerate() {
        if j >= b2.spec.n() {
            up.push(GammaFactor::new(g.param + (s2 / mu) * g.coeff, sig * g.coeff, g.expo));
        }
    }
    for (j, g) in b1.spec.lower().iter().enumerate() {
        if j < b1.spec.m() {
            lo.push(GammaFactor::new(g.param + (s1 / sig) * g.coeff, mu * g.coeff, 1.0));
        }
    }
    for (j, g) in b2.spec.lower().iter().enumerate() {
        if j < b2.spec.m() {
            lo.push(GammaFactor::new(g.param + (s2 / mu) * g.coeff, sig * g.coeff, 1.0));
        }
    }
    for (j, g) in b1.spec.lower().iter().enumerate() {
        if j >= b1.spec.m() {
            lo.push(GammaFactor::new(g.param + (s1 / sig) * g.coeff, mu * g.coeff, g.expo));
        }
    }
    for (j, g) in b2.spec.lower().iter().enumerate() {
        if j >= b2.spec.m() {
            lo.push(GammaFactor::new(g.param + (s2 / mu) * g.coeff, sig * g.coeff, g.expo));
        }
    }
    let spec = IhatSpec::new(b1.spec.m() + b2.spec.m(), b1.spec.n() + b2.spec.n(), up, lo)?;
    let c = sig * mu * phi(&b1.spec, s1 / sig)? * phi(&b2.spec, s2 / mu)?;
    let d = IhatDensity::from_parts(spec, b1.z.powf(mu) * b2.z.powf(sig), mu * sig, -1.0, c);
    Ok(d.run_validation())
}

/// Density of the quotient X1 / X2 of independent base variables.
///
/// The second factor enters reflected: its lower list feeds the merged
/// upper list (and vice versa) with parameters mapped through
/// g -> 1 - g - (s2/mu) coeff, so the merged orders are (m1 + n2, n1 + m2).
pub fn quotient_dist(b1: &BaseParams, b2: &BaseParams) -> Result<IhatDensity> {
    let (sig, mu) = (b1.sigma, b2.sigma);
    let (s1, s2) = (b1.s1, b2.s1);
    let mut up: Vec<GammaFactor> = Vec::new();
    let mut lo: Vec<GammaFactor> = Vec::new();
    for (j, g) in b1.spec.upper().iter().enumerate() {
        if j < b1.spec.n() {
            up.push(GammaFactor::new(g.param + (s1 / sig) * g.coeff, mu * g.coeff, 1.0));
        }
    }
    for (j, g) in b2.spec.lower().iter().enumerate() {
        if j < b2.spec.m() {
            up.push(GammaFactor::new(
                1.0 - g.param - (s2 / mu) * g.coeff,
                sig * g.coeff,
                1.0,
            ));
        }
    }
    for (j, g) in b1.spec.upper().iter().enumerate() {
        if j >= b1.spec.n() {
            up.push(GammaFactor::new(g.param + (s1 / sig) * g.coeff, mu * g.coeff, g.expo));
        }
    }
    for (j, g) in b2.spec.lower().iter().enumerate() {
        if j >= b2.spec.m() {
            up.push(GammaFactor::new(
                1.0 - g.param - (s2 / mu) * g.coeff,
                sig * g.coeff,
                g.expo,
            ));
        }
    }
    for (j, g) in b1.spec.lower().iter().enumerate() {
        if j < b1.spec.m() {
            lo.push(GammaFactor::new(g.param + (s1 / sig) * g.coeff, mu * g.coeff, 1.0));
        }
    }
    for (j, g) in b2.spec.upper().iter().enumerate() {
        if j < b2.spec.n() {
            lo.push(GammaFactor::new(
                1.0 - g.param - (s2 / mu) * g.coeff,
                sig * g.coeff,
                1.0,
            ));
        }
    }
    for (j, g) in b1.spec.lower().iter().enumerate() {
        if j >= b1.spec.m() {
            lo.push(GammaFactor::new(g.param + (s1 / sig) * g.coeff, mu * g.coeff, g.expo));
        }
    }
    for (j, g) in b2.spec.upper().iter().enumerate() {
        if j >= b2.spec.n() {
            lo.push(GammaFactor::new(
                1.0 - g.param - (s2 / mu) * g.coeff,
                sig * g.coeff,
                g.expo,
            ));
        }
    }
    let spec = IhatSpec::new(b1.spec.m() + b2.spec.n(), b1.spec.n() + b2.spec.m(), up, lo)?;
    let c = sig * mu * phi(&b1.spec, s1 / sig)? * phi(&b2.spec, s2 / mu)?;
    let d = IhatDensity::from_parts(spec, b1.z.powf(mu) * b2.z.powf(-sig), mu * sig, -1.0, c);
    Ok(d.run_validation())
}

/// Plain Fox H parameter lists ((m, n, upper (a, e), lower (b, f))) when
/// every tail exponent is 1, `None` otherwise.
pub fn reduce_to_h(
    spec: &IhatSpec,
) -> Option<(usize, usize, Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    if !spec.is_h_reducible() {
        return None;
    }
    Some((
        spec.m(),
        spec.n(),
        spec.upper().iter().map(|g| (g.param, g.coeff)).collect(),
        spec.lower().iter().map(|g| (g.param, g.coeff)).collect(),
    ))
}

/// Well-known distributions expressed in this family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classical {
    Gamma,
    Exponential,
    Beta,
    BetaPrime,
}

/// A classical construction result: three of the cases are base
/// distributions, the beta-prime case is a quotient density.
#[derive(Debug, Clone)]
pub enum ClassicalDist {
    Base(BaseParams),
    Density(IhatDensity),
}

/// Builds a classical distribution from its shape parameters:
/// Gamma(k), Exponential (no parameters), Beta(a, b), BetaPrime(a, b).
pub fn classical(kind: Classical, params: &[f64]) -> Result<ClassicalDist> {
    let expect = |n: usize| -> Result<()> {
        if params.len() != n {
            return Err(IhatError::Domain(format!(
                "{kind:?} takes {n} shape parameter(s), got {}",
                params.len()
            )));
        }
        Ok(())
    };
    match kind {
        Classical::Gamma => {
            expect(1)?;
            Ok(ClassicalDist::Base(BaseParams::gamma(params[0])?))
        }
        Classical::Exponential => {
            expect(0)?;
            Ok(ClassicalDist::Base(BaseParams::exponential()?))
        }
        Classical::Beta => {
            expect(2)?;
            Ok(ClassicalDist::Base(BaseParams::beta(params[0], params[1])?))
        }
        Classical::BetaPrime => {
            expect(2)?;
            let b1 = BaseParams::gamma(params[0])?;
            let b2 = BaseParams::gamma(params[1])?;
            Ok(ClassicalDist::Density(quotient_dist(&b1, &b2)?))
        }
    }
}
