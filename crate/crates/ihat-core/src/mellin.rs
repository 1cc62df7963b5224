//! Mellin transforms of scaled kernels: closed forms, the two-factor product
//! rule, and quadrature oracles that validate both from the x side.

use std::cell::Cell;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::{ihat_eval, ihat_eval_soft, neumaier_sum, panel_quad, refine_to, Contour, Panel};
use crate::error::{IhatError, Result};
use crate::quad::{expand_log_bounds, find_anchor, integrate_log_axis};
use crate::spec::{GammaFactor, IhatSpec};

const DELTA1_EPS: f64 = 1e-12;

#[derive(Serialize, Deserialize)]
struct ScaledIhatJson {
    spec: IhatSpec,
    z: f64,
    power: f64,
}

/// The function x -> Ihat(z x^power) on x > 0. Its Mellin transform is the
/// closed form chi(s/power) / (power z^{s/power}).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ScaledIhatJson", into = "ScaledIhatJson")]
pub struct ScaledIhat {
    spec: IhatSpec,
    z: f64,
    power: f64,
}

impl ScaledIhat {
    pub fn new(spec: IhatSpec, z: f64, power: f64) -> Result<Self> {
        if !(z > 0.0) || !z.is_finite() {
            return Err(IhatError::Domain(format!(
                "scale z must be positive and finite, got {z}"
            )));
        }
        if !(power > 0.0) || !power.is_finite() {
            return Err(IhatError::Domain(format!(
                "power must be positive and finite, got {power}"
            )));
        }
        Ok(ScaledIhat { spec, z, power })
    }

    pub fn spec(&self) -> &IhatSpec {
        &self.spec
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Pointwise value Ihat(z x^power).
    pub fn eval(&self, x: f64, contour: &Contour) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(IhatError::Domain(format!(
                "evaluation point must be positive and finite, got {x}"
            )));
        }
        ihat_eval(&self.spec, self.z * x.powf(self.power), contour)
    }
}

impl TryFrom<ScaledIhatJson> for ScaledIhat {
    type Error = IhatError;

    fn try_from(j: ScaledIhatJson) -> Result<Self> {
        ScaledIhat::new(j.spec, j.z, j.power)
    }
}

impl From<ScaledIhat> for ScaledIhatJson {
    fn from(f: ScaledIhat) -> Self {
        ScaledIhatJson { spec: f.spec, z: f.z, power: f.power }
    }
}

/// Closed-form Mellin transform int_0^inf x^{s-1} Ihat(z x^power) dx.
///
/// Needs Re(s)/power strictly inside the kernel's strip and an exponentially
/// decaying kernel (delta1 > 0); otherwise the defining integral does not
/// converge absolutely.
pub fn mellin_ihat(f: &ScaledIhat, s: Complex64) -> Result<Complex64> {
    let u = s / f.power;
    let (lo, hi) = f.spec.strip();
    if !(u.re > lo && u.re < hi) {
        return Err(IhatError::Strip(format!(
            "Re(s)/power = {} is outside the admissible strip ({lo}, {hi})",
            u.re
        )));
    }
    let d1 = f.spec.delta1();
    if d1 <= DELTA1_EPS {
        return Err(IhatError::Convergence(format!(
            "mellin transform needs an exponentially decaying kernel: delta1 = {d1}"
        )));
    }
    let chi = f.spec.theta_eval(u)?;
    Ok(chi * (-u * f.z.ln()).exp() / f.power)
}

/// Mellin transform by direct x-axis quadrature. Pure oracle: integrates the
/// contour-evaluated kernel pointwise and never consults the closed form.
pub fn mellin_ihat_quadrature(f: &ScaledIhat, s: f64, abs_tol: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(IhatError::Domain(format!("mellin point must be finite, got {s}")));
    }
    let (lo, hi) = f.spec.strip();
    if !(s / f.power > lo && s / f.power < hi) {
        return Err(IhatError::Strip(format!(
            "s/power = {} is outside the admissible strip ({lo}, {hi})",
            s / f.power
        )));
    }
    // kernel argument equals 1 here; the natural scale of the integrand
    let x0 = f.z.powf(-1.0 / f.power);
    let probe_contour = Contour { abs_tol: 1e-9, max_nodes: 1 << 20, ..Contour::default() };
    let mut mass = |x: f64| -> Result<f64> {
        let (v, _) = ihat_eval_soft(&f.spec, f.z * x.powf(f.power), &probe_contour)?;
        Ok(v.abs() * x.powf(s - 1.0) * x)
    };
    let anchor = find_anchor(&mut mass, x0)?;
    let (x_lo, x_hi) = expand_log_bounds(&mut mass, anchor, 1e-9, 1e-8)?;
    let mut integrand = |x: f64, tol: f64| -> Result<f64> {
        let w = x.powf(s - 1.0);
        let arg = f.z * x.powf(f.power);
        // tol/w can drop far below any fixed floor out in the tail, where a
        // large weight multiplies a tiny kernel value. The kernel envelope
        // shrinks along with the value there, so the demand stays feasible,
        // but it must be made relative to the observed magnitude: a flat
        // absolute floor lets residual eval error times the weight inject
        // spurious mass. Probe coarsely first, then refine to the larger of
        // the true need and a relative floor.
        let needed = (tol / w).min(1e-4);
        let coarse = Contour {
            abs_tol: needed.max(1e-9),
            max_nodes: 1 << 21,
            ..Contour::default()
        };
        let (v0, e0) = ihat_eval_soft(&f.spec, arg, &coarse)?;
        if e0 <= needed {
            return Ok(v0 * w);
        }
        let fine = Contour {
            abs_tol: needed.max(v0.abs() * 1e-12).max(1e-300),
            max_nodes: 1 << 21,
            ..Contour::default()
        };
        Ok(ihat_eval_soft(&f.spec, arg, &fine)?.0 * w)
    };
    let (v, _) = integrate_log_axis(&mut integrand, x_lo, x_hi, abs_tol, 4096)?;
    Ok(v)
}

/// Parameter-level Mellin transform of a product of two scaled kernels:
/// int x^{s-1} f1(x) f2(x) dx = prefactor * Ihat_merged(argument).
///
/// Returns (merged kernel, argument, prefactor). The transform point must be
/// real so the merged parameters stay real; an s outside the joint
/// admissible range surfaces as the merged kernel's empty strip.
pub fn merge_mellin_product(
    f1: &ScaledIhat,
    f2: &ScaledIhat,
    s: f64,
) -> Result<(IhatSpec, f64, f64)> {
    if !s.is_finite() {
        return Err(IhatError::Domain(format!("mellin point must be finite, got {s}")));
    }
    let sig = f1.power;
    let mu = f2.power;
    let (s1, s2) = (&f1.spec, &f2.spec);
    let mut up: Vec<GammaFactor> = Vec::new();
    let mut lo: Vec<GammaFactor> = Vec::new();
    for (j, g) in s2.upper().iter().enumerate() {
        if j < s2.n() {
            up.push(GammaFactor::new(g.param, g.coeff, 1.0));
        }
    }
    for (j, g) in s1.lower().iter().enumerate() {
        if j < s1.m() {
            up.push(GammaFactor::new(
                1.0 - g.param - (s / sig) * g.coeff,
                (mu / sig) * g.coeff,
                1.0,
            ));
        }
    }
    for (j, g) in s1.lower().iter().enumerate() {
        if j >= s1.m() {
            up.push(GammaFactor::new(
                1.0 - g.param - (s / sig) * g.coeff,
                (mu / sig) * g.coeff,
                g.expo,
            ));
        }
    }
    for (j, g) in s2.upper().iter().enumerate() {
        if j >= s2.n() {
            up.push(GammaFactor::new(g.param, g.coeff, g.expo));
        }
    }
    for (j, g) in s2.lower().iter().enumerate() {
        if j < s2.m() {
            lo.push(GammaFactor::new(g.param, g.coeff, 1.0));
        }
    }
    for (j, g) in s1.upper().iter().enumerate() {
        if j < s1.n() {
            lo.push(GammaFactor::new(
                1.0 - g.param - (s / sig) * g.coeff,
                (mu / sig) * g.coeff,
                1.0,
            ));
        }
    }
    for (j, g) in s1.upper().iter().enumerate() {
        if j >= s1.n() {
            lo.push(GammaFactor::new(
                1.0 - g.param - (s / sig) * g.coeff,
                (mu / sig) * g.coeff,
                g.expo,
            ));
        }
    }
    for (j, g) in s2.lower().iter().enumerate() {
        if j >= s2.m() {
            lo.push(GammaFactor::new(g.param, g.coeff, g.expo));
        }
    }
    let merged = IhatSpec::new(s1.n() + s2.m(), s1.m() + s2.n(), up, lo)?;
    // z1^{-(s - mu u)/sigma} = z1^{-s/sigma} (z2 z1^{-mu/sigma})^{-u} / z2^{-u}
    let argument = f2.z * f1.z.powf(-mu / sig);
    let prefactor = 1.0 / (sig * f1.z.powf(s / sig));
    Ok((merged, argument, prefactor))
}

/// Mellin transform of f1 * f2 at real s via the product rule plus one
/// contour evaluation of the merged kernel.
pub fn mellin_ihat_product(
    f1: &ScaledIhat,
    f2: &ScaledIhat,
    s: f64,
    contour: &Contour,
) -> Result<f64> {
    let (merged, argument, prefactor) = merge_mellin_product(f1, f2, s)?;
    Ok(prefactor * ihat_eval(&merged, argument, contour)?)
}

/// Product-transform oracle by direct x-quadrature of f1(x) f2(x) x^{s-1}.
pub fn mellin_ihat_product_quadrature(
    f1: &ScaledIhat,
    f2: &ScaledIhat,
    s: f64,
    abs_tol: f64,
) -> Result<f64> {
    if !s.is_finite() {
        return Err(IhatError::Domain(format!("mellin point must be finite, got {s}")));
    }
    let x0 = f1.z.powf(-1.0 / f1.power);
    let probe_contour = Contour { abs_tol: 1e-9, max_nodes: 1 << 20, ..Contour::default() };
    let mut mass = |x: f64| -> Result<f64> {
        let (v1, _) = ihat_eval_soft(&f1.spec, f1.z * x.powf(f1.power), &probe_contour)?;
        let (v2, _) = ihat_eval_soft(&f2.spec, f2.z * x.powf(f2.power), &probe_contour)?;
        Ok((v1 * v2).abs() * x.powf(s - 1.0) * x)
    };
    let anchor = find_anchor(&mut mass, x0)?;
    let (x_lo, x_hi) = expand_log_bounds(&mut mass, anchor, 1e-9, 1e-8)?;
    let mut integrand = |x: f64, tol: f64| -> Result<f64> {
        let w = x.powf(s - 1.0);
        // split the point budget between the two kernel factors; both stay
        // O(1) on the retained domain, so a flat split is safe
        let inner = Contour {
            abs_tol: (tol / w / 4.0).clamp(1e-14, 1e-4),
            max_nodes: 1 << 21,
            ..Contour::default()
        };
        let (v1, _) = ihat_eval_soft(&f1.spec, f1.z * x.powf(f1.power), &inner)?;
        let (v2, _) = ihat_eval_soft(&f2.spec, f2.z * x.powf(f2.power), &inner)?;
        Ok(v1 * v2 * w)
    };
    let (v, _) = integrate_log_axis(&mut integrand, x_lo, x_hi, abs_tol, 4096)?;
    Ok(v)
}

/// Recovers a density value from a black-box Mellin transform by quadrature
/// along the vertical line Re(s) = contour.shift (which must be given
/// explicitly: a black box has no strip to pick a default from). The
/// transform must represent a real function, i.e. m(conj s) = conj m(s),
/// and must decay along the line; decay is measured, and its absence is a
/// convergence error.
pub fn pdf_from_mellin<M>(mellin: M, y: f64, contour: &Contour) -> Result<f64>
where
    M: Fn(Complex64) -> Result<Complex64>,
{
    contour.validate()?;
    if !(y > 0.0) || !y.is_finite() {
        return Err(IhatError::Domain(format!(
            "evaluation point must be positive and finite, got {y}"
        )));
    }
    let c = contour.shift.ok_or_else(|| {
        IhatError::Domain("pdf_from_mellin requires an explicit contour shift".into())
    })?;
    let ln_y = y.ln();
    let nodes = Cell::new(0usize);
    let mut integrand = |t: f64| -> Result<f64> {
        nodes.set(nodes.get() + 1);
        let s = Complex64::new(c, t);
        Ok((mellin(s)? * (-s * ln_y).exp()).re)
    };
    let env_at = |t: f64| -> Result<f64> {
        nodes.set(nodes.get() + 1);
        Ok(mellin(Complex64::new(c, t))?.norm() * (-c * ln_y).exp())
    };

    let h0 = contour.initial_halfwidth;
    let mut panels: Vec<Panel> = Vec::new();
    let mut t_edge = 0.0_f64;
    let mut width = h0;
    let mut env_prev = env_at(0.0)? + 1e-300;
    let mut t_prev = 0.0_f64;
    loop {
        let p = panel_quad(&mut integrand, t_edge, t_edge + width)?;
        t_edge = p.b;
        panels.push(p);
        let env = env_at(t_edge)? + 1e-300;
        // measured exponential decay rate over the last extension step
        let lam = (env_prev.ln() - env.ln()) / (t_edge - t_prev);
        let tail = if lam > 1e-3 { env / lam * 1.5 } else { f64::INFINITY };
        if tail < 0.5 * contour.abs_tol {
            break;
        }
        if t_edge > 400.0 && lam <= 1e-3 {
            return Err(IhatError::Convergence(format!(
                "transform does not decay along Re(s) = {c}: \
                 modulus {env:.3e} at t = {t_edge:.1}"
            )));
        }
        if nodes.get() > contour.max_nodes {
            return Err(IhatError::Convergence(format!(
                "node budget {} exhausted at T = {t_edge:.3e} inverting a mellin transform",
                contour.max_nodes
            )));
        }
        env_prev = env;
        t_prev = t_edge;
        width = (2.0 * width).min(h0.max(0.4 * t_edge)).min(10.0 / (ln_y.abs() + 0.3));
    }

    refine_to(&mut integrand, &mut panels, 0.25 * contour.abs_tol, || {
        if nodes.get() > contour.max_nodes {
            Err(IhatError::Convergence(format!(
                "node budget {} exhausted refining a mellin inversion on [0, {t_edge:.3e}]",
                contour.max_nodes
            )))
        } else {
            Ok(())
        }
    })?;
    Ok(neumaier_sum(panels.iter().map(|p| p.value)) / std::f64::consts::PI)
}
