use approx::{assert_abs_diff_eq, assert_relative_eq};
use ihat_core::{
    mellin_ihat, mellin_ihat_product, mellin_ihat_product_quadrature, mellin_ihat_quadrature,
    merge_mellin_product, pdf_from_mellin, Contour, GammaFactor, IhatError, IhatSpec, ScaledIhat,
};
use num_complex::Complex64;

fn gamma_spec() -> IhatSpec {
    IhatSpec::new(1, 0, vec![], vec![GammaFactor::new(0.0, 1.0, 1.0)]).unwrap()
}

fn beta2_spec() -> IhatSpec {
    IhatSpec::new(
        1,
        0,
        vec![GammaFactor::new(2.0, 1.0, 1.0)],
        vec![GammaFactor::new(0.0, 1.0, 1.0)],
    )
    .unwrap()
}

#[test]
fn closed_forms_match_known_transforms() {
    // int x^{s-1} e^{-x} dx = Gamma(s)
    let f = ScaledIhat::new(gamma_spec(), 1.0, 1.0).unwrap();
    let v = mellin_ihat(&f, Complex64::new(2.0, 0.0)).unwrap();
    assert_relative_eq!(v.re, 1.0, max_relative = 1e-14);
    assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-14);

    // scale z = 3 divides by z^s
    let f = ScaledIhat::new(gamma_spec(), 3.0, 1.0).unwrap();
    let v = mellin_ihat(&f, Complex64::new(2.0, 0.0)).unwrap();
    assert_relative_eq!(v.re, 1.0 / 9.0, max_relative = 1e-14);

    // power 2: int x^{s-1} e^{-x^2} dx = Gamma(s/2)/2 -> sqrt(pi)/4 at s = 3
    let f = ScaledIhat::new(gamma_spec(), 1.0, 2.0).unwrap();
    let v = mellin_ihat(&f, Complex64::new(3.0, 0.0)).unwrap();
    assert_relative_eq!(v.re, 0.44311346272637900682, max_relative = 1e-14);
}

#[test]
fn conjugate_symmetry_at_complex_points() {
    let f = ScaledIhat::new(gamma_spec(), 2.0, 1.5).unwrap();
    let s = Complex64::new(1.7, 2.3);
    let v = mellin_ihat(&f, s).unwrap();
    let vc = mellin_ihat(&f, s.conj()).unwrap();
    assert_eq!(v.re, vc.re);
    assert_eq!(v.im, -vc.im);
}

#[test]
fn closed_form_matches_quadrature() {
    // plain gamma kernel at several transform points
    let f = ScaledIhat::new(gamma_spec(), 1.0, 1.0).unwrap();
    for s in [1.0, 1.5, 2.0, 3.0] {
        let closed = mellin_ihat(&f, Complex64::new(s, 0.0)).unwrap().re;
        let quad = mellin_ihat_quadrature(&f, s, 1e-9).unwrap();
        assert_relative_eq!(closed, quad, max_relative = 1e-6);
    }

    // powered upper tail, exponent 1.7
    let a17 = IhatSpec::new(
        1,
        0,
        vec![GammaFactor::new(1.2, 0.3, 1.7)],
        vec![GammaFactor::new(0.0, 1.0, 1.0)],
    )
    .unwrap();
    let f = ScaledIhat::new(a17, 1.0, 1.0).unwrap();
    let closed = mellin_ihat(&f, Complex64::new(2.0, 0.0)).unwrap().re;
    let quad = mellin_ihat_quadrature(&f, 2.0, 1e-9).unwrap();
    assert_relative_eq!(closed, quad, max_relative = 1e-6);

    // powered lower tail, exponent 2.3
    let b23 = IhatSpec::new(
        1,
        0,
        vec![],
        vec![GammaFactor::new(0.0, 1.0, 1.0), GammaFactor::new(0.3, 0.2, 2.3)],
    )
    .unwrap();
    let f = ScaledIhat::new(b23, 1.0, 1.0).unwrap();
    let closed = mellin_ihat(&f, Complex64::new(1.5, 0.0)).unwrap().re;
    let quad = mellin_ihat_quadrature(&f, 1.5, 1e-9).unwrap();
    assert_relative_eq!(closed, quad, max_relative = 1e-6);
}

#[test]
fn strip_violations_are_reported() {
    let f = ScaledIhat::new(gamma_spec(), 1.0, 1.0).unwrap();
    match mellin_ihat(&f, Complex64::new(0.0, 1.0)) {
        Err(IhatError::Strip(_)) => {}
        other => panic!("expected a strip error, got {other:?}"),
    }
    // bounded-support kernel: the transform exists but is not reachable
    // through the exponential-decay closed form
    let f = ScaledIhat::new(beta2_spec(), 1.0, 1.0).unwrap();
    match mellin_ihat(&f, Complex64::new(2.0, 0.0)) {
        Err(IhatError::Convergence(msg)) => {
            assert!(msg.contains("delta1"), "message should name delta1: {msg}")
        }
        other => panic!("expected a convergence error, got {other:?}"),
    }
}

#[test]
fn product_rule_gamma_times_gamma() {
    let f = ScaledIhat::new(gamma_spec(), 1.0, 1.0).unwrap();
    let (merged, argument, prefactor) = merge_mellin_product(&f, &f, 1.0).unwrap();
    // chi(s) = Gamma(s) Gamma(1 - s) with unit argument
    assert_eq!((merged.m(), merged.n()), (1, 1));
    assert_eq!(argument, 1.0);
    assert_eq!(prefactor, 1.0);
    // int e^{-2x} dx = 1/2
    let v = mellin_ihat_product(&f, &f, 1.0, &Contour::default()).unwrap();
    assert_relative_eq!(v, 0.5, max_relative = 1e-9);
}

#[test]
fn product_rule_gamma_times_beta_kernel() {
    let g = ScaledIhat::new(gamma_spec(), 1.0, 1.0).unwrap();
    let b = ScaledIhat::new(beta2_spec(), 1.0, 1.0).unwrap();
    let (merged, _, _) = merge_mellin_product(&g, &b, 2.0).unwrap();
    // upper: reflected lower head of the first factor, then second factor's
    // tail; lower: second factor's head
    assert_eq!((merged.m(), merged.n()), (1, 1));
    let up: Vec<_> = merged.upper().iter().map(|g| (g.param, g.coeff, g.expo)).collect();
    let lo: Vec<_> = merged.lower().iter().map(|g| (g.param, g.coeff, g.expo)).collect();
    assert_eq!(up, vec![(-1.0, 1.0, 1.0), (2.0, 1.0, 1.0)]);
    assert_eq!(lo, vec![(0.0, 1.0, 1.0)]);

    // int_0^1 x e^{-x} (1 - x) dx = 3/e - 1
    let v = mellin_ihat_product(&g, &b, 2.0, &Contour::default()).unwrap();
    assert_relative_eq!(v, 0.1036383235143269807, max_relative = 1e-9);

    // non-integer transform point against the x-side oracle
    let v = mellin_ihat_product(&g, &b, 1.5, &Contour::default()).unwrap();
    let q = mellin_ihat_product_quadrature(&g, &b, 1.5, 1e-6).unwrap();
    assert_relative_eq!(v, q, max_relative = 1e-4);
}

#[test]
fn product_rule_rejects_inadmissible_points() {
    let f = ScaledIhat::new(gamma_spec(), 1.0, 1.0).unwrap();
    // s = 0 empties the merged strip
    match merge_mellin_product(&f, &f, 0.0) {
        Err(IhatError::Strip(_)) => {}
        other => panic!("expected a strip error, got {other:?}"),
    }
}

#[test]
fn inversion_recovers_pointwise_values() {
    // invert Gamma(s) at y = 1: e^{-1}
    let f = ScaledIhat::new(gamma_spec(), 1.0, 1.0).unwrap();
    let contour = Contour { shift: Some(1.0), ..Contour::default() };
    let v = pdf_from_mellin(|s| mellin_ihat(&f, s), 1.0, &contour).unwrap();
    assert_relative_eq!(v, (-1.0_f64).exp(), max_relative = 1e-8);

    // invert Gamma(s) Gamma(1 - s) at y = 1: the transform of 1/(1+y)
    let spec = IhatSpec::new(
        1,
        1,
        vec![GammaFactor::new(0.0, 1.0, 1.0)],
        vec![GammaFactor::new(0.0, 1.0, 1.0)],
    )
    .unwrap();
    let contour = Contour { shift: Some(0.5), ..Contour::default() };
    let v = pdf_from_mellin(|s| spec.theta_eval(s), 1.0, &contour).unwrap();
    assert_relative_eq!(v, 0.5, max_relative = 1e-8);
}

#[test]
fn inversion_requires_shift_and_decay() {
    let f = ScaledIhat::new(gamma_spec(), 1.0, 1.0).unwrap();
    match pdf_from_mellin(|s| mellin_ihat(&f, s), 1.0, &Contour::default()) {
        Err(IhatError::Domain(msg)) => assert!(msg.contains("shift"), "got: {msg}"),
        other => panic!("expected a domain error, got {other:?}"),
    }
    // a constant never decays along the line
    let contour = Contour { shift: Some(1.0), ..Contour::default() };
    match pdf_from_mellin(|_| Ok(Complex64::new(1.0, 0.0)), 2.0, &contour) {
        Err(IhatError::Convergence(_)) => {}
        other => panic!("expected a convergence error, got {other:?}"),
    }
}

#[test]
fn scaled_ihat_serde_round_trip() {
    let f = ScaledIhat::new(gamma_spec(), 2.5, 1.5).unwrap();
    let text = serde_json::to_string(&f).unwrap();
    let back: ScaledIhat = serde_json::from_str(&text).unwrap();
    assert_eq!(back.z(), 2.5);
    assert_eq!(back.power(), 1.5);
    assert_eq!(back.spec().m(), 1);

    // invalid scale is rejected on the way in
    let bad = text.replace("2.5", "-2.5");
    assert!(serde_json::from_str::<ScaledIhat>(&bad).is_err());
}
