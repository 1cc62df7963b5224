use approx::{assert_abs_diff_eq, assert_relative_eq};
use ihat_core::{ihat_eval, ihat_eval_report, Contour, GammaFactor, IhatError, IhatSpec};

fn gamma_spec() -> IhatSpec {
    IhatSpec::new(1, 0, vec![], vec![GammaFactor::new(0.0, 1.0, 1.0)]).unwrap()
}

/// chi(s) = Gamma(s)/Gamma(beta + s); the value is (1 - z)_+^{beta-1}/Gamma(beta).
fn beta_kernel(beta: f64) -> IhatSpec {
    IhatSpec::new(
        1,
        0,
        vec![GammaFactor::new(beta, 1.0, 1.0)],
        vec![GammaFactor::new(0.0, 1.0, 1.0)],
    )
    .unwrap()
}

#[test]
fn gamma_kernel_is_exp() {
    let spec = gamma_spec();
    let contour = Contour::default();
    for z in [0.5, 1.0, 2.0, 5.0] {
        let v = ihat_eval(&spec, z, &contour).unwrap();
        assert_relative_eq!(v, (-z).exp(), max_relative = 1e-8);
    }
    // a tighter tolerance buys more digits
    let tight = Contour { abs_tol: 1e-13, ..Contour::default() };
    let v = ihat_eval(&spec, 5.0, &tight).unwrap();
    assert_relative_eq!(v, (-5.0_f64).exp(), max_relative = 1e-10);
    // far tail: absolute accuracy holds even where the value is tiny, and
    // scaling the tolerance to the value recovers relative accuracy
    let v = ihat_eval(&spec, 20.0, &contour).unwrap();
    assert_abs_diff_eq!(v, (-20.0_f64).exp(), epsilon = 1e-10);
    let scaled = Contour { abs_tol: 1e-8 * (-20.0_f64).exp(), ..Contour::default() };
    let v = ihat_eval(&spec, 20.0, &scaled).unwrap();
    assert_relative_eq!(v, (-20.0_f64).exp(), max_relative = 1e-6);
}

#[test]
fn report_accounts_for_error_and_nodes() {
    let spec = gamma_spec();
    let contour = Contour::default();
    for z in [0.7, 1.0, 3.0] {
        let rep = ihat_eval_report(&spec, z, &contour).unwrap();
        assert!((rep.value - (-z).exp()).abs() <= rep.est_error.max(1e-12));
        assert!(rep.est_error <= contour.abs_tol);
        assert!(rep.nodes >= 24);
        assert!(rep.half_range > 1.0);
    }
}

#[test]
fn beta_kernel_matches_closed_form() {
    // Gamma(1.5) and Gamma(4)
    let gammas = [(1.5, 0.886226925452758014), (2.0, 1.0), (4.0, 6.0)];
    for (beta, gamma_beta) in gammas {
        let spec = beta_kernel(beta);
        for z in [0.1, 0.5, 0.9] {
            let expect = (1.0_f64 - z).powf(beta - 1.0) / gamma_beta;
            let contour = Contour {
                abs_tol: 0.5e-6 * expect,
                max_nodes: 1 << 21,
                ..Contour::default()
            };
            let v = ihat_eval(&spec, z, &contour).unwrap();
            assert_relative_eq!(v, expect, max_relative = 1e-6);
        }
    }
}

#[test]
fn value_is_shift_invariant() {
    let spec = gamma_spec();
    let expect = (-1.3_f64).exp();
    for shift in [0.4, 1.0, 2.7, 5.0] {
        let contour = Contour { shift: Some(shift), ..Contour::default() };
        let v = ihat_eval(&spec, 1.3, &contour).unwrap();
        assert_abs_diff_eq!(v, expect, epsilon = 10.0 * contour.abs_tol);
    }
}

#[test]
fn value_is_stable_under_initial_width_change() {
    let spec = gamma_spec();
    let base = Contour::default();
    let halved = Contour { initial_halfwidth: 0.5, ..base };
    let v1 = ihat_eval(&spec, 2.2, &base).unwrap();
    let v2 = ihat_eval(&spec, 2.2, &halved).unwrap();
    assert_abs_diff_eq!(v1, v2, epsilon = 10.0 * base.abs_tol);
}

#[test]
fn small_z_slope_matches_leading_pole() {
    // chi(s) = Gamma(2 + s) Gamma(3 - s), a quotient-type kernel; the
    // rightmost pole of the lower head sits at s = -2, so the value grows
    // like z^2 as z -> 0
    let spec = IhatSpec::new(
        1,
        1,
        vec![GammaFactor::new(-2.0, 1.0, 1.0)],
        vec![GammaFactor::new(2.0, 1.0, 1.0)],
    )
    .unwrap();
    let contour = Contour::default();
    let v3 = ihat_eval(&spec, 1e-3, &contour).unwrap();
    let v4 = ihat_eval(&spec, 1e-4, &contour).unwrap();
    let slope = (v3 / v4).ln() / 10.0_f64.ln();
    assert!((slope - 2.0).abs() < 0.05, "slope {slope} should be near 2");
}

#[test]
fn negative_delta1_is_divergent() {
    let spec = IhatSpec::new(
        1,
        0,
        vec![GammaFactor::new(0.5, 1.0, 3.0)],
        vec![GammaFactor::new(0.0, 1.0, 1.0)],
    )
    .unwrap();
    assert!(spec.delta1() < 0.0);
    match ihat_eval(&spec, 1.0, &Contour::default()) {
        Err(IhatError::Convergence(msg)) => {
            assert!(msg.contains("delta1"), "message should name delta1: {msg}")
        }
        other => panic!("expected a convergence error, got {other:?}"),
    }
}

#[test]
fn slow_algebraic_decay_is_rejected() {
    // beta kernel with beta = 1.05 decays like t^{-1.05}, too slow to bound
    let spec = beta_kernel(1.05);
    match ihat_eval(&spec, 0.5, &Contour::default()) {
        Err(IhatError::Convergence(msg)) => {
            assert!(msg.contains("decays"), "unexpected message: {msg}")
        }
        other => panic!("expected a convergence error, got {other:?}"),
    }
}

#[test]
fn explicit_shift_must_sit_inside_strip() {
    let spec = gamma_spec();
    let contour = Contour { shift: Some(-0.5), ..Contour::default() };
    match ihat_eval(&spec, 1.0, &contour) {
        Err(IhatError::Strip(_)) => {}
        other => panic!("expected a strip error, got {other:?}"),
    }
}

#[test]
fn tiny_budget_is_an_error() {
    let spec = gamma_spec();
    let contour = Contour { max_nodes: 64, ..Contour::default() };
    match ihat_eval(&spec, 1.0, &contour) {
        Err(IhatError::Convergence(msg)) => {
            assert!(msg.contains("node budget"), "unexpected message: {msg}")
        }
        other => panic!("expected a budget error, got {other:?}"),
    }
}

#[test]
fn invalid_inputs_are_domain_errors() {
    let spec = gamma_spec();
    for z in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        match ihat_eval(&spec, z, &Contour::default()) {
            Err(IhatError::Domain(_)) => {}
            other => panic!("expected a domain error at z = {z}, got {other:?}"),
        }
    }
    let bad = Contour { abs_tol: 0.0, ..Contour::default() };
    assert!(matches!(ihat_eval(&spec, 1.0, &bad), Err(IhatError::Domain(_))));
}
