use cxpath::order_conditions::{
    exact_flow_jet, jet::Jet, order_report, order_report_with, report::jet_residuals,
    scheme_jet, scheme_jet_with_picard_limit, solve_composite_rk23, CompositeSettings,
    Indeterminate, Monomial, ReportOptions, Restriction, SchemeDescriptor, SchemeKind,
};
use cxpath::paths::{lookup, ValidityClass};
use num_complex::Complex64;
use proptest::prelude::*;

fn monomial(parts: &[(usize, usize, u32)]) -> Monomial {
    parts.iter().fold(Monomial::ONE, |acc, &(a, b, e)| {
        (0..e).fold(acc, |acc, _| acc.mul(Monomial::var(Indeterminate::new(a, b))))
    })
}

#[test]
fn implicit_midpoint_fourth_order_error_is_imaginary() {
    let scheme = SchemeDescriptor::implicit_midpoint(&lookup("implicit-midpoint-2").unwrap());
    let s = scheme_jet(&scheme, 4, Restriction::General).unwrap();
    let e = exact_flow_jet::<f64>(4, Restriction::General).unwrap();
    let res: Vec<_> = jet_residuals(&s, &e);
    let below: f64 = res.iter().filter(|r| r.h_power < 4).map(|r| r.residual.norm()).fold(0.0, f64::max);
    assert!(below < 1e-12, "{below}");
    let h4: Vec<_> = res.iter().filter(|r| r.h_power == 4).collect();
    let max_re = h4.iter().map(|r| r.residual.re.abs()).fold(0.0, f64::max);
    let max_im = h4.iter().map(|r| r.residual.im.abs()).fold(0.0, f64::max);
    assert!(max_re < 1e-12, "{max_re}");
    assert!(max_im > 1e-3, "{max_im}");
    // F00^3 F03 enters as (1 + 0.096225i)/4!
    let c = s.coefficient(4).coefficient(monomial(&[(0, 0, 3), (0, 3, 1)]));
    assert!((c.re - 1.0 / 24.0).abs() < 1e-12);
    assert!((c.im * 24.0 - 0.096225).abs() < 1e-6);
    let r = order_report(&scheme, 5, 1e-12).unwrap();
    assert_eq!(r.achieved_order, 3);
    assert_eq!(r.achieved_order_relaxed, 4);
}

#[test]
fn picard_gains_one_order_per_iteration() {
    for name in ["implicit-midpoint-2", "backward-euler-3"] {
        let path = lookup(name).unwrap();
        let scheme = if name.starts_with("implicit") {
            SchemeDescriptor::implicit_midpoint(&path)
        } else {
            SchemeDescriptor::backward_euler(&path)
        };
        let fixed = scheme_jet(&scheme, 5, Restriction::General).unwrap();
        for k in 0..=5 {
            let partial = scheme_jet_with_picard_limit(&scheme, 5, Restriction::General, k).unwrap();
            assert!(partial.truncated(k).max_difference(&fixed.truncated(k)) < 1e-13, "{name} k={k}");
        }
    }
}

#[test]
fn composite_search_reaches_fifth_order() {
    let t = std::time::Instant::now();
    let sol = solve_composite_rk23(&CompositeSettings::default()).unwrap();
    eprintln!("start {} residual {:e} in {:?}", sol.start_index, sol.residual_inf, t.elapsed());
    assert!(sol.residual_inf < 1e-10);
    let sum = sol.coefficients.step_sum();
    assert!((sum.re - 1.0).abs() < 1e-12 && sum.im.abs() < 1e-12);
    let r = order_report_with(
        &sol.scheme,
        5,
        &ReportOptions { restriction: Restriction::Autonomous, tolerance: 1e-9, relaxed_from: 3 },
    )
    .unwrap();
    assert_eq!(r.achieved_order_relaxed, 5);
}

#[test]
fn real_composite_cannot_reach_fifth_order() {
    let settings = CompositeSettings { real_only: true, starts: 64, tolerance: 1e-6, ..Default::default() };
    match solve_composite_rk23(&settings) {
        Ok(sol) => panic!("real coefficients reached {:e}", sol.residual_inf),
        Err(cxpath::error::Error::Numeric { best_residual, .. }) => {
            assert!(best_residual.map_or(true, |r| r > 1e-6))
        }
        Err(e) => panic!("unexpected error {e}"),
    }
}

fn product_expansion(weights: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &w in weights {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, &a) in c.iter().enumerate() {
            next[i] += a;
            next[i + 1] += a * w;
        }
        c = next;
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]
    #[test]
    fn linear_jet_matches_product(parts in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..5)) {
        let mut w: Vec<Complex64> = parts.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let s: Complex64 = w.iter().sum();
        w.push(Complex64::new(1.0, 0.0) - s);
        let scheme = SchemeDescriptor::new(SchemeKind::EulerPath { weights: w.clone() }, false).unwrap();
        let order = w.len().min(6);
        let jet: Jet<f64> = scheme_jet(&scheme, order, Restriction::Linear).unwrap();
        let expected = product_expansion(&w);
        for k in 1..=order {
            // y0·λ^k corresponds to F00·F01^(k−1)
            let m = monomial(&[(0, 0, 1), (0, 1, k as u32 - 1)]);
            let got = jet.coefficient(k).coefficient(m);
            prop_assert!((got - expected[k]).norm() < 1e-12);
            prop_assert_eq!(jet.coefficient(k).len(), usize::from(expected[k].norm() > 0.0));
        }
    }
}

#[test]
fn nonlinear_library_path_needs_projection_flag() {
    let path = lookup("complex-3-nonlinear").unwrap();
    assert_eq!(path.validity_class(), ValidityClass::Nonlinear);
    let mut scheme = SchemeDescriptor::euler(&path);
    scheme.real_projection = false;
    let r = order_report(&scheme, 4, 1e-10).unwrap();
    assert_eq!(r.achieved_order_relaxed, r.achieved_order);
}
