use cxpath::integrators::{single_step, Counters, Jacobian, MethodSpec, NewtonConfig, Rhs};
use cxpath::order_conditions::SchemeDescriptor;
use cxpath::paths::{lookup, ComplexPath, ValidityClass};
use cxpath::stability::{
    brute_force_k, optimize_free_coefficients, raster_region, ray_extent, stability_function,
    weights_from_polynomial, Objective, OptimizeSettings, StabilityPolynomial, StabilityVariant, Window,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn neg_real(phi: &StabilityPolynomial<f64>) -> f64 {
    ray_extent(phi, c(-1.0, 0.0)).unwrap().extent
}

fn ray_12() -> Complex64 {
    c(-1.0, -2.0) / 5f64.sqrt()
}

struct Linear(Complex64);

impl Rhs<f64> for Linear {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, _t: Complex64, y: &[Complex64], out: &mut [Complex64]) {
        out[0] = self.0 * y[0];
    }

    fn jacobian(&self, _t: Complex64, _y: &[Complex64]) -> Option<Jacobian<f64>> {
        Some(Jacobian::Dense { n: 1, data: vec![self.0] })
    }
}

fn random_path(rng: &mut ChaCha8Rng, n: usize) -> ComplexPath<f64> {
    let mut w: Vec<Complex64> = (0..n - 1)
        .map(|_| c(rng.gen_range(-0.5..1.0), rng.gen_range(-0.7..0.7)))
        .collect();
    let rest = c(1.0, 0.0) - w.iter().sum::<Complex64>();
    w.push(rest);
    ComplexPath::new(w, 1, ValidityClass::Nonlinear, false).unwrap()
}

#[test]
fn linear_path_extents_on_the_negative_axis() {
    assert_eq!(neg_real(&stability_function(&lookup("euler-1").unwrap(), StabilityVariant::Explicit)), 2.0);
    let two = stability_function(&lookup("complex-2-linear").unwrap(), StabilityVariant::Explicit);
    assert!((neg_real(&two) - 2.0).abs() < 1e-9);
    let three = stability_function(&lookup("complex-3-linear").unwrap(), StabilityVariant::Explicit);
    assert!((neg_real(&three) - 2.5127).abs() < 1e-3);
    let rk3 = StabilityPolynomial::<f64>::consistent(3, &[]);
    assert!((neg_real(&rk3) - neg_real(&three)).abs() < 1e-9);
}

#[test]
fn optimised_cubic_coefficients() {
    let s = OptimizeSettings::default();
    let p1 = optimize_free_coefficients(3, 1, Objective::NegativeRealAxis, false, &s).unwrap();
    let p2 = optimize_free_coefficients(3, 2, Objective::NegativeRealAxis, false, &s).unwrap();
    let p3 = neg_real(&StabilityPolynomial::consistent(3, &[]));
    assert!(p1.extent >= p2.extent && p2.extent >= p3, "{} {} {p3}", p1.extent, p2.extent);
    let ratio = p1.extent / p2.extent;
    assert!((2.5..=3.5).contains(&ratio), "ratio {ratio}");
    // 1st-order optimum has real roots, i.e. real time steps
    let w = weights_from_polynomial(&p1.polynomial).unwrap();
    assert!(w.weights().iter().all(|z| z.im.abs() < 1e-6), "{:?}", w.weights());

    let (k_oracle, e_oracle) = brute_force_k(2, Objective::NegativeRealAxis, 0.0, 0.2, 1e-4).unwrap();
    assert!((p2.free[0].re - k_oracle).abs() < 2e-4);
    assert!(p2.extent >= e_oracle - 1e-6);

    let ray = Objective::Ray([-1.0, -2.0]);
    let real_ray = optimize_free_coefficients(3, 2, ray, false, &s).unwrap();
    assert!((real_ray.free[0].re - 0.1134).abs() < 5e-3, "k = {}", real_ray.free[0]);
    let (k_ray, _) = brute_force_k(2, ray, 0.0, 0.2, 1e-4).unwrap();
    assert!((real_ray.free[0].re - k_ray).abs() < 2e-4);

    let complex_ray = optimize_free_coefficients(3, 2, ray, true, &s).unwrap();
    assert!(complex_ray.extent > real_ray.extent);
}

#[test]
fn complex_cubic_coefficient_extends_the_ray() {
    let real = StabilityPolynomial::consistent(2, &[c(0.1134, 0.0)]);
    let complex = StabilityPolynomial::consistent(2, &[c(0.1134, -0.06)]);
    let (er, ec) = (
        ray_extent(&real, ray_12()).unwrap().extent,
        ray_extent(&complex, ray_12()).unwrap().extent,
    );
    assert!(ec > er, "{ec} vs {er}");
}

#[test]
fn amplification_factor_matches_one_integrator_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let newton = NewtonConfig::default();
    for _ in 0..200 {
        let n = rng.gen_range(1..=4);
        let path = random_path(&mut rng, n);
        let lambda = c(rng.gen_range(-3.0..0.5), rng.gen_range(-3.0..3.0));
        let dt = rng.gen_range(0.01..0.5);
        let y0 = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        for (variant, scheme) in [
            (StabilityVariant::Explicit, SchemeDescriptor::euler(&path)),
            (StabilityVariant::ImplicitMidpoint, SchemeDescriptor::implicit_midpoint(&path)),
            (StabilityVariant::BackwardEuler, SchemeDescriptor::backward_euler(&path)),
        ] {
            let phi = stability_function(&path, variant);
            let expected = phi.eval(lambda * dt) * y0;
            let method = MethodSpec::Scheme(scheme);
            let mut counters = Counters::default();
            let got = single_step(&Linear(lambda), c(0.0, 0.0), &[y0], dt, &method, &newton, &mut counters)
                .unwrap()[0];
            let rel = (got - expected).norm() / expected.norm().max(1e-300);
            assert!(rel < 1e-13, "{variant:?}: rel {rel:e}");
        }
    }
}

#[test]
fn weights_polynomial_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.gen_range(1..=5);
        let path = random_path(&mut rng, n);
        let phi = stability_function(&path, StabilityVariant::Explicit);
        let back = weights_from_polynomial(&phi).unwrap();
        let mut unused: Vec<Complex64> = back.weights().to_vec();
        for w in path.weights() {
            let (i, d) = unused
                .iter()
                .enumerate()
                .map(|(i, u)| (i, (u - w).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(d < 1e-10, "weight {w} missing, nearest at {d:e}");
            unused.remove(i);
        }
    }
}

#[test]
fn real_coefficient_regions_are_conjugate_symmetric() {
    let window = Window::new(-4.0, 1.0, -3.0, 3.0).unwrap();
    for name in ["euler-1", "complex-2-linear", "complex-3-linear", "implicit-midpoint-2"] {
        let path = lookup(name).unwrap();
        let variant = match path.validity_class() {
            ValidityClass::ImplicitMidpoint => StabilityVariant::ImplicitMidpoint,
            _ => StabilityVariant::Explicit,
        };
        let r = raster_region(&stability_function(&path, variant), window, 101, 121).unwrap();
        assert!(r.is_conjugate_symmetric(), "{name}");
    }
    let complex = StabilityPolynomial::consistent(2, &[c(0.1134, -0.06)]);
    let r = raster_region(&complex, window, 101, 121).unwrap();
    assert!(!r.is_conjugate_symmetric());
}

#[test]
fn consistency_pins_leading_coefficients() {
    let phi = StabilityPolynomial::<f64>::consistent(2, &[c(0.3, 0.1), c(0.01, 0.0)]);
    let cf = phi.coefficients().unwrap();
    assert_eq!(cf.len(), 5);
    assert_eq!(cf[2], c(0.5, 0.0));
    assert_eq!(cf[3], c(0.3, 0.1));
    assert!(StabilityPolynomial::<f64>::explicit(vec![c(2.0, 0.0), c(1.0, 0.0)]).is_err());
}
