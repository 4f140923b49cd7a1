use std::f64::consts::PI;
use std::sync::LazyLock;

use approx::assert_relative_eq;
use levykernel::symbols::{catalog, estimate_scaling, scaling_grid, stable_constant, ModelSpec, SymbolEvaluator};
use proptest::prelude::*;

/// Composite Simpson on `[a, b]` with `n` (even) panels.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `2 ∫_0^∞ (1 - cos ξx) ν(x) dx` in dimension one: log-spaced below 1,
/// linear up to `cut`, the remaining tail taken without the cosine.
fn psi_by_quadrature(ev: &SymbolEvaluator, xi: f64, cut: f64) -> f64 {
    let small = simpson(
        |u| {
            let x = u.exp();
            2.0 * (0.5 * xi * x).sin().powi(2) * ev.nu(x) * x
        },
        (1e-12f64).ln(),
        0.0,
        4000,
    );
    let mid = simpson(|x| 2.0 * (0.5 * xi * x).sin().powi(2) * ev.nu(x), 1.0, cut, 200_000);
    let tail = simpson(|u| ev.nu(u.exp()) * u.exp(), cut.ln(), (cut * 1e6).ln(), 20_000);
    2.0 * (small + mid + tail)
}

#[test]
fn stable_constants_match_known_densities() {
    // Cauchy in one and three dimensions
    assert_relative_eq!(stable_constant(1, 1.0), 1.0 / PI, max_relative = 1e-13);
    assert_relative_eq!(stable_constant(3, 1.0), 1.0 / (PI * PI), max_relative = 1e-13);
    // d = 1, α = 1/2: Γ(3/4)·√2 / (√π |Γ(-1/4)|)
    let g34 = 1.225_416_702_465_177_6;
    let gm14 = 4.901_666_809_860_711;
    assert_relative_eq!(stable_constant(1, 0.5), 2f64.sqrt() * g34 / (PI.sqrt() * gm14), max_relative = 1e-12);
}

#[test]
fn relativistic_exponent_and_density_agree() {
    let ev = SymbolEvaluator::new(ModelSpec::relativistic(1.0, 1)).unwrap();
    for xi in [0.3, 1.0, 3.0] {
        let exact = (xi * xi + 1.0f64).sqrt() - 1.0;
        assert_relative_eq!(ev.psi(xi), exact, max_relative = 1e-14);
        assert_relative_eq!(psi_by_quadrature(&ev, xi, 60.0), exact, max_relative = 1e-6);
    }
}

#[test]
fn subordinate_exponent_and_density_agree() {
    let ev = SymbolEvaluator::new(ModelSpec::subordinate_bm(1.5, 1.0, 1)).unwrap();
    for xi in [0.5, 2.0] {
        let exact = (xi * xi + 1.0f64).powf(0.75) - 1.0;
        assert_relative_eq!(ev.psi(xi), exact, max_relative = 1e-13);
        assert_relative_eq!(psi_by_quadrature(&ev, xi, 60.0), exact, max_relative = 1e-5);
    }
}

#[test]
fn stable_exponent_from_its_density() {
    let ev = SymbolEvaluator::new(ModelSpec::stable(1.5, 1)).unwrap();
    assert_relative_eq!(psi_by_quadrature(&ev, 2.0, 200.0), 2f64.powf(1.5), max_relative = 1e-5);
}

#[test]
fn truncated_stable_exponent_from_its_density() {
    let ev = SymbolEvaluator::new(ModelSpec::trunc_stable_exp(0.5, 1)).unwrap();
    let oracle = psi_by_quadrature(&ev, 3.0, 40.0);
    assert_relative_eq!(ev.psi(3.0), oracle, max_relative = 1e-6);
    assert_relative_eq!(ev.psi_exact(3.0).unwrap(), oracle, max_relative = 1e-6);
}

#[test]
fn density_is_continuous_at_the_truncation_radius() {
    let ev = SymbolEvaluator::new(ModelSpec::trunc_stable_exp(1.0, 2)).unwrap();
    assert_relative_eq!(ev.nu(1.0 - 1e-12), ev.nu(1.0 + 1e-12), max_relative = 1e-9);
}

#[test]
fn scaling_constants_are_positive_for_the_catalog() {
    for spec in catalog(2) {
        let ev = SymbolEvaluator::new(spec).unwrap();
        let (_, _, theta0) = ev.exponents();
        let cert = estimate_scaling(&ev, theta0, &scaling_grid(theta0, 1e3, 1e3, 10)).unwrap();
        assert!(cert.c_lower > 0.0 && cert.c_upper.is_finite(), "{}", spec.label());
    }
}

#[test]
fn invalid_models_are_rejected() {
    assert!(SymbolEvaluator::new(ModelSpec::stable(2.0, 1)).is_err());
    assert!(SymbolEvaluator::new(ModelSpec::relativistic(0.0, 1)).is_err());
    assert!(SymbolEvaluator::new(ModelSpec::stable(1.0, 0)).is_err());
    let ev = SymbolEvaluator::new(ModelSpec::stable(1.0, 1)).unwrap();
    assert!(ev.nu_checked(0.0).is_err());
}

static EVALUATORS: LazyLock<Vec<SymbolEvaluator>> =
    LazyLock::new(|| catalog(1).into_iter().chain(catalog(3)).map(|s| SymbolEvaluator::new(s).unwrap()).collect());

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn envelope_sandwich(i in 0usize..8, lr in -4.0f64..4.0) {
        let ev = &EVALUATORS[i];
        let r = 10f64.powf(lr);
        let (p, ps) = (ev.psi(r), ev.psi_star(r));
        prop_assert!(p <= ps * (1.0 + 1e-12));
        prop_assert!(ps <= PI * PI * p);
    }

    #[test]
    fn generalized_inverse(i in 0usize..8, lu in -4.0f64..4.0) {
        let ev = &EVALUATORS[i];
        let u = 10f64.powf(lu);
        let y = ev.psi_inv(u);
        prop_assert!(ev.psi_star(y) >= u * (1.0 - 1e-12));
        prop_assert!(ev.psi_star(y * (1.0 - 1e-9)) <= u * (1.0 + 1e-9));
    }

    #[test]
    fn density_is_radially_nonincreasing(i in 0usize..8, lr in -3.0f64..1.5, step in 1.001f64..3.0) {
        let ev = &EVALUATORS[i];
        let r = 10f64.powf(lr);
        prop_assert!(ev.nu(r * step) <= ev.nu(r));
        prop_assert!(ev.nu_prime(r) <= 0.0);
    }
}
