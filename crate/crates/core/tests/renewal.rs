use std::f64::consts::PI;
use std::sync::LazyLock;

use approx::assert_relative_eq;
use levykernel::renewal::{check_v_scaling, check_vpsi, kappa, surrogate_band, RenewalFunction};
use levykernel::special::gamma_fn;
use levykernel::symbols::{catalog, ModelSpec, SymbolEvaluator};
use proptest::prelude::*;

/// `exp((1/π) ∫_0^{π/2} ln ψ(s tan φ) dφ)` by the midpoint rule, which
/// tolerates the logarithmic endpoint singularities.
fn kappa_oracle(ev: &SymbolEvaluator, s: f64) -> f64 {
    let n = 400_000;
    let h = 0.5 * PI / n as f64;
    let sum: f64 = (0..n).map(|i| ev.psi(s * ((i as f64 + 0.5) * h).tan()).ln()).sum();
    (sum * h / PI).exp()
}

#[test]
fn stable_renewal_function_is_a_power() {
    for alpha in [0.5, 1.0, 1.5] {
        let ev = SymbolEvaluator::new(ModelSpec::stable(alpha, 1)).unwrap();
        let v = RenewalFunction::build(&ev).unwrap();
        for r in [0.25f64, 1.0, 4.0] {
            let exact = r.powf(alpha / 2.0) / gamma_fn(1.0 + alpha / 2.0);
            assert_relative_eq!(v.v(r), exact, max_relative = 1e-4);
        }
    }
    let cauchy = RenewalFunction::build(&SymbolEvaluator::new(ModelSpec::stable(1.0, 2)).unwrap()).unwrap();
    for r in [0.25, 1.0, 4.0] {
        assert_relative_eq!(cauchy.v(r), 2.0 * (r / PI).sqrt(), max_relative = 1e-4);
    }
}

#[test]
fn ladder_exponent_matches_direct_quadrature() {
    for spec in [ModelSpec::relativistic(1.0, 1), ModelSpec::subordinate_bm(1.5, 1.0, 1), ModelSpec::stable(0.7, 1)] {
        let ev = SymbolEvaluator::new(spec).unwrap();
        for s in [0.1, 1.0, 10.0] {
            assert_relative_eq!(kappa(&ev, s).unwrap(), kappa_oracle(&ev, s), max_relative = 1e-5);
        }
    }
}

#[test]
fn relativistic_renewal_function_interpolates_between_regimes() {
    // small r: like the Cauchy process; large r: like Brownian motion with
    // ψ(ξ) ≈ ξ²/2, whose V(r) = √2 r
    let ev = SymbolEvaluator::new(ModelSpec::relativistic(1.0, 1)).unwrap();
    let v = RenewalFunction::build(&ev).unwrap();
    assert_relative_eq!(v.v(1e-5), 2.0 * (1e-5 / PI).sqrt(), max_relative = 2e-2);
    assert_relative_eq!(v.v(1e3) / 1e3, 2f64.sqrt(), max_relative = 2e-2);
}

#[test]
fn comparability_constants_are_finite_for_the_catalog() {
    let grid = levykernel::interp::log_grid(1e-3, 1e2, 30);
    for d in [1, 2] {
        for spec in catalog(d) {
            let ev = SymbolEvaluator::new(spec).unwrap();
            let v = RenewalFunction::build(&ev).unwrap();
            let (c1, c2) = check_vpsi(&ev, &v, &grid);
            assert!(c1 > 0.0 && c2.is_finite(), "{}: [{c1}, {c2}]", spec.label());
            let (lo, hi) = surrogate_band(&ev, &v, &grid);
            assert!(lo > 0.0 && hi.is_finite(), "{}", spec.label());
            let scale = check_v_scaling(&ev, &v, &levykernel::interp::log_grid(1e-3, 1.0, 10));
            assert!(scale > 0.0 && scale.is_finite(), "{}", spec.label());
        }
    }
}

#[test]
fn condition_h_constant_grows_with_the_radius() {
    let ev = SymbolEvaluator::new(ModelSpec::trunc_stable_exp(1.0, 1)).unwrap();
    let v = RenewalFunction::build(&ev).unwrap();
    let hs: Vec<f64> = [0.5, 1.0, 2.0, 4.0].iter().map(|&r| v.h(r).value).collect();
    assert!(hs.iter().all(|h| *h >= 1.0 && h.is_finite()));
    assert!(hs.windows(2).all(|w| w[1] >= w[0]));
}

static FUNCTIONS: LazyLock<Vec<RenewalFunction>> = LazyLock::new(|| {
    catalog(1).into_iter().map(|s| RenewalFunction::build(&SymbolEvaluator::new(s).unwrap()).unwrap()).collect()
});

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn subadditive_and_increasing(i in 0usize..4, la in -4.0f64..3.0, lb in -4.0f64..3.0) {
        let v = &FUNCTIONS[i];
        let (a, b) = (10f64.powf(la), 10f64.powf(lb));
        prop_assert!(v.v(a + b) <= (v.v(a) + v.v(b)) * (1.0 + 1e-9));
        prop_assert!(v.v(a.max(b)) >= v.v(a.min(b)));
        prop_assert!(v.v_prime(a) > 0.0);
    }

    #[test]
    fn inverse_round_trip(i in 0usize..4, lr in -4.0f64..3.0) {
        let v = &FUNCTIONS[i];
        let r = 10f64.powf(lr);
        prop_assert!((v.v_inv(v.v(r)) / r - 1.0).abs() < 1e-6);
    }
}
