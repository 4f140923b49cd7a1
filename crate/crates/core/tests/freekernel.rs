use std::f64::consts::PI;
use std::sync::{Arc, LazyLock};

use approx::assert_relative_eq;
use levykernel::freekernel::{
    check_unimodal, p, standard_r_grid, standard_t_grid, total_mass, FreeKernel, KernelTable, RadialDensity,
};
use levykernel::symbols::{catalog, ModelSpec, SymbolEvaluator};
use proptest::prelude::*;

fn model(spec: ModelSpec) -> Arc<SymbolEvaluator> {
    Arc::new(SymbolEvaluator::new(spec).unwrap())
}

/// `K_ν(z) = ∫_0^∞ e^{-z cosh u} cosh(νu) du`, trapezoid rule (spectrally
/// accurate for this integrand).
fn bessel_k(nu: f64, z: f64) -> f64 {
    let h: f64 = 1e-3;
    let mut s = 0.5 * (-z).exp();
    let mut u: f64 = h;
    loop {
        let term = (-z * u.cosh()).exp() * (nu * u).cosh();
        s += term;
        if term < 1e-300 || term < s * 1e-18 {
            break;
        }
        u += h;
    }
    s * h
}

/// Relativistic kernel with mass `m`:
/// `2 (m/2π)^{(d+1)/2} t e^{mt} K_{(d+1)/2}(mρ) / ρ^{(d+1)/2}`, `ρ = √(r²+t²)`.
fn relativistic_oracle(m: f64, d: usize, t: f64, r: f64) -> f64 {
    let o = (d as f64 + 1.0) / 2.0;
    let rho = (r * r + t * t).sqrt();
    2.0 * (m / (2.0 * PI)).powf(o) * t * (m * t).exp() * bessel_k(o, m * rho) / rho.powf(o)
}

#[test]
fn cauchy_in_one_two_and_three_dimensions() {
    for d in 1..=3 {
        let k = FreeKernel::new(model(ModelSpec::stable(1.0, d))).unwrap();
        for &t in &standard_t_grid() {
            for &r in &standard_r_grid(1.0) {
                let s = t * t + r * r;
                let exact = match d {
                    1 => t / (PI * s),
                    2 => t / (2.0 * PI * s.powf(1.5)),
                    _ => t / (PI * PI * s * s),
                };
                assert_relative_eq!(k.p(t, r).unwrap(), exact, max_relative = 1e-8);
            }
        }
    }
}

#[test]
fn cauchy_lift_to_three_dimensions() {
    let lifted = RadialDensity::new(model(ModelSpec::stable(1.0, 1)), 3).unwrap();
    for &t in &standard_t_grid() {
        for &r in &standard_r_grid(1.0) {
            let exact = t / (PI * PI * (t * t + r * r).powi(2));
            assert_relative_eq!(lifted.p(t, r).unwrap(), exact, max_relative = 1e-6);
        }
    }
}

#[test]
fn relativistic_closed_form() {
    for d in [1, 2, 3] {
        let k = FreeKernel::new(model(ModelSpec::relativistic(1.0, d))).unwrap();
        for t in [0.05, 0.5, 2.0] {
            for r in [0.0, 0.03, 0.4, 2.0, 6.0] {
                assert_relative_eq!(k.p(t, r).unwrap(), relativistic_oracle(1.0, d, t, r), max_relative = 1e-7);
            }
        }
    }
}

#[test]
fn relativistic_radial_derivative() {
    let k = FreeKernel::new(model(ModelSpec::relativistic(0.5, 2))).unwrap();
    for (t, r) in [(0.1, 0.2), (1.0, 1.5)] {
        let h = 1e-4 * r;
        let fd = (relativistic_oracle(0.5, 2, t, r + h) - relativistic_oracle(0.5, 2, t, r - h)) / (2.0 * h);
        assert_relative_eq!(k.dp_dr(t, r).unwrap(), fd, max_relative = 1e-5);
    }
}

#[test]
fn densities_have_unit_mass() {
    for spec in catalog(1) {
        let k = FreeKernel::new(model(spec)).unwrap();
        let m = total_mass(&k, 0.5, 100.0).unwrap();
        assert!((m - 1.0).abs() < 1e-3, "{}: {m}", spec.label());
    }
}

#[test]
fn densities_are_radially_decreasing() {
    let rs = levykernel::interp::log_grid(1e-2, 10.0, 25);
    for spec in catalog(2) {
        let k = FreeKernel::new(model(spec)).unwrap();
        for t in [0.05, 1.0] {
            assert!(check_unimodal(&k, t, &rs, 1e-9).unwrap(), "{} at t = {t}", spec.label());
        }
    }
}

#[test]
fn general_table_tracks_the_closed_form() {
    let ev = model(ModelSpec::relativistic(1.0, 1));
    let tab = KernelTable::build(ev, 1e-2, 1.0, 5.0).unwrap();
    for (s, r) in [(0.013, 0.01), (0.2, 0.7), (0.9, 4.0)] {
        assert_relative_eq!(tab.eval(s, r), relativistic_oracle(1.0, 1, s, r), max_relative = 1e-3);
    }
}

static STABLE: LazyLock<FreeKernel> = LazyLock::new(|| FreeKernel::new(model(ModelSpec::stable(1.5, 2))).unwrap());

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stable_self_similarity(lt in -2.0f64..0.5, lr in -2.0f64..0.5) {
        // p_t(r) = t^{-d/α} p_1(r t^{-1/α})
        let (t, r) = (10f64.powf(lt), 10f64.powf(lr));
        let lhs = STABLE.p(t, r).unwrap();
        let rhs = t.powf(-2.0 / 1.5) * STABLE.p(1.0, r * t.powf(-1.0 / 1.5)).unwrap();
        prop_assert!((lhs / rhs - 1.0).abs() < 1e-7);
    }

    #[test]
    fn reflection_difference_is_nonnegative(x1 in 0.01f64..1.0, y1 in 0.01f64..1.0, x2 in -1.0f64..1.0, y2 in -1.0f64..1.0, t in 0.05f64..1.0) {
        let diff = STABLE.diff_free(t, &[x1, x2], &[y1, y2]).unwrap();
        prop_assert!(diff >= -1e-12);
    }
}

#[test]
fn bad_arguments_are_errors() {
    let ev = model(ModelSpec::stable(1.0, 1));
    assert!(p(&ev, -1.0, 1.0).is_err());
    assert!(p(&ev, 1.0, f64::NAN).is_err());
}
