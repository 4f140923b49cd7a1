//! Special functions: Bessel functions of the first kind for the integer and
//! half-integer orders that radial Fourier inversion needs in dimensions 1..=6,
//! their positive zeros, and the Macdonald function through its integral
//! representation.

use std::f64::consts::{FRAC_PI_4, PI};

use statrs::function::gamma::{gamma, ln_gamma};

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Largest supported value of `2ν` for the normalized Bessel kernel.
pub const MAX_TWO_NU: i32 = 4;

pub fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}

pub fn ln_gamma_fn(x: f64) -> f64 {
    ln_gamma(x)
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Volume of the unit ball in `R^d`.
pub fn ball_volume(d: usize) -> f64 {
    sphere_area(d) / d as f64
}

fn poly(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(0.0, |acc, &c| acc * x + c)
}

// Leading coefficient 1 is implicit.
fn poly1(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(1.0, |acc, &c| acc * x + c)
}

// Rational approximations from the Cephes library.
mod j0c {
    pub const DR1: f64 = 5.783185962946784;
    pub const DR2: f64 = 30.471262343662087;
    pub static RP: [f64; 4] = [
        -4.794432209782018e9,
        1.9561749194655657e12,
        -2.4924834436096772e14,
        9.708622510473064e15,
    ];
    pub static RQ: [f64; 8] = [
        4.99563147152651e2,
        1.737854016763747e5,
        4.844096583399621e7,
        1.1185553704535683e10,
        2.112775201154892e12,
        3.1051822985742256e14,
        3.1812195594320496e16,
        1.7108629408104315e18,
    ];
    pub static PP: [f64; 7] = [
        7.969367292973471e-4,
        8.283523921074408e-2,
        1.239533716464143,
        5.447250030587687,
        8.74716500199817,
        5.303240382353949,
        1.0,
    ];
    pub static PQ: [f64; 7] = [
        9.244088105588637e-4,
        8.562884743544745e-2,
        1.2535274390105895,
        5.470977403304171,
        8.761908832370695,
        5.306052882353947,
        1.0,
    ];
    pub static QP: [f64; 8] = [
        -1.1366383889846916e-2,
        -1.2825271867050931,
        -1.9553954425773597e1,
        -9.320601521237683e1,
        -1.7768116798048806e2,
        -1.4707750515495118e2,
        -5.141053267665993e1,
        -6.050143506007285,
    ];
    pub static QQ: [f64; 7] = [
        6.43178256118178e1,
        8.564300259769806e2,
        3.8824018360540163e3,
        7.240467741956525e3,
        5.930727011873169e3,
        2.0620933166032783e3,
        2.420057402402914e2,
    ];
}

mod j1c {
    pub const Z1: f64 = 1.4681970642123893e1;
    pub const Z2: f64 = 4.92184563216946e1;
    pub static RP: [f64; 4] = [
        -8.999712257055594e8,
        4.5222829799819403e11,
        -7.274942452218183e13,
        3.682957328638529e15,
    ];
    pub static RQ: [f64; 8] = [
        6.208364781180543e2,
        2.5698725675774884e5,
        8.351467914319493e7,
        2.215115954797925e10,
        4.749141220799914e12,
        7.843696078762359e14,
        8.952223361846274e16,
        5.322786203326801e18,
    ];
    pub static PP: [f64; 7] = [
        7.621256162081731e-4,
        7.313970569409176e-2,
        1.1271960812968493,
        5.112079511468076,
        8.424045901417724,
        5.214515986823615,
        1.0,
    ];
    pub static PQ: [f64; 7] = [
        5.713231280725487e-4,
        6.884559087544954e-2,
        1.105142326340617,
        5.073863861286015,
        8.399855543276042,
        5.209828486823619,
        1.0,
    ];
    pub static QP: [f64; 8] = [
        5.108625947501766e-2,
        4.982138729512334,
        7.582382841325453e1,
        3.667796093601508e2,
        7.108563049989261e2,
        5.974896124006136e2,
        2.1168875710057213e2,
        2.5207020585802372e1,
    ];
    pub static QQ: [f64; 7] = [
        7.423732770356752e1,
        1.0564488603826283e3,
        4.986410583376536e3,
        9.562318924047562e3,
        7.997041604473507e3,
        2.8261927851763908e3,
        3.360936078106983e2,
    ];
}

/// Bessel function of the first kind of order zero.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 5.0 {
        let z = x * x;
        if x < 1e-5 {
            return 1.0 - z / 4.0;
        }
        let p = (z - j0c::DR1) * (z - j0c::DR2);
        return p * poly(z, &j0c::RP) / poly1(z, &j0c::RQ);
    }
    let w = 5.0 / x;
    let q = 25.0 / (x * x);
    let p = poly(q, &j0c::PP) / poly(q, &j0c::PQ);
    let q = poly(q, &j0c::QP) / poly1(q, &j0c::QQ);
    let xn = x - FRAC_PI_4;
    (p * xn.cos() - w * q * xn.sin()) * SQRT_2_OVER_PI / x.sqrt()
}

// J1(x)/x, evaluated without dividing on the rational branch.
fn j1_over_x(x: f64) -> f64 {
    let x = x.abs();
    if x <= 5.0 {
        let z = x * x;
        return poly(z, &j1c::RP) / poly1(z, &j1c::RQ) * (z - j1c::Z1) * (z - j1c::Z2);
    }
    bessel_j1(x) / x
}

/// Bessel function of the first kind of order one.
pub fn bessel_j1(x: f64) -> f64 {
    if x < 0.0 {
        return -bessel_j1(-x);
    }
    if x <= 5.0 {
        return x * j1_over_x(x);
    }
    let w = 5.0 / x;
    let z = w * w;
    let p = poly(z, &j1c::PP) / poly(z, &j1c::PQ);
    let q = poly(z, &j1c::QP) / poly1(z, &j1c::QQ);
    let xn = x - 0.75 * PI;
    (p * xn.cos() - w * q * xn.sin()) * SQRT_2_OVER_PI / x.sqrt()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let z = x * x;
        1.0 - z / 6.0 + z * z / 120.0
    } else {
        x.sin() / x
    }
}

/// Normalized Bessel kernel `Λ_ν(x) = x^{-ν} J_ν(x)` with `ν = two_nu / 2`.
///
/// The kernel is entire in `x`; radial Fourier inversion in dimension `dim`
/// uses `two_nu = dim - 2`.
pub fn bessel_kernel(two_nu: i32, x: f64) -> f64 {
    match two_nu {
        -1 => SQRT_2_OVER_PI * x.cos(),
        0 => bessel_j0(x),
        1 => SQRT_2_OVER_PI * sinc(x),
        2 => j1_over_x(x),
        3 => {
            if x.abs() < 0.5 {
                let z = x * x;
                SQRT_2_OVER_PI
                    * (1.0 / 3.0
                        + z * (-1.0 / 30.0 + z * (1.0 / 840.0 + z * (-1.0 / 45360.0 + z / 3991680.0))))
            } else {
                SQRT_2_OVER_PI * (x.sin() - x * x.cos()) / (x * x * x)
            }
        }
        4 => {
            if x.abs() < 2.0 {
                // J2(x)/x^2 = 1/4 Σ (-1)^k (x/2)^{2k} / (k! (k+2)!)
                let q = x * x / 4.0;
                let mut term = 0.5; // 1/(0! 2!)
                let mut sum = term;
                for k in 1..30 {
                    term *= -q / (k as f64 * (k + 2) as f64);
                    sum += term;
                    if term.abs() < 1e-18 * sum.abs() {
                        break;
                    }
                }
                sum / 4.0
            } else {
                (2.0 * bessel_j1(x) / x - bessel_j0(x)) / (x * x)
            }
        }
        _ => panic!("unsupported Bessel order 2nu = {two_nu}"),
    }
}

/// Value of `Λ_ν(0) = 1 / (2^ν Γ(ν + 1))`.
pub fn bessel_kernel_at_zero(two_nu: i32) -> f64 {
    let nu = two_nu as f64 / 2.0;
    1.0 / (2f64.powf(nu) * gamma(nu + 1.0))
}

/// Bessel function `J_ν(x)` for `x > 0` and `2ν ∈ {-1, ..., 4}`; also `J_{-1} = -J_1`.
pub fn bessel_j(two_nu: i32, x: f64) -> f64 {
    match two_nu {
        -2 => -bessel_j1(x),
        0 => bessel_j0(x),
        2 => bessel_j1(x),
        _ => x.powf(two_nu as f64 / 2.0) * bessel_kernel(two_nu, x),
    }
}

/// The `k`-th positive zero (k ≥ 1) of `J_ν`.
pub fn bessel_zero(two_nu: i32, k: usize) -> f64 {
    let kf = k as f64;
    match two_nu {
        -1 => return (kf - 0.5) * PI,
        1 => return kf * PI,
        _ => {}
    }
    let nu = two_nu as f64 / 2.0;
    let mu = 4.0 * nu * nu;
    let beta = (kf + nu / 2.0 - 0.25) * PI;
    let b8 = 8.0 * beta;
    let mut x = beta
        - (mu - 1.0) / b8
        - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8.powi(3))
        - 32.0 * (mu - 1.0) * (83.0 * mu * mu - 982.0 * mu + 3779.0) / (15.0 * b8.powi(5));
    if k <= 12 {
        for _ in 0..8 {
            let j = bessel_j(two_nu, x);
            let dj = bessel_j(two_nu - 2, x) - nu / x * j;
            let step = j / dj;
            x -= step;
            if step.abs() < 1e-15 * x {
                break;
            }
        }
    }
    x
}

/// Spherical average of `cos⟨ξ, x⟩` over `|x| = ρ/|ξ|` in `R^d`, i.e.
/// `Γ(d/2) 2^ν Λ_ν(ρ)` with `ν = d/2 - 1`.
pub fn sphere_avg_cos(d: usize, rho: f64) -> f64 {
    let two_nu = d as i32 - 2;
    let nu = two_nu as f64 / 2.0;
    gamma(nu + 1.0) * 2f64.powf(nu) * bessel_kernel(two_nu, rho)
}

/// `1 - sphere_avg_cos(d, ρ)` evaluated without cancellation for small `ρ`.
pub fn one_minus_sphere_avg_cos(d: usize, rho: f64) -> f64 {
    if d == 1 {
        let s = (rho / 2.0).sin();
        return 2.0 * s * s;
    }
    if rho.abs() < 2.0 {
        // Σ_{k≥1} (-1)^{k+1} (ρ/2)^{2k} Γ(ν+1) / (k! Γ(ν+k+1))
        let nu = d as f64 / 2.0 - 1.0;
        let q = rho * rho / 4.0;
        let mut term = q / (nu + 1.0);
        let mut sum = term;
        for k in 2..60 {
            term *= -q / (k as f64 * (nu + k as f64));
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        1.0 - sphere_avg_cos(d, rho)
    }
}

/// Natural logarithm of the Macdonald function `K_s(r)`, `r > 0`, from
/// `K_s(r) = 2^{-1-s} r^s ∫_0^∞ e^{-u} e^{-r²/(4u)} u^{-1-s} du` with `u = e^v`.
///
/// The integrand in `v` decays double-exponentially on both sides, so the
/// trapezoidal rule converges geometrically.
pub fn ln_macdonald(s: f64, r: f64) -> f64 {
    assert!(r > 0.0, "Macdonald function needs r > 0");
    let q = r * r / 4.0;
    let phase = |v: f64| -v.exp() - q * (-v).exp() - s * v;
    // stationary point: e^{2v} + s e^v - q = 0
    let w = if s >= 0.0 {
        2.0 * q / (s + (s * s + 4.0 * q).sqrt())
    } else {
        (-s + (s * s + 4.0 * q).sqrt()) / 2.0
    };
    let v0 = w.ln();
    let f0 = phase(v0);
    let curv = w + q / w;
    let h = (0.1f64).min(0.3 / curv.sqrt());
    let mut sum = 1.0;
    for dir in [-1.0, 1.0] {
        let mut k = 1;
        loop {
            let term = (phase(v0 + dir * k as f64 * h) - f0).exp();
            sum += term;
            if term < 1e-18 && k > 4 {
                break;
            }
            k += 1;
            if k > 200_000 {
                break;
            }
        }
    }
    (-1.0 - s) * 2f64.ln() + s * r.ln() + f0 + (h * sum).ln()
}

/// Macdonald function `K_s(r)`; underflows to zero for very large `r`.
pub fn macdonald(s: f64, r: f64) -> f64 {
    ln_macdonald(s, r).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn j0_j1_reference_values() {
        // mpmath, 30 digits
        assert_relative_eq!(bessel_j0(0.5), 0.9384698072408129, max_relative = 1e-14);
        assert_relative_eq!(bessel_j0(2.1752), 0.12419296628748941, max_relative = 1e-13);
        assert_relative_eq!(bessel_j1(7.3), 0.08257043049325783, max_relative = 1e-12);
        assert_relative_eq!(bessel_j1(40.0), 0.126038318037585, max_relative = 1e-12);
    }

    #[test]
    fn kernels_match_reference() {
        let cases = [
            (0.5, 0.12241609383473057, 0.2593715746065197),
            (2.1752, 0.08245375705501725, 0.15961999081219243),
            (7.3, -0.004983954060488589, -0.006132427095621696),
            (40.0, -6.656091764737747e-7, 0.0003418765247337917),
        ];
        for (x, j2, j32) in cases {
            assert_relative_eq!(bessel_kernel(4, x), j2, max_relative = 1e-9);
            assert_relative_eq!(bessel_kernel(3, x), j32, max_relative = 1e-12);
        }
        for two_nu in -1..=4 {
            let lim = bessel_kernel_at_zero(two_nu);
            assert_relative_eq!(bessel_kernel(two_nu, 1e-7), lim, max_relative = 1e-10);
        }
    }

    #[test]
    fn zeros_match_reference() {
        assert_relative_eq!(bessel_zero(0, 1), 2.404825557695773, max_relative = 1e-13);
        assert_relative_eq!(bessel_zero(2, 2), 7.015586669815619, max_relative = 1e-13);
        assert_relative_eq!(bessel_zero(3, 5), 17.22075527193077, max_relative = 1e-12);
        assert_relative_eq!(bessel_zero(4, 1), 5.135622301840683, max_relative = 1e-13);
        for two_nu in -1..=4 {
            for k in [1, 3, 20, 500] {
                let z = bessel_zero(two_nu, k);
                assert!(bessel_j(two_nu, z).abs() < 1e-9, "2nu={two_nu} k={k}");
            }
        }
    }

    #[test]
    fn macdonald_reference_values() {
        assert_relative_eq!(macdonald(1.0, 1.0), 0.6019072301972346, max_relative = 1e-12);
        assert_relative_eq!(macdonald(0.0, 1.0), 0.42102443824070834, max_relative = 1e-12);
        assert_relative_eq!(macdonald(1.5, 0.3), 7.34569791080356, max_relative = 1e-12);
        assert_relative_eq!(macdonald(2.25, 5.0), 0.005840997496120571, max_relative = 1e-12);
        assert_relative_eq!(ln_macdonald(1.0, 600.0), (1.356957918112806e-262f64).ln(), max_relative = 1e-12);
        // half-integer closed form
        for r in [1e-3, 0.2, 3.0, 25.0] {
            let exact = (PI / (2.0 * r)).sqrt() * (-r).exp() * (1.0 + 1.0 / r);
            assert_relative_eq!(macdonald(1.5, r), exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn one_minus_avg_cos_is_continuous() {
        for d in 1..=4 {
            let a = one_minus_sphere_avg_cos(d, 2.0 - 1e-12);
            let b = one_minus_sphere_avg_cos(d, 2.0 + 1e-12);
            assert_relative_eq!(a, b, max_relative = 1e-10);
            let small = one_minus_sphere_avg_cos(d, 1e-4);
            assert_relative_eq!(small, 1e-8 / (2.0 * d as f64), max_relative = 1e-6);
        }
        assert_relative_eq!(sphere_area(3), 4.0 * PI, max_relative = 1e-14);
    }
}
