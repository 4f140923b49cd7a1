//! Quadrature rules: Gauss-Legendre (fixed and adaptive), tanh-sinh for
//! endpoint singularities, and Bessel-oscillatory integrals split at the
//! kernel zeros with alternating-series acceleration.

use std::sync::OnceLock;

use thiserror::Error;

use crate::special::{bessel_kernel, bessel_zero};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("adaptive quadrature did not reach tolerance on [{a}, {b}] (error estimate {err:e})")]
    NoConvergence { a: f64, b: f64, err: f64 },
    #[error("oscillatory tail did not settle: accelerated estimates differ by {spread:e} after {intervals} intervals")]
    TailNotSettled { spread: f64, intervals: usize },
    #[error("integrand returned a non-finite value at {at}")]
    NonFinite { at: f64 },
}

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p1, mut p2) = (1.0, 0.0);
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
                }
                dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }
}

/// Shared 20-point rule used by the adaptive integrator.
pub fn gl20() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(20))
}

/// Adaptive bisection driven by a 20-point Gauss-Legendre rule. A panel is
/// accepted when the rule on the panel and on its two halves agree to within
/// the panel's share of the tolerance.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, QuadError> {
    if a == b {
        return Ok(0.0);
    }
    let rule = gl20();
    let total_len = (b - a).abs();
    let whole = rule.integrate(f, a, b);
    let mut stack = vec![(a, b, whole, 0u32)];
    let mut result = 0.0;
    let mut scale = whole.abs();
    let mut accepted = 0usize;
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(f, lo, mid);
        let right = rule.integrate(f, mid, hi);
        let refined = left + right;
        if !refined.is_finite() {
            return Err(QuadError::NonFinite { at: mid });
        }
        scale = scale.max(refined.abs());
        let share = (hi - lo).abs() / total_len;
        let tol = (abs_tol * share).max(rel_tol * scale * share);
        let err = (refined - est).abs();
        if err <= tol || err <= 4e-16 * scale.max(refined.abs()) || err < 1e-300 {
            result += refined;
            accepted += 1;
        } else if depth >= 60 || accepted + stack.len() > 100_000 {
            return Err(QuadError::NoConvergence { a: lo, b: hi, err });
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    Ok(result)
}

/// Integral over `[0, b]` split into geometric panels `[b 2^{-k-1}, b 2^{-k}]`,
/// which resolves features concentrated near zero (cusps, narrow peaks).
pub fn geometric_from_zero<F: Fn(f64) -> f64>(
    f: &F,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, QuadError> {
    let mut hi = b;
    let mut total = 0.0;
    for _ in 0..80 {
        let lo = hi * 0.5;
        let part = adaptive(f, lo, hi, abs_tol / 80.0, rel_tol)?;
        total += part;
        hi = lo;
    }
    total += adaptive(f, 0.0, hi, abs_tol / 80.0, rel_tol)?;
    Ok(total)
}

/// Tanh-sinh (double exponential) quadrature on `(a, b)`; tolerates
/// integrable endpoint singularities. The integrand receives the node and its
/// distances to `a` and `b`, computed without cancellation.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let half = 0.5 * (b - a);
    let t_max = 4.0;
    let eval = |t: f64| -> f64 {
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (cu * cu);
        // 1 - tanh(|u|) = 2 / (exp(2|u|) + 1)
        let comp = 2.0 / ((2.0 * u.abs()).exp() + 1.0);
        let (x, da, db) = if u >= 0.0 {
            (b - half * comp, half * (2.0 - comp), half * comp)
        } else {
            (a + half * comp, half * comp, half * (2.0 - comp))
        };
        if da <= 0.0 || db <= 0.0 {
            return 0.0;
        }
        let v = f(x, da, db);
        if v.is_finite() {
            w * v
        } else {
            0.0
        }
    };
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        sum += eval(k as f64 * h) + eval(-(k as f64) * h);
        k += 1;
    }
    let mut estimate = sum * h * half;
    for _level in 0..8 {
        h *= 0.5;
        let mut k = 1;
        let mut add = 0.0;
        while (k as f64) * h <= t_max {
            add += eval(k as f64 * h) + eval(-(k as f64) * h);
            k += 2;
        }
        sum += add;
        let next = sum * h * half;
        let diff = (next - estimate).abs();
        estimate = next;
        if diff <= tol * estimate.abs().max(1e-300) {
            break;
        }
    }
    estimate
}

/// Repeated pairwise averaging of partial sums of an alternating series
/// (Euler's transformation in partial-sum form). Returns the transformed
/// value and the spread between the last two averaged values.
pub fn averaged_limit(partial_sums: &[f64]) -> (f64, f64) {
    let mut level: Vec<f64> = partial_sums.to_vec();
    let mut spread = f64::INFINITY;
    while level.len() > 1 {
        if level.len() == 2 {
            spread = (level[1] - level[0]).abs();
        }
        level = level.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    (level[0], spread)
}

/// Accelerated summation gives up after this many multiples of
/// `accel_terms` partial sums.
const MAX_ACCEL_ROUNDS: usize = 8;

/// Controls for [`bessel_oscillatory`].
#[derive(Debug, Clone, Copy)]
pub struct OscOptions {
    /// Abscissa beyond which the amplitude is known to be negligible.
    pub cutoff: Option<f64>,
    /// Largest number of zero-to-zero intervals summed directly.
    pub direct_limit: usize,
    /// Intervals summed before acceleration starts when the cutoff is far.
    pub accel_start: usize,
    /// Number of averaging rounds.
    pub accel_terms: usize,
    pub rel_tol: f64,
    /// Accelerated values whose spread is below this are accepted even when
    /// the relative criterion fails (useful when the integral is a small
    /// correction to a larger quantity).
    pub abs_tol: f64,
}

impl Default for OscOptions {
    fn default() -> Self {
        Self {
            cutoff: None,
            direct_limit: 4000,
            accel_start: 100,
            accel_terms: 40,
            rel_tol: 1e-13,
            abs_tol: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OscResult {
    pub value: f64,
    pub intervals: usize,
    pub accelerated: bool,
    pub spread: f64,
}

/// `∫_a^∞ Λ_ν(k s) f(s) ds` with `Λ_ν(x) = x^{-ν} J_ν(x)`, `2ν = two_nu`.
///
/// The axis is split at the zeros of `J_ν(k s)`. When the cutoff lies
/// within `direct_limit` intervals the pieces are summed directly;
/// otherwise the partial sums after `accel_start` pieces are accelerated.
pub fn bessel_oscillatory<F: Fn(f64) -> f64>(
    two_nu: i32,
    k: f64,
    a: f64,
    f: &F,
    opts: OscOptions,
) -> Result<OscResult, QuadError> {
    let g = |s: f64| bessel_kernel(two_nu, k * s) * f(s);
    // index of the first zero strictly above a
    let mut idx = 1usize;
    if a > 0.0 {
        let approx = (a * k / std::f64::consts::PI).floor() as usize;
        idx = approx.saturating_sub(2).max(1);
        while bessel_zero(two_nu, idx) / k <= a {
            idx += 1;
        }
    }
    let expected = match opts.cutoff {
        Some(c) if c.is_finite() => ((c * k) / std::f64::consts::PI).ceil() as usize + 2,
        _ => usize::MAX,
    };
    let direct = expected.saturating_sub(idx) <= opts.direct_limit;

    let first_end = bessel_zero(two_nu, idx) / k;
    let mut sum = if a == 0.0 {
        geometric_from_zero(&g, first_end, 0.0, opts.rel_tol)?
    } else {
        adaptive(&g, a, first_end, opts.abs_tol * 1e-3, opts.rel_tol)?
    };
    let scale_floor = |s: f64| (opts.rel_tol * 1e-3 * s.abs()).max(opts.abs_tol * 1e-3);
    let mut lo = first_end;
    let mut count = 1usize;
    let mut partials = Vec::new();
    loop {
        let hi = bessel_zero(two_nu, idx + count) / k;
        let piece = adaptive(&g, lo, hi, scale_floor(sum), opts.rel_tol)?;
        sum += piece;
        count += 1;
        lo = hi;
        if direct {
            let past = opts.cutoff.map_or(false, |c| hi >= c);
            if past && piece.abs() <= 1e-17 * sum.abs().max(1e-300) {
                return Ok(OscResult { value: sum, intervals: count, accelerated: false, spread: 0.0 });
            }
            if count > opts.direct_limit * 4 + 64 {
                return Err(QuadError::TailNotSettled { spread: piece.abs(), intervals: count });
            }
        } else if count >= opts.accel_start {
            partials.push(sum);
            if partials.len() > opts.accel_terms {
                let (value, spread) = averaged_limit(&partials);
                let (half_value, _) = averaged_limit(&partials[..partials.len() - 2]);
                let spread = spread.max((value - half_value).abs());
                // relative to the value, or to the size of the partial sums
                // when the value is a small residue of cancellation
                let peak = partials.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let tol = (1e-9 * value.abs()).max(opts.abs_tol).max(1e-13 * peak).max(1e-300);
                if spread <= tol {
                    return Ok(OscResult { value, intervals: count, accelerated: true, spread });
                }
                // a heavily cancelling tail may need more terms before the
                // averages agree
                if partials.len() > MAX_ACCEL_ROUNDS * opts.accel_terms {
                    return Err(QuadError::TailNotSettled { spread, intervals: count });
                }
            }
        }
    }
}
