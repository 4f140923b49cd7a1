//! Ladder-height exponent `κ`, renewal function `V` with its inverse and
//! derivative, and the constants in the comparabilities involving `V`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2, PI};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{log_grid, Pchip};
use crate::quad::tanh_sinh;
use crate::symbols::{ModelSpec, SymbolEvaluator};

/// Laplace exponent of the ascending ladder-height process,
/// `κ(ξ) = exp{(1/π) ∫_0^∞ log ψ(ξζ) / (1 + ζ²) dζ}`, computed with
/// `ζ = tan u`.
pub fn kappa(ev: &SymbolEvaluator, xi: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(Error::InvalidInput(format!("kappa needs xi > 0, got {xi}")));
    }
    let f = |u: f64, du_a: f64, du_b: f64| {
        let zeta = if u < FRAC_PI_4 { du_a.tan() } else { 1.0 / du_b.tan() };
        ev.psi(xi * zeta).ln()
    };
    let integral = tanh_sinh(&f, 0.0, FRAC_PI_2, 1e-13);
    let k = (integral / PI).exp();
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidInput(format!("kappa({xi}) is not finite: symbol misbehaves")));
    }
    Ok(k)
}

/// Gaver-Stehfest weights for even order `n`.
pub fn stehfest_weights(n: usize) -> Vec<f64> {
    assert!(n % 2 == 0 && n >= 2);
    let half = n / 2;
    let fact = |k: usize| (1..=k).fold(1.0f64, |a, b| a * b as f64);
    (1..=n)
        .map(|k| {
            let mut s = 0.0;
            for j in (k + 1) / 2..=k.min(half) {
                s += (j as f64).powi(half as i32) * fact(2 * j)
                    / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
            }
            if (k + half) % 2 == 0 {
                s
            } else {
                -s
            }
        })
        .collect()
}

/// Inverts a Laplace transform `F` at `r > 0` with Stehfest weights `w`.
pub fn stehfest_invert<F: Fn(f64) -> Result<f64>>(f: &F, r: f64, w: &[f64]) -> Result<f64> {
    let a = LN_2 / r;
    let mut sum = 0.0;
    for (k, wk) in w.iter().enumerate() {
        sum += wk * f(a * (k + 1) as f64)?;
    }
    Ok(a * sum)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RenewalOptions {
    /// Stehfest order (even).
    pub order: usize,
    /// Order used for the convergence check.
    pub check_order: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub nodes: usize,
    /// Relative drop between neighbouring raw values tolerated before the
    /// inversion is declared unstable.
    pub monotone_tol: f64,
}

impl Default for RenewalOptions {
    fn default() -> Self {
        Self { order: 14, check_order: 16, r_min: 1e-6, r_max: 1e4, nodes: 400, monotone_tol: 1e-6 }
    }
}

/// Condition-(H) constant together with the grid nodes that had to be
/// dropped because `V′` vanished numerically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HEstimate {
    pub value: f64,
    pub excluded: usize,
    pub evaluated: usize,
}

/// Tabulated renewal function.
#[derive(Debug, Clone)]
pub struct RenewalFunction {
    model: ModelSpec,
    grid: Vec<f64>,
    v: Vec<f64>,
    v_prime: Vec<f64>,
    surrogate: Vec<f64>,
    ln_v: Pchip,
    ln_v_prime: Pchip,
    ln_inv: Pchip,
    /// Set when the inversion was unstable and the surrogate was used.
    pub instability: Option<String>,
    /// Largest relative difference between the main and the check order.
    pub order_discrepancy: f64,
}

impl RenewalFunction {
    pub fn build(ev: &SymbolEvaluator) -> Result<Self> {
        Self::build_with(ev, RenewalOptions::default())
    }

    pub fn build_with(ev: &SymbolEvaluator, opts: RenewalOptions) -> Result<Self> {
        let grid = log_grid(opts.r_min, opts.r_max, opts.nodes);
        let laplace = |s: f64| kappa(ev, s).map(|k| 1.0 / (s * k));
        let w = stehfest_weights(opts.order);
        let mut raw = Vec::with_capacity(grid.len());
        for &r in &grid {
            raw.push(stehfest_invert(&laplace, r, &w)?);
        }
        let surrogate: Vec<f64> = grid.iter().map(|&r| 1.0 / ev.psi_star(1.0 / r).sqrt()).collect();

        let wc = stehfest_weights(opts.check_order);
        let mut order_discrepancy = 0.0f64;
        for i in (0..grid.len()).step_by(40) {
            let alt = stehfest_invert(&laplace, grid[i], &wc)?;
            order_discrepancy = order_discrepancy.max((alt - raw[i]).abs() / raw[i].abs());
        }

        let mut instability = None;
        let worst_drop = raw
            .windows(2)
            .map(|p| (p[0] - p[1]) / p[0].abs())
            .fold(f64::NEG_INFINITY, f64::max);
        if raw.iter().any(|v| !(v.is_finite() && *v > 0.0)) || worst_drop > opts.monotone_tol {
            instability = Some(format!(
                "Laplace inversion not monotone (largest relative drop {worst_drop:e}); surrogate 1/sqrt(psi*(1/r)) used"
            ));
        }
        let mut v = if instability.is_some() { surrogate.clone() } else { raw };
        // running maximum, then nudge ties so the table stays strictly increasing
        for i in 1..v.len() {
            if v[i] <= v[i - 1] {
                v[i] = v[i - 1] * (1.0 + 1e-14);
            }
        }

        let ln_r: Vec<f64> = grid.iter().map(|r| r.ln()).collect();
        let ln_vs: Vec<f64> = v.iter().map(|x| x.ln()).collect();
        let n = grid.len();
        let mut v_prime = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let slope = (ln_vs[b] - ln_vs[a]) / (ln_r[b] - ln_r[a]);
            v_prime.push(v[i] / grid[i] * slope);
        }
        let ln_vp: Vec<f64> = v_prime.iter().map(|x| x.max(1e-300).ln()).collect();
        Ok(Self {
            model: *ev.spec(),
            ln_v: Pchip::new(ln_r.clone(), ln_vs.clone()),
            ln_v_prime: Pchip::new(ln_r.clone(), ln_vp),
            ln_inv: Pchip::new(ln_vs, ln_r),
            grid,
            v,
            v_prime,
            surrogate,
            instability,
            order_discrepancy,
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Renewal function `V(r)`; power-law extrapolation outside the table.
    pub fn v(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        extrapolated(&self.ln_v, r.ln()).exp()
    }

    /// Derivative `V′(r)`.
    pub fn v_prime(&self, r: f64) -> f64 {
        extrapolated(&self.ln_v_prime, r.ln()).exp()
    }

    /// Inverse `V⁻¹(s)`.
    pub fn v_inv(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        extrapolated(&self.ln_inv, s.ln()).exp()
    }

    /// Surrogate `Ṽ(r) = 1/√ψ*(1/r)` at table nodes, interpolated in log-log.
    pub fn surrogate_at_nodes(&self) -> &[f64] {
        &self.surrogate
    }

    pub fn values_at_nodes(&self) -> &[f64] {
        &self.v
    }

    /// Condition-(H) constant `H_R`: the largest
    /// `(V(z) - V(y)) / (V′(x)(z - y))` over `0 < x ≤ y ≤ z ≤ 5x ≤ 5R`,
    /// clamped below at 1. The `x` values come from a fixed lattice (50 points
    /// per three decades from 1e-6), so `R ↦ H_R` is nondecreasing.
    pub fn h(&self, big_r: f64) -> HEstimate {
        let mut best = 1.0f64;
        let mut excluded = 0;
        let mut evaluated = 0;
        let step = 3.0 / 49.0;
        let mut j = 0;
        loop {
            let x = 10f64.powf(-6.0 + step * j as f64);
            if x > big_r * (1.0 + 1e-12) {
                break;
            }
            j += 1;
            let vpx = self.v_prime(x);
            if !(vpx > 1e-300) {
                excluded += 1;
                continue;
            }
            let sub: Vec<f64> = (0..30).map(|i| x * (1.0 + 4.0 * i as f64 / 29.0)).collect();
            for (iy, &y) in sub.iter().enumerate() {
                let vy = self.v(y);
                for &z in &sub[iy..] {
                    let ratio = if z == y {
                        self.v_prime(y) / vpx
                    } else {
                        (self.v(z) - vy) / (vpx * (z - y))
                    };
                    evaluated += 1;
                    best = best.max(ratio);
                }
            }
        }
        HEstimate { value: best, excluded, evaluated }
    }

    /// Writes `r,V,V_surrogate,V_prime` rows at the table nodes.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,V,V_surrogate,V_prime")?;
        for i in 0..self.grid.len() {
            writeln!(out, "{:e},{:e},{:e},{:e}", self.grid[i], self.v[i], self.surrogate[i], self.v_prime[i])?;
        }
        Ok(())
    }
}

/// Evaluates a log-log table, continuing linearly (a power law) beyond the ends.
fn extrapolated(p: &Pchip, x: f64) -> f64 {
    let (lo, hi) = (p.x_min(), p.x_max());
    if x < lo {
        let (v, d) = p.eval_with_derivative(lo);
        v + d * (x - lo)
    } else if x > hi {
        let (v, d) = p.eval_with_derivative(hi);
        v + d * (x - hi)
    } else {
        p.eval(x)
    }
}

/// Observed constants in `c₁ ψ(1/r) ≤ 1/V²(r) ≤ c₂ ψ(1/r)` over `grid`.
pub fn check_vpsi(ev: &SymbolEvaluator, v: &RenewalFunction, grid: &[f64]) -> (f64, f64) {
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    for &r in grid {
        let vr = v.v(r);
        let q = 1.0 / (vr * vr * ev.psi(1.0 / r));
        c1 = c1.min(q);
        c2 = c2.max(q);
    }
    (c1, c2)
}

/// Largest `c₁` with `V⁻¹(ηω) ≥ c₁ η^{2/α̲} V⁻¹(ω)` for `η, ω` in `grid ⊂ (0, 1]`.
pub fn check_v_scaling(ev: &SymbolEvaluator, v: &RenewalFunction, grid: &[f64]) -> f64 {
    let (alpha_lower, _, _) = ev.exponents();
    let mut c1 = f64::INFINITY;
    for &eta in grid {
        for &omega in grid {
            let ratio = v.v_inv(eta * omega) / (eta.powf(2.0 / alpha_lower) * v.v_inv(omega));
            c1 = c1.min(ratio);
        }
    }
    c1
}

/// Band of `V(r)/Ṽ(r)` with the surrogate `Ṽ(r) = 1/√ψ*(1/r)`.
pub fn surrogate_band(ev: &SymbolEvaluator, v: &RenewalFunction, grid: &[f64]) -> (f64, f64) {
    grid.iter()
        .map(|&r| v.v(r) * ev.psi_star(1.0 / r).sqrt())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), q| (lo.min(q), hi.max(q)))
}
