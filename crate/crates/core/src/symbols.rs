//! Model catalog and evaluators for the characteristic exponent `ψ`, its
//! running maximum `ψ*`, the generalized inverse `ψ⁻`, and the radial Lévy
//! density `ν` with its derivative.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{log_grid, CubicSpline};
use crate::quad::{adaptive, bessel_oscillatory, tanh_sinh, OscOptions};
use crate::special::{
    gamma_fn, ln_gamma_fn, ln_macdonald, one_minus_sphere_avg_cos, sphere_area,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Stable,
    Relativistic,
    SubordinateBm,
    TruncStableExp,
}

/// Slowly varying factor `ℓ` of a subordinate Brownian motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SlowlyVarying {
    #[default]
    Constant,
}

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: Family,
    pub d: usize,
    #[serde(default = "default_one")]
    pub alpha: f64,
    /// Relativistic mass; also the tempering parameter of the subordinate
    /// Brownian motion `φ(λ) = (λ + m²)^{α/2} - m^α`.
    #[serde(default = "default_one")]
    pub m: f64,
    #[serde(default)]
    pub slowly_varying: SlowlyVarying,
}

impl ModelSpec {
    pub fn stable(alpha: f64, d: usize) -> Self {
        Self { family: Family::Stable, d, alpha, m: 1.0, slowly_varying: SlowlyVarying::Constant }
    }

    pub fn relativistic(m: f64, d: usize) -> Self {
        Self { family: Family::Relativistic, d, alpha: 1.0, m, slowly_varying: SlowlyVarying::Constant }
    }

    pub fn subordinate_bm(alpha: f64, m: f64, d: usize) -> Self {
        Self { family: Family::SubordinateBm, d, alpha, m, slowly_varying: SlowlyVarying::Constant }
    }

    pub fn trunc_stable_exp(alpha: f64, d: usize) -> Self {
        Self { family: Family::TruncStableExp, d, alpha, m: 1.0, slowly_varying: SlowlyVarying::Constant }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidModel("dimension must be at least 1".into()));
        }
        if self.d > 4 {
            return Err(Error::InvalidModel("dimensions above 4 are not supported".into()));
        }
        if self.family != Family::Relativistic && !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::InvalidModel(format!("alpha = {} outside (0, 2)", self.alpha)));
        }
        if matches!(self.family, Family::Relativistic | Family::SubordinateBm)
            && !(self.m > 0.0 && self.m.is_finite())
        {
            return Err(Error::InvalidModel(format!("m = {} must be positive", self.m)));
        }
        Ok(())
    }

    /// Short human-readable label, e.g. `stable(alpha=1, d=1)`.
    pub fn label(&self) -> String {
        match self.family {
            Family::Stable => format!("stable(alpha={}, d={})", self.alpha, self.d),
            Family::Relativistic => format!("relativistic(m={}, d={})", self.m, self.d),
            Family::SubordinateBm => {
                format!("subordinate_bm(alpha={}, m={}, d={})", self.alpha, self.m, self.d)
            }
            Family::TruncStableExp => format!("trunc_stable_exp(alpha={}, d={})", self.alpha, self.d),
        }
    }
}

/// One model from each family in dimension `d`.
pub fn catalog(d: usize) -> Vec<ModelSpec> {
    vec![
        ModelSpec::stable(1.0, d),
        ModelSpec::relativistic(1.0, d),
        ModelSpec::subordinate_bm(1.5, 1.0, d),
        ModelSpec::trunc_stable_exp(1.0, d),
    ]
}

/// Lévy density constant `C_{d,α}` of the isotropic α-stable process with
/// `ψ(ξ) = |ξ|^α`.
pub fn stable_constant(d: usize, alpha: f64) -> f64 {
    let df = d as f64;
    2f64.powf(alpha) * gamma_fn((df + alpha) / 2.0)
        / (PI.powf(df / 2.0) * gamma_fn(-alpha / 2.0).abs())
}

/// Tabulated exponent of the truncated stable model.
#[derive(Debug, Clone)]
struct TseTable {
    spline: CubicSpline,
    lo: f64,
    hi: f64,
    psi_lo: f64,
    /// `ω_d ∫_1^∞ (A r^{-d-α} - c₁ e^{-c₂ r}) r^{d-1} dr`
    big_mass: f64,
}

/// Running maximum of `ψ` on a fixed grid, for non-monotone exponents.
#[derive(Debug, Clone)]
struct StarTable {
    grid: Vec<f64>,
    prefix_max: Vec<f64>,
}

/// Evaluator for one catalog model. Immutable after construction.
#[derive(Debug, Clone)]
pub struct SymbolEvaluator {
    spec: ModelSpec,
    /// Multiplicative constant of `ν` (family specific).
    nu_const: f64,
    ln_nu_const: f64,
    tse: Option<TseTable>,
    star: Option<StarTable>,
}

/// `ν(r)` together with an underflow flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuValue {
    pub value: f64,
    pub underflow: bool,
}

impl SymbolEvaluator {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        let d = spec.d as f64;
        let (nu_const, ln_nu_const) = match spec.family {
            Family::Stable | Family::TruncStableExp => {
                let c = stable_constant(spec.d, spec.alpha);
                (c, c.ln())
            }
            Family::Relativistic => {
                let s = (d + 1.0) / 2.0;
                let ln_c = (1.0 - d) / 2.0 * 2f64.ln() - s * PI.ln() + s * spec.m.ln();
                (ln_c.exp(), ln_c)
            }
            Family::SubordinateBm => {
                let a = spec.alpha;
                let sigma = (d + a) / 2.0;
                let ln_c = (a / 2.0).ln() - ln_gamma_fn(1.0 - a / 2.0) - d / 2.0 * (4.0 * PI).ln()
                    + (1.0 + sigma) * 2f64.ln()
                    + sigma * spec.m.ln();
                (ln_c.exp(), ln_c)
            }
        };
        let mut ev = Self { spec, nu_const, ln_nu_const, tse: None, star: None };
        if spec.family == Family::TruncStableExp {
            ev.tse = Some(ev.build_tse_table()?);
            ev.star = Some(ev.build_star_table());
        }
        Ok(ev)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn d(&self) -> usize {
        self.spec.d
    }

    /// Whether `ψ` is known to be nondecreasing, so that `ψ* = ψ`.
    pub fn is_monotone(&self) -> bool {
        self.spec.family != Family::TruncStableExp
    }

    /// Characteristic exponent `ψ(r)`, `r ≥ 0`.
    pub fn psi(&self, r: f64) -> f64 {
        let r = r.abs();
        if r == 0.0 {
            return 0.0;
        }
        let s = &self.spec;
        match s.family {
            Family::Stable => r.powf(s.alpha),
            Family::Relativistic => r * r / ((r * r + s.m * s.m).sqrt() + s.m),
            Family::SubordinateBm => {
                let m2 = s.m * s.m;
                s.m.powf(s.alpha) * ((s.alpha / 2.0) * (r * r / m2).ln_1p()).exp_m1()
            }
            Family::TruncStableExp => {
                let t = self.tse.as_ref().expect("table built at construction");
                if r < t.lo {
                    t.psi_lo * (r / t.lo).powi(2)
                } else if r > t.hi {
                    r.powf(s.alpha) - t.big_mass
                } else {
                    t.spline.eval(r.ln()).exp()
                }
            }
        }
    }

    /// `ψ(r)` for the truncated stable model by direct quadrature of the
    /// Lévy-Khintchine integral, bypassing the cached table. For the other
    /// families this equals [`Self::psi`].
    pub fn psi_exact(&self, r: f64) -> Result<f64> {
        if self.spec.family != Family::TruncStableExp {
            return Ok(self.psi(r));
        }
        let big_mass = match &self.tse {
            Some(t) => t.big_mass,
            None => self.tse_big_mass()?,
        };
        self.tse_psi_quadrature(r.abs(), big_mass)
    }

    /// Running maximum `ψ*(r) = sup_{0 ≤ s ≤ r} ψ(s)`.
    pub fn psi_star(&self, r: f64) -> f64 {
        let r = r.abs();
        let here = self.psi(r);
        match &self.star {
            None => here,
            Some(tab) => {
                if r < tab.grid[0] {
                    return here;
                }
                let i = match tab.grid.binary_search_by(|v| v.partial_cmp(&r).unwrap()) {
                    Ok(i) => i,
                    Err(i) => i - 1,
                };
                here.max(tab.prefix_max[i])
            }
        }
    }

    /// Generalized inverse `ψ⁻(u) = inf{y ≥ 0 : ψ*(y) ≥ u}`; `+∞` when no
    /// representable `y` reaches `u`.
    pub fn psi_inv(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if !u.is_finite() {
            return f64::INFINITY;
        }
        let mut hi = 1.0f64;
        while self.psi_star(hi) < u {
            hi *= 16.0;
            if hi > 1e300 {
                return f64::INFINITY;
            }
        }
        let mut lo = hi / 16.0;
        while lo > 1e-300 && self.psi_star(lo) >= u {
            lo /= 16.0;
        }
        if self.psi_star(lo) >= u {
            return 0.0;
        }
        // invariant: ψ*(lo) < u ≤ ψ*(hi)
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            if self.psi_star(mid) >= u {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        hi
    }

    /// Lévy density `ν(r)`, `r > 0`. Returns 0 on underflow.
    pub fn nu(&self, r: f64) -> f64 {
        debug_assert!(r > 0.0);
        let s = &self.spec;
        let d = s.d as f64;
        match s.family {
            Family::Stable => self.nu_const * r.powf(-d - s.alpha),
            Family::TruncStableExp => {
                if r <= 1.0 {
                    self.nu_const * r.powf(-d - s.alpha)
                } else {
                    let c2 = d + s.alpha;
                    self.nu_const * (c2 * (1.0 - r)).exp()
                }
            }
            _ => self.ln_nu(r).exp(),
        }
    }

    /// `ν(r)` with input validation and an explicit underflow flag.
    pub fn nu_checked(&self, r: f64) -> Result<NuValue> {
        if !(r > 0.0) {
            return Err(Error::InvalidInput(format!("nu needs r > 0, got {r}")));
        }
        let value = self.nu(r);
        Ok(NuValue { value, underflow: value == 0.0 })
    }

    /// `ln ν(r)`, finite even where `ν` underflows.
    pub fn ln_nu(&self, r: f64) -> f64 {
        let s = &self.spec;
        let d = s.d as f64;
        match s.family {
            Family::Stable => self.ln_nu_const - (d + s.alpha) * r.ln(),
            Family::TruncStableExp => {
                if r <= 1.0 {
                    self.ln_nu_const - (d + s.alpha) * r.ln()
                } else {
                    self.ln_nu_const + (d + s.alpha) * (1.0 - r)
                }
            }
            Family::Relativistic => {
                let o = (d + 1.0) / 2.0;
                self.ln_nu_const - o * r.ln() + ln_macdonald(o, s.m * r)
            }
            Family::SubordinateBm => {
                let o = (d + s.alpha) / 2.0;
                self.ln_nu_const - o * r.ln() + ln_macdonald(o, s.m * r)
            }
        }
    }

    /// Radial derivative `ν′(r) ≤ 0`.
    pub fn nu_prime(&self, r: f64) -> f64 {
        let s = &self.spec;
        let d = s.d as f64;
        match s.family {
            Family::Stable => -(d + s.alpha) * self.nu(r) / r,
            Family::TruncStableExp => {
                if r <= 1.0 {
                    -(d + s.alpha) * self.nu(r) / r
                } else {
                    -(d + s.alpha) * self.nu(r)
                }
            }
            Family::Relativistic | Family::SubordinateBm => {
                let o = if s.family == Family::Relativistic {
                    (d + 1.0) / 2.0
                } else {
                    (d + s.alpha) / 2.0
                };
                // d/dr [r^{-o} K_o(m r)] = -m r^{-o} K_{o+1}(m r)
                -(self.ln_nu_const + s.m.ln() - o * r.ln() + ln_macdonald(o + 1.0, s.m * r)).exp()
            }
        }
    }

    /// Scaling exponents `(α̲, ᾱ, θ₀)` used for each family.
    pub fn exponents(&self) -> (f64, f64, f64) {
        let a = self.spec.alpha;
        match self.spec.family {
            Family::Stable => (a, a, 0.0),
            Family::Relativistic => (1.0, 1.0, 1.0),
            Family::SubordinateBm | Family::TruncStableExp => (a, a, 1.0),
        }
    }

    /// `ω_d ∫_ε^∞ ν(r) r^{d-1} dr`, the intensity of jumps longer than `ε`.
    pub fn tail_mass(&self, eps: f64) -> Result<f64> {
        let s = &self.spec;
        let d = s.d;
        let omega = sphere_area(d);
        if s.family == Family::Stable {
            return Ok(omega * self.nu_const * eps.powf(-s.alpha) / s.alpha);
        }
        let g = |u: f64| {
            let r = u.exp();
            self.nu(r) * r.powi(d as i32)
        };
        let upper = self.negligible_radius();
        let mut total = 0.0;
        let mut lo = eps.ln();
        for b in [0.0, upper.ln()] {
            if b > lo {
                total += adaptive(&g, lo, b, 0.0, 1e-12)?;
                lo = b;
            }
        }
        Ok(omega * total)
    }

    /// `ω_d ∫_0^ε ν(r) r^{d+1} dr`, the second moment of jumps shorter than `ε`.
    pub fn small_jump_moment(&self, eps: f64) -> Result<f64> {
        let s = &self.spec;
        let d = s.d as i32;
        let omega = sphere_area(s.d);
        if matches!(s.family, Family::Stable) || (s.family == Family::TruncStableExp && eps <= 1.0) {
            return Ok(omega * self.nu_const * eps.powf(2.0 - s.alpha) / (2.0 - s.alpha));
        }
        let g = |u: f64| {
            let r = u.exp();
            self.nu(r) * r.powi(d + 2)
        };
        let lo = (eps * 1e-12).ln();
        let mut total = 0.0;
        let mut a = lo;
        for b in [0.0f64.min(eps.ln()), eps.ln()] {
            if b > a {
                total += adaptive(&g, a, b, 0.0, 1e-12)?;
                a = b;
            }
        }
        Ok(omega * total)
    }

    /// Radius beyond which `ν(r) r^d` is negligible (1e-30 of its value at 1).
    pub fn negligible_radius(&self) -> f64 {
        let s = &self.spec;
        match s.family {
            Family::Stable => f64::INFINITY,
            Family::TruncStableExp => 1.0 + 75.0 / (s.d as f64 + s.alpha),
            Family::Relativistic | Family::SubordinateBm => 1.0 + 75.0 / s.m,
        }
    }

    /// `sup_{r ≥ 1} ν(r)/ν(r+1)` over a grid reaching `r = 100`.
    pub fn tail_ratio(&self) -> f64 {
        log_grid(1.0, 100.0, 400)
            .into_iter()
            .map(|r| (self.ln_nu(r) - self.ln_nu(r + 1.0)).exp())
            .fold(1.0, f64::max)
    }

    pub fn levy_density(&self) -> LevyDensity<'_> {
        LevyDensity { eval: self, tail_ratio_a: self.tail_ratio() }
    }

    /// Writes `r,psi,psi_star,nu` rows for each grid point.
    pub fn write_csv<W: Write>(&self, mut out: W, grid: &[f64]) -> Result<()> {
        writeln!(out, "r,psi,psi_star,nu")?;
        for &r in grid {
            writeln!(out, "{r:e},{:e},{:e},{:e}", self.psi(r), self.psi_star(r), self.nu(r))?;
        }
        Ok(())
    }

    // ---- truncated stable model -------------------------------------------

    fn tse_big_mass(&self) -> Result<f64> {
        let d = self.spec.d;
        let a = self.spec.alpha;
        let c2 = d as f64 + a;
        let exp_part = adaptive(
            &|r: f64| (c2 * (1.0 - r)).exp() * r.powi(d as i32 - 1),
            1.0,
            1.0 + 80.0 / c2,
            0.0,
            1e-14,
        )?;
        Ok(sphere_area(d) * self.nu_const * (1.0 / a - exp_part))
    }

    /// `f(r) = A r^{-d-α} - c₁ e^{-c₂ r}` on `r ≥ 1`; nonnegative with
    /// `f(1) = f′(1) = 0`.
    fn tse_excess(&self, r: f64) -> f64 {
        let d = self.spec.d as f64;
        let a = self.spec.alpha;
        let c2 = d + a;
        // A r^{-c2} (1 - e^{c2 (ln r - (r - 1))}), without cancellation near 1
        let x = -c2 * r.ln();
        let gap = c2 * ln1p_minus_x(r - 1.0);
        -self.nu_const * x.exp() * gap.exp_m1()
    }

    fn tse_psi_quadrature(&self, xi: f64, big_mass: f64) -> Result<f64> {
        if xi == 0.0 {
            return Ok(0.0);
        }
        let d = self.spec.d;
        let a = self.spec.alpha;
        let c2 = d as f64 + a;
        let omega = sphere_area(d);
        if xi <= 1.0 {
            let near = tanh_sinh(
                &|r: f64, _, _| one_minus_sphere_avg_cos(d, xi * r) * r.powf(-1.0 - a),
                0.0,
                1.0,
                1e-14,
            );
            let far = adaptive(
                &|r: f64| one_minus_sphere_avg_cos(d, xi * r) * (c2 * (1.0 - r)).exp() * r.powi(d as i32 - 1),
                1.0,
                1.0 + 80.0 / c2,
                0.0,
                1e-14,
            )?;
            Ok(omega * self.nu_const * (near + far))
        } else {
            // ψ = ξ^α - ω_d ∫_1^∞ (1 - g(ξ r)) f(r) r^{d-1} dr, g the spherical
            // average of cos; the g-part is oscillatory.
            let two_nu = d as i32 - 2;
            let nu = two_nu as f64 / 2.0;
            let gnorm = gamma_fn(nu + 1.0) * 2f64.powf(nu);
            let amp = |r: f64| self.tse_excess(r) * r.powi(d as i32 - 1);
            let main = xi.powf(a) - big_mass;
            let opts = OscOptions {
                abs_tol: 1e-13 * main.abs() / (omega * gnorm),
                ..OscOptions::default()
            };
            let osc = bessel_oscillatory(two_nu, xi, 1.0, &amp, opts)?;
            Ok(main + omega * gnorm * osc.value)
        }
    }

    fn build_tse_table(&self) -> Result<TseTable> {
        let big_mass = self.tse_big_mass()?;
        let (lo, hi) = (1e-4, 1e5);
        let grid = log_grid(lo, hi, 1800);
        let mut ys = Vec::with_capacity(grid.len());
        for &x in &grid {
            let v = self.tse_psi_quadrature(x, big_mass)?;
            if !(v > 0.0) {
                return Err(Error::InvalidModel(format!("nonpositive exponent {v} at {x}")));
            }
            ys.push(v.ln());
        }
        let psi_lo = ys[0].exp();
        let xs: Vec<f64> = grid.iter().map(|x| x.ln()).collect();
        Ok(TseTable { spline: CubicSpline::new(xs, ys), lo, hi, psi_lo, big_mass })
    }

    /// Prefix maxima of `ψ` on a log grid refined by doubling until the
    /// maxima change by less than 1e-9 relative.
    fn build_star_table(&self) -> StarTable {
        let (lo, hi) = (1e-6, 1e8);
        let mut n = 1000;
        let mut prev: Option<StarTable> = None;
        loop {
            let grid = log_grid(lo, hi, n);
            let mut prefix_max = Vec::with_capacity(n);
            let mut run = 0.0f64;
            for &r in &grid {
                run = run.max(self.psi(r));
                prefix_max.push(run);
            }
            let tab = StarTable { grid, prefix_max };
            if let Some(p) = &prev {
                // node i of the coarse grid is node 2i of the refined one
                let change = p
                    .prefix_max
                    .iter()
                    .enumerate()
                    .map(|(i, &m)| {
                        let new = tab.prefix_max[2 * i];
                        (new - m).abs() / new.max(1e-300)
                    })
                    .fold(0.0, f64::max);
                if change < 1e-9 || n > 200_000 {
                    return tab;
                }
            }
            prev = Some(tab);
            n = 2 * n - 1;
        }
    }
}

/// `ln(1 + u) - u`, accurate for small `u`.
fn ln1p_minus_x(u: f64) -> f64 {
    if u.abs() < 0.05 {
        // Σ_{k≥2} (-1)^{k+1} u^k / k
        let mut pow = u * u;
        let mut sum = -pow / 2.0;
        for k in 3..40 {
            pow *= -u;
            let term = -pow / k as f64;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        u.ln_1p() - u
    }
}

/// View of the Lévy density with the tail constant `a` in `ν(r) ≤ a ν(r+1)`.
pub struct LevyDensity<'a> {
    eval: &'a SymbolEvaluator,
    pub tail_ratio_a: f64,
}

impl LevyDensity<'_> {
    pub fn nu(&self, r: f64) -> f64 {
        self.eval.nu(r)
    }

    pub fn nu_prime(&self, r: f64) -> f64 {
        self.eval.nu_prime(r)
    }
}

/// Grid evidence for weak lower and upper scaling of `ψ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingCertificate {
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    pub theta0: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    /// `(λ, θ, ψ(λθ)/ψ(θ))`
    pub grid_evidence: Vec<(f64, f64, f64)>,
}

/// Best constants `C̲`, `C̄` such that `C̲ λ^{α̲} ≤ ψ(λθ)/ψ(θ) ≤ C̄ λ^{ᾱ}` on
/// the given `(λ, θ)` pairs, with the family's exponents.
pub fn estimate_scaling(
    ev: &SymbolEvaluator,
    theta0: f64,
    grid: &[(f64, f64)],
) -> Result<ScalingCertificate> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty scaling grid".into()));
    }
    let (al, au, _) = ev.exponents();
    let mut c_lower = f64::INFINITY;
    let mut c_upper = 0.0f64;
    let mut evidence = Vec::with_capacity(grid.len());
    for &(lambda, theta) in grid {
        if lambda < 1.0 || theta < theta0 {
            return Err(Error::InvalidInput(format!(
                "scaling grid point (λ={lambda}, θ={theta}) outside λ ≥ 1, θ ≥ {theta0}"
            )));
        }
        let ratio = ev.psi(lambda * theta) / ev.psi(theta);
        if !ratio.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite scaling ratio at (λ={lambda}, θ={theta})")));
        }
        c_lower = c_lower.min(ratio / lambda.powf(al));
        c_upper = c_upper.max(ratio / lambda.powf(au));
        evidence.push((lambda, theta, ratio));
    }
    Ok(ScalingCertificate {
        alpha_lower: al,
        alpha_upper: au,
        theta0,
        c_lower,
        c_upper,
        grid_evidence: evidence,
    })
}

/// Product grid `λ ∈ [1, λ_max]`, `θ ∈ [θ₀, θ_max]` (log spaced, `n` each).
/// A zero `θ₀` starts the `θ` grid at 1e-3.
pub fn scaling_grid(theta0: f64, lambda_max: f64, theta_max: f64, n: usize) -> Vec<(f64, f64)> {
    let thetas = log_grid(theta0.max(1e-3), theta_max, n);
    let lambdas = log_grid(1.0, lambda_max, n);
    lambdas
        .iter()
        .flat_map(|&l| thetas.iter().map(move |&t| (l, t)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn stable_closed_forms() {
        let ev = SymbolEvaluator::new(ModelSpec::stable(1.0, 1)).unwrap();
        assert_eq!(ev.psi(2.0), 2.0);
        // |Γ(-1/2)| = 2√π gives C_{1,1} = 1/π
        assert_relative_eq!(ev.nu(1.0), 1.0 / PI, max_relative = 1e-14);
        assert_relative_eq!(ev.nu_prime(2.0), -2.0 / (8.0 * PI), max_relative = 1e-14);
        assert_relative_eq!(ev.psi_inv(9.0), 9.0, max_relative = 1e-13);
        let half = SymbolEvaluator::new(ModelSpec::stable(0.5, 1)).unwrap();
        assert_relative_eq!(half.psi_inv(3.0), 9.0, max_relative = 1e-13);
        assert_eq!(half.psi_inv(0.0), 0.0);
    }

    #[test]
    fn relativistic_zero_and_small_argument() {
        let ev = SymbolEvaluator::new(ModelSpec::relativistic(1.0, 1)).unwrap();
        assert_eq!(ev.psi(0.0), 0.0);
        assert_relative_eq!(ev.psi(1e-9), 0.5e-18, max_relative = 1e-12);
    }

    #[test]
    fn subordinate_bm_at_alpha_one_is_relativistic() {
        for d in 1..=3 {
            let a = SymbolEvaluator::new(ModelSpec::subordinate_bm(1.0, 1.3, d)).unwrap();
            let b = SymbolEvaluator::new(ModelSpec::relativistic(1.3, d)).unwrap();
            for r in [0.01, 0.5, 2.0, 9.0] {
                assert_relative_eq!(a.psi(r), b.psi(r), max_relative = 1e-12);
                assert_relative_eq!(a.nu(r), b.nu(r), max_relative = 1e-10);
                assert_relative_eq!(a.nu_prime(r), b.nu_prime(r), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn nu_prime_matches_finite_difference() {
        for spec in catalog(2) {
            let ev = SymbolEvaluator::new(spec).unwrap();
            for r in [0.3, 0.9, 1.7, 4.0] {
                let h = 1e-5 * r;
                let fd = (ev.nu(r + h) - ev.nu(r - h)) / (2.0 * h);
                assert_relative_eq!(ev.nu_prime(r), fd, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn trunc_stable_is_c1_at_one() {
        let ev = SymbolEvaluator::new(ModelSpec::trunc_stable_exp(0.7, 2)).unwrap();
        let (a, b) = (ev.nu(1.0 - 1e-12), ev.nu(1.0 + 1e-12));
        assert_relative_eq!(a, b, max_relative = 1e-10);
        assert_relative_eq!(ev.nu_prime(1.0 - 1e-12), ev.nu_prime(1.0 + 1e-12), max_relative = 1e-10);
    }

    #[test]
    fn trunc_stable_table_matches_quadrature() {
        let ev = SymbolEvaluator::new(ModelSpec::trunc_stable_exp(1.0, 2)).unwrap();
        for r in [3e-4, 0.2, 0.999, 1.001, 7.3, 500.0, 5e4] {
            assert_relative_eq!(ev.psi(r), ev.psi_exact(r).unwrap(), max_relative = 1e-7);
        }
        // both quadrature branches agree at the switch point
        let below = ev.psi_exact(1.0).unwrap();
        let above = ev.psi_exact(1.0 + 1e-9).unwrap();
        assert_relative_eq!(below, above, max_relative = 1e-8);
    }

    #[test]
    fn scaling_certificate_for_stable_is_exact() {
        let ev = SymbolEvaluator::new(ModelSpec::stable(1.5, 1)).unwrap();
        let cert = estimate_scaling(&ev, 0.0, &scaling_grid(0.0, 100.0, 100.0, 8)).unwrap();
        assert_relative_eq!(cert.c_lower, 1.0, max_relative = 1e-12);
        assert_relative_eq!(cert.c_upper, 1.0, max_relative = 1e-12);
        assert!(estimate_scaling(&ev, 0.0, &[]).is_err());
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(SymbolEvaluator::new(ModelSpec::stable(2.0, 1)).is_err());
        assert!(SymbolEvaluator::new(ModelSpec::relativistic(0.0, 1)).is_err());
        assert!(SymbolEvaluator::new(ModelSpec::stable(1.0, 0)).is_err());
        let ev = SymbolEvaluator::new(ModelSpec::stable(1.0, 1)).unwrap();
        assert!(ev.nu_checked(0.0).is_err());
        let rel = SymbolEvaluator::new(ModelSpec::relativistic(1.0, 1)).unwrap();
        assert!(rel.nu_checked(2000.0).unwrap().underflow);
    }
}
