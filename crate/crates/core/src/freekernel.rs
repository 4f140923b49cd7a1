//! Free transition densities by radial Fourier (Hankel) inversion, the exact
//! radial derivative through the dimension lift, tabulated kernels for Monte
//! Carlo use, and the ratio checks on the free kernel.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interp::{log_grid, CubicSpline};
use crate::quad::{adaptive, bessel_oscillatory, OscOptions, QuadError};
use crate::renewal::RenewalFunction;
use crate::report::RatioBand;
use crate::special::{bessel_kernel_at_zero, sphere_area, MAX_TWO_NU};
use crate::symbols::{Family, SymbolEvaluator};

/// Quadrature controls for the Hankel inversion.
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    /// Frequencies with `tψ(s)` above this are past the nominal cutoff.
    pub tail_exponent: f64,
    pub direct_limit: usize,
    pub accel_start: usize,
    pub accel_terms: usize,
    pub rel_tol: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { tail_exponent: 40.0, direct_limit: 4000, accel_start: 100, accel_terms: 40, rel_tol: 1e-13 }
    }
}

/// Standard time grid: 9 log-spaced points on `[1e-2, 1]`.
pub fn standard_t_grid() -> Vec<f64> {
    log_grid(1e-2, 1.0, 9)
}

/// Standard radius grid: 17 log-spaced points on `[1e-2, R]`.
pub fn standard_r_grid(big_r: f64) -> Vec<f64> {
    log_grid(1e-2, big_r, 17)
}

/// Radial transition density `p_t(r)` of the model's exponent, evaluated in
/// dimension `dim`.
#[derive(Debug, Clone)]
pub struct RadialDensity {
    ev: Arc<SymbolEvaluator>,
    dim: usize,
    quad: QuadConfig,
}

impl RadialDensity {
    pub fn new(ev: Arc<SymbolEvaluator>, dim: usize) -> Result<Self> {
        if dim == 0 || dim as i32 - 2 > MAX_TWO_NU {
            return Err(Error::InvalidInput(format!("evaluation dimension {dim} outside 1..=6")));
        }
        Ok(Self { ev, dim, quad: QuadConfig::default() })
    }

    pub fn with_quad(mut self, quad: QuadConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn symbols(&self) -> &Arc<SymbolEvaluator> {
        &self.ev
    }

    /// `p_t(r) = (2π)^{-dim/2} ∫_0^∞ e^{-tψ(s)} s^{dim-1} Λ_ν(rs) ds` with
    /// `Λ_ν(x) = x^{-ν} J_ν(x)`, `ν = dim/2 - 1`.
    pub fn p(&self, t: f64, r: f64) -> Result<f64> {
        if !(t > 0.0) || !(r >= 0.0) {
            return Err(Error::InvalidInput(format!("p needs t > 0 and r >= 0, got t={t}, r={r}")));
        }
        let two_nu = self.dim as i32 - 2;
        let dimm1 = self.dim as i32 - 1;
        let norm = (2.0 * PI).powf(-(self.dim as f64) / 2.0);
        let ev = &self.ev;
        let amp = |s: f64| {
            if s == 0.0 {
                return if dimm1 == 0 { 1.0 } else { 0.0 };
            }
            (-t * ev.psi(s)).exp() * s.powi(dimm1)
        };
        let cutoff = ev.psi_inv(self.quad.tail_exponent / t);
        if !cutoff.is_finite() {
            return Err(Error::Quadrature(QuadError::TailNotSettled { spread: f64::INFINITY, intervals: 0 }));
        }
        if r * cutoff < 1e-9 {
            return Ok(norm * bessel_kernel_at_zero(two_nu) * self.mass_integral(&amp, cutoff)?);
        }
        let opts = OscOptions {
            cutoff: Some(cutoff),
            direct_limit: self.quad.direct_limit,
            accel_start: self.quad.accel_start,
            accel_terms: self.quad.accel_terms,
            rel_tol: self.quad.rel_tol,
            abs_tol: 0.0,
        };
        let res = bessel_oscillatory(two_nu, r, 0.0, &amp, opts)?;
        Ok(norm * res.value)
    }

    /// `∫_0^∞ amp(s) ds` for the non-oscillatory case, on unit panels in `ln s`
    /// around the cutoff, continued until the panels are negligible.
    fn mass_integral<F: Fn(f64) -> f64>(&self, amp: &F, cutoff: f64) -> Result<f64> {
        let g = |u: f64| {
            let s = u.exp();
            amp(s) * s
        };
        let u0 = cutoff.ln();
        let mut total = 0.0;
        // upward
        let mut u = u0;
        for _ in 0..400 {
            let piece = adaptive(&g, u, u + 0.5, 0.0, self.quad.rel_tol)?;
            total += piece;
            u += 0.5;
            if piece.abs() <= 1e-18 * total.abs() {
                break;
            }
        }
        // downward
        let mut u = u0;
        for _ in 0..2000 {
            let piece = adaptive(&g, u - 0.5, u, 0.0, self.quad.rel_tol)?;
            total += piece;
            u -= 0.5;
            if piece.abs() <= 1e-18 * total.abs() && u < u0 - 5.0 {
                break;
            }
        }
        Ok(total)
    }
}

/// `p_t(r)` in the model's own dimension.
pub fn p(ev: &Arc<SymbolEvaluator>, t: f64, r: f64) -> Result<f64> {
    RadialDensity::new(ev.clone(), ev.d())?.p(t, r)
}

/// Radial derivative of `p_t` through the dimension lift:
/// `d/dr p_t(r) = -2πr p_t^{(d+2)}(r)`.
pub fn dp_dr(ev: &Arc<SymbolEvaluator>, t: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("dp_dr needs r > 0, got {r}")));
    }
    let lifted = RadialDensity::new(ev.clone(), ev.d() + 2)?;
    Ok(-2.0 * PI * r * lifted.p(t, r)?)
}

/// Pair of densities in dimensions `d` and `d + 2`.
#[derive(Debug, Clone)]
pub struct FreeKernel {
    pub base: RadialDensity,
    pub lifted: RadialDensity,
}

impl FreeKernel {
    pub fn new(ev: Arc<SymbolEvaluator>) -> Result<Self> {
        let d = ev.d();
        Ok(Self { base: RadialDensity::new(ev.clone(), d)?, lifted: RadialDensity::new(ev, d + 2)? })
    }

    pub fn symbols(&self) -> &Arc<SymbolEvaluator> {
        self.base.symbols()
    }

    pub fn d(&self) -> usize {
        self.base.dim()
    }

    pub fn p(&self, t: f64, r: f64) -> Result<f64> {
        self.base.p(t, r)
    }

    pub fn dp_dr(&self, t: f64, r: f64) -> Result<f64> {
        Ok(-2.0 * PI * r * self.lifted.p(t, r)?)
    }

    /// Reflected difference `p_t(x - y) - p_t(x̂ - y)`.
    pub fn diff_free(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        let (direct, reflected) = reflected_distances(x, y);
        Ok(self.p(t, direct)? - self.p(t, reflected)?)
    }

    /// Writes a `t × r` matrix of `p` (or of `dp/dr` when `derivative`).
    pub fn write_matrix_csv<W: Write>(&self, mut out: W, ts: &[f64], rs: &[f64], derivative: bool) -> Result<()> {
        write!(out, "t\\r")?;
        for r in rs {
            write!(out, ",{r:e}")?;
        }
        writeln!(out)?;
        for &t in ts {
            write!(out, "{t:e}")?;
            for &r in rs {
                let v = if derivative { self.dp_dr(t, r)? } else { self.p(t, r)? };
                write!(out, ",{v:e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// `(|x - y|, |x̂ - y|)` with `x̂` the reflection in the first coordinate.
pub fn reflected_distances(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mut direct = 0.0;
    let mut refl = 0.0;
    for i in 0..x.len() {
        let a = x[i] - y[i];
        let b = if i == 0 { -x[0] - y[0] } else { a };
        direct += a * a;
        refl += b * b;
    }
    (direct.sqrt(), refl.sqrt())
}

// ---- tabulated kernel for Monte Carlo -----------------------------------

#[derive(Debug, Clone)]
enum TableKind {
    /// `p_s(r) = s^{-d/α} p_1(r s^{-1/α})` with a table of `ln p_1`.
    Stable { alpha: f64, rows: Row },
    /// Rows of `ln p_s` over `ln r`, one per node `ln s`.
    General { ln_s: Vec<f64>, rows: Vec<Row> },
}

/// `ln p` over `ln r` up to `ln r_end`, beyond which the tail follows `ν`.
#[derive(Debug, Clone)]
struct Row {
    spline: CubicSpline,
    ln_r_end: f64,
}

impl Row {
    fn eval(&self, ev: &SymbolEvaluator, ln_r: f64) -> f64 {
        if ln_r <= self.ln_r_end {
            self.spline.eval(ln_r)
        } else {
            let end = self.spline.eval(self.ln_r_end);
            end + ev.ln_nu(ln_r.exp()) - ev.ln_nu(self.ln_r_end.exp())
        }
    }
}

/// Interpolated `p_s(r)` for `s ∈ [s_min, s_max]`, fast enough for per-path use.
#[derive(Debug, Clone)]
pub struct KernelTable {
    ev: Arc<SymbolEvaluator>,
    kind: TableKind,
    s_min: f64,
    s_max: f64,
    ln_r_min: f64,
}

impl KernelTable {
    /// Builds the table with radii in `[1e-3, r_max]`.
    pub fn build(ev: Arc<SymbolEvaluator>, s_min: f64, s_max: f64, r_max: f64) -> Result<Self> {
        let density = RadialDensity::new(ev.clone(), ev.d())?;
        let spec = *ev.spec();
        let r_min = 1e-3;
        let kind = if spec.family == Family::Stable {
            let rho_max = 1e4;
            let nodes = log_grid(r_min, rho_max, 211);
            let values = nodes
                .par_iter()
                .map(|&rho| density.p(1.0, rho))
                .collect::<Result<Vec<f64>>>()?;
            TableKind::Stable { alpha: spec.alpha, rows: make_row(&nodes, &values)? }
        } else {
            let decades = (s_max / s_min).log10().max(0.0);
            let ns = ((decades * 20.0).ceil() as usize + 1).max(4);
            let s_nodes = log_grid(s_min, s_max.max(s_min * 1.0001), ns);
            let nr = ((r_max / r_min).log10() * 30.0).ceil() as usize + 1;
            let r_nodes = log_grid(r_min, r_max, nr);
            let rows = s_nodes
                .par_iter()
                .map(|&s| {
                    // a quadrature failure deep in the tail ends the row there
                    let mut values = Vec::with_capacity(r_nodes.len());
                    for &r in &r_nodes {
                        match density.p(s, r) {
                            Ok(v) => values.push(v),
                            Err(Error::Quadrature(_)) if values.len() >= 3 => break,
                            Err(e) => return Err(e),
                        }
                    }
                    make_row(&r_nodes[..values.len()], &values)
                })
                .collect::<Result<Vec<Row>>>()?;
            TableKind::General { ln_s: s_nodes.iter().map(|s| s.ln()).collect(), rows }
        };
        Ok(Self { ev, kind, s_min, s_max, ln_r_min: r_min.ln() })
    }

    pub fn s_range(&self) -> (f64, f64) {
        (self.s_min, self.s_max)
    }

    /// `p_s(r)`; `s` is clamped to the table range, small `r` to `1e-3`.
    pub fn eval(&self, s: f64, r: f64) -> f64 {
        let s = s.clamp(self.s_min, self.s_max);
        let ev = &*self.ev;
        match &self.kind {
            TableKind::Stable { alpha, rows } => {
                let d = ev.d() as f64;
                let rho = r * s.powf(-1.0 / alpha);
                let ln_rho = rho.max(1e-300).ln().max(self.ln_r_min);
                (rows.eval(ev, ln_rho) - d / alpha * s.ln()).exp()
            }
            TableKind::General { ln_s, rows } => {
                let ln_r = r.max(1e-300).ln().max(self.ln_r_min);
                let x = s.ln();
                let n = ln_s.len();
                let i = crate::interp::locate(ln_s, x);
                // cubic Lagrange in ln s through four neighbouring rows
                let start = i.saturating_sub(1).min(n.saturating_sub(4));
                let idx: Vec<usize> = (start..(start + 4).min(n)).collect();
                let mut acc = 0.0;
                for &a in &idx {
                    let mut w = 1.0;
                    for &b in &idx {
                        if a != b {
                            w *= (x - ln_s[b]) / (ln_s[a] - ln_s[b]);
                        }
                    }
                    acc += w * rows[a].eval(ev, ln_r);
                }
                acc.exp()
            }
        }
    }
}

/// Spline row of `ln p`, cut where the values stop being trustworthy
/// (non-positive, increasing, or below 1e-11 of the first value).
fn make_row(r_nodes: &[f64], values: &[f64]) -> Result<Row> {
    let first = values[0];
    if !(first > 0.0) {
        return Err(Error::InvalidInput("density table starts with a non-positive value".into()));
    }
    let mut end = values.len();
    for i in 1..values.len() {
        if !(values[i] > 1e-11 * first) || values[i] > values[i - 1] {
            end = i;
            break;
        }
    }
    let end = end.max(3);
    let xs: Vec<f64> = r_nodes[..end].iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = values[..end].iter().map(|v| v.max(1e-300).ln()).collect();
    let ln_r_end = xs[end - 1];
    Ok(Row { spline: CubicSpline::new(xs, ys), ln_r_end })
}

// ---- ratio checks ---------------------------------------------------------

fn v_inv_sqrt(v: &RenewalFunction, t: f64) -> f64 {
    v.v_inv(t.sqrt())
}

/// Evaluates `f` over a `(t, r)` grid in parallel, in grid order.
fn sweep<F>(ts: &[f64], rs: &[f64], f: F) -> Result<Vec<(f64, f64, f64)>>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    let pairs: Vec<(f64, f64)> = ts.iter().flat_map(|&t| rs.iter().map(move |&r| (t, r))).collect();
    pairs.par_iter().map(|&(t, r)| f(t, r).map(|v| (t, r, v))).collect()
}

/// Band of `p_t(r) / min(p_t(0), t/(V²(r) r^d))`.
pub fn check_upper(k: &FreeKernel, v: &RenewalFunction, ts: &[f64], rs: &[f64]) -> Result<RatioBand> {
    let d = k.d() as i32;
    let vals = sweep(ts, rs, |t, r| {
        let vr = v.v(r);
        Ok(k.p(t, r)? / k.p(t, 0.0)?.min(t / (vr * vr * r.powi(d))))
    })?;
    band("upper", &vals)
}

/// Largest `c` in `p_t(r) ≥ c t ν(r) exp(-c₁ t / V²(r))` over the grid, for
/// the best `c₁ ∈ {1, 2, 4, 8}`. Returns `(c, c₁)`.
pub fn check_lower(k: &FreeKernel, v: &RenewalFunction, ts: &[f64], rs: &[f64]) -> Result<(f64, f64)> {
    let ev = k.symbols();
    let raw = sweep(ts, rs, |t, r| k.p(t, r))?;
    let mut best = (0.0, 1.0);
    for c1 in [1.0, 2.0, 4.0, 8.0] {
        let c = raw
            .iter()
            .map(|&(t, r, pv)| {
                let vr = v.v(r);
                pv / (t * ev.nu(r) * (-c1 * t / (vr * vr)).exp())
            })
            .fold(f64::INFINITY, f64::min);
        if c > best.0 {
            best = (c, c1);
        }
    }
    Ok(best)
}

/// Band of `p_t(r) / min{[V⁻¹(√t)]^{-d}, t/(V²(r) r^d)}`.
pub fn check_comparability(k: &FreeKernel, v: &RenewalFunction, ts: &[f64], rs: &[f64]) -> Result<RatioBand> {
    let d = k.d() as i32;
    let vals = sweep(ts, rs, |t, r| {
        let vr = v.v(r);
        let a = v_inv_sqrt(v, t).powi(-d);
        let b = t / (vr * vr * r.powi(d));
        Ok(k.p(t, r)? / a.min(b))
    })?;
    band("comparability", &vals)
}

/// Gradient comparability bands: the small-`r` regime `r < V⁻¹(√t)` against
/// `r [V⁻¹(√t)]^{-d-2}`, the large-`r` regime against `t/(V²(r) r^{d+1})`,
/// and the combined form.
#[derive(Debug, Clone)]
pub struct GradComparability {
    pub small: Option<RatioBand>,
    pub large: Option<RatioBand>,
    pub combined: RatioBand,
}

pub fn check_grad_comparability(
    k: &FreeKernel,
    v: &RenewalFunction,
    ts: &[f64],
    rs: &[f64],
) -> Result<GradComparability> {
    let d = k.d() as i32;
    let vals = sweep(ts, rs, |t, r| k.dp_dr(t, r).map(f64::abs))?;
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut combined = Vec::new();
    for &(t, r, g) in &vals {
        let vi = v_inv_sqrt(v, t);
        let vr = v.v(r);
        let a = r * vi.powi(-d - 2);
        let b = t / (vr * vr * r.powi(d + 1));
        if r < vi {
            small.push(g / a);
        } else {
            large.push(g / b);
        }
        combined.push(g / a.min(b));
    }
    Ok(GradComparability {
        small: RatioBand::from_values("grad-small-r", &small),
        large: RatioBand::from_values("grad-large-r", &large),
        combined: RatioBand::from_values("grad-combined", &combined)
            .ok_or_else(|| Error::InvalidInput("empty grid".into()))?,
    })
}

/// Band of `|p′_t(r)| / (p_t(r)/r ∧ p_t(r)/V⁻¹(√t))`.
pub fn check_derestimate(k: &FreeKernel, v: &RenewalFunction, ts: &[f64], rs: &[f64]) -> Result<RatioBand> {
    let vals = sweep(ts, rs, |t, r| {
        let pv = k.p(t, r)?;
        let bound = (pv / r).min(pv / v_inv_sqrt(v, t));
        Ok(k.dp_dr(t, r)?.abs() / bound)
    })?;
    band("derestimate", &vals)
}

/// Band of `p_t(0) [V⁻¹(√t)]^d`.
pub fn check_p0(k: &FreeKernel, v: &RenewalFunction, ts: &[f64]) -> Result<RatioBand> {
    let d = k.d() as i32;
    let vals = sweep(ts, &[0.0], |t, _| Ok(k.p(t, 0.0)? * v_inv_sqrt(v, t).powi(d)))?;
    band("p0", &vals)
}

/// Band of `ν(r) V²(r) r^d` on `rs`, and `sup ν(r)/ν(2r)`.
pub fn check_nu_estimates(ev: &SymbolEvaluator, v: &RenewalFunction, rs: &[f64]) -> (RatioBand, f64) {
    let d = ev.d() as i32;
    let vals: Vec<f64> = rs
        .iter()
        .map(|&r| {
            let vr = v.v(r);
            ev.nu(r) * vr * vr * r.powi(d)
        })
        .collect();
    let doubling = rs.iter().map(|&r| (ev.ln_nu(r) - ev.ln_nu(2.0 * r)).exp()).fold(0.0, f64::max);
    (RatioBand::from_values("nu-estimates", &vals).expect("nonempty grid"), doubling)
}

/// Largest relative gap between the lifted derivative and a fourth-order
/// central difference of `p` (step `r/100`) over nodes where the lifted
/// value exceeds `floor`. Returns `(max gap, nodes compared)`.
pub fn check_lift(k: &FreeKernel, ts: &[f64], rs: &[f64], floor: f64) -> Result<(f64, usize)> {
    let vals = sweep(ts, rs, |t, r| {
        let lift = k.dp_dr(t, r)?;
        if lift.abs() <= floor {
            return Ok(f64::NAN);
        }
        let fd = central_difference(|x| k.p(t, x), r, 1e-2 * r)?;
        Ok((lift - fd).abs() / lift.abs())
    })?;
    let used: Vec<f64> = vals.iter().map(|v| v.2).filter(|v| !v.is_nan()).collect();
    Ok((used.iter().copied().fold(0.0, f64::max), used.len()))
}

/// Fourth-order central difference.
pub fn central_difference<F: Fn(f64) -> Result<f64>>(f: F, x: f64, h: f64) -> Result<f64> {
    let a = f(x + h)? - f(x - h)?;
    let b = f(x + 2.0 * h)? - f(x - 2.0 * h)?;
    Ok((8.0 * a - b) / (12.0 * h))
}

/// Total mass `ω_d ∫_0^∞ p_t(r) r^{d-1} dr`: Gauss-Legendre panels in `ln r`
/// up to `r_max`, plus the first-order tail `t ν(r > r_max)`.
pub fn total_mass(k: &FreeKernel, t: f64, r_max: f64) -> Result<f64> {
    let ev = k.symbols();
    let d = k.d() as i32;
    let rule = crate::quad::GaussLegendre::new(16);
    let lo = (r_max * 1e-9).ln();
    let hi = r_max.ln();
    let panels = ((hi - lo) / 0.5).ceil() as usize;
    let width = (hi - lo) / panels as f64;
    let nodes: Vec<(f64, f64)> = (0..panels)
        .flat_map(|i| {
            let a = lo + i as f64 * width;
            let b = a + width;
            let c = 0.5 * (a + b);
            let h = 0.5 * width;
            rule.nodes.iter().zip(&rule.weights).map(move |(&x, &w)| (c + h * x, w * h)).collect::<Vec<_>>()
        })
        .collect();
    let parts = nodes
        .par_iter()
        .map(|&(u, w)| {
            let r = u.exp();
            k.p(t, r).map(|pv| w * pv * r.powi(d))
        })
        .collect::<Result<Vec<f64>>>()?;
    let head = sphere_area(k.d()) * parts.iter().sum::<f64>();
    // below r_max·1e-9 the density is flat: ω_d p_t(0) r^d / d
    let core = sphere_area(k.d()) * k.p(t, 0.0)? * (r_max * 1e-9).powi(d) / d as f64;
    Ok(head + core + t * ev.tail_mass(r_max)?)
}

/// Whether `r ↦ p_t(r)` is nonincreasing on the grid, up to `tol` relative.
pub fn check_unimodal(k: &FreeKernel, t: f64, rs: &[f64], tol: f64) -> Result<bool> {
    let vals = rs.par_iter().map(|&r| k.p(t, r)).collect::<Result<Vec<f64>>>()?;
    Ok(vals.windows(2).all(|w| w[1] <= w[0] * (1.0 + tol)))
}

/// Sup over pairs `(x, y)` in the half-space of
/// `(p_t(x-y) - p_t(x̂-y)) / (|x̂-x| (p_t(x-y)/|x-y| ∧ p_t(x-y)/V⁻¹(√t)))`,
/// together with the smallest difference seen (which must be nonnegative).
pub fn check_lem1(
    k: &FreeKernel,
    v: &RenewalFunction,
    ts: &[f64],
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<(RatioBand, f64)> {
    let jobs: Vec<(f64, usize)> = ts.iter().flat_map(|&t| (0..pairs.len()).map(move |i| (t, i))).collect();
    let out = jobs
        .par_iter()
        .map(|&(t, i)| {
            let (x, y) = &pairs[i];
            let (direct, _) = reflected_distances(x, y);
            let diff = k.diff_free(t, x, y)?;
            let pv = k.p(t, direct)?;
            let bound = 2.0 * x[0].abs() * (pv / direct).min(pv / v_inv_sqrt(v, t));
            Ok((diff / bound, diff))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let ratios: Vec<f64> = out.iter().map(|o| o.0).collect();
    let min_diff = out.iter().map(|o| o.1).fold(f64::INFINITY, f64::min);
    Ok((
        RatioBand::from_values("lem-free-difference", &ratios).ok_or_else(|| Error::InvalidInput("empty grid".into()))?,
        min_diff,
    ))
}

fn band(id: &str, vals: &[(f64, f64, f64)]) -> Result<RatioBand> {
    let v: Vec<f64> = vals.iter().map(|x| x.2).collect();
    RatioBand::from_values(id, &v).ok_or_else(|| Error::InvalidInput(format!("no finite values for {id}")))
}
