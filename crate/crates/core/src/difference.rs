//! Kernels of the difference process on the half-space `{x₁ > 0}` and the
//! ratio checks built on the reflection `x ↦ x̂`.

use serde::{Deserialize, Serialize};

use crate::dirichlet::{dist, reflect, Domain, DomainSpec, KilledProcess, PathBundle};
use crate::error::{Error, Result};
use crate::renewal::RenewalFunction;
use crate::report::McEstimate;
use crate::symbols::SymbolEvaluator;

/// Reflection in the first coordinate and the half-space split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReflectionFrame {
    pub d: usize,
}

impl ReflectionFrame {
    pub fn new(d: usize) -> Self {
        Self { d }
    }

    pub fn reflect(&self, x: &[f64]) -> Vec<f64> {
        reflect(x)
    }

    pub fn is_positive(&self, x: &[f64]) -> bool {
        x[0] > 0.0
    }

    pub fn is_negative(&self, x: &[f64]) -> bool {
        x[0] < 0.0
    }

    /// Membership in `D₊ = D ∩ {x₁ > 0}`.
    pub fn in_positive_part(&self, domain: &Domain, x: &[f64]) -> bool {
        self.is_positive(x) && domain.contains(x)
    }

    /// Membership in `D₋ = D ∩ {x₁ < 0}`.
    pub fn in_negative_part(&self, domain: &Domain, x: &[f64]) -> bool {
        self.is_negative(x) && domain.contains(x)
    }

    /// Point on the first axis at signed distance `s`.
    pub fn axis_point(&self, s: f64) -> Vec<f64> {
        let mut p = vec![0.0; self.d];
        p[0] = s;
        p
    }
}

/// `ν̃(x,y) = ν(x-y) - ν(x̂-y)`.
pub fn nu_tilde(ev: &SymbolEvaluator, x: &[f64], y: &[f64]) -> f64 {
    ev.nu(dist(x, y)) - ev.nu(dist(&reflect(x), y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyQuotientReport {
    /// `sup ν̃(v,z) / (|z-ẑ| ν(v-z)/(1∧|v-z|) (1 + |v-ẑ|/|v-z|))`.
    pub sup_ratio: f64,
    /// Smallest `ν̃` seen (nonnegative on the half-space).
    pub min_nu_tilde: f64,
    /// Largest `ν̃(v,z)/ν(v-z)` (at most one).
    pub max_share: f64,
    pub n: usize,
}

/// Lemma-style quotient of `ν̃` over `v = v₁e₁`, `z = z₁e₁ + s e₂` with
/// `v₁, z₁` and offsets `s` from the given lists (offsets are ignored in
/// dimension one); coincident points are skipped.
pub fn check_ab_levy_quotient(ev: &SymbolEvaluator, firsts: &[f64], offsets: &[f64]) -> Result<LevyQuotientReport> {
    let d = ev.d();
    let offsets: Vec<f64> = if d == 1 { vec![0.0] } else { offsets.to_vec() };
    let mut sup_ratio = 0.0f64;
    let mut min_nu_tilde = f64::INFINITY;
    let mut max_share = 0.0f64;
    let mut n = 0;
    for &v1 in firsts {
        for &z1 in firsts {
            for &s in &offsets {
                let mut v = vec![0.0; d];
                let mut z = vec![0.0; d];
                v[0] = v1;
                z[0] = z1;
                if d > 1 {
                    z[1] = s;
                }
                let r = dist(&v, &z);
                if r == 0.0 {
                    continue;
                }
                let nt = nu_tilde(ev, &v, &z);
                let zh = reflect(&z);
                let bound = dist(&z, &zh) * ev.nu(r) / r.min(1.0) * (1.0 + dist(&v, &zh) / r);
                let ratio = if bound == 0.0 { 0.0 } else { nt / bound };
                sup_ratio = sup_ratio.max(ratio);
                min_nu_tilde = min_nu_tilde.min(nt);
                max_share = max_share.max(nt / ev.nu(r));
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty grid for the jump-kernel quotient".into()));
    }
    Ok(LevyQuotientReport { sup_ratio, min_nu_tilde, max_share, n })
}

/// Per-path values of `p_D(t,x,y) - p_D(t,x̂,y)` from one bundle started at
/// `x` and its mirror image (exact coupling on a symmetric domain).
pub fn diff_values(proc_: &KilledProcess, bundle: &PathBundle, t: f64, y: &[f64]) -> Result<Vec<f64>> {
    let direct = bundle.pd_values(proc_.kernels(), t, y)?;
    let mirror = bundle.reflected().pd_values(proc_.kernels(), t, y)?;
    Ok(direct.iter().zip(&mirror).map(|(a, b)| a - b).collect())
}

fn require_symmetric(proc_: &KilledProcess) -> Result<()> {
    if !proc_.domain().is_symmetric() {
        return Err(Error::InvalidInput("the reflection coupling needs a symmetric domain".into()));
    }
    Ok(())
}

/// `p_D(t,x,y) - p_D(t,x̂,y)` with reflected common random numbers.
pub fn diff_pd(proc_: &KilledProcess, t: f64, x: &[f64], y: &[f64]) -> Result<McEstimate> {
    require_symmetric(proc_)?;
    let bundle = proc_.simulator().bundle(x, t)?;
    Ok(McEstimate::from_samples(&diff_values(proc_, &bundle, t, y)?, bundle.seed))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeyNode {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub diff: McEstimate,
    /// `p_t(x-y) - p_t(x̂-y)`.
    pub free_diff: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeyReport {
    pub nodes: Vec<KeyNode>,
    pub all_hold: bool,
}

/// `0 ≤ p_D(t,x,y) - p_D(t,x̂,y) ≤ p_t(x-y) - p_t(x̂-y)` within `z` standard
/// errors at every `(t, x, y)`; `x, y` must lie in `D₊`.
pub fn check_key(proc_: &KilledProcess, ts: &[f64], xs: &[Vec<f64>], ys: &[Vec<f64>], z: f64) -> Result<KeyReport> {
    require_symmetric(proc_)?;
    let frame = ReflectionFrame::new(proc_.domain().d());
    let mut nodes = Vec::new();
    for x in xs {
        if !frame.in_positive_part(proc_.domain(), x) {
            return Err(Error::InvalidInput(format!("x = {x:?} is not in the positive half of D")));
        }
        let bundle = proc_.bundle(x)?;
        for &t in ts {
            for y in ys {
                if !frame.in_positive_part(proc_.domain(), y) {
                    return Err(Error::InvalidInput(format!("y = {y:?} is not in the positive half of D")));
                }
                let diff = McEstimate::from_samples(&diff_values(proc_, &bundle, t, y)?, bundle.seed);
                let free_diff = proc_.kernels().free.diff_free(t, x, y)?;
                nodes.push(KeyNode {
                    t,
                    x: x.clone(),
                    y: y.clone(),
                    lower_ok: diff.mean >= -z * diff.stderr,
                    upper_ok: diff.mean <= free_diff + z * diff.stderr,
                    diff,
                    free_diff,
                });
            }
        }
    }
    let all_hold = nodes.iter().all(|n| n.lower_ok && n.upper_ok);
    Ok(KeyReport { nodes, all_hold })
}

/// The three half-ball estimates and the general-domain one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffLemma {
    /// `c |x̂-x| (1/r ∨ 1/V⁻¹(√t)) p_B(t,x,y)`, `y ∈ B₊`.
    HalfBall,
    /// `c |x-x̂|/|y| p_B(t,x,y)`, `y ∈ B₊(0, r/4)`.
    NearPole,
    /// `c |x̂-x|/r p_B(t,x,y)`, `y ∈ B₊ ∖ B₊(0, r/4)`.
    FarPole,
    /// `c |x̂-x| [1/r ∨ 1/V⁻¹(√t)] p_D(t,x,y)` on a symmetric domain.
    Domain,
}

impl DiffLemma {
    pub fn id(&self) -> &'static str {
        match self {
            DiffLemma::HalfBall => "diff-half-ball",
            DiffLemma::NearPole => "diff-near-pole",
            DiffLemma::FarPole => "diff-far-pole",
            DiffLemma::Domain => "diff-domain",
        }
    }

    /// Second-coordinate-free `y` placements for a ball of radius `r`, as
    /// `(first, lateral)` multiples of `r`.
    pub fn y_layout(&self) -> &'static [(f64, f64)] {
        match self {
            DiffLemma::HalfBall => &[(0.1, 0.0), (0.5, 0.3), (0.9, 0.0)],
            DiffLemma::NearPole => &[(1.0 / 16.0, 0.0), (0.125, 0.0625), (0.2, 0.0)],
            DiffLemma::FarPole => &[(0.3, 0.0), (0.6, 0.3), (0.9, 0.0)],
            DiffLemma::Domain => &[],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaNode {
    pub r: f64,
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub diff: McEstimate,
    pub kernel: McEstimate,
    /// The bound with `c = 1`.
    pub bound: f64,
    pub ratio: f64,
    pub ratio_se: f64,
    /// Whether the kernel estimate is clear of zero.
    pub resolved: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: DiffLemma,
    pub nodes: Vec<LemmaNode>,
    /// Sup over resolved nodes.
    pub sup_ratio: f64,
    pub sup_se: f64,
    pub unresolved: usize,
}

/// Fixed lemma grids: radii, times and pole offsets `|x|/r`.
pub const LEMMA_RADII: [f64; 2] = [0.5, 1.0];
pub const LEMMA_TIMES: [f64; 3] = [0.05, 0.3, 1.0];
pub const POLE_OFFSETS: [f64; 2] = [1.0 / 64.0, 1.0 / 32.0];

fn point(d: usize, first: f64, lateral: f64) -> Vec<f64> {
    let mut p = vec![0.0; d];
    p[0] = first;
    if d > 1 {
        p[1] = lateral;
    }
    p
}

fn lemma_node(
    proc_: &KilledProcess,
    v: &RenewalFunction,
    bundle: &PathBundle,
    lemma: DiffLemma,
    r: f64,
    t: f64,
    y: &[f64],
) -> Result<LemmaNode> {
    let x = &bundle.x;
    let diff = McEstimate::from_samples(&diff_values(proc_, bundle, t, y)?, bundle.seed);
    let kernel = bundle.pd(proc_.kernels(), t, y)?;
    let factor = match lemma {
        DiffLemma::HalfBall | DiffLemma::Domain => (1.0 / r).max(1.0 / v.v_inv(t.sqrt())),
        DiffLemma::NearPole => 1.0 / y.iter().map(|c| c * c).sum::<f64>().sqrt(),
        DiffLemma::FarPole => 1.0 / r,
    };
    let bound = 2.0 * x[0].abs() * factor * kernel.mean;
    let num = if lemma == DiffLemma::Domain { diff.mean.abs() } else { diff.mean };
    let ratio = num / bound;
    let rel = ((diff.stderr / diff.mean).powi(2) + (kernel.stderr / kernel.mean).powi(2)).sqrt();
    Ok(LemmaNode {
        r,
        t,
        x: x.clone(),
        y: y.to_vec(),
        resolved: kernel.mean > RESOLVED_Z * kernel.stderr,
        ratio_se: (ratio * rel).abs(),
        diff,
        kernel,
        bound,
        ratio,
    })
}

/// Nodes whose kernel estimate is within this many standard errors of zero
/// carry no ratio information and are left out of the sup.
pub const RESOLVED_Z: f64 = 3.0;

fn summarize(lemma: DiffLemma, nodes: Vec<LemmaNode>) -> Result<LemmaReport> {
    let top = nodes
        .iter()
        .filter(|n| n.resolved && n.ratio.is_finite())
        .max_by(|a, b| a.ratio.partial_cmp(&b.ratio).unwrap())
        .ok_or_else(|| Error::InvalidInput(format!("no resolved ratios for {}", lemma.id())))?;
    let (sup_ratio, sup_se) = (top.ratio, top.ratio_se);
    let unresolved = nodes.iter().filter(|n| !n.resolved).count();
    Ok(LemmaReport { lemma, nodes, sup_ratio, sup_se, unresolved })
}

/// Sup ratios of the half-ball estimates over `B(0,r)`, `r ∈ radii`, with
/// `x = |x| e₁` at `|x| ∈ POLE_OFFSETS·r`; the bundles are shared between
/// lemmas. `template` supplies the model, kernels and path configuration.
pub fn check_half_ball(
    template: &KilledProcess,
    v: &RenewalFunction,
    lemmas: &[DiffLemma],
    radii: &[f64],
    ts: &[f64],
) -> Result<Vec<LemmaReport>> {
    if lemmas.contains(&DiffLemma::Domain) {
        return Err(Error::InvalidInput("use check_m_estimate for a general domain".into()));
    }
    let d = template.domain().d();
    let mut nodes: Vec<Vec<LemmaNode>> = vec![Vec::new(); lemmas.len()];
    for &r in radii {
        let ball = template.with_domain(Domain::new(DomainSpec::centered_ball(d, r))?)?;
        for k in POLE_OFFSETS {
            let bundle = ball.bundle(&point(d, k * r, 0.0))?;
            for (i, lemma) in lemmas.iter().enumerate() {
                for &t in ts {
                    for (a, b) in lemma.y_layout() {
                        nodes[i].push(lemma_node(&ball, v, &bundle, *lemma, r, t, &point(d, a * r, b * r))?);
                    }
                }
            }
        }
    }
    lemmas.iter().zip(nodes).map(|(l, n)| summarize(*l, n)).collect()
}

fn single(template: &KilledProcess, v: &RenewalFunction, lemma: DiffLemma) -> Result<LemmaReport> {
    Ok(check_half_ball(template, v, &[lemma], &LEMMA_RADII, &LEMMA_TIMES)?.remove(0))
}

pub fn check_lem4(template: &KilledProcess, v: &RenewalFunction) -> Result<LemmaReport> {
    single(template, v, DiffLemma::HalfBall)
}

pub fn check_lem3(template: &KilledProcess, v: &RenewalFunction) -> Result<LemmaReport> {
    single(template, v, DiffLemma::NearPole)
}

pub fn check_lem5(template: &KilledProcess, v: &RenewalFunction) -> Result<LemmaReport> {
    single(template, v, DiffLemma::FarPole)
}

/// `|p_D(t,x,y) - p_D(t,x̂,y)| / (|x̂-x| [1/r ∨ 1/V⁻¹(√t)] p_D(t,x,y))` on a
/// symmetric domain containing the origin, `r = δ_D(0) ∧ 1`, `x = |x|e₁`
/// with `|x| ∈ POLE_OFFSETS·r`.
pub fn check_m_estimate(proc_: &KilledProcess, v: &RenewalFunction, ts: &[f64], ys: &[Vec<f64>]) -> Result<LemmaReport> {
    require_symmetric(proc_)?;
    let d = proc_.domain().d();
    let origin = vec![0.0; d];
    if !proc_.domain().contains(&origin) {
        return Err(Error::InvalidInput("domain must contain the origin".into()));
    }
    let r = proc_.domain().delta(&origin).min(1.0);
    let xs: Vec<Vec<f64>> = POLE_OFFSETS.iter().map(|k| point(d, k * r, 0.0)).collect();
    for y in ys {
        if !proc_.domain().contains(y) {
            return Err(Error::InvalidInput(format!("y = {y:?} is outside the domain")));
        }
    }
    let mut nodes = Vec::new();
    for x in &xs {
        let bundle = proc_.bundle(x)?;
        for &t in ts {
            for y in ys {
                nodes.push(lemma_node(proc_, v, &bundle, DiffLemma::Domain, r, t, y)?);
            }
        }
    }
    summarize(DiffLemma::Domain, nodes)
}

/// Whether two runs of the same check agree on the sup ratio within `z`
/// joint standard errors.
pub fn seed_stable(a: &LemmaReport, b: &LemmaReport, z: f64) -> bool {
    (a.sup_ratio - b.sup_ratio).abs() <= z * (a.sup_se.powi(2) + b.sup_se.powi(2)).sqrt()
}
