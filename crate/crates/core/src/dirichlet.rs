//! Monte Carlo for the process killed on leaving a domain: exit sampling,
//! survival probabilities, the Dirichlet heat kernel and its gradient, the
//! principal eigenvalue of a ball, and the checks built on these.
//!
//! Paths are compound Poisson in the jumps larger than `eps`, with the small
//! jumps either replaced by a Brownian motion of matched covariance or
//! dropped. Exits are detected at jump landings and at the end of each
//! Gaussian step.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freekernel::{FreeKernel, KernelTable};
use crate::interp::{log_grid, Pchip};
use crate::quad::{adaptive, GaussLegendre};
use crate::renewal::RenewalFunction;
use crate::report::{joint_stderr, McEstimate, RatioBand};
use crate::special::sphere_area;
use crate::symbols::{Family, SymbolEvaluator};

// ---- domains -------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// A ball, or a finite union of balls closed under `x ↦ x̂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Ball { center: Vec<f64>, radius: f64 },
    SymmetricUnionOfBalls { balls: Vec<BallSpec> },
}

impl DomainSpec {
    pub fn centered_ball(d: usize, radius: f64) -> Self {
        DomainSpec::Ball { center: vec![0.0; d], radius }
    }

    /// The union of `balls` and their reflections.
    pub fn symmetrized(balls: Vec<BallSpec>) -> Self {
        let mut all: Vec<BallSpec> = Vec::new();
        for b in balls {
            let r = BallSpec { center: reflect(&b.center), radius: b.radius };
            if !all.iter().any(|a| same_ball(a, &b)) {
                all.push(b);
            }
            if !all.iter().any(|a| same_ball(a, &r)) {
                all.push(r);
            }
        }
        DomainSpec::SymmetricUnionOfBalls { balls: all }
    }

    fn balls(&self) -> Vec<BallSpec> {
        match self {
            DomainSpec::Ball { center, radius } => vec![BallSpec { center: center.clone(), radius: *radius }],
            DomainSpec::SymmetricUnionOfBalls { balls } => balls.clone(),
        }
    }
}

fn same_ball(a: &BallSpec, b: &BallSpec) -> bool {
    (a.radius - b.radius).abs() <= 1e-12 && dist(&a.center, &b.center) <= 1e-12
}

/// `x̂ = (-x₁, x₂, …, x_d)`.
pub fn reflect(x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    if let Some(first) = y.first_mut() {
        *first = -*first;
    }
    y
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// A validated open domain.
#[derive(Debug, Clone)]
pub struct Domain {
    spec: DomainSpec,
    d: usize,
    balls: Vec<BallSpec>,
    /// Connected components in dimension one, as disjoint open intervals.
    intervals: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(spec: DomainSpec) -> Result<Self> {
        let balls = spec.balls();
        if balls.is_empty() {
            return Err(Error::InvalidInput("domain needs at least one ball".into()));
        }
        let d = balls[0].center.len();
        if d == 0 {
            return Err(Error::InvalidInput("domain dimension must be positive".into()));
        }
        for b in &balls {
            if b.center.len() != d || !(b.radius > 0.0) || b.center.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput("balls need a common dimension and positive radius".into()));
            }
        }
        if let DomainSpec::SymmetricUnionOfBalls { .. } = spec {
            for b in &balls {
                let r = BallSpec { center: reflect(&b.center), radius: b.radius };
                if !balls.iter().any(|a| same_ball(a, &r)) {
                    return Err(Error::InvalidInput("union of balls is not closed under reflection".into()));
                }
            }
        }
        let intervals = if d == 1 { merge_intervals(&balls) } else { Vec::new() };
        Ok(Self { spec, d, balls, intervals })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.balls.iter().any(|b| {
            let mut s = 0.0;
            for (xi, ci) in x.iter().zip(&b.center) {
                s += (xi - ci) * (xi - ci);
            }
            s < b.radius * b.radius
        })
    }

    /// Distance from `x` to the domain (zero inside or on the boundary).
    pub fn dist_outside(&self, x: &[f64]) -> f64 {
        self.balls.iter().map(|b| (dist(x, &b.center) - b.radius).max(0.0)).fold(f64::INFINITY, f64::min)
    }

    /// `δ_D(x) = dist(x, D^c)`. Exact in dimensions one and two; in higher
    /// dimensions for unions of several balls it is the lower bound
    /// `max_i (r_i - |x - c_i|)`.
    pub fn delta(&self, x: &[f64]) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        if self.d == 1 {
            return self
                .intervals
                .iter()
                .find(|(a, b)| *a < x[0] && x[0] < *b)
                .map(|(a, b)| (x[0] - a).min(b - x[0]))
                .unwrap_or(0.0);
        }
        if self.balls.len() == 1 || self.d > 2 {
            return self.balls.iter().map(|b| b.radius - dist(x, &b.center)).fold(0.0, f64::max);
        }
        // plane: nearest boundary point is a projection onto a circle or a
        // crossing point of two circles, whichever is not inside another disc
        let mut best = f64::INFINITY;
        let exposed = |p: &[f64], skip: &[usize]| {
            self.balls
                .iter()
                .enumerate()
                .all(|(k, b)| skip.contains(&k) || dist(p, &b.center) >= b.radius * (1.0 - 1e-12))
        };
        for (i, b) in self.balls.iter().enumerate() {
            let r = dist(x, &b.center);
            let p: Vec<f64> = if r > 0.0 {
                b.center.iter().zip(x).map(|(c, xi)| c + b.radius * (xi - c) / r).collect()
            } else {
                vec![b.center[0] + b.radius, b.center[1]]
            };
            if exposed(&p, &[i]) {
                best = best.min(dist(x, &p));
            }
            for (j, c) in self.balls.iter().enumerate().skip(i + 1) {
                for p in circle_crossings(b, c) {
                    if exposed(&p, &[i, j]) {
                        best = best.min(dist(x, &p));
                    }
                }
            }
        }
        best
    }

    /// Diameter of the union.
    pub fn diam(&self) -> f64 {
        let mut out = 0.0f64;
        for a in &self.balls {
            for b in &self.balls {
                out = out.max(dist(&a.center, &b.center) + a.radius + b.radius);
            }
        }
        out
    }

    /// Whether the domain is closed under `x ↦ x̂`.
    pub fn is_symmetric(&self) -> bool {
        self.balls.iter().all(|b| {
            let r = BallSpec { center: reflect(&b.center), radius: b.radius };
            self.balls.iter().any(|a| same_ball(a, &r))
        })
    }

    /// The single ball when the domain is one.
    pub fn as_ball(&self) -> Option<(&[f64], f64)> {
        match &self.spec {
            DomainSpec::Ball { center, radius } => Some((center.as_slice(), *radius)),
            _ => None,
        }
    }

    /// Connected components in dimension one.
    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }
}

fn merge_intervals(balls: &[BallSpec]) -> Vec<(f64, f64)> {
    let mut iv: Vec<(f64, f64)> = balls.iter().map(|b| (b.center[0] - b.radius, b.center[0] + b.radius)).collect();
    iv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in iv {
        match out.last_mut() {
            // touching open intervals stay separate: the common endpoint is outside
            Some(last) if a < last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

fn circle_crossings(a: &BallSpec, b: &BallSpec) -> Vec<Vec<f64>> {
    let dx = b.center[0] - a.center[0];
    let dy = b.center[1] - a.center[1];
    let dd = (dx * dx + dy * dy).sqrt();
    if dd == 0.0 || dd > a.radius + b.radius || dd < (a.radius - b.radius).abs() {
        return Vec::new();
    }
    let l = (a.radius * a.radius - b.radius * b.radius + dd * dd) / (2.0 * dd);
    let h = (a.radius * a.radius - l * l).max(0.0).sqrt();
    let (ux, uy) = (dx / dd, dy / dd);
    let (mx, my) = (a.center[0] + l * ux, a.center[1] + l * uy);
    vec![vec![mx - h * uy, my + h * ux], vec![mx + h * uy, my - h * ux]]
}

// ---- path configuration and jump law ---------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    /// Jumps shorter than this are not simulated individually.
    pub eps: f64,
    pub dt: f64,
    /// Replace the small jumps by Brownian motion of matched covariance;
    /// when false they are dropped.
    pub substitute_gaussian: bool,
    pub n_paths: usize,
    pub seed: u64,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self { eps: 0.01, dt: 1e-3, substitute_gaussian: true, n_paths: 20_000, seed: 1 }
    }
}

impl PathConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_paths(mut self, n: usize) -> Self {
        self.n_paths = n;
        self
    }

    /// The configuration with `eps` and `dt` divided by `k`.
    pub fn refined(mut self, k: f64) -> Self {
        self.eps /= k;
        self.dt /= k;
        self
    }

    /// The configuration with `dt` reduced, if needed, so that a step carries
    /// at most 0.1 expected big jumps under `ev`.
    pub fn fitted(mut self, ev: &SymbolEvaluator) -> Result<Self> {
        let rate = JumpLaw::new(ev, self.eps)?.rate;
        if rate * self.dt > 0.1 {
            self.dt = 0.1 / rate;
        }
        Ok(self)
    }
}

#[derive(Debug, Clone)]
enum RadiusLaw {
    /// `R = eps U^{-1/α}`.
    Stable { alpha: f64 },
    /// `ln R` as a function of the normalized cumulative mass.
    Table(Pchip),
}

/// The big-jump law: rate, radial distribution, and small-jump variance.
#[derive(Debug, Clone)]
pub struct JumpLaw {
    d: usize,
    eps: f64,
    rate: f64,
    /// Per-coordinate standard deviation of the Gaussian part per unit time.
    sigma: f64,
    radius: RadiusLaw,
}

impl JumpLaw {
    pub fn new(ev: &SymbolEvaluator, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        let d = ev.d();
        let rate = ev.tail_mass(eps)?;
        let sigma = (ev.small_jump_moment(eps)? / d as f64).sqrt();
        let radius = if ev.spec().family == Family::Stable {
            RadiusLaw::Stable { alpha: ev.spec().alpha }
        } else {
            let top = ev.negligible_radius();
            let nodes = log_grid(eps, top, 600);
            let omega = sphere_area(d);
            let g = |u: f64| {
                let r = u.exp();
                omega * ev.nu(r) * r.powi(d as i32)
            };
            let mut cum = vec![0.0];
            for w in nodes.windows(2) {
                let piece = adaptive(&g, w[0].ln(), w[1].ln(), 0.0, 1e-10)?;
                cum.push(cum.last().unwrap() + piece);
            }
            let total = *cum.last().unwrap();
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (c, r) in cum.iter().zip(&nodes) {
                let f = c / total;
                if xs.last().map_or(true, |&l| f > l) {
                    xs.push(f);
                    ys.push(r.ln());
                }
            }
            RadiusLaw::Table(Pchip::new(xs, ys))
        };
        Ok(Self { d, eps, rate, sigma, radius })
    }

    /// `ν({|x| > eps})`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn sample_radius<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = 1.0 - rng.gen::<f64>();
        match &self.radius {
            RadiusLaw::Stable { alpha } => self.eps * u.powf(-1.0 / alpha),
            RadiusLaw::Table(t) => t.eval(1.0 - u).exp(),
        }
    }

    fn add_jump<R: Rng>(&self, rng: &mut R, pos: &mut [f64]) {
        let r = self.sample_radius(rng);
        if self.d == 1 {
            pos[0] += if rng.gen::<bool>() { r } else { -r };
            return;
        }
        let mut dir = [0.0f64; 8];
        let dir = &mut dir[..self.d];
        let mut n2 = 0.0;
        while n2 < 1e-300 {
            n2 = 0.0;
            for v in dir.iter_mut() {
                *v = rng.sample(StandardNormal);
                n2 += *v * *v;
            }
        }
        let scale = r / n2.sqrt();
        for (p, v) in pos.iter_mut().zip(dir.iter()) {
            *p += scale * v;
        }
    }
}

// ---- exit sampling -----------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct ExitSample {
    /// Exit time, or the horizon when censored.
    pub tau: f64,
    /// Position at exit, or at the horizon when censored.
    pub exit_point: Vec<f64>,
    pub censored: bool,
}

impl ExitSample {
    /// Whether the path is still alive at time `t`.
    pub fn alive_at(&self, t: f64) -> bool {
        self.censored || self.tau > t
    }
}

/// Path simulator for one model, domain and configuration.
#[derive(Debug, Clone)]
pub struct Simulator {
    domain: Domain,
    law: JumpLaw,
    cfg: PathConfig,
}

impl Simulator {
    pub fn new(ev: &SymbolEvaluator, domain: Domain, cfg: PathConfig) -> Result<Self> {
        if domain.d() != ev.d() {
            return Err(Error::InvalidInput("domain and model dimensions differ".into()));
        }
        if ev.d() > 8 {
            return Err(Error::InvalidInput("path simulation supports d ≤ 8".into()));
        }
        if !(cfg.dt > 0.0) || cfg.n_paths == 0 {
            return Err(Error::InvalidInput("dt and n_paths must be positive".into()));
        }
        let law = JumpLaw::new(ev, cfg.eps)?;
        if law.rate * cfg.dt > 0.1 * (1.0 + 1e-9) {
            return Err(Error::InvalidInput(format!(
                "big-jump rate {} times dt {} exceeds 0.1",
                law.rate, cfg.dt
            )));
        }
        Ok(Self { domain, law, cfg })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn config(&self) -> &PathConfig {
        &self.cfg
    }

    pub fn law(&self) -> &JumpLaw {
        &self.law
    }

    /// A simulator on another domain with the same law and configuration.
    pub fn with_domain(&self, domain: Domain) -> Result<Self> {
        if domain.d() != self.domain.d() {
            return Err(Error::InvalidInput("domain dimension changed".into()));
        }
        Ok(Self { domain, law: self.law.clone(), cfg: self.cfg })
    }

    pub fn with_config(&self, ev: &SymbolEvaluator, cfg: PathConfig) -> Result<Self> {
        Self::new(ev, self.domain.clone(), cfg)
    }

    fn check_start(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.domain.d() {
            return Err(Error::InvalidInput("starting point has the wrong dimension".into()));
        }
        if !self.domain.contains(x) && self.domain.dist_outside(x) > 1e-12 {
            return Err(Error::InvalidInput(format!("starting point {x:?} is outside the domain")));
        }
        Ok(())
    }

    /// One path from `x` up to `horizon`, drawn from stream `index` of the
    /// configured seed.
    pub fn sample_exit(&self, x: &[f64], horizon: f64, index: u64) -> Result<ExitSample> {
        self.check_start(x)?;
        Ok(self.run_path(x, horizon, self.cfg.seed, index))
    }

    fn run_path(&self, x: &[f64], horizon: f64, seed: u64, index: u64) -> ExitSample {
        let mut pos = x.to_vec();
        if !self.domain.contains(&pos) {
            return ExitSample { tau: 0.0, exit_point: pos, censored: false };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let dt = self.cfg.dt;
        let gauss = self.cfg.substitute_gaussian && self.law.sigma > 0.0;
        let mut t = 0.0;
        loop {
            let wait: f64 = rng.sample::<f64, _>(Exp1) / self.law.rate;
            let t_jump = t + wait;
            let stop = t_jump.min(horizon);
            if gauss {
                while t < stop {
                    let h = dt.min(stop - t);
                    let s = self.law.sigma * h.sqrt();
                    for p in pos.iter_mut() {
                        *p += s * rng.sample::<f64, _>(StandardNormal);
                    }
                    t = if stop - t <= dt { stop } else { t + h };
                    if !self.domain.contains(&pos) {
                        return ExitSample { tau: t, exit_point: pos, censored: false };
                    }
                }
            }
            if t_jump >= horizon {
                return ExitSample { tau: horizon, exit_point: pos, censored: true };
            }
            t = t_jump;
            self.law.add_jump(&mut rng, &mut pos);
            if !self.domain.contains(&pos) {
                return ExitSample { tau: t, exit_point: pos, censored: false };
            }
        }
    }

    /// `n_paths` paths from `x`; path `i` uses stream `i`, so the bundle does
    /// not depend on how the work is scheduled.
    pub fn bundle(&self, x: &[f64], horizon: f64) -> Result<PathBundle> {
        self.bundle_seeded(x, horizon, self.cfg.seed)
    }

    pub fn bundle_seeded(&self, x: &[f64], horizon: f64, seed: u64) -> Result<PathBundle> {
        self.check_start(x)?;
        if !(horizon > 0.0) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        let samples = (0..self.cfg.n_paths as u64)
            .into_par_iter()
            .map(|i| self.run_path(x, horizon, seed, i))
            .collect();
        Ok(PathBundle { x: x.to_vec(), horizon, seed, samples })
    }
}

/// Exit samples of many independent paths from one starting point.
#[derive(Debug, Clone)]
pub struct PathBundle {
    pub x: Vec<f64>,
    pub horizon: f64,
    pub seed: u64,
    pub samples: Vec<ExitSample>,
}

impl PathBundle {
    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || t > self.horizon * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!("time {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }

    /// `ℙ^x(τ_D > t)` with its binomial standard error.
    pub fn survival(&self, t: f64) -> Result<McEstimate> {
        self.check_time(t)?;
        let v: Vec<f64> = self.samples.iter().map(|s| if s.alive_at(t) { 1.0 } else { 0.0 }).collect();
        Ok(McEstimate::from_samples(&v, self.seed))
    }

    /// The same paths reflected in the first coordinate (the exit times are
    /// unchanged when the domain is symmetric).
    pub fn reflected(&self) -> PathBundle {
        PathBundle {
            x: reflect(&self.x),
            horizon: self.horizon,
            seed: self.seed,
            samples: self
                .samples
                .iter()
                .map(|s| ExitSample { tau: s.tau, exit_point: reflect(&s.exit_point), censored: s.censored })
                .collect(),
        }
    }

    /// Per-path values `p_t(x-y) - 1{τ<t} p_{t-τ}(y - X_τ)` whose mean is
    /// `p_D(t,x,y)`; `t - τ` below `dt_floor` is raised to it.
    pub fn pd_values(&self, kern: &Kernels, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        self.check_time(t)?;
        let free = kern.free.p(t, dist(&self.x, y))?;
        Ok(self
            .samples
            .iter()
            .map(|s| {
                if s.alive_at(t) {
                    free
                } else {
                    free - kern.table.eval((t - s.tau).max(kern.dt_floor), dist(y, &s.exit_point))
                }
            })
            .collect())
    }

    pub fn pd(&self, kern: &Kernels, t: f64, y: &[f64]) -> Result<McEstimate> {
        Ok(McEstimate::from_samples(&self.pd_values(kern, t, y)?, self.seed))
    }
}

/// Free kernel evaluators used inside the Monte Carlo estimators.
#[derive(Debug, Clone)]
pub struct Kernels {
    pub free: FreeKernel,
    pub table: KernelTable,
    pub dt_floor: f64,
}

impl Kernels {
    /// Exact free kernel plus a table on `s ∈ [dt, horizon]`, radii up to
    /// `r_max`.
    pub fn new(ev: Arc<SymbolEvaluator>, dt: f64, horizon: f64, r_max: f64) -> Result<Self> {
        let table = KernelTable::build(ev.clone(), dt, horizon.max(dt * 1.01), r_max.max(1.0))?;
        Ok(Self { free: FreeKernel::new(ev)?, table, dt_floor: dt })
    }
}

// ---- estimators --------------------------------------------------------------

/// Monte Carlo context: model, domain, simulator and kernels.
#[derive(Debug, Clone)]
pub struct KilledProcess {
    ev: Arc<SymbolEvaluator>,
    sim: Simulator,
    kern: Kernels,
    horizon: f64,
}

impl KilledProcess {
    /// Prepares estimators for times up to `horizon`.
    pub fn new(ev: Arc<SymbolEvaluator>, domain: Domain, cfg: PathConfig, horizon: f64) -> Result<Self> {
        let sim = Simulator::new(&ev, domain, cfg)?;
        let r_max = 2.0 * sim.domain().diam() + 1.0;
        let kern = Kernels::new(ev.clone(), cfg.dt, horizon, r_max)?;
        Ok(Self { ev, sim, kern, horizon })
    }

    /// Same model and kernels with a different path configuration (same `dt`
    /// floor for the kernel table).
    pub fn with_config(&self, cfg: PathConfig) -> Result<Self> {
        Ok(Self { ev: self.ev.clone(), sim: self.sim.with_config(&self.ev, cfg)?, kern: self.kern.clone(), horizon: self.horizon })
    }

    /// Same model and kernels on another domain.
    pub fn with_domain(&self, domain: Domain) -> Result<Self> {
        Ok(Self { ev: self.ev.clone(), sim: self.sim.with_domain(domain)?, kern: self.kern.clone(), horizon: self.horizon })
    }

    pub fn symbols(&self) -> &Arc<SymbolEvaluator> {
        &self.ev
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn kernels(&self) -> &Kernels {
        &self.kern
    }

    pub fn domain(&self) -> &Domain {
        self.sim.domain()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn bundle(&self, x: &[f64]) -> Result<PathBundle> {
        self.sim.bundle(x, self.horizon)
    }

    pub fn bundle_seeded(&self, x: &[f64], seed: u64) -> Result<PathBundle> {
        self.sim.bundle_seeded(x, self.horizon, seed)
    }

    pub fn survival(&self, x: &[f64], t: f64) -> Result<McEstimate> {
        if t == 0.0 {
            self.sim.check_start(x)?;
            return Ok(McEstimate { mean: 1.0, stderr: 0.0, n: self.sim.cfg.n_paths, seed: self.sim.cfg.seed });
        }
        self.sim.bundle(x, t)?.survival(t)
    }

    pub fn pd(&self, t: f64, x: &[f64], y: &[f64]) -> Result<McEstimate> {
        if !self.domain().contains(y) {
            return Err(Error::InvalidInput(format!("y = {y:?} is outside the domain")));
        }
        self.sim.bundle(x, t)?.pd(&self.kern, t, y)
    }

    /// Centered-difference gradient of `p_D(t,·,y)` at `x` with common random
    /// numbers; `h` defaults to `δ_D(x)/8` and must stay below `δ_D(x)/4`.
    pub fn grad_pd(&self, t: f64, x: &[f64], y: &[f64], h: Option<f64>) -> Result<Vec<McEstimate>> {
        let delta = self.domain().delta(x);
        let h = h.unwrap_or(delta / 8.0);
        if !(h > 0.0) || h >= delta / 4.0 {
            return Err(Error::InvalidInput(format!("gradient step {h} must lie in (0, δ/4) with δ = {delta}")));
        }
        (0..x.len())
            .map(|i| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                let a = self.sim.bundle(&xp, t)?.pd_values(&self.kern, t, y)?;
                let b = self.sim.bundle(&xm, t)?.pd_values(&self.kern, t, y)?;
                let g: Vec<f64> = a.iter().zip(&b).map(|(u, v)| (u - v) / (2.0 * h)).collect();
                Ok(McEstimate::from_samples(&g, self.sim.cfg.seed))
            })
            .collect()
    }
}

/// Norm of a gradient estimate with a first-order standard error.
pub fn grad_norm(g: &[McEstimate]) -> (f64, f64) {
    let n = g.iter().map(|e| e.mean * e.mean).sum::<f64>().sqrt();
    if n == 0.0 {
        return (0.0, g.iter().map(|e| e.stderr * e.stderr).sum::<f64>().sqrt());
    }
    let se = g.iter().map(|e| (e.mean / n * e.stderr).powi(2)).sum::<f64>().sqrt();
    (n, se)
}

// ---- principal eigenvalue -------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lambda1Estimate {
    pub lambda1: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub n_paths: usize,
    pub seed: u64,
}

/// Weighted least-squares slope of `-ln S(t)` over `t ∈ [a, b]`, with
/// weights `n S/(1-S)` (inverse variance of `ln S`).
pub fn decay_rate(bundle: &PathBundle, a: f64, b: f64, points: usize) -> Result<(f64, f64)> {
    let n = bundle.samples.len() as f64;
    let mut rows = Vec::new();
    for t in crate::interp::lin_grid(a, b, points) {
        let s = bundle.survival(t)?.mean;
        if s > 0.0 && s < 1.0 {
            rows.push((t, -s.ln(), n * s / (1.0 - s)));
        }
    }
    if rows.len() < 3 {
        return Err(Error::InvalidInput("too few surviving paths to fit a decay rate".into()));
    }
    let sw: f64 = rows.iter().map(|r| r.2).sum();
    let mt = rows.iter().map(|r| r.2 * r.0).sum::<f64>() / sw;
    let my = rows.iter().map(|r| r.2 * r.1).sum::<f64>() / sw;
    let stt: f64 = rows.iter().map(|r| r.2 * (r.0 - mt).powi(2)).sum();
    let sty: f64 = rows.iter().map(|r| r.2 * (r.0 - mt) * (r.1 - my)).sum();
    Ok((sty / stt, (1.0 / stt).sqrt()))
}

/// `λ₁` of `B(0,R)` from the decay of survival from the center over
/// `[V²(R), k V²(R)]`.
pub fn estimate_lambda1(
    ev: &SymbolEvaluator,
    v: &RenewalFunction,
    big_r: f64,
    cfg: PathConfig,
    k: f64,
) -> Result<Lambda1Estimate> {
    let domain = Domain::new(DomainSpec::centered_ball(ev.d(), big_r))?;
    let sim = Simulator::new(ev, domain, cfg)?;
    let v2 = v.v(big_r).powi(2);
    let bundle = sim.bundle(&vec![0.0; ev.d()], k * v2)?;
    lambda1_from_bundle(&bundle, v2, k)
}

pub fn lambda1_from_bundle(bundle: &PathBundle, v2: f64, k: f64) -> Result<Lambda1Estimate> {
    let (lambda1, stderr) = decay_rate(bundle, v2, k * v2, 21)?;
    Ok(Lambda1Estimate { lambda1, stderr, window: (v2, k * v2), n_paths: bundle.samples.len(), seed: bundle.seed })
}

// ---- factorization check on a ball -----------------------------------------------

/// One `(t, x, y)` node of the factorization check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HkNode {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub pd: McEstimate,
    pub ratio: f64,
    pub ratio_se: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HkReport {
    pub nodes: Vec<HkNode>,
    pub band: RatioBand,
    /// Standard errors of the ratios attaining the band's minimum and maximum.
    pub min_se: f64,
    pub max_se: f64,
    /// Band of `S(x,t) / [e^{-λ₁t} (V(δ(x))/(√t ∧ V(R)) ∧ 1)]`.
    pub profile: RatioBand,
    pub lambda1: f64,
}

/// Ratios `p_B(t,x,y) / [S(x,t/2) S(y,t/2) p_{t∧V²(R)}(x-y)]` on `B(0,R)`
/// over all `(t, x, y)` in the grids; points are placed on the first axis.
pub fn check_hk_kula2(
    proc_: &KilledProcess,
    v: &RenewalFunction,
    ts: &[f64],
    xs: &[f64],
    ys: &[f64],
    lambda1: f64,
) -> Result<HkReport> {
    let (center, big_r) = proc_
        .domain()
        .as_ball()
        .ok_or_else(|| Error::InvalidInput("factorization check needs a ball".into()))?;
    if center.iter().any(|c| *c != 0.0) {
        return Err(Error::InvalidInput("factorization check needs a centered ball".into()));
    }
    let d = proc_.domain().d();
    let axis = |s: f64| {
        let mut p = vec![0.0; d];
        p[0] = s;
        p
    };
    let v2 = v.v(big_r).powi(2);
    let mut starts: Vec<f64> = xs.iter().chain(ys).copied().collect();
    starts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    starts.dedup();
    let bundles: Vec<(f64, PathBundle)> =
        starts.iter().map(|&s| proc_.bundle(&axis(s)).map(|b| (s, b))).collect::<Result<_>>()?;
    let find = |s: f64| &bundles.iter().find(|(k, _)| *k == s).unwrap().1;
    let mut nodes = Vec::new();
    for &t in ts {
        for &x in xs {
            for &y in ys {
                let (px, py) = (axis(x), axis(y));
                let pd = find(x).pd(proc_.kernels(), t, &py)?;
                let sx = find(x).survival(t / 2.0)?;
                let sy = find(y).survival(t / 2.0)?;
                let free = proc_.kernels().free.p(t.min(v2), dist(&px, &py))?;
                let denom = sx.mean * sy.mean * free;
                let ratio = pd.mean / denom;
                let rel = ((pd.stderr / pd.mean).powi(2)
                    + (sx.stderr / sx.mean).powi(2)
                    + (sy.stderr / sy.mean).powi(2))
                .sqrt();
                nodes.push(HkNode { t, x: px, y: py, pd, ratio, ratio_se: (ratio * rel).abs() });
            }
        }
    }
    let ratios: Vec<f64> = nodes.iter().map(|n| n.ratio).collect();
    let band = RatioBand::from_values("hk-factorization", &ratios)
        .ok_or_else(|| Error::InvalidInput("no finite factorization ratios".into()))?;
    let at = |target: f64| nodes.iter().find(|n| n.ratio == target).map_or(f64::NAN, |n| n.ratio_se);
    let (min_se, max_se) = (at(band.min), at(band.max));
    let mut prof = Vec::new();
    for (s, b) in &bundles {
        let delta = proc_.domain().delta(&axis(*s));
        for &t in ts {
            let surv = b.survival(t)?.mean;
            let shape = (v.v(delta) / t.sqrt().min(v.v(big_r))).min(1.0);
            prof.push(surv / ((-lambda1 * t).exp() * shape));
        }
    }
    let profile = RatioBand::from_values("survival-profile", &prof)
        .ok_or_else(|| Error::InvalidInput("no finite survival profile ratios".into()))?;
    Ok(HkReport { nodes, band, min_se, max_se, profile, lambda1 })
}

// ---- gradient bound -----------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradNode {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub grad_norm: f64,
    pub grad_se: f64,
    pub pd: McEstimate,
    /// `1/(δ∧1) ∨ ψ⁻(1/t)` (for `t ≥ 1`, `ψ⁻(1)` replaces `ψ⁻(1/t)`).
    pub bound_factor: f64,
    pub ratio: f64,
    pub ratio_se: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Main1Report {
    pub nodes: Vec<GradNode>,
    pub sup_ratio: f64,
    pub sup_se: f64,
    /// Sup over nodes with `t ≥ 1`, if any.
    pub sup_ratio_long_time: Option<f64>,
}

/// `1/(δ∧1) ∨ ψ⁻(1/t)`, with `ψ⁻(1)` once `t ≥ 1`.
pub fn gradient_bound_factor(ev: &SymbolEvaluator, delta: f64, t: f64) -> f64 {
    let rate = if t >= 1.0 { ev.psi_inv(1.0) } else { ev.psi_inv(1.0 / t) };
    (1.0 / delta.min(1.0)).max(rate)
}

/// The family-specific form of the bound factor: `1/(δ ∧ t^{1/α})` for the
/// stable family and `1/(δ ∧ t)` for the relativistic one.
pub fn specialized_bound_factor(ev: &SymbolEvaluator, delta: f64, t: f64) -> Option<f64> {
    let s = ev.spec();
    match s.family {
        Family::Stable => Some(1.0 / delta.min(t.powf(1.0 / s.alpha))),
        Family::Relativistic => Some(1.0 / delta.min(t)),
        _ => None,
    }
}

/// Sup over the grid of `|∇_x p_D| / ([1/(δ∧1) ∨ ψ⁻(1/t)] p_D)`.
pub fn check_main1(proc_: &KilledProcess, ts: &[f64], xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<Main1Report> {
    let ev = proc_.symbols().clone();
    let mut nodes = Vec::new();
    for x in xs {
        let delta = proc_.domain().delta(x);
        let h = delta / 8.0;
        let d = x.len();
        let mut plus = Vec::with_capacity(d);
        let mut minus = Vec::with_capacity(d);
        for i in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            plus.push(proc_.bundle(&xp)?);
            minus.push(proc_.bundle(&xm)?);
        }
        let center = proc_.bundle(x)?;
        for &t in ts {
            for y in ys {
                let mut comps = Vec::with_capacity(d);
                for i in 0..d {
                    let a = plus[i].pd_values(proc_.kernels(), t, y)?;
                    let b = minus[i].pd_values(proc_.kernels(), t, y)?;
                    let g: Vec<f64> = a.iter().zip(&b).map(|(u, w)| (u - w) / (2.0 * h)).collect();
                    comps.push(McEstimate::from_samples(&g, center.seed));
                }
                let (gn, gse) = grad_norm(&comps);
                let pd = center.pd(proc_.kernels(), t, y)?;
                let factor = gradient_bound_factor(&ev, delta, t);
                let ratio = gn / (factor * pd.mean);
                let rel = ((gse / gn).powi(2) + (pd.stderr / pd.mean).powi(2)).sqrt();
                nodes.push(GradNode {
                    t,
                    x: x.clone(),
                    y: y.clone(),
                    grad_norm: gn,
                    grad_se: gse,
                    pd,
                    bound_factor: factor,
                    ratio,
                    ratio_se: (ratio * rel).abs(),
                });
            }
        }
    }
    let top = nodes
        .iter()
        .filter(|n| n.ratio.is_finite())
        .max_by(|a, b| a.ratio.partial_cmp(&b.ratio).unwrap())
        .ok_or_else(|| Error::InvalidInput("no finite gradient ratios".into()))?;
    let (sup_ratio, sup_se) = (top.ratio, top.ratio_se);
    let sup_ratio_long_time = nodes.iter().filter(|n| n.t >= 1.0).map(|n| n.ratio).reduce(f64::max);
    Ok(Main1Report { nodes, sup_ratio, sup_se, sup_ratio_long_time })
}

// ---- exit law in dimension one ------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IwReport {
    /// Fraction of paths with `τ ∈ A` and `X_τ ∈ B`.
    pub lhs: McEstimate,
    /// `∫_A ∫_D p_D(s,x,y) ν(B - y) dy ds` with `p_D` from the same paths.
    pub rhs: McEstimate,
    pub discrepancy: f64,
    pub combined_se: f64,
    /// Fraction of paths exiting within `1e-6` of the boundary.
    pub boundary_mass: f64,
}

/// Ikeda–Watanabe consistency on an interval `D`: exit-time window `A =
/// (a0, a1)` and exit set `B = (b0, b1)` disjoint from the closure of `D`.
pub fn check_ikeda_watanabe(
    proc_: &KilledProcess,
    x: f64,
    a: (f64, f64),
    b: (f64, f64),
    y_nodes: usize,
) -> Result<IwReport> {
    let ev = proc_.symbols().clone();
    if ev.d() != 1 {
        return Err(Error::InvalidInput("exit-law check is one-dimensional".into()));
    }
    let (center, radius) = proc_
        .domain()
        .as_ball()
        .ok_or_else(|| Error::InvalidInput("exit-law check needs an interval".into()))?;
    let (lo, hi) = (center[0] - radius, center[0] + radius);
    if !(b.0 < b.1) || !(b.1 <= lo || b.0 >= hi) {
        return Err(Error::InvalidInput("exit set must be an interval outside the closure of D".into()));
    }
    if !(0.0 <= a.0 && a.0 < a.1) || a.1 > proc_.horizon() * (1.0 + 1e-12) {
        return Err(Error::InvalidInput("time window must lie in [0, horizon]".into()));
    }
    // one-sided tail ν((r, ∞)) and the jump intensity from y into B
    let tail = |r: f64| -> Result<f64> { Ok(0.5 * ev.tail_mass(r)?) };
    let k = |y: f64| -> Result<f64> {
        if b.0 >= hi {
            Ok(tail(b.0 - y)? - if b.1.is_finite() { tail(b.1 - y)? } else { 0.0 })
        } else {
            Ok(tail(y - b.1)? - if b.0.is_finite() { tail(y - b.0)? } else { 0.0 })
        }
    };
    let kx = k(x)?;
    // y = c + ρ sin φ clusters nodes at the endpoints
    let gl = GaussLegendre::new(y_nodes);
    let mut ys = Vec::with_capacity(y_nodes);
    for (&u, &w) in gl.nodes.iter().zip(&gl.weights) {
        let phi = 0.5 * PI * u;
        let y = center[0] + radius * phi.sin();
        let wy = 0.5 * PI * w * radius * phi.cos();
        ys.push((y, wy * (k(y)? - kx)));
    }
    // the stable table scales exactly, so it can reach very short times
    let s_min = if ev.spec().family == Family::Stable { 1e-9 * a.1 } else { 1e-4 * a.1 };
    let table = KernelTable::build(ev.clone(), s_min, a.1, 4.0 * radius + (b.1 - b.0).min(1e3))?;
    let q_table = |w: f64, rho: f64| time_integral(|u| table.eval(u, rho), w);
    let free_part: Vec<f64> = ys
        .iter()
        .map(|&(y, _)| {
            let rho = (x - y).abs();
            q_table(a.1, rho) - q_table(a.0, rho)
        })
        .collect();
    let bundle = proc_.bundle(&[x])?;
    let eta = 1e-6;
    let mut lhs = Vec::with_capacity(bundle.samples.len());
    let rhs: Vec<f64> = bundle
        .samples
        .par_iter()
        .map(|s| {
            let occupied = (s.tau.min(a.1) - a.0).max(0.0);
            let occupied = if s.censored { a.1 - a.0 } else { occupied };
            let mut acc = kx * occupied;
            let exited = !s.censored && s.tau < a.1;
            for (j, &(y, w)) in ys.iter().enumerate() {
                let mut val = free_part[j];
                if exited {
                    let rho = (y - s.exit_point[0]).abs();
                    let upper = q_table(a.1 - s.tau, rho);
                    let lower = if a.0 > s.tau { q_table(a.0 - s.tau, rho) } else { 0.0 };
                    val -= upper - lower;
                }
                acc += w * val;
            }
            acc
        })
        .collect();
    let mut near = 0usize;
    for s in &bundle.samples {
        let hit = !s.censored && s.tau > a.0 && s.tau < a.1 && s.exit_point[0] > b.0 && s.exit_point[0] < b.1;
        lhs.push(if hit { 1.0 } else { 0.0 });
        if !s.censored {
            let z = s.exit_point[0];
            if (z - lo).abs() < eta || (z - hi).abs() < eta {
                near += 1;
            }
        }
    }
    let lhs = McEstimate::from_samples(&lhs, bundle.seed);
    let rhs = McEstimate::from_samples(&rhs, bundle.seed);
    Ok(IwReport {
        discrepancy: lhs.mean - rhs.mean,
        combined_se: joint_stderr(&lhs, &rhs),
        boundary_mass: near as f64 / bundle.samples.len() as f64,
        lhs,
        rhs,
    })
}

/// `∫_0^w f(u) du` for a kernel that behaves like `u ν(ρ)` near zero:
/// Gauss-Legendre panels in `ln u` down to `w e^{-24}`.
fn time_integral<F: Fn(f64) -> f64>(f: F, w: f64) -> f64 {
    if !(w > 0.0) {
        return 0.0;
    }
    let rule = time_rule();
    let top = w.ln();
    let mut acc = 0.0;
    for p in 0..6 {
        let hi = top - 4.0 * p as f64;
        let lo = hi - 4.0;
        let c = 0.5 * (hi + lo);
        for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let u = (c + 2.0 * x).exp();
            acc += 2.0 * wt * f(u) * u;
        }
    }
    acc
}

fn time_rule() -> &'static GaussLegendre {
    static RULE: std::sync::OnceLock<GaussLegendre> = std::sync::OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(12))
}

// ---- further invariants -------------------------------------------------------------

/// Survival on `D₁ ⊂ D₂` from the same random numbers: returns the largest
/// excess `S_{D₁} - S_{D₂}` in joint standard errors over `ts` (it should
/// be non-positive up to noise).
pub fn check_domain_monotonicity(small: &KilledProcess, large: &KilledProcess, x: &[f64], ts: &[f64]) -> Result<f64> {
    let horizon = ts.iter().copied().fold(0.0, f64::max);
    let b1 = small.simulator().bundle(x, horizon)?;
    let b2 = large.simulator().bundle(x, horizon)?;
    let mut worst = f64::NEG_INFINITY;
    for &t in ts {
        let (s1, s2) = (b1.survival(t)?, b2.survival(t)?);
        let se = joint_stderr(&s1, &s2).max(1e-300);
        worst = worst.max((s1.mean - s2.mean) / se);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemigroupReport {
    pub direct: McEstimate,
    pub composed: f64,
    pub composed_se: f64,
}

/// `p_D(t,x,y)` against `∫_D p_D(t/2,x,w) p_D(t/2,y,w) dw` on an interval,
/// by Gauss-Legendre in `w = c + ρ sin φ`.
pub fn check_semigroup(proc_: &KilledProcess, t: f64, x: f64, y: f64, nodes: usize) -> Result<SemigroupReport> {
    let (center, radius) = proc_
        .domain()
        .as_ball()
        .filter(|(c, _)| c.len() == 1)
        .ok_or_else(|| Error::InvalidInput("semigroup check needs an interval".into()))?;
    let bx = proc_.bundle(&[x])?;
    let by = proc_.bundle_seeded(&[y], proc_.simulator().config().seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let direct = bx.pd(proc_.kernels(), t, &[y])?;
    let gl = GaussLegendre::new(nodes);
    let mut ax = Vec::new();
    let mut ay = Vec::new();
    let mut wts = Vec::new();
    for (&u, &w) in gl.nodes.iter().zip(&gl.weights) {
        let phi = 0.5 * PI * u;
        let z = center[0] + radius * phi.sin();
        wts.push(0.5 * PI * w * radius * phi.cos());
        ax.push(bx.pd_values(proc_.kernels(), t / 2.0, &[z])?);
        ay.push(by.pd_values(proc_.kernels(), t / 2.0, &[z])?);
    }
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let mx: Vec<f64> = ax.iter().map(mean).collect();
    let my: Vec<f64> = ay.iter().map(mean).collect();
    let composed: f64 = (0..wts.len()).map(|j| wts[j] * mx[j] * my[j]).sum();
    // linearized per-path contributions of each bundle
    let n = bx.samples.len();
    let lin = |a: &Vec<Vec<f64>>, other: &Vec<f64>| -> Vec<f64> {
        (0..n).map(|i| (0..wts.len()).map(|j| wts[j] * other[j] * a[j][i]).sum()).collect()
    };
    let ex = McEstimate::from_samples(&lin(&ax, &my), bx.seed);
    let ey = McEstimate::from_samples(&lin(&ay, &mx), by.seed);
    Ok(SemigroupReport { direct, composed, composed_se: joint_stderr(&ex, &ey) })
}

// ---- radius-dependent constants ----------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub big_r: f64,
    /// `inf_{y ≥ x ≥ 1/R} ψ(y)/ψ(x) (x/y)^α̲`.
    pub c_lower: f64,
    /// `inf_{0<t≤V²(R), |x|≤R} p_t(x) / (p_{t/2}(0) ∧ t/(V²(|x|)|x|^d))`.
    pub c_tilde: f64,
    /// `1 ∧ inf_{|x|≤R, 0<t≤V²(|x|)} p_t(x) V²(|x|) |x|^d / t`.
    pub c_r: f64,
    /// `inf_{|x|≤R} ν(x) V²(|x|) |x|^d`.
    pub c_star: f64,
    /// `inf_{0<ρ≤R/2} ν(B_R ∖ B_ρ) V²(ρ)`.
    pub i_r: f64,
}

impl ConstantsReport {
    pub fn all_positive(&self) -> bool {
        [self.c_lower, self.c_tilde, self.c_r, self.c_star, self.i_r].iter().all(|c| *c > 0.0 && c.is_finite())
    }
}

/// The five radius-dependent constants as minima over fixed grids: frequencies
/// `x ∈ [1/R, 10⁴/R]` and ratios `y/x ∈ [1, 10⁴]` (40 each), radii on a
/// 17-point log grid in `[10⁻² R, R]` (plus the origin for `C̃_R`), times on
/// 9-point log grids ending at `V²(R)` or `V²(|x|)`, and 40 radii for `C*_R`
/// and `I_R`.
pub fn estimate_appendix_constants(k: &FreeKernel, v: &RenewalFunction, big_r: f64) -> Result<ConstantsReport> {
    let ev = k.symbols().clone();
    let d = ev.d() as i32;
    let (alpha_lower, _, _) = ev.exponents();
    // ψ is homogeneous of degree α in the stable family
    let stable = ev.spec().family == Family::Stable;
    let mut c_lower = if stable { 1.0 } else { f64::INFINITY };
    for x in log_grid(1.0 / big_r, 1e4 / big_r, 40).into_iter().filter(|_| !stable) {
        let px = ev.psi(x);
        for lam in log_grid(1.0, 1e4, 40) {
            let y = x * lam;
            c_lower = c_lower.min(ev.psi(y) / px * lam.powf(-alpha_lower));
        }
    }
    let vsq = |r: f64| v.v(r).powi(2);
    let v2r = vsq(big_r);
    let rs = log_grid(1e-2 * big_r, big_r, 17);
    let ts = log_grid(1e-3 * v2r, v2r, 9);
    let mut jobs: Vec<(f64, f64)> = ts.iter().flat_map(|&t| std::iter::once(0.0).chain(rs.iter().copied()).map(move |r| (t, r))).collect();
    let tilde = jobs
        .par_iter()
        .map(|&(t, r)| {
            let p0 = k.p(t / 2.0, 0.0)?;
            let denom = if r == 0.0 { p0 } else { p0.min(t / (vsq(r) * r.powi(d))) };
            Ok(k.p(t, r)? / denom)
        })
        .collect::<Result<Vec<f64>>>()?;
    let c_tilde = tilde.into_iter().fold(f64::INFINITY, f64::min);
    jobs = rs.iter().flat_map(|&r| log_grid(1e-3 * vsq(r), vsq(r), 9).into_iter().map(move |t| (t, r))).collect();
    let cr = jobs
        .par_iter()
        .map(|&(t, r)| Ok(k.p(t, r)? * vsq(r) * r.powi(d) / t))
        .collect::<Result<Vec<f64>>>()?;
    let c_r = cr.into_iter().fold(1.0, f64::min);
    let c_star = log_grid(1e-3 * big_r, big_r, 40)
        .into_iter()
        .map(|r| ev.nu(r) * vsq(r) * r.powi(d))
        .fold(f64::INFINITY, f64::min);
    let outer = ev.tail_mass(big_r)?;
    let mut i_r = f64::INFINITY;
    for rho in log_grid(1e-3 * big_r, 0.5 * big_r, 40) {
        i_r = i_r.min((ev.tail_mass(rho)? - outer) * vsq(rho));
    }
    Ok(ConstantsReport { big_r, c_lower, c_tilde, c_r, c_star, i_r })
}
