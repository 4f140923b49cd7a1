//! Orchestration: runs the checks of a [`RunConfig`] in dependency order and
//! assembles the [`VerificationReport`].

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use crate::config::RunConfig;
use crate::difference::{
    check_ab_levy_quotient, check_half_ball, check_key, check_m_estimate, DiffLemma, LemmaReport, LEMMA_RADII,
    LEMMA_TIMES,
};
use crate::dirichlet::{
    check_domain_monotonicity, check_hk_kula2, check_ikeda_watanabe, check_main1, check_semigroup,
    estimate_appendix_constants, gradient_bound_factor, lambda1_from_bundle, specialized_bound_factor, BallSpec,
    Domain, DomainSpec, KilledProcess, Lambda1Estimate, PathConfig, Simulator,
};
use crate::error::{Error, Result};
use crate::freekernel::{
    check_comparability, check_derestimate, check_grad_comparability, check_lem1, check_lift, check_lower,
    check_nu_estimates, check_p0, check_unimodal, check_upper, total_mass, FreeKernel,
};
use crate::interp::log_grid;
use crate::renewal::{check_v_scaling, check_vpsi, surrogate_band, RenewalFunction};
use crate::report::{CheckEntry, RatioBand, VerificationReport};
use crate::symbols::{estimate_scaling, scaling_grid, Family, SymbolEvaluator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Symbols,
    Renewal,
    FreeKernel,
    Dirichlet,
    Difference,
}

#[derive(Debug, Clone, Copy)]
pub struct CheckDef {
    pub id: &'static str,
    pub stage: Stage,
    pub anchor: &'static str,
}

const fn def(id: &'static str, stage: Stage, anchor: &'static str) -> CheckDef {
    CheckDef { id, stage, anchor }
}

/// Every check, in execution order.
pub const CHECKS: &[CheckDef] = &[
    def("psi-star-sandwich", Stage::Symbols, "psi(r) <= psi*(r) <= pi^2 psi(r)"),
    def("psi-scaling", Stage::Symbols, "weak lower and upper scaling of psi"),
    def("renewal-build", Stage::Renewal, "V from the Laplace transform 1/(s kappa(s))"),
    def("renewal-psi", Stage::Renewal, "1/V^2(r) comparable to psi(1/r)"),
    def("renewal-surrogate", Stage::Renewal, "V(r) comparable to 1/sqrt(psi*(1/r))"),
    def("renewal-subadditive", Stage::Renewal, "V(a+b) <= V(a) + V(b)"),
    def("renewal-scaling", Stage::Renewal, "V^-1(eta w) >= c eta^(2/alpha) V^-1(w)"),
    def("renewal-h", Stage::Renewal, "V(z) - V(y) <= H V'(x)(z - y) for x <= y <= z <= 5x"),
    def("free-upper", Stage::FreeKernel, "p_t(r) <= C min(p_t(0), t/(V^2(r) r^d))"),
    def("free-lower", Stage::FreeKernel, "p_t(r) >= c t nu(r) exp(-c1 t/V^2(r))"),
    def("free-comparability", Stage::FreeKernel, "p_t(r) comparable to min(V^-1(sqrt t)^-d, t/(V^2(r) r^d))"),
    def("free-gradient", Stage::FreeKernel, "|p_t'(r)| comparable to r min(V^-1(sqrt t)^-d-2, t/(V^2(r) r^d+2))"),
    def("free-derivative", Stage::FreeKernel, "|p_t'(r)| <= C p_t(r) (1/r ^ 1/V^-1(sqrt t))"),
    def("free-origin", Stage::FreeKernel, "p_t(0) comparable to V^-1(sqrt t)^-d"),
    def("free-levy-density", Stage::FreeKernel, "nu(r) comparable to 1/(V^2(r) r^d), nu(r) <= C nu(2r)"),
    def("free-lift", Stage::FreeKernel, "p_t^(d+2)(r) = -(2 pi r)^-1 d/dr p_t^(d)(r)"),
    def("free-mass", Stage::FreeKernel, "integral of p_t equals one"),
    def("free-unimodal", Stage::FreeKernel, "r -> p_t(r) nonincreasing"),
    def("free-difference", Stage::FreeKernel, "0 <= p_t(x-y) - p_t(x^-y) <= C |x^-x| p_t(x-y)(1/|x-y| ^ 1/V^-1(sqrt t))"),
    def("lambda1", Stage::Dirichlet, "lambda_1(B_R) comparable to 1/V^2(R)"),
    def("hk-factorization", Stage::Dirichlet, "p_B(t,x,y) comparable to P(tau > t/2 | x) P(tau > t/2 | y) p_(t ^ V^2(R))(x-y)"),
    def("gradient-bound", Stage::Dirichlet, "|grad_x p_D| <= C (1/(delta ^ 1) v psi^-(1/t)) p_D"),
    def("ikeda-watanabe", Stage::Dirichlet, "P(tau in A, X_tau in B) = int_A int_D p_D(s,x,y) nu(B - y) dy ds"),
    def("domain-monotonicity", Stage::Dirichlet, "survival increases with the domain"),
    def("semigroup", Stage::Dirichlet, "p_D(t,x,y) = int_D p_D(t/2,x,w) p_D(t/2,w,y) dw"),
    def("appendix-constants", Stage::Dirichlet, "constants C_lower, C_tilde, C, C_star, I of the radius R positive"),
    def("levy-quotient", Stage::Difference, "0 <= nu(x-y) - nu(x^-y) bounded by the jump-kernel quotient"),
    def("key-sandwich", Stage::Difference, "0 <= p_D(t,x,y) - p_D(t,x^,y) <= p_t(x-y) - p_t(x^-y)"),
    def("diff-half-ball", Stage::Difference, "p_B(t,x,y) - p_B(t,x^,y) <= C |x^-x| (1/r v 1/V^-1(sqrt t)) p_B(t,x,y)"),
    def("diff-near-pole", Stage::Difference, "p_B(t,x,y) - p_B(t,x^,y) <= C |x-x^|/|y| p_B(t,x,y), |y| < r/4"),
    def("diff-far-pole", Stage::Difference, "p_B(t,x,y) - p_B(t,x^,y) <= C |x^-x|/r p_B(t,x,y), |y| >= r/4"),
    def("diff-domain", Stage::Difference, "|p_D(t,x,y) - p_D(t,x^,y)| <= C |x^-x| (1/r v 1/V^-1(sqrt t)) p_D(t,x,y)"),
];

pub fn check_def(id: &str) -> Option<&'static CheckDef> {
    CHECKS.iter().find(|c| c.id == id)
}

/// Ids of the path checks exposed by the `verify-*` subcommands.
pub const HK_CHECKS: &[&str] = &["lambda1", "hk-factorization"];
pub const MAIN1_CHECKS: &[&str] = &["gradient-bound"];
pub const IW_CHECKS: &[&str] = &["ikeda-watanabe"];
pub const DIFF_CHECKS: &[&str] =
    &["levy-quotient", "key-sandwich", "diff-half-ball", "diff-near-pole", "diff-far-pole", "diff-domain"];
pub const CONSTANT_CHECKS: &[&str] = &["appendix-constants"];

const TEMPLATE_HORIZON: f64 = 1.5;

/// Regression gates.
pub const LAMBDA1_BRACKET: (f64, f64) = (0.125, 10.0);
pub const LAMBDA1_WINDOW_TOL: f64 = 0.1;
pub const HK_BAND_GATE: (f64, f64) = (0.05, 20.0);
pub const Z_GATE: f64 = 3.0;
pub const MASS_TOL: f64 = 1e-3;
pub const BOUNDARY_MASS_TOL: f64 = 1e-3;

/// Evaluators shared between checks, built on first use.
pub struct Context<'a> {
    cfg: &'a RunConfig,
    ev: Arc<SymbolEvaluator>,
    /// `cfg.paths` with `dt` fitted to the model's jump rate.
    paths: PathConfig,
    /// Process on a ball large enough for every built-in domain; its kernel
    /// table is shared by the path checks.
    template: Option<KilledProcess>,
    renewal: Option<std::result::Result<Arc<RenewalFunction>, String>>,
    lambda1: Option<Lambda1Estimate>,
    half_ball: Option<Vec<LemmaReport>>,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a RunConfig) -> Result<Self> {
        cfg.validate()?;
        let ev = Arc::new(SymbolEvaluator::new(cfg.model)?);
        let paths = cfg.paths.fitted(&ev).unwrap_or(cfg.paths);
        Ok(Self { cfg, ev, paths, template: None, renewal: None, lambda1: None, half_ball: None })
    }

    pub fn symbols(&self) -> &Arc<SymbolEvaluator> {
        &self.ev
    }

    pub fn renewal(&mut self) -> Result<Arc<RenewalFunction>> {
        if self.renewal.is_none() {
            self.renewal = Some(RenewalFunction::build(&self.ev).map(Arc::new).map_err(|e| e.to_string()));
        }
        match self.renewal.as_ref().unwrap() {
            Ok(v) => Ok(v.clone()),
            Err(e) => Err(Error::InvalidInput(format!("renewal function unavailable: {e}"))),
        }
    }

    pub fn free_kernel(&self) -> Result<FreeKernel> {
        FreeKernel::new(self.ev.clone())
    }

    fn d(&self) -> usize {
        self.cfg.model.d
    }

    fn axis(&self, s: f64) -> Vec<f64> {
        let mut p = vec![0.0; self.d()];
        p[0] = s;
        p
    }

    pub fn paths(&self) -> PathConfig {
        self.paths
    }

    /// Killed process on `spec`, valid for times up to `horizon`.
    pub fn process(&mut self, spec: DomainSpec, horizon: f64) -> Result<KilledProcess> {
        let domain = Domain::new(spec)?;
        if self.template.is_none() {
            let big = self.cfg.radius.max(1.5);
            let span = self.cfg.grids.paths.times().into_iter().fold(TEMPLATE_HORIZON, f64::max);
            let ball = Domain::new(DomainSpec::centered_ball(self.d(), big))?;
            self.template = Some(KilledProcess::new(self.ev.clone(), ball, self.paths, span)?);
        }
        let template = self.template.as_ref().unwrap();
        if domain.diam() <= template.domain().diam() && horizon <= template.horizon() {
            template.with_domain(domain)
        } else {
            KilledProcess::new(self.ev.clone(), domain, self.paths, horizon)
        }
    }

    /// Killed process on the centered ball of radius `radius`.
    pub fn ball_process(&mut self, radius: f64, horizon: f64) -> Result<KilledProcess> {
        self.process(DomainSpec::centered_ball(self.d(), radius), horizon)
    }

    fn lambda1(&mut self) -> Result<Lambda1Estimate> {
        if let Some(l) = self.lambda1 {
            return Ok(l);
        }
        let (short, _) = self.lambda1_pair()?;
        Ok(short)
    }

    /// Estimates over the windows `[V², 3V²]` and `[V², 5V²]`.
    fn lambda1_pair(&mut self) -> Result<(Lambda1Estimate, Lambda1Estimate)> {
        let v = self.renewal()?;
        let big_r = self.cfg.radius;
        let v2 = v.v(big_r).powi(2);
        let domain = Domain::new(DomainSpec::centered_ball(self.d(), big_r))?;
        let sim = Simulator::new(&self.ev, domain, self.paths)?;
        let bundle = sim.bundle(&vec![0.0; self.d()], 5.0 * v2)?;
        let short = lambda1_from_bundle(&bundle, v2, 3.0)?;
        let long = lambda1_from_bundle(&bundle, v2, 5.0)?;
        self.lambda1 = Some(short);
        Ok((short, long))
    }

    fn half_ball(&mut self) -> Result<Vec<LemmaReport>> {
        if let Some(h) = &self.half_ball {
            return Ok(h.clone());
        }
        let v = self.renewal()?;
        let template = self.ball_process(1.0, 1.0)?;
        let reps = check_half_ball(
            &template,
            &v,
            &[DiffLemma::HalfBall, DiffLemma::NearPole, DiffLemma::FarPole],
            &LEMMA_RADII,
            &LEMMA_TIMES,
        )?;
        self.half_ball = Some(reps.clone());
        Ok(reps)
    }
}

fn finite_positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

fn band_entry(mut e: CheckEntry, band: RatioBand) -> CheckEntry {
    e.passed = band.is_finite_positive();
    if !e.passed {
        e.diagnostics.push(format!("band [{}, {}] is not finite and positive", band.min, band.max));
    }
    e.band = Some(band);
    e
}

fn with_grid(mut band: RatioBand, grid_id: &str) -> RatioBand {
    band.grid_id = grid_id.to_string();
    band
}

fn not_applicable(mut e: CheckEntry, why: &str) -> CheckEntry {
    e.passed = true;
    e.diagnostics.push(format!("not applicable: {why}"));
    e
}

fn lemma_entry(mut e: CheckEntry, rep: &LemmaReport) -> CheckEntry {
    let ratios: Vec<f64> = rep.nodes.iter().filter(|n| n.resolved).map(|n| n.ratio).collect();
    e.band = RatioBand::from_values("lemma-grid", &ratios);
    e.ci = Some((rep.sup_ratio - 2.0 * rep.sup_se, rep.sup_ratio + 2.0 * rep.sup_se));
    e.values = vec![
        ("sup_ratio".into(), rep.sup_ratio),
        ("sup_se".into(), rep.sup_se),
        ("unresolved_nodes".into(), rep.unresolved as f64),
    ];
    e.passed = rep.sup_ratio.is_finite() && (rep.sup_ratio + 2.0 * rep.sup_se).is_finite();
    if rep.unresolved > 0 {
        e.diagnostics.push(format!("{} nodes with a kernel estimate within {} s.e. of zero", rep.unresolved, 3));
    }
    e
}

/// Runs one check; the entry's runtime is filled in by the caller.
fn run_check(ctx: &mut Context, c: &CheckDef) -> Result<CheckEntry> {
    let cfg = ctx.cfg;
    let big_r = cfg.radius;
    let free_grid = cfg.grids.free;
    let path_grid = cfg.grids.paths;
    let grid_id = match c.stage {
        Stage::Symbols | Stage::Renewal | Stage::FreeKernel => free_grid.id(),
        Stage::Dirichlet | Stage::Difference => path_grid.id(),
    };
    let mut e = CheckEntry::new(c.id, c.anchor, grid_id);
    if matches!(c.stage, Stage::Dirichlet | Stage::Difference) {
        e.seed = Some(cfg.paths.seed);
        if ctx.paths.dt != cfg.paths.dt {
            e.diagnostics.push(format!("dt reduced to {:e} for the jump rate", ctx.paths.dt));
        }
    }
    let ts = free_grid.times();
    let rs = free_grid.radii(big_r);
    let ev = ctx.ev.clone();
    let d = ctx.d();
    match c.id {
        "psi-star-sandwich" => {
            let freqs: Vec<f64> = rs.iter().flat_map(|&r| [r, 1.0 / r]).collect();
            let mut worst_low = f64::INFINITY;
            let mut worst_high = 0.0f64;
            for &s in &freqs {
                let (p, ps) = (ev.psi(s), ev.psi_star(s));
                worst_low = worst_low.min(ps / p);
                worst_high = worst_high.max(ps / p);
            }
            e.values = vec![("min_ratio".into(), worst_low), ("max_ratio".into(), worst_high)];
            e.passed = worst_low >= 1.0 - 1e-12 && worst_high <= PI * PI;
        }
        "psi-scaling" => {
            let (_, _, theta0) = ev.exponents();
            let cert = estimate_scaling(&ev, theta0, &scaling_grid(theta0, 1e3, 1e3, 12))?;
            e.values = vec![
                ("alpha_lower".into(), cert.alpha_lower),
                ("alpha_upper".into(), cert.alpha_upper),
                ("c_lower".into(), cert.c_lower),
                ("c_upper".into(), cert.c_upper),
            ];
            e.passed = finite_positive(cert.c_lower) && finite_positive(cert.c_upper);
        }
        "renewal-build" => {
            let v = ctx.renewal()?;
            e.values = vec![("order_discrepancy".into(), v.order_discrepancy)];
            e.passed = v.instability.is_none();
            if let Some(msg) = &v.instability {
                e.diagnostics.push(msg.clone());
            }
        }
        "renewal-psi" => {
            let v = ctx.renewal()?;
            let (c1, c2) = check_vpsi(&ev, &v, &rs);
            e.values = vec![("c1".into(), c1), ("c2".into(), c2)];
            e.passed = finite_positive(c1) && finite_positive(c2);
        }
        "renewal-surrogate" => {
            let v = ctx.renewal()?;
            let (lo, hi) = surrogate_band(&ev, &v, &rs);
            e.values = vec![("min".into(), lo), ("max".into(), hi)];
            e.passed = finite_positive(lo) && finite_positive(hi);
        }
        "renewal-subadditive" => {
            let v = ctx.renewal()?;
            let pts = log_grid(1e-3 * big_r, 10.0 * big_r, 25);
            let mut worst = 0.0f64;
            for &a in &pts {
                for &b in &pts {
                    worst = worst.max(v.v(a + b) / (v.v(a) + v.v(b)));
                }
            }
            e.values = vec![("max_ratio".into(), worst)];
            e.passed = worst <= 1.0 + 1e-9;
        }
        "renewal-scaling" => {
            let v = ctx.renewal()?;
            let c1 = check_v_scaling(&ev, &v, &log_grid(1e-3, 1.0, 12));
            e.values = vec![("c1".into(), c1)];
            e.passed = finite_positive(c1);
        }
        "renewal-h" => {
            let v = ctx.renewal()?;
            let h = v.h(big_r);
            e.values = vec![("h".into(), h.value), ("excluded".into(), h.excluded as f64)];
            e.passed = h.value.is_finite() && h.value >= 1.0;
        }
        "free-upper" => {
            let v = ctx.renewal()?;
            e = band_entry(e, with_grid(check_upper(&ctx.free_kernel()?, &v, &ts, &rs)?, grid_id));
        }
        "free-lower" => {
            let v = ctx.renewal()?;
            let (c, c1) = check_lower(&ctx.free_kernel()?, &v, &ts, &rs)?;
            e.values = vec![("c".into(), c), ("c1".into(), c1)];
            e.passed = finite_positive(c);
        }
        "free-comparability" => {
            let v = ctx.renewal()?;
            e = band_entry(e, with_grid(check_comparability(&ctx.free_kernel()?, &v, &ts, &rs)?, grid_id));
        }
        "free-gradient" => {
            let v = ctx.renewal()?;
            let g = check_grad_comparability(&ctx.free_kernel()?, &v, &ts, &rs)?;
            for (name, b) in [("small_r", &g.small), ("large_r", &g.large)] {
                if let Some(b) = b {
                    e.values.push((format!("{name}_min"), b.min));
                    e.values.push((format!("{name}_max"), b.max));
                }
            }
            e = band_entry(e, with_grid(g.combined, grid_id));
        }
        "free-derivative" => {
            let v = ctx.renewal()?;
            e = band_entry(e, with_grid(check_derestimate(&ctx.free_kernel()?, &v, &ts, &rs)?, grid_id));
        }
        "free-origin" => {
            let v = ctx.renewal()?;
            e = band_entry(e, with_grid(check_p0(&ctx.free_kernel()?, &v, &ts)?, grid_id));
        }
        "free-levy-density" => {
            let v = ctx.renewal()?;
            let (band, doubling) = check_nu_estimates(&ev, &v, &rs);
            e.values = vec![("doubling".into(), doubling)];
            e = band_entry(e, with_grid(band, grid_id));
            e.passed &= doubling.is_finite();
        }
        "free-lift" => {
            let tol = if ev.spec().family == Family::Stable { 1e-5 } else { 1e-4 };
            let (gap, used) = check_lift(&ctx.free_kernel()?, &ts, &rs, 1e-12)?;
            e.values = vec![("max_rel_gap".into(), gap), ("nodes".into(), used as f64), ("tol".into(), tol)];
            e.passed = gap < tol && used > 0;
        }
        "free-mass" => {
            let k = ctx.free_kernel()?;
            let mut worst = 0.0f64;
            for t in [0.1, 1.0] {
                let m = total_mass(&k, t, 100.0 * big_r)?;
                e.values.push((format!("mass_t{t}"), m));
                worst = worst.max((m - 1.0).abs());
            }
            e.passed = worst < MASS_TOL;
        }
        "free-unimodal" => {
            let k = ctx.free_kernel()?;
            let mut ok = true;
            for &t in &ts {
                ok &= check_unimodal(&k, t, &rs, 1e-9)?;
            }
            e.passed = ok;
        }
        "free-difference" => {
            let v = ctx.renewal()?;
            let mut pairs = Vec::new();
            for &a in &[0.02, 0.1, 0.4] {
                for &b in &[0.05, 0.3, 0.9] {
                    let mut x = ctx.axis(a * big_r);
                    let mut y = ctx.axis(b * big_r);
                    if d > 1 {
                        x[1] = 0.1 * big_r;
                        y[1] = -0.2 * big_r;
                    }
                    pairs.push((x, y));
                }
            }
            let (band, min_diff) = check_lem1(&ctx.free_kernel()?, &v, &ts, &pairs)?;
            e.values = vec![("min_difference".into(), min_diff)];
            e = band_entry(e, band);
            e.passed &= min_diff >= 0.0;
        }
        "lambda1" => {
            let v = ctx.renewal()?;
            let v2 = v.v(big_r).powi(2);
            let (short, long) = ctx.lambda1_pair()?;
            let scaled = short.lambda1 * v2;
            let drift = (long.lambda1 / short.lambda1 - 1.0).abs();
            e.ci = Some(((short.lambda1 - 2.0 * short.stderr) * v2, (short.lambda1 + 2.0 * short.stderr) * v2));
            e.values = vec![
                ("lambda1".into(), short.lambda1),
                ("lambda1_stderr".into(), short.stderr),
                ("lambda1_v2".into(), scaled),
                ("lambda1_long_window".into(), long.lambda1),
                ("window_drift".into(), drift),
            ];
            e.passed = scaled >= LAMBDA1_BRACKET.0 && scaled <= LAMBDA1_BRACKET.1 && drift < LAMBDA1_WINDOW_TOL;
        }
        "hk-factorization" => {
            let v = ctx.renewal()?;
            let lambda1 = ctx.lambda1()?.lambda1;
            let ts = path_grid.times();
            let horizon = ts.iter().copied().fold(0.0, f64::max);
            let proc_ = ctx.ball_process(big_r, horizon)?;
            let xs: Vec<f64> = path_grid.xs().iter().map(|a| a * big_r).collect();
            let ys: Vec<f64> = path_grid.ys().iter().map(|a| a * big_r).collect();
            let rep = check_hk_kula2(&proc_, &v, &ts, &xs, &ys, lambda1)?;
            e.ci = Some((rep.band.min - 2.0 * rep.min_se, rep.band.max + 2.0 * rep.max_se));
            e.values = vec![
                ("min_se".into(), rep.min_se),
                ("max_se".into(), rep.max_se),
                ("profile_min".into(), rep.profile.min),
                ("profile_max".into(), rep.profile.max),
            ];
            e.passed = rep.band.min > HK_BAND_GATE.0
                && rep.band.max < HK_BAND_GATE.1
                && rep.band.min - 2.0 * rep.min_se > 0.0
                && (rep.band.max + 2.0 * rep.max_se).is_finite();
            e.band = Some(with_grid(rep.band, grid_id));
        }
        "gradient-bound" => {
            let ts = path_grid.times();
            let horizon = ts.iter().copied().fold(0.0, f64::max);
            let proc_ = ctx.ball_process(big_r, horizon)?;
            let xs: Vec<Vec<f64>> = path_grid.xs().iter().map(|a| ctx.axis(a.min(0.9) * big_r)).collect();
            let ys: Vec<Vec<f64>> = path_grid.ys().iter().map(|a| ctx.axis(a * big_r)).collect();
            let rep = check_main1(&proc_, &ts, &xs, &ys)?;
            let ratios: Vec<f64> = rep.nodes.iter().map(|n| n.ratio).collect();
            e.band = RatioBand::from_values(grid_id, &ratios);
            e.ci = Some((rep.sup_ratio - 2.0 * rep.sup_se, rep.sup_ratio + 2.0 * rep.sup_se));
            e.values = vec![("sup_ratio".into(), rep.sup_ratio), ("sup_se".into(), rep.sup_se)];
            if let Some(l) = rep.sup_ratio_long_time {
                e.values.push(("sup_ratio_long_time".into(), l));
            }
            e.passed = rep.sup_ratio.is_finite() && (rep.sup_ratio + 2.0 * rep.sup_se).is_finite();
            // family-specific forms of the bound factor on the same nodes (t ≤ 1)
            let mut spec_min = f64::INFINITY;
            let mut spec_max = 0.0f64;
            for n in rep.nodes.iter().filter(|n| n.t <= 1.0) {
                let delta = proc_.domain().delta(&n.x);
                if let Some(s) = specialized_bound_factor(&ev, delta, n.t) {
                    let q = gradient_bound_factor(&ev, delta, n.t) / s;
                    spec_min = spec_min.min(q);
                    spec_max = spec_max.max(q);
                }
            }
            if spec_max > 0.0 {
                e.values.push(("specialized_min".into(), spec_min));
                e.values.push(("specialized_max".into(), spec_max));
                let hi = match ev.spec().family {
                    Family::Relativistic => (1.0 + 2.0 * ev.spec().m).sqrt(),
                    _ => 1.0,
                };
                let ok = spec_min >= 1.0 - 1e-9 && spec_max <= hi * (1.0 + 1e-9);
                if !ok {
                    e.diagnostics.push(format!("specialized bound factor ratio [{spec_min}, {spec_max}]"));
                }
                e.passed &= ok;
            }
        }
        "ikeda-watanabe" => {
            if d != 1 {
                return Ok(not_applicable(e, "needs dimension one"));
            }
            let proc_ = ctx.ball_process(big_r, 0.5)?;
            let rep = check_ikeda_watanabe(&proc_, 0.0, (0.0, 0.5), (big_r, 2.0 * big_r), 48)?;
            e.ci = Some((rep.discrepancy - 2.0 * rep.combined_se, rep.discrepancy + 2.0 * rep.combined_se));
            e.values = vec![
                ("lhs".into(), rep.lhs.mean),
                ("rhs".into(), rep.rhs.mean),
                ("discrepancy".into(), rep.discrepancy),
                ("combined_se".into(), rep.combined_se),
                ("boundary_mass".into(), rep.boundary_mass),
            ];
            e.passed = rep.discrepancy.abs() < Z_GATE * rep.combined_se && rep.boundary_mass < BOUNDARY_MASS_TOL;
        }
        "domain-monotonicity" => {
            let ts = path_grid.times();
            let horizon = ts.iter().copied().fold(0.0, f64::max);
            let small = ctx.ball_process(0.5 * big_r, horizon)?;
            let large = ctx.ball_process(big_r, horizon)?;
            let worst = check_domain_monotonicity(&small, &large, &vec![0.0; d], &ts)?;
            e.values = vec![("max_excess_se".into(), worst)];
            e.passed = worst < Z_GATE;
        }
        "semigroup" => {
            if d != 1 {
                return Ok(not_applicable(e, "needs dimension one"));
            }
            let proc_ = ctx.ball_process(big_r, 0.3)?;
            let rep = check_semigroup(&proc_, 0.3, 0.2 * big_r, -0.3 * big_r, 24)?;
            let se = (rep.direct.stderr.powi(2) + rep.composed_se.powi(2)).sqrt();
            e.values = vec![
                ("direct".into(), rep.direct.mean),
                ("composed".into(), rep.composed),
                ("joint_se".into(), se),
            ];
            e.passed = (rep.direct.mean - rep.composed).abs() < Z_GATE * se;
        }
        "appendix-constants" => {
            let v = ctx.renewal()?;
            let k = ctx.free_kernel()?;
            e.passed = true;
            for radius in [0.5, 1.0, 2.0] {
                let c = estimate_appendix_constants(&k, &v, radius)?;
                for (name, val) in [
                    ("c_lower", c.c_lower),
                    ("c_tilde", c.c_tilde),
                    ("c", c.c_r),
                    ("c_star", c.c_star),
                    ("i", c.i_r),
                ] {
                    e.values.push((format!("{name}_r{radius}"), val));
                }
                e.passed &= c.all_positive();
                if ev.spec().family == Family::Stable && c.c_lower != 1.0 {
                    e.passed = false;
                    e.diagnostics.push(format!("stable C_lower = {} at R = {radius}", c.c_lower));
                }
            }
        }
        "levy-quotient" => {
            let rep = check_ab_levy_quotient(&ev, &[0.02, 0.1, 0.3, 0.7, 1.5], &[0.0, 0.3, 1.0])?;
            e.values = vec![
                ("sup_ratio".into(), rep.sup_ratio),
                ("min_nu_tilde".into(), rep.min_nu_tilde),
                ("max_share".into(), rep.max_share),
            ];
            e.passed = rep.min_nu_tilde >= 0.0 && rep.sup_ratio.is_finite() && rep.max_share <= 1.0 + 1e-12;
        }
        "key-sandwich" => {
            let ts = path_grid.times();
            let horizon = ts.iter().copied().fold(0.0, f64::max);
            let proc_ = ctx.ball_process(big_r, horizon)?;
            let xs: Vec<Vec<f64>> = path_grid.half_xs().iter().map(|a| ctx.axis(a * big_r)).collect();
            let ys: Vec<Vec<f64>> = path_grid.half_ys().iter().map(|a| ctx.axis(a * big_r)).collect();
            let rep = check_key(&proc_, &ts, &xs, &ys, Z_GATE)?;
            let failing = rep.nodes.iter().filter(|n| !(n.lower_ok && n.upper_ok)).count();
            let shares: Vec<f64> = rep.nodes.iter().map(|n| n.diff.mean / n.free_diff).collect();
            e.band = RatioBand::from_values(grid_id, &shares);
            e.values = vec![("failing_nodes".into(), failing as f64)];
            e.passed = rep.all_hold;
        }
        "diff-half-ball" | "diff-near-pole" | "diff-far-pole" => {
            let reps = ctx.half_ball()?;
            let lemma = match c.id {
                "diff-half-ball" => DiffLemma::HalfBall,
                "diff-near-pole" => DiffLemma::NearPole,
                _ => DiffLemma::FarPole,
            };
            let rep = reps.iter().find(|r| r.lemma == lemma).expect("all three lemmas are computed");
            e.grid_id = "lemma-balls".into();
            e = lemma_entry(e, rep);
        }
        "diff-domain" => {
            let v = ctx.renewal()?;
            let spec = match &cfg.domain {
                Some(s) => s.clone(),
                None => {
                    let mut center = vec![0.0; d];
                    center[0] = 0.4;
                    if d > 1 {
                        center[1] = 0.3;
                    }
                    DomainSpec::symmetrized(vec![BallSpec { center, radius: 0.7 }])
                }
            };
            let domain = Domain::new(spec)?;
            let origin = vec![0.0; d];
            if !domain.is_symmetric() || !domain.contains(&origin) {
                return Ok(not_applicable(e, "the domain is not symmetric about the origin"));
            }
            let r = domain.delta(&origin).min(1.0);
            let mut ys: Vec<Vec<f64>> = [[0.3, 0.3], [-0.5, 0.4], [0.8, 0.3], [0.1, -0.2]]
                .iter()
                .map(|p| {
                    let mut y = vec![0.0; d];
                    y[0] = p[0];
                    if d > 1 {
                        y[1] = p[1];
                    }
                    y
                })
                .filter(|y| domain.contains(y))
                .collect();
            for s in [0.5 * r, -0.5 * r] {
                if ys.len() < 3 {
                    ys.push(ctx.axis(s));
                }
            }
            let horizon = LEMMA_TIMES.iter().copied().fold(0.0, f64::max);
            let proc_ = ctx.process(domain.spec().clone(), horizon)?;
            let rep = check_m_estimate(&proc_, &v, &LEMMA_TIMES, &ys)?;
            e.grid_id = "lemma-domain".into();
            e = lemma_entry(e, &rep);
        }
        other => return Err(Error::InvalidInput(format!("unknown check id {other}"))),
    }
    Ok(e)
}

/// Runs the checks whose ids are in `ids` (all checks when `None`), in the
/// fixed order of [`CHECKS`]. A failing or erroring check is recorded and
/// does not stop the others.
pub fn run_checks(cfg: &RunConfig, ids: Option<&[String]>) -> Result<VerificationReport> {
    if let Some(ids) = ids {
        for id in ids {
            if check_def(id).is_none() {
                return Err(Error::Config(format!("unknown check id {id}")));
            }
        }
    }
    let mut ctx = Context::new(cfg)?;
    let mut report = VerificationReport::new(cfg.model);
    for c in CHECKS {
        if let Some(ids) = ids {
            if !ids.iter().any(|i| i == c.id) {
                continue;
            }
        }
        let start = Instant::now();
        let mut entry = match run_check(&mut ctx, c) {
            Ok(e) => e,
            Err(err) => {
                let mut e = CheckEntry::new(c.id, c.anchor, "none");
                e.diagnostics.push(format!("error: {err}"));
                e
            }
        };
        entry.runtime_s = start.elapsed().as_secs_f64();
        report.entries.push(entry);
    }
    Ok(report)
}

/// All checks enabled by the configuration.
pub fn run_all(cfg: &RunConfig) -> Result<VerificationReport> {
    run_checks(cfg, cfg.checks.as_deref())
}

/// Writes the CSV tables of the model, renewal function and free kernel on
/// the configured grid into `dir`.
pub fn write_tables(cfg: &RunConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut ctx = Context::new(cfg)?;
    let grid = log_grid(1e-3, 1e3, 61);
    ctx.symbols().write_csv(BufWriter::new(File::create(dir.join("model.csv"))?), &grid)?;
    let v = ctx.renewal()?;
    v.write_csv(BufWriter::new(File::create(dir.join("renewal.csv"))?))?;
    let k = ctx.free_kernel()?;
    let ts = cfg.grids.free.times();
    let rs = cfg.grids.free.radii(cfg.radius);
    k.write_matrix_csv(BufWriter::new(File::create(dir.join("kernel_p.csv"))?), &ts, &rs, false)?;
    k.write_matrix_csv(BufWriter::new(File::create(dir.join("kernel_dp_dr.csv"))?), &ts, &rs, true)?;
    Ok(())
}

pub fn write_report(report: &VerificationReport, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, report.to_json()?)?;
    Ok(())
}

/// One line per entry: status, id, runtime and the first diagnostic.
pub fn summary_lines(report: &VerificationReport) -> Vec<String> {
    report
        .entries
        .iter()
        .map(|e| {
            let status = if e.passed { "PASS" } else { "FAIL" };
            let diag = e.diagnostics.first().map(|d| format!("  ({d})")).unwrap_or_default();
            format!("{status} {:<22} {:>8.2}s{diag}", e.check_id, e.runtime_s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_ids_are_unique_and_stages_ordered() {
        for (i, a) in CHECKS.iter().enumerate() {
            assert!(CHECKS[i + 1..].iter().all(|b| b.id != a.id), "{}", a.id);
        }
        let order = |s: Stage| [Stage::Symbols, Stage::Renewal, Stage::FreeKernel, Stage::Dirichlet, Stage::Difference]
            .iter()
            .position(|x| *x == s)
            .unwrap();
        assert!(CHECKS.windows(2).all(|w| order(w[0].stage) <= order(w[1].stage)));
        for id in HK_CHECKS.iter().chain(MAIN1_CHECKS).chain(IW_CHECKS).chain(DIFF_CHECKS).chain(CONSTANT_CHECKS) {
            assert!(check_def(id).is_some(), "{id}");
        }
    }

    #[test]
    fn unknown_ids_are_rejected() {
        let cfg = RunConfig::default();
        assert!(run_checks(&cfg, Some(&["nope".to_string()])).is_err());
    }

    #[test]
    fn symbol_checks_pass_for_the_default_model() {
        let cfg = RunConfig::default();
        let ids: Vec<String> = ["psi-star-sandwich", "psi-scaling"].iter().map(|s| s.to_string()).collect();
        let rep = run_checks(&cfg, Some(&ids)).unwrap();
        assert_eq!(rep.entries.len(), 2);
        assert!(rep.all_passed(), "{:?}", rep.entries);
    }
}
