use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use levykernel::cli::{
    run_all, run_checks, summary_lines, write_report, write_tables, CONSTANT_CHECKS, DIFF_CHECKS, HK_CHECKS,
    IW_CHECKS, MAIN1_CHECKS,
};
use levykernel::config::{RunConfig, OUT_ENV};
use levykernel::dirichlet::{estimate_lambda1, grad_norm, Domain, KilledProcess};
use levykernel::renewal::RenewalFunction;
use levykernel::report::VerificationReport;
use levykernel::symbols::{Family, ModelSpec, SymbolEvaluator};
use levykernel::Result;

#[derive(Parser)]
#[command(name = "levykernel", version, about = "Heat kernels of isotropic unimodal Levy processes and their Dirichlet gradient bounds")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// stable, relativistic, subordinate_bm or trunc_stable_exp.
    #[arg(long, global = true)]
    family: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Mass (relativistic) or tempering parameter (subordinate_bm).
    #[arg(long, global = true)]
    mass: Option<f64>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Radius of the centered ball.
    #[arg(long, global = true)]
    radius: Option<f64>,
    #[arg(long, global = true)]
    n_paths: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_ENV)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write r, psi, psi_star, nu on a log grid.
    Model,
    /// Write the renewal function table and print H_R.
    Renewal,
    /// Write p_t(r) and its radial derivative on the configured grid.
    Kernel,
    /// Survival probability from x at time t in the configured domain.
    Survival {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long)]
        t: f64,
    },
    /// Dirichlet heat kernel p_D(t, x, y).
    Pd {
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Vec<f64>,
    },
    /// Gradient of p_D(t, ., y) at x.
    Grad {
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Vec<f64>,
        /// Difference step; defaults to delta(x)/8.
        #[arg(long)]
        h: Option<f64>,
    },
    /// Principal eigenvalue of the ball from survival decay.
    Lambda1 {
        /// Fit window [V^2(R), k V^2(R)].
        #[arg(long, default_value_t = 3.0)]
        window: f64,
    },
    VerifyHk,
    VerifyMain1,
    VerifyIw,
    VerifyDiff,
    Constants,
    /// Run every enabled check and write the report and tables.
    RunAll,
}

fn parse_family(name: &str) -> Result<Family> {
    Ok(match name {
        "stable" => Family::Stable,
        "relativistic" => Family::Relativistic,
        "subordinate_bm" => Family::SubordinateBm,
        "trunc_stable_exp" => Family::TruncStableExp,
        other => return Err(levykernel::Error::Config(format!("unknown family {other}"))),
    })
}

fn build_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(f) = &c.family {
        let family = parse_family(f)?;
        let d = cfg.model.d;
        cfg.model = match family {
            Family::Stable => ModelSpec::stable(1.0, d),
            Family::Relativistic => ModelSpec::relativistic(1.0, d),
            Family::SubordinateBm => ModelSpec::subordinate_bm(1.5, 1.0, d),
            Family::TruncStableExp => ModelSpec::trunc_stable_exp(1.0, d),
        };
    }
    if let Some(a) = c.alpha {
        cfg.model.alpha = a;
    }
    if let Some(m) = c.mass {
        cfg.model.m = m;
    }
    if let Some(d) = c.dim {
        cfg.model.d = d;
        if cfg.domain.is_some() && c.config.is_some() {
            return Err(levykernel::Error::Config("--dim conflicts with the configured domain".into()));
        }
    }
    if let Some(r) = c.radius {
        cfg.radius = r;
    }
    if let Some(n) = c.n_paths {
        cfg.paths.n_paths = n;
    }
    if let Some(s) = c.seed {
        cfg.paths.seed = s;
    }
    if let Some(e) = c.eps {
        cfg.paths.eps = e;
    }
    if let Some(dt) = c.dt {
        cfg.paths.dt = dt;
    }
    if let Some(o) = &c.out {
        cfg.output.dir = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn finish(report: &VerificationReport, cfg: &RunConfig, name: &str) -> Result<bool> {
    for line in summary_lines(report) {
        eprintln!("{line}");
    }
    let path = cfg.output.resolve_dir().join(name);
    write_report(report, &path)?;
    eprintln!("report written to {}", path.display());
    Ok(report.all_passed())
}

fn ids(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn process(cfg: &RunConfig, horizon: f64) -> Result<KilledProcess> {
    let ev = Arc::new(SymbolEvaluator::new(cfg.model)?);
    KilledProcess::new(ev, Domain::new(cfg.domain_spec())?, cfg.paths, horizon)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = build_config(&cli.common)?;
    let dir = cfg.output.resolve_dir();
    match cli.command {
        Command::Model => {
            std::fs::create_dir_all(&dir)?;
            let ev = SymbolEvaluator::new(cfg.model)?;
            let path = dir.join("model.csv");
            ev.write_csv(std::fs::File::create(&path)?, &levykernel::interp::log_grid(1e-3, 1e3, 61))?;
            eprintln!("wrote {}", path.display());
        }
        Command::Renewal => {
            std::fs::create_dir_all(&dir)?;
            let ev = SymbolEvaluator::new(cfg.model)?;
            let v = RenewalFunction::build(&ev)?;
            let path = dir.join("renewal.csv");
            v.write_csv(std::fs::File::create(&path)?)?;
            eprintln!("wrote {}", path.display());
            print_json(&v.h(cfg.radius))?;
        }
        Command::Kernel => {
            write_tables(&cfg, &dir)?;
            eprintln!("wrote tables to {}", dir.display());
        }
        Command::Survival { x, t } => print_json(&process(&cfg, t)?.survival(&x, t)?)?,
        Command::Pd { t, x, y } => print_json(&process(&cfg, t)?.pd(t, &x, &y)?)?,
        Command::Grad { t, x, y, h } => {
            let g = process(&cfg, t)?.grad_pd(t, &x, &y, h)?;
            let (norm, se) = grad_norm(&g);
            print_json(&serde_json::json!({ "components": g, "norm": norm, "norm_stderr": se }))?;
        }
        Command::Lambda1 { window } => {
            let ev = SymbolEvaluator::new(cfg.model)?;
            let v = RenewalFunction::build(&ev)?;
            let est = estimate_lambda1(&ev, &v, cfg.radius, cfg.paths, window)?;
            print_json(&serde_json::json!({
                "estimate": est,
                "lambda1_v2": est.lambda1 * v.v(cfg.radius).powi(2),
            }))?;
        }
        Command::VerifyHk => return finish(&run_checks(&cfg, Some(&ids(HK_CHECKS)))?, &cfg, "verify_hk.json"),
        Command::VerifyMain1 => {
            return finish(&run_checks(&cfg, Some(&ids(MAIN1_CHECKS)))?, &cfg, "verify_main1.json")
        }
        Command::VerifyIw => return finish(&run_checks(&cfg, Some(&ids(IW_CHECKS)))?, &cfg, "verify_iw.json"),
        Command::VerifyDiff => {
            return finish(&run_checks(&cfg, Some(&ids(DIFF_CHECKS)))?, &cfg, "verify_diff.json")
        }
        Command::Constants => {
            return finish(&run_checks(&cfg, Some(&ids(CONSTANT_CHECKS)))?, &cfg, "constants.json")
        }
        Command::RunAll => {
            let report = run_all(&cfg)?;
            if cfg.output.tables {
                write_tables(&cfg, &dir)?;
            }
            return finish(&report, &cfg, &cfg.output.report);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
