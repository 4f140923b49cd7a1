//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dirichlet::{DomainSpec, PathConfig};
use crate::error::{Error, Result};
use crate::freekernel::{standard_r_grid, standard_t_grid};
use crate::interp::log_grid;
use crate::report::REPORT_VERSION;
use crate::symbols::ModelSpec;

/// Grid for the deterministic kernel checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FreeGrid {
    /// 9 times in `[1e-2, 1]`, 17 radii in `[1e-2, R]`.
    #[default]
    Standard,
    /// 4 times, 6 radii on the same ranges.
    Coarse,
}

impl FreeGrid {
    pub fn id(&self) -> &'static str {
        match self {
            FreeGrid::Standard => "free-standard",
            FreeGrid::Coarse => "free-coarse",
        }
    }

    pub fn times(&self) -> Vec<f64> {
        match self {
            FreeGrid::Standard => standard_t_grid(),
            FreeGrid::Coarse => log_grid(1e-2, 1.0, 4),
        }
    }

    pub fn radii(&self, big_r: f64) -> Vec<f64> {
        match self {
            FreeGrid::Standard => standard_r_grid(big_r),
            FreeGrid::Coarse => log_grid(1e-2, big_r, 6),
        }
    }
}

/// `(t, x, y)` grid for the path checks. Space points are fractions of the
/// ball radius along the first axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PathGrid {
    /// 3 × 3 × 3.
    #[default]
    Coarse,
    /// 5 × 4 × 4.
    Fine,
}

impl PathGrid {
    pub fn id(&self) -> &'static str {
        match self {
            PathGrid::Coarse => "paths-coarse",
            PathGrid::Fine => "paths-fine",
        }
    }

    pub fn times(&self) -> Vec<f64> {
        match self {
            PathGrid::Coarse => vec![0.05, 0.3, 1.0],
            PathGrid::Fine => vec![0.02, 0.05, 0.3, 1.0, 1.5],
        }
    }

    /// Start points as fractions of `R`.
    pub fn xs(&self) -> Vec<f64> {
        match self {
            PathGrid::Coarse => vec![0.0, 0.5, 0.95],
            PathGrid::Fine => vec![0.0, 0.3, 0.6, 0.95],
        }
    }

    /// End points as fractions of `R`.
    pub fn ys(&self) -> Vec<f64> {
        match self {
            PathGrid::Coarse => vec![-0.5, 0.2, 0.9],
            PathGrid::Fine => vec![-0.7, -0.2, 0.4, 0.9],
        }
    }

    /// Positive-half points for the reflection checks, as fractions of `R`.
    pub fn half_xs(&self) -> Vec<f64> {
        match self {
            PathGrid::Coarse => vec![0.1, 0.3, 0.7],
            PathGrid::Fine => vec![0.05, 0.2, 0.5, 0.8],
        }
    }

    pub fn half_ys(&self) -> Vec<f64> {
        match self {
            PathGrid::Coarse => vec![0.2, 0.5, 0.9],
            PathGrid::Fine => vec![0.1, 0.4, 0.7, 0.95],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridIds {
    #[serde(default)]
    pub free: FreeGrid,
    #[serde(default)]
    pub paths: PathGrid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Defaults to the `LEVYKERNEL_OUT` directory, then `out`.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_report")]
    pub report: String,
    /// Also write the CSV tables of the model, renewal function and kernel.
    #[serde(default = "default_true")]
    pub tables: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, report: default_report(), tables: true }
    }
}

pub const OUT_ENV: &str = "LEVYKERNEL_OUT";

impl OutputConfig {
    pub fn resolve_dir(&self) -> PathBuf {
        self.dir
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn default_report() -> String {
    "report.json".into()
}

fn default_true() -> bool {
    true
}

fn default_version() -> u32 {
    REPORT_VERSION
}

fn default_radius() -> f64 {
    1.0
}

/// Everything a run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub model: ModelSpec,
    /// Ball radius `R` for the ball-based checks.
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Domain for the general-domain checks; the centered ball of radius
    /// `R` when absent.
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub paths: PathConfig,
    #[serde(default)]
    pub grids: GridIds,
    /// Subset of check ids to run; all when absent.
    #[serde(default)]
    pub checks: Option<Vec<String>>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::for_model(ModelSpec::stable(1.0, 1))
    }
}

impl RunConfig {
    pub fn for_model(model: ModelSpec) -> Self {
        Self {
            version: REPORT_VERSION,
            model,
            radius: 1.0,
            domain: None,
            paths: PathConfig::default(),
            grids: GridIds::default(),
            checks: None,
            output: OutputConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != REPORT_VERSION {
            return Err(Error::Config(format!("unsupported version {} (expected {REPORT_VERSION})", self.version)));
        }
        self.model.validate()?;
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Config(format!("radius = {} must be positive", self.radius)));
        }
        let p = &self.paths;
        if !(p.eps > 0.0 && p.dt > 0.0 && p.n_paths >= 2) {
            return Err(Error::Config("paths need eps > 0, dt > 0 and at least two paths".into()));
        }
        Ok(())
    }

    pub fn domain_spec(&self) -> DomainSpec {
        self.domain.clone().unwrap_or_else(|| DomainSpec::centered_ball(self.model.d, self.radius))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}
