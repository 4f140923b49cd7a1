//! Report types shared by the verification modules: Monte Carlo scalars,
//! ratio bands, and the consolidated verification report.

use serde::{Deserialize, Serialize};

use crate::symbols::ModelSpec;

pub const REPORT_VERSION: u32 = 1;

/// A Monte Carlo scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

impl McEstimate {
    /// Mean and standard error `sd/√n` of per-path values.
    pub fn from_samples(values: &[f64], seed: u64) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self { mean, stderr: (var / n as f64).sqrt(), n, seed }
    }

    /// Symmetric interval `mean ± z·stderr`.
    pub fn ci(&self, z: f64) -> (f64, f64) {
        (self.mean - z * self.stderr, self.mean + z * self.stderr)
    }
}

/// Standard error of a difference of two independent estimates.
pub fn joint_stderr(a: &McEstimate, b: &McEstimate) -> f64 {
    (a.stderr * a.stderr + b.stderr * b.stderr).sqrt()
}

/// Ratio `a/b` of two estimates with a first-order (delta method) standard
/// error, treating them as independent.
pub fn ratio_estimate(a: &McEstimate, b: &McEstimate) -> (f64, f64) {
    let q = a.mean / b.mean;
    let rel = ((a.stderr / a.mean).powi(2) + (b.stderr / b.mean).powi(2)).sqrt();
    (q, (q * rel).abs())
}

/// Minimum, median and maximum of a checked ratio over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioBand {
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub n: usize,
    pub grid_id: String,
}

impl RatioBand {
    /// Band of the finite values; `None` when there are none.
    pub fn from_values(grid_id: &str, values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        Some(Self { min: v[0], median, max: v[n - 1], n, grid_id: grid_id.to_string() })
    }

    /// Finite and strictly positive at both ends.
    pub fn is_finite_positive(&self) -> bool {
        self.min > 0.0 && self.max.is_finite()
    }
}

/// One row of the verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckEntry {
    pub check_id: String,
    /// The inequality or identity being checked, in words.
    pub anchor: String,
    pub grid_id: String,
    pub band: Option<RatioBand>,
    /// Confidence interval of the headline quantity, when it is random.
    pub ci: Option<(f64, f64)>,
    /// Named scalar outputs (constants, estimates, discrepancies).
    pub values: Vec<(String, f64)>,
    pub passed: bool,
    pub seed: Option<u64>,
    pub runtime_s: f64,
    pub diagnostics: Vec<String>,
}

impl CheckEntry {
    pub fn new(check_id: &str, anchor: &str, grid_id: &str) -> Self {
        Self {
            check_id: check_id.to_string(),
            anchor: anchor.to_string(),
            grid_id: grid_id.to_string(),
            band: None,
            ci: None,
            values: Vec::new(),
            passed: false,
            seed: None,
            runtime_s: 0.0,
            diagnostics: Vec::new(),
        }
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationReport {
    pub version: u32,
    pub model: ModelSpec,
    pub entries: Vec<CheckEntry>,
}

impl VerificationReport {
    pub fn new(model: ModelSpec) -> Self {
        Self { version: REPORT_VERSION, model, entries: Vec::new() }
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn entry(&self, check_id: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.check_id == check_id)
    }

    /// The report with runtimes zeroed, for reproducibility comparisons.
    pub fn numeric_payload(&self) -> Self {
        let mut copy = self.clone();
        for e in &mut copy.entries {
            e.runtime_s = 0.0;
        }
        copy
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
