//! Experiment configuration: JSON schema, validation, and the algorithm
//! roster.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rhtp_core::regularizer::Regularizer;
use rhtp_core::{Result, RhtpError};

/// An integer parameter that is either a single value or a sweep list.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum Sweep {
    One(usize),
    Many(Vec<usize>),
}

impl Sweep {
    pub fn values(&self) -> Vec<usize> {
        match self {
            Sweep::One(v) => vec![*v],
            Sweep::Many(vs) => vs.clone(),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Sweep::Many(v) if v.is_empty())
    }
}

/// One algorithm to benchmark. `kind` is `"rhtp"`, `"htp"`, or `"iht"`;
/// the regularizer fields apply to `"rhtp"` only. A missing `mu` falls
/// back to the experiment-wide step size.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AlgorithmSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

impl AlgorithmSpec {
    pub fn htp() -> Self {
        AlgorithmSpec {
            kind: "htp".into(),
            q: None,
            eps: None,
            gamma: None,
            mu: None,
        }
    }

    pub fn iht() -> Self {
        AlgorithmSpec {
            kind: "iht".into(),
            ..AlgorithmSpec::htp()
        }
    }

    pub fn rhtp(q: f64, eps: f64, gamma: f64) -> Self {
        AlgorithmSpec {
            kind: "rhtp".into(),
            q: Some(q),
            eps: Some(eps),
            gamma: Some(gamma),
            mu: None,
        }
    }

    /// Stable label used in output files, e.g. `rhtp_q1.5`.
    pub fn label(&self) -> String {
        match (self.kind.as_str(), self.q) {
            ("rhtp", Some(q)) => format!("rhtp_q{q}"),
            _ => self.kind.clone(),
        }
    }

    pub fn build_regularizer(&self, n: usize) -> Result<Regularizer> {
        match self.kind.as_str() {
            "htp" | "iht" => Ok(Regularizer::zero(n)),
            "rhtp" => {
                let q = self
                    .q
                    .ok_or_else(|| RhtpError::Argument("rhtp spec requires q".into()))?;
                let eps = self
                    .eps
                    .ok_or_else(|| RhtpError::Argument("rhtp spec requires eps".into()))?;
                let gamma = self
                    .gamma
                    .ok_or_else(|| RhtpError::Argument("rhtp spec requires gamma".into()))?;
                Regularizer::uniform_smooth_power(q, eps, gamma, n)
            }
            other => Err(RhtpError::Argument(format!(
                "unknown algorithm kind {other:?} (expected rhtp, htp, or iht)"
            ))),
        }
    }
}

fn default_noise_std() -> f64 {
    0.0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// The experiment protocol: dimensions (with optional sweeps over `m` and
/// `k`), trial count, seeding, algorithm roster, stopping parameters, and
/// output location.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: Sweep,
    pub k: Sweep,
    pub num_trials: usize,
    pub seed: u64,
    pub algorithms: Vec<AlgorithmSpec>,
    /// Experiment-wide step size; individual algorithms may override.
    pub mu: f64,
    pub success_tol: f64,
    pub max_iters: usize,
    #[serde(default = "default_noise_std")]
    pub noise_std: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; `None` lets the runtime (or RHTP_WORKERS) decide.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// When true, per-trial iteration traces are written under
    /// `output_dir/traces/`.
    #[serde(default)]
    pub emit_traces: bool,
    /// Support sets are drawn uniformly over size-K subsets; recorded
    /// here so the sampling convention travels with the results.
    #[serde(default = "default_support_distribution")]
    pub support_distribution: String,
}

fn default_support_distribution() -> String {
    "uniform".into()
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(RhtpError::Argument("n must be positive".into()));
        }
        if self.m.is_empty() || self.k.is_empty() {
            return Err(RhtpError::Argument("sweep lists must be nonempty".into()));
        }
        for m in self.m.values() {
            if m == 0 || m > self.n {
                return Err(RhtpError::Argument(format!(
                    "measurement count {m} out of range for n={}",
                    self.n
                )));
            }
        }
        for k in self.k.values() {
            if k == 0 || k > self.m.values().iter().copied().min().unwrap() {
                return Err(RhtpError::Argument(format!(
                    "sparsity {k} out of range for the smallest swept m"
                )));
            }
        }
        if self.num_trials == 0 {
            return Err(RhtpError::Argument("num_trials must be >= 1".into()));
        }
        if !(self.success_tol > 0.0) {
            return Err(RhtpError::Argument("success_tol must be > 0".into()));
        }
        if !(self.mu > 0.0) {
            return Err(RhtpError::Argument("mu must be > 0".into()));
        }
        if self.noise_std < 0.0 {
            return Err(RhtpError::Argument("noise_std must be >= 0".into()));
        }
        if self.algorithms.is_empty() {
            return Err(RhtpError::Argument("algorithm list must be nonempty".into()));
        }
        for spec in &self.algorithms {
            spec.build_regularizer(self.n)?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| RhtpError::Format(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            RhtpError::Argument(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| RhtpError::Format(format!("config serialization error: {e}")))
    }
}
