//! Iterative solvers: RHTP, its HTP specialization (zero regularizer),
//! and the IHT baseline. Each run produces a full [`IterationTrace`].
//!
//! One RHTP iteration is
//! 1. identification: `x_hat = H_K(x + mu Phi^t (y - Phi x) - Gamma grad J(x))`,
//! 2. support: `Lambda = supp(x_hat)`,
//! 3. estimation: `x_next = argmin ||y - Phi z||_2 over supp(z) ⊆ Lambda`.
//!
//! The thresholded argument equals `Psi(x) - mu grad f(x)`, which is what
//! ties the iteration to the conjugate z-domain dynamics in [`crate::analysis`].

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RhtpError};
use crate::regularizer::Regularizer;
use crate::sensing::{
    hard_threshold, restricted_least_squares, ProblemInstance, SparseIterate, SupportSet,
};

#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmKind {
    Rhtp(Regularizer),
    Htp,
    Iht,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop when `Lambda^{k+1} = Lambda^k`; the estimation stage then
    /// pins the iterate, so `x^{k+1} = x^k` exactly.
    SupportStable,
    ResidualBelow(f64),
    /// Requires `x_star` on the instance.
    ErrorBelow(f64),
}

#[derive(Debug, Clone)]
pub struct AlgoConfig {
    pub mu: f64,
    pub k: usize,
    pub max_iters: usize,
    pub stop_rule: StopRule,
    pub algorithm: AlgorithmKind,
    /// Initial estimate; defaults to the zero vector.
    pub x0: Option<DVector<f64>>,
}

impl AlgoConfig {
    pub fn validate(&self, inst: &ProblemInstance) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(RhtpError::Argument(format!("mu must be > 0, got {}", self.mu)));
        }
        if self.k == 0 || self.k > inst.n {
            return Err(RhtpError::Argument(format!(
                "sparsity target K={} out of range for n={}",
                self.k, inst.n
            )));
        }
        match self.stop_rule {
            StopRule::ResidualBelow(t) | StopRule::ErrorBelow(t) if !(t > 0.0) => {
                return Err(RhtpError::Argument(format!(
                    "stop tolerance must be > 0, got {t}"
                )));
            }
            StopRule::ErrorBelow(_) if inst.x_star.is_none() => {
                return Err(RhtpError::Argument(
                    "error_below stop rule requires x_star".into(),
                ));
            }
            _ => {}
        }
        if let AlgorithmKind::Rhtp(reg) = &self.algorithm {
            if reg.n() != inst.n {
                return Err(RhtpError::Argument(format!(
                    "regularizer dimension {} does not match n={}",
                    reg.n(),
                    inst.n
                )));
            }
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != inst.n {
                return Err(RhtpError::Argument(format!(
                    "x0 has length {}, expected {}",
                    x0.len(),
                    inst.n
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub k: usize,
    pub x: SparseIterate,
    /// Identification-stage output (full vector); zeros at k = 0.
    pub x_hat: DVector<f64>,
    pub residual_norm: f64,
    pub error_norm: Option<f64>,
}

impl IterationRecord {
    pub fn support(&self) -> &SupportSet {
        &self.x.support
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TerminalStatus {
    ConvergedSupportStable,
    HitMaxIters,
    Recovered,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub status: TerminalStatus,
    pub iterations_used: usize,
}

impl IterationTrace {
    pub fn final_record(&self) -> &IterationRecord {
        self.records.last().expect("trace always holds k = 0")
    }
}

/// One RHTP iteration: identification, support selection, estimation.
/// Indices kept by the threshold with an exactly zero value are dropped
/// before the estimation stage, so ties at zero shrink the support
/// instead of padding it.
pub fn rhtp_step(
    inst: &ProblemInstance,
    cfg: &AlgoConfig,
    reg: &Regularizer,
    x_k: &SparseIterate,
) -> Result<(SparseIterate, DVector<f64>, SupportSet)> {
    let residual = inst.residual(&x_k.values);
    let arg = &x_k.values + cfg.mu * (inst.phi.transpose() * residual)
        - reg.weighted_gradient(&x_k.values);
    let x_hat = hard_threshold(&arg, cfg.k)?;
    let support_next = SupportSet::of_nonzeros(&x_hat.values);
    let x_next = restricted_least_squares(inst, &support_next)?;
    Ok((x_next, x_hat.values, support_next))
}

/// One IHT iteration: the identification stage alone, no estimation.
pub fn iht_step(
    inst: &ProblemInstance,
    cfg: &AlgoConfig,
    x_k: &SparseIterate,
) -> Result<SparseIterate> {
    let residual = inst.residual(&x_k.values);
    let arg = &x_k.values + cfg.mu * (inst.phi.transpose() * residual);
    hard_threshold(&arg, cfg.k)
}

fn make_record(
    inst: &ProblemInstance,
    k: usize,
    x: SparseIterate,
    x_hat: DVector<f64>,
) -> IterationRecord {
    let residual_norm = inst.residual(&x.values).norm();
    let error_norm = inst.x_star.as_ref().map(|xs| (&x.values - xs).norm());
    IterationRecord {
        k,
        x,
        x_hat,
        residual_norm,
        error_norm,
    }
}

/// Runs the configured algorithm, recording every iterate (including
/// k = 0). Step errors terminate the trace with `Failed` status rather
/// than propagating.
pub fn run(inst: &ProblemInstance, cfg: &AlgoConfig) -> Result<IterationTrace> {
    cfg.validate(inst)?;
    let zero_reg;
    let reg = match &cfg.algorithm {
        AlgorithmKind::Rhtp(reg) => Some(reg),
        AlgorithmKind::Htp => {
            zero_reg = Regularizer::zero(inst.n);
            Some(&zero_reg)
        }
        AlgorithmKind::Iht => None,
    };

    let x0 = match &cfg.x0 {
        Some(v) => SparseIterate::from_dense(v.clone()),
        None => SparseIterate::zero(inst.n),
    };
    let mut records = vec![make_record(inst, 0, x0, DVector::zeros(inst.n))];
    let mut status = TerminalStatus::HitMaxIters;

    for k in 0..cfg.max_iters {
        let x_k = records.last().unwrap().x.clone();
        let (x_next, x_hat, support_stable) = match reg {
            Some(reg) => match rhtp_step(inst, cfg, reg, &x_k) {
                Ok((x_next, x_hat, support_next)) => {
                    let stable = support_next == x_k.support;
                    // a repeated support repeats the same least-squares
                    // solve, so the iterate is a fixed point
                    let x_next = if stable { x_k.clone() } else { x_next };
                    (x_next, x_hat, stable)
                }
                Err(e) => {
                    status = TerminalStatus::Failed(e.to_string());
                    break;
                }
            },
            None => match iht_step(inst, cfg, &x_k) {
                Ok(x_next) => {
                    let x_hat = x_next.values.clone();
                    let stable = x_next.support == x_k.support && x_next.values == x_k.values;
                    (x_next, x_hat, stable)
                }
                Err(e) => {
                    status = TerminalStatus::Failed(e.to_string());
                    break;
                }
            },
        };
        records.push(make_record(inst, k + 1, x_next, x_hat));
        let rec = records.last().unwrap();

        let fired = match cfg.stop_rule {
            StopRule::SupportStable => support_stable,
            StopRule::ResidualBelow(tol) => rec.residual_norm < tol,
            StopRule::ErrorBelow(tol) => rec.error_norm.map(|e| e < tol).unwrap_or(false),
        };
        if fired {
            status = match cfg.stop_rule {
                StopRule::SupportStable => TerminalStatus::ConvergedSupportStable,
                _ => TerminalStatus::Recovered,
            };
            break;
        }
        // a stable support is a fixed point for HTP-family runs; nothing
        // further can change, so stop instead of replaying the iterate
        if support_stable && reg.is_some() {
            status = TerminalStatus::ConvergedSupportStable;
            break;
        }
    }

    let iterations_used = records.len() - 1;
    Ok(IterationTrace {
        records,
        status,
        iterations_used,
    })
}

/// One JSON-lines trace record; key order is fixed by field order.
#[derive(Debug, Serialize, Deserialize)]
pub struct TraceLine {
    pub k: usize,
    pub support: Vec<usize>,
    pub residual: f64,
    pub error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_hat: Option<Vec<f64>>,
}

/// Serializes a trace as JSON lines, one record per iteration. Full
/// vectors are embedded only when `full` is set.
pub fn trace_to_jsonl(trace: &IterationTrace, full: bool) -> String {
    let mut out = String::new();
    for rec in &trace.records {
        let line = TraceLine {
            k: rec.k,
            support: rec.support().indices().to_vec(),
            residual: rec.residual_norm,
            error: rec.error_norm,
            x: full.then(|| rec.x.values.as_slice().to_vec()),
            x_hat: full.then(|| rec.x_hat.as_slice().to_vec()),
        };
        out.push_str(&serde_json::to_string(&line).expect("trace serialization"));
        out.push('\n');
    }
    out
}

pub fn trace_from_jsonl(text: &str) -> Result<Vec<TraceLine>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| RhtpError::Format(format!("trace line: {e}")))
        })
        .collect()
}
