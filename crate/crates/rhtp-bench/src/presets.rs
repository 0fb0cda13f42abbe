//! Canned experiment configurations for the standard benchmark protocol:
//! n = 512, m = 256, Gaussian ensembles, gamma = 0.3, eps = 0.42,
//! mu = 0.3, q in {0.5, 1, 1.5, 2}, 100 trials, success at error 1e-6
//! within 100 iterations.

use std::path::PathBuf;

use rhtp_core::{Result, RhtpError};

use crate::config::{AlgorithmSpec, ExperimentConfig, Sweep};

pub const PRESET_NAMES: [&str; 3] = ["paper-msd", "paper-fig2", "paper-fig3"];

fn paper_algorithms() -> Vec<AlgorithmSpec> {
    let mut algos = vec![AlgorithmSpec::htp()];
    for q in [0.5, 1.0, 1.5, 2.0] {
        algos.push(AlgorithmSpec::rhtp(q, 0.42, 0.3));
    }
    algos
}

fn paper_base(output_dir: &str) -> ExperimentConfig {
    ExperimentConfig {
        n: 512,
        m: Sweep::One(256),
        k: Sweep::One(51),
        num_trials: 100,
        seed: 20240915,
        algorithms: paper_algorithms(),
        mu: 0.3,
        success_tol: 1e-6,
        max_iters: 100,
        noise_std: 0.0,
        output_dir: PathBuf::from(output_dir),
        workers: None,
        emit_traces: false,
        support_distribution: "uniform".into(),
    }
}

/// Returns the named preset: `paper-msd` (error decay at K = 51),
/// `paper-fig2` (recovery probability against sparsity), or `paper-fig3`
/// (recovery probability against measurement count).
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let cfg = match name {
        "paper-msd" => paper_base("out-paper-msd"),
        "paper-fig2" => {
            let mut cfg = paper_base("out-paper-fig2");
            cfg.k = Sweep::Many(vec![1, 26, 51, 77, 102, 128]);
            cfg
        }
        "paper-fig3" => {
            let mut cfg = paper_base("out-paper-fig3");
            cfg.m = Sweep::Many(vec![128, 154, 180, 205, 230, 256]);
            cfg.k = Sweep::One(51);
            cfg
        }
        other => {
            return Err(RhtpError::Argument(format!(
                "unknown preset {other:?}; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
