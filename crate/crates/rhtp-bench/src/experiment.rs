//! Monte-Carlo experiment driver: seeded instance generation, parallel
//! trial execution, ordered aggregation, and output persistence.
//!
//! Determinism contract: each trial derives its own RNG stream from the
//! experiment seed, the sweep-point index, and the trial index, so a
//! trial's result is independent of which other trials run and of thread
//! scheduling. Aggregation iterates trials in index order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use rhtp_core::algo::{run, trace_to_jsonl, AlgoConfig, AlgorithmKind, StopRule};
use rhtp_core::sensing::ProblemInstance;
use rhtp_core::{Result, RhtpError};

use crate::config::{AlgorithmSpec, ExperimentConfig};

/// Draws a fresh problem instance: `phi` entries i.i.d. N(0, 1/m), a
/// support drawn uniformly from size-K subsets, nonzeros i.i.d. N(0, 1),
/// and optional Gaussian noise of standard deviation `noise_std`.
pub fn generate_instance(
    n: usize,
    m: usize,
    k: usize,
    noise_std: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ProblemInstance> {
    let scale = 1.0 / (m as f64).sqrt();
    let phi = DMatrix::from_fn(m, n, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    let support = rand::seq::index::sample(rng, n, k);
    let mut x_star = DVector::zeros(n);
    for i in support.iter() {
        x_star[i] = rng.sample::<f64, _>(StandardNormal);
    }
    let e = if noise_std > 0.0 {
        Some(DVector::from_fn(m, |_, _| {
            noise_std * rng.sample::<f64, _>(StandardNormal)
        }))
    } else {
        None
    };
    let mut y = &phi * &x_star;
    if let Some(e) = &e {
        y += e;
    }
    ProblemInstance::new(phi, y, Some(x_star), e, k)
}

// splitmix64-style finalizer used to derive independent trial seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Per-trial RNG seed from the experiment seed, sweep-point index, and
/// trial index.
pub fn trial_seed(seed: u64, point: u64, trial: u64) -> u64 {
    mix(mix(mix(seed) ^ point) ^ trial)
}

/// Outcome of one algorithm on one trial.
#[derive(Debug, Clone, Serialize)]
pub struct AlgoTrialResult {
    pub algo: String,
    pub recovered: bool,
    pub iters: usize,
    pub final_error: f64,
    /// `||x^k - x*||^2` per recorded iterate.
    pub msd_curve: Vec<f64>,
}

/// Outcome of one trial: the shared instance evaluated by every
/// algorithm in the roster.
#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    pub trial: u64,
    pub per_algorithm: Vec<AlgoTrialResult>,
}

/// Aggregated statistics for one sweep point and one algorithm; one CSV
/// row.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub algo: String,
    pub q: Option<f64>,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub prob_recovery: f64,
    /// Mean iterations among recovered trials; `None` when none recovered.
    pub mean_iters: Option<f64>,
    pub mean_final_error: f64,
    /// Trials that did not recover (including algorithm errors).
    pub failures: usize,
}

/// The full result table of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Mean MSD curve per `(label, m, k)`, padded to a common length with
    /// each trial's final value.
    pub msd_curves: BTreeMap<String, Vec<f64>>,
}

fn algo_config(spec: &AlgorithmSpec, cfg: &ExperimentConfig, k: usize) -> Result<AlgoConfig> {
    let algorithm = match spec.kind.as_str() {
        "htp" => AlgorithmKind::Htp,
        "iht" => AlgorithmKind::Iht,
        "rhtp" => AlgorithmKind::Rhtp(spec.build_regularizer(cfg.n)?),
        other => {
            return Err(RhtpError::Argument(format!(
                "unknown algorithm kind {other:?}"
            )))
        }
    };
    Ok(AlgoConfig {
        mu: spec.mu.unwrap_or(cfg.mu),
        k,
        max_iters: cfg.max_iters,
        stop_rule: StopRule::ErrorBelow(cfg.success_tol),
        algorithm,
        x0: None,
    })
}

/// Runs every algorithm on one freshly generated instance. Algorithm
/// errors are recorded as non-recovered results, never propagated.
pub fn run_trial(
    cfg: &ExperimentConfig,
    m: usize,
    k: usize,
    point: u64,
    trial: u64,
) -> Result<(TrialResult, Vec<Option<String>>)> {
    let seed = trial_seed(cfg.seed, point, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = generate_instance(cfg.n, m, k, cfg.noise_std, &mut rng)?;
    let mut per_algorithm = Vec::with_capacity(cfg.algorithms.len());
    let mut traces = Vec::with_capacity(cfg.algorithms.len());
    for spec in &cfg.algorithms {
        let ac = algo_config(spec, cfg, k)?;
        match run(&inst, &ac) {
            Ok(trace) => {
                let last = trace.final_record();
                let final_error = last.error_norm.expect("x_star is always set");
                let msd_curve = trace
                    .records
                    .iter()
                    .map(|r| {
                        let e = r.error_norm.expect("x_star is always set");
                        e * e
                    })
                    .collect();
                per_algorithm.push(AlgoTrialResult {
                    algo: spec.label(),
                    recovered: final_error < cfg.success_tol,
                    iters: trace.iterations_used,
                    final_error,
                    msd_curve,
                });
                traces.push(if cfg.emit_traces {
                    Some(trace_to_jsonl(&trace, false))
                } else {
                    None
                });
            }
            Err(e) => {
                per_algorithm.push(AlgoTrialResult {
                    algo: spec.label(),
                    recovered: false,
                    iters: cfg.max_iters,
                    final_error: f64::NAN,
                    msd_curve: Vec::new(),
                });
                traces.push(Some(format!("{{\"error\":{:?}}}\n", e.to_string())));
            }
        }
    }
    Ok((TrialResult { trial, per_algorithm }, traces))
}

fn padded_mean_curves(curves: &[&[f64]], len: usize) -> Vec<f64> {
    if curves.is_empty() {
        return Vec::new();
    }
    let mut mean = vec![0.0; len];
    let mut counts = vec![0usize; len];
    for curve in curves {
        if curve.is_empty() {
            continue;
        }
        for i in 0..len {
            let v = *curve.get(i).unwrap_or(curve.last().unwrap());
            mean[i] += v;
            counts[i] += 1;
        }
    }
    for (v, c) in mean.iter_mut().zip(counts) {
        if c > 0 {
            *v /= c as f64;
        }
    }
    mean
}

/// Runs the full sweep: every `(m, k)` point, `num_trials` trials each,
/// all algorithms per trial on a shared instance. Returns the aggregated
/// table; per-trial traces are written immediately when enabled.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    cfg.validate()?;
    let workers = std::env::var("RHTP_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .or(cfg.workers);
    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(w) = workers {
            builder = builder.num_threads(w);
        }
        builder
            .build()
            .map_err(|e| RhtpError::Internal(format!("thread pool: {e}")))?
    };

    let trace_dir = cfg.output_dir.join("traces");
    if cfg.emit_traces {
        std::fs::create_dir_all(&trace_dir)?;
    }

    let mut rows = Vec::new();
    let mut msd_curves = BTreeMap::new();
    let mut points = Vec::new();
    for &m in &cfg.m.values() {
        for &k in &cfg.k.values() {
            points.push((m, k));
        }
    }
    for (point_idx, &(m, k)) in points.iter().enumerate() {
        let trials: Vec<(TrialResult, Vec<Option<String>>)> = pool.install(|| {
            (0..cfg.num_trials as u64)
                .into_par_iter()
                .map(|t| run_trial(cfg, m, k, point_idx as u64, t))
                .collect::<Result<Vec<_>>>()
        })?;
        if cfg.emit_traces {
            for (result, traces) in &trials {
                for (spec, text) in cfg.algorithms.iter().zip(traces) {
                    if let Some(text) = text {
                        let name = format!(
                            "trace_m{m}_K{k}_t{}_{}.jsonl",
                            result.trial,
                            spec.label()
                        );
                        std::fs::write(trace_dir.join(name), text)?;
                    }
                }
            }
        }
        for (a_idx, spec) in cfg.algorithms.iter().enumerate() {
            let outcomes: Vec<&AlgoTrialResult> = trials
                .iter()
                .map(|(tr, _)| &tr.per_algorithm[a_idx])
                .collect();
            let recovered: Vec<&&AlgoTrialResult> =
                outcomes.iter().filter(|o| o.recovered).collect();
            let prob_recovery = recovered.len() as f64 / outcomes.len() as f64;
            let mean_iters = if recovered.is_empty() {
                None
            } else {
                Some(
                    recovered.iter().map(|o| o.iters as f64).sum::<f64>()
                        / recovered.len() as f64,
                )
            };
            let finite: Vec<f64> = outcomes
                .iter()
                .filter(|o| o.final_error.is_finite())
                .map(|o| o.final_error)
                .collect();
            let mean_final_error = if finite.is_empty() {
                f64::NAN
            } else {
                finite.iter().sum::<f64>() / finite.len() as f64
            };
            let curves: Vec<&[f64]> = outcomes.iter().map(|o| o.msd_curve.as_slice()).collect();
            let msd = padded_mean_curves(&curves, cfg.max_iters + 1);
            msd_curves.insert(format!("{}_m{m}_K{k}", spec.label()), msd);
            rows.push(SweepRow {
                algo: spec.kind.clone(),
                q: spec.q.filter(|_| spec.kind == "rhtp"),
                k,
                m,
                n: cfg.n,
                trials: outcomes.len(),
                prob_recovery,
                mean_iters,
                mean_final_error,
                failures: outcomes.len() - recovered.len(),
            });
        }
    }
    Ok(SweepTable { rows, msd_curves })
}

/// Renders the fixed-schema CSV:
/// `algo,q,K,m,n,trials,prob_recovery,mean_iters,mean_final_error`.
pub fn table_to_csv(table: &SweepTable) -> String {
    let mut out = String::from("algo,q,K,m,n,trials,prob_recovery,mean_iters,mean_final_error\n");
    for row in &table.rows {
        let q = row.q.map(|q| q.to_string()).unwrap_or_default();
        let mi = row.mean_iters.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.algo, q, row.k, row.m, row.n, row.trials, row.prob_recovery, mi,
            row.mean_final_error
        );
    }
    out
}

#[derive(Serialize)]
struct ResultsDocument<'a> {
    config: &'a ExperimentConfig,
    rows: &'a [SweepRow],
    msd_curves: &'a BTreeMap<String, Vec<f64>>,
}

/// Writes `results.csv`, `results.json`, and the per-curve two-column
/// `.dat` files into the configured output directory.
pub fn write_outputs(cfg: &ExperimentConfig, table: &SweepTable) -> Result<()> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    std::fs::write(cfg.output_dir.join("results.csv"), table_to_csv(table))?;
    let doc = ResultsDocument {
        config: cfg,
        rows: &table.rows,
        msd_curves: &table.msd_curves,
    };
    let json = serde_json::to_string_pretty(&doc)
        .map_err(|e| RhtpError::Format(format!("results serialization: {e}")))?;
    std::fs::write(cfg.output_dir.join("results.json"), json)?;
    write_dat_files(&cfg.output_dir, table)?;
    Ok(())
}

/// Emits plot-ready curves: recovery probability and mean iterations as
/// functions of K (one file per algorithm and m), and each mean MSD curve
/// against the iteration index.
pub fn write_dat_files(dir: &Path, table: &SweepTable) -> Result<()> {
    let mut by_curve: BTreeMap<(String, usize), Vec<&SweepRow>> = BTreeMap::new();
    for row in &table.rows {
        let label = match row.q {
            Some(q) => format!("{}_q{q}", row.algo),
            None => row.algo.clone(),
        };
        by_curve.entry((label, row.m)).or_default().push(row);
    }
    for ((label, m), mut rows) in by_curve {
        rows.sort_by_key(|r| r.k);
        let mut prob = String::new();
        let mut iters = String::new();
        for row in rows {
            let _ = writeln!(prob, "{} {}", row.k, row.prob_recovery);
            if let Some(mi) = row.mean_iters {
                let _ = writeln!(iters, "{} {}", row.k, mi);
            }
        }
        std::fs::write(dir.join(format!("prob_{label}_m{m}.dat")), prob)?;
        std::fs::write(dir.join(format!("iters_{label}_m{m}.dat")), iters)?;
    }
    for (name, curve) in &table.msd_curves {
        let mut text = String::new();
        for (i, v) in curve.iter().enumerate() {
            let _ = writeln!(text, "{i} {v}");
        }
        std::fs::write(dir.join(format!("msd_{name}.dat")), text)?;
    }
    Ok(())
}
