//! Runnable convergence diagnostics for the solver.
//!
//! Everything here is a pure function over completed traces and problem
//! data: the conjugate z-domain dynamics and its agreement check, the
//! descent monitor for the transformed objective, the contraction-constant
//! calculator and per-iteration contraction checker, closed-form iterate
//! bounds, the inner-product/norm inequality pair for the displacement map
//! `d(u, v)`, iteration-count predictors, and the Wielandt, projection and
//! correlation bound checkers.
//!
//! Checkers never assert: hypothesis failures are reported as precondition
//! errors, inequality failures as violation data. Isometry constants are
//! carried with an exact/lower-bound flag so that a caller can distinguish
//! verified claims (tiny instances, exact constants) from estimates.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algo::IterationTrace;
use crate::error::{Result, RhtpError};
use crate::regularizer::{PsiMap, Regularizer, ValidityReport, PSI_INV_TOL};
use crate::sensing::{
    estimate_ric, hard_threshold, nonincreasing_arrangement, projection_onto_span,
    restricted_least_squares, ProblemInstance, RicMode, SupportSet,
};

/// Relative slack applied when checking analytic inequalities against
/// floating-point arithmetic.
pub const INEQUALITY_SLACK: f64 = 1e-10;

/// Relative tolerance for the Wielandt inequality check.
pub const WIELANDT_TOL: f64 = 1e-12;

/// A restricted-isometry constant together with its provenance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DeltaEstimate {
    pub value: f64,
    /// True when the constant came from exhaustive support enumeration;
    /// false for sampled lower bounds or declared estimates.
    pub exact: bool,
}

/// Isometry constants indexed by order, with exact/estimate provenance.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DeltaSource {
    pub by_order: BTreeMap<usize, DeltaEstimate>,
}

impl DeltaSource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, order: usize, value: f64, exact: bool) {
        self.by_order.insert(order, DeltaEstimate { value, exact });
    }

    /// Computes exact constants for the given orders by enumeration.
    pub fn exact_from_matrix(phi: &DMatrix<f64>, orders: &[usize]) -> Result<Self> {
        let mut src = Self::new();
        for &s in orders {
            let est = estimate_ric(phi, s, RicMode::Exact)?;
            src.declare(s, est.delta, true);
        }
        Ok(src)
    }

    pub fn get(&self, order: usize) -> Result<DeltaEstimate> {
        self.by_order.get(&order).copied().ok_or_else(|| {
            RhtpError::Argument(format!("no isometry constant of order {order} available"))
        })
    }

    pub fn all_exact(&self) -> bool {
        self.by_order.values().all(|d| d.exact)
    }
}

/// The derived constants of the convergence analysis, plus the admissible
/// step-size window.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisConstants {
    pub delta: BTreeMap<usize, DeltaEstimate>,
    pub l: f64,
    pub big_l: f64,
    pub mu: f64,
    pub k: usize,
    /// `mu'_s = 1 - mu (1 - delta_s) / (1 - l)` per available order.
    pub mu_prime: BTreeMap<usize, f64>,
    /// `tau_s = sqrt(2) mu sqrt(1+delta_s)/sqrt(1-(mu'_s)^2)
    ///          + sqrt(1+delta_s)/(1-delta_s)` per available order.
    pub tau: BTreeMap<usize, f64>,
    /// `rho_3K = sqrt(2) mu'_3K / sqrt(1 - (mu'_2K)^2)`.
    pub rho_3k: f64,
    /// True when `mu'_3K < 1/sqrt(3)`, which guarantees `rho_3K < 1`.
    pub rho_3k_valid: bool,
    pub kappa_3k: f64,
    /// Admissible step-size window `(lo, hi)`:
    /// `lo = (1 - 1/sqrt(3))(1 - l)/(1 - delta_3K)`,
    /// `hi = (1 - L)^2 / ((1 - l)(1 + delta_2K))`.
    pub mu_window_lo: f64,
    pub mu_window_hi: f64,
    pub mu_window_empty: bool,
}

impl AnalysisConstants {
    pub fn delta_value(&self, order: usize) -> Result<f64> {
        self.delta
            .get(&order)
            .map(|d| d.value)
            .ok_or_else(|| RhtpError::Argument(format!("missing isometry order {order}")))
    }

    pub fn mu_prime_value(&self, order: usize) -> Result<f64> {
        self.mu_prime
            .get(&order)
            .copied()
            .ok_or_else(|| RhtpError::Argument(format!("missing mu' order {order}")))
    }

    pub fn tau_value(&self, order: usize) -> Result<f64> {
        self.tau
            .get(&order)
            .copied()
            .ok_or_else(|| RhtpError::Argument(format!("missing tau order {order}")))
    }

    /// The sufficient descent condition `mu (1 + delta_2K) < (1-L)^2/(1-l)`.
    pub fn descent_condition_holds(&self) -> Result<bool> {
        let d2k = self.delta_value(2 * self.k)?;
        Ok(self.mu * (1.0 + d2k) < (1.0 - self.big_l).powi(2) / (1.0 - self.l))
    }
}

fn check_delta_valid(order: usize, value: f64) -> Result<()> {
    if !(0.0..1.0).contains(&value) {
        return Err(RhtpError::Argument(format!(
            "isometry constant of order {order} must lie in [0, 1), got {value}"
        )));
    }
    Ok(())
}

/// Fills [`AnalysisConstants`] from isometry constants, the curvature
/// weights `l`, `L`, a step size, and the sparsity target.
///
/// Orders `K`, `2K`, and `3K` must be present in `delta`; additional
/// orders (`2`, `2K+1`, ...) are carried through when available.
pub fn compute_constants(
    delta: &DeltaSource,
    validity: &ValidityReport,
    mu: f64,
    k: usize,
) -> Result<AnalysisConstants> {
    if !(mu > 0.0) {
        return Err(RhtpError::Argument(format!("mu must be > 0, got {mu}")));
    }
    if k == 0 {
        return Err(RhtpError::Argument("sparsity target must be positive".into()));
    }
    let l = validity.l_bound;
    let big_l = validity.big_l_bound;
    for (&order, est) in &delta.by_order {
        check_delta_valid(order, est.value)?;
    }
    for order in [k, 2 * k, 3 * k] {
        delta.get(order)?;
    }

    let mu_prime_of = |d: f64| 1.0 - mu * (1.0 - d) / (1.0 - l);
    let mut mu_prime = BTreeMap::new();
    let mut tau = BTreeMap::new();
    for (&order, est) in &delta.by_order {
        let mp = mu_prime_of(est.value);
        mu_prime.insert(order, mp);
        let denom_sq = 1.0 - mp * mp;
        let t = if denom_sq > 0.0 {
            (2.0f64).sqrt() * mu * (1.0 + est.value).sqrt() / denom_sq.sqrt()
                + (1.0 + est.value).sqrt() / (1.0 - est.value)
        } else {
            f64::INFINITY
        };
        tau.insert(order, t);
    }

    let mp2k = mu_prime[&(2 * k)];
    let mp3k = mu_prime[&(3 * k)];
    let rho_denom_sq = 1.0 - mp2k * mp2k;
    let rho_3k = if rho_denom_sq > 0.0 {
        (2.0f64).sqrt() * mp3k / rho_denom_sq.sqrt()
    } else {
        f64::INFINITY
    };
    let rho_3k_valid = mp3k < 1.0 / (3.0f64).sqrt() && rho_denom_sq > 0.0;

    let d3k = delta.get(3 * k)?.value;
    let tau_3k = tau[&(3 * k)];
    let kappa_3k = if rho_3k < 1.0 && rho_3k >= 0.0 {
        (2.0 * (1.0 + d3k)).sqrt() * (mp3k + 1.0 - d3k) / (1.0 - d3k)
            + (2.0f64).sqrt() * mp3k * tau_3k / (1.0 - rho_3k)
    } else {
        f64::INFINITY
    };

    let d2k = delta.get(2 * k)?.value;
    let mu_window_lo = (1.0 - 1.0 / (3.0f64).sqrt()) * (1.0 - l) / (1.0 - d3k);
    let mu_window_hi = (1.0 - big_l).powi(2) / ((1.0 - l) * (1.0 + d2k));
    let mu_window_empty = mu_window_lo >= mu_window_hi;

    Ok(AnalysisConstants {
        delta: delta.by_order.clone(),
        l,
        big_l,
        mu,
        k,
        mu_prime,
        tau,
        rho_3k,
        rho_3k_valid,
        kappa_3k,
        mu_window_lo,
        mu_window_hi,
        mu_window_empty,
    })
}

/// The x-domain trace mapped into the z-domain, side by side with the
/// independently simulated z-domain dynamics.
#[derive(Debug, Clone)]
pub struct ConjugateTrace {
    /// `z^k = Psi(x^k)` for every recorded iterate.
    pub z: Vec<DVector<f64>>,
    /// The z-domain dynamics simulated from `z^0 = Psi(x^0)`.
    pub z_sim: Vec<DVector<f64>>,
    /// `max_k ||z^k - z_sim^k||_inf`.
    pub max_deviation: f64,
}

/// Maps a trace through `Psi` and independently re-runs the conjugate
/// dynamics: threshold `z - mu M(z) grad w(z)` (which equals
/// `z + mu Phi^t (y - Phi Psi^{-1}(z))`), then minimize the transformed
/// objective on the selected support via x-domain least squares, and map
/// the minimizer back through `Psi`.
pub fn conjugate_trace(
    trace: &IterationTrace,
    map: &PsiMap<'_>,
    inst: &ProblemInstance,
    mu: f64,
    k: usize,
) -> Result<ConjugateTrace> {
    let z: Vec<DVector<f64>> = trace
        .records
        .iter()
        .map(|rec| map.apply(&rec.x.values))
        .collect();
    let mut z_sim = Vec::with_capacity(z.len());
    if let Some(first) = z.first() {
        z_sim.push(first.clone());
    }
    for _ in 1..z.len() {
        let cur = z_sim.last().expect("seeded above");
        let x = map.apply_inverse(cur, PSI_INV_TOL)?;
        let arg = cur + mu * (inst.phi.transpose() * inst.residual(&x));
        let thresholded = hard_threshold(&arg, k)?;
        let support = SupportSet::of_nonzeros(&thresholded.values);
        let minimizer = restricted_least_squares(inst, &support)?;
        z_sim.push(map.apply(&minimizer.values));
    }
    let max_deviation = z
        .iter()
        .zip(&z_sim)
        .map(|(a, b)| (a - b).amax())
        .fold(0.0f64, f64::max);
    Ok(ConjugateTrace {
        z,
        z_sim,
        max_deviation,
    })
}

/// Transformed-objective sequence with monotonicity violations.
#[derive(Debug, Clone, Serialize)]
pub struct DescentReport {
    /// `w(z^k) = f(Psi^{-1}(z^k))` per recorded iterate.
    pub w: Vec<f64>,
    /// Indices `k` where `w(z^{k+1}) > w(z^k) + 1e-12 w(z^0)`.
    pub violations: Vec<usize>,
    /// Whether the sufficient descent condition held; `None` when no
    /// constants were supplied.
    pub condition_held: Option<bool>,
}

/// Evaluates the transformed objective along a trace and reports every
/// increase beyond `1e-12 * w(z^0)`.
pub fn descent_monitor(
    trace: &IterationTrace,
    inst: &ProblemInstance,
    map: &PsiMap<'_>,
    constants: Option<&AnalysisConstants>,
) -> Result<DescentReport> {
    let mut w = Vec::with_capacity(trace.records.len());
    for rec in &trace.records {
        let z = map.apply(&rec.x.values);
        let x_back = map.apply_inverse(&z, PSI_INV_TOL)?;
        let r = inst.residual(&x_back);
        w.push(0.5 * r.norm_squared());
    }
    let tol = w.first().copied().unwrap_or(0.0) * 1e-12;
    let violations = w
        .windows(2)
        .enumerate()
        .filter(|(_, pair)| pair[1] > pair[0] + tol)
        .map(|(k, _)| k)
        .collect();
    let condition_held = match constants {
        Some(c) => Some(c.descent_condition_holds()?),
        None => None,
    };
    Ok(DescentReport {
        w,
        violations,
        condition_held,
    })
}

/// Per-iteration contraction check against
/// `||z^{k+1} - z*|| <= rho_3K ||z^k - z*|| + tau_2K ||e||`.
#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    /// Empirical `||z^{k+1} - z*|| / ||z^k - z*||` per step (NaN when the
    /// denominator vanishes).
    pub ratios: Vec<f64>,
    pub worst_ratio: f64,
    /// Step indices `k` where the inequality failed beyond relative slack.
    pub violations: Vec<usize>,
    pub rho_3k: f64,
    pub tau_2k: f64,
}

pub fn contraction_check(
    trace: &IterationTrace,
    map: &PsiMap<'_>,
    z_star: &DVector<f64>,
    e_norm: f64,
    constants: &AnalysisConstants,
) -> Result<ContractionReport> {
    let rho_3k = constants.rho_3k;
    let tau_2k = constants.tau_value(2 * constants.k)?;
    let dist: Vec<f64> = trace
        .records
        .iter()
        .map(|rec| (map.apply(&rec.x.values) - z_star).norm())
        .collect();
    let mut ratios = Vec::new();
    let mut violations = Vec::new();
    let mut worst_ratio = 0.0f64;
    // Absolute floor absorbing terminal rounding once the iterates sit at
    // machine precision from the fixed point.
    let floor = 1e-12 * dist.first().copied().unwrap_or(0.0).max(z_star.norm());
    for k in 0..dist.len().saturating_sub(1) {
        let lhs = dist[k + 1];
        let rhs = rho_3k * dist[k] + tau_2k * e_norm;
        if lhs > rhs * (1.0 + INEQUALITY_SLACK) + floor {
            violations.push(k);
        }
        let ratio = if dist[k] > 0.0 {
            let r = lhs / dist[k];
            worst_ratio = worst_ratio.max(r);
            r
        } else {
            f64::NAN
        };
        ratios.push(ratio);
    }
    Ok(ContractionReport {
        ratios,
        worst_ratio,
        violations,
        rho_3k,
        tau_2k,
    })
}

/// Closed-form per-iteration magnitude bounds with their violation report.
///
/// Indexing follows the trace: entry `j` of each per-iteration vector
/// refers to the iterate recorded at position `j` (`j = 0` is the initial
/// point and carries placeholder bounds; checks start at `j = 1`).
#[derive(Debug, Clone, Serialize)]
pub struct IterateBounds {
    /// `B = ||y|| / sqrt(1 - delta_K)`.
    pub b: f64,
    /// Per-iteration bound on `|x_i^j|` over the active support.
    pub b_k: Vec<f64>,
    /// `C_{j,i} = max over [-B_j, B_j] of (1 - gamma_i g_i'')`.
    pub c_ki: Vec<Vec<f64>>,
    /// `D = mu max_i ||phi_i|| ||y||`.
    pub d: f64,
    pub d_k: Vec<f64>,
    /// `E_{j,i}` bounds `|x_hat_i^j|`; `E_{j,i} = max(B_{j-1} C_{j-1,i}, D_j)`.
    pub e_ki: Vec<Vec<f64>>,
    /// Global per-coordinate bound `E_i = max(B C_i, D)`.
    pub e_i: Vec<f64>,
    /// Curvature factors for the descent argument, per transition.
    pub f_k: Vec<f64>,
    pub g_k: Vec<f64>,
    pub violations: Vec<String>,
}

/// Computes the magnitude bounds along a trace and checks every iterate
/// coordinate against them.
pub fn iterate_bounds_check(
    trace: &IterationTrace,
    inst: &ProblemInstance,
    reg: &Regularizer,
    map: &PsiMap<'_>,
    delta: &DeltaSource,
    mu: f64,
) -> Result<IterateBounds> {
    let k = inst.k;
    let d_k_order = delta.get(k)?.value;
    let d_2k = delta.get(2 * k)?.value;
    let d_2k1 = delta.get(2 * k + 1)?.value;
    if d_k_order >= 1.0 || d_2k1 >= 1.0 {
        return Err(RhtpError::Precondition(
            "isometry constants must be < 1 for the iterate bounds".into(),
        ));
    }
    let y_norm = inst.y.norm();
    let b = y_norm / (1.0 - d_k_order).sqrt();
    let max_col = (0..inst.n)
        .map(|i| inst.phi.column(i).norm())
        .fold(0.0f64, f64::max);
    let d = mu * max_col * y_norm;
    let noiseless = inst.e.as_ref().map_or(true, |e| e.norm() == 0.0);
    let true_support = inst
        .x_star
        .as_ref()
        .map(SupportSet::of_nonzeros)
        .unwrap_or_else(SupportSet::empty);

    let n_rec = trace.records.len();
    let slack = |bound: f64| bound * (1.0 + 1e-9) + 1e-12;
    let mut b_k = vec![b; n_rec];
    let mut d_vec = vec![d; n_rec];
    let mut c_ki = vec![vec![1.0; inst.n]; n_rec];
    let mut e_ki = vec![vec![0.0; inst.n]; n_rec];
    let mut f_k = vec![1.0; n_rec];
    let mut g_k = vec![1.0; n_rec];
    let mut violations = Vec::new();

    for (j, rec) in trace.records.iter().enumerate() {
        let disjoint = noiseless
            && inst.x_star.is_some()
            && rec.support().is_disjoint(&true_support);
        b_k[j] = if disjoint { d_2k * b } else { b };
        d_vec[j] = if disjoint { d_2k1 * d } else { d };
        for i in 0..inst.n {
            let (g2_min, _) = reg.weighted_g2_extrema(i, -b_k[j], b_k[j]);
            c_ki[j][i] = 1.0 - g2_min;
        }
    }

    let mut e_i = vec![0.0; inst.n];
    for i in 0..inst.n {
        let (g2_min, _) = reg.weighted_g2_extrema(i, -b, b);
        e_i[i] = (b * (1.0 - g2_min)).max(d);
    }

    for (j, rec) in trace.records.iter().enumerate() {
        if j == 0 {
            continue;
        }
        let z = map.apply(&rec.x.values);
        for i in rec.support().iter() {
            let xv = rec.x.values[i].abs();
            if xv > slack(b_k[j]) {
                violations.push(format!("iterate {j}: |x_{i}| = {xv} > {}", b_k[j]));
            }
            let zv = z[i].abs();
            let z_bound = c_ki[j][i] * b_k[j];
            if zv > slack(z_bound) {
                violations.push(format!("iterate {j}: |z_{i}| = {zv} > {z_bound}"));
            }
        }
        if j >= 2 {
            for i in 0..inst.n {
                e_ki[j][i] = (b_k[j - 1] * c_ki[j - 1][i]).max(d_vec[j]);
            }
            for i in 0..inst.n {
                let hv = rec.x_hat[i].abs();
                if hv != 0.0 && hv > slack(e_ki[j][i]) {
                    violations.push(format!(
                        "iterate {j}: |x_hat_{i}| = {hv} > {}",
                        e_ki[j][i]
                    ));
                }
            }
            // Curvature factors over the union of consecutive supports.
            let union = rec.support().union(trace.records[j - 1].support());
            let mut f = f64::NEG_INFINITY;
            let mut g = f64::INFINITY;
            for i in union.iter() {
                let lo = map.psi_inverse(i, -e_ki[j][i], PSI_INV_TOL)?;
                let hi = map.psi_inverse(i, e_ki[j][i], PSI_INV_TOL)?;
                let (g2_min, g2_max) = reg.weighted_g2_extrema(i, lo, hi);
                f = f.max(1.0 / (1.0 - g2_max));
                g = g.min(1.0 / (1.0 - g2_min));
            }
            if f.is_finite() {
                f_k[j] = f;
            }
            if g.is_finite() {
                g_k[j] = g;
            }
        }
    }

    Ok(IterateBounds {
        b,
        b_k,
        c_ki,
        d,
        d_k: d_vec,
        e_ki,
        e_i,
        f_k,
        g_k,
        violations,
    })
}

/// Result of checking the displacement-map inequality pair.
#[derive(Debug, Clone, Serialize)]
pub struct DInequalityReport {
    pub rho_prime: f64,
    pub inner_lhs: f64,
    pub inner_rhs: f64,
    pub inner_ok: bool,
    pub norm_lhs: f64,
    pub norm_rhs: f64,
    pub norm_ok: bool,
}

/// Checks, for `d(u, v) = v - u - rho Phi^t Phi (Psi^{-1}(v) - Psi^{-1}(u))`,
/// the pair of inequalities
/// `<w, d(u, v)> <= rho' ||w|| ||v - u||` and
/// `||d(u, v) restricted to supp(w)|| <= rho' ||v - u||`,
/// where `rho' = 1 - rho (1 - delta_T) / (1 - l)` and `T` is the union of
/// the three supports.
///
/// Preconditions (errors when violated): `rho > 0`;
/// `|u_i|, |v_i| <= e_bound` on their supports;
/// `rho (1 + delta_T) < (1 - L)^2 / (1 - l)`; and `rho'` must land in
/// `(0, 1)`.
pub fn d_inequality_check(
    u: &DVector<f64>,
    v: &DVector<f64>,
    w: &DVector<f64>,
    rho: f64,
    inst: &ProblemInstance,
    map: &PsiMap<'_>,
    validity: &ValidityReport,
    delta_t: f64,
    e_bound: f64,
) -> Result<DInequalityReport> {
    if !(rho > 0.0) {
        return Err(RhtpError::Argument(format!("rho must be > 0, got {rho}")));
    }
    check_delta_valid(0, delta_t).map_err(|_| {
        RhtpError::Precondition(format!("delta_T must lie in [0, 1), got {delta_t}"))
    })?;
    let l = validity.l_bound;
    let big_l = validity.big_l_bound;
    for x in u.iter().chain(v.iter()) {
        if x.abs() > e_bound * (1.0 + 1e-12) {
            return Err(RhtpError::Precondition(format!(
                "coordinate magnitude {} exceeds the bound {e_bound}",
                x.abs()
            )));
        }
    }
    if !(rho * (1.0 + delta_t) < (1.0 - big_l).powi(2) / (1.0 - l)) {
        return Err(RhtpError::Precondition(format!(
            "rho (1 + delta_T) = {} does not satisfy the curvature condition",
            rho * (1.0 + delta_t)
        )));
    }
    let rho_prime = 1.0 - rho * (1.0 - delta_t) / (1.0 - l);
    if !(0.0 < rho_prime && rho_prime < 1.0) {
        return Err(RhtpError::Precondition(format!(
            "rho' = {rho_prime} fell outside (0, 1)"
        )));
    }

    let u_inv = map.apply_inverse(u, PSI_INV_TOL)?;
    let v_inv = map.apply_inverse(v, PSI_INV_TOL)?;
    let diff = &v_inv - &u_inv;
    let d_vec = v - u - rho * (inst.phi.transpose() * (&inst.phi * diff));

    let vu_norm = (v - u).norm();
    let inner_lhs = w.dot(&d_vec);
    let inner_rhs = rho_prime * w.norm() * vu_norm;
    let t3 = SupportSet::of_nonzeros(w);
    let norm_lhs = t3
        .iter()
        .map(|i| d_vec[i] * d_vec[i])
        .sum::<f64>()
        .sqrt();
    let norm_rhs = rho_prime * vu_norm;
    let slack = |rhs: f64| rhs * (1.0 + INEQUALITY_SLACK) + 1e-14;
    Ok(DInequalityReport {
        rho_prime,
        inner_lhs,
        inner_rhs,
        inner_ok: inner_lhs <= slack(inner_rhs),
        norm_lhs,
        norm_rhs,
        norm_ok: norm_lhs <= slack(norm_rhs),
    })
}

/// Predicted iteration counts for correct support recovery.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterationPrediction {
    /// Signal-dependent bound; `None` when the noise term dominates the
    /// smallest transformed coefficient or a required constant is missing.
    pub signal_dependent: Option<usize>,
    /// Signal-independent bound `ceil(c K)` with
    /// `c = ln(4 / rho_3K^2) / ln(1 / rho_3K^2)`.
    pub universal: usize,
}

/// Evaluates both iteration-count bounds.
///
/// The signal-dependent bound is
/// `ceil( ln(arg) / ln(1 / rho_3K) )`, clamped to be nonnegative, with
/// `arg = sqrt(2) mu'_3K ||z^0 - z*|| / (|z*_min| - tau_1 ||e||)` and
/// `tau_1 = sqrt(2 (1 + delta_2)) mu + tau_2K / (1 - rho_3K)`.
pub fn predict_iterations(
    constants: &AnalysisConstants,
    z0: &DVector<f64>,
    z_star: &DVector<f64>,
    e_norm: f64,
) -> Result<IterationPrediction> {
    let rho = constants.rho_3k;
    if !(rho < 1.0) {
        return Err(RhtpError::Inapplicable(format!(
            "contraction factor {rho} is not below 1"
        )));
    }
    let k = constants.k;
    let universal_c = if rho <= 0.0 {
        1.0
    } else {
        (4.0 / (rho * rho)).ln() / (1.0 / (rho * rho)).ln()
    };
    let universal = (universal_c * k as f64).ceil() as usize;

    let signal_dependent = (|| -> Option<usize> {
        let delta_2 = constants.delta.get(&2)?.value;
        let tau_2k = constants.tau.get(&(2 * k)).copied()?;
        let mp3k = constants.mu_prime.get(&(3 * k)).copied()?;
        let tau_1 = (2.0 * (1.0 + delta_2)).sqrt() * constants.mu + tau_2k / (1.0 - rho);
        let support = SupportSet::of_nonzeros(z_star);
        if support.is_empty() {
            return None;
        }
        let z_min = support
            .iter()
            .map(|i| z_star[i].abs())
            .fold(f64::INFINITY, f64::min);
        let denom = z_min - tau_1 * e_norm;
        if denom <= 0.0 {
            return None;
        }
        let arg = (2.0f64).sqrt() * mp3k * (z0 - z_star).norm() / denom;
        if arg <= 1.0 {
            return Some(0);
        }
        if rho <= 0.0 {
            return Some(0);
        }
        Some((arg.ln() / (1.0 / rho).ln()).ceil().max(0.0) as usize)
    })();

    Ok(IterationPrediction {
        signal_dependent,
        universal,
    })
}

/// Helper predicate for the universal iteration-count argument: with
/// `r(z*)` the nonincreasing magnitude arrangement of `z*`, checks
/// `r_{p+q}(z*) > rho_3K^{k'} ||r(z*)_{p+1..K}|| + kappa_3K ||e||`
/// (1-based positions, inclusive range).
pub fn support_capture_predicate(
    constants: &AnalysisConstants,
    z_star: &DVector<f64>,
    p: usize,
    q: usize,
    k_prime: usize,
    e_norm: f64,
) -> Result<bool> {
    let k = constants.k;
    if p + q == 0 || p + q > k {
        return Err(RhtpError::Argument(format!(
            "positions p + q = {} must lie in 1..={k}",
            p + q
        )));
    }
    let (r, _) = nonincreasing_arrangement(z_star);
    let lhs = r[p + q - 1];
    let tail: f64 = (p..k).map(|j| r[j] * r[j]).sum::<f64>().sqrt();
    let rhs = constants.rho_3k.powi(k_prime as i32) * tail + constants.kappa_3k * e_norm;
    Ok(lhs > rhs)
}

/// Result of one Wielandt inequality evaluation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WielandtReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// For a symmetric positive-definite `B` and orthogonal `x`, `y`, checks
/// `(x^t B y)^2 <= ((lam_max - lam_min)/(lam_max + lam_min))^2
///                 (x^t B x)(y^t B y)`.
pub fn wielandt_check(
    b: &DMatrix<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<WielandtReport> {
    let asym = (b - b.transpose()).amax();
    if asym > 1e-10 * b.amax().max(1.0) {
        return Err(RhtpError::Precondition(format!(
            "matrix is not symmetric (max asymmetry {asym})"
        )));
    }
    let eig = b.clone().symmetric_eigenvalues();
    let lam_max = eig.max();
    let lam_min = eig.min();
    if lam_min <= 0.0 {
        return Err(RhtpError::Precondition(format!(
            "matrix is not positive definite (min eigenvalue {lam_min})"
        )));
    }
    if x.dot(y).abs() > 1e-10 * x.norm() * y.norm() {
        return Err(RhtpError::Precondition("x and y are not orthogonal".into()));
    }
    let cross = x.dot(&(b * y));
    let lhs = cross * cross;
    let factor = (lam_max - lam_min) / (lam_max + lam_min);
    let rhs = factor * factor * x.dot(&(b * x)) * y.dot(&(b * y));
    Ok(WielandtReport {
        lhs,
        rhs,
        ok: lhs <= rhs * (1.0 + WIELANDT_TOL) + 1e-300,
    })
}

/// Result of a projection or correlation bound evaluation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// For disjoint supports `S`, `Lambda` and `y = phi_Lambda x_Lambda`,
/// checks `||P_S y|| <= delta ||y||` with `delta` of order `|S| + |Lambda|`.
pub fn projection_bound_check(
    phi: &DMatrix<f64>,
    s: &SupportSet,
    lambda: &SupportSet,
    x_lambda: &DVector<f64>,
    delta: f64,
) -> Result<BoundReport> {
    if !s.is_disjoint(lambda) {
        return Err(RhtpError::Precondition(
            "supports must be disjoint for the projection bound".into(),
        ));
    }
    if x_lambda.len() != lambda.len() {
        return Err(RhtpError::Argument(format!(
            "coefficient vector length {} does not match support size {}",
            x_lambda.len(),
            lambda.len()
        )));
    }
    let mut y = DVector::zeros(phi.nrows());
    for (pos, i) in lambda.iter().enumerate() {
        y += phi.column(i) * x_lambda[pos];
    }
    let projected = projection_onto_span(phi, s, &y)?;
    let lhs = projected.norm();
    let rhs = delta * y.norm();
    Ok(BoundReport {
        lhs,
        rhs,
        ok: lhs <= rhs * (1.0 + INEQUALITY_SLACK) + 1e-14,
    })
}

/// For disjoint `S`, `Lambda` and `y = phi_Lambda x_Lambda`, checks
/// `|phi_i^t (I - P_S) y| <= delta ||(I - P_S) phi_i|| ||y||` for every
/// column `i` outside `S` and `Lambda`, with `delta` of order
/// `|S| + |Lambda| + 1`. Returns the worst case over those columns.
pub fn correlation_bound_check(
    phi: &DMatrix<f64>,
    s: &SupportSet,
    lambda: &SupportSet,
    x_lambda: &DVector<f64>,
    delta: f64,
) -> Result<BoundReport> {
    if !s.is_disjoint(lambda) {
        return Err(RhtpError::Precondition(
            "supports must be disjoint for the correlation bound".into(),
        ));
    }
    if x_lambda.len() != lambda.len() {
        return Err(RhtpError::Argument(format!(
            "coefficient vector length {} does not match support size {}",
            x_lambda.len(),
            lambda.len()
        )));
    }
    let mut y = DVector::zeros(phi.nrows());
    for (pos, i) in lambda.iter().enumerate() {
        y += phi.column(i) * x_lambda[pos];
    }
    let y_norm = y.norm();
    let residual = &y - projection_onto_span(phi, s, &y)?;
    let excluded = s.union(lambda);
    let mut worst_lhs = 0.0f64;
    let mut worst_rhs = f64::INFINITY;
    let mut ok = true;
    for i in 0..phi.ncols() {
        if excluded.contains(i) {
            continue;
        }
        let col = DVector::from_column_slice(phi.column(i).as_slice());
        let deflated = &col - projection_onto_span(phi, s, &col)?;
        let lhs = col.dot(&residual).abs();
        let rhs = delta * deflated.norm() * y_norm;
        if lhs > rhs * (1.0 + INEQUALITY_SLACK) + 1e-14 {
            ok = false;
        }
        if lhs - rhs > worst_lhs - worst_rhs {
            worst_lhs = lhs;
            worst_rhs = rhs;
        }
    }
    Ok(BoundReport {
        lhs: worst_lhs,
        rhs: worst_rhs,
        ok,
    })
}

/// The per-run analysis document emitted as JSON.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub constants: AnalysisConstants,
    pub condition_flags: BTreeMap<String, bool>,
    pub violations: Vec<String>,
    pub predicted_iters: Option<IterationPrediction>,
    pub observed_iters: usize,
}

impl AnalysisReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| RhtpError::Format(format!("report serialization failed: {e}")))
    }
}
