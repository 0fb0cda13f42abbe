//! Decomposable regularizers `J(x) = sum_j gamma_j g_j(x_j)` and the
//! coordinate maps they induce.
//!
//! The smooth-power family is `g(x) = (x^2 + eps^2)^(q/2)` with
//! derivatives
//! `g'(x)  = q x (x^2+eps^2)^(q/2-1)` and
//! `g''(x) = q (x^2+eps^2)^(q/2-2) ((q-1) x^2 + eps^2)`.
//! Validity requires `gamma_j * sup g'' < 1`, which makes every
//! `psi_j(x) = x - gamma_j g_j'(x)` a strictly increasing homeomorphism
//! of the real line.
//!
//! Extremizing `g''` over an interval needs only the closed-form
//! critical points: `g'''(x) = q(q-2) x (x^2+eps^2)^(q/2-3) ((q-1)x^2 + 3 eps^2)`
//! vanishes at `x = 0` and, when `q < 1`, at `x = +-eps sqrt(3/(1-q))`.

use nalgebra::DVector;

use crate::error::{Result, RhtpError};
use crate::sensing::SupportSet;

/// Default root-finder tolerance for `psi^{-1}`.
pub const PSI_INV_TOL: f64 = 1e-12;

/// Strictness margin on the validity condition `gamma * sup g'' < 1`.
const VALIDITY_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum RegKind {
    /// `J = 0`; the induced map is the identity and RHTP degenerates to HTP.
    Zero,
    SmoothPower { q: f64, eps: f64 },
}

/// A per-coordinate decomposable regularizer with weights `gamma_j >= 0`.
/// Immutable after construction; the constructor enforces the validity
/// conditions eagerly so downstream code may assume a homeomorphism.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Regularizer {
    kind: RegKind,
    gamma: Vec<f64>,
}

impl Regularizer {
    pub fn zero(n: usize) -> Self {
        Regularizer {
            kind: RegKind::Zero,
            gamma: vec![0.0; n],
        }
    }

    pub fn smooth_power(q: f64, eps: f64, gamma: Vec<f64>) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(RhtpError::InvalidRegularizer(format!("q must be > 0, got {q}")));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(RhtpError::InvalidRegularizer(format!(
                "eps must be > 0, got {eps}"
            )));
        }
        if gamma.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
            return Err(RhtpError::InvalidRegularizer(
                "all gamma_j must be finite and >= 0".into(),
            ));
        }
        let gamma_max = gamma.iter().cloned().fold(0.0f64, f64::max);
        if gamma_max > 0.0 {
            if q > 2.0 {
                return Err(RhtpError::InvalidRegularizer(format!(
                    "g'' is unbounded for q = {q} > 2, so gamma * g'' < 1 cannot hold"
                )));
            }
            // analytic supremum: for q <= 2, g'' peaks at x = 0
            let sup_g2 = q * eps.powf(q - 2.0);
            if gamma_max * sup_g2 >= 1.0 - VALIDITY_MARGIN {
                return Err(RhtpError::InvalidRegularizer(format!(
                    "gamma * sup g'' = {:.6} >= 1; parameters rejected",
                    gamma_max * sup_g2
                )));
            }
            // grid spot-check on top of the analytic candidates
            let kind = RegKind::SmoothPower { q, eps };
            let mut probes: Vec<f64> = (-50..=50).map(|k| k as f64 * 0.2 * eps).collect();
            probes.push(0.0);
            if q < 1.0 {
                let xc = eps * (3.0 / (1.0 - q)).sqrt();
                probes.push(xc);
                probes.push(-xc);
            }
            for x in probes {
                if gamma_max * g2_raw(&kind, x) >= 1.0 {
                    return Err(RhtpError::InvalidRegularizer(format!(
                        "gamma * g''({x}) >= 1"
                    )));
                }
            }
        }
        Ok(Regularizer {
            kind: RegKind::SmoothPower { q, eps },
            gamma,
        })
    }

    /// Shared-weight constructor matching the experiment protocol, where
    /// `gamma_j = gamma` for all coordinates.
    pub fn uniform_smooth_power(q: f64, eps: f64, gamma: f64, n: usize) -> Result<Self> {
        Regularizer::smooth_power(q, eps, vec![gamma; n])
    }

    pub fn kind(&self) -> RegKind {
        self.kind
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, RegKind::Zero) || self.gamma.iter().all(|&g| g == 0.0)
    }

    pub fn n(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma(&self, j: usize) -> f64 {
        match self.kind {
            RegKind::Zero => 0.0,
            RegKind::SmoothPower { .. } => self.gamma[j],
        }
    }

    pub fn g_value(&self, j: usize, x: f64) -> f64 {
        let _ = j;
        match self.kind {
            RegKind::Zero => 0.0,
            RegKind::SmoothPower { q, eps } => (x * x + eps * eps).powf(q / 2.0),
        }
    }

    pub fn g_prime(&self, j: usize, x: f64) -> f64 {
        let _ = j;
        match self.kind {
            RegKind::Zero => 0.0,
            RegKind::SmoothPower { q, eps } => {
                if x == 0.0 {
                    0.0
                } else {
                    q * x * (x * x + eps * eps).powf(q / 2.0 - 1.0)
                }
            }
        }
    }

    pub fn g_prime2(&self, j: usize, x: f64) -> f64 {
        let _ = j;
        g2_raw(&self.kind, x)
    }

    /// Gradient of `J` scaled by the weights: `(Gamma grad J)(x)_j = gamma_j g_j'(x_j)`.
    pub fn weighted_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(x.len(), |j, _| self.gamma(j) * self.g_prime(j, x[j]))
    }

    /// Extremes of `gamma_j g_j''` over `[lo, hi]` from the closed-form
    /// critical points plus the interval endpoints.
    pub fn weighted_g2_extrema(&self, j: usize, lo: f64, hi: f64) -> (f64, f64) {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        let gamma = self.gamma(j);
        match self.kind {
            RegKind::Zero => (0.0, 0.0),
            RegKind::SmoothPower { q, eps } => {
                let mut candidates = vec![lo, hi];
                if lo < 0.0 && hi > 0.0 {
                    candidates.push(0.0);
                }
                if q < 1.0 {
                    let xc = eps * (3.0 / (1.0 - q)).sqrt();
                    if lo < xc && xc < hi {
                        candidates.push(xc);
                    }
                    if lo < -xc && -xc < hi {
                        candidates.push(-xc);
                    }
                }
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                for x in candidates {
                    let v = gamma * g2_raw(&self.kind, x);
                    min = min.min(v);
                    max = max.max(v);
                }
                (min, max)
            }
        }
    }
}

fn g2_raw(kind: &RegKind, x: f64) -> f64 {
    match *kind {
        RegKind::Zero => 0.0,
        RegKind::SmoothPower { q, eps } => {
            let u = x * x + eps * eps;
            q * u.powf(q / 2.0 - 2.0) * ((q - 1.0) * x * x + eps * eps)
        }
    }
}

/// Validity report with the extremal curvature weights over per-coordinate
/// intervals, as used by the descent condition `mu (1+delta_2K) < (1-L)^2 / (1-l)`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ValidityReport {
    pub l_bound: f64,
    pub big_l_bound: f64,
    pub is_valid: bool,
}

/// Computes `l = min_i min_u gamma_i g_i''(u)` and
/// `L = max_i max_u gamma_i g_i''(u)` over the given per-coordinate
/// intervals, by closed-form critical-point analysis. Errors when `L >= 1`.
pub fn validate(reg: &Regularizer, intervals: &[(f64, f64)]) -> Result<ValidityReport> {
    if intervals.len() != reg.n() {
        return Err(RhtpError::Argument(format!(
            "expected {} intervals, got {}",
            reg.n(),
            intervals.len()
        )));
    }
    let mut l = f64::INFINITY;
    let mut big_l = f64::NEG_INFINITY;
    for (j, &(lo, hi)) in intervals.iter().enumerate() {
        let (mn, mx) = reg.weighted_g2_extrema(j, lo, hi);
        l = l.min(mn);
        big_l = big_l.max(mx);
    }
    if intervals.is_empty() {
        l = 0.0;
        big_l = 0.0;
    }
    if big_l >= 1.0 {
        return Err(RhtpError::InvalidRegularizer(format!(
            "L = {big_l} >= 1 on the supplied intervals"
        )));
    }
    Ok(ValidityReport {
        l_bound: l,
        big_l_bound: big_l,
        is_valid: big_l < 1.0,
    })
}

/// The coordinatewise homeomorphism `Psi` induced by a valid regularizer,
/// together with its inverse and diagonal Jacobian.
#[derive(Debug, Clone, Copy)]
pub struct PsiMap<'a> {
    reg: &'a Regularizer,
}

impl<'a> PsiMap<'a> {
    /// Wraps a regularizer; strict monotonicity of every `psi_j` is
    /// spot-checked on a grid.
    pub fn new(reg: &'a Regularizer) -> Result<Self> {
        let map = PsiMap { reg };
        if !reg.is_zero() {
            for j in [0, reg.n().saturating_sub(1)] {
                let mut prev = map.psi(j, -10.0);
                for k in -49..=50 {
                    let x = k as f64 * 0.2;
                    let cur = map.psi(j, x);
                    if cur <= prev {
                        return Err(RhtpError::InvalidRegularizer(format!(
                            "psi_{j} not strictly increasing near x = {x}"
                        )));
                    }
                    prev = cur;
                }
            }
        }
        Ok(map)
    }

    pub fn regularizer(&self) -> &Regularizer {
        self.reg
    }

    /// `psi_j(x) = x - gamma_j g_j'(x)`.
    pub fn psi(&self, j: usize, x: f64) -> f64 {
        x - self.reg.gamma(j) * self.reg.g_prime(j, x)
    }

    /// `psi_j'(x) = 1 - gamma_j g_j''(x)`; strictly positive by validity.
    pub fn psi_prime(&self, j: usize, x: f64) -> f64 {
        1.0 - self.reg.gamma(j) * self.reg.g_prime2(j, x)
    }

    /// Coordinatewise `Psi`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(v.len(), |j, _| self.psi(j, v[j]))
    }

    /// Solves `psi_j(x) = y` by bracket expansion followed by safeguarded
    /// Newton/bisection; strict monotonicity guarantees a unique root.
    /// `tol` is relative to `max(1, |y|)`, since the residual cannot be
    /// resolved below the rounding error of `psi` itself.
    pub fn psi_inverse(&self, j: usize, y: f64, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(RhtpError::Argument(format!("tol must be > 0, got {tol}")));
        }
        let tol = tol * y.abs().max(1.0);
        if self.reg.gamma(j) == 0.0 {
            return Ok(y);
        }
        // expand [y - c, y + c] until it brackets the root
        let mut c = 1.0 + self.reg.gamma(j);
        let mut lo = y - c;
        let mut hi = y + c;
        let mut doublings = 0;
        while self.psi(j, lo) > y || self.psi(j, hi) < y {
            c *= 2.0;
            lo = y - c;
            hi = y + c;
            doublings += 1;
            if doublings > 200 {
                return Err(RhtpError::Internal(format!(
                    "psi_inverse bracket failure for coordinate {j}, y = {y}"
                )));
            }
        }
        let mut x = y; // psi is close to the identity away from the origin
        for _ in 0..200 {
            let fx = self.psi(j, x) - y;
            if fx.abs() <= tol {
                return Ok(x);
            }
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let dfx = self.psi_prime(j, x);
            let newton = x - fx / dfx;
            x = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        let fx = self.psi(j, x) - y;
        if fx.abs() <= tol {
            Ok(x)
        } else {
            Err(RhtpError::Internal(format!(
                "psi_inverse failed to converge for coordinate {j}, y = {y}"
            )))
        }
    }

    /// Coordinatewise `Psi^{-1}`.
    pub fn apply_inverse(&self, v: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(v.len());
        for j in 0..v.len() {
            out[j] = self.psi_inverse(j, v[j], tol)?;
        }
        Ok(out)
    }

    /// Diagonal of `M(z) = diag(psi_i'(psi_i^{-1}(z_i)))` over a support;
    /// entries are strictly positive by validity.
    pub fn m_diagonal(&self, z: &DVector<f64>, support: &SupportSet) -> Result<Vec<f64>> {
        support
            .iter()
            .map(|i| {
                let x = self.psi_inverse(i, z[i], PSI_INV_TOL)?;
                Ok(self.psi_prime(i, x))
            })
            .collect()
    }
}
