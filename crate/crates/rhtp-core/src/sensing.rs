//! Dense linear-algebra substrate: problem instances, hard thresholding,
//! restricted least squares, orthogonal projections, magnitude
//! arrangements, and restricted-isometry-constant computation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, RhtpError};

/// Tolerance for the per-entry consistency check `y = phi * x_star + e`
/// at construction.
pub const CONSISTENCY_TOL: f64 = 1e-12;

/// Condition-estimate limit above which a restricted submatrix is
/// treated as rank deficient.
pub const CONDITION_LIMIT: f64 = 1e12;

/// An ordered set of column indices in `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    /// Builds a support from arbitrary-order indices. Duplicates are a
    /// caller bug and are rejected.
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        assert!(
            indices.windows(2).all(|w| w[0] < w[1]),
            "duplicate indices in support set"
        );
        SupportSet { indices }
    }

    pub fn empty() -> Self {
        SupportSet { indices: Vec::new() }
    }

    /// Support of the nonzero entries of a vector.
    pub fn of_nonzeros(v: &DVector<f64>) -> Self {
        SupportSet {
            indices: (0..v.len()).filter(|&i| v[i] != 0.0).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let mut out = self.indices.clone();
        out.extend(other.iter().filter(|&i| !self.contains(i)));
        SupportSet::new(out)
    }

    pub fn intersection(&self, other: &SupportSet) -> SupportSet {
        SupportSet {
            indices: self.iter().filter(|&i| other.contains(i)).collect(),
        }
    }

    pub fn difference(&self, other: &SupportSet) -> SupportSet {
        SupportSet {
            indices: self.iter().filter(|&i| !other.contains(i)).collect(),
        }
    }

    pub fn is_disjoint(&self, other: &SupportSet) -> bool {
        self.iter().all(|i| !other.contains(i))
    }
}

/// A length-`n` vector constrained to be zero outside its support.
/// Entries on the support may still be zero by coincidence.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseIterate {
    pub values: DVector<f64>,
    pub support: SupportSet,
}

impl SparseIterate {
    pub fn zero(n: usize) -> Self {
        SparseIterate {
            values: DVector::zeros(n),
            support: SupportSet::empty(),
        }
    }

    /// Wraps a dense vector, taking the nonzero entries as the support.
    pub fn from_dense(values: DVector<f64>) -> Self {
        let support = SupportSet::of_nonzeros(&values);
        SparseIterate { values, support }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A sparse-recovery problem `y = phi * x_star + e` with an m-by-n
/// measurement matrix and sparsity target `k`.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub phi: DMatrix<f64>,
    pub y: DVector<f64>,
    pub x_star: Option<DVector<f64>>,
    pub e: Option<DVector<f64>>,
    pub n: usize,
    pub m: usize,
    pub k: usize,
}

impl ProblemInstance {
    pub fn new(
        phi: DMatrix<f64>,
        y: DVector<f64>,
        x_star: Option<DVector<f64>>,
        e: Option<DVector<f64>>,
        k: usize,
    ) -> Result<Self> {
        let m = phi.nrows();
        let n = phi.ncols();
        if m > n {
            return Err(RhtpError::Argument(format!(
                "require m <= n, got m={m}, n={n}"
            )));
        }
        if k == 0 || k > m {
            return Err(RhtpError::Argument(format!(
                "require 1 <= K <= m, got K={k}, m={m}"
            )));
        }
        if y.len() != m {
            return Err(RhtpError::Argument(format!(
                "y has length {}, expected {m}",
                y.len()
            )));
        }
        if let Some(x) = &x_star {
            if x.len() != n {
                return Err(RhtpError::Argument(format!(
                    "x_star has length {}, expected {n}",
                    x.len()
                )));
            }
            let nnz = x.iter().filter(|&&v| v != 0.0).count();
            if nnz > k {
                return Err(RhtpError::Argument(format!(
                    "x_star has {nnz} nonzeros, exceeds K={k}"
                )));
            }
        }
        if let Some(e) = &e {
            if e.len() != m {
                return Err(RhtpError::Argument(format!(
                    "e has length {}, expected {m}",
                    e.len()
                )));
            }
        }
        if let (Some(x), Some(e)) = (&x_star, &e) {
            let expected = &phi * x + e;
            let scale = y.amax().max(1.0);
            for i in 0..m {
                if (y[i] - expected[i]).abs() > CONSISTENCY_TOL * scale {
                    return Err(RhtpError::Argument(format!(
                        "y[{i}] inconsistent with phi*x_star + e: {} vs {}",
                        y[i], expected[i]
                    )));
                }
            }
        }
        Ok(ProblemInstance {
            phi,
            y,
            x_star,
            e,
            n,
            m,
            k,
        })
    }

    /// Columns of `phi` restricted to a support, in support order.
    pub fn submatrix(&self, support: &SupportSet) -> DMatrix<f64> {
        columns(&self.phi, support)
    }

    pub fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.y - &self.phi * x
    }
}

pub(crate) fn columns(phi: &DMatrix<f64>, support: &SupportSet) -> DMatrix<f64> {
    let mut sub = DMatrix::zeros(phi.nrows(), support.len());
    for (j, col) in support.iter().enumerate() {
        sub.set_column(j, &phi.column(col));
    }
    sub
}

/// Keeps the `k` largest-magnitude entries of `v`, zeroing the rest.
/// Ties are broken by keeping the lower index, so the result is
/// deterministic; the support always has exactly `k` indices.
pub fn hard_threshold(v: &DVector<f64>, k: usize) -> Result<SparseIterate> {
    let n = v.len();
    if k == 0 || k > n {
        return Err(RhtpError::Argument(format!(
            "hard_threshold requires 1 <= K <= n, got K={k}, n={n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort on descending magnitude keeps lower indices first on ties
    order.sort_by(|&a, &b| v[b].abs().partial_cmp(&v[a].abs()).unwrap());
    let mut kept = order[..k].to_vec();
    kept.sort_unstable();
    let mut values = DVector::zeros(n);
    for &i in &kept {
        values[i] = v[i];
    }
    Ok(SparseIterate {
        values,
        support: SupportSet::new(kept),
    })
}

/// Least-squares coefficients of `rhs` against the columns `phi_S`,
/// via column-pivoted QR. Errors when the condition estimate from the
/// R diagonal exceeds [`CONDITION_LIMIT`].
fn ls_coefficients(sub: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let s = sub.ncols();
    if s == 0 {
        return Ok(DVector::zeros(0));
    }
    if s > sub.nrows() {
        return Err(RhtpError::Argument(format!(
            "support size {} exceeds row count {}",
            s,
            sub.nrows()
        )));
    }
    let qr = sub.clone().col_piv_qr();
    let r = qr.r();
    let d_max = r[(0, 0)].abs();
    let d_min = r[(s - 1, s - 1)].abs();
    let cond = if d_min == 0.0 { f64::INFINITY } else { d_max / d_min };
    if cond > CONDITION_LIMIT {
        return Err(RhtpError::Singular {
            cond,
            limit: CONDITION_LIMIT,
        });
    }
    let qtv = qr.q().transpose() * rhs;
    let mut coeffs = r
        .solve_upper_triangular(&qtv)
        .ok_or_else(|| RhtpError::Singular {
            cond: f64::INFINITY,
            limit: CONDITION_LIMIT,
        })?;
    // undo the column pivoting
    qr.p().inv_permute_rows(&mut coeffs);
    Ok(coeffs)
}

/// The unique minimizer of `||y - phi * z||_2` over vectors supported on
/// `support`.
pub fn restricted_least_squares(
    inst: &ProblemInstance,
    support: &SupportSet,
) -> Result<SparseIterate> {
    let sub = inst.submatrix(support);
    let coeffs = ls_coefficients(&sub, &inst.y)?;
    let mut values = DVector::zeros(inst.n);
    for (j, i) in support.iter().enumerate() {
        values[i] = coeffs[j];
    }
    Ok(SparseIterate {
        values,
        support: support.clone(),
    })
}

/// Orthogonal projection of `v` onto the span of the columns `phi_S`.
pub fn projection_onto_span(
    phi: &DMatrix<f64>,
    support: &SupportSet,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    if support.is_empty() {
        return Ok(DVector::zeros(phi.nrows()));
    }
    let sub = columns(phi, support);
    let coeffs = ls_coefficients(&sub, v)?;
    Ok(sub * coeffs)
}

/// Sorts `|v|` in nonincreasing order, returning the arrangement and the
/// permutation achieving it (`pi[j]` is the original index of the j-th
/// largest magnitude). Ties keep the lower original index first, matching
/// [`hard_threshold`].
pub fn nonincreasing_arrangement(v: &DVector<f64>) -> (DVector<f64>, Vec<usize>) {
    let n = v.len();
    let mut pi: Vec<usize> = (0..n).collect();
    pi.sort_by(|&a, &b| v[b].abs().partial_cmp(&v[a].abs()).unwrap());
    let r = DVector::from_fn(n, |j, _| v[pi[j]].abs());
    (r, pi)
}

/// Number of size-`k` subsets, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Visits every size-`k` subset of `0..n` in lexicographic order.
pub fn for_each_combination<F: FnMut(&[usize])>(n: usize, k: usize, mut f: F) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// How [`estimate_ric`] explores the support space.
#[derive(Debug, Clone, Copy)]
pub enum RicMode {
    /// Enumerate all supports. Requires `C(n, s) <= 10^6`.
    Exact,
    /// Sample supports deterministically from `seed`; yields a lower
    /// bound on the true constant.
    Randomized { samples: u64, seed: u64 },
}

/// Result of a restricted-isometry-constant computation.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RicEstimate {
    pub delta: f64,
    pub exact: bool,
    pub supports_evaluated: u64,
}

pub const RIC_EXACT_BUDGET: u64 = 1_000_000;

fn support_deviation(phi: &DMatrix<f64>, support: &[usize]) -> f64 {
    let s = support.len();
    let mut g = DMatrix::zeros(s, s);
    for a in 0..s {
        for b in a..s {
            let dot = phi.column(support[a]).dot(&phi.column(support[b]));
            g[(a, b)] = dot;
            g[(b, a)] = dot;
        }
    }
    let eig = g.symmetric_eigenvalues();
    let lam_max = eig.max();
    let lam_min = eig.min();
    (lam_max - 1.0).max(1.0 - lam_min)
}

// splitmix64; keeps the randomized mode free of external RNG state.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Restricted isometry constant of order `s`:
/// `delta_s = max over |S|=s of max(lambda_max(G_S) - 1, 1 - lambda_min(G_S))`
/// where `G_S = phi_S^t phi_S`. Exact mode enumerates every support;
/// randomized mode returns a lower bound.
pub fn estimate_ric(phi: &DMatrix<f64>, s: usize, mode: RicMode) -> Result<RicEstimate> {
    let n = phi.ncols();
    if s == 0 || s > n {
        return Err(RhtpError::Argument(format!(
            "RIC order must satisfy 1 <= s <= n, got s={s}, n={n}"
        )));
    }
    match mode {
        RicMode::Exact => {
            let count = binomial(n, s);
            if count > RIC_EXACT_BUDGET as u128 {
                return Err(RhtpError::BudgetExceeded {
                    n,
                    s,
                    budget: RIC_EXACT_BUDGET,
                });
            }
            let mut delta: f64 = 0.0;
            let mut evaluated = 0u64;
            for_each_combination(n, s, |support| {
                delta = delta.max(support_deviation(phi, support));
                evaluated += 1;
            });
            Ok(RicEstimate {
                delta,
                exact: true,
                supports_evaluated: evaluated,
            })
        }
        RicMode::Randomized { samples, seed } => {
            let mut state = seed;
            let mut delta: f64 = 0.0;
            for _ in 0..samples {
                // partial Fisher-Yates draw of an s-subset
                let mut pool: Vec<usize> = (0..n).collect();
                for i in 0..s {
                    let j = i + (splitmix64(&mut state) % (n - i) as u64) as usize;
                    pool.swap(i, j);
                }
                let mut support = pool[..s].to_vec();
                support.sort_unstable();
                delta = delta.max(support_deviation(phi, &support));
            }
            Ok(RicEstimate {
                delta,
                exact: false,
                supports_evaluated: samples,
            })
        }
    }
}
