//! Torus weight sets, their cones, and Kempf-adapted one-parameter subgroups.
//!
//! A point of a torus representation is described by its weight set `W`. The
//! limit along `λ` exists exactly when `⟨χ, λ⟩ ≥ 0` for every `χ ∈ W`, so the
//! admissible one-parameter subgroups form the cone `C_W`. The adapted 1-PS is
//! the minimizer of `⟨ρ, λ⟩ / ‖λ‖` on that cone, found here as the exact
//! solution of
//!
//! ```text
//! minimize λᵀ M λ   subject to   ⟨ρ, λ⟩ = -1,  ⟨χ, λ⟩ ≥ 0 (χ ∈ W)
//! ```
//!
//! with `M` the diagonal metric, by enumerating candidate active sets and
//! accepting the first one whose KKT conditions hold exactly.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{
    int, primitive_integral, rank, rref, solve, ExactError, Matrix, NormValue, Rational,
    RationalField,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstabilityError {
    #[error("invalid weight context: {0}")]
    InvalidContext(String),
    #[error("no adapted 1-PS: weight set is semistable")]
    NoAdaptedOnePs,
    #[error("internal error: KKT certificate failed ({0})")]
    Certificate(String),
    #[error("internal error: adapted 1-PS not unique")]
    NotUnique,
    #[error("zero 1-PS has no twisted character")]
    ZeroOnePs,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Rank of the torus, the diagonal metric and the character `ρ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightContext {
    pub dim: usize,
    pub metric: Vec<i64>,
    pub rho: Vec<i64>,
}

impl WeightContext {
    pub fn new(dim: usize, metric: Vec<i64>, rho: Vec<i64>) -> Result<Self, InstabilityError> {
        if metric.len() != dim || rho.len() != dim {
            return Err(InstabilityError::InvalidContext(format!(
                "metric and rho must have length {dim}"
            )));
        }
        if metric.iter().any(|&m| m <= 0) {
            return Err(InstabilityError::InvalidContext(
                "metric entries must be positive".into(),
            ));
        }
        Ok(WeightContext { dim, metric, rho })
    }

    /// Identity metric.
    pub fn standard(rho: Vec<i64>) -> Self {
        let dim = rho.len();
        WeightContext {
            dim,
            metric: vec![1; dim],
            rho,
        }
    }

    pub fn pairing(&self, lambda: &[i64]) -> i64 {
        self.rho.iter().zip(lambda).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self, lambda: &[i64]) -> i64 {
        self.metric.iter().zip(lambda).map(|(m, x)| m * x * x).sum()
    }

    pub fn value(&self, lambda: &[i64]) -> NormValue {
        NormValue::from_ints(self.pairing(lambda), self.norm_sq(lambda))
    }

    fn check_len(&self, v: &[i64]) -> Result<(), InstabilityError> {
        if v.len() != self.dim {
            return Err(InstabilityError::Dimension(format!(
                "vector of length {} in rank {} torus",
                v.len(),
                self.dim
            )));
        }
        Ok(())
    }
}

/// A deduplicated, sorted set of integer weights.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct WeightSet {
    weights: Vec<Vec<i64>>,
}

impl WeightSet {
    pub fn new(weights: impl IntoIterator<Item = Vec<i64>>) -> Self {
        let set: BTreeSet<Vec<i64>> = weights.into_iter().collect();
        WeightSet {
            weights: set.into_iter().collect(),
        }
    }

    pub fn empty() -> Self {
        WeightSet::default()
    }

    pub fn weights(&self) -> &[Vec<i64>] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn scaled(&self, c: i64) -> Self {
        WeightSet::new(
            self.weights
                .iter()
                .map(|w| w.iter().map(|x| x * c).collect()),
        )
    }
}

/// `{ λ : ⟨χ, λ⟩ ≥ 0 for all normals χ }`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfspaceCone {
    pub dim: usize,
    pub normals: Vec<Vec<i64>>,
}

impl HalfspaceCone {
    pub fn contains(&self, lambda: &[i64]) -> bool {
        self.normals
            .iter()
            .all(|n| n.iter().zip(lambda).map(|(a, b)| a * b).sum::<i64>() >= 0)
    }

    pub fn contains_rational(&self, lambda: &[Rational]) -> bool {
        self.normals.iter().all(|n| {
            let s: Rational = n.iter().zip(lambda).map(|(a, b)| int(*a) * b).sum();
            !s.is_negative()
        })
    }
}

pub fn cone_from_weight_set(w: &WeightSet, dim: usize) -> HalfspaceCone {
    HalfspaceCone {
        dim,
        normals: w.weights.clone(),
    }
}

/// Exact KKT data for the projection problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KktCertificate {
    /// Rational minimizer with `⟨ρ, λ⟩ = -1`.
    pub solution: Vec<Rational>,
    /// Indices into the weight set of the constraints treated as active.
    pub active: Vec<usize>,
    pub equality_multiplier: Rational,
    pub multipliers: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdaptedOnePs {
    pub lambda: Vec<i64>,
    pub value: NormValue,
    pub certificate: KktCertificate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StratumLabel {
    Semistable,
    Unstable(AdaptedOnePs),
}

impl StratumLabel {
    pub fn lambda(&self) -> Option<&[i64]> {
        match self {
            StratumLabel::Semistable => None,
            StratumLabel::Unstable(a) => Some(&a.lambda),
        }
    }
}

/// Exact phase-one simplex with Bland's rule: is `b` a nonnegative
/// combination of the `columns`?
fn in_cone(columns: &[Vec<i64>], b: &[i64]) -> bool {
    let rows = b.len();
    let k = columns.len();
    let width = k + rows;
    let mut t: Vec<Vec<Rational>> = (0..rows)
        .map(|r| {
            let sign = if b[r] < 0 { -1 } else { 1 };
            let mut row: Vec<Rational> = columns.iter().map(|c| int(sign * c[r])).collect();
            row.extend((0..rows).map(|j| if j == r { int(1) } else { Rational::zero() }));
            row.push(int(sign * b[r]));
            row
        })
        .collect();
    let mut obj: Vec<Rational> = (0..=width)
        .map(|j| {
            if j >= k && j < width {
                Rational::zero()
            } else {
                -t.iter().map(|row| row[j].clone()).sum::<Rational>()
            }
        })
        .collect();
    let mut basis: Vec<usize> = (k..width).collect();
    while let Some(j) = (0..width).find(|&j| obj[j].is_negative()) {
        let mut pivot: Option<(usize, Rational)> = None;
        for r in 0..rows {
            if t[r][j].is_positive() {
                let ratio = &t[r][width] / &t[r][j];
                let better = match &pivot {
                    None => true,
                    Some((pr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*pr]),
                };
                if better {
                    pivot = Some((r, ratio));
                }
            }
        }
        let Some((r, _)) = pivot else {
            break;
        };
        let p = t[r][j].clone();
        for x in &mut t[r] {
            *x = &*x / &p;
        }
        let prow = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && !row[j].is_zero() {
                let f = row[j].clone();
                for (x, y) in row.iter_mut().zip(&prow) {
                    *x -= &f * y;
                }
            }
        }
        let f = obj[j].clone();
        for (x, y) in obj.iter_mut().zip(&prow) {
            *x -= &f * y;
        }
        basis[r] = j;
    }
    obj[width].is_zero()
}

/// True iff no λ in the cone has `⟨ρ, λ⟩ < 0`. By Farkas' lemma this holds
/// exactly when `ρ` lies in the cone spanned by `W`.
pub fn is_weight_set_semistable(w: &WeightSet, ctx: &WeightContext) -> bool {
    in_cone(&w.weights, &ctx.rho)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Solves the equality-constrained problem for one candidate active set and
/// returns a certificate if all KKT conditions hold.
fn try_active_set(
    weights: &[Vec<i64>],
    active: &[usize],
    ctx: &WeightContext,
) -> Option<KktCertificate> {
    let f = RationalField;
    let d = ctx.dim;
    let mut rows: Vec<Vec<Rational>> = vec![ctx.rho.iter().map(|&x| int(x)).collect()];
    rows.extend(
        active
            .iter()
            .map(|&i| weights[i].iter().map(|&x| int(x)).collect()),
    );
    let c = Matrix::from_rows(rows, d).ok()?;
    if rank(&f, &c) < c.rows() {
        return None;
    }
    // Gram matrix C M⁻¹ Cᵀ.
    let k = c.rows();
    let minv: Vec<Rational> = ctx
        .metric
        .iter()
        .map(|&m| Rational::new(1.into(), m.into()))
        .collect();
    let gram = Matrix::from_fn(k, k, |i, j| {
        (0..d)
            .map(|t| c.get(i, t) * c.get(j, t) * &minv[t])
            .sum::<Rational>()
    });
    let mut rhs = vec![Rational::zero(); k];
    rhs[0] = int(-1);
    let y = solve(&f, &gram, &rhs)?;
    let lambda: Vec<Rational> = (0..d)
        .map(|t| (0..k).map(|i| c.get(i, t) * &y[i]).sum::<Rational>() * &minv[t])
        .collect();
    let cert = KktCertificate {
        solution: lambda,
        active: active.to_vec(),
        equality_multiplier: y[0].clone(),
        multipliers: y[1..].to_vec(),
    };
    check_certificate(weights, ctx, &cert).ok()?;
    Some(cert)
}

/// Re-verifies primal feasibility, stationarity on the active face,
/// complementary slackness and dual feasibility, all exactly.
pub fn check_certificate(
    weights: &[Vec<i64>],
    ctx: &WeightContext,
    cert: &KktCertificate,
) -> Result<(), InstabilityError> {
    let dot =
        |v: &[i64], x: &[Rational]| -> Rational { v.iter().zip(x).map(|(a, b)| int(*a) * b).sum() };
    let lam = &cert.solution;
    if lam.len() != ctx.dim {
        return Err(InstabilityError::Certificate("solution length".into()));
    }
    if dot(&ctx.rho, lam) != int(-1) {
        return Err(InstabilityError::Certificate(
            "normalization ⟨ρ,λ⟩ = -1".into(),
        ));
    }
    for (i, w) in weights.iter().enumerate() {
        let v = dot(w, lam);
        if v.is_negative() {
            return Err(InstabilityError::Certificate(format!(
                "weight {i} violated"
            )));
        }
        if cert.active.contains(&i) && !v.is_zero() {
            return Err(InstabilityError::Certificate(format!(
                "active weight {i} not tight"
            )));
        }
    }
    if cert.multipliers.len() != cert.active.len() {
        return Err(InstabilityError::Certificate("multiplier count".into()));
    }
    if cert.multipliers.iter().any(|m| m.is_negative()) {
        return Err(InstabilityError::Certificate("negative multiplier".into()));
    }
    for t in 0..ctx.dim {
        let grad = int(ctx.metric[t]) * &lam[t];
        let comb = &cert.equality_multiplier * int(ctx.rho[t])
            + cert
                .active
                .iter()
                .zip(&cert.multipliers)
                .map(|(&i, m)| m * int(weights[i][t]))
                .sum::<Rational>();
        if grad != comb {
            return Err(InstabilityError::Certificate(format!(
                "stationarity at coordinate {t}"
            )));
        }
    }
    Ok(())
}

/// Active sets are enumerated exhaustively (to confirm uniqueness) up to this
/// many constraints; beyond it the first certified solution is returned.
const EXHAUSTIVE_LIMIT: usize = 10;

pub fn adapted_one_ps(
    w: &WeightSet,
    ctx: &WeightContext,
) -> Result<AdaptedOnePs, InstabilityError> {
    ctx.check_len(&ctx.rho)?;
    for chi in &w.weights {
        ctx.check_len(chi)?;
    }
    if is_weight_set_semistable(w, ctx) {
        return Err(InstabilityError::NoAdaptedOnePs);
    }
    let weights: Vec<Vec<i64>> = w
        .weights
        .iter()
        .filter(|chi| chi.iter().any(|&x| x != 0))
        .cloned()
        .collect();
    let exhaustive = weights.len() <= EXHAUSTIVE_LIMIT;
    let mut found: Option<KktCertificate> = None;
    let max_active = weights.len().min(ctx.dim.saturating_sub(1));
    'outer: for size in 0..=max_active {
        for active in combinations(weights.len(), size) {
            if let Some(cert) = try_active_set(&weights, &active, ctx) {
                match &found {
                    None => {
                        found = Some(cert);
                        if !exhaustive {
                            break 'outer;
                        }
                    }
                    Some(prev) if prev.solution != cert.solution => {
                        return Err(InstabilityError::NotUnique)
                    }
                    Some(_) => {}
                }
            }
        }
    }
    let cert = found.ok_or_else(|| {
        InstabilityError::Certificate("no active set satisfies the KKT conditions".into())
    })?;
    check_certificate(&weights, ctx, &cert)?;
    let lambda = primitive_integral(&cert.solution)?;
    let value = ctx.value(&lambda);
    Ok(AdaptedOnePs {
        lambda,
        value,
        certificate: cert,
    })
}

/// Labels each point by its weight set's stratum. Equal weight sets are
/// solved once.
pub fn stratify_weight_sets(
    points: &[WeightSet],
    ctx: &WeightContext,
) -> Result<Vec<StratumLabel>, InstabilityError> {
    let mut cache: std::collections::BTreeMap<&WeightSet, StratumLabel> = Default::default();
    let mut out = Vec::with_capacity(points.len());
    for w in points {
        if let Some(l) = cache.get(w) {
            out.push(l.clone());
            continue;
        }
        let label = if is_weight_set_semistable(w, ctx) {
            StratumLabel::Semistable
        } else {
            StratumLabel::Unstable(adapted_one_ps(w, ctx)?)
        };
        cache.insert(w, label.clone());
        out.push(label);
    }
    Ok(out)
}

/// Sorts entries non-increasingly inside each block: the Weyl-group
/// representative for a product of general linear groups.
pub fn dominant_representative(
    lambda: &[i64],
    block_sizes: &[usize],
) -> Result<Vec<i64>, InstabilityError> {
    if block_sizes.iter().sum::<usize>() != lambda.len() {
        return Err(InstabilityError::Dimension(
            "block sizes do not sum to the vector length".into(),
        ));
    }
    let mut out = Vec::with_capacity(lambda.len());
    let mut start = 0;
    for &b in block_sizes {
        let mut block = lambda[start..start + b].to_vec();
        block.sort_unstable_by(|a, b| b.cmp(a));
        out.extend(block);
        start += b;
    }
    Ok(out)
}

/// `‖λ‖² ρ − ⟨ρ, λ⟩ λ*` with `λ*_j = m_j λ_j`.
pub fn twist_character(ctx: &WeightContext, lambda: &[i64]) -> Result<Vec<i64>, InstabilityError> {
    ctx.check_len(lambda)?;
    if lambda.iter().all(|&x| x == 0) {
        return Err(InstabilityError::ZeroOnePs);
    }
    let n = ctx.norm_sq(lambda);
    let p = ctx.pairing(lambda);
    Ok((0..ctx.dim)
        .map(|j| n * ctx.rho[j] - p * ctx.metric[j] * lambda[j])
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrassmannStratum {
    pub rank: usize,
    /// `None` on the semistable (full rank) locus.
    pub lambda: Option<Vec<i64>>,
}

/// Rank stratum of an `r × n` matrix under left multiplication by `GL_r`
/// with the determinant character. The rank answer is cross-checked against
/// the torus computation on the row-echelon form.
pub fn grassmann_stratum(m: &Matrix<Rational>) -> Result<GrassmannStratum, InstabilityError> {
    let r = m.rows();
    if r > m.cols() {
        return Err(InstabilityError::Dimension(format!(
            "expected r ≤ n, got {r} × {}",
            m.cols()
        )));
    }
    let (echelon, pivots) = rref(&RationalField, m);
    let k = pivots.len();
    let expected = if k == r {
        None
    } else {
        Some(
            (0..r)
                .map(|i| if i < k { 0 } else { -1 })
                .collect::<Vec<i64>>(),
        )
    };

    // Torus weights of the echelon form: e_i for every nonzero row.
    let weights = WeightSet::new(
        (0..r)
            .filter(|&i| echelon.row(i).iter().any(|x| !x.is_zero()))
            .map(|i| {
                let mut e = vec![0; r];
                e[i] = 1;
                e
            }),
    );
    let ctx = WeightContext::standard(vec![1; r]);
    let torus = if is_weight_set_semistable(&weights, &ctx) {
        None
    } else {
        let a = adapted_one_ps(&weights, &ctx)?;
        Some(dominant_representative(&a.lambda, &[r])?)
    };
    if torus != expected {
        return Err(InstabilityError::Certificate(format!(
            "rank label {expected:?} disagrees with torus label {torus:?}"
        )));
    }
    Ok(GrassmannStratum {
        rank: k,
        lambda: expected,
    })
}
