//! Hilbert polynomial combinatorics: Rudakov's order, HN types of sheaves,
//! the Shatz order, Quot-scheme indices and the stability parameters that
//! turn sheaves into Kronecker (or chain) quiver representations.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Sub};

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{int, to_i64, ExactError, RatStr, Rational};
use crate::quiver::{QuiverError, StabilityPair};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HilbertError {
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("invalid HN type: {0}")]
    InvalidHnType(String),
    #[error("types have different totals")]
    MismatchedTotals,
    #[error("nonpositive value: {0}")]
    NonPositiveValue(String),
    #[error("index not realizable: {0}")]
    IndexNotRealizable(String),
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    #[error("enumeration unbounded: degree cap {0} > 1")]
    EnumerationUnbounded(usize),
    #[error("enumeration budget exceeded: {count} > {budget}")]
    BudgetExceeded { count: u128, budget: u128 },
    #[error("length mismatch")]
    LengthMismatch,
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Polynomial with rational coefficients in ascending degree; trailing
/// zeros are trimmed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<RatStr>", into = "Vec<RatStr>")]
pub struct HilbertPoly {
    coeffs: Vec<Rational>,
}

impl From<Vec<RatStr>> for HilbertPoly {
    fn from(v: Vec<RatStr>) -> Self {
        HilbertPoly::new(v.into_iter().map(|x| x.0).collect())
    }
}

impl From<HilbertPoly> for Vec<RatStr> {
    fn from(p: HilbertPoly) -> Self {
        p.coeffs.into_iter().map(RatStr).collect()
    }
}

impl HilbertPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        HilbertPoly { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        HilbertPoly::new(coeffs.iter().map(|&c| int(c)).collect())
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Coefficient of `t^i` (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> Rational {
        self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Rational {
        self.coeffs.last().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_i(&self, x: i64) -> Rational {
        self.eval(&int(x))
    }

    /// Integer value at `x`, or an error if the value is not an integer.
    pub fn eval_int(&self, x: i64) -> Result<i64, HilbertError> {
        Ok(to_i64(&self.eval_i(x))?)
    }

    /// `P(j) ∈ ℤ` for `deg + 1` consecutive integers, hence for all.
    pub fn is_integer_valued(&self) -> bool {
        let d = self.degree().unwrap_or(0) as i64;
        (0..=d).all(|j| self.eval_i(j).is_integer())
    }

    /// Nonzero, integer-valued, positive leading coefficient.
    pub fn is_valid(&self) -> bool {
        !self.is_zero() && self.leading().is_positive() && self.is_integer_valued()
    }

    pub fn validate(&self) -> Result<(), HilbertError> {
        if self.is_zero() {
            return Err(HilbertError::ZeroPolynomial);
        }
        if !self.leading().is_positive() {
            return Err(HilbertError::InvalidPolynomial(format!(
                "{self} has nonpositive leading coefficient"
            )));
        }
        if !self.is_integer_valued() {
            return Err(HilbertError::InvalidPolynomial(format!(
                "{self} is not integer-valued"
            )));
        }
        Ok(())
    }

    pub fn parse_strs(coeffs: &[String]) -> Result<Self, HilbertError> {
        Ok(HilbertPoly::new(
            coeffs
                .iter()
                .map(|s| crate::exact::parse_rational(s))
                .collect::<Result<_, _>>()?,
        ))
    }
}

impl Add for &HilbertPoly {
    type Output = HilbertPoly;
    fn add(self, o: &HilbertPoly) -> HilbertPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        HilbertPoly::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }
}

impl Sub for &HilbertPoly {
    type Output = HilbertPoly;
    fn sub(self, o: &HilbertPoly) -> HilbertPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        HilbertPoly::new((0..n).map(|i| self.coeff(i) - o.coeff(i)).collect())
    }
}

impl fmt::Display for HilbertPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { "-" } else { "+" })?;
            }
            first = false;
            let coef = crate::exact::format_rational(&a);
            match i {
                0 => f.write_str(&coef)?,
                _ => {
                    if !a.is_one() {
                        f.write_str(&coef)?;
                    }
                    f.write_str("t")?;
                    if i > 1 {
                        write!(f, "^{i}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Sum of polynomials.
pub fn poly_sum<'a>(polys: impl IntoIterator<Item = &'a HilbertPoly>) -> HilbertPoly {
    polys
        .into_iter()
        .fold(HilbertPoly::new(Vec::new()), |acc, p| &acc + p)
}

/// Rudakov comparison: `Less` when `P ≺ Q`, `Greater` when `P ≻ Q`, `Equal`
/// when proportional. Lower degree is larger.
pub fn rudakov_cmp(p: &HilbertPoly, q: &HilbertPoly) -> Result<Ordering, HilbertError> {
    if p.is_zero() || q.is_zero() {
        return Err(HilbertError::ZeroPolynomial);
    }
    let f = p.coeffs.len().max(q.coeffs.len()) - 1;
    for i in (1..=f).rev() {
        for j in (0..i).rev() {
            let lambda = p.coeff(i) * q.coeff(j) - q.coeff(i) * p.coeff(j);
            if lambda.is_positive() {
                return Ok(Ordering::Less);
            }
            if lambda.is_negative() {
                return Ok(Ordering::Greater);
            }
        }
    }
    Ok(Ordering::Equal)
}

/// Same comparison on integer coefficient slices.
fn rudakov_i64(p: &[i64], q: &[i64]) -> Ordering {
    let f = p.len().max(q.len()) - 1;
    let c = |v: &[i64], i: usize| v.get(i).copied().unwrap_or(0) as i128;
    for i in (1..=f).rev() {
        for j in (0..i).rev() {
            let lambda = c(p, i) * c(q, j) - c(q, i) * c(p, j);
            match lambda.cmp(&0) {
                Ordering::Greater => return Ordering::Less,
                Ordering::Less => return Ordering::Greater,
                Ordering::Equal => {}
            }
        }
    }
    Ordering::Equal
}

/// `"precedes"`, `"equivalent"` or `"succeeds"`.
pub fn ordering_label(o: Ordering) -> &'static str {
    match o {
        Ordering::Less => "precedes",
        Ordering::Equal => "equivalent",
        Ordering::Greater => "succeeds",
    }
}

/// Compares `P(n)/P(m)` with `Q(n)/Q(m)` at `n = s`, `m = s²` for
/// `s = scale, 10·scale, 100·scale, …` until three consecutive signs agree.
pub fn rudakov_asymptotic_oracle(p: &HilbertPoly, q: &HilbertPoly, scale: u64) -> Ordering {
    let mut s = Rational::from_integer(scale.max(2).into());
    let mut history: Vec<Ordering> = Vec::new();
    loop {
        let m = &s * &s;
        let lhs = p.eval(&s) * q.eval(&m);
        let rhs = q.eval(&s) * p.eval(&m);
        // Both denominators are positive at large scale; flip otherwise.
        let sign_flip = (p.eval(&m) * q.eval(&m)).is_negative();
        let o = lhs.cmp(&rhs);
        history.push(if sign_flip { o.reverse() } else { o });
        let k = history.len();
        if k >= 3 && history[k - 1] == history[k - 2] && history[k - 2] == history[k - 3] {
            return history[k - 1];
        }
        s *= int(10);
    }
}

/// Ordered HN type of a sheaf: entries strictly decreasing for `≻`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SheafHnType {
    pub entries: Vec<HilbertPoly>,
    pub total: HilbertPoly,
}

impl SheafHnType {
    pub fn new(entries: Vec<HilbertPoly>) -> Result<Self, HilbertError> {
        let total = poly_sum(&entries);
        SheafHnType::with_total(entries, total)
    }

    pub fn with_total(entries: Vec<HilbertPoly>, total: HilbertPoly) -> Result<Self, HilbertError> {
        if entries.is_empty() {
            return Err(HilbertError::InvalidHnType("no entries".into()));
        }
        for e in &entries {
            e.validate()?;
        }
        if poly_sum(&entries) != total {
            return Err(HilbertError::InvalidHnType(
                "entries do not sum to the total".into(),
            ));
        }
        for w in entries.windows(2) {
            if rudakov_cmp(&w[0], &w[1])? != Ordering::Greater {
                return Err(HilbertError::InvalidHnType(format!(
                    "{} does not succeed {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(SheafHnType { entries, total })
    }

    pub fn trivial(p: HilbertPoly) -> Result<Self, HilbertError> {
        SheafHnType::new(vec![p])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for SheafHnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|e| e.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

pub fn is_hn_type(entries: &[HilbertPoly], total: &HilbertPoly) -> bool {
    SheafHnType::with_total(entries.to_vec(), total.clone()).is_ok()
}

/// Vertices `x_k = (Σ_{j≤k} P_j(m), Σ_{j≤k} P_j(n))` of the polygon.
fn polygon(tau: &SheafHnType, n: i64, m: i64) -> Result<Vec<(Rational, Rational)>, HilbertError> {
    let mut pts = vec![(Rational::zero(), Rational::zero())];
    for e in &tau.entries {
        let (x, y) = pts.last().cloned().expect("nonempty");
        let dx = e.eval_i(m);
        if !dx.is_positive() {
            return Err(HilbertError::NonPositiveValue(format!("{e} at {m}")));
        }
        pts.push((x + dx, y + e.eval_i(n)));
    }
    Ok(pts)
}

fn polygon_at(pts: &[(Rational, Rational)], x: &Rational) -> Rational {
    for w in pts.windows(2) {
        let (x0, y0) = &w[0];
        let (x1, y1) = &w[1];
        if x >= x0 && x <= x1 {
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    pts.last().expect("nonempty").1.clone()
}

/// Shatz order: `τ ≤ τ'` iff the polygon of `τ'` lies on or above that of
/// `τ`. The trivial type is the smallest.
pub fn shatz_leq(
    tau: &SheafHnType,
    tau_prime: &SheafHnType,
    n: i64,
    m: i64,
) -> Result<bool, HilbertError> {
    if tau.total != tau_prime.total {
        return Err(HilbertError::MismatchedTotals);
    }
    let a = polygon(tau, n, m)?;
    let b = polygon(tau_prime, n, m)?;
    Ok(a.iter()
        .chain(&b)
        .all(|(x, _)| polygon_at(&b, x) >= polygon_at(&a, x)))
}

/// Quot-scheme index: weights `r` (strictly decreasing) with multiplicities
/// `l`, for the total `P` at `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotIndex {
    pub r: Vec<RatStr>,
    pub l: Vec<i64>,
    pub total: HilbertPoly,
    pub n: i64,
    /// Set when blocks with equal weights were merged.
    pub merged: bool,
}

impl QuotIndex {
    pub fn new(
        r: Vec<Rational>,
        l: Vec<i64>,
        total: HilbertPoly,
        n: i64,
    ) -> Result<Self, HilbertError> {
        let q = QuotIndex {
            r: r.into_iter().map(RatStr).collect(),
            l,
            total,
            n,
            merged: false,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn weights(&self) -> Vec<Rational> {
        self.r.iter().map(|x| x.0.clone()).collect()
    }

    pub fn validate(&self) -> Result<(), HilbertError> {
        if self.r.len() != self.l.len() || self.r.is_empty() {
            return Err(HilbertError::InvalidIndex(
                "r and l must be nonempty and aligned".into(),
            ));
        }
        if self.l.iter().any(|&x| x <= 0) {
            return Err(HilbertError::InvalidIndex(
                "multiplicities must be positive".into(),
            ));
        }
        if self.r.windows(2).any(|w| w[0].0 <= w[1].0) {
            return Err(HilbertError::InvalidIndex(
                "weights must strictly decrease".into(),
            ));
        }
        let pn = self.total.eval_i(self.n);
        if int(self.l.iter().sum::<i64>()) != pn {
            return Err(HilbertError::InvalidIndex("Σ l_i ≠ P(n)".into()));
        }
        let s: Rational = self
            .r
            .iter()
            .zip(&self.l)
            .map(|(r, &l)| &r.0 * int(l))
            .sum();
        if !s.is_zero() {
            return Err(HilbertError::InvalidIndex("Σ r_i l_i ≠ 0".into()));
        }
        Ok(())
    }
}

/// `β_{n,m}(τ)`: `r_i = P(m)/P(n) − P_i(m)/P_i(n)`, `l_i = P_i(n)`. Runs
/// of equal weights are merged and flagged.
pub fn beta_nm(tau: &SheafHnType, n: i64, m: i64) -> Result<QuotIndex, HilbertError> {
    if m <= n {
        return Err(HilbertError::InvalidIndex("m must exceed n".into()));
    }
    let pn = tau.total.eval_i(n);
    let pm = tau.total.eval_i(m);
    if !pn.is_positive() {
        return Err(HilbertError::NonPositiveValue(format!("P({n})")));
    }
    let mut r: Vec<Rational> = Vec::new();
    let mut l: Vec<i64> = Vec::new();
    let mut merged = false;
    for e in &tau.entries {
        let en = e.eval_i(n);
        if !en.is_positive() {
            return Err(HilbertError::NonPositiveValue(format!("{e} at {n}")));
        }
        let w = &pm / &pn - e.eval_i(m) / &en;
        let li = to_i64(&en)?;
        if r.last() == Some(&w) {
            *l.last_mut().expect("aligned") += li;
            merged = true;
        } else {
            r.push(w);
            l.push(li);
        }
    }
    let mut q = QuotIndex::new(r, l, tau.total.clone(), n)?;
    q.merged = merged;
    Ok(q)
}

/// Pairwise equality of entries at both `n` and `m`.
pub fn beta_equal(tau: &SheafHnType, tau_prime: &SheafHnType, n: i64, m: i64) -> bool {
    tau.entries.len() == tau_prime.entries.len()
        && tau
            .entries
            .iter()
            .zip(&tau_prime.entries)
            .all(|(a, b)| a.eval_i(n) == b.eval_i(n) && a.eval_i(m) == b.eval_i(m))
}

/// Dimension vector pair `(a, b)` of a Kronecker representation.
pub type KroneckerHnType = Vec<[i64; 2]>;

/// `γ_{n,m}(τ) = ((P_i(n), P_i(m)))`.
pub fn gamma_nm(tau: &SheafHnType, n: i64, m: i64) -> Result<KroneckerHnType, HilbertError> {
    tau.entries
        .iter()
        .map(|e| Ok([e.eval_int(n)?, e.eval_int(m)?]))
        .collect()
}

/// `d_i(β) = (l_i, l_i P(m)/P(n) − l_i r_i)`.
pub fn gamma_of_beta(beta: &QuotIndex, m: i64) -> Result<KroneckerHnType, HilbertError> {
    let pn = beta.total.eval_i(beta.n);
    let pm = beta.total.eval_i(m);
    if !pn.is_positive() {
        return Err(HilbertError::NonPositiveValue(format!("P({})", beta.n)));
    }
    beta.r
        .iter()
        .zip(&beta.l)
        .map(|(r, &l)| {
            let second = int(l) * (&pm / &pn) - int(l) * &r.0;
            if !second.is_integer() || !second.is_positive() {
                return Err(HilbertError::IndexNotRealizable(format!(
                    "second component {} is not a positive integer",
                    crate::exact::format_rational(&second)
                )));
            }
            Ok([l, to_i64(&second)?])
        })
        .collect()
}

/// Kronecker stability data of a Hilbert polynomial at `(n, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AckParameters {
    pub d: [i64; 2],
    pub theta: [i64; 2],
    pub alpha: [i64; 2],
}

impl AckParameters {
    pub fn stability_pair(&self) -> Result<StabilityPair, QuiverError> {
        StabilityPair::new(
            self.theta.to_vec(),
            self.alpha.to_vec(),
            self.d.iter().map(|&x| x as usize).collect(),
        )
    }
}

/// `d = (P(n), P(m))`, `θ = (−P(m), P(n))`, `α = (P(m), P(n))`.
pub fn ack_parameters(p: &HilbertPoly, n: i64, m: i64) -> Result<AckParameters, HilbertError> {
    if m <= n {
        return Err(HilbertError::InvalidIndex("m must exceed n".into()));
    }
    let pn = p.eval_int(n)?;
    let pm = p.eval_int(m)?;
    if pn <= 0 || pm <= 0 {
        return Err(HilbertError::NonPositiveValue(format!(
            "P({n}) = {pn}, P({m}) = {pm}"
        )));
    }
    let out = AckParameters {
        d: [pn, pm],
        theta: [-pm, pn],
        alpha: [pm, pn],
    };
    debug_assert_eq!(out.theta[0] * out.d[0] + out.theta[1] * out.d[1], 0);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiParameters {
    pub d: Vec<i64>,
    pub theta: Vec<i64>,
    pub alpha: Vec<i64>,
}

impl MultiParameters {
    pub fn stability_pair(&self) -> Result<StabilityPair, QuiverError> {
        StabilityPair::new(
            self.theta.clone(),
            self.alpha.clone(),
            self.d.iter().map(|&x| x as usize).collect(),
        )
    }
}

/// Chain-quiver data for `n₀ < … < n_d`: `d_i = P(n_i)`,
/// `θ_i = Σ_{j<i} d_j − Σ_{j>i} d_j`, `α_i = Σ_{j≠i} d_j`.
pub fn multi_parameters(ns: &[i64], p: &HilbertPoly) -> Result<MultiParameters, HilbertError> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HilbertError::InvalidIndex(
            "ns must be nonempty and strictly increasing".into(),
        ));
    }
    let d: Vec<i64> = ns
        .iter()
        .map(|&x| p.eval_int(x))
        .collect::<Result<_, _>>()?;
    if let Some(i) = d.iter().position(|&x| x <= 0) {
        return Err(HilbertError::NonPositiveValue(format!(
            "P({}) = {}",
            ns[i], d[i]
        )));
    }
    Ok(multi_parameters_from_values(&d))
}

/// The chain-quiver data for arbitrary positive values `d_i`.
pub fn multi_parameters_from_values(d: &[i64]) -> MultiParameters {
    let total: i64 = d.iter().sum();
    let mut below = 0;
    let mut theta = Vec::with_capacity(d.len());
    let mut alpha = Vec::with_capacity(d.len());
    for &di in d {
        let above = total - below - di;
        theta.push(below - above);
        alpha.push(below + above);
        below += di;
    }
    debug_assert_eq!(theta.iter().zip(d).map(|(t, x)| t * x).sum::<i64>(), 0);
    MultiParameters {
        d: d.to_vec(),
        theta,
        alpha,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaMulti {
    pub vectors: Vec<Vec<i64>>,
    /// Some evaluation is `≤ 0`: the points are below the regularity range.
    pub nonpositive: bool,
}

/// `γ_n(τ) = ((P_i(n_0), …, P_i(n_d)))`.
pub fn gamma_multi(ns: &[i64], tau: &SheafHnType) -> Result<GammaMulti, HilbertError> {
    let vectors: Vec<Vec<i64>> = tau
        .entries
        .iter()
        .map(|e| ns.iter().map(|&x| e.eval_int(x)).collect())
        .collect::<Result<_, _>>()?;
    let nonpositive = vectors.iter().flatten().any(|&x| x <= 0);
    Ok(GammaMulti {
        vectors,
        nonpositive,
    })
}

/// All pairs of distinct pool types with equal `γ_n`.
pub fn injectivity_report(
    pool: &[SheafHnType],
    ns: &[i64],
) -> Result<Vec<(SheafHnType, SheafHnType)>, HilbertError> {
    let mut groups: HashMap<Vec<Vec<i64>>, Vec<usize>> = HashMap::new();
    for (i, t) in pool.iter().enumerate() {
        groups
            .entry(gamma_multi(ns, t)?.vectors)
            .or_default()
            .push(i);
    }
    let mut out = Vec::new();
    let mut keys: Vec<_> = groups.into_iter().collect();
    keys.sort();
    for (_, idx) in keys {
        for a in 0..idx.len() {
            for b in a + 1..idx.len() {
                if pool[idx[a]] != pool[idx[b]] {
                    out.push((pool[idx[a]].clone(), pool[idx[b]].clone()));
                }
            }
        }
    }
    Ok(out)
}

/// `Σ_i (r_i P_i(m) + r_i² l_i)`; zero on the fixed locus of weight `d`.
pub fn fixed_locus_weight_check(
    r: &[Rational],
    pm: &[Rational],
    l: &[Rational],
) -> Result<Rational, HilbertError> {
    if r.len() != pm.len() || r.len() != l.len() {
        return Err(HilbertError::LengthMismatch);
    }
    Ok(r.iter()
        .zip(pm)
        .zip(l)
        .map(|((r, p), l)| r * p + r * r * l)
        .sum())
}

/// Bounds for enumerating HN types with integer coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolBounds {
    pub deg_bound: usize,
    /// Coefficients range over `[-coeff_bound, coeff_bound]`, the leading
    /// one over `[1, coeff_bound]`.
    pub coeff_bound: i64,
    pub parts_bound: usize,
    /// Maximum number of candidate tuples examined.
    pub budget: u128,
}

fn integer_polys(deg_bound: usize, c: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for deg in 0..=deg_bound {
        let width = (2 * c + 1) as u64;
        let lower = width.pow(deg as u32);
        for lead in 1..=c {
            for code in 0..lower {
                let mut v = Vec::with_capacity(deg + 1);
                let mut k = code;
                for _ in 0..deg {
                    v.push((k % width) as i64 - c);
                    k /= width;
                }
                v.push(lead);
                out.push(v);
            }
        }
    }
    out
}

fn binom_u128(n: u128, k: u128) -> u128 {
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Strictly `≻`-decreasing tuples of pool polynomials, as index lists.
fn hn_tuples(
    polys: &[Vec<i64>],
    parts: usize,
    budget: u128,
) -> Result<Vec<Vec<usize>>, HilbertError> {
    let count: u128 = (1..=parts as u128)
        .map(|k| binom_u128(polys.len() as u128, k))
        .sum();
    if count > budget {
        return Err(HilbertError::BudgetExceeded { count, budget });
    }
    // Sort by decreasing Rudakov order; proportional polynomials are grouped.
    let mut order: Vec<usize> = (0..polys.len()).collect();
    order.sort_by(|&a, &b| rudakov_i64(&polys[b], &polys[a]));
    let mut out = Vec::new();
    fn rec(
        polys: &[Vec<i64>],
        order: &[usize],
        start: usize,
        parts: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == parts {
            return;
        }
        for k in start..order.len() {
            let i = order[k];
            if let Some(&last) = cur.last() {
                if rudakov_i64(&polys[last], &polys[i]) != Ordering::Greater {
                    continue;
                }
            }
            cur.push(i);
            rec(polys, order, k + 1, parts, cur, out);
            cur.pop();
        }
    }
    rec(polys, &order, 0, parts, &mut Vec::new(), &mut out);
    Ok(out)
}

fn eval_i64(p: &[i64], x: i64) -> i64 {
    p.iter().rev().fold(0, |acc, &c| acc * x + c)
}

fn to_type(polys: &[Vec<i64>], idx: &[usize]) -> SheafHnType {
    SheafHnType::new(
        idx.iter()
            .map(|&i| HilbertPoly::from_ints(&polys[i]))
            .collect(),
    )
    .expect("pool tuples are HN types")
}

/// All HN types whose entries have integer coefficients within the bounds.
pub fn hn_type_pool(bounds: &PoolBounds) -> Result<Vec<SheafHnType>, HilbertError> {
    let polys = integer_polys(bounds.deg_bound, bounds.coeff_bound);
    Ok(hn_tuples(&polys, bounds.parts_bound, bounds.budget)?
        .iter()
        .map(|t| to_type(&polys, t))
        .collect())
}

/// Pairs of distinct HN types in the pool with the same total and
/// `beta_equal` at `(n, m)`.
pub fn collision_search(
    n: i64,
    m: i64,
    bounds: &PoolBounds,
) -> Result<Vec<(SheafHnType, SheafHnType)>, HilbertError> {
    let polys = integer_polys(bounds.deg_bound, bounds.coeff_bound);
    let tuples = hn_tuples(&polys, bounds.parts_bound, bounds.budget)?;
    let width = bounds.deg_bound + 1;
    let mut groups: HashMap<(Vec<i64>, Vec<(i64, i64)>), Vec<usize>> = HashMap::new();
    for (k, t) in tuples.iter().enumerate() {
        if t.len() < 2 {
            continue;
        }
        let mut total = vec![0i64; width];
        for &i in t {
            for (c, x) in polys[i].iter().enumerate() {
                total[c] += x;
            }
        }
        let values = t
            .iter()
            .map(|&i| (eval_i64(&polys[i], n), eval_i64(&polys[i], m)))
            .collect();
        groups.entry((total, values)).or_default().push(k);
    }
    let mut keys: Vec<_> = groups.into_iter().filter(|(_, v)| v.len() > 1).collect();
    keys.sort();
    let mut out = Vec::new();
    for (_, idx) in keys {
        for a in 0..idx.len() {
            for b in a + 1..idx.len() {
                out.push((
                    to_type(&polys, &tuples[idx[a]]),
                    to_type(&polys, &tuples[idx[b]]),
                ));
            }
        }
    }
    Ok(out)
}

fn compositions(total: i64, parts: usize) -> Vec<Vec<i64>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Degree `≤ 1` tuples `(P_1, …, P_s)` summing to `P` with
/// `P_i(m) = l_i (P(m)/P(n) − r_i)`, positive leading terms, `P_i(n) ≥ 0`
/// and `P_1(n)/P_1(m) > ⋯ > P_s(n)/P_s(m)`.
pub fn enumerate_refined_indices(
    beta: &QuotIndex,
    m: i64,
    degree_cap: usize,
) -> Result<Vec<Vec<HilbertPoly>>, HilbertError> {
    if degree_cap > 1 {
        return Err(HilbertError::EnumerationUnbounded(degree_cap));
    }
    let p = &beta.total;
    if p.degree().unwrap_or(0) > degree_cap {
        return Err(HilbertError::EnumerationUnbounded(p.degree().unwrap_or(0)));
    }
    let pn = p.eval_i(beta.n);
    let pm = p.eval_i(m);
    let mut at_m = Vec::with_capacity(beta.l.len());
    for (r, &l) in beta.r.iter().zip(&beta.l) {
        let v = int(l) * (&pm / &pn - &r.0);
        if !v.is_integer() || !v.is_positive() {
            return Ok(Vec::new());
        }
        at_m.push(v);
    }
    let slope = p.coeff(1);
    if !slope.is_integer() || slope.is_negative() {
        return Ok(Vec::new());
    }
    let lead = to_i64(&slope)?;
    let mut out = Vec::new();
    for comp in compositions(lead, at_m.len()) {
        let cand: Vec<HilbertPoly> = comp
            .iter()
            .zip(&at_m)
            .map(|(&c, v)| HilbertPoly::new(vec![v - int(c) * int(m), int(c)]))
            .collect();
        if cand
            .iter()
            .any(|e| e.is_zero() || !e.leading().is_positive())
        {
            continue;
        }
        let at_n: Vec<Rational> = cand.iter().map(|e| e.eval_i(beta.n)).collect();
        if at_n.iter().any(|x| x.is_negative()) {
            continue;
        }
        let ratios: Vec<Rational> = at_n.iter().zip(&at_m).map(|(a, b)| a / b).collect();
        if ratios.windows(2).any(|w| w[0] <= w[1]) {
            continue;
        }
        debug_assert_eq!(&poly_sum(&cand), p);
        out.push(cand);
    }
    Ok(out)
}

/// `gcd`-free check that `a/b ≤ c/d` for positive denominators.
pub fn ratio_leq(a: i64, b: i64, c: i64, d: i64) -> bool {
    debug_assert!(b > 0 && d > 0);
    (a as i128) * (d as i128) <= (c as i128) * (b as i128)
}

/// Reduced form of a ratio, for display.
pub fn reduced_ratio(a: i64, b: i64) -> (i64, i64) {
    let g = a.gcd(&b).max(1);
    (a / g, b / g)
}
