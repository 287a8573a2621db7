//! Coherent sheaves on the projective line as split data (line bundle
//! degrees plus torsion blocks), their HN types and the functor to
//! Kronecker and chain quiver representations.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Pow, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{binomial, format_rational, parse_rational, Matrix, Rational};
use crate::hilbert::{
    ack_parameters, gamma_multi, gamma_nm, multi_parameters, HilbertError, HilbertPoly,
    KroneckerHnType, SheafHnType,
};
use crate::quiver::{
    hn_filtration_quiver, FieldKind, HnOptions, Quiver, QuiverError, QuiverRepresentation,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SheafError {
    #[error("zero sheaf")]
    ZeroSheaf,
    #[error("E not {n}-regular (regularity bound {bound})")]
    NotRegular { n: i64, bound: i64 },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("invalid point {0:?}")]
    InvalidPoint(String),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Quiver(#[from] QuiverError),
}

/// A point of the line: a rational affine coordinate or infinity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Point {
    Finite(Rational),
    Infinity,
}

impl TryFrom<String> for Point {
    type Error = SheafError;
    fn try_from(s: String) -> Result<Self, SheafError> {
        if s == "inf" {
            return Ok(Point::Infinity);
        }
        parse_rational(&s)
            .map(Point::Finite)
            .map_err(|_| SheafError::InvalidPoint(s))
    }
}

impl From<Point> for String {
    fn from(p: Point) -> String {
        p.to_string()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Finite(q) => f.write_str(&format_rational(q)),
            Point::Infinity => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorsionBlock {
    pub point: Point,
    pub length: u32,
}

/// `⊕ O(a) ⊕ ⊕ O_{ℓ·p}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SheafP1 {
    pub line_degrees: Vec<i64>,
    #[serde(default)]
    pub torsion: Vec<TorsionBlock>,
}

impl SheafP1 {
    pub fn new(line_degrees: Vec<i64>, torsion: Vec<TorsionBlock>) -> Result<Self, SheafError> {
        if torsion.iter().any(|b| b.length == 0) {
            return Err(SheafError::InvalidParameters(
                "torsion length must be ≥ 1".into(),
            ));
        }
        Ok(SheafP1 {
            line_degrees,
            torsion,
        })
    }

    pub fn lines(degrees: &[i64]) -> Self {
        SheafP1 {
            line_degrees: degrees.to_vec(),
            torsion: Vec::new(),
        }
    }

    pub fn with_torsion(mut self, point: Point, length: u32) -> Self {
        self.torsion.push(TorsionBlock { point, length });
        self
    }

    pub fn is_zero(&self) -> bool {
        self.line_degrees.is_empty() && self.torsion.is_empty()
    }

    pub fn torsion_length(&self) -> u64 {
        self.torsion.iter().map(|b| b.length as u64).sum()
    }

    fn check_nonzero(&self) -> Result<(), SheafError> {
        if self.is_zero() || self.torsion.iter().any(|b| b.length == 0) {
            return Err(SheafError::ZeroSheaf);
        }
        Ok(())
    }
}

impl fmt::Display for SheafP1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .line_degrees
            .iter()
            .map(|a| format!("O({a})"))
            .collect();
        parts.extend(
            self.torsion
                .iter()
                .map(|b| format!("T({}, {})", b.point, b.length)),
        );
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

/// `P(t) = Σ_a (t + a + 1) + Σ ℓ`.
pub fn hilbert_poly_p1(e: &SheafP1) -> Result<HilbertPoly, SheafError> {
    e.check_nonzero()?;
    let r = e.line_degrees.len() as i64;
    let c: i64 = e.line_degrees.iter().map(|a| a + 1).sum::<i64>() + e.torsion_length() as i64;
    Ok(HilbertPoly::from_ints(&[c, r]))
}

/// `(h⁰(E(n)), h¹(E(n)))`.
pub fn cohomology_dims(e: &SheafP1, n: i64) -> (u64, u64) {
    let mut h0 = e.torsion_length();
    let mut h1 = 0u64;
    for &a in &e.line_degrees {
        let d = a + n;
        h0 += (d + 1).max(0) as u64;
        h1 += (-d - 1).max(0) as u64;
    }
    (h0, h1)
}

/// Least `n ≥ 0` with `h¹(E(n − 1)) = 0`.
pub fn regularity_bound(e: &SheafP1) -> i64 {
    e.line_degrees.iter().map(|a| -a).max().unwrap_or(0).max(0)
}

/// Torsion first, then `r_a (t + a + 1)` for distinct degrees `a`,
/// decreasing.
pub fn sheaf_hn_type(e: &SheafP1) -> Result<SheafHnType, SheafError> {
    e.check_nonzero()?;
    let mut entries = Vec::new();
    let t = e.torsion_length() as i64;
    if t > 0 {
        entries.push(HilbertPoly::from_ints(&[t]));
    }
    let mut counts: BTreeMap<i64, i64> = BTreeMap::new();
    for &a in &e.line_degrees {
        *counts.entry(a).or_default() += 1;
    }
    for (&a, &r) in counts.iter().rev() {
        entries.push(HilbertPoly::from_ints(&[r * (a + 1), r]));
    }
    Ok(SheafHnType::new(entries)?)
}

/// Matrix of multiplication by the section `x^k y^{gap−k}` from `E(n)` to
/// `E(n + gap)`, block-diagonal over the summands.
fn multiplication_matrix(e: &SheafP1, n: i64, gap: i64, k: i64) -> Matrix<Rational> {
    let rows = cohomology_dims(e, n + gap).0 as usize;
    let cols = cohomology_dims(e, n).0 as usize;
    let mut m = Matrix::filled(rows, cols, Rational::zero());
    let (mut r0, mut c0) = (0usize, 0usize);
    for &a in &e.line_degrees {
        let src = (a + n + 1).max(0) as usize;
        let dst = (a + n + gap + 1).max(0) as usize;
        for i in 0..src {
            m.set(r0 + i + k as usize, c0 + i, Rational::one());
        }
        r0 += dst;
        c0 += src;
    }
    for b in &e.torsion {
        let l = b.length as usize;
        match &b.point {
            Point::Finite(p) => {
                // x^k = Σ_i C(k, i) p^{k−i} (x − p)^i
                for j in 0..l {
                    for i in 0..=(k as usize) {
                        if i + j >= l {
                            break;
                        }
                        let c = Rational::from_integer(binomial(k as u64, i as u64))
                            * Pow::pow(p, (k as usize - i) as u32);
                        if !c.is_zero() {
                            m.set(r0 + i + j, c0 + j, c);
                        }
                    }
                }
            }
            Point::Infinity => {
                let s = (gap - k) as usize;
                for j in 0..l {
                    if j + s < l {
                        m.set(r0 + j + s, c0 + j, Rational::one());
                    }
                }
            }
        }
        r0 += l;
        c0 += l;
    }
    m
}

fn check_regular(e: &SheafP1, n: i64) -> Result<(), SheafError> {
    e.check_nonzero()?;
    let bound = regularity_bound(e);
    if n < bound {
        return Err(SheafError::NotRegular { n, bound });
    }
    Ok(())
}

/// `Φ_n(E)` on the chain quiver with `n_{i+1} − n_i + 1` arrows between
/// consecutive vertices.
pub fn phi_multi(e: &SheafP1, ns: &[i64]) -> Result<QuiverRepresentation, SheafError> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SheafError::InvalidParameters(
            "ns must be strictly increasing".into(),
        ));
    }
    check_regular(e, ns[0])?;
    let counts: Vec<usize> = ns.windows(2).map(|w| (w[1] - w[0] + 1) as usize).collect();
    let quiver = Quiver::chain(&counts);
    let dims: Vec<usize> = ns
        .iter()
        .map(|&n| cohomology_dims(e, n).0 as usize)
        .collect();
    let mut maps = Vec::new();
    for w in ns.windows(2) {
        let gap = w[1] - w[0];
        for k in 0..=gap {
            maps.push(multiplication_matrix(e, w[0], gap, k));
        }
    }
    Ok(QuiverRepresentation::new(
        quiver,
        FieldKind::Rationals,
        dims,
        maps,
    )?)
}

/// `Φ_{n,m}(E)` on the Kronecker quiver with `m − n + 1` arrows.
pub fn phi_nm(e: &SheafP1, n: i64, m: i64) -> Result<QuiverRepresentation, SheafError> {
    if m <= n {
        return Err(SheafError::InvalidParameters("m must exceed n".into()));
    }
    phi_multi(e, &[n, m])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AckReport {
    pub sheaf: SheafP1,
    pub tau: SheafHnType,
    pub expected: KroneckerHnType,
    pub computed: KroneckerHnType,
    #[serde(rename = "match")]
    pub matched: bool,
    pub semistable: bool,
    pub oracles: Vec<String>,
    pub primes: Vec<u64>,
    pub n: i64,
    pub m: i64,
}

/// Compares the HN type of `Φ_{n,m}(E)` for `(θ_{n,m}(P), α_{n,m}(P))` with
/// `γ_{n,m}(τ(E))`.
pub fn verify_ack_hn(
    e: &SheafP1,
    n: i64,
    m: i64,
    opts: &HnOptions,
) -> Result<AckReport, SheafError> {
    check_regular(e, n)?;
    let tau = sheaf_hn_type(e)?;
    let expected = gamma_nm(&tau, n, m)?;
    let params = ack_parameters(&tau.total, n, m)?;
    let rep = phi_nm(e, n, m)?;
    let sp = params.stability_pair()?;
    let hn = hn_filtration_quiver(&rep, &sp, opts)?;
    let computed: KroneckerHnType = hn
        .gamma
        .iter()
        .map(|d| [d[0] as i64, d[1] as i64])
        .collect();
    let mut oracles: Vec<String> = hn.oracles.iter().map(|o| o.label().to_string()).collect();
    oracles.sort();
    oracles.dedup();
    Ok(AckReport {
        sheaf: e.clone(),
        matched: expected == computed,
        semistable: hn.is_semistable(),
        tau,
        expected,
        computed,
        oracles,
        primes: hn.primes_used,
        n,
        m,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiVertexReport {
    pub sheaf: SheafP1,
    pub ns: Vec<i64>,
    pub tau: SheafHnType,
    pub theta: Vec<i64>,
    pub alpha: Vec<i64>,
    pub expected: Vec<Vec<i64>>,
    pub computed: Vec<Vec<i64>>,
    #[serde(rename = "match")]
    pub matched: bool,
    pub semistable: bool,
    pub oracles: Vec<String>,
    pub primes: Vec<u64>,
}

/// Chain-quiver analogue of [`verify_ack_hn`] at the points `ns`.
pub fn verify_multi_vertex(
    e: &SheafP1,
    ns: &[i64],
    opts: &HnOptions,
) -> Result<MultiVertexReport, SheafError> {
    let rep = phi_multi(e, ns)?;
    let tau = sheaf_hn_type(e)?;
    let expected = gamma_multi(ns, &tau)?.vectors;
    let params = multi_parameters(ns, &tau.total)?;
    let sp = params.stability_pair()?;
    let hn = hn_filtration_quiver(&rep, &sp, opts)?;
    let computed: Vec<Vec<i64>> = hn
        .gamma
        .iter()
        .map(|d| d.iter().map(|&x| x as i64).collect())
        .collect();
    let mut oracles: Vec<String> = hn.oracles.iter().map(|o| o.label().to_string()).collect();
    oracles.sort();
    oracles.dedup();
    Ok(MultiVertexReport {
        sheaf: e.clone(),
        ns: ns.to_vec(),
        matched: expected == computed,
        semistable: hn.is_semistable(),
        tau,
        theta: params.theta,
        alpha: params.alpha,
        expected,
        computed,
        oracles,
        primes: hn.primes_used,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCell {
    pub n: i64,
    pub m: i64,
    #[serde(rename = "match")]
    pub matched: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridReport {
    pub cells: Vec<GridCell>,
    /// Smallest `(n, m)` in lexicographic order that matches.
    pub minimal: Option<[i64; 2]>,
    /// Cells that fail although a smaller `m` with the same `n` matched.
    pub non_monotone: Vec<[i64; 2]>,
}

/// Runs `verify_ack_hn` on every admissible cell with `n ≤ n_max`,
/// `m ≤ m_max`.
pub fn threshold_grid(e: &SheafP1, n_max: i64, m_max: i64, opts: &HnOptions) -> GridReport {
    let mut cells = Vec::new();
    for n in regularity_bound(e)..=n_max {
        for m in n + 1..=m_max {
            let (matched, error) = match verify_ack_hn(e, n, m, opts) {
                Ok(r) => (Some(r.matched), None),
                Err(err) => (None, Some(err.to_string())),
            };
            cells.push(GridCell {
                n,
                m,
                matched,
                error,
            });
        }
    }
    let minimal = cells
        .iter()
        .find(|c| c.matched == Some(true))
        .map(|c| [c.n, c.m]);
    let non_monotone = cells
        .iter()
        .filter(|c| {
            c.matched == Some(false)
                && cells
                    .iter()
                    .any(|d| d.n == c.n && d.m < c.m && d.matched == Some(true))
        })
        .map(|c| [c.n, c.m])
        .collect();
    GridReport {
        cells,
        minimal,
        non_monotone,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int;
    use crate::hilbert::is_hn_type;
    use crate::quiver::{is_theta_semistable, StabilityPair};

    fn ints(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| int(x)).collect())
                .collect(),
            rows.first().map_or(0, |r| r.len()),
        )
        .unwrap()
    }

    fn zero_point() -> Point {
        Point::Finite(int(0))
    }

    #[test]
    fn hilbert_poly_examples() {
        assert_eq!(
            hilbert_poly_p1(&SheafP1::lines(&[1, -1])).unwrap(),
            HilbertPoly::from_ints(&[2, 2])
        );
        assert_eq!(
            hilbert_poly_p1(&SheafP1::lines(&[0])).unwrap(),
            HilbertPoly::from_ints(&[1, 1])
        );
        let t = SheafP1::lines(&[]).with_torsion(zero_point(), 2);
        assert_eq!(hilbert_poly_p1(&t).unwrap(), HilbertPoly::from_ints(&[2]));
        assert_eq!(
            hilbert_poly_p1(&SheafP1::lines(&[])),
            Err(SheafError::ZeroSheaf)
        );
    }

    #[test]
    fn cohomology_examples() {
        assert_eq!(cohomology_dims(&SheafP1::lines(&[-1]), 0), (0, 0));
        assert_eq!(cohomology_dims(&SheafP1::lines(&[-3]), 0), (0, 2));
        assert_eq!(cohomology_dims(&SheafP1::lines(&[2]), 0), (3, 0));
    }

    #[test]
    fn regularity_examples() {
        assert_eq!(regularity_bound(&SheafP1::lines(&[1, -1])), 1);
        assert_eq!(regularity_bound(&SheafP1::lines(&[0, 0])), 0);
        assert_eq!(
            regularity_bound(&SheafP1::lines(&[]).with_torsion(Point::Infinity, 1)),
            0
        );
    }

    #[test]
    fn hn_type_examples() {
        let e = SheafP1::lines(&[1, -1]).with_torsion(zero_point(), 2);
        let t = sheaf_hn_type(&e).unwrap();
        assert_eq!(
            t.entries,
            vec![
                HilbertPoly::from_ints(&[2]),
                HilbertPoly::from_ints(&[2, 1]),
                HilbertPoly::from_ints(&[0, 1])
            ]
        );
        assert!(is_hn_type(&t.entries, &hilbert_poly_p1(&e).unwrap()));
        assert_eq!(
            sheaf_hn_type(&SheafP1::lines(&[3, 3])).unwrap().entries,
            vec![HilbertPoly::from_ints(&[8, 2])]
        );
        assert_eq!(
            sheaf_hn_type(&SheafP1::lines(&[2, 2, 0])).unwrap().entries,
            vec![
                HilbertPoly::from_ints(&[6, 2]),
                HilbertPoly::from_ints(&[1, 1])
            ]
        );
    }

    #[test]
    fn phi_examples() {
        let r = phi_nm(&SheafP1::lines(&[0]), 0, 1).unwrap();
        assert_eq!(r.dims(), &[1, 2]);
        assert_eq!(r.maps()[0], ints(&[&[1], &[0]]));
        assert_eq!(r.maps()[1], ints(&[&[0], &[1]]));
        let r = phi_nm(&SheafP1::lines(&[1, -1]), 1, 2).unwrap();
        assert_eq!(r.dims(), &[4, 6]);
        assert_eq!(r.maps().len(), 2);
        let r = phi_nm(&SheafP1::lines(&[]).with_torsion(zero_point(), 1), 0, 1).unwrap();
        assert_eq!(r.dims(), &[1, 1]);
        assert_eq!(r.maps()[0], ints(&[&[1]]));
        assert_eq!(r.maps()[1], ints(&[&[0]]));
        assert!(matches!(
            phi_nm(&SheafP1::lines(&[1, -1]), 0, 2),
            Err(SheafError::NotRegular { n: 0, bound: 1 })
        ));
    }

    #[test]
    fn torsion_at_general_points() {
        // x² on k[x]/((x−2)²): x² = 4 + 4(x−2) + (x−2)²
        let e = SheafP1::lines(&[]).with_torsion(Point::Finite(int(2)), 2);
        let r = phi_nm(&e, 0, 2).unwrap();
        assert_eq!(r.maps()[2], ints(&[&[4, 0], &[4, 4]]));
        // y² at infinity is u², zero on a length-2 block; x y is u.
        let e = SheafP1::lines(&[]).with_torsion(Point::Infinity, 2);
        let r = phi_nm(&e, 0, 2).unwrap();
        assert_eq!(r.maps()[0], ints(&[&[0, 0], &[0, 0]]));
        assert_eq!(r.maps()[1], ints(&[&[0, 0], &[1, 0]]));
        assert_eq!(r.maps()[2], ints(&[&[1, 0], &[0, 1]]));
    }

    #[test]
    fn phi_multi_examples() {
        let o = SheafP1::lines(&[0]);
        assert_eq!(phi_multi(&o, &[0, 1]).unwrap(), phi_nm(&o, 0, 1).unwrap());
        assert_eq!(phi_multi(&o, &[0, 1, 2]).unwrap().dims(), &[1, 2, 3]);
        let t = SheafP1::lines(&[]).with_torsion(zero_point(), 2);
        let r = phi_multi(&t, &[0, 1, 2]).unwrap();
        assert_eq!(r.dims(), &[2, 2, 2]);
        assert_eq!(r.maps()[1], ints(&[&[0, 0], &[1, 0]]));
    }

    #[test]
    fn ack_examples() {
        let opts = HnOptions::default();
        let r = verify_ack_hn(&SheafP1::lines(&[1, -1]), 1, 2, &opts).unwrap();
        assert_eq!(r.expected, vec![[3, 4], [1, 2]]);
        assert!(r.matched);
        let r = verify_ack_hn(&SheafP1::lines(&[1, 1]), 0, 1, &opts).unwrap();
        assert!(r.matched && r.semistable);
        for l in 1..=3 {
            let e = SheafP1::lines(&[]).with_torsion(zero_point(), l);
            let r = verify_ack_hn(&e, 0, 3, &opts).unwrap();
            assert_eq!(r.expected, vec![[l as i64, l as i64]]);
            assert!(r.matched);
        }
    }

    #[test]
    fn destabilizing_slope() {
        let e = SheafP1::lines(&[1, -1]);
        let rep = phi_nm(&e, 1, 2).unwrap();
        let sp = StabilityPair::new(vec![-6, 4], vec![6, 4], vec![4, 6]).unwrap();
        let hn = hn_filtration_quiver(&rep, &sp, &HnOptions::default()).unwrap();
        assert_eq!(hn.slopes[0], crate::exact::rat(-1, 17));
        assert!(!is_theta_semistable(&rep, &sp, &HnOptions::default()).unwrap());
    }

    #[test]
    fn torsion_at_one_uses_primes() {
        let e = SheafP1::lines(&[0]).with_torsion(Point::Finite(int(1)), 2);
        let r = verify_ack_hn(&e, 0, 3, &HnOptions::default()).unwrap();
        assert!(r.oracles.contains(&"multi-prime".to_string()));
        assert_eq!(r.primes.len(), 3);
        assert!(r.matched);
    }

    #[test]
    fn grid_examples() {
        let opts = HnOptions::default();
        let g = threshold_grid(&SheafP1::lines(&[0, 0]), 2, 4, &opts);
        assert!(g.cells.iter().all(|c| c.matched == Some(true)));
        let g = threshold_grid(&SheafP1::lines(&[1, -1]), 2, 4, &opts);
        assert!(g.cells.iter().any(|c| c.n == 1 && c.m == 2));
        let g = threshold_grid(&SheafP1::lines(&[-3]), 2, 4, &opts);
        assert!(g.cells.is_empty() && g.minimal.is_none());
    }

    #[test]
    fn sheaf_json() {
        let e: SheafP1 =
            serde_json::from_str(r#"{ "line_degrees": [1, -1], "torsion": [ { "point": "0", "length": 2 }, { "point": "inf", "length": 1 } ] }"#)
                .unwrap();
        assert_eq!(e.torsion[1].point, Point::Infinity);
        let back: SheafP1 = serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
        assert_eq!(back, e);
        assert!(serde_json::from_str::<SheafP1>(
            r#"{ "line_degrees": [], "torsion": [ { "point": "x", "length": 1 } ] }"#
        )
        .is_err());
    }

    #[test]
    fn multi_vertex_examples() {
        let opts = HnOptions::default();
        let r = verify_multi_vertex(&SheafP1::lines(&[0, 0]), &[0, 1, 2], &opts).unwrap();
        assert!(r.matched && r.semistable);
        assert_eq!(r.expected, vec![vec![2, 4, 6]]);
        let r = verify_multi_vertex(&SheafP1::lines(&[2, 0]), &[1, 2, 3], &opts).unwrap();
        assert_eq!(r.expected, vec![vec![4, 5, 6], vec![2, 3, 4]]);
        assert!(r.matched && !r.semistable);
        assert!(verify_multi_vertex(&SheafP1::lines(&[-2]), &[0, 1], &opts).is_err());
    }
}
