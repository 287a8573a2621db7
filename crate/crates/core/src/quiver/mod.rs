//! Quiver representations over exact fields, King semistability and
//! `(θ, α)` Harder–Narasimhan filtrations.
//!
//! Semistability and HN filtrations need the full lattice of
//! subrepresentations, which is only decidable here through complete oracles:
//!
//! * over `F_p`, exhaustive enumeration of arrow-closed subspace tuples;
//! * over `Q`, the representation is split into its block-diagonal
//!   components; a component admitting a torus grading with one-dimensional
//!   weight spaces is handled by an exact search over coordinate subspaces,
//!   any other component is reduced modulo several primes and must give the
//!   same answer at every prime.

mod hesselink;
mod oracle;

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{
    int, is_zero_matrix, mat_mul, parse_rational, ExactError, Field, Matrix, PrimeField, RatStr,
    Rational, RationalField,
};

pub use hesselink::{
    is_semistable_at_own_slope, lambda_gamma, limit_exists, pairing_rho_theta,
    verify_hn_equals_hesselink, Competitor, DominanceReport, LambdaGamma, VerifyBudget,
};
pub use oracle::{
    count_subspaces, enumerate_subreps_ff, enumerate_subspaces, hn_filtration_quiver,
    is_subrepresentation, is_theta_semistable, subquotients, HnOptions, OracleKind, QuiverHnResult,
};

pub type DimVector = Vec<usize>;

/// Per-vertex list of basis vectors (rows), each in reduced echelon form.
pub type SubspaceTuple = Vec<Vec<Vec<Rational>>>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuiverError {
    #[error("invalid quiver: {0}")]
    InvalidQuiver(String),
    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),
    #[error("invalid stability pair: {0}")]
    InvalidStability(String),
    #[error("zero dimension vector has no slope")]
    ZeroDimension,
    #[error("subspace budget exceeded: {count} subspace tuples > budget {budget}")]
    BudgetExceeded { count: u128, budget: u128 },
    #[error("undecidable under configured oracle: {0}")]
    Undecidable(String),
    #[error("internal error: maximal destabilizing subrepresentation not unique ({0} candidates)")]
    NonUniqueDestabilizer(usize),
    #[error("oracle disagreement across primes: {0}")]
    PrimeDisagreement(String),
    #[error("invalid HN type: {0}")]
    InvalidHnType(String),
    #[error("malformed subspace data: {0}")]
    MalformedSubspace(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// A term `coeff · path`; the path lists arrows in the order they are
/// traversed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationTerm {
    pub coeff: i64,
    pub path: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub terms: Vec<RelationTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quiver {
    vertices: Vec<String>,
    arrows: Vec<(usize, usize)>,
    relations: Vec<Relation>,
}

impl Quiver {
    pub fn new(
        vertices: Vec<String>,
        arrows: Vec<(usize, usize)>,
        relations: Vec<Relation>,
    ) -> Result<Self, QuiverError> {
        let n = vertices.len();
        for (i, &(t, h)) in arrows.iter().enumerate() {
            if t >= n || h >= n {
                return Err(QuiverError::InvalidQuiver(format!(
                    "arrow {i} references a missing vertex"
                )));
            }
        }
        let q = Quiver {
            vertices,
            arrows,
            relations,
        };
        for (ri, rel) in q.relations.iter().enumerate() {
            let mut ends = None;
            for term in &rel.terms {
                let e = q.path_endpoints(&term.path).ok_or_else(|| {
                    QuiverError::InvalidQuiver(format!("relation {ri} has a non-composable path"))
                })?;
                match ends {
                    None => ends = Some(e),
                    Some(prev) if prev != e => {
                        return Err(QuiverError::InvalidQuiver(format!(
                            "relation {ri} mixes paths with different endpoints"
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(q)
    }

    /// `(start, end)` of a nonempty composable path.
    fn path_endpoints(&self, path: &[usize]) -> Option<(usize, usize)> {
        let first = *path.first()?;
        let mut cur = self.arrows.get(first)?.1;
        for &a in &path[1..] {
            let &(t, h) = self.arrows.get(a)?;
            if t != cur {
                return None;
            }
            cur = h;
        }
        Some((self.arrows[first].0, cur))
    }

    /// One arrow `0 → 1`.
    pub fn a2() -> Self {
        Quiver::kronecker(1)
    }

    /// Two vertices with `k` parallel arrows `0 → 1`.
    pub fn kronecker(k: usize) -> Self {
        Quiver {
            vertices: vec!["0".into(), "1".into()],
            arrows: vec![(0, 1); k],
            relations: Vec::new(),
        }
    }

    /// Chain `0 → 1 → … → (counts.len())` with `counts[i]` arrows from `i`
    /// to `i + 1`.
    pub fn chain(counts: &[usize]) -> Self {
        let vertices = (0..=counts.len()).map(|i| i.to_string()).collect();
        let arrows = counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n((i, i + 1), c))
            .collect();
        Quiver {
            vertices,
            arrows,
            relations: Vec::new(),
        }
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn arrows(&self) -> &[(usize, usize)] {
        &self.arrows
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Rationals,
    Prime(u64),
}

impl FieldKind {
    pub fn label(&self) -> String {
        match self {
            FieldKind::Rationals => "Q".into(),
            FieldKind::Prime(p) => format!("F{p}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self, QuiverError> {
        if s == "Q" {
            return Ok(FieldKind::Rationals);
        }
        let p = s
            .strip_prefix('F')
            .and_then(|x| x.parse::<u64>().ok())
            .filter(|&p| PrimeField::new(p).is_some())
            .ok_or_else(|| QuiverError::InvalidRepresentation(format!("unknown field {s:?}")))?;
        Ok(FieldKind::Prime(p))
    }
}

/// `(θ, α)` together with the ambient dimension vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityPair {
    pub theta: Vec<i64>,
    pub alpha: Vec<i64>,
    pub ambient: DimVector,
}

impl StabilityPair {
    pub fn new(theta: Vec<i64>, alpha: Vec<i64>, ambient: DimVector) -> Result<Self, QuiverError> {
        if theta.len() != ambient.len() || alpha.len() != ambient.len() {
            return Err(QuiverError::InvalidStability("length mismatch".into()));
        }
        if alpha.iter().any(|&a| a < 1) {
            return Err(QuiverError::InvalidStability(
                "alpha entries must be ≥ 1".into(),
            ));
        }
        let sp = StabilityPair {
            theta,
            alpha,
            ambient,
        };
        if sp.theta_of(&sp.ambient) != 0 {
            return Err(QuiverError::InvalidStability("θ · d ≠ 0".into()));
        }
        Ok(sp)
    }

    pub fn theta_of(&self, d: &[usize]) -> i64 {
        self.theta.iter().zip(d).map(|(t, &x)| t * x as i64).sum()
    }

    pub fn alpha_of(&self, d: &[usize]) -> i64 {
        self.alpha.iter().zip(d).map(|(a, &x)| a * x as i64).sum()
    }
}

/// `θ(d) / α(d)`.
pub fn slope(d: &[usize], sp: &StabilityPair) -> Result<Rational, QuiverError> {
    slope_of(d, &sp.theta, &sp.alpha)
}

pub(crate) fn slope_of(d: &[usize], theta: &[i64], alpha: &[i64]) -> Result<Rational, QuiverError> {
    let a: i64 = alpha.iter().zip(d).map(|(a, &x)| a * x as i64).sum();
    if a == 0 {
        return Err(QuiverError::ZeroDimension);
    }
    let t: i64 = theta.iter().zip(d).map(|(t, &x)| t * x as i64).sum();
    Ok(Rational::new(t.into(), a.into()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuiverRepresentation {
    quiver: Quiver,
    field: FieldKind,
    dims: DimVector,
    maps: Vec<Matrix<Rational>>,
}

impl QuiverRepresentation {
    /// Validates shapes; over `F_p` entries are reduced to residues in `0..p`.
    pub fn new(
        quiver: Quiver,
        field: FieldKind,
        dims: DimVector,
        maps: Vec<Matrix<Rational>>,
    ) -> Result<Self, QuiverError> {
        if dims.len() != quiver.num_vertices() {
            return Err(QuiverError::InvalidRepresentation(
                "dimension vector length differs from vertex count".into(),
            ));
        }
        if maps.len() != quiver.arrows.len() {
            return Err(QuiverError::InvalidRepresentation(format!(
                "expected {} arrow matrices, got {}",
                quiver.arrows.len(),
                maps.len()
            )));
        }
        for (i, (m, &(t, h))) in maps.iter().zip(&quiver.arrows).enumerate() {
            if m.rows() != dims[h] || m.cols() != dims[t] {
                return Err(QuiverError::InvalidRepresentation(format!(
                    "arrow {i} matrix is {}×{}, expected {}×{}",
                    m.rows(),
                    m.cols(),
                    dims[h],
                    dims[t]
                )));
            }
        }
        let maps = match field {
            FieldKind::Rationals => maps,
            FieldKind::Prime(p) => {
                let f = PrimeField::new(p).ok_or_else(|| {
                    QuiverError::InvalidRepresentation(format!("{p} is not a supported prime"))
                })?;
                maps.iter()
                    .map(|m| {
                        m.try_map(|x| {
                            f.reduce(x).map(|r| int(r as i64)).ok_or_else(|| {
                                QuiverError::InvalidRepresentation(format!(
                                    "entry {x} not defined mod {p}"
                                ))
                            })
                        })
                    })
                    .collect::<Result<_, _>>()?
            }
        };
        Ok(QuiverRepresentation {
            quiver,
            field,
            dims,
            maps,
        })
    }

    pub fn from_int_maps(
        quiver: Quiver,
        field: FieldKind,
        dims: DimVector,
        maps: Vec<Vec<Vec<i64>>>,
    ) -> Result<Self, QuiverError> {
        let mats = maps
            .into_iter()
            .zip(&quiver.arrows)
            .map(|(rows, &(t, _))| {
                Matrix::from_rows(
                    rows.into_iter()
                        .map(|r| r.into_iter().map(int).collect())
                        .collect(),
                    dims[t],
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        QuiverRepresentation::new(quiver, field, dims, mats)
    }

    pub fn quiver(&self) -> &Quiver {
        &self.quiver
    }

    pub fn field(&self) -> FieldKind {
        self.field
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn maps(&self) -> &[Matrix<Rational>] {
        &self.maps
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub(crate) fn to_rep<F: Field>(
        &self,
        f: &F,
        conv: impl Fn(&Rational) -> F::Elem,
    ) -> Rep<F::Elem> {
        let _ = f;
        Rep {
            dims: self.dims.clone(),
            arrows: self.quiver.arrows.clone(),
            maps: self.maps.iter().map(|m| m.map(&conv)).collect(),
        }
    }

    pub(crate) fn prime_rep(&self) -> Option<(PrimeField, Rep<u64>)> {
        let FieldKind::Prime(p) = self.field else {
            return None;
        };
        let f = PrimeField::new(p)?;
        let rep = self.to_rep(&f, |x| f.reduce(x).expect("validated residue"));
        Some((f, rep))
    }

    pub(crate) fn rational_rep(&self) -> Rep<Rational> {
        self.to_rep(&RationalField, Rational::clone)
    }
}

/// Field-generic working copy of a representation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Rep<E> {
    pub dims: Vec<usize>,
    pub arrows: Vec<(usize, usize)>,
    pub maps: Vec<Matrix<E>>,
}

fn path_matrix<F: Field>(f: &F, rep: &Rep<F::Elem>, path: &[usize]) -> Matrix<F::Elem> {
    let mut acc = rep.maps[path[0]].clone();
    for &a in &path[1..] {
        acc = mat_mul(f, &rep.maps[a], &acc);
    }
    acc
}

fn relations_hold<F: Field>(f: &F, rep: &Rep<F::Elem>, relations: &[Relation]) -> bool {
    relations.iter().all(|rel| {
        let mut sum: Option<Matrix<F::Elem>> = None;
        for term in &rel.terms {
            let c = f.from_i64(term.coeff);
            let m = path_matrix(f, rep, &term.path).map(|x| f.mul(&c, x));
            sum = Some(match sum {
                None => m,
                Some(s) => {
                    Matrix::from_fn(s.rows(), s.cols(), |i, j| f.add(s.get(i, j), m.get(i, j)))
                }
            });
        }
        sum.is_none_or(|s| is_zero_matrix(f, &s))
    })
}

/// True iff every relation evaluates to the zero matrix.
pub fn check_relations(rep: &QuiverRepresentation) -> bool {
    match rep.prime_rep() {
        Some((f, r)) => relations_hold(&f, &r, &rep.quiver.relations),
        None => relations_hold(&RationalField, &rep.rational_rep(), &rep.quiver.relations),
    }
}

/// The subrepresentation spanned by `sub`, written in the given bases.
pub(crate) fn restrict<F: Field>(
    f: &F,
    rep: &Rep<F::Elem>,
    sub: &[Vec<Vec<F::Elem>>],
) -> Rep<F::Elem> {
    let dims: Vec<usize> = sub.iter().map(|b| b.len()).collect();
    let maps = rep
        .arrows
        .iter()
        .zip(&rep.maps)
        .map(|(&(t, h), m)| {
            let cols: Vec<Vec<F::Elem>> = sub[t]
                .iter()
                .map(|u| coordinates_in(f, &sub[h], &crate::exact::mat_vec(f, m, u)))
                .collect();
            Matrix::from_fn(dims[h], dims[t], |i, j| cols[j][i].clone())
        })
        .collect();
    Rep {
        dims,
        arrows: rep.arrows.clone(),
        maps,
    }
}

/// Coordinates of `v` in the basis `basis` (rows); `v` must lie in the span.
pub(crate) fn coordinates_in<F: Field>(
    f: &F,
    basis: &[Vec<F::Elem>],
    v: &[F::Elem],
) -> Vec<F::Elem> {
    let k = basis.len();
    if k == 0 {
        return Vec::new();
    }
    let n = v.len();
    // Solve Bᵀ x = v via the augmented system.
    let aug = Matrix::from_fn(n, k + 1, |i, j| {
        if j < k {
            basis[j][i].clone()
        } else {
            v[i].clone()
        }
    });
    let (r, piv) = crate::exact::rref(f, &aug);
    let mut x = vec![f.zero(); k];
    for (row, &c) in piv.iter().enumerate() {
        assert!(c < k, "vector not in span");
        x[c] = r.get(row, k).clone();
    }
    x
}

/// The relations induced on a subrepresentation hold (subrepresentations of
/// representations with relations satisfy the relations).
pub fn subrep_satisfies_relations(rep: &QuiverRepresentation, sub: &SubspaceTuple) -> bool {
    match rep.prime_rep() {
        Some((f, r)) => {
            let s: Vec<Vec<Vec<u64>>> = sub
                .iter()
                .map(|b| {
                    b.iter()
                        .map(|v| v.iter().map(|x| f.reduce(x).unwrap()).collect())
                        .collect()
                })
                .collect();
            relations_hold(&f, &restrict(&f, &r, &s), &rep.quiver.relations)
        }
        None => {
            let r = rep.rational_rep();
            relations_hold(
                &RationalField,
                &restrict(&RationalField, &r, sub),
                &rep.quiver.relations,
            )
        }
    }
}

/// Wire format of a representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationJson {
    pub vertices: Vec<String>,
    pub arrows: Vec<[usize; 2]>,
    #[serde(default)]
    pub relations: Vec<Relation>,
    pub field: String,
    pub dims: BTreeMap<String, usize>,
    pub maps: BTreeMap<String, Vec<Vec<RatStr>>>,
}

impl RepresentationJson {
    pub fn into_representation(self) -> Result<QuiverRepresentation, QuiverError> {
        let arrows: Vec<(usize, usize)> = self.arrows.iter().map(|a| (a[0], a[1])).collect();
        let quiver = Quiver::new(self.vertices.clone(), arrows.clone(), self.relations)?;
        let field = FieldKind::parse(&self.field)?;
        let dims = self
            .vertices
            .iter()
            .map(|v| {
                self.dims.get(v).copied().ok_or_else(|| {
                    QuiverError::InvalidRepresentation(format!(
                        "missing dimension for vertex {v:?}"
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut maps = Vec::with_capacity(arrows.len());
        for (i, &(t, h)) in arrows.iter().enumerate() {
            let m = match self.maps.get(&i.to_string()) {
                Some(rows) => Matrix::from_rows(
                    rows.iter()
                        .map(|r| r.iter().map(|x| x.0.clone()).collect())
                        .collect(),
                    dims[t],
                )?,
                None if dims[t] == 0 || dims[h] == 0 => {
                    Matrix::filled(dims[h], dims[t], Rational::zero())
                }
                None => {
                    return Err(QuiverError::InvalidRepresentation(format!(
                        "missing matrix for arrow {i}"
                    )))
                }
            };
            maps.push(m);
        }
        QuiverRepresentation::new(quiver, field, dims, maps)
    }

    pub fn from_representation(rep: &QuiverRepresentation) -> Self {
        RepresentationJson {
            vertices: rep.quiver.vertices.clone(),
            arrows: rep.quiver.arrows.iter().map(|&(t, h)| [t, h]).collect(),
            relations: rep.quiver.relations.clone(),
            field: rep.field.label(),
            dims: rep
                .quiver
                .vertices
                .iter()
                .cloned()
                .zip(rep.dims.iter().copied())
                .collect(),
            maps: rep
                .maps
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    (
                        i.to_string(),
                        m.row_vecs()
                            .into_iter()
                            .map(|r| r.into_iter().map(RatStr).collect())
                            .collect(),
                    )
                })
                .collect(),
        }
    }
}

/// Parses a matrix of rational strings.
pub fn parse_matrix(rows: &[Vec<String>]) -> Result<Matrix<Rational>, ExactError> {
    let cols = rows.first().map_or(0, |r| r.len());
    Matrix::from_rows(
        rows.iter()
            .map(|r| {
                r.iter()
                    .map(|s| parse_rational(s))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?,
        cols,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn sp(theta: &[i64], alpha: &[i64], d: &[usize]) -> StabilityPair {
        StabilityPair::new(theta.to_vec(), alpha.to_vec(), d.to_vec()).unwrap()
    }

    #[test]
    fn slope_examples() {
        let s = sp(&[-1, 1], &[1, 1], &[1, 1]);
        assert_eq!(slope(&[1, 0], &s).unwrap(), int(-1));
        assert_eq!(slope(&[1, 1], &s).unwrap(), int(0));
        assert_eq!(slope(&[0, 1], &s).unwrap(), int(1));
        assert_eq!(slope(&[0, 0], &s), Err(QuiverError::ZeroDimension));
        let s = sp(&[-3, 2], &[1, 2], &[2, 3]);
        assert_eq!(slope(&[1, 1], &s).unwrap(), rat(-1, 3));
    }

    #[test]
    fn stability_pair_validation() {
        assert!(StabilityPair::new(vec![-1, 1], vec![1, 1], vec![1, 2]).is_err());
        assert!(StabilityPair::new(vec![-1, 1], vec![0, 1], vec![1, 1]).is_err());
    }

    fn one_loop() -> Quiver {
        Quiver::new(
            vec!["v".into()],
            vec![(0, 0)],
            vec![Relation {
                terms: vec![RelationTerm {
                    coeff: 1,
                    path: vec![0, 0],
                }],
            }],
        )
        .unwrap()
    }

    #[test]
    fn relation_examples() {
        let free = QuiverRepresentation::from_int_maps(
            Quiver::a2(),
            FieldKind::Rationals,
            vec![1, 1],
            vec![vec![vec![1]]],
        )
        .unwrap();
        assert!(check_relations(&free));
        let nil = QuiverRepresentation::from_int_maps(
            one_loop(),
            FieldKind::Rationals,
            vec![2],
            vec![vec![vec![0, 1], vec![0, 0]]],
        )
        .unwrap();
        assert!(check_relations(&nil));
        let id = QuiverRepresentation::from_int_maps(
            one_loop(),
            FieldKind::Rationals,
            vec![2],
            vec![vec![vec![1, 0], vec![0, 1]]],
        )
        .unwrap();
        assert!(!check_relations(&id));
    }

    #[test]
    fn invalid_quivers_rejected() {
        assert!(Quiver::new(vec!["a".into()], vec![(0, 1)], vec![]).is_err());
        let bad = Relation {
            terms: vec![
                RelationTerm {
                    coeff: 1,
                    path: vec![0],
                },
                RelationTerm {
                    coeff: 1,
                    path: vec![1],
                },
            ],
        };
        assert!(Quiver::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![(0, 1), (0, 2)],
            vec![bad]
        )
        .is_err());
    }

    #[test]
    fn representation_shape_checks() {
        assert!(QuiverRepresentation::from_int_maps(
            Quiver::a2(),
            FieldKind::Rationals,
            vec![1, 2],
            vec![vec![vec![1]]],
        )
        .is_err());
        let r = QuiverRepresentation::from_int_maps(
            Quiver::a2(),
            FieldKind::Prime(3),
            vec![1, 1],
            vec![vec![vec![-1]]],
        )
        .unwrap();
        assert_eq!(r.maps()[0].get(0, 0), &int(2));
    }

    #[test]
    fn json_round_trip() {
        let r = QuiverRepresentation::from_int_maps(
            Quiver::kronecker(2),
            FieldKind::Prime(3),
            vec![1, 2],
            vec![vec![vec![1], vec![0]], vec![vec![0], vec![2]]],
        )
        .unwrap();
        let j = RepresentationJson::from_representation(&r);
        let s = serde_json::to_string(&j).unwrap();
        let back: RepresentationJson = serde_json::from_str(&s).unwrap();
        assert_eq!(back.into_representation().unwrap(), r);
    }
}
