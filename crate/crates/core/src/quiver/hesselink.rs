//! The 1-PS attached to an HN type and the empirical check that it is the
//! adapted 1-PS of the representation.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    oracle::hn_with, slope_of, DimVector, HnOptions, QuiverError, QuiverRepresentation, Rep,
    StabilityPair, SubspaceTuple,
};
use crate::exact::{
    int, inverse, mat_mul, primitive_integral, row_space_basis, Field, Matrix, NormValue,
    PrimeField, Rational, RationalField,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaGamma {
    /// Rational weights per vertex, block by block.
    pub weights: Vec<Vec<Rational>>,
    /// Primitive integral rescaling; all zeros for the trivial type.
    pub primitive: Vec<Vec<i64>>,
}

/// `λ_γ`: block `i` of the type gets the weight `-θ(dᵢ)/α(dᵢ)`, repeated
/// `(dᵢ)_v` times at vertex `v`.
pub fn lambda_gamma(
    gamma: &[DimVector],
    theta: &[i64],
    alpha: &[i64],
) -> Result<LambdaGamma, QuiverError> {
    let nv = theta.len();
    if alpha.len() != nv || gamma.iter().any(|d| d.len() != nv) {
        return Err(QuiverError::InvalidHnType("length mismatch".into()));
    }
    let mut slopes: Vec<Rational> = Vec::with_capacity(gamma.len());
    for d in gamma {
        if d.iter().all(|&x| x == 0) {
            return Err(QuiverError::InvalidHnType("zero block".into()));
        }
        let s = slope_of(d, theta, alpha)?;
        if slopes.last().is_some_and(|prev| *prev >= s) {
            return Err(QuiverError::InvalidHnType(
                "slopes must strictly increase".into(),
            ));
        }
        slopes.push(s);
    }
    let mut weights = vec![Vec::new(); nv];
    for (d, s) in gamma.iter().zip(&slopes) {
        for v in 0..nv {
            weights[v].extend(std::iter::repeat_n(-s.clone(), d[v]));
        }
    }
    let flat: Vec<Rational> = weights.iter().flatten().cloned().collect();
    let prim = if flat.iter().all(|x| x.is_zero()) {
        vec![0; flat.len()]
    } else {
        primitive_integral(&flat)?
    };
    let mut it = prim.into_iter();
    let primitive = weights
        .iter()
        .map(|w| it.by_ref().take(w.len()).collect())
        .collect();
    Ok(LambdaGamma { weights, primitive })
}

/// `⟨ρ_θ, λ⟩ = Σ_v θ_v Σ_j λ_{v,j}`.
pub fn pairing_rho_theta(lambda: &[Vec<Rational>], theta: &[i64]) -> Rational {
    lambda
        .iter()
        .zip(theta)
        .map(|(w, &t)| w.iter().sum::<Rational>() * int(t))
        .sum()
}

fn graded<F: Field>(
    f: &F,
    rep: &Rep<F::Elem>,
    ge: impl Fn(usize, usize, usize, usize) -> bool,
) -> bool {
    rep.arrows.iter().zip(&rep.maps).all(|(&(t, h), m)| {
        (0..m.rows()).all(|i| (0..m.cols()).all(|j| f.is_zero(m.get(i, j)) || ge(h, i, t, j)))
    })
}

/// Whether `lim_{t→0} λ(t)·W` exists: every nonzero entry of every arrow
/// matrix goes from a weight to a weight at least as large.
pub fn limit_exists(
    rep: &QuiverRepresentation,
    lambda: &[Vec<Rational>],
) -> Result<bool, QuiverError> {
    if lambda.len() != rep.dims().len() || lambda.iter().zip(rep.dims()).any(|(w, &d)| w.len() != d)
    {
        return Err(QuiverError::InvalidRepresentation(
            "weight lists do not match the dimension vector".into(),
        ));
    }
    let r = rep.rational_rep();
    Ok(graded(&RationalField, &r, |h, i, t, j| {
        lambda[h][i] >= lambda[t][j]
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyBudget {
    /// Competitor weights range over `[-bound, bound]`.
    pub bound: i64,
    /// Number of random basis changes besides the HN-adapted basis.
    pub conjugates: usize,
    pub seed: u64,
}

impl Default for VerifyBudget {
    fn default() -> Self {
        VerifyBudget {
            bound: 3,
            conjugates: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Competitor {
    pub lambda: Vec<Vec<i64>>,
    pub value: NormValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominanceReport {
    pub gamma: Vec<DimVector>,
    pub lambda: LambdaGamma,
    /// `(⟨ρ_θ, λ'_γ⟩, ‖λ'_γ‖²_α)` for the primitive 1-PS.
    pub value: NormValue,
    pub semistable: bool,
    pub limit_exists: bool,
    pub frames: usize,
    pub competitors: u64,
    /// Competitor with the smallest normalized value over all frames.
    pub best: Option<Competitor>,
    pub violations: u64,
    pub passed: bool,
}

/// `a/√b < c/√d` for positive `b`, `d`.
fn value_cmp(a: i64, b: i64, c: i64, d: i64) -> Ordering {
    let sa = a.signum();
    let sc = c.signum();
    if sa != sc {
        return sa.cmp(&sc);
    }
    if sa == 0 {
        return Ordering::Equal;
    }
    let lhs = (a as i128) * (a as i128) * (d as i128);
    let rhs = (c as i128) * (c as i128) * (b as i128);
    if sa > 0 {
        lhs.cmp(&rhs)
    } else {
        rhs.cmp(&lhs)
    }
}

struct SearchResult {
    count: u64,
    best: Option<(Vec<i64>, i64, i64)>,
}

/// Minimum of `⟨ρ_θ, λ⟩/‖λ‖_α` over nonzero integral `λ` in `[-b, b]^N`
/// whose limit exists for the given support (edges `(tail, head)` demand
/// `w[head] ≥ w[tail]`).
fn search_competitors(
    vertex_of: &[usize],
    edges: &[(usize, usize)],
    theta: &[i64],
    alpha: &[i64],
    b: i64,
) -> SearchResult {
    let n = vertex_of.len();
    let mut by_last: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &(t, h) in edges {
        by_last[t.max(h)].push((t, h));
    }
    let mut w = vec![0i64; n];
    let mut out = SearchResult {
        count: 0,
        best: None,
    };

    #[allow(clippy::too_many_arguments)]
    fn rec(
        k: usize,
        w: &mut Vec<i64>,
        by_last: &[Vec<(usize, usize)>],
        vertex_of: &[usize],
        theta: &[i64],
        alpha: &[i64],
        b: i64,
        out: &mut SearchResult,
    ) {
        if k == w.len() {
            let norm: i64 = w
                .iter()
                .enumerate()
                .map(|(i, x)| alpha[vertex_of[i]] * x * x)
                .sum();
            if norm == 0 {
                return;
            }
            let pairing: i64 = w
                .iter()
                .enumerate()
                .map(|(i, x)| theta[vertex_of[i]] * x)
                .sum();
            out.count += 1;
            let better = match &out.best {
                None => true,
                Some((_, p, q)) => value_cmp(pairing, norm, *p, *q) == Ordering::Less,
            };
            if better {
                out.best = Some((w.clone(), pairing, norm));
            }
            return;
        }
        for x in -b..=b {
            w[k] = x;
            if by_last[k].iter().all(|&(t, h)| w[h] >= w[t]) {
                rec(k + 1, w, by_last, vertex_of, theta, alpha, b, out);
            }
        }
    }

    if n > 0 {
        rec(0, &mut w, &by_last, vertex_of, theta, alpha, b, &mut out);
    }
    out
}

/// Basis per vertex adapted to the flag, with the block index of each vector.
fn adapted_basis<F: Field>(
    f: &F,
    dims: &[usize],
    steps: &[Vec<Vec<Vec<F::Elem>>>],
) -> (Vec<Vec<Vec<F::Elem>>>, Vec<Vec<usize>>) {
    let nv = dims.len();
    let mut basis: Vec<Vec<Vec<F::Elem>>> = vec![Vec::new(); nv];
    let mut block: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (i, step) in steps.iter().enumerate() {
        for v in 0..nv {
            for x in &step[v] {
                let mut trial = basis[v].clone();
                trial.push(x.clone());
                if row_space_basis(f, &trial, dims[v]).len() > basis[v].len() {
                    basis[v] = trial;
                    block[v].push(i);
                }
            }
        }
    }
    (basis, block)
}

fn conjugate<F: Field>(f: &F, rep: &Rep<F::Elem>, frames: &[Matrix<F::Elem>]) -> Rep<F::Elem> {
    let maps = rep
        .arrows
        .iter()
        .zip(&rep.maps)
        .map(|(&(t, h), m)| {
            let inv = inverse(f, &frames[h]).expect("frame is invertible");
            mat_mul(f, &inv, &mat_mul(f, m, &frames[t]))
        })
        .collect();
    Rep {
        dims: rep.dims.clone(),
        arrows: rep.arrows.clone(),
        maps,
    }
}

fn support_edges<F: Field>(f: &F, rep: &Rep<F::Elem>) -> Vec<(usize, usize)> {
    let offsets: Vec<usize> = rep
        .dims
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let mut edges = Vec::new();
    for (&(t, h), m) in rep.arrows.iter().zip(&rep.maps) {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if !f.is_zero(m.get(i, j)) {
                    edges.push((offsets[t] + j, offsets[h] + i));
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

#[allow(clippy::too_many_arguments)]
fn verify_inner<F: Field>(
    f: &F,
    rep: &Rep<F::Elem>,
    steps: &[Vec<Vec<Vec<F::Elem>>>],
    gamma: Vec<DimVector>,
    lambda: LambdaGamma,
    sp: &StabilityPair,
    budget: &VerifyBudget,
    mut random_elem: impl FnMut(&mut ChaCha8Rng) -> F::Elem,
) -> DominanceReport {
    let dims = rep.dims.clone();
    let nv = dims.len();
    let vertex_of: Vec<usize> = dims
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| std::iter::repeat_n(v, d))
        .collect();
    let (basis, block) = adapted_basis(f, &dims, steps);
    let frame_of = |b: &[Vec<F::Elem>], d: usize| Matrix::from_fn(d, d, |i, j| b[j][i].clone());
    let adapted_frames: Vec<Matrix<F::Elem>> =
        (0..nv).map(|v| frame_of(&basis[v], dims[v])).collect();
    let adapted = conjugate(f, rep, &adapted_frames);
    let prim = &lambda.primitive;
    // Blocks come in the basis order, so λ'_γ is already aligned.
    debug_assert!((0..nv).all(|v| block[v].windows(2).all(|x| x[0] <= x[1])));
    let lim = graded(f, &adapted, |h, i, t, j| prim[h][i] >= prim[t][j]);
    let pairing: i64 = prim
        .iter()
        .zip(&sp.theta)
        .map(|(w, t)| t * w.iter().sum::<i64>())
        .sum();
    let norm: i64 = prim
        .iter()
        .zip(&sp.alpha)
        .map(|(w, a)| a * w.iter().map(|x| x * x).sum::<i64>())
        .sum();
    let semistable = gamma.len() <= 1;

    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut reps = vec![adapted];
    for _ in 0..budget.conjugates {
        let frames: Vec<Matrix<F::Elem>> = dims
            .iter()
            .map(|&d| loop {
                let g = Matrix::from_fn(d, d, |_, _| random_elem(&mut rng));
                if inverse(f, &g).is_some() {
                    break g;
                }
            })
            .collect();
        reps.push(conjugate(f, rep, &frames));
    }

    let mut cache: BTreeMap<Vec<(usize, usize)>, (u64, Option<(Vec<i64>, i64, i64)>)> =
        BTreeMap::new();
    let mut competitors = 0u64;
    let mut violations = 0u64;
    let mut best: Option<(Vec<i64>, i64, i64)> = None;
    for r in &reps {
        let edges = support_edges(f, r);
        let (count, local) = cache
            .entry(edges)
            .or_insert_with_key(|e| {
                let s = search_competitors(&vertex_of, e, &sp.theta, &sp.alpha, budget.bound);
                (s.count, s.best)
            })
            .clone();
        competitors += count;
        if let Some((w, p, q)) = local {
            let beats = if semistable {
                p < 0
            } else {
                value_cmp(p, q, pairing, norm) == Ordering::Less
            };
            if beats {
                violations += 1;
            }
            let improve = match &best {
                None => true,
                Some((_, bp, bq)) => value_cmp(p, q, *bp, *bq) == Ordering::Less,
            };
            if improve {
                best = Some((w, p, q));
            }
        }
    }
    let best = best.map(|(w, p, q)| {
        let mut it = w.into_iter();
        Competitor {
            lambda: dims
                .iter()
                .map(|&d| it.by_ref().take(d).collect())
                .collect(),
            value: NormValue::from_ints(p, q),
        }
    });
    DominanceReport {
        gamma,
        lambda,
        value: NormValue::from_ints(pairing, norm),
        semistable,
        limit_exists: lim,
        frames: reps.len(),
        competitors,
        best,
        violations,
        passed: lim && violations == 0,
    }
}

/// Checks that `λ_γ` is adapted: its limit exists in an HN-adapted basis and
/// no integral 1-PS with bounded weights, in that basis or in random other
/// bases, has a limit and a strictly smaller value `⟨ρ_θ, λ⟩/‖λ‖_α`.
pub fn verify_hn_equals_hesselink(
    rep: &QuiverRepresentation,
    sp: &StabilityPair,
    budget: &VerifyBudget,
    opts: &HnOptions,
) -> Result<DominanceReport, QuiverError> {
    let hn = super::hn_filtration_quiver(rep, sp, opts)?;
    let filtration = hn.filtration.clone().ok_or_else(|| {
        QuiverError::Undecidable("dominance check needs an explicit filtration".into())
    })?;
    let lambda = lambda_gamma(&hn.gamma, &sp.theta, &sp.alpha)?;
    Ok(match rep.prime_rep() {
        Some((f, r)) => {
            let steps = reduce_steps(&f, &filtration)?;
            let p = f.modulus();
            verify_inner(&f, &r, &steps, hn.gamma, lambda, sp, budget, |rng| {
                rng.gen_range(0..p)
            })
        }
        None => verify_inner(
            &RationalField,
            &rep.rational_rep(),
            &filtration,
            hn.gamma,
            lambda,
            sp,
            budget,
            |rng| int(rng.gen_range(-3..=3)),
        ),
    })
}

fn reduce_steps(
    f: &PrimeField,
    steps: &[SubspaceTuple],
) -> Result<Vec<Vec<Vec<Vec<u64>>>>, QuiverError> {
    steps
        .iter()
        .map(|s| {
            s.iter()
                .map(|b| {
                    b.iter()
                        .map(|v| v.iter().map(|x| f.reduce(x)).collect::<Option<Vec<_>>>())
                        .collect::<Option<Vec<_>>>()
                })
                .collect::<Option<Vec<_>>>()
        })
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| QuiverError::MalformedSubspace("entry not defined mod p".into()))
}

/// Semistability with respect to `(θ, α)` where `θ(d)` need not vanish: no
/// subrepresentation has smaller slope than the whole.
pub fn is_semistable_at_own_slope(
    sub: &QuiverRepresentation,
    theta: &[i64],
    alpha: &[i64],
    opts: &HnOptions,
) -> Result<bool, QuiverError> {
    Ok(hn_with(sub, theta, alpha, opts)?.gamma.len() <= 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quiver::{FieldKind, Quiver};

    fn ints(v: &[&[i64]]) -> Vec<Vec<Rational>> {
        v.iter()
            .map(|w| w.iter().map(|&x| int(x)).collect())
            .collect()
    }

    #[test]
    fn lambda_gamma_examples() {
        let l = lambda_gamma(&[vec![1, 0], vec![0, 1]], &[-1, 1], &[1, 1]).unwrap();
        assert_eq!(l.weights, ints(&[&[1], &[-1]]));
        assert_eq!(l.primitive, vec![vec![1], vec![-1]]);
        let l = lambda_gamma(&[vec![2, 3]], &[-3, 2], &[1, 1]).unwrap();
        assert!(l.weights.iter().flatten().all(|x| x.is_zero()));
        assert_eq!(l.primitive, vec![vec![0, 0], vec![0, 0, 0]]);
        let l = lambda_gamma(&[vec![1, 0], vec![1, 2]], &[-2, 1], &[1, 1]).unwrap();
        assert_eq!(l.weights, ints(&[&[2, 0], &[0, 0]]));
        assert_eq!(l.primitive, vec![vec![1, 0], vec![0, 0]]);
        assert!(lambda_gamma(&[vec![0, 1], vec![1, 0]], &[-1, 1], &[1, 1]).is_err());
        assert!(lambda_gamma(&[vec![0, 0]], &[-1, 1], &[1, 1]).is_err());
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(pairing_rho_theta(&ints(&[&[1], &[-1]]), &[-1, 1]), int(-2));
        assert_eq!(pairing_rho_theta(&ints(&[&[0], &[0]]), &[-1, 1]), int(0));
        assert_eq!(
            pairing_rho_theta(&ints(&[&[2, 0], &[0, 0]]), &[-2, 1]),
            int(-4)
        );
    }

    #[test]
    fn limit_examples() {
        let rep = |m: i64| {
            QuiverRepresentation::from_int_maps(
                Quiver::a2(),
                FieldKind::Rationals,
                vec![1, 1],
                vec![vec![vec![m]]],
            )
            .unwrap()
        };
        assert!(limit_exists(&rep(0), &ints(&[&[5], &[-5]])).unwrap());
        assert!(!limit_exists(&rep(1), &ints(&[&[1], &[-1]])).unwrap());
        assert!(limit_exists(&rep(1), &ints(&[&[-1], &[1]])).unwrap());
        assert!(limit_exists(&rep(1), &ints(&[&[1, 2], &[1]])).is_err());
    }

    #[test]
    fn dominance_example_values() {
        let ours = NormValue::from_ints(-2, 2);
        let other = NormValue::from_ints(-1, 1);
        assert_eq!(other.compare(&ours).unwrap(), Ordering::Greater);
        assert_eq!(value_cmp(-1, 1, -2, 2), Ordering::Greater);
        assert_eq!(value_cmp(-2, 2, -2, 2), Ordering::Equal);
        assert_eq!(value_cmp(0, 3, -1, 7), Ordering::Greater);
    }

    #[test]
    fn verify_zero_map() {
        let r = QuiverRepresentation::from_int_maps(
            Quiver::a2(),
            FieldKind::Prime(2),
            vec![1, 1],
            vec![vec![vec![0]]],
        )
        .unwrap();
        let sp = StabilityPair::new(vec![-1, 1], vec![1, 1], vec![1, 1]).unwrap();
        let rep =
            verify_hn_equals_hesselink(&r, &sp, &VerifyBudget::default(), &HnOptions::default())
                .unwrap();
        assert!(rep.passed);
        assert_eq!(rep.value, NormValue::from_ints(-2, 2));
        assert_eq!(rep.best.unwrap().value, NormValue::from_ints(-2, 2));
        assert_eq!(rep.frames, 101);
    }

    #[test]
    fn verify_semistable_and_empty() {
        let sp = StabilityPair::new(vec![-1, 1], vec![1, 1], vec![1, 1]).unwrap();
        let r = QuiverRepresentation::from_int_maps(
            Quiver::a2(),
            FieldKind::Rationals,
            vec![1, 1],
            vec![vec![vec![1]]],
        )
        .unwrap();
        let rep =
            verify_hn_equals_hesselink(&r, &sp, &VerifyBudget::default(), &HnOptions::default())
                .unwrap();
        assert!(rep.semistable && rep.passed);
        assert!(rep.best.unwrap().value.pairing >= int(0));
        let sp0 = StabilityPair::new(vec![0, 0], vec![1, 1], vec![0, 0]).unwrap();
        let e = QuiverRepresentation::from_int_maps(
            Quiver::a2(),
            FieldKind::Prime(3),
            vec![0, 0],
            vec![vec![]],
        )
        .unwrap();
        let rep =
            verify_hn_equals_hesselink(&e, &sp0, &VerifyBudget::default(), &HnOptions::default())
                .unwrap();
        assert!(rep.passed && rep.best.is_none());
    }

    #[test]
    fn subquotients_are_semistable() {
        let r = QuiverRepresentation::from_int_maps(
            Quiver::kronecker(2),
            FieldKind::Prime(2),
            vec![2, 2],
            vec![vec![vec![1, 0], vec![0, 0]], vec![vec![0, 0], vec![0, 0]]],
        )
        .unwrap();
        let sp = StabilityPair::new(vec![-1, 1], vec![1, 1], vec![2, 2]).unwrap();
        let opts = HnOptions::default();
        let hn = crate::quiver::hn_filtration_quiver(&r, &sp, &opts).unwrap();
        let sq = crate::quiver::subquotients(&r, hn.filtration.as_ref().unwrap()).unwrap();
        for s in sq {
            assert!(is_semistable_at_own_slope(&s, &sp.theta, &sp.alpha, &opts).unwrap());
        }
    }
}
