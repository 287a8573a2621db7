//! Subrepresentation oracles and the HN filtration built on top of them.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use super::{
    restrict, slope_of, DimVector, FieldKind, QuiverError, QuiverRepresentation, Rep,
    StabilityPair, SubspaceTuple,
};
use crate::exact::{
    extend_to_basis, int, inverse, mat_mul, mat_vec, nullspace, rank, row_space_basis, Field,
    Matrix, PrimeField, Rational, RationalField,
};

/// Oracle configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HnOptions {
    /// Maximum number of subspace tuples an exhaustive enumeration may visit.
    pub budget: u128,
    /// Primes used to certify components that have no complete rational
    /// oracle; at least three must be usable.
    pub primes: Vec<u64>,
}

impl Default for HnOptions {
    fn default() -> Self {
        HnOptions {
            budget: 1_000_000,
            primes: vec![5, 7, 11],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OracleKind {
    /// Exhaustive enumeration over the representation's own prime field.
    FiniteField,
    /// Exact search over coordinate subspaces of a torus-graded component.
    CoordinateSubspace,
    /// Exhaustive enumeration after reduction modulo several primes.
    MultiPrime,
}

impl OracleKind {
    pub fn label(self) -> &'static str {
        match self {
            OracleKind::FiniteField => "finite-field",
            OracleKind::CoordinateSubspace => "coordinate-subspace",
            OracleKind::MultiPrime => "multi-prime",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuiverHnResult {
    pub gamma: Vec<DimVector>,
    pub slopes: Vec<Rational>,
    /// `W⁽¹⁾ ⊂ … ⊂ W⁽ˢ⁾ = W`; absent when some component was only certified
    /// modulo primes.
    pub filtration: Option<Vec<SubspaceTuple>>,
    pub oracles: Vec<OracleKind>,
    pub primes_used: Vec<u64>,
}

impl QuiverHnResult {
    pub fn is_semistable(&self) -> bool {
        self.gamma.len() <= 1
    }
}

/// Number of subspaces of `F_p^d` (sum of Gaussian binomials).
pub fn count_subspaces(p: u64, d: usize) -> u128 {
    let p = p as u128;
    let mut total = 0u128;
    for k in 0..=d {
        let mut num = 1u128;
        let mut den = 1u128;
        for i in 0..k {
            num = num.saturating_mul(p.saturating_pow((d - i) as u32).saturating_sub(1));
            den = den.saturating_mul(p.saturating_pow((i + 1) as u32).saturating_sub(1));
        }
        total = total.saturating_add(num / den.max(1));
    }
    total
}

/// All subspaces of `F_p^d` as reduced echelon bases, ordered by dimension,
/// then pivot set, then free entries lexicographically.
pub fn enumerate_subspaces(f: &PrimeField, d: usize) -> Vec<Vec<Vec<u64>>> {
    let p = f.modulus();
    let mut out = Vec::new();
    for k in 0..=d {
        for pivots in combinations(d, k) {
            let free: Vec<(usize, usize)> = (0..k)
                .flat_map(|i| {
                    let pv = &pivots;
                    (pivots[i] + 1..d)
                        .filter(move |j| !pv.contains(j))
                        .map(move |j| (i, j))
                })
                .collect();
            let n = free.len() as u32;
            let total = p.pow(n);
            for code in 0..total {
                let mut rows = vec![vec![0u64; d]; k];
                for (i, &c) in pivots.iter().enumerate() {
                    rows[i][c] = 1;
                }
                let mut c = code;
                for &(i, j) in free.iter().rev() {
                    rows[i][j] = c % p;
                    c /= p;
                }
                out.push(rows);
            }
        }
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Echelon basis with its pivot columns, for fast membership tests.
#[derive(Clone, Debug)]
struct Echelon<E> {
    rows: Vec<Vec<E>>,
    pivots: Vec<usize>,
}

impl<E: Clone + PartialEq + std::fmt::Debug> Echelon<E> {
    fn new<F: Field<Elem = E>>(f: &F, rows: Vec<Vec<E>>) -> Self {
        let pivots = rows
            .iter()
            .map(|r| {
                r.iter()
                    .position(|x| !f.is_zero(x))
                    .expect("nonzero echelon row")
            })
            .collect();
        Echelon { rows, pivots }
    }

    fn contains<F: Field<Elem = E>>(&self, f: &F, v: &[E]) -> bool {
        let mut w = v.to_vec();
        for (row, &c) in self.rows.iter().zip(&self.pivots) {
            if f.is_zero(&w[c]) {
                continue;
            }
            let factor = w[c].clone();
            for (x, y) in w.iter_mut().zip(row) {
                *x = f.sub(x, &f.mul(&factor, y));
            }
        }
        w.iter().all(|x| f.is_zero(x))
    }
}

/// All arrow-closed subspace tuples of an `F_p` representation.
fn subreps_exhaustive(
    f: &PrimeField,
    rep: &Rep<u64>,
    budget: u128,
) -> Result<Vec<Vec<Vec<Vec<u64>>>>, QuiverError> {
    let count = rep.dims.iter().fold(1u128, |acc, &d| {
        acc.saturating_mul(count_subspaces(f.modulus(), d))
    });
    if count > budget {
        return Err(QuiverError::BudgetExceeded { count, budget });
    }
    let per_vertex: Vec<Vec<Echelon<u64>>> = rep
        .dims
        .iter()
        .map(|&d| {
            enumerate_subspaces(f, d)
                .into_iter()
                .map(|rows| Echelon::new(f, rows))
                .collect()
        })
        .collect();
    let n = rep.dims.len();
    let mut out = Vec::new();
    let mut choice: Vec<usize> = Vec::with_capacity(n);

    fn closed_so_far(
        f: &PrimeField,
        rep: &Rep<u64>,
        per_vertex: &[Vec<Echelon<u64>>],
        choice: &[usize],
    ) -> bool {
        let v = choice.len() - 1;
        rep.arrows.iter().zip(&rep.maps).all(|(&(t, h), m)| {
            if t.max(h) != v {
                return true;
            }
            let src = &per_vertex[t][choice[t]];
            let dst = &per_vertex[h][choice[h]];
            src.rows.iter().all(|u| dst.contains(f, &mat_vec(f, m, u)))
        })
    }

    fn rec(
        f: &PrimeField,
        rep: &Rep<u64>,
        per_vertex: &[Vec<Echelon<u64>>],
        choice: &mut Vec<usize>,
        out: &mut Vec<Vec<Vec<Vec<u64>>>>,
    ) {
        let v = choice.len();
        if v == per_vertex.len() {
            out.push(
                choice
                    .iter()
                    .enumerate()
                    .map(|(w, &c)| per_vertex[w][c].rows.clone())
                    .collect(),
            );
            return;
        }
        for c in 0..per_vertex[v].len() {
            choice.push(c);
            if closed_so_far(f, rep, per_vertex, choice) {
                rec(f, rep, per_vertex, choice, out);
            }
            choice.pop();
        }
    }

    rec(f, rep, &per_vertex, &mut choice, &mut out);
    Ok(out)
}

fn ff_to_rational(sub: &[Vec<Vec<u64>>]) -> SubspaceTuple {
    sub.iter()
        .map(|b| {
            b.iter()
                .map(|v| v.iter().map(|&x| int(x as i64)).collect())
                .collect()
        })
        .collect()
}

/// Exhaustive list of subrepresentations of a representation over `F_p`,
/// with their dimension vectors.
pub fn enumerate_subreps_ff(
    rep: &QuiverRepresentation,
    budget: u128,
) -> Result<Vec<(DimVector, SubspaceTuple)>, QuiverError> {
    let (f, r) = rep.prime_rep().ok_or_else(|| {
        QuiverError::Undecidable("exhaustive enumeration needs a finite field".into())
    })?;
    Ok(subreps_exhaustive(&f, &r, budget)?
        .into_iter()
        .map(|s| (s.iter().map(|b| b.len()).collect(), ff_to_rational(&s)))
        .collect())
}

fn validate_tuple(rep: &QuiverRepresentation, u: &SubspaceTuple) -> Result<(), QuiverError> {
    if u.len() != rep.dims().len() {
        return Err(QuiverError::MalformedSubspace(
            "one basis per vertex expected".into(),
        ));
    }
    for (v, basis) in u.iter().enumerate() {
        if basis.iter().any(|x| x.len() != rep.dims()[v]) {
            return Err(QuiverError::MalformedSubspace(format!(
                "basis vector at vertex {v} has the wrong length"
            )));
        }
    }
    Ok(())
}

fn closed_under_maps<F: Field>(f: &F, rep: &Rep<F::Elem>, u: &[Vec<Vec<F::Elem>>]) -> bool {
    rep.arrows.iter().zip(&rep.maps).all(|(&(t, h), m)| {
        let d = rep.dims[h];
        let base = row_space_basis(f, &u[h], d).len();
        let mut rows = u[h].clone();
        rows.extend(u[t].iter().map(|x| mat_vec(f, m, x)));
        row_space_basis(f, &rows, d).len() == base
    })
}

/// True iff `φ_a(U_tail) ⊆ U_head` for every arrow.
pub fn is_subrepresentation(
    rep: &QuiverRepresentation,
    u: &SubspaceTuple,
) -> Result<bool, QuiverError> {
    validate_tuple(rep, u)?;
    Ok(match rep.prime_rep() {
        Some((f, r)) => {
            let s: Vec<Vec<Vec<u64>>> = u
                .iter()
                .map(|b| {
                    b.iter()
                        .map(|v| v.iter().map(|x| f.reduce(x)).collect::<Option<Vec<_>>>())
                        .collect::<Option<Vec<_>>>()
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| QuiverError::MalformedSubspace("entry not defined mod p".into()))?;
            closed_under_maps(&f, &r, &s)
        }
        None => closed_under_maps(&RationalField, &rep.rational_rep(), u),
    })
}

/// One slope piece of an HN filtration, on a direct summand.
#[derive(Clone, Debug)]
struct Piece {
    slope: Rational,
    dim: DimVector,
    /// Vectors spanning the piece modulo earlier pieces, in global coordinates.
    basis: Option<Vec<Vec<Vec<Rational>>>>,
}

struct ExhaustiveHn {
    pieces: Vec<Piece>,
}

/// HN filtration by repeated extraction of the maximal destabilizing
/// subrepresentation, found by exhaustive enumeration.
fn hn_exhaustive(
    f: &PrimeField,
    rep: &Rep<u64>,
    theta: &[i64],
    alpha: &[i64],
    budget: u128,
) -> Result<ExhaustiveHn, QuiverError> {
    let nv = rep.dims.len();
    let mut cur = rep.clone();
    // Columns: basis of the current quotient in original coordinates.
    let mut lift: Vec<Matrix<u64>> = rep.dims.iter().map(|&d| Matrix::identity(f, d)).collect();
    let mut pieces = Vec::new();
    while cur.dims.iter().sum::<usize>() > 0 {
        let subs = subreps_exhaustive(f, &cur, budget)?;
        let mut best: Option<(Rational, i64)> = None;
        let mut winners: Vec<&Vec<Vec<Vec<u64>>>> = Vec::new();
        for s in &subs {
            let d: Vec<usize> = s.iter().map(|b| b.len()).collect();
            if d.iter().all(|&x| x == 0) {
                continue;
            }
            let sl = slope_of(&d, theta, alpha)?;
            let a: i64 = alpha.iter().zip(&d).map(|(a, &x)| a * x as i64).sum();
            let key = (sl, a);
            let better = match &best {
                None => true,
                Some((bs, ba)) => key.0 < *bs || (key.0 == *bs && key.1 > *ba),
            };
            if better {
                best = Some(key);
                winners.clear();
                winners.push(s);
            } else if best.as_ref() == Some(&key) {
                winners.push(s);
            }
        }
        if winners.len() != 1 {
            return Err(QuiverError::NonUniqueDestabilizer(winners.len()));
        }
        let dsub = winners[0].clone();
        let (sl, _) = best.expect("nonzero representation has a nonzero subrepresentation");
        let dim: DimVector = dsub.iter().map(|b| b.len()).collect();
        let basis: Vec<Vec<Vec<Rational>>> = (0..nv)
            .map(|v| {
                dsub[v]
                    .iter()
                    .map(|u| {
                        mat_vec(f, &lift[v], u)
                            .iter()
                            .map(|&x| int(x as i64))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        pieces.push(Piece {
            slope: sl,
            dim: dim.clone(),
            basis: Some(basis),
        });
        // Pass to the quotient by dsub.
        let mut pmats = Vec::with_capacity(nv);
        for v in 0..nv {
            let full = extend_to_basis(f, &dsub[v], cur.dims[v]);
            pmats.push(Matrix::from_fn(cur.dims[v], cur.dims[v], |i, j| full[j][i]));
        }
        let new_dims: Vec<usize> = (0..nv).map(|v| cur.dims[v] - dim[v]).collect();
        let maps = cur
            .arrows
            .iter()
            .zip(&cur.maps)
            .map(|(&(t, h), m)| {
                let pinv = inverse(f, &pmats[h]).expect("basis matrix is invertible");
                let conj = mat_mul(f, &pinv, &mat_mul(f, m, &pmats[t]));
                conj.block(dim[h], cur.dims[h], dim[t], cur.dims[t])
            })
            .collect();
        lift = (0..nv)
            .map(|v| {
                mat_mul(
                    f,
                    &lift[v],
                    &pmats[v].block(0, cur.dims[v], dim[v], cur.dims[v]),
                )
            })
            .collect();
        cur = Rep {
            dims: new_dims,
            arrows: cur.arrows.clone(),
            maps,
        };
    }
    Ok(ExhaustiveHn { pieces })
}

/// Connected components of the support graph; each is a direct summand
/// spanned by coordinate vectors. Nodes are `(vertex, index)`.
fn components<F: Field>(f: &F, rep: &Rep<F::Elem>) -> Vec<Vec<(usize, usize)>> {
    let offsets: Vec<usize> = rep
        .dims
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let total: usize = rep.dims.iter().sum();
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for (&(t, h), m) in rep.arrows.iter().zip(&rep.maps) {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if !f.is_zero(m.get(i, j)) {
                    let a = find(&mut parent, offsets[h] + i);
                    let b = find(&mut parent, offsets[t] + j);
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (v, &d) in rep.dims.iter().enumerate() {
        for i in 0..d {
            let r = find(&mut parent, offsets[v] + i);
            groups.entry(r).or_default().push((v, i));
        }
    }
    groups.into_values().collect()
}

/// The summand on the given coordinate nodes, with the index maps back to
/// global coordinates.
fn sub_block<E: Clone>(rep: &Rep<E>, nodes: &[(usize, usize)]) -> (Rep<E>, Vec<Vec<usize>>) {
    let nv = rep.dims.len();
    let mut idx: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for &(v, i) in nodes {
        idx[v].push(i);
    }
    let dims: Vec<usize> = idx.iter().map(|x| x.len()).collect();
    let maps = rep
        .arrows
        .iter()
        .zip(&rep.maps)
        .map(|(&(t, h), m)| {
            Matrix::from_fn(dims[h], dims[t], |i, j| m.get(idx[h][i], idx[t][j]).clone())
        })
        .collect();
    (
        Rep {
            dims,
            arrows: rep.arrows.clone(),
            maps,
        },
        idx,
    )
}

/// Whether a torus acting diagonally on the coordinates, rescaling each
/// arrow by a character, separates all coordinates at every vertex. Then
/// every subrepresentation degenerates to a coordinate one and the HN
/// filtration, being unique, is spanned by coordinate vectors.
fn is_torus_graded(rep: &Rep<Rational>) -> bool {
    let offsets: Vec<usize> = rep
        .dims
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let n: usize = rep.dims.iter().sum();
    let na = rep.arrows.len();
    let mut eqs: Vec<Vec<Rational>> = Vec::new();
    for (a, (&(t, h), m)) in rep.arrows.iter().zip(&rep.maps).enumerate() {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if m.get(i, j).is_zero() {
                    continue;
                }
                // w(head, i) - w(tail, j) - c_a = 0
                let mut row = vec![Rational::zero(); n + na];
                row[offsets[h] + i] += int(1);
                row[offsets[t] + j] -= int(1);
                row[n + a] = int(-1);
                eqs.push(row);
            }
        }
    }
    let kernel = if eqs.is_empty() {
        (0..n + na)
            .map(|i| {
                let mut e = vec![Rational::zero(); n + na];
                e[i] = int(1);
                e
            })
            .collect()
    } else {
        let m = Matrix::from_rows(eqs, n + na).expect("consistent rows");
        nullspace(&RationalField, &m)
    };
    for (v, &d) in rep.dims.iter().enumerate() {
        for i in 0..d {
            for j in i + 1..d {
                let (a, b) = (offsets[v] + i, offsets[v] + j);
                if kernel.iter().all(|k| k[a] == k[b]) {
                    return false;
                }
            }
        }
    }
    true
}

/// Maximum-weight closure: a set `S` with `u ∈ S, (u, v) ∈ edges ⇒ v ∈ S`
/// maximizing the weight sum. Returns the optimum and the largest optimal
/// set. Solved as a minimum cut with exact rational capacities.
fn max_weight_closure(weights: &[Rational], edges: &[(usize, usize)]) -> (Rational, Vec<bool>) {
    let n = weights.len();
    let s = n;
    let t = n + 1;
    let total_pos: Rational = weights.iter().filter(|w| w.is_positive()).sum();
    let inf = weights.iter().map(|w| w.abs()).sum::<Rational>() + int(1);
    let size = n + 2;
    let mut cap = vec![vec![Rational::zero(); size]; size];
    for (u, w) in weights.iter().enumerate() {
        if w.is_positive() {
            cap[s][u] = w.clone();
        } else if w.is_negative() {
            cap[u][t] = -w.clone();
        }
    }
    for &(u, v) in edges {
        cap[u][v] = inf.clone();
    }
    let mut flow_value = Rational::zero();
    loop {
        // Shortest augmenting path (Edmonds–Karp).
        let mut prev = vec![usize::MAX; size];
        prev[s] = s;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            if x == t {
                break;
            }
            for y in 0..size {
                if prev[y] == usize::MAX && cap[x][y].is_positive() {
                    prev[y] = x;
                    queue.push_back(y);
                }
            }
        }
        if prev[t] == usize::MAX {
            break;
        }
        let mut bottleneck: Option<Rational> = None;
        let mut y = t;
        while y != s {
            let x = prev[y];
            bottleneck = Some(match bottleneck {
                None => cap[x][y].clone(),
                Some(b) => b.min(cap[x][y].clone()),
            });
            y = x;
        }
        let b = bottleneck.expect("path has an edge");
        let mut y = t;
        while y != s {
            let x = prev[y];
            cap[x][y] -= &b;
            cap[y][x] += &b;
            y = x;
        }
        flow_value += b;
    }
    // Largest optimal closure: nodes that cannot reach the sink in the
    // residual graph.
    let mut reaches_sink = vec![false; size];
    reaches_sink[t] = true;
    let mut stack = vec![t];
    while let Some(y) = stack.pop() {
        for x in 0..size {
            if !reaches_sink[x] && cap[x][y].is_positive() {
                reaches_sink[x] = true;
                stack.push(x);
            }
        }
    }
    let set = (0..n).map(|u| !reaches_sink[u]).collect();
    (total_pos - flow_value, set)
}

/// HN pieces of a torus-graded rational component via coordinate closures.
fn hn_coordinate(
    rep: &Rep<Rational>,
    theta: &[i64],
    alpha: &[i64],
) -> Result<Vec<(Rational, DimVector, Vec<(usize, usize)>)>, QuiverError> {
    let nodes: Vec<(usize, usize)> = rep
        .dims
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| (0..d).map(move |i| (v, i)))
        .collect();
    let index: BTreeMap<(usize, usize), usize> =
        nodes.iter().enumerate().map(|(k, &n)| (n, k)).collect();
    let mut all_edges = Vec::new();
    for (&(t, h), m) in rep.arrows.iter().zip(&rep.maps) {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if !m.get(i, j).is_zero() {
                    all_edges.push((index[&(t, j)], index[&(h, i)]));
                }
            }
        }
    }
    let nv = rep.dims.len();
    let mut remaining: Vec<bool> = vec![true; nodes.len()];
    let mut pieces = Vec::new();
    let dim_of = |set: &[usize]| -> DimVector {
        let mut d = vec![0; nv];
        for &k in set {
            d[nodes[k].0] += 1;
        }
        d
    };
    while remaining.iter().any(|&r| r) {
        let live: Vec<usize> = (0..nodes.len()).filter(|&k| remaining[k]).collect();
        let local: BTreeMap<usize, usize> = live.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let edges: Vec<(usize, usize)> = all_edges
            .iter()
            .filter_map(|(a, b)| Some((*local.get(a)?, *local.get(b)?)))
            .collect();
        let mut mu = slope_of(&dim_of(&live), theta, alpha)?;
        let chosen = loop {
            let weights: Vec<Rational> = live
                .iter()
                .map(|&k| {
                    let v = nodes[k].0;
                    &mu * int(alpha[v]) - int(theta[v])
                })
                .collect();
            let (value, set) = max_weight_closure(&weights, &edges);
            let members: Vec<usize> = live
                .iter()
                .zip(&set)
                .filter(|(_, &s)| s)
                .map(|(&k, _)| k)
                .collect();
            if value.is_positive() {
                mu = slope_of(&dim_of(&members), theta, alpha)?;
                continue;
            }
            break members;
        };
        if chosen.is_empty() {
            return Err(QuiverError::Undecidable(
                "coordinate search found no destabilizing closure".into(),
            ));
        }
        let d = dim_of(&chosen);
        let sl = slope_of(&d, theta, alpha)?;
        debug_assert_eq!(sl, mu);
        for &k in &chosen {
            remaining[k] = false;
        }
        pieces.push((sl, d, chosen.iter().map(|&k| nodes[k]).collect()));
    }
    Ok(pieces)
}

fn reduce_rep(f: &PrimeField, rep: &Rep<Rational>) -> Option<Rep<u64>> {
    let maps = rep
        .maps
        .iter()
        .map(|m| m.try_map(|x| f.reduce(x).ok_or(())))
        .collect::<Result<Vec<_>, _>>()
        .ok()?;
    Some(Rep {
        dims: rep.dims.clone(),
        arrows: rep.arrows.clone(),
        maps,
    })
}

/// Ranks of every arrow matrix and of the stacked outgoing maps at each
/// vertex.
fn rank_profile<F: Field>(f: &F, rep: &Rep<F::Elem>) -> Vec<usize> {
    let mut out: Vec<usize> = rep.maps.iter().map(|m| rank(f, m)).collect();
    for v in 0..rep.dims.len() {
        let mut rows = Vec::new();
        for (&(t, _), m) in rep.arrows.iter().zip(&rep.maps) {
            if t == v {
                rows.extend(m.row_vecs());
            }
        }
        out.push(row_space_basis(f, &rows, rep.dims[v]).len());
    }
    out
}

/// HN type of a rational component through several prime reductions.
fn hn_multi_prime(
    rep: &Rep<Rational>,
    theta: &[i64],
    alpha: &[i64],
    opts: &HnOptions,
) -> Result<(Vec<(Rational, DimVector)>, Vec<u64>), QuiverError> {
    let reference = rank_profile(&RationalField, rep);
    let mut used = Vec::new();
    let mut answer: Option<Vec<(Rational, DimVector)>> = None;
    for &p in &opts.primes {
        let Some(f) = PrimeField::new(p) else {
            continue;
        };
        let Some(red) = reduce_rep(&f, rep) else {
            continue;
        };
        if rank_profile(&f, &red) != reference {
            continue;
        }
        let hn = hn_exhaustive(&f, &red, theta, alpha, opts.budget)?;
        let ty: Vec<(Rational, DimVector)> =
            hn.pieces.into_iter().map(|p| (p.slope, p.dim)).collect();
        match &answer {
            None => answer = Some(ty),
            Some(prev) if *prev != ty => {
                return Err(QuiverError::PrimeDisagreement(format!(
                    "HN type mod {p} differs from mod {}",
                    used[0]
                )))
            }
            _ => {}
        }
        used.push(p);
    }
    if used.len() < 3 {
        return Err(QuiverError::Undecidable(format!(
            "only {} of the configured primes preserve the rank profile",
            used.len()
        )));
    }
    Ok((answer.expect("at least one prime"), used))
}

fn embed(
    local: &[Vec<Vec<Rational>>],
    idx: &[Vec<usize>],
    dims: &[usize],
) -> Vec<Vec<Vec<Rational>>> {
    local
        .iter()
        .enumerate()
        .map(|(v, vecs)| {
            vecs.iter()
                .map(|x| {
                    let mut g = vec![Rational::zero(); dims[v]];
                    for (k, val) in x.iter().enumerate() {
                        g[idx[v][k]] = val.clone();
                    }
                    g
                })
                .collect()
        })
        .collect()
}

/// Merges HN pieces of direct summands: pieces of equal slope are combined
/// and the filtration steps are sums of all pieces up to each slope.
fn merge_pieces(
    pieces: Vec<Piece>,
    dims: &[usize],
    reduce: impl Fn(&[Vec<Rational>], usize) -> Vec<Vec<Rational>>,
) -> (Vec<DimVector>, Vec<Rational>, Option<Vec<SubspaceTuple>>) {
    let nv = dims.len();
    let mut by_slope: BTreeMap<Rational, (DimVector, Option<Vec<Vec<Vec<Rational>>>>)> =
        BTreeMap::new();
    for p in pieces {
        let e = by_slope
            .entry(p.slope)
            .or_insert_with(|| (vec![0; nv], Some(vec![Vec::new(); nv])));
        for v in 0..nv {
            e.0[v] += p.dim[v];
        }
        e.1 = match (e.1.take(), p.basis) {
            (Some(mut acc), Some(b)) => {
                for v in 0..nv {
                    acc[v].extend(b[v].iter().cloned());
                }
                Some(acc)
            }
            _ => None,
        };
    }
    let mut gamma = Vec::new();
    let mut slopes = Vec::new();
    let mut steps: Option<Vec<SubspaceTuple>> = Some(Vec::new());
    let mut running: Vec<Vec<Vec<Rational>>> = vec![Vec::new(); nv];
    for (sl, (d, basis)) in by_slope {
        gamma.push(d);
        slopes.push(sl);
        match (basis, steps.as_mut()) {
            (Some(b), Some(st)) => {
                for v in 0..nv {
                    running[v].extend(b[v].iter().cloned());
                    running[v] = reduce(&running[v], dims[v]);
                }
                st.push(running.clone());
            }
            _ => steps = None,
        }
    }
    (gamma, slopes, steps)
}

fn check_pair(rep: &QuiverRepresentation, sp: &StabilityPair) -> Result<(), QuiverError> {
    if rep.dims() != sp.ambient.as_slice() {
        return Err(QuiverError::InvalidStability(
            "representation dimension differs from the ambient dimension vector".into(),
        ));
    }
    Ok(())
}

/// The `(θ, α)` HN filtration, computed by repeatedly extracting the
/// maximal destabilizing subrepresentation (minimal slope, then maximal
/// `α`-dimension).
pub fn hn_filtration_quiver(
    rep: &QuiverRepresentation,
    sp: &StabilityPair,
    opts: &HnOptions,
) -> Result<QuiverHnResult, QuiverError> {
    check_pair(rep, sp)?;
    hn_with(rep, &sp.theta, &sp.alpha, opts)
}

/// HN filtration for arbitrary `(θ, α)` without the `θ · d = 0` constraint;
/// used for subquotients.
pub(crate) fn hn_with(
    rep: &QuiverRepresentation,
    theta: &[i64],
    alpha: &[i64],
    opts: &HnOptions,
) -> Result<QuiverHnResult, QuiverError> {
    let dims = rep.dims().to_vec();
    if dims.iter().sum::<usize>() == 0 {
        return Ok(QuiverHnResult {
            gamma: Vec::new(),
            slopes: Vec::new(),
            filtration: Some(Vec::new()),
            oracles: Vec::new(),
            primes_used: Vec::new(),
        });
    }
    let mut pieces = Vec::new();
    let mut oracles = Vec::new();
    let mut primes_used = Vec::new();
    match rep.field() {
        FieldKind::Prime(p) => {
            let (f, r) = rep.prime_rep().expect("prime field");
            let whole = r
                .dims
                .iter()
                .fold(1u128, |acc, &d| acc.saturating_mul(count_subspaces(p, d)));
            let comps = if whole <= opts.budget {
                vec![r
                    .dims
                    .iter()
                    .enumerate()
                    .flat_map(|(v, &d)| (0..d).map(move |i| (v, i)))
                    .collect()]
            } else {
                components(&f, &r)
            };
            for nodes in comps {
                let (block, idx) = sub_block(&r, &nodes);
                let hn = hn_exhaustive(&f, &block, theta, alpha, opts.budget)?;
                for pc in hn.pieces {
                    pieces.push(Piece {
                        basis: pc.basis.map(|b| embed(&b, &idx, &dims)),
                        ..pc
                    });
                }
                oracles.push(OracleKind::FiniteField);
            }
            primes_used.push(p);
            let (gamma, slopes, filtration) = merge_pieces(pieces, &dims, |rows, d| {
                let reduced: Vec<Vec<u64>> = rows
                    .iter()
                    .map(|x| x.iter().map(|q| f.reduce(q).expect("residue")).collect())
                    .collect();
                row_space_basis(&f, &reduced, d)
                    .into_iter()
                    .map(|x| x.into_iter().map(|y| int(y as i64)).collect())
                    .collect()
            });
            Ok(QuiverHnResult {
                gamma,
                slopes,
                filtration,
                oracles,
                primes_used,
            })
        }
        FieldKind::Rationals => {
            let r = rep.rational_rep();
            for nodes in components(&RationalField, &r) {
                let (block, idx) = sub_block(&r, &nodes);
                if is_torus_graded(&block) {
                    for (sl, d, local_nodes) in hn_coordinate(&block, theta, alpha)? {
                        let local: Vec<Vec<Vec<Rational>>> = (0..dims.len())
                            .map(|v| {
                                local_nodes
                                    .iter()
                                    .filter(|n| n.0 == v)
                                    .map(|&(_, i)| {
                                        let mut e = vec![Rational::zero(); block.dims[v]];
                                        e[i] = int(1);
                                        e
                                    })
                                    .collect()
                            })
                            .collect();
                        pieces.push(Piece {
                            slope: sl,
                            dim: d,
                            basis: Some(embed(&local, &idx, &dims)),
                        });
                    }
                    oracles.push(OracleKind::CoordinateSubspace);
                } else {
                    let (ty, used) = hn_multi_prime(&block, theta, alpha, opts)?;
                    for (sl, d) in ty {
                        pieces.push(Piece {
                            slope: sl,
                            dim: d,
                            basis: None,
                        });
                    }
                    for p in used {
                        if !primes_used.contains(&p) {
                            primes_used.push(p);
                        }
                    }
                    oracles.push(OracleKind::MultiPrime);
                }
            }
            let (gamma, slopes, filtration) = merge_pieces(pieces, &dims, |rows, d| {
                row_space_basis(&RationalField, rows, d)
            });
            Ok(QuiverHnResult {
                gamma,
                slopes,
                filtration,
                oracles,
                primes_used,
            })
        }
    }
}

/// King semistability: `θ(W') ≥ 0` for every subrepresentation.
pub fn is_theta_semistable(
    rep: &QuiverRepresentation,
    sp: &StabilityPair,
    opts: &HnOptions,
) -> Result<bool, QuiverError> {
    check_pair(rep, sp)?;
    if let Some((f, r)) = rep.prime_rep() {
        let whole = r.dims.iter().fold(1u128, |acc, &d| {
            acc.saturating_mul(count_subspaces(f.modulus(), d))
        });
        if whole <= opts.budget {
            return Ok(subreps_exhaustive(&f, &r, opts.budget)?.iter().all(|s| {
                let d: Vec<usize> = s.iter().map(|b| b.len()).collect();
                sp.theta_of(&d) >= 0
            }));
        }
    }
    // With θ(d) = 0, semistability is equivalent to a one-step HN filtration.
    Ok(hn_filtration_quiver(rep, sp, opts)?.is_semistable())
}

/// Subquotients `W⁽ⁱ⁾ / W⁽ⁱ⁻¹⁾` of a filtration over `F_p`, as
/// representations.
pub fn subquotients(
    rep: &QuiverRepresentation,
    filtration: &[SubspaceTuple],
) -> Result<Vec<QuiverRepresentation>, QuiverError> {
    let (f, r) = rep
        .prime_rep()
        .ok_or_else(|| QuiverError::Undecidable("subquotients need a finite field".into()))?;
    let nv = r.dims.len();
    let to_ff = |s: &SubspaceTuple| -> Vec<Vec<Vec<u64>>> {
        s.iter()
            .map(|b| {
                b.iter()
                    .map(|v| v.iter().map(|x| f.reduce(x).unwrap()).collect())
                    .collect()
            })
            .collect()
    };
    let mut out = Vec::new();
    let mut prev: Vec<Vec<Vec<u64>>> = vec![Vec::new(); nv];
    for step in filtration {
        let cur = to_ff(step);
        // Basis of the step adapted to the previous step.
        let adapted: Vec<Vec<Vec<u64>>> = (0..nv)
            .map(|v| {
                let mut rows = prev[v].clone();
                for x in &cur[v] {
                    let mut trial = rows.clone();
                    trial.push(x.clone());
                    if row_space_basis(&f, &trial, r.dims[v]).len() > rows.len() {
                        rows = trial;
                    }
                }
                rows
            })
            .collect();
        let sub = restrict(&f, &r, &adapted);
        let k: Vec<usize> = prev.iter().map(|b| b.len()).collect();
        let maps = sub
            .arrows
            .iter()
            .zip(&sub.maps)
            .map(|(&(t, h), m)| m.block(k[h], sub.dims[h], k[t], sub.dims[t]))
            .collect::<Vec<_>>();
        let dims: Vec<usize> = (0..nv).map(|v| sub.dims[v] - k[v]).collect();
        let mats = maps.iter().map(|m| m.map(|&x| int(x as i64))).collect();
        out.push(QuiverRepresentation::new(
            rep.quiver().clone(),
            rep.field(),
            dims,
            mats,
        )?);
        prev = cur;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quiver::{Quiver, Relation, RelationTerm};

    fn a2(field: FieldKind, m: i64) -> QuiverRepresentation {
        QuiverRepresentation::from_int_maps(Quiver::a2(), field, vec![1, 1], vec![vec![vec![m]]])
            .unwrap()
    }

    fn sp(theta: &[i64], alpha: &[i64], d: &[usize]) -> StabilityPair {
        StabilityPair::new(theta.to_vec(), alpha.to_vec(), d.to_vec()).unwrap()
    }

    #[test]
    fn subspace_counts_match_enumeration() {
        for p in [2u64, 3, 5] {
            let f = PrimeField::new(p).unwrap();
            for d in 0..=4 {
                assert_eq!(
                    enumerate_subspaces(&f, d).len() as u128,
                    count_subspaces(p, d)
                );
            }
        }
        assert_eq!(count_subspaces(2, 2), 5);
    }

    #[test]
    fn subrep_enumeration_examples() {
        let dims = |r: &QuiverRepresentation| -> Vec<DimVector> {
            enumerate_subreps_ff(r, 1_000_000)
                .unwrap()
                .into_iter()
                .map(|x| x.0)
                .collect()
        };
        let zero = a2(FieldKind::Prime(2), 0);
        assert_eq!(
            dims(&zero),
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
        let id = a2(FieldKind::Prime(2), 1);
        assert_eq!(dims(&id), vec![vec![0, 0], vec![0, 1], vec![1, 1]]);
        let empty = QuiverRepresentation::from_int_maps(
            Quiver::a2(),
            FieldKind::Prime(2),
            vec![0, 0],
            vec![vec![]],
        )
        .unwrap();
        assert_eq!(dims(&empty), vec![vec![0, 0]]);
    }

    #[test]
    fn budget_is_enforced() {
        let r = QuiverRepresentation::from_int_maps(
            Quiver::a2(),
            FieldKind::Prime(3),
            vec![3, 3],
            vec![vec![vec![0; 3]; 3]],
        )
        .unwrap();
        match enumerate_subreps_ff(&r, 10) {
            Err(QuiverError::BudgetExceeded { count, .. }) => assert_eq!(count, 28 * 28),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn is_subrepresentation_examples() {
        let id = a2(FieldKind::Rationals, 1);
        let zero: SubspaceTuple = vec![vec![], vec![]];
        let full: SubspaceTuple = vec![vec![vec![int(1)]], vec![vec![int(1)]]];
        let escape: SubspaceTuple = vec![vec![vec![int(1)]], vec![]];
        assert!(is_subrepresentation(&id, &zero).unwrap());
        assert!(is_subrepresentation(&id, &full).unwrap());
        assert!(!is_subrepresentation(&id, &escape).unwrap());
        let malformed: SubspaceTuple = vec![vec![vec![int(1), int(2)]], vec![]];
        assert!(is_subrepresentation(&id, &malformed).is_err());
    }

    #[test]
    fn semistability_examples() {
        let opts = HnOptions::default();
        let s = sp(&[-1, 1], &[1, 1], &[1, 1]);
        for field in [FieldKind::Prime(2), FieldKind::Rationals] {
            assert!(is_theta_semistable(&a2(field, 1), &s, &opts).unwrap());
            assert!(!is_theta_semistable(&a2(field, 0), &s, &opts).unwrap());
        }
        let one = QuiverRepresentation::from_int_maps(
            Quiver::new(vec!["v".into()], vec![], vec![]).unwrap(),
            FieldKind::Rationals,
            vec![3],
            vec![],
        )
        .unwrap();
        assert!(is_theta_semistable(&one, &sp(&[0], &[1], &[3]), &opts).unwrap());
    }

    #[test]
    fn hn_examples() {
        let opts = HnOptions::default();
        let s = sp(&[-1, 1], &[1, 1], &[1, 1]);
        for field in [FieldKind::Prime(2), FieldKind::Rationals] {
            let hn = hn_filtration_quiver(&a2(field, 0), &s, &opts).unwrap();
            assert_eq!(hn.gamma, vec![vec![1, 0], vec![0, 1]]);
            assert_eq!(hn.slopes, vec![int(-1), int(1)]);
            let hn = hn_filtration_quiver(&a2(field, 1), &s, &opts).unwrap();
            assert_eq!(hn.gamma, vec![vec![1, 1]]);
            assert_eq!(hn.filtration.unwrap().len(), 1);
        }
    }

    #[test]
    fn coordinate_oracle_agrees_with_enumeration() {
        let maps = vec![
            vec![vec![1, 0], vec![0, 1], vec![0, 0]],
            vec![vec![0, 0], vec![1, 0], vec![0, 1]],
        ];
        let s = sp(&[-3, 2], &[3, 2], &[2, 3]);
        let q = QuiverRepresentation::from_int_maps(
            Quiver::kronecker(2),
            FieldKind::Rationals,
            vec![2, 3],
            maps.clone(),
        )
        .unwrap();
        let p = QuiverRepresentation::from_int_maps(
            Quiver::kronecker(2),
            FieldKind::Prime(5),
            vec![2, 3],
            maps,
        )
        .unwrap();
        let opts = HnOptions::default();
        let hq = hn_filtration_quiver(&q, &s, &opts).unwrap();
        let hp = hn_filtration_quiver(&p, &s, &opts).unwrap();
        assert_eq!(hq.gamma, hp.gamma);
        assert_eq!(hq.oracles, vec![OracleKind::CoordinateSubspace]);
    }

    #[test]
    fn non_graded_rational_uses_primes() {
        // (1, 1): R^2 -> R, kernel (1, -1) is not a coordinate line.
        let r = QuiverRepresentation::from_int_maps(
            Quiver::a2(),
            FieldKind::Rationals,
            vec![2, 1],
            vec![vec![vec![1, 1]]],
        )
        .unwrap();
        let s = sp(&[-1, 2], &[1, 1], &[2, 1]);
        let hn = hn_filtration_quiver(&r, &s, &HnOptions::default()).unwrap();
        assert_eq!(hn.oracles, vec![OracleKind::MultiPrime]);
        assert_eq!(hn.primes_used, vec![5, 7, 11]);
        assert_eq!(hn.gamma, vec![vec![1, 0], vec![1, 1]]);
        assert!(hn.filtration.is_none());
        assert!(!is_theta_semistable(&r, &s, &HnOptions::default()).unwrap());
    }

    #[test]
    fn too_few_primes_is_undecidable() {
        let r = QuiverRepresentation::from_int_maps(
            Quiver::a2(),
            FieldKind::Rationals,
            vec![2, 1],
            vec![vec![vec![1, 1]]],
        )
        .unwrap();
        let s = sp(&[-1, 2], &[1, 1], &[2, 1]);
        let opts = HnOptions {
            primes: vec![5, 7],
            ..HnOptions::default()
        };
        assert!(matches!(
            hn_filtration_quiver(&r, &s, &opts),
            Err(QuiverError::Undecidable(_))
        ));
    }

    #[test]
    fn max_closure_small() {
        // 0 -> 1; weights 3, -1: best closure {0, 1} with value 2.
        let (v, set) = max_weight_closure(&[int(3), int(-1)], &[(0, 1)]);
        assert_eq!(v, int(2));
        assert_eq!(set, vec![true, true]);
        // weights -1, -1: empty optimum, largest optimal set still empty.
        let (v, set) = max_weight_closure(&[int(-1), int(-1)], &[]);
        assert_eq!(v, int(0));
        assert_eq!(set, vec![false, false]);
        // zero weight nodes join the largest optimal closure
        let (v, set) = max_weight_closure(&[int(0), int(2)], &[(1, 0)]);
        assert_eq!(v, int(2));
        assert_eq!(set, vec![true, true]);
    }

    #[test]
    fn relations_pass_to_subreps() {
        let q = Quiver::new(
            vec!["v".into()],
            vec![(0, 0)],
            vec![Relation {
                terms: vec![RelationTerm {
                    coeff: 1,
                    path: vec![0, 0],
                }],
            }],
        )
        .unwrap();
        let r = QuiverRepresentation::from_int_maps(
            q,
            FieldKind::Prime(3),
            vec![3],
            vec![vec![vec![0, 1, 0], vec![0, 0, 0], vec![0, 0, 0]]],
        )
        .unwrap();
        for (_, s) in enumerate_subreps_ff(&r, 1_000_000).unwrap() {
            assert!(crate::quiver::subrep_satisfies_relations(&r, &s));
        }
    }

    #[test]
    fn subquotients_have_gamma_dims() {
        let r = a2(FieldKind::Prime(3), 0);
        let s = sp(&[-1, 1], &[1, 1], &[1, 1]);
        let hn = hn_filtration_quiver(&r, &s, &HnOptions::default()).unwrap();
        let sq = subquotients(&r, &hn.filtration.unwrap()).unwrap();
        let dims: Vec<DimVector> = sq.iter().map(|x| x.dims().to_vec()).collect();
        assert_eq!(dims, hn.gamma);
    }
}
