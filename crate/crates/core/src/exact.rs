//! Exact scalars, matrices over exact fields and root-free comparison of
//! normalized weights.
//!
//! Every quantity in the crate is either an integer or a rational number, so
//! the linear algebra here is generic over a small [`Field`] trait with two
//! implementations: the rationals and prime fields `F_p`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("no primitive representative: zero vector")]
    NoPrimitiveRepresentative,
    #[error("zero norm: normalized value undefined")]
    ZeroNorm,
    #[error("integer overflow converting {0}")]
    Overflow(String),
    #[error("malformed rational {0:?}")]
    Parse(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` or `"p"`. Decimal notation is rejected.
pub fn parse_rational(s: &str) -> Result<Rational, ExactError> {
    let t = s.trim();
    let bad = || ExactError::Parse(s.to_string());
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (t, "1"),
    };
    let n: BigInt = num.parse().map_err(|_| bad())?;
    let d: BigInt = den.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn to_i64(q: &Rational) -> Result<i64, ExactError> {
    if !q.is_integer() {
        return Err(ExactError::Overflow(format_rational(q)));
    }
    q.numer()
        .to_i64()
        .ok_or_else(|| ExactError::Overflow(format_rational(q)))
}

/// A rational that serializes as a `"p/q"` string.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RatStr(pub Rational);

impl Serialize for RatStr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for RatStr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s)
            .map(RatStr)
            .map_err(serde::de::Error::custom)
    }
}

impl From<Rational> for RatStr {
    fn from(q: Rational) -> Self {
        RatStr(q)
    }
}

impl fmt::Display for RatStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

/// Field operations on an element type. Fields are values so that a prime
/// field can carry its modulus.
pub trait Field {
    type Elem: Clone + PartialEq + fmt::Debug;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    /// `None` for zero.
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn from_i64(&self, n: i64) -> Self::Elem;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RationalField;

impl Field for RationalField {
    type Elem = Rational;

    fn zero(&self) -> Rational {
        Rational::zero()
    }
    fn one(&self) -> Rational {
        Rational::one()
    }
    fn add(&self, a: &Rational, b: &Rational) -> Rational {
        a + b
    }
    fn sub(&self, a: &Rational, b: &Rational) -> Rational {
        a - b
    }
    fn mul(&self, a: &Rational, b: &Rational) -> Rational {
        a * b
    }
    fn neg(&self, a: &Rational) -> Rational {
        -a
    }
    fn inv(&self, a: &Rational) -> Option<Rational> {
        if a.is_zero() {
            None
        } else {
            Some(a.recip())
        }
    }
    fn is_zero(&self, a: &Rational) -> bool {
        a.is_zero()
    }
    fn from_i64(&self, n: i64) -> Rational {
        int(n)
    }
}

/// `F_p` with elements stored as canonical residues in `0..p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    /// Returns `None` unless `p` is a prime below 2^31.
    pub fn new(p: u64) -> Option<Self> {
        if !(2..(1 << 31)).contains(&p) {
            return None;
        }
        let mut d = 2;
        while d * d <= p {
            if p.is_multiple_of(d) {
                return None;
            }
            d += 1;
        }
        Some(PrimeField { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Reduces a rational whose denominator is prime to `p`.
    pub fn reduce(&self, q: &Rational) -> Option<u64> {
        let p = BigInt::from(self.p);
        let n = q.numer().mod_floor(&p).to_u64()?;
        let d = q.denom().mod_floor(&p).to_u64()?;
        let dinv = self.inv(&d)?;
        Some(self.mul(&n, &dinv))
    }

    fn pow(&self, mut b: u64, mut e: u64) -> u64 {
        let mut acc = 1u64;
        b %= self.p;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b % self.p;
            }
            b = b * b % self.p;
            e >>= 1;
        }
        acc
    }
}

impl Field for PrimeField {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.p
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        (a + b) % self.p
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        (a + self.p - b) % self.p
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        a * b % self.p
    }
    fn neg(&self, a: &u64) -> u64 {
        (self.p - a) % self.p
    }
    fn inv(&self, a: &u64) -> Option<u64> {
        if (*a).is_multiple_of(self.p) {
            None
        } else {
            Some(self.pow(*a, self.p - 2))
        }
    }
    fn is_zero(&self, a: &u64) -> bool {
        (*a).is_multiple_of(self.p)
    }
    fn from_i64(&self, n: i64) -> u64 {
        n.rem_euclid(self.p as i64) as u64
    }
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn zeros<F: Field<Elem = T>>(f: &F, rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, f.zero())
    }

    pub fn identity<F: Field<Elem = T>>(f: &F, n: usize) -> Self {
        let mut m = Self::zeros(f, n, n);
        for i in 0..n {
            m.set(i, i, f.one());
        }
        m
    }

    /// Builds a matrix from rows; `cols` is needed when there are no rows.
    pub fn from_rows(rows: Vec<Vec<T>>, cols: usize) -> Result<Self, ExactError> {
        let r = rows.len();
        let mut data = Vec::with_capacity(r * cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return Err(ExactError::Dimension(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Ok(Matrix {
            rows: r,
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn try_map<U: Clone, E>(&self, f: impl Fn(&T) -> Result<U, E>) -> Result<Matrix<U>, E> {
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect::<Result<_, _>>()?,
        })
    }

    pub fn entries(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    /// Rows `r0..r1`, columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Matrix::from_fn(r1 - r0, c1 - c0, |i, j| self.get(r0 + i, c0 + j).clone())
    }
}

pub fn mat_mul<F: Field>(f: &F, a: &Matrix<F::Elem>, b: &Matrix<F::Elem>) -> Matrix<F::Elem> {
    assert_eq!(a.cols, b.rows, "matrix product shape mismatch");
    let mut out = Matrix::zeros(f, a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.get(i, k);
            if f.is_zero(aik) {
                continue;
            }
            for j in 0..b.cols {
                let v = f.add(out.get(i, j), &f.mul(aik, b.get(k, j)));
                out.set(i, j, v);
            }
        }
    }
    out
}

pub fn mat_vec<F: Field>(f: &F, a: &Matrix<F::Elem>, v: &[F::Elem]) -> Vec<F::Elem> {
    assert_eq!(a.cols, v.len(), "matrix-vector shape mismatch");
    (0..a.rows)
        .map(|i| {
            a.row(i)
                .iter()
                .zip(v)
                .fold(f.zero(), |acc, (x, y)| f.add(&acc, &f.mul(x, y)))
        })
        .collect()
}

pub fn is_zero_matrix<F: Field>(f: &F, a: &Matrix<F::Elem>) -> bool {
    a.entries().all(|x| f.is_zero(x))
}

/// Reduced row echelon form and pivot columns. Pivots are normalized to one
/// and eliminated above and below, so the result is canonical.
pub fn rref<F: Field>(f: &F, m: &Matrix<F::Elem>) -> (Matrix<F::Elem>, Vec<usize>) {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..a.cols {
        if r == a.rows {
            break;
        }
        let Some(p) = (r..a.rows).find(|&i| !f.is_zero(a.get(i, c))) else {
            continue;
        };
        if p != r {
            for j in 0..a.cols {
                a.data.swap(p * a.cols + j, r * a.cols + j);
            }
        }
        let inv = f.inv(a.get(r, c)).expect("nonzero pivot");
        for j in 0..a.cols {
            let v = f.mul(a.get(r, j), &inv);
            a.set(r, j, v);
        }
        for i in 0..a.rows {
            if i == r || f.is_zero(a.get(i, c)) {
                continue;
            }
            let factor = a.get(i, c).clone();
            for j in 0..a.cols {
                let v = f.sub(a.get(i, j), &f.mul(&factor, a.get(r, j)));
                a.set(i, j, v);
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

pub fn rank<F: Field>(f: &F, m: &Matrix<F::Elem>) -> usize {
    rref(f, m).1.len()
}

/// Row space basis as the nonzero rows of the reduced echelon form.
pub fn row_space_basis<F: Field>(f: &F, rows: &[Vec<F::Elem>], dim: usize) -> Vec<Vec<F::Elem>> {
    if rows.is_empty() {
        return Vec::new();
    }
    let m = Matrix::from_rows(rows.to_vec(), dim).expect("consistent row lengths");
    let (r, piv) = rref(f, &m);
    (0..piv.len()).map(|i| r.row(i).to_vec()).collect()
}

/// Rank of `m` together with a basis of its column space in reduced echelon
/// form (the nonzero rows of `rref(mᵀ)`).
pub fn rank_and_basis(m: &Matrix<Rational>) -> (usize, Vec<Vec<Rational>>) {
    let (r, piv) = rref(&RationalField, &m.transpose());
    let basis: Vec<_> = (0..piv.len()).map(|i| r.row(i).to_vec()).collect();
    (basis.len(), basis)
}

/// Basis of `{ x : m x = 0 }`, one vector per free column.
pub fn nullspace<F: Field>(f: &F, m: &Matrix<F::Elem>) -> Vec<Vec<F::Elem>> {
    let (r, piv) = rref(f, m);
    let free: Vec<usize> = (0..m.cols).filter(|c| !piv.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![f.zero(); m.cols];
            v[fc] = f.one();
            for (i, &pc) in piv.iter().enumerate() {
                v[pc] = f.neg(r.get(i, fc));
            }
            v
        })
        .collect()
}

pub fn inverse<F: Field>(f: &F, m: &Matrix<F::Elem>) -> Option<Matrix<F::Elem>> {
    if m.rows != m.cols {
        return None;
    }
    let n = m.rows;
    if n == 0 {
        return Some(m.clone());
    }
    let aug = Matrix::from_fn(n, 2 * n, |i, j| {
        if j < n {
            m.get(i, j).clone()
        } else if j - n == i {
            f.one()
        } else {
            f.zero()
        }
    });
    let (r, piv) = rref(f, &aug);
    if piv.len() < n || piv[n - 1] != n - 1 {
        return None;
    }
    Some(r.block(0, n, n, 2 * n))
}

/// Solves `a x = b` for a square invertible `a`.
pub fn solve<F: Field>(f: &F, a: &Matrix<F::Elem>, b: &[F::Elem]) -> Option<Vec<F::Elem>> {
    let inv = inverse(f, a)?;
    Some(mat_vec(f, &inv, b))
}

/// Extends the linearly independent `rows` to a basis of the ambient space by
/// appending standard basis vectors, in ascending index order.
pub fn extend_to_basis<F: Field>(f: &F, rows: &[Vec<F::Elem>], dim: usize) -> Vec<Vec<F::Elem>> {
    let mut out = rows.to_vec();
    let mut current = rows.len();
    for i in 0..dim {
        if current == dim {
            break;
        }
        let mut e = vec![f.zero(); dim];
        e[i] = f.one();
        let mut trial = out.clone();
        trial.push(e);
        let m = Matrix::from_rows(trial.clone(), dim).expect("consistent");
        if rank(f, &m) > current {
            out = trial;
            current += 1;
        }
    }
    out
}

fn gcd_big(a: &BigInt, b: &BigInt) -> BigInt {
    a.gcd(b)
}

/// Positive rational rescaling of `v` to an integer vector with coprime
/// entries.
pub fn primitive_integral(v: &[Rational]) -> Result<Vec<i64>, ExactError> {
    if v.iter().all(|x| x.is_zero()) {
        return Err(ExactError::NoPrimitiveRepresentative);
    }
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let scaled: Vec<BigInt> = v
        .iter()
        .map(|x| (x * Rational::from_integer(lcm.clone())).to_integer())
        .collect();
    let g = scaled
        .iter()
        .fold(BigInt::zero(), |acc, x| gcd_big(&acc, x));
    scaled
        .iter()
        .map(|x| {
            let q = x / &g;
            q.to_i64()
                .ok_or_else(|| ExactError::Overflow(q.to_string()))
        })
        .collect()
}

pub fn primitive_of_ints(v: &[i64]) -> Result<Vec<i64>, ExactError> {
    let q: Vec<Rational> = v.iter().map(|&x| int(x)).collect();
    primitive_integral(&q)
}

/// The real number `pairing / sqrt(norm_sq)`, kept root-free.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NormValue {
    pub pairing: Rational,
    pub norm_sq: Rational,
}

impl NormValue {
    pub fn new(pairing: Rational, norm_sq: Rational) -> Self {
        NormValue { pairing, norm_sq }
    }

    pub fn from_ints(pairing: i64, norm_sq: i64) -> Self {
        NormValue::new(int(pairing), int(norm_sq))
    }

    /// Exact comparison of `pairing / sqrt(norm_sq)` values by sign analysis
    /// and squared cross-products.
    pub fn compare(&self, other: &NormValue) -> Result<Ordering, ExactError> {
        if !self.norm_sq.is_positive() || !other.norm_sq.is_positive() {
            return Err(ExactError::ZeroNorm);
        }
        let sa = sign(&self.pairing);
        let sb = sign(&other.pairing);
        if sa != sb {
            return Ok(sa.cmp(&sb));
        }
        if sa == 0 {
            return Ok(Ordering::Equal);
        }
        let lhs = &self.pairing * &self.pairing * &other.norm_sq;
        let rhs = &other.pairing * &other.pairing * &self.norm_sq;
        let mag = lhs.cmp(&rhs);
        Ok(if sa > 0 { mag } else { mag.reverse() })
    }
}

fn sign(q: &Rational) -> i8 {
    if q.is_positive() {
        1
    } else if q.is_negative() {
        -1
    } else {
        0
    }
}

/// Binomial coefficient as an exact integer.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qm(rows: &[&[i64]]) -> Matrix<Rational> {
        let cols = rows.first().map_or(0, |r| r.len());
        Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| int(x)).collect())
                .collect(),
            cols,
        )
        .unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_and_basis(&qm(&[&[1, 0], &[0, 1]])).0, 2);
        assert_eq!(rank_and_basis(&qm(&[&[0, 0], &[0, 0]])).0, 0);
        let (r, basis) = rank_and_basis(&qm(&[&[1, 2], &[2, 4]]));
        assert_eq!(r, 1);
        // column space spanned by (1, 2)
        assert_eq!(basis, vec![vec![int(1), int(2)]]);
    }

    #[test]
    fn primitive_examples() {
        assert_eq!(
            primitive_integral(&[rat(1, 2), rat(-1, 2)]).unwrap(),
            vec![1, -1]
        );
        assert_eq!(primitive_integral(&[int(0), int(-1)]).unwrap(), vec![0, -1]);
        assert_eq!(
            primitive_integral(&[rat(2, 3), rat(-1, 3), rat(-1, 3)]).unwrap(),
            vec![2, -1, -1]
        );
        assert_eq!(
            primitive_integral(&[int(0), int(0)]),
            Err(ExactError::NoPrimitiveRepresentative)
        );
    }

    #[test]
    fn norm_value_examples() {
        let a = NormValue::from_ints(-2, 2);
        let b = NormValue::from_ints(-1, 1);
        assert_eq!(a.compare(&b).unwrap(), Ordering::Less);
        assert_eq!(a.compare(&a).unwrap(), Ordering::Equal);
        let c = NormValue::from_ints(3, 4);
        let d = NormValue::from_ints(-1, 100);
        assert_eq!(c.compare(&d).unwrap(), Ordering::Greater);
        assert_eq!(
            a.compare(&NormValue::from_ints(0, 0)),
            Err(ExactError::ZeroNorm)
        );
    }

    #[test]
    fn rational_strings() {
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-4").unwrap(), int(-4));
        assert!(parse_rational("0.5").is_err());
        assert!(parse_rational("1/0").is_err());
        assert_eq!(format_rational(&rat(-2, 4)), "-1/2");
        assert_eq!(format_rational(&int(7)), "7");
    }

    #[test]
    fn prime_field_arithmetic() {
        let f = PrimeField::new(7).unwrap();
        assert_eq!(f.mul(&3, &f.inv(&3).unwrap()), 1);
        assert_eq!(f.reduce(&rat(1, 2)), Some(4));
        assert_eq!(f.reduce(&rat(1, 7)), None);
        assert!(PrimeField::new(9).is_none());
    }

    #[test]
    fn inverse_and_nullspace() {
        let f = RationalField;
        let m = qm(&[&[2, 1], &[1, 1]]);
        let inv = inverse(&f, &m).unwrap();
        assert_eq!(mat_mul(&f, &m, &inv), Matrix::identity(&f, 2));
        let sing = qm(&[&[1, 2], &[2, 4]]);
        assert!(inverse(&f, &sing).is_none());
        let ns = nullspace(&f, &sing);
        assert_eq!(ns, vec![vec![int(-2), int(1)]]);
    }

    #[test]
    fn extend_basis_fills_dimension() {
        let f = RationalField;
        let b = extend_to_basis(&f, &[vec![int(1), int(1), int(0)]], 3);
        assert_eq!(b.len(), 3);
        assert_eq!(rank(&f, &Matrix::from_rows(b, 3).unwrap()), 3);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(3, 5), BigInt::zero());
    }
}
