//! Dense exact linear algebra over any [`Field`], plus a modular rank used to
//! certify large nullity computations.

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::field::{Field, Rational};

pub type Matrix<E> = Vec<Vec<E>>;

/// Reduced row echelon form. Returns the nonzero rows and their pivot columns.
pub fn rref<F: Field>(f: &F, mut rows: Matrix<F::Elem>, ncols: usize) -> (Matrix<F::Elem>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !f.is_zero(&rows[i][c])) else {
            continue;
        };
        rows.swap(r, p);
        let inv = f.inv(&rows[r][c]).expect("nonzero pivot");
        if !f.is_one(&inv) {
            for x in rows[r].iter_mut().skip(c) {
                *x = f.mul(x, &inv);
            }
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || f.is_zero(&row[c]) {
                continue;
            }
            let factor = row[c].clone();
            for (j, pv) in pivot_row.iter().enumerate().skip(c) {
                if !f.is_zero(pv) {
                    row[j] = f.sub(&row[j], &f.mul(&factor, pv));
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    (rows, pivots)
}

pub fn rank<F: Field>(f: &F, rows: &[Vec<F::Elem>], ncols: usize) -> usize {
    rref(f, rows.to_vec(), ncols).1.len()
}

/// Basis of `{x : A x = 0}` for the matrix with the given rows.
pub fn nullspace<F: Field>(f: &F, rows: &[Vec<F::Elem>], ncols: usize) -> Matrix<F::Elem> {
    let (red, pivots) = rref(f, rows.to_vec(), ncols);
    let mut is_pivot = vec![false; ncols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut out = Vec::new();
    for free in (0..ncols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![f.zero(); ncols];
        v[free] = f.one();
        for (row, &p) in red.iter().zip(&pivots) {
            v[p] = f.neg(&row[free]);
        }
        out.push(v);
    }
    out
}

/// Echelon basis of the span of the given vectors.
pub fn span_basis<F: Field>(f: &F, vectors: &[Vec<F::Elem>], dim: usize) -> Matrix<F::Elem> {
    rref(f, vectors.to_vec(), dim).0
}

/// Coefficients `c` with `Σ c_i basis_i = v`, if `v` lies in the span.
pub fn coords_in_span<F: Field>(f: &F, basis: &[Vec<F::Elem>], v: &[F::Elem]) -> Option<Vec<F::Elem>> {
    let dim = v.len();
    let m = basis.len();
    // Columns are the basis vectors, augmented by v.
    let rows: Matrix<F::Elem> = (0..dim)
        .map(|i| {
            let mut r: Vec<F::Elem> = basis.iter().map(|b| b[i].clone()).collect();
            r.push(v[i].clone());
            r
        })
        .collect();
    let (red, pivots) = rref(f, rows, m + 1);
    if pivots.contains(&m) {
        return None;
    }
    let mut c = vec![f.zero(); m];
    for (row, &p) in red.iter().zip(&pivots) {
        c[p] = row[m].clone();
    }
    Some(c)
}

pub fn in_span<F: Field>(f: &F, basis: &[Vec<F::Elem>], v: &[F::Elem]) -> bool {
    let dim = v.len();
    let r = rank(f, basis, dim);
    let mut ext = basis.to_vec();
    ext.push(v.to_vec());
    rank(f, &ext, dim) == r
}

/// Basis of the intersection of two spans.
pub fn intersect<F: Field>(f: &F, a: &[Vec<F::Elem>], b: &[Vec<F::Elem>], dim: usize) -> Matrix<F::Elem> {
    let a = span_basis(f, a, dim);
    let b = span_basis(f, b, dim);
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    // Σ s_i a_i - Σ t_j b_j = 0
    let ncols = a.len() + b.len();
    let rows: Matrix<F::Elem> = (0..dim)
        .map(|i| a.iter().map(|v| v[i].clone()).chain(b.iter().map(|v| f.neg(&v[i]))).collect())
        .collect();
    let kernel = nullspace(f, &rows, ncols);
    let vecs: Matrix<F::Elem> = kernel
        .iter()
        .map(|k| {
            let mut v = vec![f.zero(); dim];
            for (s, ai) in k.iter().zip(&a) {
                if f.is_zero(s) {
                    continue;
                }
                for (x, y) in v.iter_mut().zip(ai) {
                    *x = f.add(x, &f.mul(s, y));
                }
            }
            v
        })
        .collect();
    span_basis(f, &vecs, dim)
}

pub fn identity<F: Field>(f: &F, n: usize) -> Matrix<F::Elem> {
    (0..n).map(|i| (0..n).map(|j| if i == j { f.one() } else { f.zero() }).collect()).collect()
}

pub fn mat_mul<F: Field>(f: &F, a: &[Vec<F::Elem>], b: &[Vec<F::Elem>]) -> Matrix<F::Elem> {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    let mut acc = f.zero();
                    for k in 0..inner {
                        if !f.is_zero(&row[k]) && !f.is_zero(&b[k][j]) {
                            acc = f.add(&acc, &f.mul(&row[k], &b[k][j]));
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec<F: Field>(f: &F, a: &[Vec<F::Elem>], v: &[F::Elem]) -> Vec<F::Elem> {
    a.iter()
        .map(|row| {
            row.iter().zip(v).fold(f.zero(), |acc, (x, y)| {
                if f.is_zero(x) || f.is_zero(y) {
                    acc
                } else {
                    f.add(&acc, &f.mul(x, y))
                }
            })
        })
        .collect()
}

pub fn transpose<E: Clone>(a: &[Vec<E>]) -> Matrix<E> {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn mat_sub<F: Field>(f: &F, a: &[Vec<F::Elem>], b: &[Vec<F::Elem>]) -> Matrix<F::Elem> {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| f.sub(x, y)).collect()).collect()
}

pub fn mat_add<F: Field>(f: &F, a: &[Vec<F::Elem>], b: &[Vec<F::Elem>]) -> Matrix<F::Elem> {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| f.add(x, y)).collect()).collect()
}

pub fn mat_scale<F: Field>(f: &F, s: &F::Elem, a: &[Vec<F::Elem>]) -> Matrix<F::Elem> {
    a.iter().map(|r| r.iter().map(|x| f.mul(s, x)).collect()).collect()
}

pub fn is_zero_matrix<F: Field>(f: &F, a: &[Vec<F::Elem>]) -> bool {
    a.iter().all(|r| r.iter().all(|x| f.is_zero(x)))
}

pub fn inverse<F: Field>(f: &F, a: &[Vec<F::Elem>]) -> Option<Matrix<F::Elem>> {
    let n = a.len();
    let aug: Matrix<F::Elem> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { f.one() } else { f.zero() }));
            row
        })
        .collect();
    let (red, pivots) = rref(f, aug, 2 * n);
    if pivots.len() < n || pivots[n - 1] >= n {
        return None;
    }
    Some(red.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Mersenne prime `2^61 - 1`.
pub const MODULUS: u64 = (1 << 61) - 1;

pub fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % MODULUS as u128) as u64
}

fn powmod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a);
        }
        a = mulmod(a, a);
        e >>= 1;
    }
    r
}

pub fn invmod(a: u64) -> u64 {
    powmod(a, MODULUS - 2)
}

pub fn submod(a: u64, b: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + MODULUS - b
    }
}

/// Incremental row echelon form modulo [`MODULUS`] with unit pivots.
#[derive(Clone, Debug, Default)]
pub struct ModEchelon {
    rows: Vec<(usize, Vec<u64>)>,
}

impl ModEchelon {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v`; keeps it and returns true when independent.
    pub fn insert(&mut self, mut v: Vec<u64>) -> bool {
        for (p, r) in &self.rows {
            let c = v[*p];
            if c != 0 {
                for (x, y) in v.iter_mut().zip(r) {
                    if *y != 0 {
                        *x = submod(*x, mulmod(c, *y));
                    }
                }
            }
        }
        let Some(p) = v.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = invmod(v[p]);
        for x in v.iter_mut() {
            *x = mulmod(*x, inv);
        }
        self.rows.push((p, v));
        true
    }
}

/// Reduction of a rational modulo [`MODULUS`]; `None` if the prime divides the denominator.
pub fn reduce(q: &Rational) -> Option<u64> {
    let m = num_bigint::BigInt::from(MODULUS);
    let num = q.numer().mod_floor(&m).to_u64()?;
    let den = q.denom().mod_floor(&m).to_u64()?;
    if den == 0 {
        return None;
    }
    Some(mulmod(num, invmod(den)))
}

/// Rank modulo [`MODULUS`] of a sparse rational matrix given as rows of
/// `(column, value)`. `None` if some denominator is divisible by the prime.
///
/// For a matrix over `Z_(p)` the rank mod `p` never exceeds the rank over `Q`,
/// so a modular nullity matching a known exact lower bound certifies it.
pub fn rank_mod_p(rows: &[Vec<(usize, Rational)>], ncols: usize) -> Option<usize> {
    let mut dense: Vec<Vec<u64>> = Vec::with_capacity(rows.len());
    for r in rows {
        let mut v = vec![0u64; ncols];
        for (c, x) in r {
            if x.is_zero() {
                continue;
            }
            v[*c] = reduce(x)?;
        }
        if v.iter().any(|&x| x != 0) {
            dense.push(v);
        }
    }
    Some(rank_dense_mod_p(dense, ncols))
}

fn rank_dense_mod_p(mut rows: Vec<Vec<u64>>, ncols: usize) -> usize {
    use rayon::prelude::*;
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(r, p);
        let inv = invmod(rows[r][c]);
        let pivot: Vec<u64> = rows[r].iter().map(|&x| mulmod(x, inv)).collect();
        rows[r + 1..].par_iter_mut().for_each(|row| {
            let factor = row[c];
            if factor == 0 {
                return;
            }
            for j in c..ncols {
                if pivot[j] != 0 {
                    let t = mulmod(factor, pivot[j]);
                    row[j] = if row[j] >= t { row[j] - t } else { row[j] + MODULUS - t };
                }
            }
        });
        r += 1;
    }
    r
}

/// Clears denominators and content so a rational vector becomes a primitive
/// integer vector (first nonzero entry positive).
pub fn primitive(v: &[Rational]) -> Vec<Rational> {
    use num_bigint::BigInt;
    let mut l = BigInt::from(1);
    for x in v {
        l = l.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Rational::from_integer(l.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() {
        return v.to_vec();
    }
    let lead_neg = ints.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative());
    ints.into_iter()
        .map(|x| {
            let y = x / &g;
            Rational::from_integer(if lead_neg { -y } else { y })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{int, Rationals};
    use proptest::prelude::*;

    fn m(rows: &[&[i64]]) -> Matrix<Rational> {
        rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect()
    }

    #[test]
    fn small_nullspace() {
        let f = Rationals;
        let a = m(&[&[1, 2, 3], &[2, 4, 6]]);
        let k = nullspace(&f, &a, 3);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(mat_vec(&f, &a, v).iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn inverse_and_intersection() {
        let f = Rationals;
        let a = m(&[&[2, 1], &[1, 1]]);
        let ai = inverse(&f, &a).unwrap();
        assert_eq!(mat_mul(&f, &a, &ai), identity(&f, 2));
        assert!(inverse(&f, &m(&[&[1, 2], &[2, 4]])).is_none());
        let x = m(&[&[1, 0, 0], &[0, 1, 0]]);
        let y = m(&[&[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(intersect(&f, &x, &y, 3), m(&[&[0, 1, 0]]));
        assert_eq!(coords_in_span(&f, &x, &[int(3), int(4), int(0)]), Some(vec![int(3), int(4)]));
        assert_eq!(coords_in_span(&f, &x, &[int(3), int(4), int(1)]), None);
    }

    proptest! {
        #[test]
        fn rank_nullity(entries in prop::collection::vec(-3i64..4, 20)) {
            let f = Rationals;
            let a: Matrix<Rational> = entries.chunks(5).map(|r| r.iter().map(|&x| int(x)).collect()).collect();
            let r = rank(&f, &a, 5);
            prop_assert_eq!(r + nullspace(&f, &a, 5).len(), 5);
            let sparse: Vec<Vec<(usize, Rational)>> =
                a.iter().map(|row| row.iter().cloned().enumerate().collect()).collect();
            prop_assert_eq!(rank_mod_p(&sparse, 5), Some(r));
        }
    }
}
