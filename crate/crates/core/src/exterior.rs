//! Sparse exterior algebra on a finite generator list. Basis monomials are
//! subsets of generators stored as bitmasks, read in ascending index order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{int, Field, Rational};

/// Ordered, named generators. Only the arity matters for arithmetic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpace {
    pub labels: Vec<String>,
}

impl GeneratorSpace {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(Error::InvalidInput("generator labels must be distinct".into()));
        }
        if labels.len() > 63 {
            return Err(Error::InvalidInput("at most 63 generators".into()));
        }
        Ok(GeneratorSpace { labels })
    }

    /// `x1..x_{2n}` followed by `y1..y_{2n}`.
    pub fn hyperbolic(n: usize) -> Self {
        let mut labels: Vec<String> = (1..=2 * n).map(|i| format!("x{i}")).collect();
        labels.extend((1..=2 * n).map(|i| format!("y{i}")));
        GeneratorSpace { labels }
    }

    pub fn arity(&self) -> usize {
        self.labels.len()
    }

    pub fn monomial_name(&self, mask: u64) -> String {
        if mask == 0 {
            return "1".into();
        }
        bits(mask).map(|i| self.labels[i].as_str()).collect::<Vec<_>>().join("^")
    }
}

/// Indices of set bits, ascending.
pub fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(i)
        }
    })
}

pub fn full_mask(arity: usize) -> u64 {
    if arity == 64 {
        u64::MAX
    } else {
        (1u64 << arity) - 1
    }
}

/// Sign of `g_A ∧ g_B` relative to `g_{A∪B}`; zero when `A ∩ B ≠ ∅`.
pub fn wedge_sign(a: u64, b: u64) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut inversions = 0u32;
    for j in bits(b) {
        inversions += (a >> j >> 1).count_ones();
    }
    if inversions.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Sign picked up when the dual of generator `i` is contracted into `g_mask`.
pub fn contract_sign(mask: u64, i: usize) -> i32 {
    if (mask & ((1u64 << i) - 1)).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `(-1)^{k(k-1)/2}`.
pub fn tau_sign(k: usize) -> i32 {
    if (k / 2).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// All masks of the given degree, ascending.
pub fn masks_of_degree(arity: usize, k: usize) -> Vec<u64> {
    let mut out = Vec::new();
    if k > arity {
        return out;
    }
    if k == 0 {
        return vec![0];
    }
    // Gosper's hack
    let mut m: u64 = (1u64 << k) - 1;
    let limit = 1u64 << arity;
    while m < limit {
        out.push(m);
        let c = m & m.wrapping_neg();
        let r = m + c;
        m = (((r ^ m) >> 2) / c) | r;
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Multivector<E> {
    arity: usize,
    terms: BTreeMap<u64, E>,
}

impl<E: Clone + PartialEq> Multivector<E> {
    pub fn zero(arity: usize) -> Self {
        Multivector { arity, terms: BTreeMap::new() }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> &BTreeMap<u64, E> {
        &self.terms
    }

    pub fn into_terms(self) -> BTreeMap<u64, E> {
        self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, mask: u64) -> Option<&E> {
        self.terms.get(&mask)
    }

    pub fn degree_part(&self, k: usize) -> Self {
        self.filter(|m| m.count_ones() as usize == k)
    }

    pub fn even_part(&self) -> Self {
        self.filter(|m| m.count_ones() % 2 == 0)
    }

    pub fn odd_part(&self) -> Self {
        self.filter(|m| m.count_ones() % 2 == 1)
    }

    pub fn filter(&self, keep: impl Fn(u64) -> bool) -> Self {
        Multivector {
            arity: self.arity,
            terms: self.terms.iter().filter(|(m, _)| keep(**m)).map(|(m, c)| (*m, c.clone())).collect(),
        }
    }

    /// Lowest degree with a nonzero component.
    pub fn lowest_degree(&self) -> Option<usize> {
        self.terms.keys().map(|m| m.count_ones() as usize).min()
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.terms.keys().map(|m| m.count_ones() as usize).max()
    }

    pub fn is_homogeneous(&self, k: usize) -> bool {
        self.terms.keys().all(|m| m.count_ones() as usize == k)
    }

    /// Reindex into a larger space, shifting generators by `offset`.
    pub fn embed(&self, arity: usize, offset: usize) -> Self {
        assert!(self.arity + offset <= arity);
        Multivector { arity, terms: self.terms.iter().map(|(m, c)| (m << offset, c.clone())).collect() }
    }

    pub fn map_coeffs<G: Clone + PartialEq>(&self, mut h: impl FnMut(&E) -> G, is_zero: impl Fn(&G) -> bool) -> Multivector<G> {
        Multivector {
            arity: self.arity,
            terms: self
                .terms
                .iter()
                .filter_map(|(m, c)| {
                    let g = h(c);
                    (!is_zero(&g)).then_some((*m, g))
                })
                .collect(),
        }
    }

    /// Dense coordinates on the given monomial list.
    pub fn coords(&self, basis: &[u64], zero: &E) -> Vec<E> {
        basis.iter().map(|m| self.terms.get(m).cloned().unwrap_or_else(|| zero.clone())).collect()
    }
}

impl<E: Clone + PartialEq> Multivector<E> {
    pub fn scalar<F: Field<Elem = E>>(f: &F, c: E, arity: usize) -> Self {
        Self::monomial(f, 0, c, arity)
    }

    pub fn one<F: Field<Elem = E>>(f: &F, arity: usize) -> Self {
        Self::monomial(f, 0, f.one(), arity)
    }

    pub fn generator<F: Field<Elem = E>>(f: &F, i: usize, arity: usize) -> Self {
        Self::monomial(f, 1 << i, f.one(), arity)
    }

    pub fn monomial<F: Field<Elem = E>>(f: &F, mask: u64, c: E, arity: usize) -> Self {
        assert!(mask <= full_mask(arity), "monomial outside the generator space");
        let mut terms = BTreeMap::new();
        if !f.is_zero(&c) {
            terms.insert(mask, c);
        }
        Multivector { arity, terms }
    }

    /// Sum of terms; repeated masks are combined.
    pub fn from_terms<F: Field<Elem = E>>(f: &F, arity: usize, it: impl IntoIterator<Item = (u64, E)>) -> Self {
        let mut out = Self::zero(arity);
        for (m, c) in it {
            out.add_term(f, m, &c);
        }
        out
    }

    /// Vector `Σ v_i g_i`.
    pub fn from_vector<F: Field<Elem = E>>(f: &F, v: &[E]) -> Self {
        Self::from_terms(f, v.len(), v.iter().enumerate().map(|(i, c)| (1u64 << i, c.clone())))
    }

    pub fn from_coords<F: Field<Elem = E>>(f: &F, arity: usize, basis: &[u64], v: &[E]) -> Self {
        Self::from_terms(f, arity, basis.iter().copied().zip(v.iter().cloned()))
    }

    pub fn add_term<F: Field<Elem = E>>(&mut self, f: &F, mask: u64, c: &E) {
        if f.is_zero(c) {
            return;
        }
        debug_assert!(mask <= full_mask(self.arity));
        match self.terms.get_mut(&mask) {
            Some(x) => {
                let s = f.add(x, c);
                if f.is_zero(&s) {
                    self.terms.remove(&mask);
                } else {
                    *x = s;
                }
            }
            None => {
                self.terms.insert(mask, c.clone());
            }
        }
    }

    fn add_signed<F: Field<Elem = E>>(&mut self, f: &F, mask: u64, c: &E, sign: i32) {
        match sign {
            1 => self.add_term(f, mask, c),
            -1 => self.add_term(f, mask, &f.neg(c)),
            _ => {}
        }
    }

    pub fn add<F: Field<Elem = E>>(&self, f: &F, o: &Self) -> Self {
        assert_eq!(self.arity, o.arity, "generator spaces differ");
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(f, *m, c);
        }
        out
    }

    pub fn sub<F: Field<Elem = E>>(&self, f: &F, o: &Self) -> Self {
        self.add(f, &o.neg(f))
    }

    pub fn neg<F: Field<Elem = E>>(&self, f: &F) -> Self {
        Multivector { arity: self.arity, terms: self.terms.iter().map(|(m, c)| (*m, f.neg(c))).collect() }
    }

    pub fn scale<F: Field<Elem = E>>(&self, f: &F, s: &E) -> Self {
        if f.is_zero(s) {
            return Self::zero(self.arity);
        }
        Multivector { arity: self.arity, terms: self.terms.iter().map(|(m, c)| (*m, f.mul(s, c))).collect() }
    }

    pub fn scale_rational<F: Field<Elem = E>>(&self, f: &F, s: &Rational) -> Self {
        self.scale(f, &f.from_rational(s))
    }

    /// Exterior product. Both factors must live on the same generators.
    pub fn wedge<F: Field<Elem = E>>(&self, f: &F, o: &Self) -> Self {
        assert_eq!(self.arity, o.arity, "generator spaces differ");
        let mut out = Self::zero(self.arity);
        for (a, ca) in &self.terms {
            for (b, cb) in &o.terms {
                let s = wedge_sign(*a, *b);
                if s != 0 {
                    out.add_signed(f, a | b, &f.mul(ca, cb), s);
                }
            }
        }
        out
    }

    pub fn try_wedge<F: Field<Elem = E>>(&self, f: &F, o: &Self) -> Result<Self> {
        if self.arity != o.arity {
            return Err(Error::SpaceMismatch(self.arity, o.arity));
        }
        Ok(self.wedge(f, o))
    }

    pub fn pow<F: Field<Elem = E>>(&self, f: &F, k: usize) -> Self {
        let mut out = Self::one(f, self.arity);
        for _ in 0..k {
            out = out.wedge(f, self);
        }
        out
    }

    /// Contraction with the dual of generator `i`.
    pub fn contract_gen<F: Field<Elem = E>>(&self, f: &F, i: usize) -> Self {
        let mut out = Self::zero(self.arity);
        let bit = 1u64 << i;
        for (m, c) in &self.terms {
            if m & bit != 0 {
                out.add_signed(f, m & !bit, c, contract_sign(*m, i));
            }
        }
        out
    }

    /// Contraction with the functional `g_i ↦ theta[i]`.
    pub fn contract<F: Field<Elem = E>>(&self, f: &F, theta: &[E]) -> Result<Self> {
        if theta.len() != self.arity {
            return Err(Error::LengthMismatch { expected: self.arity, got: theta.len() });
        }
        let mut out = Self::zero(self.arity);
        for (i, t) in theta.iter().enumerate() {
            if !f.is_zero(t) {
                out = out.add(f, &self.contract_gen(f, i).scale(f, t));
            }
        }
        Ok(out)
    }

    /// Degree-`k` part scaled by `(-1)^{k(k-1)/2}`.
    pub fn tau<F: Field<Elem = E>>(&self, f: &F) -> Self {
        Multivector {
            arity: self.arity,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (*m, if tau_sign(m.count_ones() as usize) == 1 { c.clone() } else { f.neg(c) }))
                .collect(),
        }
    }

    /// Coefficient of `g_1 ∧ … ∧ g_m`.
    pub fn top_coeff<F: Field<Elem = E>>(&self, f: &F) -> E {
        self.terms.get(&full_mask(self.arity)).cloned().unwrap_or_else(|| f.zero())
    }

    /// `exp(a)` for `a` with only even positive degrees.
    pub fn exp_even<F: Field<Elem = E>>(&self, f: &F) -> Result<Self> {
        if let Some(m) = self.terms.keys().find(|m| m.count_ones() % 2 == 1 || **m == 0) {
            return Err(Error::NotEvenNilpotent(format!("term of degree {}", m.count_ones())));
        }
        let mut out = Self::one(f, self.arity);
        let mut power = Self::one(f, self.arity);
        for k in 1..=self.arity / 2 {
            power = power.wedge(f, self).scale_rational(f, &Rational::new(1.into(), (k as i64).into()));
            if power.is_zero() {
                break;
            }
            out = out.add(f, &power);
        }
        Ok(out)
    }

    /// Extends a linear map on generators (`images[i]` is the image of `g_i`,
    /// as coordinates in a space of the given arity) to the exterior algebra.
    pub fn pushforward_linear<F: Field<Elem = E>>(&self, f: &F, images: &[Vec<E>], arity: usize) -> Self {
        assert_eq!(images.len(), self.arity);
        let gens: Vec<Self> = images.iter().map(|v| Self::from_vector(f, v).resized(arity)).collect();
        let mut cache: BTreeMap<u64, Self> = BTreeMap::new();
        cache.insert(0, Self::one(f, arity));
        let mut out = Self::zero(arity);
        for (m, c) in &self.terms {
            let img = ring_image(f, *m, &gens, &mut cache);
            out = out.add(f, &img.scale(f, c));
        }
        out
    }

    /// Extends a linear map on generators as a derivation.
    pub fn derivation<F: Field<Elem = E>>(&self, f: &F, images: &[Vec<E>]) -> Self {
        assert_eq!(images.len(), self.arity);
        let mut out = Self::zero(self.arity);
        for (m, c) in &self.terms {
            for i in bits(*m) {
                let below = m & ((1u64 << i) - 1);
                let above = m & !((2u64 << i) - 1);
                for (a, d) in images[i].iter().enumerate() {
                    if f.is_zero(d) {
                        continue;
                    }
                    let abit = 1u64 << a;
                    let s1 = wedge_sign(below, abit);
                    if s1 == 0 {
                        continue;
                    }
                    let s2 = wedge_sign(below | abit, above);
                    if s2 == 0 {
                        continue;
                    }
                    out.add_signed(f, below | abit | above, &f.mul(c, d), s1 * s2);
                }
            }
        }
        out
    }

    fn resized(mut self, arity: usize) -> Self {
        self.arity = arity;
        self
    }
}

fn ring_image<F: Field>(
    f: &F,
    m: u64,
    gens: &[Multivector<F::Elem>],
    cache: &mut BTreeMap<u64, Multivector<F::Elem>>,
) -> Multivector<F::Elem> {
    if let Some(v) = cache.get(&m) {
        return v.clone();
    }
    let low = m.trailing_zeros() as usize;
    let rest = ring_image(f, m & (m - 1), gens, cache);
    let v = gens[low].wedge(f, &rest);
    cache.insert(m, v.clone());
    v
}

/// `(a, b)_S`: top coefficient of `τ(a) ∧ b`.
pub fn s_pairing<F: Field>(f: &F, a: &Multivector<F::Elem>, b: &Multivector<F::Elem>) -> Result<F::Elem> {
    if a.arity() != b.arity() {
        return Err(Error::SpaceMismatch(a.arity(), b.arity()));
    }
    let top = full_mask(a.arity());
    let mut acc = f.zero();
    for (ma, ca) in a.terms() {
        let mb = top & !ma;
        if let Some(cb) = b.get(mb) {
            let s = wedge_sign(*ma, mb) * tau_sign(ma.count_ones() as usize);
            let prod = f.mul(ca, cb);
            acc = if s == 1 { f.add(&acc, &prod) } else { f.sub(&acc, &prod) };
        }
    }
    Ok(acc)
}

/// Graded tensor product: `a` on the first generators, `b` after it.
pub fn kunneth<F: Field>(f: &F, a: &Multivector<F::Elem>, b: &Multivector<F::Elem>) -> Multivector<F::Elem> {
    let total = a.arity() + b.arity();
    a.embed(total, 0).wedge(f, &b.embed(total, a.arity()))
}

/// Rational multivector as a multivector over another field.
pub fn lift<F: Field>(f: &F, a: &Multivector<Rational>) -> Multivector<F::Elem> {
    a.map_coeffs(|c| f.from_rational(c), |c| f.is_zero(c))
}

pub fn factorial(k: usize) -> Rational {
    (1..=k as i64).fold(int(1), |acc, i| acc * int(i))
}
