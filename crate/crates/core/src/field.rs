//! Exact arithmetic in the biquadratic tower `Q ⊆ F ⊆ K`, with `F = Q(√p)`
//! (or `Q` when `p = 1`) and `K = F(√-q)`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// A field together with the operations the linear algebra needs.
///
/// Elements carry no reference to their field; every operation goes through
/// the context object, so a tower element never has to store `p` and `q`.
pub trait Field: Clone + fmt::Debug + Send + Sync {
    type Elem: Clone + PartialEq + fmt::Debug + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    fn from_rational(&self, q: &Rational) -> Self::Elem;

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(a, &self.neg(b))
    }

    fn from_i64(&self, n: i64) -> Self::Elem {
        self.from_rational(&int(n))
    }

    fn is_one(&self, a: &Self::Elem) -> bool {
        *a == self.one()
    }

    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem> {
        let bi = self.inv(b).ok_or(Error::DivisionByZero)?;
        Ok(self.mul(a, &bi))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Rationals;

impl Field for Rationals {
    type Elem = Rational;

    fn zero(&self) -> Rational {
        Rational::zero()
    }
    fn one(&self) -> Rational {
        Rational::one()
    }
    fn is_zero(&self, a: &Rational) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &Rational, b: &Rational) -> Rational {
        a + b
    }
    fn neg(&self, a: &Rational) -> Rational {
        -a
    }
    fn sub(&self, a: &Rational, b: &Rational) -> Rational {
        a - b
    }
    fn mul(&self, a: &Rational, b: &Rational) -> Rational {
        a * b
    }
    fn inv(&self, a: &Rational) -> Option<Rational> {
        if a.is_zero() {
            None
        } else {
            Some(a.recip())
        }
    }
    fn from_rational(&self, q: &Rational) -> Rational {
        q.clone()
    }
}

/// Parameters of the tower. `p = 1` encodes `F = Q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerSpec {
    p: i64,
    q: Rational,
}

#[derive(Serialize, Deserialize)]
struct RationalJson {
    num: i64,
    den: i64,
}

#[derive(Serialize, Deserialize)]
struct TowerJson {
    p: i64,
    q: RationalJson,
}

impl Serialize for TowerSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use num_traits::ToPrimitive;
        let num = self.q.numer().to_i64().ok_or_else(|| serde::ser::Error::custom("q too large"))?;
        let den = self.q.denom().to_i64().ok_or_else(|| serde::ser::Error::custom("q too large"))?;
        TowerJson { p: self.p, q: RationalJson { num, den } }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TowerSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = TowerJson::deserialize(d)?;
        if j.q.den == 0 {
            return Err(serde::de::Error::custom("q has zero denominator"));
        }
        TowerSpec::new(j.p, rat(j.q.num, j.q.den)).map_err(serde::de::Error::custom)
    }
}

fn is_square_free(p: i64) -> bool {
    let mut k = 2i64;
    while k * k <= p {
        if p % (k * k) == 0 {
            return false;
        }
        k += 1;
    }
    true
}

impl TowerSpec {
    pub fn new(p: i64, q: Rational) -> Result<Self> {
        if p < 1 {
            return Err(Error::InvalidInput(format!("p = {p} must be positive")));
        }
        if p > 1 && (p.sqrt() * p.sqrt() == p || !is_square_free(p)) {
            return Err(Error::InvalidInput(format!("p = {p} must be square-free")));
        }
        if !q.is_positive() {
            return Err(Error::InvalidInput(format!("q = {q} must be positive")));
        }
        Ok(TowerSpec { p, q })
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> &Rational {
        &self.q
    }

    /// `[F:Q]`.
    pub fn f_degree(&self) -> usize {
        if self.p == 1 {
            1
        } else {
            2
        }
    }

    /// `e = [K:Q]`.
    pub fn degree(&self) -> usize {
        2 * self.f_degree()
    }

    pub fn elem(&self, c: [Rational; 4]) -> FieldElem {
        let [a, b, c2, d] = c;
        if self.p == 1 {
            FieldElem { c: [a + b, Rational::zero(), c2 + d, Rational::zero()] }
        } else {
            FieldElem { c: [a, b, c2, d] }
        }
    }

    pub fn sqrt_p(&self) -> FieldElem {
        self.elem([Rational::zero(), Rational::one(), Rational::zero(), Rational::zero()])
    }

    pub fn sqrt_minus_q(&self) -> FieldElem {
        self.elem([Rational::zero(), Rational::zero(), Rational::one(), Rational::zero()])
    }

    /// The ι-conjugation: fixes F, negates √-q.
    pub fn iota(&self, a: &FieldElem) -> FieldElem {
        FieldElem { c: [a.c[0].clone(), a.c[1].clone(), -&a.c[2], -&a.c[3]] }
    }

    pub fn in_q(&self, a: &FieldElem) -> bool {
        a.c[1].is_zero() && a.c[2].is_zero() && a.c[3].is_zero()
    }

    pub fn in_f(&self, a: &FieldElem) -> bool {
        a.c[2].is_zero() && a.c[3].is_zero()
    }

    pub fn to_rational(&self, a: &FieldElem) -> Option<Rational> {
        self.in_q(a).then(|| a.c[0].clone())
    }

    /// Sum over the embeddings of the named subfield.
    pub fn trace_to_q(&self, a: &FieldElem, from: Subfield) -> Result<Rational> {
        match from {
            Subfield::Q => self.to_rational(a).ok_or(Error::NotInSubfield("Q")),
            Subfield::F => {
                if !self.in_f(a) {
                    return Err(Error::NotInSubfield("F"));
                }
                Ok(&a.c[0] * int(self.f_degree() as i64))
            }
            Subfield::K => Ok(&a.c[0] * int(self.degree() as i64)),
        }
    }

    /// Field embeddings of `K` (sign flips on `√p` and `√-q`).
    pub fn embeddings(&self) -> Vec<Embedding> {
        let sps: &[i8] = if self.p == 1 { &[1] } else { &[1, -1] };
        let mut out = Vec::new();
        for &sp in sps {
            for sq in [1, -1] {
                out.push(Embedding { sign_p: sp, sign_q: sq });
            }
        }
        out
    }

    /// Embeddings of `F`, recorded by their sign on `√p`.
    pub fn f_embeddings(&self) -> Vec<i8> {
        if self.p == 1 {
            vec![1]
        } else {
            vec![1, -1]
        }
    }

    pub fn apply(&self, g: Embedding, a: &FieldElem) -> FieldElem {
        let sp = int(g.sign_p as i64);
        let sq = int(g.sign_q as i64);
        FieldElem { c: [a.c[0].clone(), &a.c[1] * &sp, &a.c[2] * &sq, &a.c[3] * (&sp * &sq)] }
    }

    /// Norm to `F` of an element, `a·ι(a)`.
    pub fn norm_to_f(&self, a: &FieldElem) -> FieldElem {
        self.mul(a, &self.iota(a))
    }

    pub fn enumerate_cm_types(&self) -> Vec<CmType> {
        let m = self.f_degree();
        (0..1usize << m)
            .map(|bits| CmType {
                signs: (0..m).map(|i| if bits >> i & 1 == 0 { 1 } else { -1 }).collect(),
            })
            .collect()
    }

    fn f_mul(&self, a0: &Rational, a1: &Rational, b0: &Rational, b1: &Rational) -> (Rational, Rational) {
        (a0 * b0 + a1 * b1 * int(self.p), a0 * b1 + a1 * b0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subfield {
    Q,
    F,
    K,
}

/// Coordinates over `{1, √p, √-q, √p·√-q}`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FieldElem {
    pub c: [Rational; 4],
}

impl FieldElem {
    pub fn coords(&self) -> &[Rational; 4] {
        &self.c
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["", "√p", "√-q", "√p√-q"];
        let mut first = true;
        for (c, n) in self.c.iter().zip(names) {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if n.is_empty() {
                write!(f, "{c}")?;
            } else {
                write!(f, "({c}){n}")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// An element of `Gal(K/Q)`, standing for an embedding `K → C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Embedding {
    pub sign_p: i8,
    pub sign_q: i8,
}

impl Embedding {
    pub fn identity() -> Self {
        Embedding { sign_p: 1, sign_q: 1 }
    }

    /// `σ∘ι`.
    pub fn conjugate(self) -> Self {
        Embedding { sign_p: self.sign_p, sign_q: -self.sign_q }
    }
}

/// For each embedding of `F` (indexed as in [`TowerSpec::f_embeddings`]),
/// the sign on `√-q` of the chosen embedding of `K` above it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CmType {
    pub signs: Vec<i8>,
}

impl CmType {
    pub fn conjugate(&self) -> CmType {
        CmType { signs: self.signs.iter().map(|s| -s).collect() }
    }

    pub fn embeddings(&self, tower: &TowerSpec) -> Vec<Embedding> {
        tower
            .f_embeddings()
            .into_iter()
            .zip(&self.signs)
            .map(|(sp, &sq)| Embedding { sign_p: sp, sign_q: sq })
            .collect()
    }

    /// `|T ∩ T'|`.
    pub fn overlap(&self, other: &CmType) -> usize {
        self.signs.iter().zip(&other.signs).filter(|(a, b)| a == b).count()
    }

    pub fn label(&self) -> String {
        self.signs.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
    }
}

impl Field for TowerSpec {
    type Elem = FieldElem;

    fn zero(&self) -> FieldElem {
        FieldElem { c: [Rational::zero(), Rational::zero(), Rational::zero(), Rational::zero()] }
    }
    fn one(&self) -> FieldElem {
        FieldElem { c: [Rational::one(), Rational::zero(), Rational::zero(), Rational::zero()] }
    }
    fn is_zero(&self, a: &FieldElem) -> bool {
        a.c.iter().all(Zero::is_zero)
    }
    fn add(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        FieldElem { c: [&a.c[0] + &b.c[0], &a.c[1] + &b.c[1], &a.c[2] + &b.c[2], &a.c[3] + &b.c[3]] }
    }
    fn neg(&self, a: &FieldElem) -> FieldElem {
        FieldElem { c: [-&a.c[0], -&a.c[1], -&a.c[2], -&a.c[3]] }
    }
    fn sub(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        FieldElem { c: [&a.c[0] - &b.c[0], &a.c[1] - &b.c[1], &a.c[2] - &b.c[2], &a.c[3] - &b.c[3]] }
    }
    fn mul(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        // (A0 + A1 r)(B0 + B1 r) with r² = -q and A_i, B_i in F.
        let (p0, p1) = self.f_mul(&a.c[0], &a.c[1], &b.c[0], &b.c[1]);
        let (q0, q1) = self.f_mul(&a.c[2], &a.c[3], &b.c[2], &b.c[3]);
        let (r0, r1) = self.f_mul(&a.c[0], &a.c[1], &b.c[2], &b.c[3]);
        let (s0, s1) = self.f_mul(&a.c[2], &a.c[3], &b.c[0], &b.c[1]);
        FieldElem { c: [p0 - &self.q * q0, p1 - &self.q * q1, r0 + s0, r1 + s1] }
    }
    fn inv(&self, a: &FieldElem) -> Option<FieldElem> {
        if self.is_zero(a) {
            return None;
        }
        let conj = self.iota(a);
        let n = self.mul(a, &conj);
        // n lies in F; invert x0 + x1√p by its F-conjugate.
        let (x0, x1) = (&n.c[0], &n.c[1]);
        let nf = x0 * x0 - x1 * x1 * int(self.p);
        let ninv = FieldElem { c: [x0 / &nf, -(x1 / &nf), Rational::zero(), Rational::zero()] };
        Some(self.mul(&conj, &ninv))
    }
    fn from_rational(&self, q: &Rational) -> FieldElem {
        FieldElem { c: [q.clone(), Rational::zero(), Rational::zero(), Rational::zero()] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(p: i64, q: i64) -> TowerSpec {
        TowerSpec::new(p, int(q)).unwrap()
    }

    fn e(k: &TowerSpec, c: [i64; 4]) -> FieldElem {
        k.elem(c.map(int))
    }

    #[test]
    fn defining_relations() {
        let k = t(2, 3);
        let r = k.sqrt_minus_q();
        assert_eq!(k.mul(&r, &r), k.from_i64(-3));
        let s = k.sqrt_p();
        assert_eq!(k.mul(&s, &s), k.from_i64(2));
        assert_eq!(k.iota(&s), s);
        let a = e(&k, [3, 0, 2, 0]);
        assert_eq!(k.iota(&a), e(&k, [3, 0, -2, 0]));
    }

    #[test]
    fn traces() {
        let k = t(2, 1);
        assert_eq!(k.trace_to_q(&k.sqrt_p(), Subfield::F).unwrap(), int(0));
        assert_eq!(k.trace_to_q(&k.one(), Subfield::F).unwrap(), int(2));
        assert_eq!(k.trace_to_q(&k.sqrt_minus_q(), Subfield::K).unwrap(), int(0));
        assert!(k.trace_to_q(&k.sqrt_minus_q(), Subfield::F).is_err());
        // Direct sum over the Galois group.
        let a = e(&k, [5, 7, -1, 2]);
        let direct = k.embeddings().iter().fold(k.zero(), |acc, g| k.add(&acc, &k.apply(*g, &a)));
        assert_eq!(k.to_rational(&direct).unwrap(), k.trace_to_q(&a, Subfield::K).unwrap());
    }

    #[test]
    fn cm_types() {
        assert_eq!(t(1, 2).enumerate_cm_types().len(), 2);
        let types = t(2, 1).enumerate_cm_types();
        assert_eq!(types.len(), 4);
        for ty in &types {
            assert_eq!(ty.conjugate().conjugate(), *ty);
            assert_ne!(ty.conjugate(), *ty);
            assert!(types.contains(&ty.conjugate()));
        }
    }

    #[test]
    fn p_one_folds_coordinates() {
        let k = t(1, 5);
        assert_eq!(k.sqrt_p(), k.one());
        assert!(k.in_q(&k.sqrt_p()));
    }

    #[test]
    fn rejects_bad_towers() {
        assert!(TowerSpec::new(4, int(1)).is_err());
        assert!(TowerSpec::new(12, int(1)).is_err());
        assert!(TowerSpec::new(2, int(-1)).is_err());
        assert!(TowerSpec::new(2, int(0)).is_err());
        assert!(t(2, 1).inv(&t(2, 1).zero()).is_none());
    }

    #[test]
    fn json_roundtrip() {
        let k = TowerSpec::new(3, rat(5, 2)).unwrap();
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(s, r#"{"p":3,"q":{"num":5,"den":2}}"#);
        let back: TowerSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, k);
    }

    fn arb_tower() -> impl Strategy<Value = TowerSpec> {
        (prop::sample::select(vec![1i64, 2, 3, 5, 6]), 1i64..6, 1i64..4)
            .prop_map(|(p, qn, qd)| TowerSpec::new(p, rat(qn, qd)).unwrap())
    }

    fn arb_elem(k: TowerSpec) -> impl Strategy<Value = FieldElem> {
        prop::array::uniform4(-6i64..7).prop_map(move |c| k.elem(c.map(int)))
    }

    proptest! {
        #[test]
        fn ring_axioms(k in arb_tower(), seed in prop::array::uniform4(-6i64..7),
                       s2 in prop::array::uniform4(-6i64..7), s3 in prop::array::uniform4(-6i64..7)) {
            let (a, b, c) = (e(&k, seed), e(&k, s2), e(&k, s3));
            prop_assert_eq!(k.mul(&a, &b), k.mul(&b, &a));
            prop_assert_eq!(k.mul(&k.mul(&a, &b), &c), k.mul(&a, &k.mul(&b, &c)));
            prop_assert_eq!(k.mul(&a, &k.add(&b, &c)), k.add(&k.mul(&a, &b), &k.mul(&a, &c)));
            prop_assert_eq!(k.iota(&k.mul(&a, &b)), k.mul(&k.iota(&a), &k.iota(&b)));
            prop_assert_eq!(k.iota(&k.iota(&a)), a.clone());
            prop_assert_eq!(k.iota(&a) == a, k.in_f(&a));
            if !k.is_zero(&a) {
                prop_assert_eq!(k.mul(&a, &k.inv(&a).unwrap()), k.one());
            }
            for g in k.embeddings() {
                prop_assert_eq!(k.apply(g, &k.mul(&a, &b)), k.mul(&k.apply(g, &a), &k.apply(g, &b)));
                prop_assert_eq!(k.apply(g.conjugate(), &a), k.iota(&k.apply(g, &a)));
            }
        }

        #[test]
        fn norm_form_positive(a in arb_tower().prop_flat_map(|k| (Just(k.clone()), arb_elem(k)))) {
            let (k, a) = a;
            let tr = k.trace_to_q(&k.norm_to_f(&a), Subfield::K).unwrap();
            prop_assert!(tr >= int(0));
            prop_assert_eq!(tr.is_zero(), k.is_zero(&a));
        }
    }
}
