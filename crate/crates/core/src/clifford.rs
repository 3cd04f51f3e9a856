//! The hyperbolic space `V = H¹(X) ⊕ H¹(X̂)`, its Clifford algebra in normal
//! order, the action on `S = ∧* H¹(X)`, and the Lie algebra `∧²V`.
//!
//! Generators of `V`: `x_i` is index `i`, `y_i` is index `2n + i`, with
//! `(x_i, y_j) = δ_ij`. A normal-ordered monomial `x_I y_J` is stored under the
//! mask `I | J << 2n`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::exterior::{bits, wedge_sign, Multivector};
use crate::field::{rat, Field};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HyperbolicSpace {
    pub n: usize,
}

impl HyperbolicSpace {
    pub fn new(n: usize) -> Self {
        assert!((1..=7).contains(&n), "half-rank out of range");
        HyperbolicSpace { n }
    }

    /// `2n`, the rank of `H¹(X)`.
    pub fn half(&self) -> usize {
        2 * self.n
    }

    /// `4n`, the rank of `V`.
    pub fn dim(&self) -> usize {
        4 * self.n
    }

    pub fn x(&self, i: usize) -> usize {
        i
    }

    pub fn y(&self, i: usize) -> usize {
        self.half() + i
    }

    /// Index of the generator pairing to 1 with `a`.
    pub fn partner(&self, a: usize) -> usize {
        let h = self.half();
        if a < h {
            a + h
        } else {
            a - h
        }
    }

    pub fn gram<F: Field>(&self, f: &F) -> Matrix<F::Elem> {
        let d = self.dim();
        (0..d).map(|a| (0..d).map(|b| if self.partner(a) == b { f.one() } else { f.zero() }).collect()).collect()
    }

    pub fn pair<F: Field>(&self, f: &F, v: &[F::Elem], w: &[F::Elem]) -> F::Elem {
        let h = self.half();
        let mut acc = f.zero();
        for i in 0..h {
            acc = f.add(&acc, &f.mul(&v[i], &w[h + i]));
            acc = f.add(&acc, &f.mul(&v[h + i], &w[i]));
        }
        acc
    }

    pub fn basis_vector<F: Field>(&self, f: &F, a: usize) -> Vec<F::Elem> {
        (0..self.dim()).map(|b| if a == b { f.one() } else { f.zero() }).collect()
    }

    /// Clifford action of a vector on a spinor: wedge by the x-part,
    /// contraction by the y-part.
    pub fn act_vector<F: Field>(&self, f: &F, v: &[F::Elem], lam: &Multivector<F::Elem>) -> Multivector<F::Elem> {
        let h = self.half();
        let mut out = Multivector::zero(h);
        for i in 0..h {
            if !f.is_zero(&v[i]) {
                out = out.add(f, &Multivector::generator(f, i, h).wedge(f, lam).scale(f, &v[i]));
            }
            if !f.is_zero(&v[h + i]) {
                out = out.add(f, &lam.contract_gen(f, i).scale(f, &v[h + i]));
            }
        }
        out
    }

    /// `m_{g_a}` on a spinor.
    pub fn act_generator<F: Field>(&self, f: &F, a: usize, lam: &Multivector<F::Elem>) -> Multivector<F::Elem> {
        let h = self.half();
        if a < h {
            Multivector::generator(f, a, h).wedge(f, lam)
        } else {
            lam.contract_gen(f, a - h)
        }
    }

    /// Spin action of `ξ ∈ ∧²V`: `Σ c_ab (m_a m_b - (g_a, g_b)/2)`, i.e. the
    /// Clifford action of the skew quantization of `ξ`.
    pub fn spin_action<F: Field>(&self, f: &F, xi: &Multivector<F::Elem>, lam: &Multivector<F::Elem>) -> Result<Multivector<F::Elem>> {
        if !xi.is_homogeneous(2) || xi.arity() != self.dim() {
            return Err(Error::NotHomogeneous(2));
        }
        let half = f.from_rational(&rat(1, 2));
        let mut out = Multivector::zero(self.half());
        for (m, c) in xi.terms() {
            let mut it = bits(*m);
            let (a, b) = (it.next().unwrap(), it.next().unwrap());
            let mut t = self.act_generator(f, a, &self.act_generator(f, b, lam));
            if self.partner(a) == b {
                t = t.sub(f, &lam.scale(f, &half));
            }
            out = out.add(f, &t.scale(f, c));
        }
        Ok(out)
    }

    /// `ad_ξ(u) = Σ c_ab ((g_b,u) g_a - (g_a,u) g_b)`, equal to `[Q(ξ), u]` in `C(V)`.
    pub fn ad<F: Field>(&self, f: &F, xi: &Multivector<F::Elem>, u: &[F::Elem]) -> Vec<F::Elem> {
        let mut out = vec![f.zero(); self.dim()];
        for (m, c) in xi.terms() {
            let mut it = bits(*m);
            let (a, b) = (it.next().unwrap(), it.next().unwrap());
            // (g_b, u) is the coefficient of the partner of b in u
            let pb = &u[self.partner(b)];
            let pa = &u[self.partner(a)];
            out[a] = f.add(&out[a], &f.mul(c, pb));
            out[b] = f.sub(&out[b], &f.mul(c, pa));
        }
        out
    }

    /// Matrix of `ad_ξ` acting on column vectors.
    pub fn ad_matrix<F: Field>(&self, f: &F, xi: &Multivector<F::Elem>) -> Matrix<F::Elem> {
        let cols: Vec<Vec<F::Elem>> = (0..self.dim()).map(|a| self.ad(f, xi, &self.basis_vector(f, a))).collect();
        crate::linalg::transpose(&cols)
    }

    /// Images of the generators under `ad_ξ`.
    pub fn ad_images<F: Field>(&self, f: &F, xi: &Multivector<F::Elem>) -> Vec<Vec<F::Elem>> {
        (0..self.dim()).map(|a| self.ad(f, xi, &self.basis_vector(f, a))).collect()
    }

    /// The derivation of `∧*V` extending `ad_ξ`.
    pub fn derivation<F: Field>(&self, f: &F, xi: &Multivector<F::Elem>, a: &Multivector<F::Elem>) -> Multivector<F::Elem> {
        a.derivation(f, &self.ad_images(f, xi))
    }

    /// Element of `∧²V` whose `ad` is the given matrix in `so(V)`.
    pub fn bivector_of_ad<F: Field>(&self, f: &F, m: &Matrix<F::Elem>) -> Multivector<F::Elem> {
        // ad_{g_a∧g_b}(g_{partner(b)}) = g_a, so c_ab = m[a][partner(b)].
        let d = self.dim();
        let mut out = Multivector::zero(d);
        for a in 0..d {
            for b in a + 1..d {
                out.add_term(f, (1 << a) | (1 << b), &m[a][self.partner(b)]);
            }
        }
        out
    }

    /// Skew bilinear form as a bivector via the pairing's dual basis:
    /// `Σ_{a<b} ω(e_a, e_b) e^a ∧ e^b` with `e^a` the partner of `e_a`.
    pub fn bivector_of_form<F: Field>(&self, f: &F, omega: &Matrix<F::Elem>) -> Multivector<F::Elem> {
        let d = self.dim();
        let mut out = Multivector::zero(d);
        for a in 0..d {
            for b in a + 1..d {
                let (pa, pb) = (self.partner(a), self.partner(b));
                let s = wedge_sign(1 << pa, 1 << pb);
                let c = if s == 1 { omega[a][b].clone() } else { f.neg(&omega[a][b]) };
                out.add_term(f, (1 << pa) | (1 << pb), &c);
            }
        }
        out
    }
}

/// Normal-ordered element of `C(V)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CliffordElem<E> {
    pub space: HyperbolicSpace,
    pub mv: Multivector<E>,
}

impl<E: Clone + PartialEq> CliffordElem<E> {
    pub fn new(space: HyperbolicSpace, mv: Multivector<E>) -> Self {
        assert_eq!(mv.arity(), space.dim());
        CliffordElem { space, mv }
    }

    pub fn zero(space: HyperbolicSpace) -> Self {
        Self::new(space, Multivector::zero(space.dim()))
    }

    pub fn scalar<F: Field<Elem = E>>(f: &F, space: HyperbolicSpace, c: E) -> Self {
        Self::new(space, Multivector::scalar(f, c, space.dim()))
    }

    pub fn generator<F: Field<Elem = E>>(f: &F, space: HyperbolicSpace, a: usize) -> Self {
        Self::new(space, Multivector::generator(f, a, space.dim()))
    }

    pub fn vector<F: Field<Elem = E>>(f: &F, space: HyperbolicSpace, v: &[E]) -> Self {
        Self::new(space, Multivector::from_vector(f, v))
    }

    pub fn add<F: Field<Elem = E>>(&self, f: &F, o: &Self) -> Self {
        Self::new(self.space, self.mv.add(f, &o.mv))
    }

    pub fn sub<F: Field<Elem = E>>(&self, f: &F, o: &Self) -> Self {
        Self::new(self.space, self.mv.sub(f, &o.mv))
    }

    pub fn scale<F: Field<Elem = E>>(&self, f: &F, c: &E) -> Self {
        Self::new(self.space, self.mv.scale(f, c))
    }

    pub fn is_zero(&self) -> bool {
        self.mv.is_zero()
    }

    /// Right multiplication by the generator `g_k`.
    pub fn mul_gen_right<F: Field<Elem = E>>(&self, f: &F, k: usize) -> Self {
        let h = self.space.half();
        let mut out = Multivector::zero(self.space.dim());
        let kbit = 1u64 << k;
        for (m, c) in self.mv.terms() {
            if k >= h {
                let s = wedge_sign(*m, kbit);
                if s != 0 {
                    out.add_term(f, m | kbit, &if s == 1 { c.clone() } else { f.neg(c) });
                }
                continue;
            }
            let xs = m & ((1u64 << h) - 1);
            let ys = m >> h;
            let b = ys.count_ones();
            // (-1)^b (x_I ∧ x_k) y_J
            let s = wedge_sign(xs, kbit);
            if s != 0 {
                let sign = if b.is_multiple_of(2) { s } else { -s };
                out.add_term(f, m | kbit, &if sign == 1 { c.clone() } else { f.neg(c) });
            }
            // contraction term from y_k ∈ J at 1-based position pos: (-1)^{b-pos}
            if ys >> k & 1 == 1 {
                let pos = (ys & ((1u64 << k) - 1)).count_ones() + 1;
                let sign = if (b - pos).is_multiple_of(2) { 1 } else { -1 };
                out.add_term(f, m & !(1u64 << (h + k)), &if sign == 1 { c.clone() } else { f.neg(c) });
            }
        }
        Self::new(self.space, out)
    }

    pub fn mul<F: Field<Elem = E>>(&self, f: &F, o: &Self) -> Self {
        assert_eq!(self.space, o.space);
        let mut out = Self::zero(self.space);
        for (m, c) in o.mv.terms() {
            let mut t = self.clone();
            for k in bits(*m) {
                t = t.mul_gen_right(f, k);
            }
            out = out.add(f, &t.scale(f, c));
        }
        out
    }

    /// Action on a spinor: y-contractions from the highest index first, then
    /// the x-block wedged on the left.
    pub fn act<F: Field<Elem = E>>(&self, f: &F, lam: &Multivector<E>) -> Multivector<E> {
        let h = self.space.half();
        let mut out = Multivector::zero(h);
        for (m, c) in self.mv.terms() {
            let xs = m & ((1u64 << h) - 1);
            let ys = m >> h;
            let mut t = lam.clone();
            let mut yl: Vec<usize> = bits(ys).collect();
            yl.reverse();
            for j in yl {
                t = t.contract_gen(f, j);
                if t.is_zero() {
                    break;
                }
            }
            if t.is_zero() {
                continue;
            }
            t = Multivector::monomial(f, xs, f.one(), h).wedge(f, &t);
            out = out.add(f, &t.scale(f, c));
        }
        out
    }

    /// Product of the generators of each monomial in reverse order.
    pub fn main_antiinv<F: Field<Elem = E>>(&self, f: &F) -> Self {
        let mut out = Self::zero(self.space);
        for (m, c) in self.mv.terms() {
            let mut t = Self::scalar(f, self.space, c.clone());
            let mut gens: Vec<usize> = bits(*m).collect();
            gens.reverse();
            for k in gens {
                t = t.mul_gen_right(f, k);
            }
            out = out.add(f, &t);
        }
        out
    }

    /// Negates the odd part.
    pub fn main_inv<F: Field<Elem = E>>(&self, f: &F) -> Self {
        Self::new(self.space, self.mv.even_part().sub(f, &self.mv.odd_part()))
    }

    pub fn star<F: Field<Elem = E>>(&self, f: &F) -> Self {
        self.main_antiinv(f).main_inv(f)
    }
}

/// `ρ_v(w) = v w v⁻¹` for `(v,v) = ±2`.
pub fn reflection<F: Field>(f: &F, space: HyperbolicSpace, v: &[F::Elem], w: &[F::Elem]) -> Result<Vec<F::Elem>> {
    let vv = space.pair(f, v, v);
    let two = f.from_i64(2);
    let sign = if vv == two {
        f.one()
    } else if vv == f.neg(&two) {
        f.from_i64(-1)
    } else {
        return Err(Error::BadReflection(format!("{vv:?}")));
    };
    // v·v = (v,v)/2 = ±1, so v⁻¹ = ±v.
    let cv = CliffordElem::vector(f, space, v);
    let cw = CliffordElem::vector(f, space, w);
    let prod = cv.mul(f, &cw).mul(f, &cv).scale(f, &sign);
    if !prod.mv.is_homogeneous(1) {
        return Err(Error::Internal("reflection left V".into()));
    }
    Ok(prod.mv.coords(&(0..space.dim()).map(|a| 1u64 << a).collect::<Vec<_>>(), &f.zero()))
}

/// Reconstructs the normal-ordered Clifford element acting on `S` as the
/// operator `op` (given by its values on basis spinors `x_K`).
pub fn desymbol<F: Field>(
    f: &F,
    space: HyperbolicSpace,
    op: &dyn Fn(u64) -> Multivector<F::Elem>,
) -> Result<CliffordElem<F::Elem>> {
    let h = space.half();
    let mut masks: Vec<u64> = (0..1u64 << h).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let mut acc = CliffordElem::zero(space);
    for j in masks {
        let target = op(j);
        if target.arity() != h {
            return Err(Error::LengthMismatch { expected: h, got: target.arity() });
        }
        let xj = Multivector::monomial(f, j, f.one(), h);
        let rest = target.sub(f, &acc.act(f, &xj));
        if rest.is_zero() {
            continue;
        }
        // y_J x_J = ±1
        let yj = CliffordElem::new(space, Multivector::monomial(f, j << h, f.one(), space.dim()));
        let s = yj.act(f, &xj).get(0).cloned().expect("y_J x_J is a unit");
        let mut add = Multivector::zero(space.dim());
        for (i, c) in rest.terms() {
            add.add_term(f, i | (j << h), &f.mul(&s, c));
        }
        acc = acc.add(f, &CliffordElem::new(space, add));
    }
    Ok(acc)
}

/// Skew quantization `∧*V → C(V)`, sending `v_1∧…∧v_k` to the antisymmetrized
/// Clifford product.
pub struct SkewQuantizer<F: Field> {
    space: HyperbolicSpace,
    cache: HashMap<u64, CliffordElem<F::Elem>>,
}

impl<F: Field> SkewQuantizer<F> {
    pub fn new(space: HyperbolicSpace) -> Self {
        SkewQuantizer { space, cache: HashMap::new() }
    }

    fn monomial(&mut self, f: &F, m: u64) -> CliffordElem<F::Elem> {
        if let Some(c) = self.cache.get(&m) {
            return c.clone();
        }
        let out = if m == 0 {
            CliffordElem::scalar(f, self.space, f.one())
        } else {
            // Q(w ∧ g) = Q(w)·g - ½ Q(w ⌞ g), g the highest generator.
            let g = 63 - m.leading_zeros() as usize;
            let w = m & !(1u64 << g);
            let mut out = self.monomial(f, w).mul_gen_right(f, g);
            let p = self.space.partner(g);
            if w >> p & 1 == 1 {
                // right contraction sign: generators of w after p
                let after = (w >> p >> 1).count_ones();
                let sign = if after.is_multiple_of(2) { 1 } else { -1 };
                let q = self.monomial(f, w & !(1u64 << p));
                out = out.sub(f, &q.scale(f, &f.from_rational(&rat(sign, 2))));
            }
            out
        };
        self.cache.insert(m, out.clone());
        out
    }

    pub fn quantize(&mut self, f: &F, a: &Multivector<F::Elem>) -> CliffordElem<F::Elem> {
        let mut out = CliffordElem::zero(self.space);
        for (m, c) in a.terms() {
            out = out.add(f, &self.monomial(f, *m).scale(f, c));
        }
        out
    }

    /// Inverse of [`Self::quantize`], peeling the top degree repeatedly.
    pub fn dequantize(&mut self, f: &F, c: &CliffordElem<F::Elem>) -> Multivector<F::Elem> {
        let mut rest = c.clone();
        let mut out = Multivector::zero(self.space.dim());
        while let Some(d) = rest.mv.max_degree() {
            let top = rest.mv.degree_part(d);
            out = out.add(f, &top);
            rest = rest.sub(f, &self.quantize(f, &top));
        }
        out
    }
}
