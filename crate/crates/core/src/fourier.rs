//! Cohomological integral transforms between Künneth exterior algebras:
//! the Poincaré-bundle transform, `μ_*`, the transform `Φ^H` from
//! `H*(X×X)` to `H*(X×X̂) = ∧*V`, its equivariant normalization `φ̃`, and
//! Chevalley's map `S ⊗ S → ∧*V`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::clifford::{desymbol, HyperbolicSpace, SkewQuantizer};
use crate::error::{Error, Result};
use crate::exterior::{full_mask, kunneth, lift, s_pairing, tau_sign, wedge_sign, Multivector};
use crate::field::{int, rat, Field, FieldElem, Rational, Rationals};
use crate::linalg::{self, Matrix};
use crate::weil::{mv_coords, mv_rank, q_basis, WeilStructure};
use num_traits::Zero;

const Q: Rationals = Rationals;

/// `∧*(A_1 ⊕ … ⊕ A_r)` with the factor boundaries recorded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductAlgebra {
    arities: Vec<usize>,
}

impl ProductAlgebra {
    pub fn new(arities: Vec<usize>) -> Result<Self> {
        if arities.iter().sum::<usize>() > 63 {
            return Err(Error::InvalidInput("product algebra has more than 63 generators".into()));
        }
        Ok(ProductAlgebra { arities })
    }

    pub fn arity(&self) -> usize {
        self.arities.iter().sum()
    }

    pub fn factors(&self) -> &[usize] {
        &self.arities
    }

    pub fn offset(&self, i: usize) -> usize {
        self.arities[..i].iter().sum()
    }

    fn check(&self, i: usize) -> Result<()> {
        if i >= self.arities.len() {
            return Err(Error::InvalidInput(format!("no factor {i} in a product of {}", self.arities.len())));
        }
        Ok(())
    }

    /// Pullback from factor `i`.
    pub fn pullback<E: Clone + PartialEq>(&self, a: &Multivector<E>, i: usize) -> Result<Multivector<E>> {
        self.check(i)?;
        if a.arity() != self.arities[i] {
            return Err(Error::SpaceMismatch(self.arities[i], a.arity()));
        }
        Ok(a.embed(self.arity(), self.offset(i)))
    }

    /// Integration over factor `i`: the coefficient of its top monomial after
    /// moving those generators to the front. The result lives on the
    /// remaining factors, in order.
    pub fn pushforward<F: Field>(&self, f: &F, a: &Multivector<F::Elem>, i: usize) -> Result<Multivector<F::Elem>> {
        self.check(i)?;
        if a.arity() != self.arity() {
            return Err(Error::SpaceMismatch(self.arity(), a.arity()));
        }
        let off = self.offset(i);
        let r = self.arities[i];
        let fac = full_mask(r) << off;
        let below = (1u64 << off) - 1;
        let mut out = Multivector::zero(self.arity() - r);
        for (m, c) in a.terms() {
            if m & fac != fac {
                continue;
            }
            let before = (m & below).count_ones() as usize;
            let rest = (m & below) | ((m & !below & !fac) >> r);
            let c = if (before * r) % 2 == 1 { f.neg(c) } else { c.clone() };
            out.add_term(f, rest, &c);
        }
        Ok(out)
    }

    /// The product with factor `i` removed.
    pub fn without(&self, i: usize) -> Result<ProductAlgebra> {
        self.check(i)?;
        let mut a = self.arities.clone();
        a.remove(i);
        Ok(ProductAlgebra { arities: a })
    }
}

type BasisFn = dyn Fn(u64) -> Multivector<Rational> + Send + Sync;

/// A linear map between exterior algebras, given by its (lazily computed,
/// cached) values on monomials.
#[derive(Clone)]
pub struct TransformMap {
    src: usize,
    dst: usize,
    basis: Arc<BasisFn>,
    cache: Arc<RwLock<HashMap<u64, Multivector<Rational>>>>,
}

impl std::fmt::Debug for TransformMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TransformMap({} -> {})", self.src, self.dst)
    }
}

impl TransformMap {
    pub fn new(src: usize, dst: usize, basis: impl Fn(u64) -> Multivector<Rational> + Send + Sync + 'static) -> Self {
        TransformMap { src, dst, basis: Arc::new(basis), cache: Arc::new(RwLock::new(HashMap::new())) }
    }

    pub fn src(&self) -> usize {
        self.src
    }

    pub fn dst(&self) -> usize {
        self.dst
    }

    pub fn image(&self, m: u64) -> Multivector<Rational> {
        if let Some(v) = self.cache.read().unwrap().get(&m) {
            return v.clone();
        }
        let v = (self.basis)(m);
        debug_assert_eq!(v.arity(), self.dst);
        self.cache.write().unwrap().insert(m, v.clone());
        v
    }

    pub fn apply(&self, a: &Multivector<Rational>) -> Result<Multivector<Rational>> {
        self.apply_over(&Q, a)
    }

    /// Applies the map to a multivector over any field containing `Q`.
    pub fn apply_over<F: Field>(&self, f: &F, a: &Multivector<F::Elem>) -> Result<Multivector<F::Elem>> {
        if a.arity() != self.src {
            return Err(Error::SpaceMismatch(self.src, a.arity()));
        }
        let mut acc: HashMap<u64, F::Elem> = HashMap::new();
        for (m, c) in a.terms() {
            for (t, v) in self.image(*m).terms() {
                let add = f.mul(c, &f.from_rational(v));
                let e = acc.entry(*t).or_insert_with(|| f.zero());
                *e = f.add(e, &add);
            }
        }
        Ok(Multivector::from_terms(f, self.dst, acc))
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &TransformMap) -> Result<TransformMap> {
        if self.dst != next.src {
            return Err(Error::SpaceMismatch(self.dst, next.src));
        }
        let (a, b) = (self.clone(), next.clone());
        Ok(TransformMap::new(self.src, next.dst, move |m| b.apply(&a.image(m)).expect("arity checked")))
    }

    /// `id ⊗ self` on `∧*(A ⊕ src)`.
    pub fn on_second(&self, first: usize) -> TransformMap {
        let t = self.clone();
        TransformMap::new(first + self.src, first + self.dst, move |m| {
            let a = Multivector::monomial(&Q, m & full_mask(first), int(1), first);
            kunneth(&Q, &a, &t.image(m >> first))
        })
    }

    /// Inverse of a map sending each monomial to a nonzero multiple of a
    /// distinct monomial.
    pub fn monomial_inverse(&self) -> Result<TransformMap> {
        if self.src != self.dst {
            return Err(Error::SpaceMismatch(self.src, self.dst));
        }
        let mut inv: HashMap<u64, Multivector<Rational>> = HashMap::new();
        for m in 0..1u64 << self.src {
            let img = self.image(m);
            if img.len() != 1 {
                return Err(Error::Internal("not a monomial map".into()));
            }
            let (t, c) = img.terms().iter().next().unwrap();
            if inv.insert(*t, Multivector::monomial(&Q, m, c.recip(), self.src)).is_some() {
                return Err(Error::Internal("monomial map is not injective".into()));
            }
        }
        let src = self.src;
        Ok(TransformMap::new(src, src, move |m| inv[&m].clone()))
    }
}

/// `(-1)^*`: multiplication by `(-1)^k` on degree `k`.
pub fn antipode(arity: usize) -> TransformMap {
    TransformMap::new(arity, arity, move |m| {
        let s = if m.count_ones() % 2 == 0 { 1 } else { -1 };
        Multivector::monomial(&Q, m, int(s), arity)
    })
}

/// Direction of the Poincaré-bundle transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `H*(X) → H*(X̂)`
    ToDual,
    /// `H*(X̂) → H*(X)`
    FromDual,
}

/// `c₁(P) = Σ x_i ∧ y_i` on `X × X̂` (`ToDual`) or on `X̂ × X` (`FromDual`),
/// source factor first.
pub fn poincare_class(h: usize, dir: Direction) -> Multivector<Rational> {
    let s = match dir {
        Direction::ToDual => 1,
        Direction::FromDual => -1,
    };
    Multivector::from_terms(&Q, 2 * h, (0..h).map(|i| ((1u64 << i) | (1u64 << (h + i)), int(s))))
}

/// `Φ_P^H(α) = pr_{2*}(pr_1^* α ∧ exp c₁(P))`.
pub fn fm_poincare(h: usize, dir: Direction) -> TransformMap {
    let prod = ProductAlgebra::new(vec![h, h]).unwrap();
    let kernel = poincare_class(h, dir).exp_even(&Q).unwrap();
    TransformMap::new(h, h, move |m| {
        let a = prod.pullback(&Multivector::monomial(&Q, m, int(1), h), 0).unwrap();
        prod.pushforward(&Q, &a.wedge(&Q, &kernel), 0).unwrap()
    })
}

/// `μ^*` on `H*(X × X)` for `μ(x, y) = (x + y, y)`: `a_i ↦ a_i + b_i`, `b_i ↦ b_i`.
pub fn mu_pullback(h: usize) -> TransformMap {
    mu_map(h, 1)
}

/// `μ_* = (μ^{-1})^*`: `a_i ↦ a_i - b_i`, `b_i ↦ b_i`.
pub fn mu_pushforward(h: usize) -> TransformMap {
    mu_map(h, -1)
}

fn mu_map(h: usize, s: i64) -> TransformMap {
    let images: Vec<Vec<Rational>> = (0..2 * h)
        .map(|i| {
            let mut v = vec![int(0); 2 * h];
            v[i] = int(1);
            if i < h {
                v[h + i] = int(s);
            }
            v
        })
        .collect();
    TransformMap::new(2 * h, 2 * h, move |m| {
        Multivector::monomial(&Q, m, int(1), 2 * h).pushforward_linear(&Q, &images, 2 * h)
    })
}

/// The transform family for `X` of dimension `n` (`h = 2n`).
#[derive(Clone, Debug)]
pub struct Transforms {
    pub space: HyperbolicSpace,
    /// `Φ^H: H*(X×X) → H*(X×X̂)`.
    pub phi_h: TransformMap,
    /// `μ_* ∘ (id ⊗ Φ_P)`, the inverse of `Φ^H`.
    pub phi_h_inv: TransformMap,
    /// `φ̃ = exp(-c₁(P)/2) ∧ Φ^H ∘ (id ⊗ τ)`.
    pub phi_tilde: TransformMap,
}

impl Transforms {
    pub fn new(space: HyperbolicSpace) -> Result<Self> {
        let h = space.half();
        let from_dual = fm_poincare(h, Direction::FromDual);
        let to_dual_inv = from_dual.monomial_inverse()?;
        let phi_h = mu_pullback(h).then(&to_dual_inv.on_second(h))?;
        let phi_h_inv = from_dual.on_second(h).then(&mu_pushforward(h))?;
        let twist = poincare_class(h, Direction::ToDual).scale(&Q, &rat(-1, 2)).exp_even(&Q)?;
        let inner = phi_h.clone();
        let phi_tilde = TransformMap::new(2 * h, 2 * h, move |m| {
            let b = (m >> h).count_ones() as usize;
            twist.wedge(&Q, &inner.image(m)).scale(&Q, &int(tau_sign(b) as i64))
        });
        Ok(Transforms { space, phi_h, phi_h_inv, phi_tilde })
    }

    pub fn half(&self) -> usize {
        self.space.half()
    }

    /// `φ̃` over any field containing `Q`.
    pub fn phi_tilde_over<F: Field>(&self, f: &F, u: &Multivector<F::Elem>) -> Result<Multivector<F::Elem>> {
        self.phi_tilde.apply_over(f, u)
    }
}

/// Applies `op` to the first (`which = 0`) or second tensor factor of an
/// element of `S ⊗ S = ∧*(H¹ ⊕ H¹)`. `op` must preserve parity.
pub fn on_factor<F: Field>(
    f: &F,
    h: usize,
    u: &Multivector<F::Elem>,
    which: usize,
    op: impl Fn(&Multivector<F::Elem>) -> Multivector<F::Elem>,
) -> Multivector<F::Elem> {
    let mut groups: HashMap<u64, Multivector<F::Elem>> = HashMap::new();
    for (m, c) in u.terms() {
        let (a, b) = (m & full_mask(h), m >> h);
        let (key, inner) = if which == 0 { (b, a) } else { (a, b) };
        groups.entry(key).or_insert_with(|| Multivector::zero(h)).add_term(f, inner, c);
    }
    let mut out = Multivector::zero(2 * h);
    let mut keys: Vec<u64> = groups.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        let img = op(&groups[&key]);
        let other = Multivector::monomial(f, key, f.one(), h);
        let t = if which == 0 { kunneth(f, &img, &other) } else { kunneth(f, &other, &img) };
        out = out.add(f, &t);
    }
    out
}

/// `m_ξ ⊗ 1 + 1 ⊗ m_ξ` on `S ⊗ S`.
pub fn diagonal_spin_action<F: Field>(f: &F, space: HyperbolicSpace, xi: &Multivector<F::Elem>, u: &Multivector<F::Elem>) -> Result<Multivector<F::Elem>> {
    let h = space.half();
    let act = |a: &Multivector<F::Elem>| space.spin_action(f, xi, a).expect("ξ is a bivector");
    if xi.max_degree().unwrap_or(2) != 2 || !xi.is_homogeneous(2) && !xi.is_zero() {
        return Err(Error::NotHomogeneous(2));
    }
    Ok(on_factor(f, h, u, 0, act).add(f, &on_factor(f, h, u, 1, act)))
}

/// Chevalley's map: `s ⊗ s'` goes to the symbol of the operator
/// `λ ↦ (s', λ)_S · s`.
pub fn chevalley<F: Field>(
    f: &F,
    space: HyperbolicSpace,
    quantizer: &mut SkewQuantizer<F>,
    s: &Multivector<F::Elem>,
    s2: &Multivector<F::Elem>,
) -> Result<Multivector<F::Elem>> {
    let h = space.half();
    let op = |j: u64| {
        let c = s_pairing(f, s2, &Multivector::monomial(f, j, f.one(), h)).expect("same arity");
        s.scale(f, &c)
    };
    let cl = desymbol(f, space, &op)?;
    Ok(quantizer.dequantize(f, &cl))
}

/// Chevalley's map on all of `S ⊗ S`.
pub fn chevalley_tensor<F: Field>(f: &F, space: HyperbolicSpace, u: &Multivector<F::Elem>) -> Result<Multivector<F::Elem>> {
    let h = space.half();
    let mut q = SkewQuantizer::new(space);
    let mut out = Multivector::zero(space.dim());
    for (m, c) in u.terms() {
        let a = Multivector::monomial(f, m & full_mask(h), f.one(), h);
        let b = Multivector::monomial(f, m >> h, f.one(), h);
        out = out.add(f, &chevalley(f, space, &mut q, &a, &b)?.scale(f, c));
    }
    Ok(out)
}

/// The duality `⋆` on `∧*V` relating Chevalley's map and `φ̃`: on a monomial
/// `g_I`, with `D` the partner set of `I` and `C` its complement,
/// `⋆ g_I = ε · sign(g_D ∧ g_C) · g_C`, where `ε` is the sign of the
/// permutation pairing `D` against `I`.
pub fn star<F: Field>(f: &F, space: HyperbolicSpace, a: &Multivector<F::Elem>) -> Multivector<F::Elem> {
    let full = full_mask(space.dim());
    let mut out = Multivector::zero(space.dim());
    for (m, c) in a.terms() {
        let d = dual_mask(space, *m);
        let comp = full & !d;
        let s = wedge_sign(d, comp) * pairing_sign(space, d, *m);
        let c = if s == 1 { c.clone() } else { f.neg(c) };
        out.add_term(f, comp, &c);
    }
    out
}

fn dual_mask(space: HyperbolicSpace, m: u64) -> u64 {
    crate::exterior::bits(m).fold(0, |acc, a| acc | (1u64 << space.partner(a)))
}

/// Sign of the permutation matching the generators of `d` (in order) with
/// their partners in `m` (in order).
fn pairing_sign(space: HyperbolicSpace, d: u64, m: u64) -> i32 {
    let md: Vec<usize> = crate::exterior::bits(m).collect();
    let perm: Vec<usize> =
        crate::exterior::bits(d).map(|a| md.iter().position(|&b| b == space.partner(a)).unwrap()).collect();
    let mut inv = 0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `τ` applied to the second tensor factor of `S ⊗ S`.
pub fn tau_second<F: Field>(f: &F, h: usize, u: &Multivector<F::Elem>) -> Multivector<F::Elem> {
    on_factor(f, h, u, 1, |b| b.tau(f))
}

/// `Φ^H(c₁ ⊠ c₂)` for rational classes on `X`.
pub fn transform_product(t: &Transforms, c1: &Multivector<Rational>, c2: &Multivector<Rational>) -> Result<Multivector<Rational>> {
    t.phi_h.apply(&kunneth(&Q, c1, c2))
}

/// Lifts a rational class before applying a map over a larger field.
pub fn lift_rational<F: Field>(f: &F, a: &Multivector<Rational>) -> Multivector<F::Elem> {
    lift(f, a)
}

/// Lowest `k` with a nonzero component in `∧^k`; the filtration level.
pub fn filtration_level<E: Clone + PartialEq>(a: &Multivector<E>) -> Result<usize> {
    a.lowest_degree().ok_or(Error::ZeroFiltration)
}

/// `B ⊗ B` graded by the overlap of CM types, and the map `Π: BB_1 → ∧^d V`.
pub struct SecantTensor<'a> {
    pub weil: &'a WeilStructure,
    pub transforms: &'a Transforms,
    /// Rational basis `b_i ⊗ b_j` of `B ⊗ B`, `i`-major.
    pub bb_basis: Vec<Multivector<Rational>>,
    /// `N[T][i]`: `ℓ_T = Σ_i N[T][i] b_i`.
    pub line_coords: Matrix<FieldElem>,
    line_coords_inv: Matrix<FieldElem>,
}

/// Components `γ_{T,T'}` of an element of `B ⊗ B` in the basis `ℓ_T ⊗ ℓ_T'`.
#[derive(Clone, Debug)]
pub struct BbDecomposition {
    /// `coeffs[T][T']`.
    pub coeffs: Matrix<FieldElem>,
    /// `γ_k` as elements of `S ⊗ S ⊗ K`, indexed by overlap `k`.
    pub graded: Vec<Multivector<FieldElem>>,
}

/// Outcome of the filtration check for one pair of CM types.
#[derive(Clone, Debug)]
pub struct LemmaWitness {
    pub t: usize,
    pub t2: usize,
    pub overlap: usize,
    pub level: usize,
    pub intersection_dim: usize,
    pub proportional: bool,
}

impl<'a> SecantTensor<'a> {
    pub fn new(weil: &'a WeilStructure, transforms: &'a Transforms) -> Result<Self> {
        let k = &weil.tower;
        let mut bb_basis = Vec::new();
        for bi in &weil.b {
            for bj in &weil.b {
                bb_basis.push(kunneth(&Q, bi, bj));
            }
        }
        let lifted: Vec<Multivector<FieldElem>> = weil.b.iter().map(|b| lift(k, b)).collect();
        let line_coords: Matrix<FieldElem> = weil
            .lines
            .iter()
            .map(|l| mv_coords(k, &lifted, l).ok_or_else(|| Error::Internal("pure spinor line outside B".into())))
            .collect::<Result<_>>()?;
        let line_coords_inv =
            linalg::inverse(k, &line_coords).ok_or_else(|| Error::Internal("lines do not span B".into()))?;
        Ok(SecantTensor { weil, transforms, bb_basis, line_coords, line_coords_inv })
    }

    fn m(&self) -> usize {
        self.weil.b.len()
    }

    /// `ℓ_T ⊗ ℓ_T'` in `S ⊗ S ⊗ K`.
    pub fn line_product(&self, t: usize, t2: usize) -> Multivector<FieldElem> {
        kunneth(&self.weil.tower, &self.weil.lines[t], &self.weil.lines[t2])
    }

    /// Rational bases of `BB_k`, `k = 0..=e/2`, as elements of `S ⊗ S`.
    pub fn bb_bases(&self) -> Result<Vec<Vec<Multivector<Rational>>>> {
        let k = &self.weil.tower;
        let m = self.m();
        let types = &self.weil.cm_types;
        let top = types[0].signs.len();
        (0..=top)
            .map(|ov| {
                let mut traces: Matrix<Rational> = Vec::new();
                for (i, ti) in types.iter().enumerate() {
                    for (j, tj) in types.iter().enumerate() {
                        if ti.overlap(tj) != ov {
                            continue;
                        }
                        let v: Vec<FieldElem> = (0..m * m)
                            .map(|ab| k.mul(&self.line_coords[i][ab / m], &self.line_coords[j][ab % m]))
                            .collect();
                        for c in q_basis(k) {
                            let tr: Vec<Rational> = v
                                .iter()
                                .map(|x| k.trace_to_q(&k.mul(&c, x), crate::field::Subfield::K))
                                .collect::<Result<_>>()?;
                            traces.push(tr);
                        }
                    }
                }
                let basis = linalg::span_basis(&Q, &traces, m * m);
                Ok(basis.iter().map(|v| self.from_bb_coords(&linalg::primitive(v))).collect())
            })
            .collect()
    }

    fn from_bb_coords(&self, v: &[Rational]) -> Multivector<Rational> {
        let mut out = Multivector::zero(2 * self.transforms.half());
        for (c, b) in v.iter().zip(&self.bb_basis) {
            if !c.is_zero() {
                out = out.add(&Q, &b.scale(&Q, c));
            }
        }
        out
    }

    /// Components of `u ∈ B ⊗ B` in the basis `ℓ_T ⊗ ℓ_T'`.
    pub fn decompose(&self, u: &Multivector<Rational>) -> Result<BbDecomposition> {
        let k = &self.weil.tower;
        let m = self.m();
        let c = mv_coords(&Q, &self.bb_basis, u).ok_or_else(|| Error::NotInSubspace("B ⊗ B".into()))?;
        let cm: Matrix<FieldElem> =
            (0..m).map(|i| (0..m).map(|j| k.from_rational(&c[i * m + j])).collect()).collect();
        // u = Σ c_ij b_i ⊗ b_j and b = N^{-1} ℓ
        let ninv = &self.line_coords_inv;
        let coeffs = linalg::mat_mul(k, &linalg::mat_mul(k, &linalg::transpose(ninv), &cm), ninv);
        let types = &self.weil.cm_types;
        let top = types[0].signs.len();
        let mut graded = vec![Multivector::zero(u.arity()); top + 1];
        for (i, ti) in types.iter().enumerate() {
            for (j, tj) in types.iter().enumerate() {
                if k.is_zero(&coeffs[i][j]) {
                    continue;
                }
                let ov = ti.overlap(tj);
                graded[ov] = graded[ov].add(k, &self.line_product(i, j).scale(k, &coeffs[i][j]));
            }
        }
        Ok(BbDecomposition { coeffs, graded })
    }

    /// `Π(γ)`: the degree-`d` part of `φ̃(γ)`.
    pub fn pi(&self, gamma: &Multivector<FieldElem>) -> Result<Multivector<FieldElem>> {
        Ok(self.transforms.phi_tilde_over(&self.weil.tower, gamma)?.degree_part(self.weil.d()))
    }

    pub fn pi_rational(&self, gamma: &Multivector<Rational>) -> Result<Multivector<Rational>> {
        Ok(self.transforms.phi_tilde.apply(gamma)?.degree_part(self.weil.d()))
    }

    /// `φ̃(ℓ_T ⊗ ℓ_T')` starts in degree `d·|T ∩ T'|` with leading part a
    /// nonzero multiple of `∧(W_T ∩ W_T')`.
    pub fn lemma_witness(&self, t: usize, t2: usize) -> Result<LemmaWitness> {
        let w = self.weil;
        let k = &w.tower;
        let img = self.transforms.phi_tilde_over(k, &self.line_product(t, t2))?;
        let level = filtration_level(&img)?;
        let inter = w.wt[t].intersect(k, &w.wt[t2])?;
        let line = inter.wedge_basis(k);
        let low = img.degree_part(level);
        let proportional = mv_rank(k, &[low, line]) == 1;
        Ok(LemmaWitness {
            t,
            t2,
            overlap: w.cm_types[t].overlap(&w.cm_types[t2]),
            level,
            intersection_dim: inter.dim(),
            proportional,
        })
    }

    /// For each embedding `σ` of `K`, `Σ Π(γ_{T,T'})` over the pairs with
    /// `T ∩ T' = {σ}`.
    pub fn criterion_sums(&self, dec: &BbDecomposition) -> Result<Vec<(crate::field::Embedding, Multivector<FieldElem>)>> {
        let w = self.weil;
        let k = &w.tower;
        let mut out = Vec::new();
        for g in k.embeddings() {
            let mut sum = Multivector::zero(w.space.dim());
            for (i, ti) in w.cm_types.iter().enumerate() {
                for (j, tj) in w.cm_types.iter().enumerate() {
                    let ei = ti.embeddings(k);
                    let common: Vec<_> = tj.embeddings(k).into_iter().filter(|e| ei.contains(e)).collect();
                    if common != [g] || k.is_zero(&dec.coeffs[i][j]) {
                        continue;
                    }
                    let gamma = self.line_product(i, j).scale(k, &dec.coeffs[i][j]);
                    sum = sum.add(k, &self.pi(&gamma)?);
                }
            }
            out.push((g, sum));
        }
        Ok(out)
    }

    /// True iff some `σ`-sum of `Π(γ_{T,T'})` is nonzero for `c₁ ⊗ c₂`.
    pub fn nonvanish_criterion(&self, c1: &Multivector<Rational>, c2: &Multivector<Rational>) -> Result<bool> {
        let dec = self.decompose(&kunneth(&Q, c1, c2))?;
        Ok(self.criterion_sums(&dec)?.iter().any(|(_, s)| !s.is_zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::full_mask;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mv(rng: &mut ChaCha8Rng, arity: usize, terms: usize) -> Multivector<Rational> {
        Multivector::from_terms(&Q, arity, (0..terms).map(|_| (rng.gen_range(0..1u64 << arity), int(rng.gen_range(-3..=3)))))
    }

    #[test]
    fn pushforward_basics() {
        let p = ProductAlgebra::new(vec![2, 3]).unwrap();
        let b = Multivector::from_terms(&Q, 3, [(0b101, int(2)), (0b010, int(-1))]);
        let top = Multivector::monomial(&Q, 0b11, int(1), 2);
        let a = p.pullback(&top, 0).unwrap().wedge(&Q, &p.pullback(&b, 1).unwrap());
        assert_eq!(p.pushforward(&Q, &a, 0).unwrap(), b);
        assert!(p.pushforward(&Q, &p.pullback(&b, 1).unwrap(), 0).unwrap().is_zero());
        assert!(p.pushforward(&Q, &a, 2).is_err());
        // integrating the second factor moves its generators past the first
        let x = Multivector::monomial(&Q, 0b1, int(1), 2);
        let topb = Multivector::monomial(&Q, 0b111, int(1), 3);
        let c = p.pullback(&x, 0).unwrap().wedge(&Q, &p.pullback(&topb, 1).unwrap());
        assert_eq!(p.pushforward(&Q, &c, 1).unwrap(), x.neg(&Q));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn projection_formula(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = ProductAlgebra::new(vec![4, 3]).unwrap();
            let a = random_mv(&mut rng, 7, 12);
            let c = random_mv(&mut rng, 3, 4);
            let lhs = p.pushforward(&Q, &p.pullback(&c, 1).unwrap().wedge(&Q, &a), 0).unwrap();
            let rhs = c.wedge(&Q, &p.pushforward(&Q, &a, 0).unwrap());
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn poincare_class_shape() {
        for h in [2, 4] {
            let c = poincare_class(h, Direction::ToDual);
            assert!(c.is_homogeneous(2));
            // restriction to either factor vanishes
            assert!(c.filter(|m| m >> h == 0).is_zero());
            assert!(c.filter(|m| m & full_mask(h) == 0).is_zero());
            let top = c.exp_even(&Q).unwrap().degree_part(2 * h);
            assert_eq!(top.len(), 1);
            let v = top.terms().values().next().unwrap().clone();
            assert!(v == int(1) || v == int(-1));
        }
        // at n = 1: exp(x1 y1 + x2 y2) has top x1 y1 x2 y2 = -x1 x2 y1 y2
        let top = poincare_class(2, Direction::ToDual).exp_even(&Q).unwrap().degree_part(4);
        assert_eq!(top, Multivector::monomial(&Q, 0b1111, int(-1), 4));
    }

    #[test]
    fn mukai_inversion() {
        for h in [2, 4] {
            let to = fm_poincare(h, Direction::ToDual);
            let from = fm_poincare(h, Direction::FromDual);
            assert_eq!(to.image(0).degree_part(h).len(), 1);
            assert_eq!(to.image(0).len(), 1);
            let comp = to.then(&from).unwrap();
            let sign = if (h / 2) % 2 == 0 { 1 } else { -1 };
            let anti = antipode(h);
            for m in 0..1u64 << h {
                assert_eq!(comp.image(m), anti.image(m).scale(&Q, &int(sign)), "h={h} m={m:b}");
            }
        }
    }

    #[test]
    fn orlov_round_trip() {
        for n in [1, 2] {
            let t = Transforms::new(HyperbolicSpace::new(n)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            for _ in 0..10 {
                let u = random_mv(&mut rng, 4 * n, 6);
                let v = t.phi_h.apply(&u).unwrap();
                assert_eq!(t.phi_h_inv.apply(&v).unwrap(), u);
                assert_eq!(t.phi_h.apply(&t.phi_h_inv.apply(&u).unwrap()).unwrap(), u);
            }
        }
        // regression: Φ^H(1 ⊗ 1) at n = 1
        let t = Transforms::new(HyperbolicSpace::new(1)).unwrap();
        let img = t.phi_h.image(0);
        assert_eq!(img.len(), 1);
        assert_eq!(img.max_degree(), Some(2));
    }

    fn check_equivariance(t: &Transforms, xi: &Multivector<Rational>, u: &Multivector<Rational>) {
        let sp = t.space;
        let lhs = t.phi_tilde.apply(&diagonal_spin_action(&Q, sp, xi, u).unwrap()).unwrap();
        let rhs = sp.derivation(&Q, xi, &t.phi_tilde.apply(u).unwrap());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn equivariance_n1() {
        let t = Transforms::new(HyperbolicSpace::new(1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for xi in crate::exterior::masks_of_degree(4, 2) {
            let xi = Multivector::monomial(&Q, xi, int(1), 4);
            for m in 0..16 {
                check_equivariance(&t, &xi, &Multivector::monomial(&Q, m, int(1), 4));
            }
            check_equivariance(&t, &xi, &random_mv(&mut rng, 4, 8));
        }
    }

    #[test]
    fn equivariance_n2_random() {
        let t = Transforms::new(HyperbolicSpace::new(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..6 {
            let xi = random_mv(&mut rng, 8, 4).degree_part(2);
            let u = random_mv(&mut rng, 8, 10);
            check_equivariance(&t, &xi, &u);
        }
    }

    #[test]
    fn extreme_filtration_levels() {
        let sp = HyperbolicSpace::new(2);
        let t = Transforms::new(sp).unwrap();
        let h = sp.half();
        let top = full_mask(h);
        // 1 and top_S are the pure spinors of the two coordinate Lagrangians
        for (m, level) in [(top << h, 0), (top, 0), (0, h), (top | (top << h), h)] {
            let img = t.phi_tilde.image(m);
            assert_eq!(filtration_level(&img).unwrap(), level, "{m:b}");
        }
        assert_eq!(t.phi_tilde.image(0).degree_part(h).len(), 1);
        assert!(filtration_level::<Rational>(&Multivector::zero(4)).is_err());
        assert_eq!(filtration_level(&Multivector::from_terms(&Q, 2, [(0, int(1)), (1, int(1))])).unwrap(), 0);
    }

    #[test]
    fn secant_tensor_fourfold() {
        let w = WeilStructure::build(&crate::weil::rm_fourfold()).unwrap();
        let t = Transforms::new(w.space).unwrap();
        let st = SecantTensor::new(&w, &t).unwrap();
        let bb = st.bb_bases().unwrap();
        assert_eq!(bb.iter().map(|b| b.len()).collect::<Vec<_>>(), vec![4, 8, 4]);
        for i in 0..4 {
            for j in 0..4 {
                let l = st.lemma_witness(i, j).unwrap();
                assert_eq!(l.level, w.d() * l.overlap);
                assert_eq!(l.intersection_dim, w.d() * l.overlap);
                assert!(l.proportional);
            }
        }
        let images: Vec<Multivector<Rational>> = bb[1].iter().map(|g| st.pi_rational(g).unwrap()).collect();
        let mut both = images.clone();
        both.extend(w.hw.iter().cloned());
        assert_eq!(mv_rank(&Q, &images), 4);
        assert_eq!(mv_rank(&Q, &both), 4);
    }

    #[test]
    fn secant_tensor_sixfold() {
        let w = WeilStructure::build(&crate::weil::sixfold(2)).unwrap();
        let t = Transforms::new(w.space).unwrap();
        let st = SecantTensor::new(&w, &t).unwrap();
        let bb = st.bb_bases().unwrap();
        assert_eq!(bb.iter().map(|b| b.len()).collect::<Vec<_>>(), vec![2, 2]);
        let images: Vec<Multivector<Rational>> = bb[1].iter().map(|g| st.pi_rational(g).unwrap()).collect();
        let mut both = images.clone();
        both.extend(w.hw.iter().cloned());
        assert_eq!((mv_rank(&Q, &images), mv_rank(&Q, &both)), (2, 2));
        let (a, b) = (&w.alpha, &w.beta);
        assert!(st.nonvanish_criterion(&a.add(&Q, b), &a.sub(&Q, b)).unwrap());
        let degenerate = kunneth(&Q, a, a).add(&Q, &kunneth(&Q, b, b).scale(&Q, &int(2)));
        let dec = st.decompose(&degenerate).unwrap();
        assert!(dec.graded[1].is_zero() && !dec.graded[0].is_zero());
        assert!(st.criterion_sums(&dec).unwrap().iter().all(|(_, s)| s.is_zero()));
        assert!(st.decompose(&Multivector::monomial(&Q, 1, int(1), 12)).is_err());
        assert!(st.pi(&Multivector::zero(12)).unwrap().is_zero());
    }

    #[test]
    fn chevalley_relation() {
        for n in [1, 2] {
            let sp = HyperbolicSpace::new(n);
            let t = Transforms::new(sp).unwrap();
            let h = sp.half();
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let samples: Vec<u64> = if n == 1 { (0..16).collect() } else { (0..12).map(|_| rng.gen_range(0..1u64 << (2 * h))).collect() };
            for m in samples {
                let u = Multivector::monomial(&Q, m, int(1), 2 * h);
                let chev = chevalley_tensor(&Q, sp, &u).unwrap();
                assert_eq!(t.phi_tilde.apply(&u).unwrap(), star(&Q, sp, &chev.tau(&Q)), "n={n} m={m:b}");
            }
        }
    }
}
