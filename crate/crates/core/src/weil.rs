//! The Weil structure attached to `(η̂, Θ, q)`: the exponential pure spinor,
//! `W`, the `K`-action `η` on `V`, the subspaces `W_T`, the secant space `B`,
//! the forms `Ξ_t`, `H_t`, the Weil classes `HW`, and the Lie algebra `g_B`.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::HyperbolicSpace;
use crate::error::{Error, Result};
use crate::exterior::{factorial, lift, masks_of_degree, Multivector};
use crate::field::{int, rat, CmType, Embedding, Field, FieldElem, Rational, Rationals, TowerSpec};
use crate::linalg::{self, Matrix};
use crate::spinor::IsotropicSubspace;

const Q: Rationals = Rationals;

/// A rational number in input JSON: an integer, `"a/b"`, or `{"num", "den"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RationalValue {
    Int(i64),
    Text(String),
    Frac { num: i64, den: i64 },
}

impl RationalValue {
    pub fn to_rational(&self) -> std::result::Result<Rational, String> {
        match self {
            RationalValue::Int(n) => Ok(int(*n)),
            RationalValue::Frac { num, den } => {
                if *den == 0 {
                    Err("zero denominator".into())
                } else {
                    Ok(rat(*num, *den))
                }
            }
            RationalValue::Text(s) => {
                let parse = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("bad rational {s:?}: {e}"));
                match s.split_once('/') {
                    Some((a, b)) => {
                        let d = parse(b)?;
                        if d == 0 {
                            return Err("zero denominator".into());
                        }
                        Ok(rat(parse(a)?, d))
                    }
                    None => Ok(int(parse(s)?)),
                }
            }
        }
    }

    pub fn from_rational(q: &Rational) -> Self {
        if q.is_integer() {
            if let Ok(n) = q.to_integer().try_into() {
                return RationalValue::Int(n);
            }
        }
        RationalValue::Text(q.to_string())
    }
}

#[derive(Serialize)]
struct DatumJson {
    tower: TowerSpec,
    n: usize,
    eta_hat: Vec<Vec<RationalValue>>,
    theta: Vec<Vec<[RationalValue; 2]>>,
}

/// Input data: the tower, `n = dim X`, the action `η̂` of `√p` on `H¹(X, Q)`
/// (column `j` is the image of `x_j`), and `Θ` as an alternating matrix of
/// `F`-coefficients `a + b√p` on the `F`-basis `x_1, …, x_{2n/[F:Q]}`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeilDatum {
    pub tower: TowerSpec,
    pub n: usize,
    pub eta_hat: Matrix<Rational>,
    pub theta: Vec<Vec<(Rational, Rational)>>,
}

impl Serialize for WeilDatum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DatumJson {
            tower: self.tower.clone(),
            n: self.n,
            eta_hat: self.eta_hat.iter().map(|r| r.iter().map(RationalValue::from_rational).collect()).collect(),
            theta: self
                .theta
                .iter()
                .map(|r| r.iter().map(|(a, b)| [RationalValue::from_rational(a), RationalValue::from_rational(b)]).collect())
                .collect(),
        }
        .serialize(s)
    }
}

/// A rational parsed while deserializing, so errors carry their JSON path.
struct ParsedRational(Rational);

impl<'de> Deserialize<'de> for ParsedRational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        RationalValue::deserialize(d)?.to_rational().map(ParsedRational).map_err(serde::de::Error::custom)
    }
}

#[derive(Deserialize)]
struct DatumIn {
    tower: TowerSpec,
    n: usize,
    eta_hat: Vec<Vec<ParsedRational>>,
    theta: Vec<Vec<[ParsedRational; 2]>>,
}

impl<'de> Deserialize<'de> for WeilDatum {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = DatumIn::deserialize(d)?;
        let datum = WeilDatum {
            tower: j.tower,
            n: j.n,
            eta_hat: j.eta_hat.into_iter().map(|r| r.into_iter().map(|x| x.0).collect()).collect(),
            theta: j.theta.into_iter().map(|r| r.into_iter().map(|[a, b]| (a.0, b.0)).collect()).collect(),
        };
        datum.validate().map_err(serde::de::Error::custom)?;
        Ok(datum)
    }
}

impl WeilDatum {
    /// `d = dim_K V`.
    pub fn d(&self) -> usize {
        4 * self.n / self.tower.degree()
    }

    /// `F`-rank of `H¹(X)`.
    pub fn f_rank(&self) -> usize {
        2 * self.n / self.tower.f_degree()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        let k = &self.tower;
        let h = 2 * self.n;
        if self.n == 0 || self.n > 4 {
            return bad(format!("n = {} out of the supported range 1..=4", self.n));
        }
        if !h.is_multiple_of(k.f_degree()) || !self.d().is_multiple_of(2) {
            return bad("H¹ must be free over F of even K-rank".into());
        }
        if self.eta_hat.len() != h || self.eta_hat.iter().any(|r| r.len() != h) {
            return bad(format!("eta_hat must be {h}×{h}"));
        }
        let e2 = linalg::mat_mul(&Q, &self.eta_hat, &self.eta_hat);
        if e2 != linalg::mat_scale(&Q, &int(k.p()), &linalg::identity(&Q, h)) {
            return bad("eta_hat does not square to p".into());
        }
        if k.p() == 1 && self.eta_hat != linalg::identity(&Q, h) {
            return bad("eta_hat must be the identity when p = 1".into());
        }
        let r = self.f_rank();
        if k.p() != 1 {
            let mut vs: Matrix<Rational> = Vec::new();
            for i in 0..r {
                let mut u = vec![int(0); h];
                u[i] = int(1);
                vs.push(linalg::mat_vec(&Q, &self.eta_hat, &u));
                vs.push(u);
            }
            if linalg::rank(&Q, &vs, h) != h {
                return bad("x_1..x_r is not an F-basis of H¹".into());
            }
        }
        if self.theta.len() != r || self.theta.iter().any(|row| row.len() != r) {
            return bad(format!("theta must be {r}×{r}"));
        }
        for i in 0..r {
            for j in 0..r {
                let (a, b) = &self.theta[i][j];
                let (c, d) = &self.theta[j][i];
                if a != &-c || b != &-d {
                    return bad("theta is not alternating".into());
                }
                if k.p() == 1 && !b.is_zero() {
                    return bad("theta has a √p component but F = Q".into());
                }
            }
        }
        let tm: Matrix<FieldElem> = self.theta_f();
        if linalg::rank(k, &tm, r) != r {
            return Err(Error::Degenerate("theta is degenerate".into()));
        }
        Ok(())
    }

    fn theta_f(&self) -> Matrix<FieldElem> {
        let k = &self.tower;
        self.theta
            .iter()
            .map(|row| row.iter().map(|(a, b)| k.add(&k.from_rational(a), &k.mul(&k.sqrt_p(), &k.from_rational(b)))).collect())
            .collect()
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 4] = ["sixfold-q2", "sixfold-q3", "sixfold-q5", "fourfold-rm2"];

/// Built-in instances: the principally polarized sixfold (`p = 1`, `n = 3`)
/// for `q ∈ {2, 3, 5}`, and a fourfold with real multiplication by `Q(√2)`.
pub fn preset(name: &str) -> Option<WeilDatum> {
    match name {
        "sixfold-q2" => Some(sixfold(2)),
        "sixfold-q3" => Some(sixfold(3)),
        "sixfold-q5" => Some(sixfold(5)),
        "fourfold-rm2" => Some(rm_fourfold()),
        _ => None,
    }
}

/// `Θ = x_1∧x_4 + x_2∧x_5 + x_3∧x_6`, `F = Q`.
pub fn sixfold(q: i64) -> WeilDatum {
    let mut theta = vec![vec![(int(0), int(0)); 6]; 6];
    for i in 0..3 {
        theta[i][i + 3] = (int(1), int(0));
        theta[i + 3][i] = (int(-1), int(0));
    }
    WeilDatum { tower: TowerSpec::new(1, int(q)).unwrap(), n: 3, eta_hat: linalg::identity(&Q, 6), theta }
}

/// `p = 2`, `q = 1`, `n = 2`: `η̂ x_1 = x_3`, `η̂ x_2 = x_4`, `Θ = u_1 ∧ u_2`
/// over `F` with `u_i = x_i`.
pub fn rm_fourfold() -> WeilDatum {
    let mut e = vec![vec![int(0); 4]; 4];
    e[2][0] = int(1);
    e[3][1] = int(1);
    e[0][2] = int(2);
    e[1][3] = int(2);
    let theta = vec![vec![(int(0), int(0)), (int(1), int(0))], vec![(int(-1), int(0)), (int(0), int(0))]];
    WeilDatum { tower: TowerSpec::new(2, int(1)).unwrap(), n: 2, eta_hat: e, theta }
}

/// Sum of the Galois conjugates of a multivector, as a rational multivector.
pub fn galois_trace(k: &TowerSpec, a: &Multivector<FieldElem>) -> Result<Multivector<Rational>> {
    let mut acc = Multivector::zero(a.arity());
    for g in k.embeddings() {
        acc = acc.add(k, &a.map_coeffs(|c| k.apply(g, c), |c| k.is_zero(c)));
    }
    to_rational_mv(k, &acc)
}

pub fn to_rational_mv(k: &TowerSpec, a: &Multivector<FieldElem>) -> Result<Multivector<Rational>> {
    let mut out = Multivector::zero(a.arity());
    for (m, c) in a.terms() {
        let r = k.to_rational(c).ok_or_else(|| Error::Internal("expected a rational multivector".into()))?;
        out.add_term(&Q, *m, &r);
    }
    Ok(out)
}

pub fn to_rational_matrix(k: &TowerSpec, a: &Matrix<FieldElem>) -> Result<Matrix<Rational>> {
    a.iter()
        .map(|r| r.iter().map(|c| k.to_rational(c).ok_or_else(|| Error::Internal("expected a rational matrix".into()))).collect())
        .collect()
}

pub fn lift_matrix(k: &TowerSpec, a: &Matrix<Rational>) -> Matrix<FieldElem> {
    a.iter().map(|r| r.iter().map(|c| k.from_rational(c)).collect()).collect()
}

pub fn lift_vec(k: &TowerSpec, v: &[Rational]) -> Vec<FieldElem> {
    v.iter().map(|c| k.from_rational(c)).collect()
}

/// `Q`-basis of `K`.
pub fn q_basis(k: &TowerSpec) -> Vec<FieldElem> {
    let (o, z) = (int(1), int(0));
    let mut out = vec![k.one(), k.sqrt_minus_q()];
    if k.p() != 1 {
        out.push(k.sqrt_p());
        out.push(k.elem([z.clone(), z.clone(), z, o]));
    }
    out
}

/// `Q`-basis of `K_- = {t : ι(t) = -t}`.
pub fn k_minus_basis(k: &TowerSpec) -> Vec<FieldElem> {
    let mut out = vec![k.sqrt_minus_q()];
    if k.p() != 1 {
        out.push(k.mul(&k.sqrt_p(), &k.sqrt_minus_q()));
    }
    out
}

/// Echelon basis (primitive integer rows) of the span of rational multivectors.
pub fn rational_span(vs: &[Multivector<Rational>]) -> Vec<Multivector<Rational>> {
    let Some(arity) = vs.first().map(|v| v.arity()) else {
        return Vec::new();
    };
    let mut masks: Vec<u64> = vs.iter().flat_map(|v| v.terms().keys().copied()).collect();
    masks.sort_unstable();
    masks.dedup();
    let rows: Matrix<Rational> = vs.iter().map(|v| v.coords(&masks, &int(0))).collect();
    linalg::span_basis(&Q, &rows, masks.len())
        .into_iter()
        .map(|r| Multivector::from_coords(&Q, arity, &masks, &linalg::primitive(&r)))
        .collect()
}

/// The rational subspace whose `K`-span is spanned by the given elements,
/// provided that span is Galois-stable.
pub fn rational_descent(k: &TowerSpec, vs: &[Multivector<FieldElem>]) -> Result<Vec<Multivector<Rational>>> {
    let mut traces = Vec::new();
    for v in vs {
        for c in q_basis(k) {
            traces.push(galois_trace(k, &v.scale(k, &c))?);
        }
    }
    Ok(rational_span(&traces))
}

/// Rank of a family of multivectors over a field.
pub fn mv_rank<F: Field>(f: &F, vs: &[Multivector<F::Elem>]) -> usize {
    let mut masks: Vec<u64> = vs.iter().flat_map(|v| v.terms().keys().copied()).collect();
    masks.sort_unstable();
    masks.dedup();
    let zero = f.zero();
    let rows: Matrix<F::Elem> = vs.iter().map(|v| v.coords(&masks, &zero)).collect();
    linalg::rank(f, &rows, masks.len())
}

/// Coordinates of `v` in the given family, if it lies in the span.
pub fn mv_coords<F: Field>(f: &F, basis: &[Multivector<F::Elem>], v: &Multivector<F::Elem>) -> Option<Vec<F::Elem>> {
    let mut masks: Vec<u64> = basis.iter().chain([v]).flat_map(|b| b.terms().keys().copied()).collect();
    masks.sort_unstable();
    masks.dedup();
    let zero = f.zero();
    let cols: Matrix<F::Elem> = basis.iter().map(|b| b.coords(&masks, &zero)).collect();
    linalg::coords_in_span(f, &cols, &v.coords(&masks, &zero))
}

#[derive(Clone, Debug)]
pub struct CharacterSpace {
    pub embedding: Embedding,
    pub space: IsotropicSubspace<FieldElem>,
}

#[derive(Clone, Debug)]
pub struct XiForm {
    pub t: FieldElem,
    /// `Ξ_t(e_a, e_b)` on the basis of `V`.
    pub form: Matrix<Rational>,
    pub bivector: Multivector<Rational>,
}

/// Everything derived from a [`WeilDatum`].
#[derive(Clone, Debug)]
pub struct WeilStructure {
    pub datum: WeilDatum,
    pub tower: TowerSpec,
    pub space: HyperbolicSpace,
    /// `(sign of √p, Θ_σ̂)` for each embedding of `F`.
    pub theta_parts: Vec<(i8, Multivector<FieldElem>)>,
    pub theta_q: Multivector<Rational>,
    pub alpha: Multivector<Rational>,
    pub beta: Multivector<Rational>,
    pub exp: Multivector<FieldElem>,
    pub w: IsotropicSubspace<FieldElem>,
    pub char_spaces: Vec<CharacterSpace>,
    /// `η_t` for `t` in [`q_basis`].
    pub eta_basis: Vec<(FieldElem, Matrix<Rational>)>,
    pub cm_types: Vec<CmType>,
    pub wt: Vec<IsotropicSubspace<FieldElem>>,
    pub lines: Vec<Multivector<FieldElem>>,
    pub b: Vec<Multivector<Rational>>,
    pub hw: Vec<Multivector<Rational>>,
    pub xi: Vec<XiForm>,
    pub g_b: Vec<Multivector<Rational>>,
}

impl WeilStructure {
    pub fn build(datum: &WeilDatum) -> Result<Self> {
        datum.validate()?;
        let k = datum.tower.clone();
        let n = datum.n;
        let h = 2 * n;
        let space = HyperbolicSpace::new(n);
        let theta_parts = build_theta_parts(datum);
        let theta_sum = theta_parts.iter().fold(Multivector::zero(h), |acc, (_, t)| acc.add(&k, t));
        let theta_q = to_rational_mv(&k, &theta_sum)?;
        let (alpha, beta, exp) = build_spinor(&k, &theta_q);

        let char_spaces = build_char_spaces(datum, &theta_parts)?;
        let eta_basis = build_eta(&k, space, &char_spaces)?;
        let cm_types = k.enumerate_cm_types();
        let mut wt = Vec::new();
        let mut lines = Vec::new();
        for t in &cm_types {
            wt.push(build_wt(&k, space, &char_spaces, t)?);
            let mut form = Multivector::zero(h);
            for ((_, part), s) in theta_parts.iter().zip(&t.signs) {
                form = form.add(&k, &part.scale(&k, &k.from_i64(*s as i64)));
            }
            lines.push(form.scale(&k, &k.sqrt_minus_q()).exp_even(&k)?);
        }
        let w = wt[0].clone();
        let b = rational_descent(&k, &lines)?;
        let expected_b = 1usize << (k.degree() / 2);
        if b.len() != expected_b {
            return Err(Error::Internal(format!("dim B = {} instead of {expected_b}", b.len())));
        }
        let wedges: Vec<Multivector<FieldElem>> = char_spaces.iter().map(|c| c.space.wedge_basis(&k)).collect();
        let hw = rational_descent(&k, &wedges)?;
        let xi = k_minus_basis(&k)
            .into_iter()
            .map(|t| {
                let eta = eta_of_basis(&eta_basis, &t);
                let form = xi_matrix(space, &eta);
                let bivector = space.bivector_of_form(&Q, &form);
                XiForm { t, form, bivector }
            })
            .collect();
        let g_b = lie_gb(space, &b)?;
        Ok(WeilStructure {
            datum: datum.clone(),
            tower: k,
            space,
            theta_parts,
            theta_q,
            alpha,
            beta,
            exp,
            w,
            char_spaces,
            eta_basis,
            cm_types,
            wt,
            lines,
            b,
            hw,
            xi,
            g_b,
        })
    }

    pub fn e(&self) -> usize {
        self.tower.degree()
    }

    pub fn d(&self) -> usize {
        self.datum.d()
    }

    /// `η_t` for any `t ∈ K`.
    pub fn eta(&self, t: &FieldElem) -> Matrix<Rational> {
        eta_of_basis(&self.eta_basis, t)
    }

    pub fn a2(&self) -> Vec<Multivector<Rational>> {
        self.xi.iter().map(|x| x.bivector.clone()).collect()
    }

    /// The `F`-valued refinement of `(·,·)_V` on rational vectors.
    pub fn pairing_f(&self, x: &[Rational], y: &[Rational]) -> FieldElem {
        pairing_f(&self.tower, self.space, &self.eta(&self.tower.sqrt_p()), x, y)
    }

    /// `H_t(x, y) = -t² (x,y)_F + t Ξ_t(x,y)` with `Ξ_t(x,y) = (η_t x, y)_F`.
    pub fn hermitian_form(&self, t: &FieldElem, x: &[Rational], y: &[Rational]) -> Result<FieldElem> {
        let k = &self.tower;
        if k.is_zero(t) {
            return Err(Error::InvalidInput("H_t needs t ≠ 0".into()));
        }
        if k.iota(t) != k.neg(t) {
            return Err(Error::NotInSubfield("K_-"));
        }
        let etx = linalg::mat_vec(&Q, &self.eta(t), x);
        let t2 = k.mul(t, t);
        Ok(k.add(&k.neg(&k.mul(&t2, &self.pairing_f(x, y))), &k.mul(t, &self.pairing_f(&etx, y))))
    }

    /// `Θ_F(θ, φ)` for `θ, φ ∈ H¹(X̂, Q)` given by y-coordinates.
    pub fn theta_f_value(&self, theta: &[Rational], phi: &[Rational]) -> FieldElem {
        let k = &self.tower;
        // σ̂(Θ_F(θ,φ)) = φ⌟θ⌟Θ_σ̂; recover the F-element from its two values.
        let vals: Vec<(i8, FieldElem)> = self
            .theta_parts
            .iter()
            .map(|(sp, part)| {
                let once = part.contract(k, &lift_vec(k, theta)).unwrap();
                let twice = once.contract(k, &lift_vec(k, phi)).unwrap();
                (*sp, twice.get(0).cloned().unwrap_or_else(|| k.zero()))
            })
            .collect();
        if vals.len() == 1 {
            return vals[0].1.clone();
        }
        let half = k.from_rational(&rat(1, 2));
        let sum = k.add(&vals[0].1, &vals[1].1);
        let diff = k.sub(&vals[0].1, &vals[1].1);
        // (Θ_+ - Θ_-)/(2√p) · √p
        let b = k.div(&k.mul(&diff, &half), &k.sqrt_p()).unwrap();
        k.add(&k.mul(&sum, &half), &k.mul(&b, &k.sqrt_p()))
    }

    /// Θ-isotropic F-basis of half of `H¹(X̂)` and the witness `Z = K·(0, L)`.
    pub fn split_witness(&self) -> Result<SplitWitness> {
        let h = self.space.half();
        let et = linalg::transpose(&self.datum.eta_hat);
        let target = self.d() / 2 * self.tower.f_degree();
        let mut l: Matrix<Rational> = Vec::new();
        let mut f_basis: Matrix<Rational> = Vec::new();
        while l.len() < target {
            // L^⊥ for the rational form Θ_Q(θ, φ) = φ⌟θ⌟Θ_Q
            let rows: Matrix<Rational> = l
                .iter()
                .map(|v| {
                    let c = self.theta_q.contract(&Q, v).unwrap();
                    c.coords(&(0..h).map(|i| 1u64 << i).collect::<Vec<_>>(), &int(0))
                })
                .collect();
            let perp = if rows.is_empty() { linalg::identity(&Q, h) } else { linalg::nullspace(&Q, &rows, h) };
            let Some(v) = perp.into_iter().find(|v| !linalg::in_span(&Q, &l, v)) else {
                return Err(Error::Degenerate("no isotropic extension found".into()));
            };
            f_basis.push(v.clone());
            if self.tower.p() != 1 {
                l.push(linalg::mat_vec(&Q, &et, &v));
            }
            l.push(v);
            l = linalg::span_basis(&Q, &l, h);
        }
        let embed = |theta: &[Rational]| -> Vec<Rational> {
            let mut v = vec![int(0); h];
            v.extend(theta.iter().cloned());
            v
        };
        let r = self.eta(&self.tower.sqrt_minus_q());
        let mut z: Matrix<Rational> = l.iter().map(|v| embed(v)).collect();
        let twisted: Matrix<Rational> = z.iter().map(|v| linalg::mat_vec(&Q, &r, v)).collect();
        z.extend(twisted);
        let z = linalg::span_basis(&Q, &z, self.space.dim());
        let k_dim = z.len() / self.e();
        Ok(SplitWitness { y_half: f_basis, z, k_dim })
    }
}

#[derive(Clone, Debug)]
pub struct SplitWitness {
    /// F-basis vectors `y_1..y_{d/2}` of a Θ-isotropic subspace of `H¹(X̂)`.
    pub y_half: Matrix<Rational>,
    /// Rational basis of `Z`.
    pub z: Matrix<Rational>,
    pub k_dim: usize,
}

fn build_theta_parts(datum: &WeilDatum) -> Vec<(i8, Multivector<FieldElem>)> {
    let k = &datum.tower;
    let h = 2 * datum.n;
    let r = datum.f_rank();
    let thf = datum.theta_f();
    k.f_embeddings()
        .into_iter()
        .map(|sp| {
            let g = Embedding { sign_p: sp, sign_q: 1 };
            let proj: Vec<Multivector<FieldElem>> = (0..r)
                .map(|i| {
                    let mut u = vec![int(0); h];
                    u[i] = int(1);
                    Multivector::from_vector(k, &project(k, &datum.eta_hat, sp, &u))
                })
                .collect();
            let mut part = Multivector::zero(h);
            for i in 0..r {
                for j in i + 1..r {
                    let c = k.apply(g, &thf[i][j]);
                    if !k.is_zero(&c) {
                        part = part.add(k, &proj[i].wedge(k, &proj[j]).scale(k, &c));
                    }
                }
            }
            (sp, part)
        })
        .collect()
}

/// Projection of a rational vector onto the `sp·√p`-eigenspace of `e`:
/// `v/2 + sp·√p·e(v)/(2p)`; the identity when `p = 1`.
pub fn project(k: &TowerSpec, e: &Matrix<Rational>, sp: i8, v: &[Rational]) -> Vec<FieldElem> {
    let ev = linalg::mat_vec(&Q, e, v);
    let c = k.mul(&k.sqrt_p(), &k.from_rational(&rat(sp as i64, 2 * k.p())));
    let half = k.from_rational(&rat(1, 2));
    v.iter().zip(&ev).map(|(a, b)| k.add(&k.mul(&half, &k.from_rational(a)), &k.mul(&c, &k.from_rational(b)))).collect()
}

/// `α = Σ (-q)^j Θ^{2j}/(2j)!`, `β = Σ (-q)^j Θ^{2j+1}/(2j+1)!`, and
/// `exp(√-q Θ) = α + √-q β`.
pub fn build_spinor(k: &TowerSpec, theta: &Multivector<Rational>) -> (Multivector<Rational>, Multivector<Rational>, Multivector<FieldElem>) {
    let h = theta.arity();
    let mq = -k.q().clone();
    let mut alpha = Multivector::zero(h);
    let mut beta = Multivector::zero(h);
    let mut power = Multivector::one(&Q, h);
    let mut qpow = int(1);
    for i in 0..=h / 2 {
        let term = power.scale(&Q, &(&qpow / factorial(i)));
        if i % 2 == 0 {
            alpha = alpha.add(&Q, &term);
        } else {
            beta = beta.add(&Q, &term);
            qpow *= &mq;
        }
        power = power.wedge(&Q, theta);
    }
    let exp = lift(k, &alpha).add(k, &lift(k, &beta).scale(k, &k.sqrt_minus_q()));
    (alpha, beta, exp)
}

fn build_char_spaces(datum: &WeilDatum, theta_parts: &[(i8, Multivector<FieldElem>)]) -> Result<Vec<CharacterSpace>> {
    let k = &datum.tower;
    let h = 2 * datum.n;
    let space = HyperbolicSpace::new(datum.n);
    let et = linalg::transpose(&datum.eta_hat);
    let mut out = Vec::new();
    for g in k.embeddings() {
        let part = &theta_parts.iter().find(|(sp, _)| *sp == g.sign_p).unwrap().1;
        let scale = k.mul(&k.from_i64(-(g.sign_q as i64)), &k.sqrt_minus_q());
        let vecs: Matrix<FieldElem> = (0..h)
            .map(|j| {
                let mut y = vec![int(0); h];
                y[j] = int(1);
                let theta = project(k, &et, g.sign_p, &y);
                let c = part.contract(k, &theta).unwrap();
                let mut v: Vec<FieldElem> = (0..h).map(|i| k.mul(&scale, c.get(1 << i).unwrap_or(&k.zero()))).collect();
                v.extend(theta);
                v
            })
            .collect();
        let sp = IsotropicSubspace::new(k, space, &vecs)?;
        if sp.dim() != datum.d() {
            return Err(Error::Degenerate(format!("character space of dimension {}", sp.dim())));
        }
        out.push(CharacterSpace { embedding: g, space: sp });
    }
    Ok(out)
}

fn build_eta(k: &TowerSpec, space: HyperbolicSpace, chars: &[CharacterSpace]) -> Result<Vec<(FieldElem, Matrix<Rational>)>> {
    let cols: Matrix<FieldElem> = chars.iter().flat_map(|c| c.space.basis().iter().cloned()).collect();
    let p = linalg::transpose(&cols);
    let pinv = linalg::inverse(k, &p).ok_or_else(|| Error::Degenerate("W ∩ ι(W) ≠ 0".into()))?;
    let dim = space.dim();
    q_basis(k)
        .into_iter()
        .map(|t| {
            let mut diag = vec![vec![k.zero(); dim]; dim];
            let mut idx = 0;
            for c in chars {
                let val = k.apply(c.embedding, &t);
                for _ in 0..c.space.dim() {
                    diag[idx][idx] = val.clone();
                    idx += 1;
                }
            }
            let m = linalg::mat_mul(k, &linalg::mat_mul(k, &p, &diag), &pinv);
            Ok((t, to_rational_matrix(k, &m)?))
        })
        .collect()
}

fn eta_of_basis(basis: &[(FieldElem, Matrix<Rational>)], t: &FieldElem) -> Matrix<Rational> {
    // coordinates of t on [1, √-q, √p, √p√-q]
    let c = t.coords();
    let coeffs = [c[0].clone(), c[2].clone(), c[1].clone(), c[3].clone()];
    let dim = basis[0].1.len();
    let mut out = vec![vec![int(0); dim]; dim];
    for ((_, m), a) in basis.iter().zip(coeffs) {
        if !a.is_zero() {
            out = linalg::mat_add(&Q, &out, &linalg::mat_scale(&Q, &a, m));
        }
    }
    out
}

fn build_wt(k: &TowerSpec, space: HyperbolicSpace, chars: &[CharacterSpace], t: &CmType) -> Result<IsotropicSubspace<FieldElem>> {
    let embs = t.embeddings(k);
    let vecs: Matrix<FieldElem> = chars
        .iter()
        .filter(|c| embs.contains(&c.embedding))
        .flat_map(|c| c.space.basis().iter().cloned())
        .collect();
    IsotropicSubspace::new(k, space, &vecs)
}

/// `Ξ(e_a, e_b) = (η e_a, e_b)_V`.
pub fn xi_matrix(space: HyperbolicSpace, eta: &Matrix<Rational>) -> Matrix<Rational> {
    let d = space.dim();
    (0..d).map(|a| (0..d).map(|b| eta[space.partner(b)][a].clone()).collect()).collect()
}

pub fn pairing_f(k: &TowerSpec, space: HyperbolicSpace, eta_sqrt_p: &Matrix<Rational>, x: &[Rational], y: &[Rational]) -> FieldElem {
    let a = space.pair(&Q, x, y);
    if k.p() == 1 {
        return k.from_rational(&a);
    }
    let ex = linalg::mat_vec(&Q, eta_sqrt_p, x);
    let b = space.pair(&Q, &ex, y) / int(2 * k.p());
    k.add(&k.from_rational(&(a / int(2))), &k.mul(&k.sqrt_p(), &k.from_rational(&b)))
}

/// `g_B`: all `ξ ∈ ∧²V` whose spin action kills every element of `B`.
pub fn lie_gb(space: HyperbolicSpace, b: &[Multivector<Rational>]) -> Result<Vec<Multivector<Rational>>> {
    let two = masks_of_degree(space.dim(), 2);
    let mut cols: Vec<Vec<Multivector<Rational>>> = Vec::new();
    for m in &two {
        let xi = Multivector::monomial(&Q, *m, int(1), space.dim());
        cols.push(b.iter().map(|v| space.spin_action(&Q, &xi, v)).collect::<Result<_>>()?);
    }
    let mut rows: Matrix<Rational> = Vec::new();
    for i in 0..b.len() {
        let mut masks: Vec<u64> = cols.iter().flat_map(|c| c[i].terms().keys().copied()).collect();
        masks.sort_unstable();
        masks.dedup();
        for m in masks {
            rows.push(cols.iter().map(|c| c[i].get(m).cloned().unwrap_or_else(|| int(0))).collect());
        }
    }
    let kernel = linalg::nullspace(&Q, &rows, two.len());
    Ok(kernel.iter().map(|v| Multivector::from_coords(&Q, space.dim(), &two, &linalg::primitive(v))).collect())
}

/// Seeded random elements of `g_B` generating it as a Lie algebra.
pub fn lie_generators(space: HyperbolicSpace, g_b: &[Multivector<Rational>], seed: u64) -> Vec<Multivector<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gens: Vec<Multivector<Rational>> = Vec::new();
    loop {
        let xi = g_b.iter().fold(Multivector::zero(space.dim()), |acc, g| {
            acc.add(&Q, &g.scale(&Q, &int(rng.gen_range(-3i64..=3))))
        });
        gens.push(xi);
        if gens.len() >= 2 && lie_closure_dim(space, &gens) == Some(g_b.len()) {
            return gens;
        }
        if gens.len() > g_b.len() + 2 {
            return gens;
        }
    }
}

/// Dimension modulo [`linalg::MODULUS`] of the Lie algebra generated by the
/// given elements, computed on `ad` matrices. The modular dimension never
/// exceeds the rational one, so equality with `dim g_B` certifies generation.
pub fn lie_closure_dim(space: HyperbolicSpace, gens: &[Multivector<Rational>]) -> Option<usize> {
    let d = space.dim();
    let reduce_mat = |m: &Matrix<Rational>| -> Option<Vec<u64>> { m.iter().flatten().map(linalg::reduce).collect() };
    let bracket = |a: &[u64], b: &[u64]| -> Vec<u64> {
        let mut out = vec![0u64; d * d];
        for i in 0..d {
            for k in 0..d {
                let (x, y) = (a[i * d + k], b[i * d + k]);
                for j in 0..d {
                    let ab = linalg::mulmod(x, b[k * d + j]);
                    let ba = linalg::mulmod(y, a[k * d + j]);
                    out[i * d + j] = (out[i * d + j] + ab) % linalg::MODULUS;
                    out[i * d + j] = linalg::submod(out[i * d + j], ba);
                }
            }
        }
        out
    };
    let mut ech = linalg::ModEchelon::default();
    let mut basis: Vec<Vec<u64>> = Vec::new();
    let mut queue: Vec<Vec<u64>> = gens.iter().map(|g| reduce_mat(&space.ad_matrix(&Q, g))).collect::<Option<_>>()?;
    while let Some(m) = queue.pop() {
        if !ech.insert(m.clone()) {
            continue;
        }
        for b in &basis {
            queue.push(bracket(&m, b));
        }
        basis.push(m);
    }
    Some(ech.rank())
}

/// Degree-`k` invariants versus the subalgebra generated by `A2` and `HW`.
#[derive(Clone, Debug, Serialize)]
pub struct InvariantDegree {
    pub k: usize,
    pub ambient: usize,
    pub generated: usize,
    /// Nullity of the derivation matrices modulo a large prime. It bounds the
    /// rational nullity from above, and `generated` bounds it from below.
    pub invariant: usize,
    pub generated_is_invariant: bool,
    pub equal: bool,
}

/// Basis of the degree-`k` part of the algebra generated by the given
/// homogeneous even elements.
pub fn generated_degree(gens: &[Multivector<Rational>], k: usize, arity: usize) -> Vec<Multivector<Rational>> {
    let degs: Vec<usize> = gens.iter().map(|g| g.max_degree().unwrap_or(0)).collect();
    let mut out = Vec::new();
    fn rec(
        gens: &[Multivector<Rational>],
        degs: &[usize],
        start: usize,
        remaining: usize,
        acc: Multivector<Rational>,
        out: &mut Vec<Multivector<Rational>>,
    ) {
        if remaining == 0 {
            if !acc.is_zero() {
                out.push(acc);
            }
            return;
        }
        for i in start..gens.len() {
            if degs[i] == 0 || degs[i] > remaining {
                continue;
            }
            let next = acc.wedge(&Q, &gens[i]);
            if next.is_zero() {
                continue;
            }
            rec(gens, degs, i, remaining - degs[i], next, out);
        }
    }
    rec(gens, &degs, 0, k, Multivector::one(&Q, arity), &mut out);
    rational_span(&out)
}

pub fn invariants_and_generation(
    space: HyperbolicSpace,
    lie_gens: &[Multivector<Rational>],
    algebra_gens: &[Multivector<Rational>],
    k: usize,
) -> Result<InvariantDegree> {
    let d = space.dim();
    let masks = masks_of_degree(d, k);
    let generated = generated_degree(algebra_gens, k, d);
    let images: Vec<Vec<Vec<Rational>>> = lie_gens.iter().map(|g| space.ad_images(&Q, g)).collect();
    let generated_is_invariant =
        generated.iter().all(|g| images.iter().all(|im| g.derivation(&Q, im).is_zero()));
    // Derivation matrices, rows indexed by (generator, output mask).
    let mut rows: Vec<Vec<(usize, Rational)>> = Vec::new();
    for im in &images {
        let mut by_out: std::collections::BTreeMap<u64, Vec<(usize, Rational)>> = Default::default();
        for (c, m) in masks.iter().enumerate() {
            let img = Multivector::monomial(&Q, *m, int(1), d).derivation(&Q, im);
            for (om, v) in img.terms() {
                by_out.entry(*om).or_default().push((c, v.clone()));
            }
        }
        rows.extend(by_out.into_values());
    }
    let ncols = masks.len();
    let r = linalg::rank_mod_p(&rows, ncols).ok_or_else(|| Error::Internal("prime divides a denominator".into()))?;
    let invariant = ncols - r;
    let equal = generated_is_invariant && invariant == generated.len();
    Ok(InvariantDegree { k, ambient: ncols, generated: generated.len(), invariant, generated_is_invariant, equal })
}

impl WeilStructure {
    /// Dimension of `Im Sym^{d/2}(A2) ∩ HW` and of their sum in degree `d`.
    pub fn degree_d_sum(&self) -> (usize, usize) {
        let sym = generated_degree(&self.a2(), self.d(), self.space.dim());
        let mut all = sym.clone();
        all.extend(self.hw.iter().cloned());
        let sum = mv_rank(&Q, &all);
        (sym.len() + self.hw.len() - sum, sum)
    }

    pub fn random_vector(&self, rng: &mut ChaCha8Rng) -> Vec<Rational> {
        (0..self.space.dim()).map(|_| int(rng.gen_range(-4i64..=4))).collect()
    }

    pub fn is_rational_matrix_identity(&self, m: &Matrix<Rational>) -> bool {
        *m == linalg::identity(&Q, self.space.dim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinor::{annihilator, pure_spinor_of};

    fn gaussian_curve() -> WeilDatum {
        let theta = vec![vec![(int(0), int(0)), (int(1), int(0))], vec![(int(-1), int(0)), (int(0), int(0))]];
        WeilDatum { tower: TowerSpec::new(1, int(1)).unwrap(), n: 1, eta_hat: linalg::identity(&Q, 2), theta }
    }

    #[test]
    fn spinor_of_principal_theta() {
        let s = WeilStructure::build(&sixfold(2)).unwrap();
        let th = &s.theta_q;
        let th2 = th.wedge(&Q, th);
        let th3 = th2.wedge(&Q, th);
        assert_eq!(s.alpha, Multivector::one(&Q, 6).sub(&Q, &th2));
        assert_eq!(s.beta, th.sub(&Q, &th3.scale(&Q, &rat(1, 3))));
        let k = &s.tower;
        assert_eq!(s.exp, lift(k, th).scale(k, &k.sqrt_minus_q()).exp_even(k).unwrap());
        let w = annihilator(k, s.space, &s.exp).unwrap();
        assert_eq!(w, s.w);
        assert_eq!(w.intersect(k, &w.map(k, |v| v.iter().map(|c| k.iota(c)).collect()).unwrap()).unwrap().dim(), 0);
    }

    #[test]
    fn gaussian_curve_w() {
        let s = WeilStructure::build(&gaussian_curve()).unwrap();
        let k = &s.tower;
        let i = k.sqrt_minus_q();
        assert_eq!(s.exp, Multivector::one(k, 2).add(k, &Multivector::monomial(k, 0b11, i.clone(), 2)));
        let v1 = vec![k.zero(), k.neg(&i), k.one(), k.zero()];
        let v2 = vec![i.clone(), k.zero(), k.zero(), k.one()];
        assert_eq!(s.w, IsotropicSubspace::new(k, s.space, &[v1, v2]).unwrap());
    }

    #[test]
    fn eta_properties() {
        for datum in [sixfold(3), rm_fourfold(), gaussian_curve()] {
            let s = WeilStructure::build(&datum).unwrap();
            let k = &s.tower;
            let dim = s.space.dim();
            assert!(s.is_rational_matrix_identity(&s.eta(&k.one())));
            let basis = q_basis(k);
            for a in &basis {
                for b in &basis {
                    let lhs = linalg::mat_mul(&Q, &s.eta(a), &s.eta(b));
                    assert_eq!(lhs, s.eta(&k.mul(a, b)));
                }
                // adjoint of η_t is η_{ι(t)}
                let e = s.eta(a);
                let ei = s.eta(&k.iota(a));
                for u in 0..dim {
                    for v in 0..dim {
                        let bu = s.space.basis_vector(&Q, u);
                        let bv = s.space.basis_vector(&Q, v);
                        assert_eq!(
                            s.space.pair(&Q, &linalg::mat_vec(&Q, &e, &bu), &bv),
                            s.space.pair(&Q, &bu, &linalg::mat_vec(&Q, &ei, &bv))
                        );
                    }
                }
            }
            // on the X-part, η_{√p} is η̂; on the X̂-part its transpose
            if k.p() != 1 {
                let m = s.eta(&k.sqrt_p());
                let h = s.space.half();
                for i in 0..h {
                    for j in 0..h {
                        assert_eq!(m[i][j], datum.eta_hat[i][j]);
                        assert_eq!(m[h + i][h + j], datum.eta_hat[j][i]);
                        assert!(m[i][h + j].is_zero() && m[h + i][j].is_zero());
                    }
                }
            }
            // W_T is η-stable with the character T
            for (t, wt) in s.cm_types.iter().zip(&s.wt) {
                assert!(wt.is_maximal());
                for c in &s.char_spaces {
                    if !t.embeddings(k).contains(&c.embedding) {
                        continue;
                    }
                    for v in c.space.basis() {
                        assert!(wt.contains(k, v));
                        for a in &basis {
                            let img = linalg::mat_vec(k, &lift_matrix(k, &s.eta(a)), v);
                            let expected: Vec<FieldElem> = v.iter().map(|x| k.mul(&k.apply(c.embedding, a), x)).collect();
                            assert_eq!(img, expected);
                        }
                    }
                }
                assert_eq!(annihilator(k, s.space, &s.lines[s.cm_types.iter().position(|x| x == t).unwrap()]).unwrap(), *wt);
            }
        }
    }

    #[test]
    fn eta_on_sixfold() {
        // η_{√-q}(0, θ) = (q θ⌟Θ, 0) and η_{√-q}(θ⌟Θ, 0) = (0, -θ)
        let s = WeilStructure::build(&sixfold(5)).unwrap();
        let r = s.eta(&s.tower.sqrt_minus_q());
        for j in 0..6 {
            let mut y = vec![int(0); 6];
            y[j] = int(1);
            let c = s.theta_q.contract(&Q, &y).unwrap().coords(&(0..6).map(|i| 1u64 << i).collect::<Vec<_>>(), &int(0));
            let mut v = vec![int(0); 6];
            v.extend(y.clone());
            let mut expected: Vec<Rational> = c.iter().map(|x| x * int(5)).collect();
            expected.extend(vec![int(0); 6]);
            assert_eq!(linalg::mat_vec(&Q, &r, &v), expected);
            let mut u = c.clone();
            u.extend(vec![int(0); 6]);
            let mut back = vec![int(0); 6];
            back.extend(y.iter().map(|x| -x));
            assert_eq!(linalg::mat_vec(&Q, &r, &u), back);
        }
    }

    #[test]
    fn dimensions() {
        let s = WeilStructure::build(&sixfold(2)).unwrap();
        assert_eq!((s.b.len(), s.hw.len(), s.xi.len()), (2, 2, 1));
        assert!(mv_coords(&Q, &s.b, &s.alpha).is_some() && mv_coords(&Q, &s.b, &s.beta).is_some());
        let s4 = WeilStructure::build(&rm_fourfold()).unwrap();
        assert_eq!((s4.b.len(), s4.hw.len(), s4.xi.len()), (4, 4, 2));
        assert_eq!(mv_rank(&Q, &s4.a2()), 2);
        for v in s.b.iter().chain(&s4.b) {
            assert!(v.odd_part().is_zero());
        }
        // the K-span of B is the span of the lines
        let k = &s4.tower;
        let mut all: Vec<Multivector<FieldElem>> = s4.b.iter().map(|b| lift(k, b)).collect();
        all.extend(s4.lines.iter().cloned());
        assert_eq!(mv_rank(k, &all), 4);
        for c in &s4.char_spaces {
            assert!(!c.space.wedge_basis(k).is_empty());
        }
    }

    #[test]
    fn pure_spinor_line_matches() {
        let s = WeilStructure::build(&rm_fourfold()).unwrap();
        let k = &s.tower;
        for (wt, line) in s.wt.iter().zip(&s.lines) {
            assert_eq!(pure_spinor_of(k, wt).unwrap(), *line);
        }
    }

    #[test]
    fn lie_algebra_dimensions() {
        let s = WeilStructure::build(&sixfold(2)).unwrap();
        assert_eq!(s.g_b.len(), 35);
        let s4 = WeilStructure::build(&rm_fourfold()).unwrap();
        assert_eq!(s4.g_b.len(), 6);
        let gens = lie_generators(s4.space, &s4.g_b, 3);
        assert_eq!(lie_closure_dim(s4.space, &gens), Some(6));
    }

    #[test]
    fn invariants_rm_fourfold() {
        let s = WeilStructure::build(&rm_fourfold()).unwrap();
        let gens = lie_generators(s.space, &s.g_b, 11);
        let mut alg = s.a2();
        alg.extend(s.hw.iter().cloned());
        let dims: Vec<usize> = (0..=8)
            .map(|k| {
                let r = invariants_and_generation(s.space, &gens, &alg, k).unwrap();
                assert!(r.equal, "degree {k}: {r:?}");
                r.invariant
            })
            .collect();
        assert_eq!(dims, vec![1, 0, 6, 0, 11, 0, 6, 0, 1]);
    }

    #[test]
    fn invariants_sixfold() {
        let s = WeilStructure::build(&sixfold(2)).unwrap();
        let gens = lie_generators(s.space, &s.g_b, 7);
        assert_eq!(gens.len(), 2);
        assert_eq!(lie_closure_dim(s.space, &gens), Some(35));
        let mut alg = s.a2();
        alg.extend(s.hw.iter().cloned());
        let dims: Vec<usize> = (0..=12)
            .map(|k| {
                let r = invariants_and_generation(s.space, &gens, &alg, k).unwrap();
                assert!(r.equal, "degree {k}: {r:?}");
                r.invariant
            })
            .collect();
        assert_eq!(dims, vec![1, 0, 1, 0, 1, 0, 3, 0, 1, 0, 1, 0, 1]);
        assert_eq!(s.degree_d_sum(), (0, 3));
    }

    #[test]
    fn hermitian_form_rules() {
        for datum in [sixfold(2), rm_fourfold()] {
            let s = WeilStructure::build(&datum).unwrap();
            let k = &s.tower;
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for t in k_minus_basis(k) {
                for _ in 0..4 {
                    let x = s.random_vector(&mut rng);
                    let y = s.random_vector(&mut rng);
                    let hxy = s.hermitian_form(&t, &x, &y).unwrap();
                    assert_eq!(s.hermitian_form(&t, &y, &x).unwrap(), k.iota(&hxy));
                    assert!(k.in_f(&s.hermitian_form(&t, &x, &x).unwrap()));
                    for sc in q_basis(k) {
                        let ex = linalg::mat_vec(&Q, &s.eta(&sc), &x);
                        let ey = linalg::mat_vec(&Q, &s.eta(&sc), &y);
                        assert_eq!(s.hermitian_form(&t, &ex, &y).unwrap(), k.mul(&k.iota(&sc), &hxy));
                        assert_eq!(s.hermitian_form(&t, &x, &ey).unwrap(), k.mul(&sc, &hxy));
                    }
                }
            }
            assert!(s.hermitian_form(&k.zero(), &[], &[]).is_err());
            assert!(s.hermitian_form(&k.one(), &[], &[]).is_err());
        }
    }

    #[test]
    fn split_witness_dims() {
        let s = WeilStructure::build(&sixfold(3)).unwrap();
        let w = s.split_witness().unwrap();
        assert_eq!(w.k_dim, 3);
        let s4 = WeilStructure::build(&rm_fourfold()).unwrap();
        let w4 = s4.split_witness().unwrap();
        assert_eq!(w4.k_dim, 1);
        for (st, wit) in [(&s, &w), (&s4, &w4)] {
            for t in k_minus_basis(&st.tower) {
                for a in &wit.z {
                    for b in &wit.z {
                        assert!(st.tower.is_zero(&st.hermitian_form(&t, a, b).unwrap()));
                    }
                }
            }
        }
    }

    #[test]
    fn datum_json_roundtrip_and_errors() {
        let d = rm_fourfold();
        let s = serde_json::to_string(&d).unwrap();
        let back: WeilDatum = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        let mut bad = sixfold(2);
        bad.theta[0][3] = (int(0), int(0));
        bad.theta[3][0] = (int(0), int(0));
        assert!(bad.validate().is_err());
        let mut bad2 = rm_fourfold();
        bad2.eta_hat[0][2] = int(3);
        assert!(bad2.validate().is_err());
    }
}
