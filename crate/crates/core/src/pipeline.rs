//! From Chern characters of secant sheaves to the Weil-class component of
//! `κ` of their transform.

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{kunneth, Multivector};
use crate::field::{int, Rational, Rationals};
use crate::fourier::Transforms;
use crate::weil::{generated_degree, mv_coords, mv_rank, WeilStructure};

const Q: Rationals = Rationals;

/// A Chern character in `S_Q = H*(X, Q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SheafClass {
    pub label: String,
    pub ch: Multivector<Rational>,
}

impl SheafClass {
    pub fn rank(&self) -> Rational {
        self.ch.get(0).cloned().unwrap_or_else(|| int(0))
    }

    /// Coordinates in the given basis of `B`, if the class lies in `B`.
    pub fn coords_in(&self, basis: &[Multivector<Rational>]) -> Option<Vec<Rational>> {
        mv_coords(&Q, basis, &self.ch)
    }
}

/// `ch = (1 - q/2 Θ²) + (Θ - q/3! Θ³)` for a principal `Θ` on a threefold.
pub fn preset_ch_ideal_curves(q: &Rational, theta: &Multivector<Rational>) -> SheafClass {
    let one = Multivector::one(&Q, theta.arity());
    let t2 = theta.wedge(&Q, theta);
    let t3 = t2.wedge(&Q, theta);
    let even = one.sub(&Q, &t2.scale(&Q, &(q / int(2))));
    let odd = theta.sub(&Q, &t3.scale(&Q, &(q / int(6))));
    SheafClass { label: "ch(F)".into(), ch: even.add(&Q, &odd) }
}

/// `τ`, the Chern character of the dual.
pub fn dualize(c: &SheafClass) -> SheafClass {
    SheafClass { label: format!("{}^v", c.label), ch: c.ch.tau(&Q) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Variant {
    /// `Φ^H(c₁ ⊠ c₂^∨)`
    E,
    /// `Φ^H(c₂ ⊠ c₁)`
    G,
}

pub fn transform_pair(t: &Transforms, c1: &SheafClass, c2: &SheafClass, variant: Variant) -> Result<Multivector<Rational>> {
    let u = match variant {
        Variant::E => kunneth(&Q, &c1.ch, &dualize(c2).ch),
        Variant::G => kunneth(&Q, &c2.ch, &c1.ch),
    };
    t.phi_h.apply(&u)
}

/// The rank of `Φ^H(a ⊠ b)` computed without the transform: only the part of
/// `μ^*(a ⊠ b)` with no first-factor generators survives, which is `a ∧ b` on
/// the second factor, and `Φ_P^{-1}` sends its top coefficient to degree 0
/// up to sign. Returns `|∫ a ∧ b|`.
pub fn rank_oracle(a: &Multivector<Rational>, b: &Multivector<Rational>) -> Rational {
    let top = a.wedge(&Q, b).top_coeff(&Q);
    if top < int(0) {
        -top
    } else {
        top
    }
}

/// `κ(c) = c ∧ exp(-c₁/r)`.
pub fn kappa(c: &Multivector<Rational>) -> Result<Multivector<Rational>> {
    let r = c.get(0).cloned().unwrap_or_else(|| int(0));
    if r.is_zero() {
        return Err(Error::ZeroRank);
    }
    let c1 = c.degree_part(2).scale(&Q, &(-r.recip()));
    Ok(c.wedge(&Q, &c1.exp_even(&Q)?))
}

/// `κ_d = γ + δ` with `γ ∈ HW` and `δ ∈ Im Sym^{d/2}(A2)`.
#[derive(Clone, Debug)]
pub struct KappaDecomposition {
    pub gamma: Multivector<Rational>,
    pub delta: Multivector<Rational>,
    pub gamma_coords: Vec<Rational>,
    pub delta_coords: Vec<Rational>,
    /// `HW ∩ Im Sym^{d/2}(A2) = 0`.
    pub direct: bool,
}

pub fn decompose_kappa(kd: &Multivector<Rational>, hw: &[Multivector<Rational>], a2: &[Multivector<Rational>], d: usize) -> Result<KappaDecomposition> {
    let arity = kd.arity();
    let sym = generated_degree(a2, d, arity);
    let mut basis = hw.to_vec();
    basis.extend(sym.iter().cloned());
    let direct = mv_rank(&Q, &basis) == basis.len();
    if !direct {
        return Err(Error::Degenerate("HW + Im Sym(A2) is not direct".into()));
    }
    if kd.is_zero() {
        return Ok(KappaDecomposition {
            gamma: Multivector::zero(arity),
            delta: Multivector::zero(arity),
            gamma_coords: vec![int(0); hw.len()],
            delta_coords: vec![int(0); sym.len()],
            direct,
        });
    }
    let c = mv_coords(&Q, &basis, kd).ok_or_else(|| Error::NotInSubspace("HW ⊕ Im Sym(A2)".into()))?;
    let combine = |vs: &[Multivector<Rational>], cs: &[Rational]| {
        vs.iter().zip(cs).fold(Multivector::zero(arity), |acc, (v, x)| acc.add(&Q, &v.scale(&Q, x)))
    };
    let (gc, dc) = c.split_at(hw.len());
    Ok(KappaDecomposition {
        gamma: combine(hw, gc),
        delta: combine(&sym, dc),
        gamma_coords: gc.to_vec(),
        delta_coords: dc.to_vec(),
        direct,
    })
}

/// The sheaf classes of the sixfold pipeline.
pub struct SixfoldPipeline<'a> {
    pub weil: &'a WeilStructure,
    pub transforms: &'a Transforms,
    pub f1: SheafClass,
    pub f2: SheafClass,
}

#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub rank_g: Rational,
    pub rank_e: Rational,
    pub kappa: Multivector<Rational>,
    pub decomposition: KappaDecomposition,
}

impl<'a> SixfoldPipeline<'a> {
    pub fn new(weil: &'a WeilStructure, transforms: &'a Transforms) -> Result<Self> {
        if weil.tower.p() != 1 || weil.datum.n != 3 {
            return Err(Error::InvalidInput("the sheaf pipeline needs F = Q and n = 3".into()));
        }
        let base = preset_ch_ideal_curves(weil.tower.q(), &weil.theta_q);
        let f1 = SheafClass { label: "ch(F1)".into(), ch: base.ch.clone() };
        let f2 = SheafClass { label: "ch(F2)".into(), ch: base.ch };
        Ok(SixfoldPipeline { weil, transforms, f1, f2 })
    }

    pub fn run(&self) -> Result<PipelineResult> {
        let g = transform_pair(self.transforms, &self.f1, &self.f2, Variant::G)?;
        let e = transform_pair(self.transforms, &self.f1, &self.f2, Variant::E)?;
        let rank_g = g.get(0).cloned().unwrap_or_else(|| int(0));
        let rank_e = e.get(0).cloned().unwrap_or_else(|| int(0));
        let kappa = kappa(&g)?;
        let d = self.weil.d();
        let decomposition = decompose_kappa(&kappa.degree_part(d), &self.weil.hw, &self.weil.a2(), d)?;
        Ok(PipelineResult { rank_g, rank_e, kappa, decomposition })
    }
}
