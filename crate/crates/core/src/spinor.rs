//! Pure spinors: annihilators of spinors, the spinor line of a maximal
//! isotropic subspace, and subspace arithmetic in `V ⊗ k`.

use crate::clifford::HyperbolicSpace;
use crate::error::{Error, Result};
use crate::exterior::Multivector;
use crate::field::Field;
use crate::linalg::{self, Matrix};

/// Isotropic subspace of `V ⊗ k`, stored as a reduced echelon basis.
#[derive(Clone, Debug, PartialEq)]
pub struct IsotropicSubspace<E> {
    space: HyperbolicSpace,
    basis: Matrix<E>,
}

impl<E: Clone + PartialEq> IsotropicSubspace<E> {
    /// Span of the given vectors; fails unless they pair to zero.
    pub fn new<F: Field<Elem = E>>(f: &F, space: HyperbolicSpace, vectors: &[Vec<E>]) -> Result<Self> {
        for v in vectors {
            if v.len() != space.dim() {
                return Err(Error::LengthMismatch { expected: space.dim(), got: v.len() });
            }
        }
        let basis = linalg::span_basis(f, vectors, space.dim());
        for (i, a) in basis.iter().enumerate() {
            for b in &basis[i..] {
                if !f.is_zero(&space.pair(f, a, b)) {
                    return Err(Error::NotMaximalIsotropic("basis vectors do not pair to zero".into()));
                }
            }
        }
        Ok(IsotropicSubspace { space, basis })
    }

    pub fn space(&self) -> HyperbolicSpace {
        self.space
    }

    pub fn basis(&self) -> &Matrix<E> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_maximal(&self) -> bool {
        self.dim() == self.space.half()
    }

    pub fn contains<F: Field<Elem = E>>(&self, f: &F, v: &[E]) -> bool {
        linalg::in_span(f, &self.basis, v)
    }

    pub fn contains_subspace<F: Field<Elem = E>>(&self, f: &F, o: &Self) -> bool {
        o.basis.iter().all(|v| self.contains(f, v))
    }

    pub fn intersect<F: Field<Elem = E>>(&self, f: &F, o: &Self) -> Result<Self> {
        if self.space != o.space {
            return Err(Error::SpaceMismatch(self.space.dim(), o.space.dim()));
        }
        let b = linalg::intersect(f, &self.basis, &o.basis, self.space.dim());
        Ok(IsotropicSubspace { space: self.space, basis: b })
    }

    /// Basis of `Wa + Wb`; the sum need not be isotropic.
    pub fn sum<F: Field<Elem = E>>(&self, f: &F, o: &Self) -> Result<Matrix<E>> {
        if self.space != o.space {
            return Err(Error::SpaceMismatch(self.space.dim(), o.space.dim()));
        }
        let mut all = self.basis.clone();
        all.extend(o.basis.iter().cloned());
        Ok(linalg::span_basis(f, &all, self.space.dim()))
    }

    /// Image under a map of `V ⊗ k` that preserves isotropy (an isometry or a
    /// semilinear conjugation).
    pub fn map<F: Field<Elem = E>>(&self, f: &F, g: impl Fn(&[E]) -> Vec<E>) -> Result<Self> {
        let imgs: Matrix<E> = self.basis.iter().map(|v| g(v)).collect();
        Self::new(f, self.space, &imgs)
    }

    /// `∧` of the basis vectors, a generator of the top exterior power.
    pub fn wedge_basis<F: Field<Elem = E>>(&self, f: &F) -> Multivector<E> {
        self.basis
            .iter()
            .fold(Multivector::one(f, self.space.dim()), |acc, v| acc.wedge(f, &Multivector::from_vector(f, v)))
    }
}

/// All `v ∈ V ⊗ k` with `m_v λ = 0`.
pub fn annihilator<F: Field>(f: &F, space: HyperbolicSpace, lam: &Multivector<F::Elem>) -> Result<IsotropicSubspace<F::Elem>> {
    if lam.is_zero() {
        return Err(Error::ZeroSpinor);
    }
    if lam.arity() != space.half() {
        return Err(Error::SpaceMismatch(space.half(), lam.arity()));
    }
    let images: Vec<Multivector<F::Elem>> = (0..space.dim()).map(|a| space.act_generator(f, a, lam)).collect();
    let mut masks: Vec<u64> = images.iter().flat_map(|m| m.terms().keys().copied()).collect();
    masks.sort_unstable();
    masks.dedup();
    let zero = f.zero();
    let rows: Matrix<F::Elem> = masks
        .iter()
        .map(|m| images.iter().map(|img| img.get(*m).cloned().unwrap_or_else(|| zero.clone())).collect())
        .collect();
    let kernel = linalg::nullspace(f, &rows, space.dim());
    IsotropicSubspace::new(f, space, &kernel)
}

/// Purity test; the certificate is the annihilator.
pub fn is_pure<F: Field>(f: &F, space: HyperbolicSpace, lam: &Multivector<F::Elem>) -> Result<(bool, IsotropicSubspace<F::Elem>)> {
    let w = annihilator(f, space, lam)?;
    Ok((w.is_maximal(), w))
}

/// Spinor line of a maximal isotropic subspace, normalized so that the
/// coefficient of its lowest monomial is 1.
pub fn pure_spinor_of<F: Field>(f: &F, w: &IsotropicSubspace<F::Elem>) -> Result<Multivector<F::Elem>> {
    let space = w.space();
    if !w.is_maximal() {
        return Err(Error::NotMaximalIsotropic(format!("dimension {} < {}", w.dim(), space.half())));
    }
    let h = space.half();
    let basis_spinors: Vec<Multivector<F::Elem>> =
        (0..1u64 << h).map(|m| Multivector::monomial(f, m, f.one(), h)).collect();
    let zero = f.zero();
    let mut rows: Matrix<F::Elem> = Vec::new();
    for v in w.basis() {
        let cols: Vec<Multivector<F::Elem>> = basis_spinors.iter().map(|s| space.act_vector(f, v, s)).collect();
        for out in 0..1u64 << h {
            let row: Vec<F::Elem> = cols.iter().map(|c| c.get(out).cloned().unwrap_or_else(|| zero.clone())).collect();
            if row.iter().any(|x| !f.is_zero(x)) {
                rows.push(row);
            }
        }
    }
    let kernel = linalg::nullspace(f, &rows, 1 << h);
    if kernel.len() != 1 {
        return Err(Error::NotMaximalIsotropic(format!("solution space has dimension {}", kernel.len())));
    }
    let masks: Vec<u64> = (0..1u64 << h).collect();
    normalize_line(f, &Multivector::from_coords(f, h, &masks, &kernel[0]))
}

/// Rescales so the lowest-mask coefficient is 1.
pub fn normalize_line<F: Field>(f: &F, lam: &Multivector<F::Elem>) -> Result<Multivector<F::Elem>> {
    let (_, c) = lam.terms().iter().next().ok_or(Error::ZeroSpinor)?;
    let inv = f.inv(c).ok_or(Error::ZeroSpinor)?;
    Ok(lam.scale(f, &inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::reflection;
    use crate::field::{int, Rational, Rationals, TowerSpec};
    use proptest::prelude::*;

    const Q: Rationals = Rationals;

    fn unit(sp: HyperbolicSpace, a: usize) -> Vec<Rational> {
        sp.basis_vector(&Q, a)
    }

    #[test]
    fn coordinate_subspaces() {
        for n in 1..=3 {
            let sp = HyperbolicSpace::new(n);
            let h = sp.half();
            let ys: Vec<Vec<Rational>> = (0..h).map(|i| unit(sp, sp.y(i))).collect();
            let xs: Vec<Vec<Rational>> = (0..h).map(|i| unit(sp, i)).collect();
            let w = annihilator(&Q, sp, &Multivector::one(&Q, h)).unwrap();
            assert_eq!(w, IsotropicSubspace::new(&Q, sp, &ys).unwrap());
            let top = Multivector::monomial(&Q, (1 << h) - 1, int(1), h);
            assert_eq!(annihilator(&Q, sp, &top).unwrap(), IsotropicSubspace::new(&Q, sp, &xs).unwrap());
            assert_eq!(pure_spinor_of(&Q, &w).unwrap(), Multivector::one(&Q, h));
            let wy = IsotropicSubspace::new(&Q, sp, &ys).unwrap();
            let wx = IsotropicSubspace::new(&Q, sp, &xs).unwrap();
            assert_eq!(wx.intersect(&Q, &wy).unwrap().dim(), 0);
            assert_eq!(wx.intersect(&Q, &wx).unwrap(), wx);
            assert_eq!(wx.sum(&Q, &wy).unwrap().len(), 2 * h);
        }
    }

    #[test]
    fn gaussian_example() {
        let k = TowerSpec::new(1, int(1)).unwrap();
        let sp = HyperbolicSpace::new(1);
        let i = k.sqrt_minus_q();
        let lam = Multivector::one(&k, 2).add(&k, &Multivector::monomial(&k, 0b11, i.clone(), 2));
        let w = annihilator(&k, sp, &lam).unwrap();
        let v1 = vec![k.zero(), k.neg(&i), k.one(), k.zero()];
        let v2 = vec![i.clone(), k.zero(), k.zero(), k.one()];
        assert_eq!(w, IsotropicSubspace::new(&k, sp, &[v1, v2]).unwrap());
        assert_eq!(pure_spinor_of(&k, &w).unwrap(), lam);
    }

    #[test]
    fn impure_and_odd() {
        let sp = HyperbolicSpace::new(2);
        let lam = Multivector::from_terms(&Q, 4, [(0, int(1)), (0b1111, int(1))]);
        let (pure, w) = is_pure(&Q, sp, &lam).unwrap();
        assert!(!pure && w.dim() < 4);
        assert!(pure_spinor_of(&Q, &w).is_err());
        assert!(annihilator(&Q, sp, &Multivector::zero(4)).is_err());
        let mut vs = vec![unit(sp, 0)];
        vs.extend((1..4).map(|i| unit(sp, sp.y(i))));
        let l = pure_spinor_of(&Q, &IsotropicSubspace::new(&Q, sp, &vs).unwrap()).unwrap();
        assert!(l.even_part().is_zero());
    }

    fn arb_pure(n: usize) -> impl Strategy<Value = Multivector<Rational>> {
        // exp of a random 2-form is always pure
        prop::collection::vec(-2i64..3, (2 * n) * (2 * n - 1) / 2).prop_map(move |c| {
            let h = 2 * n;
            let two = crate::exterior::masks_of_degree(h, 2);
            let theta = Multivector::from_coords(&Q, h, &two, &c.into_iter().map(int).collect::<Vec<_>>());
            theta.exp_even(&Q).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn reflection_equivariance(lam in arb_pure(2), i in 0usize..4, j in 0usize..4, s in prop::sample::select(vec![1i64, -1])) {
            let sp = HyperbolicSpace::new(2);
            let mut v = vec![int(0); 8];
            v[i] = int(1);
            v[sp.y(j)] = int(s);
            if i != j {
                v[sp.y(i)] = int(s);
            }
            let w = annihilator(&Q, sp, &lam).unwrap();
            prop_assert!(w.is_maximal());
            let moved = sp.act_vector(&Q, &v, &lam);
            let w2 = annihilator(&Q, sp, &moved).unwrap();
            let expected = w.map(&Q, |u| reflection(&Q, sp, &v, u).unwrap()).unwrap();
            prop_assert_eq!(w2, expected);
            // line round trip, scale invariance, parity
            prop_assert_eq!(pure_spinor_of(&Q, &w).unwrap(), normalize_line(&Q, &lam).unwrap());
            let scaled = lam.scale(&Q, &int(-3));
            prop_assert!(is_pure(&Q, sp, &scaled).unwrap().0);
            prop_assert!(moved.even_part().is_zero() || moved.odd_part().is_zero());
        }
    }
}
