use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::scalar::{czero, Real};

type M2<T> = [[Complex<T>; 2]; 2];

/// Unitary that is a direct sum of 2×2 blocks on index pairs and phases on
/// single indices. Sideband and carrier propagators both have this shape,
/// with different pairings.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockUnitary<T: Real> {
    dim: usize,
    pairs: Vec<(usize, usize, M2<T>)>,
    singles: Vec<(usize, Complex<T>)>,
}

fn mul2<T: Real>(a: &M2<T>, b: &M2<T>) -> M2<T> {
    let mut out = [[czero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

impl<T: Real> BlockUnitary<T> {
    pub(crate) fn new(dim: usize, pairs: Vec<(usize, usize, M2<T>)>, singles: Vec<(usize, Complex<T>)>) -> Self {
        Self { dim, pairs, singles }
    }

    pub fn identity_like(&self) -> Self {
        let one = Complex::from(T::one());
        Self {
            dim: self.dim,
            pairs: self
                .pairs
                .iter()
                .map(|(i, j, _)| (*i, *j, [[one, czero()], [czero(), one]]))
                .collect(),
            singles: self.singles.iter().map(|(i, _)| (*i, one)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.pairs.len() == other.pairs.len()
            && self.singles.len() == other.singles.len()
            && self.pairs.iter().zip(&other.pairs).all(|(a, b)| a.0 == b.0 && a.1 == b.1)
            && self.singles.iter().zip(&other.singles).all(|(a, b)| a.0 == b.0)
    }

    /// `later · self`; both must share the same block pairing.
    pub fn then(&self, later: &Self) -> Result<Self> {
        if !self.same_shape(later) {
            return Err(Error::Contract("block unitaries with different pairings".into()));
        }
        Ok(Self {
            dim: self.dim,
            pairs: self
                .pairs
                .iter()
                .zip(&later.pairs)
                .map(|(a, b)| (a.0, a.1, mul2(&b.2, &a.2)))
                .collect(),
            singles: self
                .singles
                .iter()
                .zip(&later.singles)
                .map(|(a, b)| (a.0, b.1 * a.1))
                .collect(),
        })
    }

    pub fn apply(&self, v: &CVector<T>) -> CVector<T> {
        let mut out = v.clone();
        for (i, j, m) in &self.pairs {
            let (a, b) = (v[*i], v[*j]);
            out[*i] = m[0][0] * a + m[0][1] * b;
            out[*j] = m[1][0] * a + m[1][1] * b;
        }
        for (i, p) in &self.singles {
            out[*i] = *p * v[*i];
        }
        out
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let left = self.apply_columns(rho);
        // U (Uρ)† = U ρ U† since ρ is Hermitian
        self.apply_columns(&left.adjoint())
    }

    fn apply_columns(&self, m: &CMatrix<T>) -> CMatrix<T> {
        let mut out = m.clone();
        for c in 0..m.ncols() {
            let col = m.column(c).into_owned();
            out.set_column(c, &self.apply(&col));
        }
        out
    }

    pub fn to_dense(&self) -> CMatrix<T> {
        let mut u = CMatrix::identity(self.dim, self.dim);
        for (i, j, m) in &self.pairs {
            u[(*i, *i)] = m[0][0];
            u[(*i, *j)] = m[0][1];
            u[(*j, *i)] = m[1][0];
            u[(*j, *j)] = m[1][1];
        }
        for (i, p) in &self.singles {
            u[(*i, *i)] = *p;
        }
        u
    }

    /// Largest entrywise difference to another block unitary of the same shape.
    pub fn max_diff(&self, other: &Self) -> Result<T> {
        if !self.same_shape(other) {
            return Err(Error::Contract("block unitaries with different pairings".into()));
        }
        let mut worst = T::zero();
        for (a, b) in self.pairs.iter().zip(&other.pairs) {
            for i in 0..2 {
                for j in 0..2 {
                    worst = worst.max((a.2[i][j] - b.2[i][j]).norm_sqr().sqrt());
                }
            }
        }
        for (a, b) in self.singles.iter().zip(&other.singles) {
            worst = worst.max((a.1 - b.1).norm_sqr().sqrt());
        }
        Ok(worst)
    }

    /// The 2×2 block acting on the pair whose first index is `i`.
    pub fn pair_block(&self, i: usize) -> Option<M2<T>> {
        self.pairs.iter().find(|p| p.0 == i).map(|p| p.2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_error;
    use crate::scalar::complex;

    fn hadamard_like() -> BlockUnitary<f64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        BlockUnitary::new(
            3,
            vec![(0, 2, [[complex(h, 0.0), complex(h, 0.0)], [complex(h, 0.0), complex(-h, 0.0)]])],
            vec![(1, complex(0.0, 1.0))],
        )
    }

    #[test]
    fn dense_form_is_unitary_and_consistent() {
        let u = hadamard_like();
        let d = u.to_dense();
        assert!(unitarity_error(&d) < 1e-15);
        let v = CVector::from_vec(vec![complex(0.3, 0.1), complex(-0.2, 0.5), complex(0.7, 0.0)]);
        let a = u.apply(&v);
        let b = &d * &v;
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn composition_matches_dense_product() {
        let u = hadamard_like();
        let uu = u.then(&u).unwrap();
        let d = u.to_dense();
        assert!((uu.to_dense() - &d * &d).norm() < 1e-14);
    }

    #[test]
    fn conjugation_matches_dense() {
        let u = hadamard_like();
        let v = CVector::from_vec(vec![complex(0.3, 0.1), complex(-0.2, 0.5), complex(0.7, 0.0)]);
        let rho = &v * v.adjoint();
        let d = u.to_dense();
        assert!((u.conjugate(&rho) - &d * &rho * d.adjoint()).norm() < 1e-14);
    }
}
