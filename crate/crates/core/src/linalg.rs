//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::scalar::{czero, Real};

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

pub fn trace<T: Real>(m: &CMatrix<T>) -> Complex<T> {
    m.diagonal().iter().fold(czero(), |acc, &x| acc + x)
}

pub fn commutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b - b * a
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (*x - *y).norm_sqr().sqrt())
        .fold(T::zero(), |m, v| if v > m { v } else { m })
}

pub fn hermiticity_error<T: Real>(m: &CMatrix<T>) -> T {
    max_abs_diff(m, &m.adjoint())
}

pub fn hermitian_part<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    (m + m.adjoint()) * Complex::from(crate::scalar::real::<T>(0.5))
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. The input is symmetrized first.
pub fn hermitian_eigen<T: Real>(m: &CMatrix<T>) -> (DVector<T>, CMatrix<T>) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Negative eigenvalues from round-off are clamped to zero.
pub fn psd_sqrt<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    let (vals, vecs) = hermitian_eigen(m);
    let floor = spectral_floor(&vals);
    let roots = vals.map(|v| if v > floor { v.sqrt() } else { T::zero() });
    let mut scaled = vecs.clone();
    for (j, r) in roots.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*r);
    }
    scaled * vecs.adjoint()
}

/// Eigenvalues below this are round-off of a rank-deficient PSD matrix.
pub fn spectral_floor<T: Real>(vals: &DVector<T>) -> T {
    let top = vals.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    top * T::default_epsilon() * crate::scalar::real::<T>(64.0 * vals.len() as f64)
}

/// `exp(i·θ·H)` for Hermitian `H`.
pub fn expi_hermitian<T: Real>(h: &CMatrix<T>, theta: T) -> CMatrix<T> {
    let (vals, vecs) = hermitian_eigen(h);
    let mut scaled = vecs.clone();
    for (j, v) in vals.iter().enumerate() {
        let phase = crate::scalar::cis(*v * theta);
        for x in scaled.column_mut(j).iter_mut() {
            *x *= phase;
        }
    }
    scaled * vecs.adjoint()
}

/// Modified Gram-Schmidt on the columns of `m`, in place.
pub fn orthonormalize_columns<T: Real>(m: &mut CMatrix<T>) {
    let ncols = m.ncols();
    for j in 0..ncols {
        for k in 0..j {
            let proj = m.column(k).dotc(&m.column(j));
            let ck = m.column(k).into_owned();
            let mut cj = m.column_mut(j);
            cj -= ck * proj;
        }
        let norm = m.column(j).norm();
        if norm > T::zero() {
            m.column_mut(j).unscale_mut(norm);
        }
    }
}

/// Deviation of `U†U` from the identity.
pub fn unitarity_error<T: Real>(u: &CMatrix<T>) -> T {
    let prod = u.adjoint() * u;
    max_abs_diff(&prod, &CMatrix::identity(u.nrows(), u.ncols()))
}
