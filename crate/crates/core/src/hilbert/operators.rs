//! Matrix forms of the ideal mode operators on the truncated Fock space.

use nalgebra::Complex;

use crate::linalg::CMatrix;
use crate::scalar::{real, Real};

/// `â = Σ √n |n−1⟩⟨n|`.
pub fn annihilation<T: Real>(n_max: usize) -> CMatrix<T> {
    let l = n_max + 1;
    let mut m = CMatrix::zeros(l, l);
    for n in 1..l {
        m[(n - 1, n)] = Complex::from(real::<T>(n as f64).sqrt());
    }
    m
}

/// `â† = Σ √(n+1) |n+1⟩⟨n|`, cut at `n_max`.
pub fn creation<T: Real>(n_max: usize) -> CMatrix<T> {
    annihilation::<T>(n_max).adjoint()
}

pub fn number<T: Real>(n_max: usize) -> CMatrix<T> {
    let l = n_max + 1;
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        l,
        (0..l).map(|n| Complex::from(real::<T>(n as f64))),
    ))
}

/// Addition `Ŝ⁺ = Σ |n+1⟩⟨n|`.
pub fn s_plus<T: Real>(n_max: usize) -> CMatrix<T> {
    let l = n_max + 1;
    let mut m = CMatrix::zeros(l, l);
    for n in 0..n_max {
        m[(n + 1, n)] = Complex::from(T::one());
    }
    m
}

/// Subtraction `Ŝ⁻ = Σ_{n≥1} |n−1⟩⟨n|`.
pub fn s_minus<T: Real>(n_max: usize) -> CMatrix<T> {
    s_plus::<T>(n_max).adjoint()
}

/// Parity `(−1)^n̂`.
pub fn parity<T: Real>(n_max: usize) -> CMatrix<T> {
    let l = n_max + 1;
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        l,
        (0..l).map(|n| Complex::from(if n % 2 == 0 { T::one() } else { -T::one() })),
    ))
}

/// Lifts a phonon operator to the joint space as `𝟙_qubit ⊗ op`.
pub fn on_joint<T: Real>(op: &CMatrix<T>) -> CMatrix<T> {
    CMatrix::<T>::identity(2, 2).kronecker(op)
}
