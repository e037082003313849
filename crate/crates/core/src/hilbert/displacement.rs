use nalgebra::Complex;

use super::operators::{annihilation, creation};
use super::states::{coherent_amplitudes, coherent_tail};
use super::{DensityOperator, FockTruncation, Layout};
use crate::error::{Error, Result};
use crate::linalg::{expi_hermitian, unitarity_error, CMatrix};
use crate::scalar::{ci, real, to_f64, Real};

/// Displacement `D(α) = exp(α â† − α* â)` as a unitary on the truncated space,
/// built from the eigen-decomposition of the truncated generator.
pub fn displacement<T: Real>(alpha: Complex<T>, trunc: &FockTruncation) -> Result<CMatrix<T>> {
    let (tail, needed) = coherent_tail(to_f64(alpha.norm_sqr().sqrt()), trunc.n_max, trunc.leakage_tol);
    if tail > trunc.leakage_tol {
        return Err(Error::Truncation {
            leakage: tail,
            tol: trunc.leakage_tol,
            required_n_max: Some(needed),
        });
    }
    let gen = creation::<T>(trunc.n_max) * alpha - annihilation::<T>(trunc.n_max) * alpha.conj();
    // gen is anti-Hermitian: gen = i·H with H = −i·gen
    let h = gen * (-ci::<T>());
    let d = expi_hermitian(&h, T::one());
    let err = unitarity_error(&d);
    if err > T::validation_tol() * real::<T>(100.0) {
        return Err(Error::Truncation {
            leakage: to_f64(err),
            tol: trunc.leakage_tol,
            required_n_max: None,
        });
    }
    Ok(d)
}

/// Exact (untruncated) matrix elements `⟨m|D(β)|n⟩` for `m < rows`, `n < cols`.
///
/// Column 0 is the coherent state; further columns follow from
/// `D(β)|n+1⟩ = (â† − β*) D(β)|n⟩ / √(n+1)`, which never references rows above
/// the requested block.
pub fn displacement_elements<T: Real>(beta: Complex<T>, rows: usize, cols: usize) -> CMatrix<T> {
    let mut m = CMatrix::zeros(rows, cols);
    if rows == 0 || cols == 0 {
        return m;
    }
    let first = coherent_amplitudes(beta, rows - 1);
    for (r, c) in first.iter().enumerate() {
        m[(r, 0)] = *c;
    }
    let bc = beta.conj();
    for n in 0..cols.saturating_sub(1) {
        let inv = T::one() / real::<T>((n + 1) as f64).sqrt();
        for r in 0..rows {
            let up = if r > 0 {
                m[(r - 1, n)] * real::<T>(r as f64).sqrt()
            } else {
                Complex::from(T::zero())
            };
            m[(r, n + 1)] = (up - bc * m[(r, n)]) * inv;
        }
    }
    m
}

/// `D(α) ρ D(α)†` restricted to the same truncation, using exact matrix
/// elements. Fails if more than `leakage_tol` of the population is pushed
/// above `n_max`.
pub fn displace_density<T: Real>(rho: &DensityOperator<T>, alpha: Complex<T>) -> Result<DensityOperator<T>> {
    let trunc = *rho.truncation();
    let l = trunc.levels();
    let d = displacement_elements(alpha, l, l);
    let phonon = rho.phonon_reduced();
    let out = match rho.layout() {
        Layout::Phonon => &d * phonon.matrix() * d.adjoint(),
        Layout::Joint => {
            let dj = super::operators::on_joint(&d);
            &dj * rho.matrix() * dj.adjoint()
        }
    };
    let kept = crate::linalg::trace(&out).re;
    let lost = to_f64(T::one() - kept);
    if lost > trunc.leakage_tol {
        return Err(Error::Truncation {
            leakage: lost,
            tol: trunc.leakage_tol,
            required_n_max: None,
        });
    }
    DensityOperator::from_matrix_unchecked(trunc, rho.layout(), out)?.renormalized()
}
