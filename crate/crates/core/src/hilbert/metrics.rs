use super::DensityOperator;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, psd_sqrt, spectral_floor, CVector};
use crate::scalar::{real, Real};

/// Phonon statistics of a state (computed on the reduced phonon operator).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateMetrics<T> {
    pub mean_n: T,
    pub variance: T,
    /// `variance / mean_n`; `None` when the mean vanishes.
    pub fano: Option<T>,
    pub purity: T,
}

pub fn state_metrics<T: Real>(rho: &DensityOperator<T>) -> StateMetrics<T> {
    let red = rho.phonon_reduced();
    let dist = red.phonon_distribution();
    let mean_n = dist.mean();
    let variance = dist.variance();
    let fano = if mean_n > T::default_epsilon() * real::<T>(1e3) {
        Some(variance / mean_n)
    } else {
        None
    };
    StateMetrics {
        mean_n,
        variance,
        fano,
        purity: red.purity(),
    }
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn fidelity<T: Real>(rho: &DensityOperator<T>, sigma: &DensityOperator<T>) -> Result<T> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let s = psd_sqrt(rho.matrix());
    let inner = &s * sigma.matrix() * &s;
    let (vals, _) = hermitian_eigen(&inner);
    let floor = spectral_floor(&vals);
    let root_sum = vals
        .iter()
        .fold(T::zero(), |acc, v| if *v > floor { acc + v.sqrt() } else { acc });
    Ok((root_sum * root_sum).min(T::one()))
}

/// `⟨ψ|ρ|ψ⟩` for a normalized vector on the same space as `rho`.
pub fn fidelity_to_pure<T: Real>(rho: &DensityOperator<T>, psi: &CVector<T>) -> Result<T> {
    if psi.len() != rho.dim() {
        return Err(Error::Dimension {
            expected: rho.dim(),
            found: psi.len(),
        });
    }
    Ok(psi.dotc(&(rho.matrix() * psi)).re)
}
