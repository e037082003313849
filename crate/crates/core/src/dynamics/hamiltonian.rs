use std::f64::consts::PI;

use nalgebra::Complex;

use super::SweepParams;
use crate::hilbert::FockTruncation;
use crate::linalg::CMatrix;
use crate::scalar::{real, Real};

/// Instantaneous drive in the sideband rotating frame: the block coupling is
/// `⟨↑,n+1|H|↓,n⟩ = √(n+1)·coupling/2` and ↑ sits `detuning` above ↓.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveSample {
    pub coupling: Complex<f64>,
    pub detuning: f64,
}

/// Drive of the counter-diabatic sweep at time `t ∈ [0, T]`.
///
/// First half: `Ω = Ω₀[sin(πt/T) + iβ]`, `Δ = Δ₀cos(πt/T)`. Second half: the
/// in-phase drive changes sign and the detuning ramp runs backwards,
/// `Ω = Ω₀[−sin(πt/T) + iβ]`, `Δ = Δ₀cos(π(T−t)/T)`. The ion sees the
/// co-rotating component `Ω*`.
pub fn sweep_drive(t: f64, sweep: &SweepParams) -> DriveSample {
    let x = PI * t / sweep.duration;
    let (s, detuning) = if t <= 0.5 * sweep.duration {
        (x.sin(), sweep.delta0 * x.cos())
    } else {
        (-x.sin(), sweep.delta0 * (PI - x).cos())
    };
    let omega = Complex::new(sweep.omega0 * s, sweep.omega0 * sweep.beta);
    DriveSample {
        coupling: omega.conj(),
        detuning: detuning - sweep.sideband_offset,
    }
}

/// Full joint-space Hamiltonian (rad/s) for a drive sample.
pub(crate) fn hamiltonian_from_drive<T: Real>(drive: DriveSample, n_max: usize) -> CMatrix<T> {
    let l = n_max + 1;
    let mut h = CMatrix::zeros(2 * l, 2 * l);
    let g = Complex::new(real::<T>(drive.coupling.re), real::<T>(drive.coupling.im));
    let det = real::<T>(drive.detuning);
    for n in 0..l {
        h[(n, n)] = Complex::from(-det);
    }
    for n in 0..n_max {
        let c = g * (real::<T>((n + 1) as f64).sqrt() * real::<T>(0.5));
        // ↓ at index n, ↑ at index l + n + 1
        h[(l + n + 1, n)] = c;
        h[(n, l + n + 1)] = c.conj();
    }
    h
}

/// Anti-Jaynes-Cummings Hamiltonian of the adiabatic sweep at time `t`.
pub fn hamiltonian_ajc<T: Real>(t: f64, sweep: &SweepParams, trunc: &FockTruncation) -> CMatrix<T> {
    hamiltonian_from_drive(sweep_drive(t, sweep), trunc.n_max)
}
