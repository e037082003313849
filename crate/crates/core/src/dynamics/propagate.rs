use nalgebra::Complex;

use super::block::BlockUnitary;
use super::hamiltonian::{sweep_drive, DriveSample};
use super::sequences::carrier_unitary;
use super::{PulseKind, PulseSchedule};
use crate::error::{Error, Result};
use crate::hilbert::JointState;
use crate::scalar::{cis, real, to_f64, Real};

/// Largest entry change allowed when the step is halved.
pub const CONVERGENCE_TOL: f64 = 1e-7;

/// Step refinements tried before giving up.
const MAX_REFINEMENTS: usize = 8;

/// Block coefficients `H = a0·I + a·σ` in the (↓,n), (↑,n+1) basis.
fn block_coefficients(drive: DriveSample, n: usize) -> (f64, [f64; 3]) {
    let c = drive.coupling * ((n + 1) as f64).sqrt() * 0.5;
    let half = -0.5 * drive.detuning;
    (half, [c.re, c.im, half])
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// `exp(−i(k0 + k·σ))` as a 2×2 matrix.
fn su2_exp<T: Real>(k0: f64, k: [f64; 3]) -> [[Complex<T>; 2]; 2] {
    let norm = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    let (c, s) = (norm.cos(), if norm > 0.0 { norm.sin() / norm } else { 1.0 });
    let g = Complex::new(k0.cos(), -k0.sin());
    // −i s (k·σ), k·σ = [[kz, kx − i ky], [kx + i ky, −kz]]
    let m = [
        [Complex::new(c, -s * k[2]), Complex::new(-s * k[1], -s * k[0])],
        [Complex::new(s * k[1], -s * k[0]), Complex::new(c, s * k[2])],
    ];
    let conv = |z: Complex<f64>| {
        let w = g * z;
        Complex::new(real::<T>(w.re), real::<T>(w.im))
    };
    [[conv(m[0][0]), conv(m[0][1])], [conv(m[1][0]), conv(m[1][1])]]
}

/// Fourth-order Magnus integration of the sideband Hamiltonian generated by
/// `drive` over `[t0, t0 + duration]` with `steps` equal steps. Returns the
/// accumulated per-block exponents as a block unitary.
fn integrate_segment<T: Real>(
    drive: &dyn Fn(f64) -> DriveSample,
    t0: f64,
    duration: f64,
    steps: usize,
    n_max: usize,
    acc: &mut Vec<[[Complex<f64>; 2]; 2]>,
    edge_phase: &mut f64,
) {
    let h = duration / steps as f64;
    let off = (0.5 - 3f64.sqrt() / 6.0) * h;
    let comm = 3f64.sqrt() / 6.0 * h * h;
    for k in 0..steps {
        let ta = t0 + k as f64 * h;
        let d1 = drive(ta + off);
        let d2 = drive(ta + h - off);
        *edge_phase += 0.5 * h * (d1.detuning + d2.detuning);
        for (n, u) in acc.iter_mut().enumerate().take(n_max) {
            let (a01, a1) = block_coefficients(d1, n);
            let (a02, a2) = block_coefficients(d2, n);
            let x = cross(a2, a1);
            let kv = [
                0.5 * h * (a1[0] + a2[0]) + comm * x[0],
                0.5 * h * (a1[1] + a2[1]) + comm * x[1],
                0.5 * h * (a1[2] + a2[2]) + comm * x[2],
            ];
            let step = su2_exp::<f64>(0.5 * h * (a01 + a02), kv);
            let prev = *u;
            for i in 0..2 {
                for j in 0..2 {
                    u[i][j] = step[i][0] * prev[0][j] + step[i][1] * prev[1][j];
                }
            }
        }
    }
}

/// Sideband propagator for an arbitrary drive. Segments are integrated
/// separately so that discontinuities of the drive (the mid-sweep inversion)
/// fall on step boundaries.
fn sideband_unitary<T: Real>(
    drive: &dyn Fn(f64) -> DriveSample,
    segments: &[(f64, f64)],
    step: f64,
    n_max: usize,
) -> BlockUnitary<T> {
    let one = Complex::new(1.0, 0.0);
    let zero = Complex::new(0.0, 0.0);
    let mut acc = vec![[[one, zero], [zero, one]]; n_max];
    // ∫δ dt for the uncoupled |↓,n_max⟩ whose energy is −δ
    let mut edge_phase = 0.0;
    for &(t0, len) in segments {
        if len <= 0.0 {
            continue;
        }
        let steps = ((len / step).ceil() as usize).max(1);
        integrate_segment::<T>(drive, t0, len, steps, n_max, &mut acc, &mut edge_phase);
    }
    let l = n_max + 1;
    let conv = |z: Complex<f64>| Complex::new(real::<T>(z.re), real::<T>(z.im));
    let pairs = acc
        .iter()
        .enumerate()
        .map(|(n, m)| (n, l + n + 1, [[conv(m[0][0]), conv(m[0][1])], [conv(m[1][0]), conv(m[1][1])]]))
        .collect();
    let singles = vec![(l, Complex::from(T::one())), (n_max, cis(real::<T>(edge_phase)))];
    BlockUnitary::new(2 * l, pairs, singles)
}

/// Propagator for `drive` with the step-halving convergence contract: the
/// step is refined until halving changes no entry by more than
/// [`CONVERGENCE_TOL`].
pub(crate) fn converged_unitary<T: Real>(
    drive: &dyn Fn(f64) -> DriveSample,
    segments: &[(f64, f64)],
    step: f64,
    n_max: usize,
) -> Result<BlockUnitary<T>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("step", format!("{step} must be positive")));
    }
    let mut h = step;
    let mut coarse = sideband_unitary::<T>(drive, segments, h, n_max);
    for _ in 0..MAX_REFINEMENTS {
        let fine = sideband_unitary::<T>(drive, segments, h / 2.0, n_max);
        let diff = to_f64(coarse.max_diff(&fine)?);
        if diff < CONVERGENCE_TOL {
            return Ok(fine);
        }
        log::debug!("step {h:e} s not converged (Δ = {diff:e}), halving");
        h /= 2.0;
        coarse = fine;
    }
    Err(Error::Integration(format!(
        "propagator not converged after {MAX_REFINEMENTS} step halvings (final step {h:e} s)"
    )))
}

/// Converged propagator of the drive restricted to `[t0, t0 + len]`.
pub(crate) fn converged_segment<T: Real>(
    drive: &dyn Fn(f64) -> DriveSample,
    t0: f64,
    len: f64,
    step: f64,
    n_max: usize,
) -> Result<BlockUnitary<T>> {
    converged_unitary(drive, &[(t0, len)], step, n_max)
}

/// Propagator of a single pulse on a truncation with `n_max`.
pub fn pulse_unitary<T: Real>(schedule: &PulseSchedule, n_max: usize, step: f64) -> Result<BlockUnitary<T>> {
    schedule.validate()?;
    let phase = cis(schedule.phase);
    match schedule.kind {
        PulseKind::CarrierPi => Ok(carrier_unitary(n_max, schedule.phase)),
        PulseKind::DynamicBsb { duration, rabi } => {
            let drive = move |_t: f64| DriveSample {
                coupling: Complex::new(rabi, 0.0) * phase,
                detuning: 0.0,
            };
            // constant Hamiltonian: a single Magnus step is exact
            Ok(sideband_unitary::<T>(&drive, &[(0.0, duration)], duration.max(f64::MIN_POSITIVE), n_max))
        }
        PulseKind::AdiabaticBsb(sweep) => {
            let drive = move |t: f64| {
                let d = sweep_drive(t, &sweep);
                DriveSample {
                    coupling: d.coupling * phase,
                    detuning: d.detuning,
                }
            };
            let half = 0.5 * sweep.duration;
            converged_unitary::<T>(&drive, &[(0.0, half), (half, half)], step, n_max)
        }
    }
}

/// Applies `schedule` to `state`.
pub fn propagate<T: Real>(state: &JointState<T>, schedule: &PulseSchedule, step: f64) -> Result<JointState<T>> {
    let u = pulse_unitary::<T>(schedule, state.n_max(), step)?;
    Ok(JointState::from_raw(*state.truncation(), u.apply(state.amplitudes())))
}

/// Applies an arbitrary sideband drive `drive(t)` for `t ∈ [0, duration]`,
/// with the same convergence contract as [`propagate`].
pub fn propagate_with<T: Real>(
    state: &JointState<T>,
    drive: impl Fn(f64) -> DriveSample,
    duration: f64,
    step: f64,
) -> Result<JointState<T>> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::invalid("duration", format!("{duration} is not a valid pulse length")));
    }
    let u = converged_unitary::<T>(&drive, &[(0.0, duration)], step, state.n_max())?;
    Ok(JointState::from_raw(*state.truncation(), u.apply(state.amplitudes())))
}
