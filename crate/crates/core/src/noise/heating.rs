use nalgebra::Complex;

use super::NoiseParams;
use crate::error::{Error, Result};
use crate::hilbert::{DensityOperator, Layout};
use crate::linalg::{hermitian_part, CMatrix};
use crate::scalar::{real, to_f64, Real};

/// Halving the step may change the result by at most this trace distance.
const CONVERGENCE_TOL: f64 = 1e-7;
const MAX_REFINEMENTS: usize = 8;
const POSITIVITY_TOL: f64 = 1e-8;

/// `n̄ + (n₀ − n̄)e^{−γt}`.
pub fn mean_occupation_analytic(n0: f64, t: f64, params: &NoiseParams) -> f64 {
    params.nbar + (n0 - params.nbar) * (-params.gamma * t).exp()
}

/// Step that keeps RK4 well inside its stability region for the fastest
/// decay rate present on the truncation.
pub fn default_heat_step(params: &NoiseParams, n_max: usize) -> f64 {
    let fastest = params.gamma * (2.0 * params.nbar + 1.0) * (n_max as f64 + 1.0);
    if fastest > 0.0 {
        0.05 / fastest
    } else {
        f64::INFINITY
    }
}

/// `γn̄ D[â†]ρ + γ(n̄+1) D[â]ρ` with `D[L]ρ = LρL† − ½{L†L, ρ}`, built from
/// the truncated ladder operators so that the trace is conserved exactly.
/// For joint operators the channel acts on every qubit sub-block.
pub fn heating_rhs<T: Real>(rho: &CMatrix<T>, levels: usize, params: &NoiseParams) -> CMatrix<T> {
    let up = real::<T>(params.gamma * params.nbar);
    let down = real::<T>(params.gamma * (params.nbar + 1.0));
    let half = real::<T>(0.5);
    let top = levels - 1;
    // diagonal of ââ† on the truncation: n+1 below the edge, 0 at it
    let aad = |m: usize| if m < top { real::<T>((m + 1) as f64) } else { T::zero() };
    let dim = rho.nrows();
    let blocks = dim / levels;
    let mut out = CMatrix::zeros(dim, dim);
    for bi in 0..blocks {
        for bj in 0..blocks {
            let (oi, oj) = (bi * levels, bj * levels);
            for n in 0..levels {
                for m in 0..levels {
                    let r = rho[(oi + m, oj + n)];
                    let mut v = -(r * ((aad(m) + aad(n)) * half * up));
                    v -= r * (real::<T>((m + n) as f64) * half * down);
                    if m > 0 && n > 0 {
                        let s = real::<T>((m * n) as f64).sqrt();
                        v += rho[(oi + m - 1, oj + n - 1)] * (s * up);
                    }
                    if m < top && n < top {
                        let s = real::<T>(((m + 1) * (n + 1)) as f64).sqrt();
                        v += rho[(oi + m + 1, oj + n + 1)] * (s * down);
                    }
                    out[(oi + m, oj + n)] = v;
                }
            }
        }
    }
    out
}

fn rk4<T: Real>(rho: &CMatrix<T>, duration: f64, steps: usize, levels: usize, params: &NoiseParams) -> CMatrix<T> {
    let h = real::<T>(duration / steps as f64);
    let two = real::<T>(2.0);
    let sixth = h / real::<T>(6.0);
    let mut r = rho.clone();
    for _ in 0..steps {
        let k1 = heating_rhs(&r, levels, params);
        let k2 = heating_rhs(&(&r + &k1 * Complex::from(h / two)), levels, params);
        let k3 = heating_rhs(&(&r + &k2 * Complex::from(h / two)), levels, params);
        let k4 = heating_rhs(&(&r + &k3 * Complex::from(h)), levels, params);
        r += (k1 + (k2 + k3) * Complex::from(two) + k4) * Complex::from(sixth);
    }
    r
}

/// Evolves `rho` under the heating master equation for `duration` seconds.
///
/// The step is refined until halving it changes the result by less than
/// 1e-7 in trace distance. Positivity is checked on the result; heating that
/// pushes population onto the truncation edge is refused.
pub fn heat<T: Real>(
    rho: &DensityOperator<T>,
    duration: f64,
    params: &NoiseParams,
    step: f64,
) -> Result<DensityOperator<T>> {
    params.validate()?;
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::invalid("duration", format!("{duration} is not a valid time")));
    }
    if !(step > 0.0) {
        return Err(Error::invalid("step", format!("{step} must be positive")));
    }
    if duration == 0.0 || !params.has_heating() {
        return Ok(rho.clone());
    }
    let trunc = *rho.truncation();
    let levels = trunc.levels();
    let mut steps = ((duration / step).ceil() as usize).max(1);
    let mut coarse = rk4(rho.matrix(), duration, steps, levels, params);
    let mut converged = None;
    for _ in 0..MAX_REFINEMENTS {
        steps *= 2;
        let fine = rk4(rho.matrix(), duration, steps, levels, params);
        let a = DensityOperator::from_matrix_unchecked(trunc, rho.layout(), coarse)?;
        let b = DensityOperator::from_matrix_unchecked(trunc, rho.layout(), fine.clone())?;
        let diff = to_f64(a.trace_distance(&b)?);
        if diff < CONVERGENCE_TOL {
            converged = Some(fine);
            break;
        }
        log::debug!("heating step {:e} s not converged (Δ = {diff:e})", duration / steps as f64);
        coarse = fine;
    }
    let m = converged.ok_or_else(|| {
        Error::Integration(format!("heating integration not converged after {MAX_REFINEMENTS} halvings"))
    })?;
    let out = DensityOperator::from_matrix_unchecked(trunc, rho.layout(), hermitian_part(&m))?;
    let min = to_f64(out.min_eigenvalue());
    if min < -POSITIVITY_TOL {
        return Err(Error::Integration(format!("heating produced eigenvalue {min:e}")));
    }
    let edge = to_f64(out.edge_population());
    if edge > trunc.leakage_tol {
        return Err(Error::Truncation {
            leakage: edge,
            tol: trunc.leakage_tol,
            required_n_max: None,
        });
    }
    debug_assert!(matches!(out.layout(), Layout::Phonon | Layout::Joint));
    Ok(out)
}
