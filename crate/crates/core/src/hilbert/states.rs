use nalgebra::Complex;

use super::{zero_vector, FockTruncation, JointState, Qubit};
use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::scalar::{cis, czero, ln_factorial, real, Real};

/// Fock state `|↓, n⟩`.
pub fn make_fock<T: Real>(n: usize, trunc: FockTruncation) -> Result<JointState<T>> {
    if n > trunc.n_max {
        return Err(Error::Range { n, n_max: trunc.n_max });
    }
    let mut amps = zero_vector(2 * trunc.levels());
    amps[n] = Complex::from(T::one());
    Ok(JointState::from_raw(trunc, amps))
}

/// Analytic coherent amplitudes `e^{−|α|²/2} αⁿ/√n!` for `n = 0..=n_max`, not
/// renormalized.
pub fn coherent_amplitudes<T: Real>(alpha: Complex<T>, n_max: usize) -> Vec<Complex<T>> {
    let r = alpha.norm_sqr().sqrt();
    let mut out = vec![czero(); n_max + 1];
    if r == T::zero() {
        out[0] = Complex::from(T::one());
        return out;
    }
    let phi = alpha.im.atan2(alpha.re);
    let half = real::<T>(0.5);
    let ln_r = r.ln();
    for (n, c) in out.iter_mut().enumerate() {
        let nf = real::<T>(n as f64);
        let ln_mag = -half * r * r + nf * ln_r - half * ln_factorial::<T>(n);
        *c = cis(nf * phi) * ln_mag.exp();
    }
    out
}

/// Poisson weight of a coherent state above `n_max`, and the smallest `n_max`
/// that would bring it under `tol`.
pub fn coherent_tail(abs_alpha: f64, n_max: usize, tol: f64) -> (f64, usize) {
    let lambda = abs_alpha * abs_alpha;
    let weight = |n: usize| -> f64 {
        if lambda == 0.0 {
            if n == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            (-lambda + n as f64 * lambda.ln() - ln_factorial::<f64>(n)).exp()
        }
    };
    let tail_above = |cut: usize| -> f64 {
        let mut sum = 0.0;
        let mut n = cut + 1;
        loop {
            let w = weight(n);
            sum += w;
            if (n as f64 > lambda && w < 1e-30) || n > cut + 10_000 {
                break;
            }
            n += 1;
        }
        sum
    };
    let tail = tail_above(n_max);
    let mut needed = 0usize;
    while tail_above(needed) > tol {
        needed += 1;
    }
    (tail, needed.max(1))
}

/// Coherent state `|↓⟩ ⊗ |α⟩`, renormalized on the truncated space.
pub fn make_coherent<T: Real>(alpha: Complex<T>, trunc: FockTruncation) -> Result<JointState<T>> {
    let abs = crate::scalar::to_f64(alpha.norm_sqr().sqrt());
    let (tail, needed) = coherent_tail(abs, trunc.n_max, trunc.leakage_tol);
    if tail > trunc.leakage_tol {
        return Err(Error::Truncation {
            leakage: tail,
            tol: trunc.leakage_tol,
            required_n_max: Some(needed),
        });
    }
    JointState::product(trunc, Qubit::Down, &coherent_amplitudes(alpha, trunc.n_max))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Create,
    Annihilate,
}

pub(crate) fn edge_guard<T: Real>(state: &JointState<T>, lost: T) -> Result<()> {
    let tol = state.truncation().leakage_tol;
    let lost = crate::scalar::to_f64(lost);
    if lost > tol {
        return Err(Error::Truncation {
            leakage: lost,
            tol,
            required_n_max: Some(state.n_max() + 1),
        });
    }
    Ok(())
}

/// `â†` or `â` on the phonon factor. The result is not normalized
/// (`â|0⟩` is the zero vector).
pub fn apply_ladder<T: Real>(state: &JointState<T>, which: Ladder) -> Result<CVector<T>> {
    let n_max = state.n_max();
    let mut out = zero_vector(state.dim());
    match which {
        Ladder::Create => {
            let lost = state.fock_population(n_max) * real::<T>((n_max + 1) as f64);
            edge_guard(state, lost)?;
            for q in [Qubit::Down, Qubit::Up] {
                for n in 0..n_max {
                    out[state.index(q, n + 1)] =
                        state.amplitude(q, n) * real::<T>((n + 1) as f64).sqrt();
                }
            }
        }
        Ladder::Annihilate => {
            for q in [Qubit::Down, Qubit::Up] {
                for n in 1..=n_max {
                    out[state.index(q, n - 1)] = state.amplitude(q, n) * real::<T>(n as f64).sqrt();
                }
            }
        }
    }
    Ok(out)
}

/// Ideal addition `Ŝ⁺`: shifts every Fock index up by one, leaving amplitudes
/// untouched.
pub fn apply_s_plus<T: Real>(state: &JointState<T>) -> Result<JointState<T>> {
    let n_max = state.n_max();
    edge_guard(state, state.fock_population(n_max))?;
    let mut out = zero_vector(state.dim());
    for q in [Qubit::Down, Qubit::Up] {
        for n in 0..n_max {
            out[state.index(q, n + 1)] = state.amplitude(q, n);
        }
    }
    JointState::normalized(*state.truncation(), out)
}

/// Result of the post-selected subtraction `Ŝ⁻`.
#[derive(Clone, Debug)]
pub struct SMinusOutcome<T: Real> {
    /// Renormalized post-selected state; `None` when post-selection cannot
    /// succeed (pure vacuum input).
    pub state: Option<JointState<T>>,
    pub success_prob: T,
}

/// Ideal subtraction `Ŝ⁻`, renormalized, with success probability `1 − p₀`.
pub fn apply_s_minus<T: Real>(state: &JointState<T>) -> SMinusOutcome<T> {
    let n_max = state.n_max();
    let success = (T::one() - state.fock_population(0)).max(T::zero());
    if success <= T::default_epsilon() * real::<T>(16.0) {
        return SMinusOutcome {
            state: None,
            success_prob: T::zero(),
        };
    }
    let mut out = zero_vector(state.dim());
    for q in [Qubit::Down, Qubit::Up] {
        for n in 1..=n_max {
            out[state.index(q, n - 1)] = state.amplitude(q, n);
        }
    }
    let norm = out.norm();
    SMinusOutcome {
        state: Some(JointState::from_raw(*state.truncation(), out.unscale(norm))),
        success_prob: success,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::complex;

    fn trunc(n: usize) -> FockTruncation {
        FockTruncation::with_n_max(n).unwrap()
    }

    fn superposition(t: FockTruncation, ns: &[usize]) -> JointState<f64> {
        let mut amps = vec![czero::<f64>(); t.levels()];
        for &n in ns {
            amps[n] = complex(1.0, 0.0);
        }
        JointState::product(t, Qubit::Down, &amps).unwrap()
    }

    #[test]
    fn vacuum_is_normalized_fock() {
        let s = make_fock::<f64>(0, trunc(5)).unwrap();
        assert_eq!(s.amplitudes().norm_squared(), 1.0);
        assert_eq!(s.phonon_distribution().get(0), 1.0);
    }

    #[test]
    fn fock_out_of_range() {
        assert!(matches!(
            make_fock::<f64>(3, trunc(2)),
            Err(Error::Range { n: 3, n_max: 2 })
        ));
    }

    #[test]
    fn fock_two_is_number_eigenstate() {
        let d = make_fock::<f64>(2, trunc(5)).unwrap().phonon_distribution();
        assert_eq!(d.mean(), 2.0);
        assert_eq!(d.variance(), 0.0);
    }

    #[test]
    fn coherent_weights_match_poisson() {
        let s = make_coherent(complex(0.81, 0.0), trunc(15)).unwrap();
        let d = s.phonon_distribution();
        let lambda: f64 = 0.81 * 0.81;
        assert!((d.get(0) - (-lambda).exp()).abs() < 1e-9);
        assert!((d.get(0) - 0.5189).abs() < 1e-4);
        assert!((d.get(1) - 0.3405).abs() < 1e-4);
    }

    #[test]
    fn coherent_mean_is_alpha_squared() {
        let d = make_coherent(complex(1.2f64, 0.0), trunc(15)).unwrap().phonon_distribution();
        assert!((d.mean() - 1.44).abs() < 1e-6);
    }

    #[test]
    fn coherent_zero_is_vacuum() {
        let s = make_coherent(complex(0.0, 0.0), trunc(4)).unwrap();
        assert_eq!(s.population(Qubit::Down, 0), 1.0);
    }

    #[test]
    fn coherent_truncation_names_required_n_max() {
        let err = make_coherent(complex(2.0, 0.0), trunc(4)).unwrap_err();
        match err {
            Error::Truncation { required_n_max: Some(n), .. } => {
                assert!(n > 4);
                assert!(make_coherent(complex(2.0, 0.0), trunc(n)).is_ok());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn creation_on_one_gives_sqrt_two_two() {
        let s = make_fock::<f64>(1, trunc(4)).unwrap();
        let v = apply_ladder(&s, Ladder::Create).unwrap();
        assert!((v[2].re - 2f64.sqrt()).abs() < 1e-15);
        assert!((v.norm_squared() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn annihilation_on_vacuum_is_zero() {
        let s = make_fock::<f64>(0, trunc(4)).unwrap();
        let v = apply_ladder(&s, Ladder::Annihilate).unwrap();
        assert_eq!(v.norm_squared(), 0.0);
    }

    #[test]
    fn creation_refuses_edge_population() {
        let s = make_fock::<f64>(4, trunc(4)).unwrap();
        assert!(matches!(apply_ladder(&s, Ladder::Create), Err(Error::Truncation { .. })));
        assert!(matches!(apply_s_plus(&s), Err(Error::Truncation { .. })));
    }

    #[test]
    fn coherent_number_expectation() {
        let s = make_coherent(complex(0.8f64, 0.0), trunc(25)).unwrap();
        let a = apply_ladder(&s, Ladder::Annihilate).unwrap();
        // ⟨α|â†â|α⟩ = ‖â|α⟩‖²
        assert!((a.norm_squared() - 0.64).abs() < 1e-9);
    }

    #[test]
    fn s_plus_shifts_superposition() {
        let t = trunc(6);
        let out = apply_s_plus(&superposition(t, &[0, 1])).unwrap();
        let expected = superposition(t, &[1, 2]);
        assert!((out.overlap(&expected).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn s_minus_on_vacuum_fails() {
        let out = apply_s_minus(&make_fock::<f64>(0, trunc(3)).unwrap());
        assert!(out.state.is_none());
        assert_eq!(out.success_prob, 0.0);
    }

    #[test]
    fn s_minus_shifts_superposition_down() {
        let t = trunc(6);
        let out = apply_s_minus(&superposition(t, &[2, 3]));
        assert!((out.success_prob - 1.0).abs() < 1e-12);
        let s = out.state.unwrap();
        assert!((s.overlap(&superposition(t, &[1, 2])).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn s_minus_success_is_one_minus_vacuum() {
        let s = make_coherent(complex(1.2, 0.0), trunc(20)).unwrap();
        let out = apply_s_minus(&s);
        assert!((out.success_prob - (1.0 - (-1.44f64).exp())).abs() < 1e-9);
    }
}
