use nalgebra::Complex;

use super::block::BlockUnitary;
use super::propagate::pulse_unitary;
use super::{PulseSchedule, SweepParams};
use crate::error::{Error, Result};
use crate::hilbert::{edge_guard, DensityOperator, FockTruncation, JointState, Layout, Qubit};
use crate::scalar::{czero, real, to_f64, Real};

/// Exact carrier π pulse `−i(cosφ σx + sinφ σy)` on every (↓,n), (↑,n) pair.
pub fn carrier_unitary<T: Real>(n_max: usize, phase: f64) -> BlockUnitary<T> {
    let l = n_max + 1;
    let up_from_down = Complex::new(real::<T>(phase.sin()), real::<T>(-phase.cos()));
    let down_from_up = Complex::new(real::<T>(-phase.sin()), real::<T>(-phase.cos()));
    let m = [[czero(), down_from_up], [up_from_down, czero()]];
    BlockUnitary::new(2 * l, (0..l).map(|n| (n, l + n, m)).collect(), Vec::new())
}

pub fn carrier_pi<T: Real>(state: &JointState<T>, phase: f64) -> JointState<T> {
    let u = carrier_unitary::<T>(state.n_max(), phase);
    JointState::from_raw(*state.truncation(), u.apply(state.amplitudes()))
}

/// Counter-diabatic sweep at its default step. Refuses states with weight on
/// |↓,n_max⟩, whose partner lies outside the truncation.
pub fn adiabatic_transfer<T: Real>(state: &JointState<T>, sweep: &SweepParams) -> Result<JointState<T>> {
    edge_guard(state, state.population(Qubit::Down, state.n_max()))?;
    let u = pulse_unitary::<T>(&PulseSchedule::adiabatic(*sweep), state.n_max(), sweep.default_step())?;
    Ok(JointState::from_raw(*state.truncation(), u.apply(state.amplitudes())))
}

/// Largest ↑ population accepted as "qubit in |↓⟩". Imperfect transfers leave
/// a few percent behind, which must not block chaining of sequences.
pub const QUBIT_DOWN_TOL: f64 = 0.05;

fn require_down<T: Real>(state: &JointState<T>) -> Result<()> {
    let up = state.qubit_population(Qubit::Up);
    if to_f64(up) > QUBIT_DOWN_TOL {
        return Err(Error::Contract(format!("input qubit must be |↓⟩ (P↑ = {:.3e})", to_f64(up))));
    }
    Ok(())
}

/// Addition sequence: adiabatic sweep, then carrier π. Approximates Ŝ⁺ with
/// the qubit returned to |↓⟩.
pub fn op_add<T: Real>(state: &JointState<T>, sweep: &SweepParams) -> Result<JointState<T>> {
    require_down(state)?;
    Ok(carrier_pi(&adiabatic_transfer(state, sweep)?, 0.0))
}

/// Subtraction sequence: carrier π, then adiabatic sweep. The result still
/// carries the vacuum component on |↑,0⟩; post-selection happens at
/// detection.
pub fn op_subtract<T: Real>(state: &JointState<T>, sweep: &SweepParams) -> Result<JointState<T>> {
    require_down(state)?;
    adiabatic_transfer(&carrier_pi(state, 0.0), sweep)
}

/// Perfect n-independent transfer `|↓,n⟩ → |↑,n+1⟩`, `|↑,n+1⟩ → −|↓,n⟩`,
/// with |↑,0⟩ and |↓,n_max⟩ untouched.
pub fn ideal_transfer_unitary<T: Real>(n_max: usize) -> BlockUnitary<T> {
    let l = n_max + 1;
    let one = Complex::from(T::one());
    let m = [[czero(), -one], [one, czero()]];
    BlockUnitary::new(
        2 * l,
        (0..n_max).map(|n| (n, l + n + 1, m)).collect(),
        vec![(l, one), (n_max, one)],
    )
}

/// Precomputed sweep and carrier propagators for repeated use on one
/// truncation.
#[derive(Clone, Debug)]
pub struct PulseEngine<T: Real> {
    trunc: FockTruncation,
    sweep: SweepParams,
    adiabatic: BlockUnitary<T>,
    carrier: BlockUnitary<T>,
    ideal: bool,
}

impl<T: Real> PulseEngine<T> {
    pub fn new(trunc: FockTruncation, sweep: SweepParams, step: f64) -> Result<Self> {
        trunc.validate()?;
        let adiabatic = pulse_unitary(&PulseSchedule::adiabatic(sweep), trunc.n_max, step)?;
        Ok(Self {
            trunc,
            sweep,
            adiabatic,
            carrier: carrier_unitary(trunc.n_max, 0.0),
            ideal: false,
        })
    }

    /// Engine whose sweep is replaced by the perfect transfer. `sweep` only
    /// sets the duration used for heating.
    pub fn ideal(trunc: FockTruncation, sweep: SweepParams) -> Result<Self> {
        trunc.validate()?;
        sweep.validate()?;
        Ok(Self {
            trunc,
            sweep,
            adiabatic: ideal_transfer_unitary(trunc.n_max),
            carrier: carrier_unitary(trunc.n_max, 0.0),
            ideal: true,
        })
    }

    pub fn is_ideal(&self) -> bool {
        self.ideal
    }

    pub fn truncation(&self) -> &FockTruncation {
        &self.trunc
    }

    pub fn sweep(&self) -> &SweepParams {
        &self.sweep
    }

    pub fn adiabatic(&self) -> &BlockUnitary<T> {
        &self.adiabatic
    }

    pub fn carrier(&self) -> &BlockUnitary<T> {
        &self.carrier
    }

    fn check_state(&self, state: &JointState<T>) -> Result<()> {
        if state.truncation() != &self.trunc {
            return Err(Error::Contract("state truncation differs from the engine's".into()));
        }
        Ok(())
    }

    fn check_density(&self, rho: &DensityOperator<T>) -> Result<()> {
        if rho.truncation() != &self.trunc || rho.layout() != Layout::Joint {
            return Err(Error::Contract("expected a joint-space operator on the engine's truncation".into()));
        }
        Ok(())
    }

    pub fn transfer(&self, state: &JointState<T>) -> Result<JointState<T>> {
        self.check_state(state)?;
        edge_guard(state, state.population(Qubit::Down, self.trunc.n_max))?;
        Ok(JointState::from_raw(self.trunc, self.adiabatic.apply(state.amplitudes())))
    }

    pub fn add(&self, state: &JointState<T>) -> Result<JointState<T>> {
        require_down(state)?;
        let s = self.transfer(state)?;
        Ok(JointState::from_raw(self.trunc, self.carrier.apply(s.amplitudes())))
    }

    pub fn subtract(&self, state: &JointState<T>) -> Result<JointState<T>> {
        self.check_state(state)?;
        require_down(state)?;
        let s = JointState::from_raw(self.trunc, self.carrier.apply(state.amplitudes()));
        self.transfer(&s)
    }

    pub fn transfer_density(&self, rho: &DensityOperator<T>) -> Result<DensityOperator<T>> {
        self.check_density(rho)?;
        let edge = rho.matrix()[(self.trunc.n_max, self.trunc.n_max)].re;
        if to_f64(edge) > self.trunc.leakage_tol {
            return Err(Error::Truncation {
                leakage: to_f64(edge),
                tol: self.trunc.leakage_tol,
                required_n_max: Some(self.trunc.n_max + 1),
            });
        }
        DensityOperator::from_matrix_unchecked(self.trunc, Layout::Joint, self.adiabatic.conjugate(rho.matrix()))
    }

    pub fn carrier_density(&self, rho: &DensityOperator<T>) -> Result<DensityOperator<T>> {
        self.check_density(rho)?;
        DensityOperator::from_matrix_unchecked(self.trunc, Layout::Joint, self.carrier.conjugate(rho.matrix()))
    }
}
