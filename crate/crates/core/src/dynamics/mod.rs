//! Blue-sideband (anti-Jaynes-Cummings) and carrier dynamics of the joint
//! qubit ⊗ phonon system, the counter-diabatic adiabatic sweep, and the
//! composite addition/subtraction sequences.

mod block;
mod hamiltonian;
mod propagate;
mod sequences;
mod stark;

pub use block::BlockUnitary;
pub use hamiltonian::{hamiltonian_ajc, sweep_drive, DriveSample};
pub(crate) use propagate::converged_segment;
pub use propagate::{propagate, propagate_with, pulse_unitary, CONVERGENCE_TOL};
pub use sequences::{
    adiabatic_transfer, carrier_pi, carrier_unitary, ideal_transfer_unitary, op_add, op_subtract, PulseEngine, QUBIT_DOWN_TOL,
};
pub use stark::{drive_quadratures, drive_waveform, stark_phase};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trap and mode parameters, SI units (rad/s, s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapParams {
    pub omega_x: f64,
    pub omega_y: f64,
    pub omega_z: f64,
    pub omega_hf: f64,
    /// Lamb-Dicke parameter.
    pub eta: f64,
    /// π time of the fundamental blue-sideband transition |↓,0⟩ → |↑,1⟩.
    pub t_pi: f64,
}

impl Default for TrapParams {
    fn default() -> Self {
        Self {
            omega_x: 2.0 * PI * 2.8e6,
            omega_y: 2.0 * PI * 3.2e6,
            omega_z: 2.0 * PI * 0.6e6,
            omega_hf: 2.0 * PI * 12.6428e9,
            eta: 0.1,
            t_pi: 13e-6,
        }
    }
}

impl TrapParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_x", self.omega_x),
            ("omega_y", self.omega_y),
            ("omega_z", self.omega_z),
            ("omega_hf", self.omega_hf),
            ("eta", self.eta),
            ("t_pi", self.t_pi),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Sideband Rabi frequency ηΩ of the |↓,0⟩ ↔ |↑,1⟩ transition.
    pub fn sideband_rabi(&self) -> f64 {
        PI / self.t_pi
    }

    /// Carrier Rabi frequency Ω implied by the sideband π time and η.
    pub fn carrier_rabi(&self) -> f64 {
        self.sideband_rabi() / self.eta
    }
}

/// Counter-diabatic adiabatic sweep `Ω(t) = Ω₀[sin(πt/T) + iβ]`,
/// `Δ(t) = Δ₀cos(πt/T)`, plus the AC-Stark calibration constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    /// Peak sideband coupling (rad/s).
    pub omega0: f64,
    /// Counter-diabatic quadrature amplitude relative to `omega0`.
    pub beta: f64,
    /// Detuning sweep amplitude (rad/s).
    pub delta0: f64,
    /// Total sweep time T (s).
    pub duration: f64,
    /// Effective AC-Stark divisor Δ_total (rad/s).
    pub delta_total: f64,
    /// Measured (Stark-shifted) sideband frequency ω_bsb^meas (rad/s).
    pub omega_bsb_meas: f64,
    /// Error of the calibrated sideband resonance as seen by the ion (rad/s).
    pub sideband_offset: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        let omega0 = 2.0 * PI * 38.5e3;
        let trap = TrapParams::default();
        // total shift |Ω|²/2Δ_total equal to the dominant 2π·33 kHz carrier
        // Stark shift at Ω₀
        let stark = 2.0 * PI * 33e3;
        Self {
            omega0,
            beta: 0.075,
            delta0: 1.6 * omega0,
            duration: 91e-6,
            delta_total: omega0 * omega0 / (2.0 * stark),
            omega_bsb_meas: trap.omega_hf + trap.omega_x,
            sideband_offset: 0.0,
        }
    }
}

impl SweepParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::invalid("omega0", "must be positive"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta", "must be non-negative"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid("duration", "must be positive"));
        }
        if !self.delta0.is_finite() || !self.omega_bsb_meas.is_finite() || !self.sideband_offset.is_finite() {
            return Err(Error::invalid("sweep", "non-finite frequency"));
        }
        if self.delta_total == 0.0 || self.delta_total.is_nan() {
            return Err(Error::invalid("delta_total", "must be nonzero (use inf to drop the Stark term)"));
        }
        Ok(())
    }

    /// Default integration step, T/2000.
    pub fn default_step(&self) -> f64 {
        self.duration / 2000.0
    }
}

/// What a pulse does.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PulseKind {
    /// Resonant carrier π pulse, applied as an exact unitary.
    CarrierPi,
    /// Constant, resonant blue-sideband drive with sideband Rabi frequency
    /// `rabi` for `duration` seconds.
    DynamicBsb { duration: f64, rabi: f64 },
    /// Counter-diabatic adiabatic blue-sideband sweep.
    AdiabaticBsb(SweepParams),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSchedule {
    pub kind: PulseKind,
    /// Drive phase (rad).
    pub phase: f64,
}

impl PulseSchedule {
    pub fn carrier_pi(phase: f64) -> Self {
        Self {
            kind: PulseKind::CarrierPi,
            phase,
        }
    }

    /// Dynamic sideband pulse at the trap's fundamental sideband Rabi rate.
    pub fn dynamic_bsb(duration: f64, trap: &TrapParams) -> Self {
        Self {
            kind: PulseKind::DynamicBsb {
                duration,
                rabi: trap.sideband_rabi(),
            },
            phase: 0.0,
        }
    }

    pub fn adiabatic(sweep: SweepParams) -> Self {
        Self {
            kind: PulseKind::AdiabaticBsb(sweep),
            phase: 0.0,
        }
    }

    pub fn duration(&self) -> f64 {
        match self.kind {
            PulseKind::CarrierPi => 0.0,
            PulseKind::DynamicBsb { duration, .. } => duration,
            PulseKind::AdiabaticBsb(s) => s.duration,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PulseKind::CarrierPi => Ok(()),
            PulseKind::DynamicBsb { duration, rabi } => {
                if !(duration >= 0.0 && duration.is_finite()) {
                    return Err(Error::invalid("duration", format!("{duration} is not a valid pulse length")));
                }
                if !rabi.is_finite() {
                    return Err(Error::invalid("rabi", "non-finite"));
                }
                Ok(())
            }
            PulseKind::AdiabaticBsb(s) => s.validate(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reported_parameters() {
        let s = SweepParams::default();
        assert!((s.omega0 / (2.0 * PI) - 38.5e3).abs() < 1e-9);
        assert!((s.delta0 / s.omega0 - 1.6).abs() < 1e-12);
        assert!((s.duration - 7.0 * TrapParams::default().t_pi).abs() < 1e-12);
        // T_π = 13 μs corresponds to the same 2π·38.5 kHz sideband rate
        let rabi = TrapParams::default().sideband_rabi() / (2.0 * PI);
        assert!((rabi - 38.5e3).abs() / 38.5e3 < 1e-3);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut t = TrapParams::default();
        t.eta = 0.0;
        assert!(t.validate().is_err());
        let mut s = SweepParams::default();
        s.duration = -1.0;
        assert!(s.validate().is_err());
        let mut s = SweepParams::default();
        s.beta = -0.1;
        assert!(s.validate().is_err());
        let p = PulseSchedule {
            kind: PulseKind::DynamicBsb { duration: -1e-6, rabi: 1.0 },
            phase: 0.0,
        };
        assert!(p.validate().is_err());
    }
}
