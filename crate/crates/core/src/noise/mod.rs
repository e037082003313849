//! Open-system effects: motional heating as a Lindblad channel, fluorescence
//! detection errors and shot-to-shot detuning jitter.

mod engine;
mod heating;

pub use engine::NoisyEngine;
pub use heating::{default_heat_step, heat, heating_rhs, mean_occupation_analytic};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::SweepParams;
use crate::error::{Error, Result};

/// Heating, detection and jitter parameters. Rates in 1/s, frequencies in
/// rad/s, times in s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Reservoir coupling γ.
    pub gamma: f64,
    /// Reservoir mean occupation n̄.
    pub nbar: f64,
    /// Probability that a bright (↑) ion reads dark.
    pub eps_bright: f64,
    /// Probability that a dark (↓) ion reads bright.
    pub eps_dark: f64,
    /// Standard deviation of the per-run sideband detuning offset.
    pub jitter_sigma: f64,
    /// Fluorescence detection time during which the surviving branch heats.
    pub detection_window: f64,
    /// Co-integrate heating during the adiabatic sweeps.
    pub heat_during_pulses: bool,
}

impl Default for NoiseParams {
    /// Heating rate γn̄ = 150 /s with n̄ = 10, 1% detection flips, 300 μs window.
    fn default() -> Self {
        Self {
            gamma: 15.0,
            nbar: 10.0,
            eps_bright: 0.01,
            eps_dark: 0.01,
            jitter_sigma: 0.0,
            detection_window: 300e-6,
            heat_during_pulses: true,
        }
    }
}

impl NoiseParams {
    /// No heating, perfect detection, no jitter.
    pub fn ideal() -> Self {
        Self {
            gamma: 0.0,
            nbar: 0.0,
            eps_bright: 0.0,
            eps_dark: 0.0,
            jitter_sigma: 0.0,
            detection_window: 0.0,
            heat_during_pulses: false,
        }
    }

    /// Parameters with heating rate `rate = γn̄` at reservoir occupation
    /// `nbar`, other fields default.
    pub fn with_heating_rate(rate: f64, nbar: f64) -> Result<Self> {
        if !(nbar > 0.0) {
            return Err(Error::invalid("nbar", "must be positive to define γ from a heating rate"));
        }
        let p = Self {
            gamma: rate / nbar,
            nbar,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    /// Phonons gained per second from the ground state, γn̄.
    pub fn heating_rate(&self) -> f64 {
        self.gamma * self.nbar
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma", format!("{} must be non-negative", self.gamma)));
        }
        if !(self.nbar >= 0.0 && self.nbar.is_finite()) {
            return Err(Error::invalid("nbar", format!("{} must be non-negative", self.nbar)));
        }
        for (name, p) in [("eps_bright", self.eps_bright), ("eps_dark", self.eps_dark)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(name, format!("{p} is not a probability")));
            }
        }
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return Err(Error::invalid("jitter_sigma", "must be non-negative"));
        }
        if !(self.detection_window >= 0.0 && self.detection_window.is_finite()) {
            return Err(Error::invalid("detection_window", "must be non-negative"));
        }
        Ok(())
    }

    pub fn has_heating(&self) -> bool {
        self.gamma > 0.0
    }
}

/// Fluorescence outcome; bright is the ↑ hyperfine state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Bright,
    Dark,
}

/// Applies the detection error channel to a true outcome.
pub fn detection_flip<R: Rng + ?Sized>(outcome: Outcome, params: &NoiseParams, rng: &mut R) -> Outcome {
    match outcome {
        Outcome::Bright if params.eps_bright > 0.0 && rng.random::<f64>() < params.eps_bright => Outcome::Dark,
        Outcome::Dark if params.eps_dark > 0.0 && rng.random::<f64>() < params.eps_dark => Outcome::Bright,
        o => o,
    }
}

/// Copy of `sweep` with a Gaussian offset of width `jitter_sigma` added to the
/// sideband resonance error.
pub fn jitter_detuning<R: Rng + ?Sized>(sweep: &SweepParams, params: &NoiseParams, rng: &mut R) -> SweepParams {
    if params.jitter_sigma == 0.0 {
        return *sweep;
    }
    // sigma is validated non-negative and finite, so construction cannot fail
    let normal = Normal::new(0.0, params.jitter_sigma).expect("valid jitter sigma");
    SweepParams {
        sideband_offset: sweep.sideband_offset + normal.sample(rng),
        ..*sweep
    }
}
