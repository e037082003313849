//! Displaced phonon-distribution measurements and iterative maximum-likelihood
//! reconstruction of the motional density matrix.
//!
//! A dataset holds, for each displacement `α_k`, the phonon distribution of
//! `D(α_k) ρ D(α_k)†`. Reconstruction alternates an expectation-maximization
//! update of the eigenvalues with a small unitary rotation of the eigenbasis.

mod bootstrap;
pub mod io;
mod mle;

pub use bootstrap::{bootstrap_errors, resample_dataset, BootstrapSummary};
pub use mle::{em_update, mle_reconstruct, rotate_basis, LikelihoodModel, Reconstruction, RotationStep, PROB_FLOOR};

use std::f64::consts::PI;

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::TrapParams;
use crate::error::{Error, Result};
use crate::hilbert::{displace_density, DensityOperator};
use crate::measurement::{
    default_scan_grid, infer_populations, infer_populations_from_curve, sideband_expectation, simulate_sideband_scan,
    FitOptions,
};
use crate::noise::NoiseParams;
use crate::scalar::{real, to_f64, Real};

/// Frequencies of one setting must sum to one within this.
pub const FREQ_SUM_TOL: f64 = 1e-9;
/// Frequencies above this count as occupied when choosing the default
/// reconstruction dimension.
const OCCUPIED: f64 = 1e-3;
/// Extra levels above the highest occupied one in the default dimension.
const DEFAULT_MARGIN: usize = 4;
/// Largest fraction of a basis state's displaced weight allowed outside the
/// recorded rows.
const COVERAGE_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructionSettings {
    /// `|α|` of every displacement.
    pub displacement_amp: f64,
    /// Displacements sit at angles `2πk/n_angles`.
    pub n_angles: usize,
    pub max_iters: usize,
    /// Initial basis-rotation step.
    pub epsilon: f64,
    /// Stop once an iteration gains less log-likelihood than this.
    pub loglik_tol: f64,
    /// Highest Fock level of the reconstruction; `None` picks it from the data.
    pub n_max_rec: Option<usize>,
}

impl Default for ReconstructionSettings {
    fn default() -> Self {
        Self {
            displacement_amp: 0.8,
            n_angles: 8,
            max_iters: 2000,
            epsilon: 0.01,
            loglik_tol: 1e-10,
            n_max_rec: None,
        }
    }
}

impl ReconstructionSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.displacement_amp >= 0.0) || !self.displacement_amp.is_finite() {
            return Err(Error::invalid("displacement_amp", "must be finite and non-negative"));
        }
        if self.n_angles == 0 {
            return Err(Error::invalid("n_angles", "must be at least 1"));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        if !(self.loglik_tol >= 0.0) {
            return Err(Error::invalid("loglik_tol", "must be non-negative"));
        }
        if self.n_max_rec == Some(0) {
            return Err(Error::invalid("n_max_rec", "must be at least 1"));
        }
        Ok(())
    }

    /// `α e^{2πik/n_angles}` for `k = 0..n_angles`.
    pub fn displacements(&self) -> Vec<Complex<f64>> {
        (0..self.n_angles)
            .map(|k| Complex::from_polar(self.displacement_amp, 2.0 * PI * k as f64 / self.n_angles as f64))
            .collect()
    }
}

/// One displacement setting and its measured phonon distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingData {
    /// `[Re α, Im α]`.
    pub alpha: [f64; 2],
    /// Shots behind `freqs`; zero marks noiseless data.
    pub shots: u64,
    pub freqs: Vec<f64>,
}

impl SettingData {
    pub fn new(alpha: Complex<f64>, shots: u64, freqs: Vec<f64>) -> Result<Self> {
        let s = Self {
            alpha: [alpha.re, alpha.im],
            shots,
            freqs,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn alpha(&self) -> Complex<f64> {
        Complex::new(self.alpha[0], self.alpha[1])
    }

    pub fn validate(&self) -> Result<()> {
        if self.freqs.is_empty() {
            return Err(Error::invalid("freqs", "empty frequency vector"));
        }
        if !self.alpha.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("alpha", "must be finite"));
        }
        if let Some(bad) = self.freqs.iter().find(|f| !(**f >= 0.0) || !f.is_finite()) {
            return Err(Error::invalid("freqs", format!("entry {bad} is not a non-negative number")));
        }
        let sum: f64 = self.freqs.iter().sum();
        if (sum - 1.0).abs() > FREQ_SUM_TOL {
            return Err(Error::invalid("freqs", format!("sum {sum} differs from 1")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyDataset {
    pub settings: Vec<SettingData>,
}

impl TomographyDataset {
    pub fn new(settings: Vec<SettingData>) -> Result<Self> {
        let d = Self { settings };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.settings.is_empty() {
            return Err(Error::invalid("settings", "dataset has no displacement settings"));
        }
        self.settings.iter().try_for_each(SettingData::validate)
    }

    pub fn is_exact(&self) -> bool {
        self.settings.iter().any(|s| s.shots == 0)
    }

    /// Likelihood weight of each setting: proportional to its shots, uniform
    /// when any setting is noiseless.
    pub fn weights(&self) -> Vec<f64> {
        let k = self.settings.len() as f64;
        if self.is_exact() {
            return vec![1.0 / k; self.settings.len()];
        }
        let total: f64 = self.settings.iter().map(|s| s.shots as f64).sum();
        self.settings.iter().map(|s| s.shots as f64 / total).collect()
    }

    /// Highest Fock index with frequency above 1e-3 in any setting.
    pub fn highest_occupied(&self) -> usize {
        self.settings
            .iter()
            .filter_map(|s| s.freqs.iter().rposition(|&f| f > OCCUPIED))
            .max()
            .unwrap_or(0)
    }

    /// Largest `j` such that every displaced `|j⟩` keeps at least `1 − 1e-3`
    /// of its weight inside the recorded rows of every setting.
    pub fn coverage_limit(&self) -> usize {
        let mut limit = usize::MAX;
        for s in &self.settings {
            let rows = s.freqs.len();
            let d = crate::hilbert::displacement_elements(s.alpha(), rows, rows);
            let mut j = 0;
            while j + 1 < rows {
                let inside: f64 = d.column(j + 1).iter().map(|c| c.norm_sqr()).sum();
                if 1.0 - inside > COVERAGE_TOL {
                    break;
                }
                j += 1;
            }
            limit = limit.min(j);
        }
        limit
    }

    /// Reconstruction cut-off: the explicit setting, else highest occupied
    /// level plus four, kept within the coverage limit.
    pub fn reconstruction_n_max(&self, settings: &ReconstructionSettings) -> usize {
        match settings.n_max_rec {
            Some(n) => n,
            None => (self.highest_occupied() + DEFAULT_MARGIN).min(self.coverage_limit()).max(1),
        }
    }
}

/// How the distribution of each displaced state is obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DatasetMode {
    /// `⟨n|DρD†|n⟩` without sampling.
    Exact,
    /// Multinomial counts drawn from the exact distribution.
    Sampled { shots: u64 },
    /// Simulated sideband scan followed by population inference.
    SidebandScan { shots_per_point: u64, points: usize, n_max_fit: usize },
}

/// Multinomial counts by sequential conditional binomials.
pub(crate) fn sample_counts<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Result<Vec<u64>> {
    let mut left = shots;
    let mut mass = 1.0;
    let mut counts = Vec::with_capacity(probs.len());
    for (i, &p) in probs.iter().enumerate() {
        let c = if left == 0 || i + 1 == probs.len() {
            left
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(left, q).map_err(|e| Error::Inference(e.to_string()))?.sample(rng)
        };
        counts.push(c);
        left -= c;
        mass = (mass - p).max(0.0);
    }
    Ok(counts)
}

fn counts_to_freqs(counts: &[u64], shots: u64) -> Vec<f64> {
    counts.iter().map(|&c| c as f64 / shots as f64).collect()
}

/// Clamped, renormalized diagonal of a displaced density operator.
fn exact_distribution<T: Real>(rho: &DensityOperator<T>) -> Vec<f64> {
    let probs: Vec<f64> = rho.phonon_distribution().probs().iter().map(|p| to_f64(*p).max(0.0)).collect();
    let sum: f64 = probs.iter().sum();
    probs.into_iter().map(|p| p / sum).collect()
}

/// Measures `ρ` (phonon or joint; the qubit is traced out) after each
/// displacement `α e^{2πik/n_angles}`. Settings run in parallel, each on its
/// own ChaCha stream seeded from one draw of `rng`.
pub fn generate_dataset<T: Real, R: Rng + ?Sized>(
    rho_true: &DensityOperator<T>,
    settings: &ReconstructionSettings,
    mode: DatasetMode,
    trap: &TrapParams,
    noise: &NoiseParams,
    rng: &mut R,
) -> Result<TomographyDataset> {
    settings.validate()?;
    let phonon = rho_true.phonon_reduced();
    phonon.check_invariants(T::validation_tol() * real::<T>(10.0))?;
    if let DatasetMode::SidebandScan { n_max_fit, points, .. } = mode {
        if n_max_fit > phonon.truncation().n_max {
            return Err(Error::invalid("n_max_fit", "exceeds the state's truncation"));
        }
        if points <= n_max_fit {
            return Err(Error::invalid("points", "need more scan points than fitted levels"));
        }
    }
    let seed: u64 = rng.random();
    let alphas = settings.displacements();
    let data = alphas
        .par_iter()
        .enumerate()
        .map(|(k, &alpha)| {
            let mut sub = ChaCha8Rng::seed_from_u64(seed);
            sub.set_stream(k as u64);
            let a = Complex::new(real::<T>(alpha.re), real::<T>(alpha.im));
            let displaced = displace_density(&phonon, a)?;
            match mode {
                DatasetMode::Exact => SettingData::new(alpha, 0, exact_distribution(&displaced)),
                DatasetMode::Sampled { shots } => {
                    if shots == 0 {
                        return Err(Error::invalid("shots", "sampled mode needs at least one shot"));
                    }
                    let counts = sample_counts(&exact_distribution(&displaced), shots, &mut sub)?;
                    SettingData::new(alpha, shots, counts_to_freqs(&counts, shots))
                }
                DatasetMode::SidebandScan {
                    shots_per_point,
                    points,
                    n_max_fit,
                } => {
                    let grid = default_scan_grid(trap, points);
                    let opts = FitOptions {
                        eps_bright: noise.eps_bright,
                        eps_dark: noise.eps_dark,
                        ..FitOptions::new(n_max_fit)
                    };
                    // zero shots: fit the expected curve itself
                    let fit = if shots_per_point == 0 {
                        let curve = sideband_expectation(&displaced, &grid, trap, noise)?;
                        infer_populations_from_curve(&grid, &curve, trap, &opts)?
                    } else {
                        let scan = simulate_sideband_scan(&displaced, &grid, shots_per_point, trap, noise, &mut sub)?;
                        infer_populations(&scan, trap, &opts)?
                    };
                    let probs = fit.distribution.probs().to_vec();
                    let sum: f64 = probs.iter().sum();
                    let freqs = probs.into_iter().map(|p| p.max(0.0) / sum).collect();
                    SettingData::new(alpha, shots_per_point * points as u64, freqs)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    TomographyDataset::new(data)
}
