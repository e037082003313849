//! Fluorescence readout with post-selection, blue-sideband time scans and
//! phonon-population inference from them.

mod inference;
pub mod io;
mod scan;

pub use inference::{fit_rabi_frequency, infer_populations, infer_populations_from_curve, FitOptions, PopulationFit};
pub use scan::{default_scan_grid, sideband_expectation, simulate_sideband_scan, ShotRecord, SidebandScan};

use nalgebra::Complex;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::hilbert::{DensityOperator, JointState, Layout, Qubit};
use crate::linalg::CMatrix;
use crate::noise::{default_heat_step, heat, NoiseParams, NoisyEngine};
use crate::scalar::{real, to_f64, Real};

/// Dark probabilities at or below this count as a failed post-selection.
const MIN_DARK_PROBABILITY: f64 = 1e-12;

/// Outcome of a fluorescence detection on an ensemble of identical shots.
#[derive(Clone, Debug)]
pub struct Detection<T: Real> {
    pub n_shots: u64,
    pub n_bright: u64,
    /// Probability of a dark reading, detection errors included.
    pub dark_probability: f64,
    /// State conditioned on a dark reading, with the qubit re-initialized
    /// to |↓⟩.
    pub dark_state: DensityOperator<T>,
}

impl<T: Real> Detection<T> {
    pub fn n_dark(&self) -> u64 {
        self.n_shots - self.n_bright
    }

    /// Empirical dark fraction, or the exact probability when no shots were
    /// taken.
    pub fn dark_fraction(&self) -> f64 {
        if self.n_shots == 0 {
            self.dark_probability
        } else {
            self.n_dark() as f64 / self.n_shots as f64
        }
    }

    /// Phonon state of the dark branch.
    pub fn phonon(&self) -> DensityOperator<T> {
        self.dark_state.phonon_reduced()
    }
}

/// Detects a joint density operator. The surviving branch heats for the
/// detection window first; a dark reading keeps `(1−ε_d)ρ↓↓ + ε_b ρ↑↑`.
pub fn detect_density<T: Real, R: Rng + ?Sized>(
    rho: &DensityOperator<T>,
    n_shots: u64,
    noise: &NoiseParams,
    rng: &mut R,
) -> Result<Detection<T>> {
    noise.validate()?;
    if rho.layout() != Layout::Joint {
        return Err(Error::Contract("detection needs a joint-space operator".into()));
    }
    let trunc = *rho.truncation();
    let rho = if noise.detection_window > 0.0 && noise.has_heating() {
        heat(rho, noise.detection_window, noise, default_heat_step(noise, trunc.n_max))?
    } else {
        rho.clone()
    };
    let down = rho.qubit_block(Qubit::Down)?;
    let up = rho.qubit_block(Qubit::Up)?;
    let keep_down = real::<T>(1.0 - noise.eps_dark);
    let keep_up = real::<T>(noise.eps_bright);
    let branch: CMatrix<T> = down * Complex::from(keep_down) + up * Complex::from(keep_up);
    let p_dark = to_f64(crate::linalg::trace(&branch).re).clamp(0.0, 1.0);
    if p_dark <= MIN_DARK_PROBABILITY {
        return Err(Error::PostSelection(format!("dark-branch probability {p_dark:e}")));
    }
    let n_bright = if n_shots > 0 {
        Binomial::new(n_shots, 1.0 - p_dark)
            .map_err(|e| Error::Inference(e.to_string()))?
            .sample(rng)
    } else {
        0
    };
    let phonon = DensityOperator::from_matrix_unchecked(trunc, Layout::Phonon, branch * Complex::from(real::<T>(1.0 / p_dark)))?
        .renormalized()?;
    Ok(Detection {
        n_shots,
        n_bright,
        dark_probability: p_dark,
        dark_state: phonon.with_qubit(Qubit::Down)?,
    })
}

/// [`detect_density`] on a pure joint state.
pub fn detect<T: Real, R: Rng + ?Sized>(
    state: &JointState<T>,
    n_shots: u64,
    noise: &NoiseParams,
    rng: &mut R,
) -> Result<Detection<T>> {
    detect_density(&state.to_density(), n_shots, noise, rng)
}

/// Subtraction sequence followed by post-selection on a dark reading.
/// `dark_probability` is the success probability of the subtraction.
pub fn subtract_and_select<T: Real, R: Rng + ?Sized>(
    engine: &NoisyEngine<T>,
    rho: &DensityOperator<T>,
    n_shots: u64,
    rng: &mut R,
) -> Result<Detection<T>> {
    let after = engine.subtract(rho)?;
    detect_density(&after, n_shots, engine.noise(), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{PulseEngine, SweepParams};
    use crate::hilbert::{fidelity_to_pure, make_coherent, FockTruncation};
    use crate::linalg::CVector;
    use crate::scalar::complex;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn trunc(n: usize) -> FockTruncation {
        FockTruncation::with_n_max(n).unwrap()
    }

    fn joint(down: &[f64], up: &[f64], t: FockTruncation) -> JointState<f64> {
        let l = t.levels();
        let mut a = CVector::zeros(2 * l);
        for (n, c) in down.iter().enumerate() {
            a[n] = complex(*c, 0.0);
        }
        for (n, c) in up.iter().enumerate() {
            a[l + n] = complex(*c, 0.0);
        }
        JointState::normalized(t, a).unwrap()
    }

    fn phonon_vec(c: &[f64], l: usize) -> CVector<f64> {
        let mut v = CVector::zeros(l);
        for (n, x) in c.iter().enumerate() {
            v[n] = complex(*x, 0.0);
        }
        v.normalize()
    }

    #[test]
    fn dark_qubit_is_always_dark() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = trunc(5);
        let s = joint(&[0.6, 0.8], &[], t);
        let d = detect(&s, 1000, &NoiseParams::ideal(), &mut rng).unwrap();
        assert_eq!(d.n_bright, 0);
        assert_eq!(d.dark_fraction(), 1.0);
        let f = fidelity_to_pure(&d.phonon(), &phonon_vec(&[0.6, 0.8], 6)).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn born_rule_on_post_subtraction_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = trunc(5);
        let s = joint(&[1.0, 1.0], &[2f64.sqrt()], t);
        let d = detect(&s, 0, &NoiseParams::ideal(), &mut rng).unwrap();
        assert!((d.dark_probability - 0.5).abs() < 1e-12);
        let f = fidelity_to_pure(&d.phonon(), &phonon_vec(&[1.0, 1.0], 6)).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bright_fraction_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = trunc(3);
        let s = joint(&[1.0], &[1.0], t);
        let d = detect(&s, 10_000, &NoiseParams::ideal(), &mut rng).unwrap();
        assert!((d.n_bright as f64 / 1e4 - 0.5).abs() < 0.015);
    }

    #[test]
    fn dark_fraction_within_three_sigma_for_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = trunc(4);
        for k in 0..50 {
            let a: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let s = joint(&a, &b, t);
            let shots = 200 + 100 * k as u64;
            let d = detect(&s, shots, &NoiseParams::ideal(), &mut rng).unwrap();
            let p = s.qubit_population(Qubit::Down);
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            assert!((d.dark_fraction() - p).abs() <= 3.0 * sigma + 1e-12, "k={k}");
        }
    }

    #[test]
    fn bright_only_state_fails_post_selection() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = joint(&[], &[1.0], trunc(3));
        assert!(matches!(detect(&s, 10, &NoiseParams::ideal(), &mut rng), Err(Error::PostSelection(_))));
    }

    #[test]
    fn detection_errors_leak_bright_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = joint(&[0.0, 1.0], &[1.0], trunc(3));
        let noise = NoiseParams {
            eps_bright: 0.02,
            ..NoiseParams::ideal()
        };
        let d = detect(&s, 0, &noise, &mut rng).unwrap();
        assert!((d.dark_probability - 0.51).abs() < 1e-12);
        assert!((d.phonon().phonon_distribution().get(0) - 0.01 / 0.51).abs() < 1e-12);
    }

    fn engine(n_max: usize) -> NoisyEngine<f64> {
        let sweep = SweepParams::default();
        NoisyEngine::new(trunc(n_max), sweep, NoiseParams::ideal(), sweep.default_step()).unwrap()
    }

    fn ideal_engine(n_max: usize) -> NoisyEngine<f64> {
        let sweep = SweepParams::default();
        let e = PulseEngine::ideal(trunc(n_max), sweep).unwrap();
        NoisyEngine::with_engine(e, NoiseParams::ideal(), sweep.default_step()).unwrap()
    }

    #[test]
    fn subtraction_from_vacuum_rarely_succeeds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let e = engine(6);
        let rho = joint(&[1.0], &[], trunc(6)).to_density();
        match subtract_and_select(&e, &rho, 100, &mut rng) {
            Ok(d) => assert!(d.dark_probability < 1e-3),
            Err(err) => assert!(matches!(err, Error::PostSelection(_))),
        }
    }

    #[test]
    fn subtraction_of_two_three_superposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let e = engine(8);
        let rho = joint(&[0.0, 0.0, 1.0, 1.0], &[], trunc(8)).to_density();
        let d = subtract_and_select(&e, &rho, 1000, &mut rng).unwrap();
        assert!(d.dark_probability > 0.99);
        let f = fidelity_to_pure(&d.phonon(), &phonon_vec(&[0.0, 1.0, 1.0], 9)).unwrap();
        assert!(f > 0.98, "{f}");
    }

    #[test]
    fn subtraction_success_on_coherent_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = FockTruncation::new(16, 1e-6).unwrap();
        let rho = make_coherent::<f64>(complex(1.2, 0.0), t).unwrap().to_density();
        let expected = 1.0 - (-1.44f64).exp();
        assert!((expected - 0.763).abs() < 1e-3);
        let d = subtract_and_select(&ideal_engine(16), &rho, 5000, &mut rng).unwrap();
        assert!((d.dark_probability - expected).abs() < 1e-12);
        // the simulated sweep loses about 3% of the n = 1 weight
        let sim = subtract_and_select(&engine(16), &rho, 0, &mut rng).unwrap();
        assert!((sim.dark_probability - expected).abs() < 0.02, "{}", sim.dark_probability);
        let sigma = (expected * (1.0 - expected) / 5000.0).sqrt();
        assert!((d.dark_fraction() - d.dark_probability).abs() < 4.0 * sigma);
    }

    #[test]
    fn success_matches_one_minus_vacuum_over_trials() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let e = ideal_engine(8);
        let rho = joint(&[0.5, 0.7, 0.5], &[], trunc(8)).to_density();
        let p: f64 = 1.0 - 0.25 / (0.25 + 0.49 + 0.25);
        let sigma = (p * (1.0 - p) / 400.0).sqrt();
        let mut outside = 0;
        for _ in 0..200 {
            let d = subtract_and_select(&e, &rho, 400, &mut rng).unwrap();
            assert!((d.dark_probability - p).abs() < 1e-12);
            if (d.dark_fraction() - p).abs() > 3.0 * sigma {
                outside += 1;
            }
        }
        // 3σ excursions occur with probability ~0.3%
        assert!(outside <= 3, "{outside}");
    }
}
