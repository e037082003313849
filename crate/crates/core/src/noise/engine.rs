use super::heating::{default_heat_step, heat};
use super::NoiseParams;
use crate::dynamics::{sweep_drive, BlockUnitary, PulseEngine, SweepParams, QUBIT_DOWN_TOL};
use crate::dynamics::converged_segment;
use crate::error::{Error, Result};
use crate::hilbert::{DensityOperator, FockTruncation, Layout, Qubit};
use crate::scalar::{to_f64, Real};

/// Sweep segments per half sweep when heating is co-integrated.
const SEGMENTS_PER_HALF: usize = 10;

/// Addition and subtraction sequences on density operators with heating
/// interleaved between sweep segments (Strang splitting: half a segment of
/// heating on either side of each segment propagator).
#[derive(Clone, Debug)]
pub struct NoisyEngine<T: Real> {
    ideal: PulseEngine<T>,
    noise: NoiseParams,
    segments: Vec<BlockUnitary<T>>,
    segment_len: f64,
    heat_step: f64,
}

impl<T: Real> NoisyEngine<T> {
    pub fn new(trunc: FockTruncation, sweep: SweepParams, noise: NoiseParams, step: f64) -> Result<Self> {
        Self::with_engine(PulseEngine::new(trunc, sweep, step)?, noise, step)
    }

    /// Wraps an existing pulse engine. For an ideal engine, heating during a
    /// sweep is applied as half the sweep time before and after the transfer.
    pub fn with_engine(ideal: PulseEngine<T>, noise: NoiseParams, step: f64) -> Result<Self> {
        noise.validate()?;
        let trunc = *ideal.truncation();
        let sweep = *ideal.sweep();
        let cointegrate = noise.heat_during_pulses && noise.has_heating() && !ideal.is_ideal();
        let segment_len = sweep.duration / (2 * SEGMENTS_PER_HALF) as f64;
        let segments = if cointegrate {
            let drive = |t: f64| sweep_drive(t, &sweep);
            (0..2 * SEGMENTS_PER_HALF)
                .map(|k| converged_segment::<T>(&drive, k as f64 * segment_len, segment_len, step, trunc.n_max))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(Self {
            ideal,
            noise,
            segments,
            segment_len,
            heat_step: default_heat_step(&noise, trunc.n_max),
        })
    }

    pub fn noise(&self) -> &NoiseParams {
        &self.noise
    }

    pub fn ideal(&self) -> &PulseEngine<T> {
        &self.ideal
    }

    pub fn truncation(&self) -> &FockTruncation {
        self.ideal.truncation()
    }

    /// Heating for `duration` seconds.
    pub fn wait(&self, rho: &DensityOperator<T>, duration: f64) -> Result<DensityOperator<T>> {
        heat(rho, duration, &self.noise, self.heat_step)
    }

    fn require_down(rho: &DensityOperator<T>) -> Result<()> {
        let up = to_f64(rho.qubit_population(Qubit::Up)?);
        if up > QUBIT_DOWN_TOL {
            return Err(Error::Contract(format!("input qubit must be |↓⟩ (P↑ = {up:.3e})")));
        }
        Ok(())
    }

    /// Adiabatic sweep with heating co-integrated when configured.
    pub fn transfer(&self, rho: &DensityOperator<T>) -> Result<DensityOperator<T>> {
        if self.segments.is_empty() {
            if self.ideal.is_ideal() && self.noise.heat_during_pulses {
                let half = 0.5 * self.ideal.sweep().duration;
                let r = self.ideal.transfer_density(&self.wait(rho, half)?)?;
                return self.wait(&r, half);
            }
            return self.ideal.transfer_density(rho);
        }
        if rho.layout() != Layout::Joint || rho.truncation() != self.truncation() {
            return Err(Error::Contract("expected a joint-space operator on the engine's truncation".into()));
        }
        let n_max = self.truncation().n_max;
        let mut r = rho.clone();
        for u in &self.segments {
            let edge = to_f64(r.matrix()[(n_max, n_max)].re);
            if edge > self.truncation().leakage_tol {
                return Err(Error::Truncation {
                    leakage: edge,
                    tol: self.truncation().leakage_tol,
                    required_n_max: Some(n_max + 1),
                });
            }
            r = self.wait(&r, 0.5 * self.segment_len)?;
            r = DensityOperator::from_matrix_unchecked(*self.truncation(), Layout::Joint, u.conjugate(r.matrix()))?;
            r = self.wait(&r, 0.5 * self.segment_len)?;
        }
        Ok(r)
    }

    /// Addition sequence (sweep, then carrier π).
    pub fn add(&self, rho: &DensityOperator<T>) -> Result<DensityOperator<T>> {
        Self::require_down(rho)?;
        self.ideal.carrier_density(&self.transfer(rho)?)
    }

    /// Subtraction sequence (carrier π, then sweep), before detection.
    pub fn subtract(&self, rho: &DensityOperator<T>) -> Result<DensityOperator<T>> {
        Self::require_down(rho)?;
        self.transfer(&self.ideal.carrier_density(rho)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{fidelity, make_coherent, DensityOperator};
    use crate::scalar::complex;

    fn setup(noise: NoiseParams) -> (NoisyEngine<f64>, DensityOperator<f64>) {
        let t = FockTruncation::new(14, 1e-6).unwrap();
        let sweep = SweepParams::default();
        let engine = NoisyEngine::new(t, sweep, noise, sweep.default_step()).unwrap();
        let psi = make_coherent::<f64>(complex(0.8, 0.0), FockTruncation::new(14, 1e-6).unwrap()).unwrap();
        (engine, psi.to_density())
    }

    #[test]
    fn ideal_noise_matches_pulse_engine() {
        let (e, rho) = setup(NoiseParams::ideal());
        let a = e.add(&rho).unwrap();
        let b = e.ideal().carrier_density(&e.ideal().transfer_density(&rho).unwrap()).unwrap();
        assert!((a.matrix() - b.matrix()).camax() < 1e-15);
    }

    #[test]
    fn segmented_sweep_without_heating_matches_full_sweep() {
        let noise = NoiseParams {
            gamma: 1e-12,
            ..NoiseParams::default()
        };
        let (e, rho) = setup(noise);
        let a = e.transfer(&rho).unwrap();
        let b = e.ideal().transfer_density(&rho).unwrap();
        assert!((a.matrix() - b.matrix()).camax() < 1e-7);
    }

    #[test]
    fn heating_during_addition_costs_little_fidelity() {
        let (e, rho) = setup(NoiseParams::default());
        let noisy = e.add(&rho).unwrap();
        let clean = e.ideal().carrier_density(&e.ideal().transfer_density(&rho).unwrap()).unwrap();
        assert!((noisy.trace() - 1.0).abs() < 1e-8);
        let f = fidelity(&noisy.phonon_reduced(), &clean.phonon_reduced()).unwrap();
        assert!(f < 1.0 - 1e-4 && f > 0.95, "{f}");
    }

    #[test]
    fn requires_down_qubit() {
        let (e, rho) = setup(NoiseParams::default());
        let flipped = e.ideal().carrier_density(&rho).unwrap();
        assert!(matches!(e.add(&flipped), Err(Error::Contract(_))));
    }
}
