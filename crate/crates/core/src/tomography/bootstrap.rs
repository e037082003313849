use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mle_reconstruct, sample_counts, ReconstructionSettings, SettingData, TomographyDataset};
use crate::error::Result;
use crate::hilbert::{fidelity, state_metrics};

/// Spread of reconstructed quantities over multinomial resamples of a
/// dataset. Fidelities are taken against the reconstruction of the original
/// data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub n_resamples: usize,
    pub fidelity_mean: f64,
    pub fidelity_std: f64,
    pub purity_mean: f64,
    pub purity_std: f64,
    pub mean_n_std: f64,
    pub fano_std: f64,
}

/// Redraws each setting's counts from its own observed frequencies; noiseless
/// settings are copied.
pub fn resample_dataset<R: Rng + ?Sized>(dataset: &TomographyDataset, rng: &mut R) -> Result<TomographyDataset> {
    let settings = dataset
        .settings
        .iter()
        .map(|s| {
            if s.shots == 0 {
                return Ok(s.clone());
            }
            let counts = sample_counts(&s.freqs, s.shots, rng)?;
            let freqs = counts.iter().map(|&c| c as f64 / s.shots as f64).collect();
            SettingData::new(s.alpha(), s.shots, freqs)
        })
        .collect::<Result<Vec<_>>>()?;
    TomographyDataset::new(settings)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Bootstrap error bars. Resamples are reconstructed in parallel on the
/// reconstruction space chosen for the original data, each from its own
/// ChaCha stream.
pub fn bootstrap_errors<R: Rng + ?Sized>(
    dataset: &TomographyDataset,
    settings: &ReconstructionSettings,
    n_resamples: usize,
    rng: &mut R,
) -> Result<BootstrapSummary> {
    let fixed = ReconstructionSettings {
        n_max_rec: Some(dataset.reconstruction_n_max(settings)),
        ..*settings
    };
    let point = mle_reconstruct::<f64>(dataset, &fixed)?.rho;
    let seed: u64 = rng.random();
    let samples = (0..n_resamples)
        .into_par_iter()
        .map(|k| {
            let mut sub = ChaCha8Rng::seed_from_u64(seed);
            sub.set_stream(k as u64);
            let resampled = resample_dataset(dataset, &mut sub)?;
            let rho = mle_reconstruct::<f64>(&resampled, &fixed)?.rho;
            let m = state_metrics(&rho);
            Ok([fidelity(&rho, &point)?, m.purity, m.mean_n, m.fano.unwrap_or(f64::NAN)])
        })
        .collect::<Result<Vec<_>>>()?;
    // undefined Fano factors (vanishing mean) are left out of their column
    let column = |i: usize| -> Vec<f64> { samples.iter().map(|s| s[i]).filter(|x| x.is_finite()).collect() };
    let (fidelity_mean, fidelity_std) = mean_std(&column(0));
    let (purity_mean, purity_std) = mean_std(&column(1));
    Ok(BootstrapSummary {
        n_resamples,
        fidelity_mean,
        fidelity_std,
        purity_mean,
        purity_std,
        mean_n_std: mean_std(&column(2)).1,
        fano_std: mean_std(&column(3)).1,
    })
}
