use nalgebra::{Complex, DMatrix, DVector};

use super::{ReconstructionSettings, TomographyDataset};
use crate::error::{Error, Result};
use crate::hilbert::{displacement_elements, DensityOperator, FockTruncation, Layout};
use crate::linalg::{hermitian_part, orthonormalize_columns, CMatrix};
use crate::scalar::{ci, real, to_f64, Real};

/// Model probabilities are clamped to at least this inside the likelihood and
/// the updates, so empty bins never divide by zero.
pub const PROB_FLOOR: f64 = 1e-12;
/// Backtracking halvings before a rotation is skipped.
const MAX_HALVINGS: usize = 40;
/// Growth of the rotation step after an accepted rotation, and its cap.
const EPS_GROWTH: f64 = 2.0;
const EPS_MAX: f64 = 1e3;
/// Consecutive sub-tolerance iterations that count as converged.
const STALL_ITERS: usize = 5;
/// Doublings tried when extrapolating an EM step.
/// Smallest fraction of an eigenvalue kept by one lengthened step.
const LENGTHEN_FLOOR: f64 = 1e-3;
const MAX_LENGTHENINGS: usize = 20;

/// Log-likelihood `Σ_k w_k Σ_n f_kn ln p_kn` of a density operator written as
/// `Σ_i r_i |φ_i⟩⟨φ_i|`, with `p_kn = ⟨n|D(α_k) ρ D(α_k)†|n⟩`.
#[derive(Clone, Debug)]
pub struct LikelihoodModel<T: Real> {
    dim: usize,
    /// `⟨n|D(α_k)|j⟩` for the recorded rows `n` and `j < dim`.
    displacements: Vec<CMatrix<T>>,
    freqs: Vec<DVector<T>>,
    weights: Vec<T>,
}

impl<T: Real> LikelihoodModel<T> {
    /// Model on Fock levels `0..=n_max_rec`.
    pub fn new(dataset: &TomographyDataset, n_max_rec: usize) -> Result<Self> {
        dataset.validate()?;
        if n_max_rec == 0 {
            return Err(Error::invalid("n_max_rec", "must be at least 1"));
        }
        let dim = n_max_rec + 1;
        let displacements = dataset
            .settings
            .iter()
            .map(|s| {
                let a = Complex::new(real::<T>(s.alpha[0]), real::<T>(s.alpha[1]));
                displacement_elements(a, s.freqs.len(), dim)
            })
            .collect();
        let freqs = dataset
            .settings
            .iter()
            .map(|s| DVector::from_iterator(s.freqs.len(), s.freqs.iter().map(|&f| real::<T>(f))))
            .collect();
        let weights = dataset.weights().into_iter().map(real::<T>).collect();
        Ok(Self {
            dim,
            displacements,
            freqs,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `h_k[n, i] = |⟨n|D(α_k)|φ_i⟩|²` for the columns `φ_i` of `basis`.
    pub fn kernels(&self, basis: &CMatrix<T>) -> Vec<DMatrix<T>> {
        self.displacements
            .iter()
            .map(|d| (d * basis).map(|c| c.norm_sqr()))
            .collect()
    }

    pub fn probabilities(kernels: &[DMatrix<T>], r: &DVector<T>) -> Vec<DVector<T>> {
        kernels.iter().map(|h| h * r).collect()
    }

    pub fn loglik_from(&self, kernels: &[DMatrix<T>], r: &DVector<T>) -> T {
        let floor = real::<T>(PROB_FLOOR);
        let mut total = T::zero();
        for ((h, f), w) in kernels.iter().zip(&self.freqs).zip(&self.weights) {
            let p = h * r;
            let mut s = T::zero();
            for (fi, pi) in f.iter().zip(p.iter()) {
                if *fi > T::zero() {
                    s += *fi * pi.max(floor).ln();
                }
            }
            total += *w * s;
        }
        total
    }

    pub fn loglik(&self, r: &DVector<T>, basis: &CMatrix<T>) -> T {
        self.loglik_from(&self.kernels(basis), r)
    }

    /// Upper bound `Σ_k w_k Σ_n f ln f`, reached when the model matches the
    /// data exactly.
    pub fn loglik_bound(&self) -> T {
        self.freqs
            .iter()
            .zip(&self.weights)
            .map(|(f, w)| *w * f.iter().filter(|x| **x > T::zero()).fold(T::zero(), |a, x| a + *x * x.ln()))
            .fold(T::zero(), |a, b| a + b)
    }

    /// `R = Σ_k w_k D_k† diag(f_k / p_k) D_k` for the operator `rho`.
    pub fn r_operator(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let floor = real::<T>(PROB_FLOOR);
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for ((d, f), w) in self.displacements.iter().zip(&self.freqs).zip(&self.weights) {
            let displaced = d * rho * d.adjoint();
            let mut scaled = d.clone();
            for n in 0..d.nrows() {
                let ratio = if f[n] > T::zero() {
                    *w * f[n] / displaced[(n, n)].re.max(floor)
                } else {
                    T::zero()
                };
                scaled.row_mut(n).scale_mut(ratio);
            }
            out += d.adjoint() * scaled;
        }
        out
    }
}

fn assemble<T: Real>(r: &DVector<T>, basis: &CMatrix<T>) -> CMatrix<T> {
    let mut scaled = basis.clone();
    for (i, ri) in r.iter().enumerate() {
        scaled.column_mut(i).scale_mut(*ri);
    }
    scaled * basis.adjoint()
}

/// One expectation-maximization step on the eigenvalues,
/// `r_i ← r_i Σ_k w_k Σ_n h_k[n,i] f_kn / p_kn`, renormalized to unit sum.
pub fn em_update<T: Real>(r: &DVector<T>, kernels: &[DMatrix<T>], model: &LikelihoodModel<T>) -> DVector<T> {
    let floor = real::<T>(PROB_FLOOR);
    let mut factor = DVector::<T>::zeros(r.len());
    for ((h, f), w) in kernels.iter().zip(&model.freqs).zip(&model.weights) {
        let p = h * r;
        let ratio = DVector::from_iterator(
            f.len(),
            f.iter().zip(p.iter()).map(|(fi, pi)| if *fi > T::zero() { *w * *fi / pi.max(floor) } else { T::zero() }),
        );
        factor += h.transpose() * ratio;
    }
    let next = r.component_mul(&factor);
    let sum = next.sum();
    if !(sum > T::zero()) {
        return r.clone();
    }
    next.unscale(sum)
}

/// Extrapolates `r + t(r_em − r)` for `t = 2, 4, …` while the likelihood
/// keeps rising. With exact data the plain update slows to sublinear
/// convergence on the vanishing eigenvalues. A component the extrapolation
/// would drive to zero or below is clipped to `LENGTHEN_FLOOR` times its
/// current value, which keeps it positive, and the search stops there.
fn lengthen_em_step<T: Real>(
    r: &DVector<T>,
    r_em: DVector<T>,
    l_em: T,
    kernels: &[DMatrix<T>],
    model: &LikelihoodModel<T>,
) -> (DVector<T>, T) {
    let delta = &r_em - r;
    let (mut best, mut best_l) = (r_em, l_em);
    let mut t = real::<T>(2.0);
    let floor = real::<T>(LENGTHEN_FLOOR);
    for _ in 0..MAX_LENGTHENINGS {
        let mut trial = r + &delta * t;
        let mut clipped = false;
        for (x, r0) in trial.iter_mut().zip(r.iter()) {
            if *x < *r0 * floor {
                *x = *r0 * floor;
                clipped = true;
            }
        }
        let trial = trial.unscale(trial.sum());
        let l = model.loglik_from(kernels, &trial);
        if !(l > best_l) {
            break;
        }
        best = trial;
        best_l = l;
        if clipped {
            break;
        }
        t *= real::<T>(2.0);
    }
    (best, best_l)
}

/// Outcome of one basis rotation attempt.
#[derive(Clone, Debug)]
pub struct RotationStep<T: Real> {
    pub basis: CMatrix<T>,
    pub loglik: T,
    /// Step that was accepted, or the last one tried.
    pub epsilon: T,
    pub accepted: bool,
}

/// Rotates the eigenbasis by the re-orthonormalized `1 + iεG`,
/// `G = i[ρ, R]`, halving `ε` until the log-likelihood does not decrease.
/// Along this direction the likelihood grows at rate `Tr G²`, so a small
/// enough step always helps unless `G = 0`.
pub fn rotate_basis<T: Real>(
    r: &DVector<T>,
    basis: &CMatrix<T>,
    model: &LikelihoodModel<T>,
    epsilon: T,
) -> RotationStep<T> {
    let start = model.loglik(r, basis);
    let unchanged = |eps| RotationStep {
        basis: basis.clone(),
        loglik: start,
        epsilon: eps,
        accepted: false,
    };
    if epsilon <= T::zero() {
        return unchanged(epsilon);
    }
    let rho = assemble(r, basis);
    let big_r = model.r_operator(&rho);
    let g = hermitian_part(&((&rho * &big_r - &big_r * &rho) * ci::<T>()));
    if g.iter().all(|c| c.norm_sqr() == T::zero()) {
        return unchanged(epsilon);
    }
    let id = CMatrix::<T>::identity(model.dim, model.dim);
    let mut eps = epsilon;
    for _ in 0..=MAX_HALVINGS {
        let u = &id + &g * (ci::<T>() * eps);
        let mut trial = u * basis;
        orthonormalize_columns(&mut trial);
        let l = model.loglik(r, &trial);
        if l >= start {
            return RotationStep {
                basis: trial,
                loglik: l,
                epsilon: eps,
                accepted: true,
            };
        }
        eps *= real::<T>(0.5);
    }
    unchanged(eps)
}

/// Result of [`mle_reconstruct`].
#[derive(Clone, Debug)]
pub struct Reconstruction<T: Real> {
    pub rho: DensityOperator<T>,
    /// Log-likelihood before the first iteration and after each one.
    pub loglik: Vec<f64>,
    pub iterations: usize,
    /// Whether the gain fell below `loglik_tol` before `max_iters`.
    pub converged: bool,
    pub rotations_accepted: usize,
}

/// Maximum-likelihood density operator on levels `0..=n_max_rec`, starting
/// from the maximally mixed state. Every iteration applies one EM update and
/// one rotation attempt; either is discarded if it would lower the
/// likelihood, so the recorded trace never decreases.
pub fn mle_reconstruct<T: Real>(
    dataset: &TomographyDataset,
    settings: &ReconstructionSettings,
) -> Result<Reconstruction<T>> {
    settings.validate()?;
    let n_max = dataset.reconstruction_n_max(settings);
    let model = LikelihoodModel::<T>::new(dataset, n_max)?;
    let d = model.dim();
    let mut r = DVector::from_element(d, T::one() / real::<T>(d as f64));
    let mut basis = CMatrix::<T>::identity(d, d);
    let mut l = model.loglik(&r, &basis);
    let mut trace = vec![to_f64(l)];
    let eps0 = real::<T>(settings.epsilon);
    let mut eps = eps0;
    let mut stall = 0;
    let mut converged = false;
    let mut rotations = 0;
    let mut iterations = 0;
    for _ in 0..settings.max_iters {
        iterations += 1;
        let before = l;
        let kernels = model.kernels(&basis);
        let r_next = em_update(&r, &kernels, &model);
        let l_next = model.loglik_from(&kernels, &r_next);
        if l_next >= l {
            let (r_long, l_long) = lengthen_em_step(&r, r_next, l_next, &kernels, &model);
            r = r_long;
            l = l_long;
        }
        let step = rotate_basis(&r, &basis, &model, eps);
        if step.accepted {
            basis = step.basis;
            l = step.loglik;
            eps = (step.epsilon * real::<T>(EPS_GROWTH)).min(real::<T>(EPS_MAX));
            rotations += 1;
        } else {
            eps = eps0;
        }
        trace.push(to_f64(l));
        if to_f64(l - before) < settings.loglik_tol {
            stall += 1;
            if stall >= STALL_ITERS {
                converged = true;
                break;
            }
        } else {
            stall = 0;
        }
    }
    if !converged {
        log::warn!(
            "tomography stopped at max_iters = {} without reaching loglik_tol = {:e}",
            settings.max_iters,
            settings.loglik_tol
        );
    }
    let trunc = FockTruncation::with_n_max(n_max)?;
    let m = hermitian_part(&assemble(&r, &basis));
    let rho = DensityOperator::from_matrix(trunc, Layout::Phonon, m)?.renormalized()?;
    Ok(Reconstruction {
        rho,
        loglik: trace,
        iterations,
        converged,
        rotations_accepted: rotations,
    })
}
