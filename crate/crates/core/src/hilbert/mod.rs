//! States, ideal operators and state-analysis functionals on the truncated
//! qubit ⊗ Fock space of a single motional mode.
//!
//! Joint-space index layout: `q * (n_max + 1) + n` with `q = 0` for ↓ and
//! `q = 1` for ↑.

mod displacement;
pub mod io;
mod metrics;
pub mod operators;
mod phase_space;
mod states;

pub use displacement::{displace_density, displacement, displacement_elements};
pub use metrics::{fidelity, fidelity_to_pure, state_metrics, StateMetrics};
pub use phase_space::{qfunction, wigner, GridSpec, WignerGrid};
pub(crate) use states::edge_guard;
pub use states::{
    apply_ladder, apply_s_minus, apply_s_plus, coherent_amplitudes, coherent_tail, make_coherent,
    make_fock, Ladder, SMinusOutcome,
};

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermiticity_error, trace, CMatrix, CVector};
use crate::scalar::{czero, real, to_f64, Real};

/// Highest retained Fock index together with the population allowed to sit at
/// that edge before an operation is refused.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockTruncation {
    pub n_max: usize,
    pub leakage_tol: f64,
}

impl FockTruncation {
    pub const DEFAULT_LEAKAGE_TOL: f64 = 1e-6;

    pub fn new(n_max: usize, leakage_tol: f64) -> Result<Self> {
        let t = Self { n_max, leakage_tol };
        t.validate()?;
        Ok(t)
    }

    pub fn with_n_max(n_max: usize) -> Result<Self> {
        Self::new(n_max, Self::DEFAULT_LEAKAGE_TOL)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(Error::invalid("n_max", "must be at least 1"));
        }
        if !(self.leakage_tol > 0.0 && self.leakage_tol < 1.0) {
            return Err(Error::invalid("leakage_tol", format!("{} not in (0, 1)", self.leakage_tol)));
        }
        Ok(())
    }

    /// Number of retained Fock levels.
    pub fn levels(&self) -> usize {
        self.n_max + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Qubit {
    Down,
    Up,
}

impl Qubit {
    pub fn index(self) -> usize {
        match self {
            Qubit::Down => 0,
            Qubit::Up => 1,
        }
    }
}

/// Which space a [`DensityOperator`] lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Phonon,
    Joint,
}

impl Layout {
    pub fn dim(self, trunc: &FockTruncation) -> usize {
        match self {
            Layout::Phonon => trunc.levels(),
            Layout::Joint => 2 * trunc.levels(),
        }
    }
}

/// Normalized pure state on qubit ⊗ Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState<T: Real> {
    trunc: FockTruncation,
    amps: CVector<T>,
}

impl<T: Real> JointState<T> {
    /// Wraps raw amplitudes, checking length and unit norm.
    pub fn from_amplitudes(trunc: FockTruncation, amps: CVector<T>) -> Result<Self> {
        let dim = 2 * trunc.levels();
        if amps.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: amps.len(),
            });
        }
        let norm = amps.norm_squared();
        if (norm - T::one()).abs() > T::validation_tol() {
            return Err(Error::InvalidState(format!(
                "norm² = {} (expected 1)",
                to_f64(norm)
            )));
        }
        Ok(Self { trunc, amps })
    }

    /// Rescales nonzero amplitudes to unit norm.
    pub fn normalized(trunc: FockTruncation, amps: CVector<T>) -> Result<Self> {
        let norm = amps.norm();
        if norm <= T::zero() {
            return Err(Error::InvalidState("zero vector cannot be normalized".into()));
        }
        Self::from_amplitudes(trunc, amps.unscale(norm))
    }

    /// `|q⟩ ⊗ Σ c_n |n⟩`; the phonon amplitudes are normalized here.
    pub fn product(trunc: FockTruncation, qubit: Qubit, phonon: &[Complex<T>]) -> Result<Self> {
        if phonon.len() > trunc.levels() {
            return Err(Error::Range {
                n: phonon.len() - 1,
                n_max: trunc.n_max,
            });
        }
        let mut amps = CVector::zeros(2 * trunc.levels());
        let offset = qubit.index() * trunc.levels();
        for (n, c) in phonon.iter().enumerate() {
            amps[offset + n] = *c;
        }
        Self::normalized(trunc, amps)
    }

    /// Internal constructor for amplitudes produced by exact unitaries.
    pub(crate) fn from_raw(trunc: FockTruncation, amps: CVector<T>) -> Self {
        Self { trunc, amps }
    }

    pub fn truncation(&self) -> &FockTruncation {
        &self.trunc
    }

    pub fn n_max(&self) -> usize {
        self.trunc.n_max
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector<T> {
        &self.amps
    }

    pub fn index(&self, q: Qubit, n: usize) -> usize {
        q.index() * self.trunc.levels() + n
    }

    pub fn amplitude(&self, q: Qubit, n: usize) -> Complex<T> {
        self.amps[self.index(q, n)]
    }

    pub fn population(&self, q: Qubit, n: usize) -> T {
        self.amplitude(q, n).norm_sqr()
    }

    pub fn qubit_population(&self, q: Qubit) -> T {
        (0..self.trunc.levels()).fold(T::zero(), |acc, n| acc + self.population(q, n))
    }

    /// Unnormalized phonon amplitudes of one qubit branch.
    pub fn branch(&self, q: Qubit) -> Vec<Complex<T>> {
        (0..self.trunc.levels()).map(|n| self.amplitude(q, n)).collect()
    }

    /// Population at Fock index `n`, summed over both qubit states.
    pub fn fock_population(&self, n: usize) -> T {
        self.population(Qubit::Down, n) + self.population(Qubit::Up, n)
    }

    pub fn phonon_distribution(&self) -> PhononDistribution<T> {
        PhononDistribution::from_unchecked(
            (0..self.trunc.levels()).map(|n| self.fock_population(n)).collect(),
        )
    }

    /// Joint-space density operator `|ψ⟩⟨ψ|`.
    pub fn to_density(&self) -> DensityOperator<T> {
        DensityOperator {
            trunc: self.trunc,
            layout: Layout::Joint,
            matrix: &self.amps * self.amps.adjoint(),
        }
    }

    /// Reduced phonon state (partial trace over the qubit).
    pub fn phonon_density(&self) -> DensityOperator<T> {
        self.to_density().phonon_reduced()
    }

    pub fn overlap(&self, other: &Self) -> Complex<T> {
        self.amps.dotc(&other.amps)
    }
}

/// Hermitian, positive semidefinite, unit-trace operator on phonon or joint
/// space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator<T: Real> {
    trunc: FockTruncation,
    layout: Layout,
    matrix: CMatrix<T>,
}

impl<T: Real> DensityOperator<T> {
    /// Validates Hermiticity, trace and eigenvalues before wrapping.
    pub fn from_matrix(trunc: FockTruncation, layout: Layout, matrix: CMatrix<T>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(trunc, layout, matrix)?;
        rho.check_invariants(T::validation_tol())?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(
        trunc: FockTruncation,
        layout: Layout,
        matrix: CMatrix<T>,
    ) -> Result<Self> {
        let dim = layout.dim(&trunc);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: matrix.nrows(),
            });
        }
        Ok(Self {
            trunc,
            layout,
            matrix,
        })
    }

    pub fn check_invariants(&self, tol: T) -> Result<()> {
        let herm = hermiticity_error(&self.matrix);
        if herm > tol {
            return Err(Error::InvalidState(format!("not Hermitian (max |ρ-ρ†| = {:.3e})", to_f64(herm))));
        }
        let tr = self.trace();
        if (tr - T::one()).abs() > tol {
            return Err(Error::InvalidState(format!("trace {} != 1", to_f64(tr))));
        }
        let min = self.min_eigenvalue();
        if min < -tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {:.3e}", to_f64(min))));
        }
        Ok(())
    }

    /// Pure phonon state from (normalized) amplitudes.
    pub fn pure_phonon(trunc: FockTruncation, phonon: &[Complex<T>]) -> Result<Self> {
        if phonon.len() > trunc.levels() {
            return Err(Error::Range {
                n: phonon.len() - 1,
                n_max: trunc.n_max,
            });
        }
        let mut v = CVector::zeros(trunc.levels());
        for (n, c) in phonon.iter().enumerate() {
            v[n] = *c;
        }
        let norm = v.norm();
        if norm <= T::zero() {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v = v.unscale(norm);
        Ok(Self {
            trunc,
            layout: Layout::Phonon,
            matrix: &v * v.adjoint(),
        })
    }

    /// Diagonal phonon state with the given populations.
    pub fn diagonal_phonon(trunc: FockTruncation, probs: &[T]) -> Result<Self> {
        let mut m = CMatrix::zeros(trunc.levels(), trunc.levels());
        for (n, p) in probs.iter().enumerate() {
            if n > trunc.n_max {
                return Err(Error::Range { n, n_max: trunc.n_max });
            }
            m[(n, n)] = Complex::from(*p);
        }
        Self::from_matrix(trunc, Layout::Phonon, m)
    }

    /// Thermal phonon state of mean occupation `nbar`, renormalized on the
    /// truncated space.
    pub fn thermal(trunc: FockTruncation, nbar: T) -> Result<Self> {
        let ratio = nbar / (nbar + T::one());
        let mut probs = Vec::with_capacity(trunc.levels());
        let mut p = T::one();
        for _ in 0..trunc.levels() {
            probs.push(p);
            p *= ratio;
        }
        let total = probs.iter().fold(T::zero(), |a, &b| a + b);
        let probs: Vec<T> = probs.into_iter().map(|p| p / total).collect();
        Self::diagonal_phonon(trunc, &probs)
    }

    /// `|q⟩⟨q| ⊗ ρ_phonon`.
    pub fn with_qubit(&self, q: Qubit) -> Result<Self> {
        if self.layout != Layout::Phonon {
            return Err(Error::Contract("with_qubit expects a phonon-space operator".into()));
        }
        let l = self.trunc.levels();
        let mut m = CMatrix::zeros(2 * l, 2 * l);
        let off = q.index() * l;
        m.view_mut((off, off), (l, l)).copy_from(&self.matrix);
        Ok(Self {
            trunc: self.trunc,
            layout: Layout::Joint,
            matrix: m,
        })
    }

    pub fn truncation(&self) -> &FockTruncation {
        &self.trunc
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    pub fn trace(&self) -> T {
        trace(&self.matrix).re
    }

    pub fn purity(&self) -> T {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ
        self.matrix.iter().fold(T::zero(), |acc, x| acc + x.norm_sqr())
    }

    pub fn min_eigenvalue(&self) -> T {
        let (vals, _) = hermitian_eigen(&self.matrix);
        vals[vals.len() - 1]
    }

    pub fn expectation(&self, op: &CMatrix<T>) -> Complex<T> {
        trace(&(&self.matrix * op))
    }

    /// Partial trace over the qubit; identity on phonon operators.
    pub fn phonon_reduced(&self) -> Self {
        match self.layout {
            Layout::Phonon => self.clone(),
            Layout::Joint => {
                let l = self.trunc.levels();
                let m = self.matrix.view((0, 0), (l, l)) + self.matrix.view((l, l), (l, l));
                Self {
                    trunc: self.trunc,
                    layout: Layout::Phonon,
                    matrix: m,
                }
            }
        }
    }

    /// Unnormalized phonon block `⟨q|ρ|q⟩` of a joint operator.
    pub fn qubit_block(&self, q: Qubit) -> Result<CMatrix<T>> {
        if self.layout != Layout::Joint {
            return Err(Error::Contract("qubit_block expects a joint-space operator".into()));
        }
        let l = self.trunc.levels();
        let off = q.index() * l;
        Ok(self.matrix.view((off, off), (l, l)).into_owned())
    }

    pub fn qubit_population(&self, q: Qubit) -> Result<T> {
        Ok(trace(&self.qubit_block(q)?).re)
    }

    /// Phonon-number distribution (marginal over the qubit for joint operators).
    pub fn phonon_distribution(&self) -> PhononDistribution<T> {
        let red = self.phonon_reduced();
        PhononDistribution::from_unchecked(
            red.matrix
                .diagonal()
                .iter()
                .map(|x| if x.re > T::zero() { x.re } else { T::zero() })
                .collect(),
        )
    }

    /// Renormalizes to unit trace and restores exact Hermiticity.
    pub fn renormalized(&self) -> Result<Self> {
        let tr = self.trace();
        if tr <= T::zero() {
            return Err(Error::InvalidState("non-positive trace".into()));
        }
        let m = crate::linalg::hermitian_part(&self.matrix) * Complex::from(T::one() / tr);
        Ok(Self {
            trunc: self.trunc,
            layout: self.layout,
            matrix: m,
        })
    }

    /// Population on the top Fock level (both qubit states for joint layout).
    pub fn edge_population(&self) -> T {
        let l = self.trunc.levels();
        match self.layout {
            Layout::Phonon => self.matrix[(l - 1, l - 1)].re,
            Layout::Joint => self.matrix[(l - 1, l - 1)].re + self.matrix[(2 * l - 1, 2 * l - 1)].re,
        }
    }

    /// Trace distance ½‖ρ−σ‖₁.
    pub fn trace_distance(&self, other: &Self) -> Result<T> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let (vals, _) = hermitian_eigen(&(&self.matrix - &other.matrix));
        Ok(vals.iter().fold(T::zero(), |acc, v| acc + v.abs()) * real::<T>(0.5))
    }

    /// Phonon operator moved to `n_max` levels: zero-padded when growing; when
    /// shrinking, the discarded population must stay within `leakage_tol`.
    pub fn resized(&self, n_max: usize) -> Result<Self> {
        if self.layout != Layout::Phonon {
            return Err(Error::Contract("resized expects a phonon-space operator".into()));
        }
        let trunc = FockTruncation::new(n_max, self.trunc.leakage_tol)?;
        let keep = trunc.levels().min(self.trunc.levels());
        let kept = (0..keep).fold(T::zero(), |acc, n| acc + self.matrix[(n, n)].re);
        let lost = to_f64(self.trace() - kept);
        if lost > trunc.leakage_tol {
            return Err(Error::Truncation {
                leakage: lost,
                tol: trunc.leakage_tol,
                required_n_max: None,
            });
        }
        let mut m = CMatrix::zeros(trunc.levels(), trunc.levels());
        m.view_mut((0, 0), (keep, keep))
            .copy_from(&self.matrix.view((0, 0), (keep, keep)));
        Self::from_matrix_unchecked(trunc, Layout::Phonon, m)?.renormalized()
    }
}

/// Probability vector over Fock states.
#[derive(Clone, Debug, PartialEq)]
pub struct PhononDistribution<T: Real> {
    probs: Vec<T>,
}

impl<T: Real> PhononDistribution<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        let tol = real::<T>(1e-6);
        for (n, p) in probs.iter().enumerate() {
            if *p < T::zero() || *p > T::one() {
                return Err(Error::InvalidState(format!("p_{n} = {} outside [0, 1]", to_f64(*p))));
            }
        }
        let total = probs.iter().fold(T::zero(), |a, &b| a + b);
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidState(format!("probabilities sum to {}", to_f64(total))));
        }
        Ok(Self { probs })
    }

    pub(crate) fn from_unchecked(probs: Vec<T>) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, n: usize) -> T {
        self.probs.get(n).copied().unwrap_or_else(T::zero)
    }

    pub fn mean(&self) -> T {
        self.probs
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (n, p)| acc + real::<T>(n as f64) * *p)
    }

    pub fn variance(&self) -> T {
        let mean = self.mean();
        self.probs.iter().enumerate().fold(T::zero(), |acc, (n, p)| {
            let d = real::<T>(n as f64) - mean;
            acc + d * d * *p
        })
    }

    /// ½ Σ |p_n − q_n|, padding the shorter vector with zeros.
    pub fn total_variation(&self, other: &Self) -> T {
        let len = self.len().max(other.len());
        (0..len).fold(T::zero(), |acc, n| acc + (self.get(n) - other.get(n)).abs()) * real::<T>(0.5)
    }
}

pub(crate) fn zero_vector<T: Real>(len: usize) -> CVector<T> {
    CVector::from_element(len, czero())
}
