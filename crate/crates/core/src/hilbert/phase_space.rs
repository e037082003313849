//! Wigner and Husimi-Q quasi-probability functions on a rectangular α-plane
//! grid.

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;

use super::displacement::displacement_elements;
use super::states::coherent_amplitudes;
use super::DensityOperator;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{real, to_f64, Real};

/// Sample points of the α-plane: `n_re × n_im` points on the closed rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub n_re: usize,
    pub im_min: f64,
    pub im_max: f64,
    pub n_im: usize,
}

impl GridSpec {
    /// Square grid `[-extent, extent]²` with `n` points per axis.
    pub fn square(extent: f64, n: usize) -> Self {
        Self {
            re_min: -extent,
            re_max: extent,
            n_re: n,
            im_min: -extent,
            im_max: extent,
            n_im: n,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_re < 2 || self.n_im < 2 {
            return Err(Error::invalid("grid", "need at least two points per axis"));
        }
        if !(self.re_max > self.re_min && self.im_max > self.im_min) {
            return Err(Error::invalid("grid", "empty axis range"));
        }
        Ok(())
    }

    fn axis<T: Real>(min: f64, max: f64, n: usize) -> Vec<T> {
        (0..n)
            .map(|i| real(min + (max - min) * i as f64 / (n - 1) as f64))
            .collect()
    }
}

/// Values sampled on a [`GridSpec`]; `values[(i, j)]` is at
/// `α = re_axis[j] + i·im_axis[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid<T: Real> {
    pub re_axis: Vec<T>,
    pub im_axis: Vec<T>,
    pub values: DMatrix<T>,
    /// Population the truncated state would need above `n_max` to be displaced
    /// to the farthest grid corner, when that exceeds `leakage_tol`.
    pub leakage_warning: Option<f64>,
}

impl<T: Real> WignerGrid<T> {
    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::max_value().unwrap(), |a, b| a.min(b))
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::min_value().unwrap(), |a, b| a.max(b))
    }

    /// Trapezoidal ∫ f d²α over the grid.
    pub fn integral(&self) -> T {
        let dre = self.re_axis[1] - self.re_axis[0];
        let dim = self.im_axis[1] - self.im_axis[0];
        let (ni, nj) = self.values.shape();
        let mut acc = T::zero();
        for i in 0..ni {
            let wi = if i == 0 || i == ni - 1 { real(0.5) } else { T::one() };
            for j in 0..nj {
                let wj = if j == 0 || j == nj - 1 { real(0.5) } else { T::one() };
                acc += wi * wj * self.values[(i, j)];
            }
        }
        acc * dre * dim
    }
}

fn leakage_at_corner<T: Real>(phonon: &CMatrix<T>, spec: &GridSpec) -> f64 {
    let corners = [
        (spec.re_min, spec.im_min),
        (spec.re_min, spec.im_max),
        (spec.re_max, spec.im_min),
        (spec.re_max, spec.im_max),
    ];
    let (re, im) = corners
        .into_iter()
        .max_by(|a, b| (a.0.hypot(a.1)).total_cmp(&b.0.hypot(b.1)))
        .unwrap();
    let l = phonon.nrows();
    // population of D(−α)ρD(−α)† that falls outside the retained levels
    let d = displacement_elements(Complex::new(real::<T>(-re), real::<T>(-im)), l, l);
    let shifted = &d * phonon * d.adjoint();
    let kept = to_f64(crate::linalg::trace(&shifted).re);
    (1.0 - kept).max(0.0)
}

fn sample<T: Real, F>(rho: &DensityOperator<T>, spec: &GridSpec, f: F) -> Result<WignerGrid<T>>
where
    F: Fn(&CMatrix<T>, Complex<T>) -> T + Sync,
{
    spec.validate()?;
    let phonon = rho.phonon_reduced().into_matrix();
    let re_axis: Vec<T> = GridSpec::axis(spec.re_min, spec.re_max, spec.n_re);
    let im_axis: Vec<T> = GridSpec::axis(spec.im_min, spec.im_max, spec.n_im);
    let rows: Vec<Vec<T>> = im_axis
        .par_iter()
        .map(|&im| re_axis.iter().map(|&re| f(&phonon, Complex::new(re, im))).collect())
        .collect();
    let values = DMatrix::from_fn(spec.n_im, spec.n_re, |i, j| rows[i][j]);
    let leakage = leakage_at_corner(&phonon, spec);
    let tol = rho.truncation().leakage_tol;
    let leakage_warning = if leakage > tol {
        log::warn!(
            "phase-space grid reaches |α| where {:.3e} of the state leaves the truncated space",
            leakage
        );
        Some(leakage)
    } else {
        None
    };
    Ok(WignerGrid {
        re_axis,
        im_axis,
        values,
        leakage_warning,
    })
}

/// Displaced-parity Wigner function
/// `W(α) = (2/π) Σ_n (−1)ⁿ ⟨n|D†(α) ρ D(α)|n⟩`.
///
/// Evaluated as `(2/π) Σ_{m,n} ρ_{nm} (−1)ⁿ ⟨m|D(2α)|n⟩` with exact matrix
/// elements.
pub fn wigner<T: Real>(rho: &DensityOperator<T>, spec: &GridSpec) -> Result<WignerGrid<T>> {
    let pref = real::<T>(2.0) / T::pi();
    sample(rho, spec, |phonon, alpha| {
        let l = phonon.nrows();
        let d = displacement_elements(alpha * real::<T>(2.0), l, l);
        let mut acc = Complex::new(T::zero(), T::zero());
        for n in 0..l {
            let sign = if n % 2 == 0 { T::one() } else { -T::one() };
            let mut col = Complex::new(T::zero(), T::zero());
            for m in 0..l {
                col += phonon[(n, m)] * d[(m, n)];
            }
            acc += col * sign;
        }
        acc.re * pref
    })
}

/// Husimi function `Q(α) = ⟨α|ρ|α⟩ / π`.
pub fn qfunction<T: Real>(rho: &DensityOperator<T>, spec: &GridSpec) -> Result<WignerGrid<T>> {
    sample(rho, spec, |phonon, alpha| {
        let l = phonon.nrows();
        let c = crate::linalg::CVector::from_vec(coherent_amplitudes(alpha, l - 1));
        c.dotc(&(phonon * &c)).re / T::pi()
    })
}
