//! Simulation and analysis toolkit for n-independent phonon addition and
//! subtraction on a trapped-ion motional mode.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the runner and the tests use.

pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod noise;
pub mod linalg;
pub mod measurement;
pub mod scalar;
pub mod tomography;

pub use error::{Error, Result};
pub use scalar::Real;

pub type JointState = hilbert::JointState<f64>;
pub type DensityOperator = hilbert::DensityOperator<f64>;
pub type PhononDistribution = hilbert::PhononDistribution<f64>;
pub type WignerGrid = hilbert::WignerGrid<f64>;
pub type PulseEngine = dynamics::PulseEngine<f64>;
pub type NoisyEngine = noise::NoisyEngine<f64>;
pub type Reconstruction = tomography::Reconstruction<f64>;
pub type Complex64 = nalgebra::Complex<f64>;
