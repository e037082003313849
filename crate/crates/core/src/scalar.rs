//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All state, operator and propagation code is written against [`Real`], so
//! the same algorithms run in `f32` (fast, loose) or `f64` (the default used by
//! the concrete aliases at the crate root).

use nalgebra::{Complex, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable for the simulator: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Tolerance used when validating physical invariants (Hermiticity,
    /// normalization, positivity). `1e-9` in double precision, widened to what
    /// the type can actually resolve otherwise.
    fn validation_tol() -> Self {
        let floor = Self::default_epsilon() * real::<Self>(1e4);
        let spec = real::<Self>(1e-9);
        if floor > spec {
            floor
        } else {
            spec
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Convert an `f64` literal into the working scalar.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Convert a working scalar back to `f64` (for sampling, I/O and reporting).
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("scalar representable as f64")
}

#[inline]
pub fn complex<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// `e^{iθ}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

#[inline]
pub fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn cone<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

#[inline]
pub fn ci<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// `ln n!`, summed in log space so Fock indices far above 20 stay finite.
pub fn ln_factorial<T: Real>(n: usize) -> T {
    let mut acc = 0.0f64;
    for k in 2..=n {
        acc += (k as f64).ln();
    }
    real(acc)
}
