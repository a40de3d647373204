//! Scalar abstraction shared by the generic numerical kernels.
//!
//! Path algebra, jets, stability polynomials and the steppers are written
//! against [`Real`] so they run in `f32` or `f64`. The nonlinear solvers and
//! experiment drivers are pinned to `f64`, where their tolerances make sense.

use num_complex::Complex;
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Real field used for the real and imaginary parts of complex scalars.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over a [`Real`] field.
pub type Cx<T> = Complex<T>;

/// Shorthand constructor.
#[inline]
pub fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

/// Complex from `f64` parts, converted into `T`.
#[inline]
pub fn cxl<T: Real>(re: f64, im: f64) -> Cx<T> {
    Complex::new(T::lit(re), T::lit(im))
}

/// Converts a complex value between real fields.
#[inline]
pub fn recast<A: Real, B: Real>(z: Cx<A>) -> Cx<B> {
    Complex::new(B::lit(z.re.to_f64_lossy()), B::lit(z.im.to_f64_lossy()))
}

/// `n!` as a real.
pub fn factorial<T: Real>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * T::lit(k as f64))
}

pub(crate) fn is_finite<T: Real>(z: Cx<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
