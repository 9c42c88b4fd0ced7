//! Scalar abstraction shared by every numerical routine.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over a [`Real`].
pub type C<T> = Complex<T>;

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable")
}

/// Converts a count into `T`.
#[inline]
pub fn count<T: Real>(x: usize) -> T {
    T::from_usize(x).expect("count representable")
}

/// `base^e` for a non-negative integer exponent.
#[inline]
pub fn powu<T: Real>(base: T, e: usize) -> T {
    base.powi(e as i32)
}

/// `e^{2 pi i j s / p}`, reduced modulo `p` before evaluating.
pub fn root_of_unity<T: Real>(p: usize, s: usize, j: usize) -> C<T> {
    let r = (j * s) % p;
    let angle = T::TAU() * count::<T>(r) / count::<T>(p);
    Complex::from_polar(T::one(), angle)
}

/// Exact integral of `u * conj(v)` over a unit interval where both factors are
/// linear with endpoint values `(u0, u1)` and `(v0, v1)`.
#[inline]
pub fn linear_product<T: Real>(u0: C<T>, u1: C<T>, v0: C<T>, v1: C<T>) -> C<T> {
    let third = lit::<T>(1.0 / 3.0);
    let sixth = lit::<T>(1.0 / 6.0);
    (u0 * v0.conj() + u1 * v1.conj()) * third + (u0 * v1.conj() + u1 * v0.conj()) * sixth
}
