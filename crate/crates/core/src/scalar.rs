//! Floating-point abstraction for the solver kernels.
//!
//! Everything numeric in this crate is generic over [`Scalar`], which is
//! implemented for `f32` and `f64`. Concrete aliases live at the crate root.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftNum;
use std::fmt::{Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

/// Scalar type of grids, fields and spectra: a real floating-point type that
/// the FFT backend can transform.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + FftNum
    + Sum
    + Display
    + LowerExp
    + FromStr<Err = std::num::ParseFloatError>
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; panics only for non-finite exotic types.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 -> Scalar conversion")
    }

    /// Conversion from a grid count.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize -> Scalar conversion")
    }
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + NumAssign
        + FftNum
        + Sum
        + Display
        + LowerExp
        + FromStr<Err = std::num::ParseFloatError>
        + Send
        + Sync
        + 'static
{
}
