//! Scalar abstraction shared by the numerical modules.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Floating point type the transform can run in: `f32` or `f64`.
///
/// `SCALE_EXPONENT` is the base-2 exponent of one rescale step for the
/// Legendre recurrence. It has to leave enough head room that a single
/// recurrence step from a value at the threshold cannot leave the normal
/// range of the type.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + FftNum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    const SCALE_EXPONENT: i32;

    /// Converts an `f64` literal or intermediate into this type.
    fn lit(v: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Real for f64 {
    const SCALE_EXPONENT: i32 = 126;

    #[inline(always)]
    fn lit(v: f64) -> Self {
        v
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const SCALE_EXPONENT: i32 = 40;

    #[inline(always)]
    fn lit(v: f64) -> Self {
        v as f32
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self as f64
    }
}
