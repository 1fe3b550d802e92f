//! Scalar abstraction shared by every module.

use std::fmt::{Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumAssign};
use rustfft::FftNum;

/// Floating point scalar the crate is generic over: `f32` or `f64`.
///
/// The FFT bound comes from the pseudo-spectral solver; everything else is
/// ordinary real arithmetic.
pub trait Real:
    FftNum + Float + FloatConst + NumAssign + Display + LowerExp + Sum + Default
{
    /// Converts an `f64` literal. Never fails for the supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_index(n: usize) -> Self {
        <Self as num_traits::FromPrimitive>::from_usize(n).expect("usize representable")
    }

    /// Lossy conversion used for error payloads and file output.
    #[inline]
    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(<f64 as Real>::lit(0.25), 0.25);
        assert_eq!(<f32 as Real>::lit(0.5), 0.5f32);
        assert_eq!(<f64 as Real>::from_index(7), 7.0);
        assert_eq!(1.5f32.as_f64(), 1.5);
    }
}
