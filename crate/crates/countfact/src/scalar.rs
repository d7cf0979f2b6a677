use nalgebra::{ClosedAddAssign, ClosedDivAssign, ClosedMulAssign, ClosedSubAssign};
use num_traits::{Float, FromPrimitive, NumCast};

/// Floating-point scalar type usable in every numeric kernel of this crate.
///
/// Bundles the num-traits float interface with the arithmetic bounds
/// nalgebra matrices need, plus formatting and thread-safety bounds.
/// Implemented for `f32` and `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumCast
    + ClosedAddAssign
    + ClosedSubAssign
    + ClosedMulAssign
    + ClosedDivAssign
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant, panicking only on values unrepresentable
    /// even after rounding (never the case for finite inputs and f32/f64).
    fn cast_from(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 constant not representable")
    }

    /// Converts a count to the scalar type (rounding for large `u64`).
    fn cast_u64(v: u64) -> Self {
        <Self as NumCast>::from(v).expect("u64 count not representable")
    }

    /// Widens to `f64` (exact for f32 and f64).
    fn as_f64(self) -> f64 {
        <f64 as NumCast>::from(self).expect("scalar not representable as f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
