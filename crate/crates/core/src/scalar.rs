//! Scalar abstraction: every algorithm in this crate is written against
//! [`Scalar`] so the same code runs in `f32` or `f64`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable by the solvers and problem generators.
///
/// Blanket-implemented for any type with the listed bounds, in particular
/// `f32` and `f64`.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts from `f64`, panicking only for types that cannot represent
    /// any finite `f64` (none of the provided impls do).
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("scalar conversion from f64")
    }

    /// Lossy widening to `f64` for reporting and serialization.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar conversion to f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + LowerExp
        + Send
        + Sync
        + 'static
{
}

/// Formats a scalar with 17 significant digits, enough for bit-exact
/// round-trip of `f64` through decimal text.
pub fn format_full<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v)
}
