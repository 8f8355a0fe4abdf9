//! Scalar abstraction: every numeric routine in this crate is generic over a
//! floating-point type implementing [`Real`].
//!
//! `f64` is the working type for anything statistical; `f32` instantiations
//! exist for callers that want the smaller footprint and can tolerate the
//! precision loss. Concrete type aliases live at the crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar usable throughout the crate.
///
/// The bound set is the intersection of what the math needs: transcendental
/// functions (`Float`), named constants (`FloatConst`), and lossless-enough
/// conversion from literals (`FromPrimitive`).
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Shorthand for converting an `f64` literal; panics only if the target
    /// type cannot represent any nearby value, which cannot happen for f32/f64.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal converts to any Real")
    }

    /// 0.5 as `Self`.
    fn half() -> Self {
        Self::of(0.5)
    }

    /// 2.0 as `Self`.
    fn two() -> Self {
        Self::of(2.0)
    }
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}
