//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real floating-point scalar the simulator can run on: `f32` or `f64`.
///
/// Validation tolerances scale with the precision of the type, so `f32`
/// states are checked against looser bounds than `f64` states.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance used when validating density matrices (hermiticity,
    /// trace, positivity).
    fn state_tol() -> Self;

    /// Tolerance below which a computed quantity is treated as zero.
    fn zero_tol() -> Self;

    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a count into the scalar type.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl Real for f32 {
    fn state_tol() -> Self {
        1e-4
    }

    fn zero_tol() -> Self {
        1e-5
    }
}

impl Real for f64 {
    fn state_tol() -> Self {
        1e-10
    }

    fn zero_tol() -> Self {
        1e-10
    }
}
