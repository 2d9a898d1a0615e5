//! Scalar abstraction for the field-level numerics.
//!
//! Everything that touches nodal values, quadrature or time stepping is
//! generic over [`Real`], so the same kernels run in `f32` or `f64`.
//! Exponent bookkeeping uses its own exact arithmetic (see
//! [`crate::model::exponents`]) and does not go through this trait.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used for fields, quadrature and time integration.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + std::iter::Sum<Self>
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossless embedding of `f64` constants; panics only for non-finite input.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite constant representable in scalar type")
    }

    /// Conversion back to `f64` for reports and serialization.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + std::iter::Sum<T>
        + std::fmt::Debug
        + std::fmt::Display
        + std::fmt::LowerExp
        + Send
        + Sync
        + 'static
{
}
