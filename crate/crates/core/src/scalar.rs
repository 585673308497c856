use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar the numeric core is written against: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the type cannot represent
    /// it at all, which never happens for `f32`/`f64`.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("count representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
