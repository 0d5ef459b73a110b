use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the geometric core is generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Never fails for the supported float types.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Wraps an angle into the half-open interval `[-pi, pi)`.
pub fn wrap_angle<T: Scalar>(x: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut y = (x + T::PI()) % two_pi;
    if y < T::zero() {
        y = y + two_pi;
    }
    let out = y - T::PI();
    // `%` can round up to exactly `pi`
    if out >= T::PI() {
        out - two_pi
    } else {
        out
    }
}

/// Signed distance between two angles, in `[-pi, pi)`.
pub fn angle_diff<T: Scalar>(a: T, b: T) -> T {
    wrap_angle(a - b)
}
