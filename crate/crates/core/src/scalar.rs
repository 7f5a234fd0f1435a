//! Floating-point abstraction shared by the geometry, analysis and simulator code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used throughout the crate: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal; every `f64` is representable (possibly rounded).
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal is representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Clamps an `acos` argument into `[-1, 1]`, tolerating overshoot from rounding.
#[inline]
pub(crate) fn acos_clamped<T: Scalar>(x: T) -> T {
    x.max(-T::one()).min(T::one()).acos()
}

/// Wraps an angle into `[0, 2π)`.
#[inline]
pub(crate) fn wrap_angle<T: Scalar>(a: T) -> T {
    let tau = T::two_pi();
    let w = a % tau;
    let w = if w < T::zero() { w + tau } else { w };
    // `w + tau` can round up to exactly tau for tiny negative inputs.
    if w >= tau {
        T::zero()
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_stays_in_range() {
        use std::f64::consts::TAU;
        for a in [-1e-20, -7.0, 0.0, TAU, 13.0, -TAU] {
            let w = wrap_angle(a);
            assert!((0.0..std::f64::consts::TAU).contains(&w), "{a} -> {w}");
        }
        let w32 = wrap_angle(-1e-9f32);
        assert!((0.0..std::f32::consts::TAU).contains(&w32));
    }

    #[test]
    fn acos_clamped_tolerates_overshoot() {
        assert_eq!(acos_clamped(1.0 + 1e-13), 0.0);
        assert_eq!(acos_clamped(-1.0 - 1e-13), std::f64::consts::PI);
    }
}
