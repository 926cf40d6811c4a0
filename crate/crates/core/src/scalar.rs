//! Scalar abstraction shared by every floating-point module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real field used for fiber maps, matrices and exponent estimates.
///
/// Implemented for `f32` and `f64`. Base dynamics is exact (integer and
/// fixed-point arithmetic) and only meets this trait through [`Real::lit`].
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Default + Debug + Display + Sum + Send + Sync + 'static
{
    /// Short type name used in reports.
    const NAME: &'static str;

    /// Convert an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance for iterative solvers: `1e-12` in double precision, a
    /// small multiple of machine epsilon otherwise.
    #[inline]
    fn solver_tol() -> Self {
        let e = Self::epsilon() * Self::lit(64.0);
        e.max(Self::lit(1e-12))
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Real for f64 {
    const NAME: &'static str = "f64";
}

impl Real for f32 {
    const NAME: &'static str = "f32";
}

/// Reduce to `[0, 1)`.
#[inline]
pub fn frac<T: Real>(x: T) -> T {
    let f = x - x.floor();
    if f >= T::one() {
        T::zero()
    } else {
        f
    }
}

/// Reduce a displacement to `[-1/2, 1/2)`.
#[inline]
pub fn wrap_half<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    x - (x + half).floor()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_and_wrap() {
        assert_eq!(frac(1.25_f64), 0.25);
        assert_eq!(frac(-0.25_f64), 0.75);
        assert_eq!(wrap_half(0.75_f64), -0.25);
        assert_eq!(wrap_half(-0.6_f32), 0.39999998);
        assert!(f64::solver_tol() <= 1e-12 + f64::EPSILON);
        assert!(f32::solver_tol() > 1e-6);
    }
}
