//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` constant into the working scalar.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant representable in scalar type")
}

#[inline]
pub(crate) fn half<T: Scalar>() -> T {
    lit(0.5)
}

#[inline]
pub(crate) fn two<T: Scalar>() -> T {
    lit(2.0)
}

/// Standard normal c.d.f. Evaluated through `erfc` in double precision so the
/// lower tail keeps full relative accuracy.
pub fn std_normal_cdf<T: Scalar>(x: T) -> T {
    let x = x.to_f64().unwrap_or(f64::NAN);
    lit(0.5 * libm::erfc(-x / std::f64::consts::SQRT_2))
}

/// Upper tail `1 - Φ(x)` without cancellation.
pub fn std_normal_sf<T: Scalar>(x: T) -> T {
    std_normal_cdf(-x)
}

/// Logistic function `1 / (1 + e^{-x})`, stable for large `|x|`.
pub fn logistic<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `ln(p / (1 - p))`.
pub fn logit<T: Scalar>(p: T) -> T {
    p.ln() - (-p).ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_points() {
        assert!((std_normal_cdf(0.0_f64) - 0.5).abs() < 1e-15);
        assert!((std_normal_cdf(-1.0_f64) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((std_normal_cdf(1.96_f64) - 0.975_002_104_851_780_1).abs() < 1e-14);
        // deep tail keeps relative precision
        let t = std_normal_cdf(-10.0_f64);
        assert!((t / 7.619_853_024_160_527e-24 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn logistic_is_stable() {
        assert_eq!(logistic(1000.0_f64), 1.0);
        assert_eq!(logistic(-1000.0_f64), 0.0);
        assert!((logistic(0.0_f64) - 0.5).abs() < 1e-16);
        assert!((logit(logistic(0.3_f64)) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn f32_paths_agree_with_f64() {
        let a = std_normal_cdf(0.7_f32) as f64;
        let b = std_normal_cdf(0.7_f64);
        assert!((a - b).abs() < 1e-7);
    }
}
