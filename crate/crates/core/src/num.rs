//! Scalar abstraction shared by the analytic modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar the analytic model is written against: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    fn lit(value: f64) -> Self;

    /// Widens to `f64` for reporting and for numerics that only exist in `f64`.
    fn to_f64_lossy(self) -> f64;
}

macro_rules! impl_real {
    ($f:ty) => {
        impl Real for $f {
            #[inline]
            fn lit(value: f64) -> Self {
                value as $f
            }

            #[inline]
            fn to_f64_lossy(self) -> f64 {
                self as f64
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Physical constants (SI, exact 2019 definitions).
pub mod consts {
    /// Planck constant h, J·s.
    pub const PLANCK: f64 = 6.626_070_15e-34;
    /// Boltzmann constant, J/K.
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    /// Speed of light in vacuum, m/s.
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
}

/// `10·log10(x)`.
pub fn to_db<R: Real>(x: R) -> R {
    R::lit(10.0) * x.log10()
}

/// Inverse of [`to_db`].
pub fn from_db<R: Real>(db: R) -> R {
    R::lit(10.0).powf(db / R::lit(10.0))
}
