//! Scalar abstraction for the numeric core.
//!
//! All algorithm and norm machinery is generic over [`Scalar`], so the same
//! code runs in `f32` or `f64`. The CLI and the test suites instantiate `f64`.

use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type usable throughout the library.
pub trait Scalar: nalgebra::RealField + FromPrimitive + ToPrimitive + Copy {
    /// Lossy conversion from `f64`, for literals and tolerances.
    fn from_config(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal must convert")
    }

    /// Lossy conversion to `f64`, for traces and reports.
    fn to_config(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl<T> Scalar for T where T: nalgebra::RealField + FromPrimitive + ToPrimitive + Copy {}
