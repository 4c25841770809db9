//! Real scalar abstraction for the linear-algebra and state layers.

use nalgebra as na;
use num_traits as nt;

/// Floating point types the matrix code is generic over.
///
/// The tolerance constants are per precision: the `f64` values are the ones
/// the library documents; the `f32` ones are scaled to single precision.
pub trait Real:
    na::RealField + Copy + nt::FromPrimitive + nt::ToPrimitive + nt::float::FloatConst
{
    /// Absolute tolerance for Hermiticity, unitarity and density checks.
    const VALIDATION_TOL: f64;
    /// Relative tolerance (to the spectral radius) for merging eigenvalues.
    const DEGENERACY_TOL: f64;
    /// Coefficients with magnitude at or below this are treated as zero.
    const PRUNE_TOL: f64;

    #[inline]
    fn lit(x: f64) -> Self {
        // every f64 is representable (possibly rounded) in f32/f64
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("real scalar converts to f64")
    }
}

impl Real for f64 {
    const VALIDATION_TOL: f64 = 1e-10;
    const DEGENERACY_TOL: f64 = 1e-9;
    const PRUNE_TOL: f64 = 1e-12;
}

impl Real for f32 {
    const VALIDATION_TOL: f64 = 1e-4;
    const DEGENERACY_TOL: f64 = 1e-4;
    const PRUNE_TOL: f64 = 1e-6;
}
