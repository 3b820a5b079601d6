//! Real scalar abstraction so the numeric kernel works at `f64` and `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the crate is generic over.
///
/// `f64` is the production type; `f32` is supported mainly to keep precision
/// assumptions explicit. Every tolerance used by the crate is an associated
/// constant here, so thresholds live in one place.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Structural validation: hermiticity, unit trace, positivity.
    const STRUCTURAL_TOL: Self;
    /// Numerical identities: eigenvalue sums, reconstructions, bound slack.
    const IDENTITY_TOL: Self;
    /// Unitarity checks on gates.
    const UNITARY_TOL: Self;
    /// Jacobi convergence threshold on the off-diagonal Frobenius mass.
    const JACOBI_TOL: Self;
    /// "Zero up to accumulated roundoff", e.g. no-crosstalk identities.
    const NULL_TOL: Self;

    /// Conversion from an `f64` literal inside generic code.
    fn real(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const STRUCTURAL_TOL: Self = 1e-10;
    const IDENTITY_TOL: Self = 1e-9;
    const UNITARY_TOL: Self = 1e-12;
    const JACOBI_TOL: Self = 1e-14;
    const NULL_TOL: Self = 1e-12;
}

impl Scalar for f32 {
    const STRUCTURAL_TOL: Self = 1e-5;
    const IDENTITY_TOL: Self = 1e-4;
    const UNITARY_TOL: Self = 1e-6;
    const JACOBI_TOL: Self = 1e-6;
    const NULL_TOL: Self = 1e-5;
}
