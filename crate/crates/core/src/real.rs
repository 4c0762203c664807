use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar the geometric kernel is written against.
///
/// The tolerance ladder is carried per type: the double-precision values are
/// the ones the invariants are stated in, single precision gets a coarser
/// ladder so the same checks stay meaningful.
pub trait Real:
    Float + FromPrimitive + NumAssign + Default + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Sheet and null-cone residual allowed after renormalization.
    const SHEET_TOL: Self;
    /// Round-trip tolerance (exp/log, isometry inverse).
    const ROUNDTRIP_TOL: Self;
    /// Slack for validating matrices and vectors handed in from outside.
    const INPUT_TOL: Self;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const SHEET_TOL: f64 = 1e-12;
    const ROUNDTRIP_TOL: f64 = 1e-10;
    const INPUT_TOL: f64 = 1e-8;
}

impl Real for f32 {
    const SHEET_TOL: f32 = 1e-5;
    const ROUNDTRIP_TOL: f32 = 1e-4;
    const INPUT_TOL: f32 = 1e-3;
}
