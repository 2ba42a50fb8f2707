//! Floating-point abstraction so the whole simulator can run on `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;

/// Scalar type the simulator is generic over: `f32` or `f64`.
///
/// Randomness enters through the two sampling methods so callers never need
/// distribution trait bounds of their own.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// One standard-normal draw from the given stream.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform draw over `[lo, hi]`. A degenerate interval (`lo == hi`)
    /// returns `lo` without consuming randomness.
    fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self;

    /// Uniform draw over `[0, 1)`.
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
        debug_assert!(lo <= hi);
        if lo < hi {
            rng.random_range(lo..=hi)
        } else {
            lo
        }
    }

    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

impl Scalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
        debug_assert!(lo <= hi);
        if lo < hi {
            rng.random_range(lo..=hi)
        } else {
            lo
        }
    }

    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

/// Shorthand for `f64` literals in generic numeric code.
#[inline]
pub fn real<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("finite literal")
}

/// Count-to-scalar conversion (vehicle counts, step indices).
#[inline]
pub fn count<F: Scalar>(n: usize) -> F {
    F::from_usize(n).expect("count fits scalar")
}

/// Arithmetic mean; zero for an empty slice.
pub fn mean<F: Scalar>(xs: &[F]) -> F {
    if xs.is_empty() {
        F::zero()
    } else {
        xs.iter().copied().sum::<F>() / count(xs.len())
    }
}
