//! Floating-point abstraction for the numerical core.
//!
//! Every algorithm in this crate is generic over [`Scalar`], which bundles the
//! arithmetic, conversion, and sampling capabilities the pipeline needs.  Only
//! `f32` and `f64` implement it; `f64` is the precision the command line tool
//! and the type aliases at the crate root use.

use std::fmt;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::distr::uniform::SampleUniform;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Floating-point scalar usable by the samplers and the linear algebra core.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + SampleUniform
    + ScalarOperand
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + for<'a> Sum<&'a Self>
    + fmt::Display
    + fmt::Debug
    + fmt::LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, for tolerances and literal constants.
    #[inline]
    fn cast(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 constant must convert")
    }

    /// One standard normal draw.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One `Gamma(shape, 1)` draw.  `shape` must be finite and positive.
    fn standard_gamma<R: Rng + ?Sized>(rng: &mut R, shape: Self) -> Self;

    /// One uniform draw from `[0, 1)`.
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn standard_gamma<R: Rng + ?Sized>(rng: &mut R, shape: Self) -> Self {
        Gamma::new(shape, 1.0)
            .expect("gamma shape must be positive and finite")
            .sample(rng)
    }

    #[inline]
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f64>()
    }
}

impl Scalar for f32 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn standard_gamma<R: Rng + ?Sized>(rng: &mut R, shape: Self) -> Self {
        Gamma::new(shape, 1.0f32)
            .expect("gamma shape must be positive and finite")
            .sample(rng)
    }

    #[inline]
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f32>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cast_round_trips_simple_constants() {
        assert_eq!(<f64 as Scalar>::cast(0.5), 0.5);
        assert_eq!(<f32 as Scalar>::cast(0.25), 0.25f32);
    }

    #[test]
    fn gamma_draws_are_positive_and_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x: f64 = Scalar::standard_gamma(&mut a, 0.37);
            let y: f64 = Scalar::standard_gamma(&mut b, 0.37);
            assert!(x > 0.0);
            assert_eq!(x, y);
        }
    }

    #[test]
    fn unit_uniform_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let u: f64 = Scalar::unit_uniform(&mut rng);
            assert!((0.0..1.0).contains(&u));
        }
    }
}
