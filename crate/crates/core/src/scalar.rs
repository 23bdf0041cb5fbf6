//! Scalar types usable for recall, precision and their aggregates.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// A number that can represent ratios of counts: `f32`, `f64`, or an exact
/// rational.
pub trait Fraction: Num + Copy + PartialOrd + ToPrimitive + FromPrimitive + Debug + Send + Sync + 'static {
    /// `numerator / denominator`. `denominator` must be non-zero.
    fn ratio(numerator: usize, denominator: usize) -> Self;

    /// Square root, exact where the type allows it and nearest otherwise.
    fn sqrt(self) -> Self;

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Fraction for f64 {
    fn ratio(numerator: usize, denominator: usize) -> Self {
        numerator as f64 / denominator as f64
    }

    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

impl Fraction for f32 {
    fn ratio(numerator: usize, denominator: usize) -> Self {
        numerator as f32 / denominator as f32
    }

    fn sqrt(self) -> Self {
        f32::sqrt(self)
    }
}

impl Fraction for Ratio<i64> {
    fn ratio(numerator: usize, denominator: usize) -> Self {
        Ratio::new(numerator as i64, denominator as i64)
    }

    fn sqrt(self) -> Self {
        // Perfect squares stay exact.
        let (n, d) = (*self.numer(), *self.denom());
        if let (Some(rn), Some(rd)) = (isqrt_exact(n), isqrt_exact(d)) {
            return Ratio::new(rn, rd);
        }
        Ratio::approximate_float(self.to_f64_lossy().sqrt()).unwrap_or_else(|| Ratio::from_integer(0))
    }
}

fn isqrt_exact(v: i64) -> Option<i64> {
    if v < 0 {
        return None;
    }
    let r = (v as f64).sqrt().round() as i64;
    (r.checked_mul(r) == Some(v)).then_some(r)
}
