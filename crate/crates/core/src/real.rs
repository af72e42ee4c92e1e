//! Scalar abstraction shared by every numerical routine in the crate.

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};

/// Real floating-point scalar (`f32` or `f64`).
///
/// Everything analytical in this crate is written against this trait. The
/// Monte-Carlo simulator and the batch front-end are fixed to `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for [`Real::lit`].
#[inline]
pub(crate) fn c<T: Real>(x: f64) -> T {
    T::lit(x)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

/// Sum of signed terms given as `(sign, ln|term|)`, evaluated as
/// `exp(max) * sum(sign * exp(ln - max))` to keep the magnitudes in range.
pub fn signed_log_sum<T: Real>(terms: &[(T, T)]) -> (T, T) {
    let m = terms
        .iter()
        .map(|&(_, l)| l)
        .fold(T::neg_infinity(), T::max);
    if !m.is_finite() {
        return (T::one(), T::neg_infinity());
    }
    let mut acc = CompensatedSum::new();
    for &(s, l) in terms {
        acc.add(s * (l - m).exp());
    }
    let v = acc.value();
    let sign = if v < T::zero() { -T::one() } else { T::one() };
    (sign, v.abs().ln() + m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::<f64>::new();
        s.add(1.0);
        for _ in 0..1000 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-13).abs() < 1e-25);
    }

    #[test]
    fn signed_log_sum_cancels() {
        let (s, l) = signed_log_sum(&[(1.0f64, 3.0f64.ln()), (-1.0, 5.0f64.ln())]);
        assert_eq!(s, -1.0);
        assert!((l.exp() - 2.0).abs() < 1e-14);
    }
}
