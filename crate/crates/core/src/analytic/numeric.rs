//! Scalar arithmetic for the closed-form evaluator: a compensated summator
//! and a double-double type used when the alternating binomial sums cancel
//! beyond what `f64` can carry.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Floating scalar the closed forms are generic over.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + PartialOrd
{
    /// Unit roundoff of the representation.
    const UNIT_ROUNDOFF: f64;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn exp(self) -> Self;
    fn exp_m1(self) -> Self;

    fn abs(self) -> Self {
        if self < Self::from_f64(0.0) {
            -self
        } else {
            self
        }
    }

    fn powi(self, n: u32) -> Self {
        let mut acc = Self::from_f64(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
}

impl Real for f64 {
    const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn exp_m1(self) -> Self {
        f64::exp_m1(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn powi(self, n: u32) -> Self {
        f64::powi(self, n as i32)
    }
}

/// Neumaier's improved Kahan summation, generic over the scalar.
#[derive(Debug, Clone, Copy)]
pub struct NeumaierSum<R: Real> {
    sum: R,
    compensation: R,
    abs_sum: f64,
}

impl<R: Real> Default for NeumaierSum<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Real> NeumaierSum<R> {
    pub fn new() -> Self {
        Self { sum: R::from_f64(0.0), compensation: R::from_f64(0.0), abs_sum: 0.0 }
    }

    pub fn add(&mut self, x: R) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation = self.compensation + ((self.sum - t) + x);
        } else {
            self.compensation = self.compensation + ((x - t) + self.sum);
        }
        self.sum = t;
        self.abs_sum += x.to_f64().abs();
    }

    pub fn value(&self) -> R {
        self.sum + self.compensation
    }

    /// Sum of the magnitudes of every term added so far.
    pub fn abs_sum(&self) -> f64 {
        self.abs_sum
    }
}

impl<R: Real> FromIterator<R> for NeumaierSum<R> {
    fn from_iter<I: IntoIterator<Item = R>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`, giving about 106
/// significant bits.
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

// ln 2 to double-double precision.
const LN2_HI: f64 = 6.931_471_805_599_452_862e-1;
const LN2_LO: f64 = 2.319_046_813_846_299_558e-17;

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Self { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn non_finite(hi: f64) -> Self {
        Self { hi, lo: 0.0 }
    }

    /// Exact scaling by `2^k`.
    fn ldexp(self, k: i32) -> Self {
        let half = k / 2;
        let a = 2f64.powi(half);
        let b = 2f64.powi(k - half);
        Self { hi: self.hi * a * b, lo: self.lo * a * b }
    }

    /// `exp(r) - 1` for `|r| <= ln2 / 2`, accurate to relative precision.
    fn expm1_reduced(r: Self) -> Self {
        const SQUARINGS: i32 = 9;
        let s = r.ldexp(-SQUARINGS);
        let mut term = s;
        let mut sum = s;
        for n in 2..30 {
            term = term * s / Self::from(n as f64);
            sum = sum + term;
            if term.hi.abs() <= 1e-36 * sum.hi.abs() {
                break;
            }
        }
        // e^{2x} - 1 = (e^x - 1)(e^x - 1 + 2)
        for _ in 0..SQUARINGS {
            sum = sum * (sum + Self::from(2.0));
        }
        sum
    }

    /// Splits `x = k ln2 + r` with `|r| <= ln2 / 2`.
    fn reduce(self) -> (i32, Self) {
        let k = (self.hi / LN2_HI).round();
        let r = self - Self { hi: LN2_HI, lo: LN2_LO } * Self::from(k);
        (k as i32, r)
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, b.hi);
        if !s1.is_finite() {
            return Self::non_finite(s1);
        }
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Self { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p1, p2) = two_prod(self.hi, b.hi);
        if !p1.is_finite() {
            return Self::non_finite(p1);
        }
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        Self { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() {
            return Self::non_finite(q1);
        }
        let r = self - b * Self::from(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Self::from(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::from(q3)
    }
}

impl PartialEq for DoubleDouble {
    fn eq(&self, other: &Self) -> bool {
        self.hi == other.hi && self.lo == other.lo
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl Real for DoubleDouble {
    const UNIT_ROUNDOFF: f64 = 4.930_380_657_631_324e-32; // 2^-104

    fn from_f64(x: f64) -> Self {
        Self::from(x)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn exp(self) -> Self {
        if self.hi > 709.78 {
            return Self::non_finite(f64::INFINITY);
        }
        if self.hi < -745.2 {
            return Self::ZERO;
        }
        if self.hi.is_nan() {
            return Self::non_finite(f64::NAN);
        }
        let (k, r) = self.reduce();
        (Self::expm1_reduced(r) + Self::ONE).ldexp(k)
    }

    fn exp_m1(self) -> Self {
        if self.hi.abs() <= 0.5 * LN2_HI {
            return Self::expm1_reduced(self);
        }
        if self.hi < -745.2 {
            return -Self::ONE;
        }
        self.exp() - Self::ONE
    }

    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // e = 2.71828182845904523536028747135266249775724709369995...
    const E_HI: f64 = 2.718_281_828_459_045;
    const E_LO: f64 = 1.445_646_891_729_250_2e-16;

    fn rel(a: DoubleDouble, b: DoubleDouble) -> f64 {
        ((a - b).to_f64() / b.to_f64()).abs()
    }

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let s: NeumaierSum<f64> = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(s.value(), 2.0);
        assert_eq!(s.abs_sum(), 2.0 + 2e100);
    }

    #[test]
    fn exp_one_matches_reference_digits() {
        let e = DoubleDouble::ONE.exp();
        assert!(rel(e, DoubleDouble::new(E_HI, E_LO)) < 1e-30);
    }

    #[test]
    fn expm1_tiny_argument_series() {
        // expm1(x) = x + x^2/2 + x^3/6 + x^4/24 for x = 1e-10, accurate far below 1e-32
        let x = DoubleDouble::from(1e-10);
        let series = x + x * x / DoubleDouble::from(2.0) + x * x * x / DoubleDouble::from(6.0)
            + x * x * x * x / DoubleDouble::from(24.0);
        assert!(rel(x.exp_m1(), series) < 1e-30);
    }

    #[test]
    fn exp_of_large_negative_underflows() {
        assert_eq!(DoubleDouble::from(-800.0).exp().to_f64(), 0.0);
        assert!(DoubleDouble::from(800.0).exp().to_f64().is_infinite());
        assert_eq!(DoubleDouble::from(-800.0).exp_m1().to_f64(), -1.0);
    }

    #[test]
    fn division_round_trip() {
        let third = DoubleDouble::ONE / DoubleDouble::from(3.0);
        let back = third * DoubleDouble::from(3.0);
        assert!((back - DoubleDouble::ONE).to_f64().abs() < 1e-31);
    }

    #[test]
    fn f64_real_impl_is_native() {
        assert_eq!(<f64 as Real>::exp(1.0), 1f64.exp());
        assert_eq!(<f64 as Real>::powi(2.0, 10), 1024.0);
        assert_eq!(Real::abs(-3.0f64), 3.0);
    }

    proptest! {
        #[test]
        fn exp_is_multiplicative(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let (x, y) = (DoubleDouble::from(a), DoubleDouble::from(b));
            let lhs = (x + y).exp();
            let rhs = x.exp() * y.exp();
            prop_assert!(rel(lhs, rhs) < 1e-29);
        }

        #[test]
        fn exp_matches_f64(a in -700.0f64..700.0) {
            let dd = DoubleDouble::from(a).exp().to_f64();
            prop_assert!(((dd - a.exp()) / a.exp()).abs() < 4e-16);
        }

        #[test]
        fn expm1_consistent_with_exp(a in -20.0f64..20.0) {
            let x = DoubleDouble::from(a);
            let lhs = x.exp_m1() + DoubleDouble::ONE;
            let scale = x.exp().to_f64().max(1.0);
            prop_assert!((lhs - x.exp()).to_f64().abs() < 1e-30 * scale);
        }

        #[test]
        fn add_sub_round_trip(a in -1e10f64..1e10, b in -1e10f64..1e10, c in -1.0f64..1.0) {
            let x = DoubleDouble::new(a, c * 1e-8);
            let y = DoubleDouble::from(b);
            let back = (x + y) - y;
            prop_assert!((back - x).to_f64().abs() <= 1e-30 * a.abs().max(b.abs()).max(1.0));
        }
    }
}
