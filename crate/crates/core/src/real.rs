//! Scalar abstraction shared by every numeric routine.
//!
//! `f64` is the default carrier. [`Dd`] (double-double, about 32 significant
//! digits) backs the extended-precision mode used for deep ε-ladders.

use std::fmt::{self, Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

pub trait Real:
    Copy
    + Debug
    + Default
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn pi() -> Self;
    /// Unit roundoff of the carrier.
    fn epsilon() -> f64;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn from_i64(n: i64) -> Self {
        Self::from_f64(n as f64)
    }
    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }
    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { Self::one() / self } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }
    /// Requires a positive base.
    fn powf(self, p: Self) -> Self {
        (p * self.ln()).exp()
    }
    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
    fn is_finite(self) -> bool {
        self.to_f64().is_finite()
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn epsilon() -> f64 {
        f64::EPSILON
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn powf(self, p: Self) -> Self {
        f64::powf(self, p)
    }
}

/// Numeric precision selector for the high-level drivers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    Extended,
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd {
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

#[allow(clippy::excessive_precision)]
impl Dd {
    pub const PI: Dd = Dd { hi: std::f64::consts::PI, lo: 1.224646799147353207e-16 };
    pub const TWO_PI: Dd = Dd { hi: std::f64::consts::TAU, lo: 2.449293598294706414e-16 };
    pub const HALF_PI: Dd = Dd { hi: std::f64::consts::FRAC_PI_2, lo: 6.123233995736766036e-17 };
    pub const LN2: Dd = Dd { hi: std::f64::consts::LN_2, lo: 2.319046813846299558e-17 };
    const EPS: f64 = 4.93038065763132e-32;

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Dd { hi, lo }
    }
    pub fn hi(self) -> f64 {
        self.hi
    }
    pub fn lo(self) -> f64 {
        self.lo
    }

    fn mul_f64(self, b: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * b);
        Dd { hi, lo }
    }

    fn sqr(self) -> Dd {
        let (p1, p2) = two_prod(self.hi, self.hi);
        let (hi, lo) = quick_two_sum(p1, p2 + 2.0 * self.hi * self.lo + self.lo * self.lo);
        Dd { hi, lo }
    }

    fn ldexp(self, e: i32) -> Dd {
        let f = 2f64.powi(e);
        Dd { hi: self.hi * f, lo: self.lo * f }
    }

    fn round(self) -> Dd {
        let hi = self.hi.round();
        if hi == self.hi {
            let (hi, lo) = quick_two_sum(hi, self.lo.round());
            Dd { hi, lo }
        } else {
            Dd { hi, lo: 0.0 }
        }
    }

    /// Taylor series for |t| <= π/4.
    fn sin_cos_reduced(t: Dd) -> (Dd, Dd) {
        let t2 = t.sqr();
        let mut s = t;
        let mut term = t;
        let mut i = 1.0;
        loop {
            term = -(term * t2) / Dd::from_f64((i + 1.0) * (i + 2.0));
            s += term;
            i += 2.0;
            if term.hi.abs() < Self::EPS * 1e-2 || i > 80.0 {
                break;
            }
        }
        let mut c = Dd::one();
        let mut term = Dd::one();
        let mut i = 0.0;
        loop {
            term = -(term * t2) / Dd::from_f64((i + 1.0) * (i + 2.0));
            c += term;
            i += 2.0;
            if term.hi.abs() < Self::EPS * 1e-2 || i > 80.0 {
                break;
            }
        }
        (s, c)
    }

    fn sin_cos(self) -> (Dd, Dd) {
        if self.hi == 0.0 {
            return (Dd::zero(), Dd::one());
        }
        let z = (self / Dd::TWO_PI).round();
        let r = self - Dd::TWO_PI * z;
        let j = (r / Dd::HALF_PI).round();
        let t = r - Dd::HALF_PI * j;
        let (s, c) = Self::sin_cos_reduced(t);
        match j.hi as i64 {
            0 => (s, c),
            1 => (c, -s),
            -1 => (-c, s),
            _ => (-s, -c),
        }
    }
}

impl Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e}, {:e})", self.hi, self.lo)
    }
}

impl Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Display::fmt(&self.hi, f)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(std::cmp::Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let (hi, lo) = quick_two_sum(p1, p2 + (self.hi * b.lo + self.lo * b.hi));
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        Dd { hi: q1, lo: q2 } + Dd::from_f64(q3)
    }
}

macro_rules! assign_ops {
    ($($tr:ident $m:ident $op:tt),*) => {$(
        impl $tr for Dd {
            #[inline]
            fn $m(&mut self, b: Dd) { *self = *self $op b; }
        }
    )*};
}
assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /);

impl Sum for Dd {
    fn sum<I: Iterator<Item = Dd>>(iter: I) -> Dd {
        iter.fold(Dd::zero(), |a, b| a + b)
    }
}

impl Real for Dd {
    fn from_f64(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { Dd::zero() } else { Dd::from_f64(f64::NAN) };
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let corr = (self - Dd::from_f64(ax).sqr()).hi * (x * 0.5);
        let (hi, lo) = two_sum(ax, corr);
        Dd { hi, lo }
    }
    fn sin(self) -> Self {
        self.sin_cos().0
    }
    fn cos(self) -> Self {
        self.sin_cos().1
    }
    fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::zero();
        }
        let m = (self.hi / Dd::LN2.hi + 0.5).floor();
        let r = (self - Dd::LN2.mul_f64(m)).ldexp(-9);
        // exp(r) - 1 by Taylor, then undo the 2^-9 scaling by squaring
        let mut s = r;
        let mut term = r;
        let mut k = 2.0;
        loop {
            term = term * r / Dd::from_f64(k);
            s += term;
            k += 1.0;
            if term.hi.abs() < Self::EPS * 1e-3 || k > 40.0 {
                break;
            }
        }
        for _ in 0..9 {
            s = s.mul_f64(2.0) + s.sqr();
        }
        (s + Dd::one()).ldexp(m as i32)
    }
    fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::from_f64(f64::NAN);
        }
        let x = Dd::from_f64(self.hi.ln());
        x + self * (-x).exp() - Dd::one()
    }
    fn pi() -> Self {
        Dd::PI
    }
    fn epsilon() -> f64 {
        Self::EPS
    }
    fn from_i64(n: i64) -> Self {
        let hi = n as f64;
        let lo = (n - hi as i64) as f64;
        Dd::new(hi, lo)
    }
}

/// Lifts an `f64` literal into the carrier.
#[inline]
pub fn c<T: Real>(v: f64) -> T {
    T::from_f64(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Dd, hi: f64, lo: f64) -> bool {
        let d = a - Dd::new(hi, lo);
        d.abs().to_f64() <= 1e-30 * hi.abs().max(1.0)
    }

    #[test]
    fn division_keeps_low_word() {
        let q = Dd::one() / Dd::from_f64(3.0);
        assert!(close(q * Dd::from_f64(3.0), 1.0, 0.0));
        assert!(q.lo() != 0.0);
    }

    #[test]
    fn transcendental_values_match_reference_digits() {
        // references from a 40-digit evaluation
        let s = Dd::from_f64(0.3).sin();
        assert!((s - Dd::new(0.29552020666133955, 1.8315357276792536e-17)).abs().to_f64() < 1e-31);
        let two = Dd::from_f64(2.0);
        let r = two.sqrt();
        assert!((r * r - two).abs().to_f64() < 1e-31);
        let e = Dd::one().exp();
        assert!((e.ln() - Dd::one()).abs().to_f64() < 1e-31);
        let x = Dd::from_f64(4.1);
        let p = x.powf(Dd::from_f64(-1.0) / Dd::from_f64(3.0));
        assert!((p.powi(3) * x - Dd::one()).abs().to_f64() < 1e-30);
    }

    #[test]
    fn pythagorean_identity_over_wide_range() {
        for k in -40..40 {
            let x = Dd::from_f64(k as f64 * 0.37) + Dd::from_f64(1e-20);
            let (s, c) = (x.sin(), x.cos());
            assert!((s * s + c * c - Dd::one()).abs().to_f64() < 1e-30, "{k}");
            assert!((s.to_f64() - (k as f64 * 0.37).sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn exp_matches_f64_and_inverts() {
        for k in -30..30 {
            let x = Dd::from_f64(k as f64 * 0.71);
            let e = x.exp();
            assert!((e.to_f64() / (k as f64 * 0.71).exp() - 1.0).abs() < 1e-15);
            assert!((e.ln() - x).abs().to_f64() < 1e-30 * (1.0 + x.abs().to_f64()));
        }
    }
}
