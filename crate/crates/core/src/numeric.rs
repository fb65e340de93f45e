//! Ring domains the evaluator is generic over.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_traits::{FromPrimitive, ToPrimitive, Zero};

use crate::polynomial::Polynomial;

/// Values with zero, addition, multiplication and an injection of the
/// integers. Operations are pure; a domain may carry context (such as a
/// variable list), which is why they are methods on a domain value.
pub trait RingDomain: Sync {
    type Value: Clone + Send + Sync;

    fn zero(&self) -> Self::Value;
    fn add(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn mul(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    #[allow(clippy::wrong_self_convention)]
    fn from_integer(&self, n: &BigInt) -> Self::Value;

    /// Whether ring identities hold exactly (as opposed to up to rounding).
    fn is_exact(&self) -> bool;

    fn add_assign(&self, a: &mut Self::Value, b: &Self::Value) {
        *a = self.add(a, b);
    }

    fn mul_assign(&self, a: &mut Self::Value, b: &Self::Value) {
        *a = self.mul(a, b);
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IntegerDomain;

impl RingDomain for IntegerDomain {
    type Value = BigInt;

    fn zero(&self) -> BigInt {
        BigInt::zero()
    }

    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }

    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b
    }

    fn from_integer(&self, n: &BigInt) -> BigInt {
        n.clone()
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn add_assign(&self, a: &mut BigInt, b: &BigInt) {
        *a += b;
    }

    fn mul_assign(&self, a: &mut BigInt, b: &BigInt) {
        *a *= b;
    }
}

/// 64-bit floats, round to nearest.
#[derive(Debug, Clone, Copy, Default)]
pub struct FloatDomain;

impl RingDomain for FloatDomain {
    type Value = f64;

    fn zero(&self) -> f64 {
        0.0
    }

    fn add(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }

    fn mul(&self, a: &f64, b: &f64) -> f64 {
        a * b
    }

    fn from_integer(&self, n: &BigInt) -> f64 {
        n.to_f64().unwrap_or(f64::NAN)
    }

    fn is_exact(&self) -> bool {
        false
    }
}

/// A closed interval `[lo, hi]` of floats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    /// `None` if either bound is NaN or `lo > hi`.
    pub fn new(lo: f64, hi: f64) -> Option<Interval> {
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Interval {
        assert!(!x.is_nan(), "NaN interval");
        Interval { lo: x, hi: x }
    }

    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn outward(lo: f64, hi: f64) -> Interval {
        if lo.is_nan() || hi.is_nan() {
            return Interval::ENTIRE;
        }
        Interval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?},{:?}]", self.lo, self.hi)
    }
}

pub fn interval_add(a: Interval, b: Interval) -> Interval {
    Interval::outward(a.lo + b.lo, a.hi + b.hi)
}

pub fn interval_mul(a: Interval, b: Interval) -> Interval {
    let products = [a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi];
    if products.iter().any(|p| p.is_nan()) {
        // 0 * inf
        return Interval::ENTIRE;
    }
    let lo = products.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Interval::outward(lo, hi)
}

/// Outward-rounded intervals. Each operation widens its natively rounded
/// result by one ulp on each side.
#[derive(Debug, Clone, Copy, Default)]
pub struct IntervalDomain;

impl IntervalDomain {
    /// Smallest float interval around `n`: a point when `n` is exactly
    /// representable, otherwise one ulp each side of the nearest float.
    pub fn enclose(n: &BigInt) -> Interval {
        let Some(f) = n.to_f64().filter(|f| f.is_finite()) else {
            return if n.is_zero() {
                Interval::point(0.0)
            } else if n > &BigInt::zero() {
                Interval { lo: f64::MAX, hi: f64::INFINITY }
            } else {
                Interval { lo: f64::NEG_INFINITY, hi: f64::MIN }
            };
        };
        if BigInt::from_f64(f).is_some_and(|back| &back == n) {
            Interval::point(f)
        } else {
            Interval::outward(f, f)
        }
    }
}

impl RingDomain for IntervalDomain {
    type Value = Interval;

    fn zero(&self) -> Interval {
        Interval::point(0.0)
    }

    fn add(&self, a: &Interval, b: &Interval) -> Interval {
        interval_add(*a, *b)
    }

    fn mul(&self, a: &Interval, b: &Interval) -> Interval {
        interval_mul(*a, *b)
    }

    fn from_integer(&self, n: &BigInt) -> Interval {
        IntervalDomain::enclose(n)
    }

    fn is_exact(&self) -> bool {
        false
    }
}

/// Polynomials over a fixed variable list. Evaluating a polynomial at
/// polynomial points composes them.
#[derive(Debug, Clone)]
pub struct PolynomialDomain {
    variables: Vec<String>,
}

impl PolynomialDomain {
    pub fn new(variables: Vec<String>) -> Self {
        PolynomialDomain { variables }
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }
}

impl RingDomain for PolynomialDomain {
    type Value = Polynomial;

    fn zero(&self) -> Polynomial {
        Polynomial::zero(self.variables.clone())
    }

    fn add(&self, a: &Polynomial, b: &Polynomial) -> Polynomial {
        a.checked_add(b)
            .expect("polynomial domain values share the domain's variables")
    }

    fn mul(&self, a: &Polynomial, b: &Polynomial) -> Polynomial {
        a.checked_mul(b)
            .expect("polynomial domain values share the domain's variables")
    }

    fn from_integer(&self, n: &BigInt) -> Polynomial {
        Polynomial::constant(n.clone(), self.variables.clone())
    }

    fn is_exact(&self) -> bool {
        true
    }
}

/// Wraps a domain and counts additions and multiplications.
#[derive(Debug, Default)]
pub struct CountingDomain<D> {
    inner: D,
    adds: AtomicU64,
    muls: AtomicU64,
}

impl<D> CountingDomain<D> {
    pub fn new(inner: D) -> Self {
        CountingDomain {
            inner,
            adds: AtomicU64::new(0),
            muls: AtomicU64::new(0),
        }
    }

    pub fn additions(&self) -> u64 {
        self.adds.load(Ordering::Relaxed)
    }

    pub fn multiplications(&self) -> u64 {
        self.muls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.adds.store(0, Ordering::Relaxed);
        self.muls.store(0, Ordering::Relaxed);
    }
}

impl<D: RingDomain> RingDomain for CountingDomain<D> {
    type Value = D::Value;

    fn zero(&self) -> D::Value {
        self.inner.zero()
    }

    fn add(&self, a: &D::Value, b: &D::Value) -> D::Value {
        self.adds.fetch_add(1, Ordering::Relaxed);
        self.inner.add(a, b)
    }

    fn mul(&self, a: &D::Value, b: &D::Value) -> D::Value {
        self.muls.fetch_add(1, Ordering::Relaxed);
        self.inner.mul(a, b)
    }

    fn from_integer(&self, n: &BigInt) -> D::Value {
        self.inner.from_integer(n)
    }

    fn is_exact(&self) -> bool {
        self.inner.is_exact()
    }

    fn add_assign(&self, a: &mut D::Value, b: &D::Value) {
        self.adds.fetch_add(1, Ordering::Relaxed);
        self.inner.add_assign(a, b);
    }

    fn mul_assign(&self, a: &mut D::Value, b: &D::Value) {
        self.muls.fetch_add(1, Ordering::Relaxed);
        self.inner.mul_assign(a, b);
    }
}
