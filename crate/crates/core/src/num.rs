//! Number types used throughout the crate.
//!
//! [`Rational`] is an exact rational that stays on machine words while the
//! numerator and denominator fit in `i64` and transparently promotes to a
//! [`BigRational`] otherwise, so precision is never lost. [`Surd`] covers the
//! handful of places where an irrational parameter such as `1/√5` must be
//! compared exactly. Both, along with `f64`, implement [`Scalar`], the field
//! interface the LP kernel and the checks are written against.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// Tolerance used by `f64` comparisons.
pub const FLOAT_TOL: f64 = 1e-9;

#[derive(Clone)]
enum Repr {
    /// Reduced, denominator positive, `|num| <= i64::MAX`.
    Small(i64, i64),
    /// Only used when the value does not fit `Small`.
    Big(Box<BigRational>),
}

/// Exact rational number with a word-sized fast path.
#[derive(Clone)]
pub struct Rational(Repr);

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

impl Rational {
    pub fn zero() -> Self {
        Rational(Repr::Small(0, 1))
    }

    pub fn one() -> Self {
        Rational(Repr::Small(1, 1))
    }

    pub fn from_big_int(n: BigInt) -> Self {
        Self::from_big(BigRational::from_integer(n))
    }

    pub fn from_integer(n: i64) -> Self {
        if n == i64::MIN {
            return Self::from_big(BigRational::from_integer(BigInt::from(n)));
        }
        Rational(Repr::Small(n, 1))
    }

    /// `num / den`, reduced. Panics on a zero denominator.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_i128(num as i128, den as i128)
    }

    fn from_i128(num: i128, den: i128) -> Self {
        debug_assert!(den != 0);
        let (mut n, mut d) = if den < 0 { (-num, -den) } else { (num, den) };
        if n == 0 {
            return Self::zero();
        }
        let g = gcd_u128(n.unsigned_abs(), d as u128) as i128;
        if g > 1 {
            n /= g;
            d /= g;
        }
        if n.abs() <= i64::MAX as i128 && d <= i64::MAX as i128 {
            Rational(Repr::Small(n as i64, d as i64))
        } else {
            Rational(Repr::Big(Box::new(BigRational::new_raw(
                BigInt::from(n),
                BigInt::from(d),
            ))))
        }
    }

    /// Canonicalises a big value, demoting it when it fits in words.
    pub fn from_big(r: BigRational) -> Self {
        if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
            if n != i64::MIN {
                return Rational(Repr::Small(n, d));
            }
        }
        Rational(Repr::Big(Box::new(r)))
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(b) => (**b).clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, _) => BigInt::from(*n),
            Repr::Big(b) => b.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(_, d) => BigInt::from(*d),
            Repr::Big(b) => b.denom().clone(),
        }
    }

    /// Word-sized `(numerator, denominator)` when available.
    pub fn as_small(&self) -> Option<(i64, i64)> {
        match self.0 {
            Repr::Small(n, d) => Some((n, d)),
            Repr::Big(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(b) => b.is_integer(),
        }
    }

    pub fn signum(&self) -> i32 {
        match &self.0 {
            Repr::Small(n, _) => n.signum() as i32,
            Repr::Big(b) => {
                if b.is_positive() {
                    1
                } else if b.is_negative() {
                    -1
                } else {
                    0
                }
            }
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    pub fn abs(&self) -> Rational {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Rational {
        match &self.0 {
            Repr::Small(n, d) => {
                assert!(*n != 0, "reciprocal of zero");
                Self::from_i128(*d as i128, *n as i128)
            }
            Repr::Big(b) => Self::from_big(b.recip()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(n, d) => *n as f64 / *d as f64,
            Repr::Big(b) => b.to_f64().unwrap_or_else(|| {
                // fall back to scaled division for huge operands
                let n = b.numer().to_f64().unwrap_or(f64::NAN);
                let d = b.denom().to_f64().unwrap_or(f64::NAN);
                n / d
            }),
        }
    }

    /// Exact value of a finite `f64` (every finite double is a dyadic rational).
    pub fn from_f64(x: f64) -> Option<Rational> {
        BigRational::from_float(x).map(Self::from_big)
    }

    /// Parses `a`, `a/b`, or a decimal such as `-0.125` or `1e-3` exactly.
    /// The boolean reports whether decimal notation was used.
    pub fn parse_exact(s: &str) -> Result<(Rational, bool), Error> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a number: {s:?}"));
        if s.is_empty() {
            return Err(bad());
        }
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            return Ok((Self::from_big(BigRational::new(n, d)), false));
        }
        if let Ok(n) = s.parse::<BigInt>() {
            return Ok((Self::from_big(BigRational::from_integer(n)), false));
        }
        // decimal with optional exponent
        let (mantissa, exp) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let (neg, digits) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let all: BigInt = format!("0{int_part}{frac_part}").parse().map_err(|_| bad())?;
        let scale = exp - frac_part.len() as i32;
        let ten = BigInt::from(10u32);
        let mut value = if scale >= 0 {
            BigRational::from_integer(all * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(all, num_traits::pow(ten, (-scale) as usize))
        };
        if neg {
            value = -value;
        }
        Ok((Self::from_big(value), true))
    }

    /// Smallest common denominator of a slice of rationals.
    pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
        let mut acc = BigInt::one();
        for v in values {
            match &v.0 {
                Repr::Small(_, d) => {
                    if *d != 1 {
                        acc = acc.lcm(&BigInt::from(*d));
                    }
                }
                Repr::Big(b) => acc = acc.lcm(b.denom()),
            }
        }
        acc
    }

    fn add_impl(&self, o: &Rational) -> Rational {
        match (&self.0, &o.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                if b == d {
                    Self::from_i128(*a as i128 + *c as i128, *b as i128)
                } else {
                    Self::from_i128(
                        *a as i128 * *d as i128 + *c as i128 * *b as i128,
                        *b as i128 * *d as i128,
                    )
                }
            }
            _ => Self::from_big(self.to_big() + o.to_big()),
        }
    }

    fn sub_impl(&self, o: &Rational) -> Rational {
        match (&self.0, &o.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                if b == d {
                    Self::from_i128(*a as i128 - *c as i128, *b as i128)
                } else {
                    Self::from_i128(
                        *a as i128 * *d as i128 - *c as i128 * *b as i128,
                        *b as i128 * *d as i128,
                    )
                }
            }
            _ => Self::from_big(self.to_big() - o.to_big()),
        }
    }

    fn mul_impl(&self, o: &Rational) -> Rational {
        match (&self.0, &o.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                if *a == 0 || *c == 0 {
                    return Self::zero();
                }
                // cross-reduce first so the product stays small
                let g1 = gcd_u64(a.unsigned_abs(), *d as u64) as i64;
                let g2 = gcd_u64(c.unsigned_abs(), *b as u64) as i64;
                let n = (*a / g1) as i128 * (*c / g2) as i128;
                let m = (*b / g2) as i128 * (*d / g1) as i128;
                if n.abs() <= i64::MAX as i128 && m <= i64::MAX as i128 {
                    Rational(Repr::Small(n as i64, m as i64))
                } else {
                    Self::from_i128(n, m)
                }
            }
            _ => Self::from_big(self.to_big() * o.to_big()),
        }
    }

    fn div_impl(&self, o: &Rational) -> Rational {
        assert!(!o.is_zero(), "division by zero");
        match (&self.0, &o.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                if *a == 0 {
                    return Self::zero();
                }
                let g1 = gcd_u64(a.unsigned_abs(), c.unsigned_abs()) as i64;
                let g2 = gcd_u64(*b as u64, *d as u64) as i64;
                let n = (*a / g1) as i128 * (*d / g2) as i128;
                let m = (*b / g2) as i128 * (*c / g1) as i128;
                Self::from_i128(n, m)
            }
            _ => Self::from_big(self.to_big() / o.to_big()),
        }
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::zero()
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => a == c && b == d,
            (Repr::Big(x), Repr::Big(y)) => x == y,
            // canonical form: a value is Big only when it cannot be Small
            _ => false,
        }
    }
}

impl Eq for Rational {}

impl Hash for Rational {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small(n, d) => {
                0u8.hash(state);
                n.hash(state);
                d.hash(state);
            }
            Repr::Big(b) => {
                1u8.hash(state);
                b.hash(state);
            }
        }
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, 1) => write!(f, "{n}"),
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(b) if b.is_integer() => write!(f, "{}", b.numer()),
            Repr::Big(b) => write!(f, "{}/{}", b.numer(), b.denom()),
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rational::parse_exact(s).map(|(r, _)| r)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl serde::Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $imp:ident) => {
        impl $tr<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, o: &Rational) -> Rational {
                self.$imp(o)
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $method(self, o: Rational) -> Rational {
                (&self).$imp(&o)
            }
        }
        impl $tr<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, o: &Rational) -> Rational {
                (&self).$imp(o)
            }
        }
        impl $tr<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, o: Rational) -> Rational {
                self.$imp(&o)
            }
        }
    };
}

forward_binop!(Add, add, add_impl);
forward_binop!(Sub, sub, sub_impl);
forward_binop!(Mul, mul, mul_impl);
forward_binop!(Div, div, div_impl);

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match &self.0 {
            Repr::Small(n, d) => Rational(Repr::Small(-n, *d)),
            Repr::Big(b) => Rational::from_big(-(**b).clone()),
        }
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

impl<'a> std::iter::Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

/// Ordered field interface shared by the exact and floating-point paths.
///
/// Sign tests on `f64` use [`FLOAT_TOL`]; the exact types compare exactly.
pub trait Scalar: Clone + fmt::Debug + fmt::Display + PartialEq + Send + Sync + 'static {
    /// Whether arithmetic is exact (no tolerance in comparisons).
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Sign with tolerance for inexact types: -1, 0 or 1.
    fn sign(&self) -> i32;

    fn is_zero(&self) -> bool {
        self.sign() == 0
    }
    fn is_positive(&self) -> bool {
        self.sign() > 0
    }
    fn is_negative(&self) -> bool {
        self.sign() < 0
    }
    /// Comparison through the sign of the difference.
    fn compare(&self, o: &Self) -> Ordering {
        self.sub(o).sign().cmp(&0)
    }
    fn from_int(n: i64) -> Self {
        Self::from_rational(&Rational::from_integer(n))
    }
    /// `self -= a * b`, the inner update of every pivot.
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self = self.sub(&a.mul(b));
    }
    fn add_assign(&mut self, o: &Self) {
        *self = Scalar::add(self, o);
    }
    /// Exact rational view, when the type has one.
    fn as_rational(&self) -> Option<Rational> {
        None
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Rational::zero()
    }
    fn one() -> Self {
        Rational::one()
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }
    fn add(&self, o: &Self) -> Self {
        self.add_impl(o)
    }
    fn sub(&self, o: &Self) -> Self {
        self.sub_impl(o)
    }
    fn mul(&self, o: &Self) -> Self {
        self.mul_impl(o)
    }
    fn div(&self, o: &Self) -> Self {
        self.div_impl(o)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sign(&self) -> i32 {
        self.signum()
    }
    fn compare(&self, o: &Self) -> Ordering {
        self.cmp(o)
    }
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        *self = self.sub_impl(&a.mul_impl(b));
    }
    fn add_assign(&mut self, o: &Self) {
        if !o.is_zero() {
            *self = self.add_impl(o);
        }
    }
    fn as_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_rational(r: &Rational) -> Self {
        r.to_f64()
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sign(&self) -> i32 {
        if *self > FLOAT_TOL {
            1
        } else if *self < -FLOAT_TOL {
            -1
        } else {
            0
        }
    }
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }
    fn add_assign(&mut self, o: &Self) {
        *self += o;
    }
}

/// Element `a + b·√d` of the real quadratic field `Q(√d)`.
///
/// Values with `b = 0` mix freely with any radicand; two values with nonzero
/// surd parts must share `d`.
#[derive(Clone, PartialEq, Eq)]
pub struct Surd {
    pub a: Rational,
    pub b: Rational,
    pub d: u32,
}

impl Surd {
    pub fn rational(a: Rational) -> Self {
        Surd { a, b: Rational::zero(), d: 0 }
    }

    /// `a + b√d`; `d` must not be a perfect square.
    pub fn new(a: Rational, b: Rational, d: u32) -> Self {
        let r = (d as f64).sqrt().round() as u32;
        assert!(r * r != d || b.is_zero(), "radicand {d} is a perfect square");
        if b.is_zero() {
            Surd::rational(a)
        } else {
            Surd { a, b, d }
        }
    }

    fn radicand(&self, o: &Surd) -> u32 {
        match (self.b.is_zero(), o.b.is_zero()) {
            (true, _) => o.d,
            (_, true) => self.d,
            _ => {
                assert_eq!(self.d, o.d, "mixed radicands");
                self.d
            }
        }
    }

    fn make(a: Rational, b: Rational, d: u32) -> Surd {
        if b.is_zero() {
            Surd::rational(a)
        } else {
            Surd { a, b, d }
        }
    }
}

impl fmt::Debug for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else if self.a.is_zero() {
            write!(f, "({})*sqrt({})", self.b, self.d)
        } else {
            write!(f, "{} + ({})*sqrt({})", self.a, self.b, self.d)
        }
    }
}

impl Scalar for Surd {
    const EXACT: bool = true;

    fn zero() -> Self {
        Surd::rational(Rational::zero())
    }
    fn one() -> Self {
        Surd::rational(Rational::one())
    }
    fn from_rational(r: &Rational) -> Self {
        Surd::rational(r.clone())
    }
    fn to_f64(&self) -> f64 {
        self.a.to_f64() + self.b.to_f64() * (self.d as f64).sqrt()
    }
    fn add(&self, o: &Self) -> Self {
        let d = self.radicand(o);
        Surd::make(&self.a + &o.a, &self.b + &o.b, d)
    }
    fn sub(&self, o: &Self) -> Self {
        let d = self.radicand(o);
        Surd::make(&self.a - &o.a, &self.b - &o.b, d)
    }
    fn mul(&self, o: &Self) -> Self {
        let d = self.radicand(o);
        let dd = Rational::from_integer(d as i64);
        let a = &self.a * &o.a + &(&self.b * &o.b) * &dd;
        let b = &self.a * &o.b + &self.b * &o.a;
        Surd::make(a, b, d)
    }
    fn div(&self, o: &Self) -> Self {
        let d = self.radicand(o);
        let dd = Rational::from_integer(d as i64);
        let norm = &o.a * &o.a - &(&o.b * &o.b) * &dd;
        assert!(!norm.is_zero(), "division by zero");
        let conj = Surd::make(o.a.clone(), -&o.b, d);
        let num = self.mul(&conj);
        Surd::make(&num.a / &norm, &num.b / &norm, d)
    }
    fn neg(&self) -> Self {
        Surd::make(-&self.a, -&self.b, self.d)
    }
    fn sign(&self) -> i32 {
        let sa = self.a.signum();
        let sb = self.b.signum();
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        // opposite signs: compare a^2 with b^2 d
        let a2 = &self.a * &self.a;
        let b2d = &(&self.b * &self.b) * &Rational::from_integer(self.d as i64);
        match a2.cmp(&b2d) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => 0,
        }
    }
    fn as_rational(&self) -> Option<Rational> {
        self.b.is_zero().then(|| self.a.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn small_arithmetic_reduces() {
        assert_eq!(q("1/2") + q("1/3"), q("5/6"));
        assert_eq!(q("2/4"), q("1/2"));
        assert_eq!(q("-3/9") * q("3"), q("-1"));
        assert_eq!(q("1/2") / q("-1/4"), q("-2"));
        assert_eq!(q("7/3").to_string(), "7/3");
        assert_eq!(q("6/3").to_string(), "2");
    }

    #[test]
    fn promotes_and_demotes() {
        let big = Rational::from_integer(i64::MAX);
        let sum = &big + &big;
        assert!(sum.as_small().is_none());
        let back = &sum - &big;
        assert_eq!(back, big);
        assert!(back.as_small().is_some());
        let tiny = Rational::new(1, i64::MAX) * Rational::new(1, i64::MAX);
        assert!(tiny.is_positive());
        assert_eq!(&tiny * &Rational::from_integer(i64::MAX), Rational::new(1, i64::MAX));
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(Rational::parse_exact("0.46").unwrap(), (q("23/50"), true));
        assert_eq!(Rational::parse_exact("-1.5e-2").unwrap().0, q("-3/200"));
        assert_eq!(Rational::parse_exact("1e3").unwrap().0, q("1000"));
        assert_eq!(Rational::parse_exact(".5").unwrap().0, q("1/2"));
        assert!(Rational::parse_exact("1/0").is_err());
        assert!(Rational::parse_exact("abc").is_err());
        assert!(Rational::parse_exact("1.2.3").is_err());
    }

    #[test]
    fn f64_round_trip_is_exact() {
        let x = 0.1f64;
        let r = Rational::from_f64(x).unwrap();
        assert_eq!(r.to_f64(), x);
        assert_ne!(r, q("1/10"));
    }

    #[test]
    fn surd_sign_and_division() {
        let s5 = Surd::new(Rational::zero(), Rational::one(), 5);
        let p = Surd::one().div(&s5); // 1/sqrt5
        assert_eq!(p.a, Rational::zero());
        assert_eq!(p.b, q("1/5"));
        let p2 = p.mul(&p);
        assert_eq!(p2.as_rational(), Some(q("1/5")));
        // 1 - 2/sqrt5 > 0
        let rest = Surd::one().sub(&p.add(&p));
        assert_eq!(rest.sign(), 1);
        // 2 - sqrt5 < 0
        assert_eq!(Surd::from_int(2).sub(&s5).sign(), -1);
        assert!((rest.to_f64() - (1.0 - 2.0 / 5f64.sqrt())).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn matches_big_rational(a in -1_000_000i64..1_000_000, b in 1i64..1_000_000,
                                c in -1_000_000i64..1_000_000, d in 1i64..1_000_000) {
            let x = Rational::new(a, b);
            let y = Rational::new(c, d);
            let bx = BigRational::new(a.into(), b.into());
            let by = BigRational::new(c.into(), d.into());
            proptest::prop_assert_eq!((&x + &y).to_big(), &bx + &by);
            proptest::prop_assert_eq!((&x - &y).to_big(), &bx - &by);
            proptest::prop_assert_eq!((&x * &y).to_big(), &bx * &by);
            if c != 0 {
                proptest::prop_assert_eq!((&x / &y).to_big(), &bx / &by);
            }
            proptest::prop_assert_eq!(x.cmp(&y), bx.cmp(&by));
        }
    }
}
