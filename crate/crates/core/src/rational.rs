//! Exact rational numbers.
//!
//! [`Rational`] is the only scalar type in the crate. Values whose numerator
//! and denominator fit in an `i64` are stored inline and combined with
//! overflow-free `i128` intermediates; anything larger is promoted to a
//! heap-allocated [`BigRational`]. The representation is canonical (lowest
//! terms, positive denominator, inline whenever it fits), so structural
//! equality and hashing coincide with numeric equality.

use std::cmp::Ordering;
use std::fmt;
use std::hash::Hash;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

/// An arbitrary-precision exact fraction, always in lowest terms.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rational(Repr);

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    /// `den > 0`, `gcd(num, den) = 1`, `num != i64::MIN`.
    Small { num: i64, den: i64 },
    /// Only used when the value does not fit `Small`.
    Big(Box<BigRational>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("malformed rational literal `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

fn fits_small(v: i128) -> bool {
    v > i64::MIN as i128 && v <= i64::MAX as i128
}

impl Rational {
    pub fn zero() -> Self {
        Rational(Repr::Small { num: 0, den: 1 })
    }

    pub fn one() -> Self {
        Rational(Repr::Small { num: 1, den: 1 })
    }

    pub fn from_int(v: i64) -> Self {
        Self::from_i128(v as i128, 1)
    }

    /// `num / den`. Panics if `den` is zero.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_i128(num as i128, den as i128)
    }

    pub fn from_big(v: BigRational) -> Self {
        // `BigRational` arithmetic keeps values reduced with positive denominators.
        if let (Some(n), Some(d)) = (v.numer().to_i64(), v.denom().to_i64()) {
            if n != i64::MIN {
                return Rational(Repr::Small { num: n, den: d });
            }
        }
        Rational(Repr::Big(Box::new(v)))
    }

    fn from_i128(num: i128, den: i128) -> Self {
        debug_assert!(den != 0);
        if num == 0 {
            return Self::zero();
        }
        let negative = (num < 0) != (den < 0);
        let mut n = num.unsigned_abs();
        let mut d = den.unsigned_abs();
        if d != 1 {
            let g = n.gcd(&d);
            if g != 1 {
                n /= g;
                d /= g;
            }
        }
        if n <= i64::MAX as u128 && d <= i64::MAX as u128 {
            let n = n as i64;
            return Rational(Repr::Small {
                num: if negative { -n } else { n },
                den: d as i64,
            });
        }
        let mut bn = BigInt::from(n);
        if negative {
            bn = -bn;
        }
        Self::from_big(BigRational::new_raw(bn, BigInt::from(d)))
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small { num, den } => {
                BigRational::new_raw(BigInt::from(*num), BigInt::from(*den))
            }
            Repr::Big(b) => (**b).clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small { num, .. } => BigInt::from(*num),
            Repr::Big(b) => b.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small { den, .. } => BigInt::from(*den),
            Repr::Big(b) => b.denom().clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small { num: 0, .. })
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small { den, .. } => *den == 1,
            Repr::Big(b) => b.is_integer(),
        }
    }

    /// -1, 0 or 1.
    pub fn signum(&self) -> i32 {
        match &self.0 {
            Repr::Small { num, .. } => num.signum() as i32,
            Repr::Big(b) => {
                if b.is_negative() {
                    -1
                } else {
                    1
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

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn recip(&self) -> Self {
        match &self.0 {
            Repr::Small { num, den } => {
                assert!(*num != 0, "reciprocal of zero");
                Self::from_i128(*den as i128, *num as i128)
            }
            Repr::Big(b) => Self::from_big(b.recip()),
        }
    }

    pub fn pow(&self, exp: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    /// `max(0, self)`.
    pub fn relu(&self) -> Self {
        if self.is_negative() {
            Self::zero()
        } else {
            self.clone()
        }
    }

    fn big_op(a: &Self, b: &Self, f: impl FnOnce(BigRational, BigRational) -> BigRational) -> Self {
        Self::from_big(f(a.to_big(), b.to_big()))
    }

    fn add_ref(a: &Self, b: &Self) -> Self {
        match (&a.0, &b.0) {
            (Repr::Small { num: an, den: ad }, Repr::Small { num: bn, den: bd }) => {
                if ad == bd {
                    if *ad == 1 {
                        return Self::from_i128(*an as i128 + *bn as i128, 1);
                    }
                    return Self::from_i128(*an as i128 + *bn as i128, *ad as i128);
                }
                let n = *an as i128 * *bd as i128 + *bn as i128 * *ad as i128;
                let d = *ad as i128 * *bd as i128;
                Self::from_i128(n, d)
            }
            _ => Self::big_op(a, b, |x, y| x + y),
        }
    }

    fn mul_ref(a: &Self, b: &Self) -> Self {
        match (&a.0, &b.0) {
            (Repr::Small { num: an, den: ad }, Repr::Small { num: bn, den: bd }) => {
                if *an == 0 || *bn == 0 {
                    return Self::zero();
                }
                // Cross-cancel so the product is already reduced.
                let g1 = an.unsigned_abs().gcd(&bd.unsigned_abs()) as i128;
                let g2 = bn.unsigned_abs().gcd(&ad.unsigned_abs()) as i128;
                let n = (*an as i128 / g1) * (*bn as i128 / g2);
                let d = (*ad as i128 / g2) * (*bd as i128 / g1);
                if fits_small(n) && fits_small(d) {
                    Rational(Repr::Small {
                        num: n as i64,
                        den: d as i64,
                    })
                } else {
                    Self::from_i128(n, d)
                }
            }
            _ => Self::big_op(a, b, |x, y| x * y),
        }
    }

    fn neg_ref(a: &Self) -> Self {
        match &a.0 {
            Repr::Small { num, den } => Rational(Repr::Small {
                num: -num,
                den: *den,
            }),
            Repr::Big(b) => Self::from_big(-(**b).clone()),
        }
    }
}

impl Default for Rational {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Self::from_int(v)
    }
}

impl From<i32> for Rational {
    fn from(v: i32) -> Self {
        Self::from_int(v as i64)
    }
}

impl From<BigRational> for Rational {
    fn from(v: BigRational) -> Self {
        Self::from_big(v)
    }
}

impl From<BigInt> for Rational {
    fn from(v: BigInt) -> Self {
        Self::from_big(BigRational::from_integer(v))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small { num: an, den: ad }, Repr::Small { num: bn, den: bd }) => {
                (*an as i128 * *bd as i128).cmp(&(*bn as i128 * *ad as i128))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small { num, den: 1 } => write!(f, "{num}"),
            Repr::Small { num, den } => write!(f, "{num}/{den}"),
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

fn parse_digits(s: &str, whole: &str) -> Result<BigInt, ParseRationalError> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseRationalError::Malformed(whole.to_string()));
    }
    s.parse::<BigInt>()
        .map_err(|_| ParseRationalError::Malformed(whole.to_string()))
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    /// Accepts `[+-]digits`, `[+-]digits/digits` and `[+-]digits.digits`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let t = text.trim();
        if t.is_empty() {
            return Err(ParseRationalError::Empty);
        }
        let (negative, body) = match t.as_bytes()[0] {
            b'-' => (true, &t[1..]),
            b'+' => (false, &t[1..]),
            _ => (false, t),
        };
        let value = if let Some((p, q)) = body.split_once('/') {
            let p = parse_digits(p, t)?;
            let q = parse_digits(q, t)?;
            if q.is_zero() {
                return Err(ParseRationalError::ZeroDenominator(t.to_string()));
            }
            BigRational::new(p, q)
        } else if let Some((int, frac)) = body.split_once('.') {
            let i = parse_digits(int, t)?;
            let f = parse_digits(frac, t)?;
            let scale = num_traits::pow(BigInt::from(10), frac.len());
            BigRational::new(i * &scale + f, scale)
        } else {
            BigRational::from_integer(parse_digits(body, t)?)
        };
        let value = Rational::from_big(value);
        Ok(if negative { -value } else { value })
    }
}

macro_rules! forward_binop {
    ($Trait:ident, $method:ident, $imp:expr) => {
        impl $Trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                $imp(self, rhs)
            }
        }
        impl $Trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                $imp(&self, &rhs)
            }
        }
        impl $Trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                $imp(&self, rhs)
            }
        }
        impl $Trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                $imp(self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add, Rational::add_ref);
forward_binop!(Mul, mul, Rational::mul_ref);
forward_binop!(Sub, sub, |a: &Rational, b: &Rational| Rational::add_ref(
    a,
    &Rational::neg_ref(b)
));
forward_binop!(Div, div, |a: &Rational, b: &Rational| Rational::mul_ref(
    a,
    &b.recip()
));

macro_rules! forward_assign {
    ($Trait:ident, $method:ident, $op:tt) => {
        impl $Trait<&Rational> for Rational {
            fn $method(&mut self, rhs: &Rational) {
                *self = &*self $op rhs;
            }
        }
        impl $Trait<Rational> for Rational {
            fn $method(&mut self, rhs: Rational) {
                *self = &*self $op &rhs;
            }
        }
    };
}

forward_assign!(AddAssign, add_assign, +);
forward_assign!(SubAssign, sub_assign, -);
forward_assign!(MulAssign, mul_assign, *);
forward_assign!(DivAssign, div_assign, /);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational::neg_ref(&self)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational::neg_ref(self)
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, v| acc + v)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, v| acc + v)
    }
}

/// Shorthand for `Rational::new(num, den)`.
pub fn q(num: i64, den: i64) -> Rational {
    Rational::new(num, den)
}
