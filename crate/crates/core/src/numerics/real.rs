//! Fixed-point real numbers with an explicit binary precision.
//!
//! A value is stored as an integer mantissa `m` together with a precision `p`,
//! representing `m / 2^p`. Binary operations on operands of different
//! precision produce a result at the larger of the two precisions, rounded to
//! nearest. Multiplication and division round once, so each operation is
//! within `2^-p` of the exact result of its (exact) inputs.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::NumericsError;

/// Guard bits added by the elementary functions on top of the caller's target.
pub const GUARD_BITS: u32 = 32;

/// Shift `m` left by `s` bits, or right with round-half-up when `s < 0`.
pub(crate) fn shift_round(m: &BigInt, s: i64) -> BigInt {
    if s >= 0 {
        m << (s as usize)
    } else {
        let k = (-s) as usize;
        let half = BigInt::one() << (k - 1);
        (m + half) >> k
    }
}

/// Rounded quotient `round(num / den)` for `den != 0`.
pub(crate) fn div_round(num: &BigInt, den: &BigInt) -> BigInt {
    let (q, r) = num.div_mod_floor(den);
    // den > 0: r in [0, den); den < 0: r in (den, 0]
    let twice = &r << 1usize;
    let round_up = if den.is_positive() {
        twice >= *den
    } else {
        twice <= *den
    };
    if round_up {
        q + 1
    } else {
        q
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PrecisionReal {
    mant: BigInt,
    bits: u32,
}

impl PrecisionReal {
    pub fn from_mantissa(mant: BigInt, bits: u32) -> Self {
        PrecisionReal { mant, bits }
    }

    pub fn zero(bits: u32) -> Self {
        PrecisionReal {
            mant: BigInt::zero(),
            bits,
        }
    }

    pub fn one(bits: u32) -> Self {
        PrecisionReal {
            mant: BigInt::one() << bits as usize,
            bits,
        }
    }

    pub fn from_int<T: Into<BigInt>>(v: T, bits: u32) -> Self {
        PrecisionReal {
            mant: v.into() << bits as usize,
            bits,
        }
    }

    /// `2^e` at the given precision (zero if it underflows).
    pub fn pow2(e: i64, bits: u32) -> Self {
        let s = e + bits as i64;
        if s < 0 {
            // 2^e < 2^-bits: round to nearest (only 2^-(bits+1) rounds up)
            let mant = if s == -1 { BigInt::one() } else { BigInt::zero() };
            return PrecisionReal { mant, bits };
        }
        PrecisionReal {
            mant: BigInt::one() << s as usize,
            bits,
        }
    }

    pub fn from_ratio(r: &BigRational, bits: u32) -> Self {
        let num = r.numer() << bits as usize;
        PrecisionReal {
            mant: div_round(&num, r.denom()),
            bits,
        }
    }

    /// Exact binary value of `v`, rounded to `bits`. Non-finite input maps to zero.
    pub fn from_f64(v: f64, bits: u32) -> Self {
        match BigRational::from_float(v) {
            Some(r) => Self::from_ratio(&r, bits),
            None => Self::zero(bits),
        }
    }

    /// Parse a decimal (`-1.25e-3`) or fraction (`3/7`) literal exactly, then round.
    pub fn parse_decimal(s: &str, bits: u32) -> Result<Self, NumericsError> {
        Ok(Self::from_ratio(&parse_rational(s)?, bits))
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Same value re-expressed at `bits` (exact when widening, rounded otherwise).
    pub fn with_bits(&self, bits: u32) -> Self {
        if bits == self.bits {
            return self.clone();
        }
        PrecisionReal {
            mant: shift_round(&self.mant, bits as i64 - self.bits as i64),
            bits,
        }
    }

    pub fn to_ratio(&self) -> BigRational {
        BigRational::new(self.mant.clone(), BigInt::one() << self.bits as usize)
    }

    pub fn to_f64(&self) -> f64 {
        // keep 64 significant bits before converting so huge mantissas stay finite
        let len = self.mant.bits() as i64;
        let drop = (len - 64).max(0);
        let top = (&self.mant >> drop as usize).to_f64().unwrap_or(0.0);
        let e = drop - self.bits as i64;
        scale_f64(top, e)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn signum(&self) -> i32 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn abs(&self) -> Self {
        PrecisionReal {
            mant: self.mant.abs(),
            bits: self.bits,
        }
    }

    /// Exponent `e` with `2^(e-1) <= |x| < 2^e`; `None` for zero.
    pub fn magnitude_log2(&self) -> Option<i64> {
        if self.mant.is_zero() {
            None
        } else {
            Some(self.mant.bits() as i64 - self.bits as i64)
        }
    }

    /// Multiply by `2^k` exactly (k may be negative, in which case it rounds).
    pub fn shl(&self, k: i64) -> Self {
        PrecisionReal {
            mant: shift_round(&self.mant, k),
            bits: self.bits,
        }
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        PrecisionReal {
            mant: &self.mant * k,
            bits: self.bits,
        }
    }

    pub fn mul_i64(&self, k: i64) -> Self {
        PrecisionReal {
            mant: &self.mant * k,
            bits: self.bits,
        }
    }

    pub fn div_i64(&self, k: i64) -> Self {
        assert!(k != 0, "division by zero");
        PrecisionReal {
            mant: div_round(&self.mant, &BigInt::from(k)),
            bits: self.bits,
        }
    }

    pub fn div_int(&self, k: &BigInt) -> Self {
        assert!(!k.is_zero(), "division by zero");
        PrecisionReal {
            mant: div_round(&self.mant, k),
            bits: self.bits,
        }
    }

    /// Product rounded to `bits`.
    pub fn mul_to(&self, other: &Self, bits: u32) -> Self {
        let s = bits as i64 - self.bits as i64 - other.bits as i64;
        PrecisionReal {
            mant: shift_round(&(&self.mant * &other.mant), s),
            bits,
        }
    }

    /// Quotient rounded to `bits`.
    pub fn div_to(&self, other: &Self, bits: u32) -> Result<Self, NumericsError> {
        if other.mant.is_zero() {
            return Err(NumericsError::Domain("division by zero".into()));
        }
        // (a/2^p) / (b/2^q) * 2^r = a * 2^(q + r - p) / b
        let s = other.bits as i64 + bits as i64 - self.bits as i64;
        let mant = if s >= 0 {
            div_round(&(&self.mant << s as usize), &other.mant)
        } else {
            div_round(&self.mant, &(&other.mant << (-s) as usize))
        };
        Ok(PrecisionReal { mant, bits })
    }

    pub fn div(&self, other: &Self) -> Result<Self, NumericsError> {
        self.div_to(other, self.bits.max(other.bits))
    }

    pub fn recip(&self) -> Result<Self, NumericsError> {
        Self::one(self.bits).div_to(self, self.bits)
    }

    pub fn square(&self) -> Self {
        self.mul_to(self, self.bits)
    }

    /// Square root rounded down to the precision of `self`.
    pub fn sqrt(&self) -> Result<Self, NumericsError> {
        if self.mant.is_negative() {
            return Err(NumericsError::Domain("square root of a negative number".into()));
        }
        // sqrt(m / 2^p) = sqrt(m * 2^p) / 2^p
        let scaled = (&self.mant << self.bits as usize).to_biguint().unwrap_or_default();
        let root = scaled.sqrt();
        // round to nearest: compare (root + 1/2)^2 with scaled
        let twice = &root << 1usize;
        let up = (&twice + 1u32) * (&twice + 1u32) <= (&scaled << 2usize);
        let root = if up { root + 1u32 } else { root };
        Ok(PrecisionReal {
            mant: BigInt::from(root),
            bits: self.bits,
        })
    }

    pub fn floor(&self) -> BigInt {
        self.mant.div_floor(&(BigInt::one() << self.bits as usize))
    }

    pub fn round(&self) -> BigInt {
        div_round(&self.mant, &(BigInt::one() << self.bits as usize))
    }

    /// Exact decimal expansion of the stored dyadic value.
    pub fn to_decimal_string(&self) -> String {
        let neg = self.mant.is_negative();
        let a = self.mant.abs().to_biguint().unwrap_or_default();
        let int = &a >> self.bits as usize;
        let frac = &a - (&int << self.bits as usize);
        let mut s = String::new();
        if neg && !a.is_zero() {
            s.push('-');
        }
        s.push_str(&int.to_string());
        if !frac.is_zero() {
            // frac / 2^p = frac * 5^p / 10^p
            let digits = (frac * BigUint::from(5u32).pow(self.bits)).to_string();
            let width = self.bits as usize;
            let mut d = "0".repeat(width - digits.len());
            d.push_str(&digits);
            let d = d.trim_end_matches('0');
            s.push('.');
            s.push_str(d);
        }
        s
    }

    /// Decimal rendering rounded to `digits` places after the point.
    pub fn to_fixed_string(&self, digits: usize) -> String {
        let scale = BigInt::from(10u32).pow(digits as u32);
        let scaled = div_round(&(&self.mant * &scale), &(BigInt::one() << self.bits as usize));
        let neg = scaled.is_negative();
        let a = scaled.abs().to_string();
        let a = if a.len() <= digits {
            format!("{}{}", "0".repeat(digits + 1 - a.len()), a)
        } else {
            a
        };
        let (i, f) = a.split_at(a.len() - digits);
        let mut s = String::new();
        if neg {
            s.push('-');
        }
        s.push_str(i);
        if digits > 0 {
            s.push('.');
            s.push_str(f);
        }
        s
    }

    fn aligned(&self, other: &Self) -> (BigInt, BigInt, u32) {
        match self.bits.cmp(&other.bits) {
            Ordering::Equal => (self.mant.clone(), other.mant.clone(), self.bits),
            Ordering::Less => (
                &self.mant << (other.bits - self.bits) as usize,
                other.mant.clone(),
                other.bits,
            ),
            Ordering::Greater => (
                self.mant.clone(),
                &other.mant << (self.bits - other.bits) as usize,
                self.bits,
            ),
        }
    }
}

fn scale_f64(v: f64, e: i64) -> f64 {
    let mut v = v;
    let mut e = e;
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
    }
    v * 2f64.powi(e as i32)
}

/// Exact rational from `-12.5`, `3e-4`, `1/3`, or an integer literal.
pub fn parse_rational(s: &str) -> Result<BigRational, NumericsError> {
    let t = s.trim();
    let bad = || NumericsError::Parse(format!("not a number: {s:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(n / d);
    }
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{ip}{fp}");
    let n: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let e10 = exp - fp.len() as i64;
    if e10.unsigned_abs() > 100_000 {
        return Err(bad());
    }
    let ten = BigInt::from(10u32);
    let mut r = if e10 >= 0 {
        BigRational::from_integer(n * ten.pow(e10 as u32))
    } else {
        BigRational::new(n, ten.pow((-e10) as u32))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

impl PartialOrd for PrecisionReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PrecisionReal {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl Add for &PrecisionReal {
    type Output = PrecisionReal;
    fn add(self, rhs: &PrecisionReal) -> PrecisionReal {
        if self.bits == rhs.bits {
            return PrecisionReal {
                mant: &self.mant + &rhs.mant,
                bits: self.bits,
            };
        }
        let (a, b, bits) = self.aligned(rhs);
        PrecisionReal { mant: a + b, bits }
    }
}

impl Sub for &PrecisionReal {
    type Output = PrecisionReal;
    fn sub(self, rhs: &PrecisionReal) -> PrecisionReal {
        if self.bits == rhs.bits {
            return PrecisionReal {
                mant: &self.mant - &rhs.mant,
                bits: self.bits,
            };
        }
        let (a, b, bits) = self.aligned(rhs);
        PrecisionReal { mant: a - b, bits }
    }
}

impl Mul for &PrecisionReal {
    type Output = PrecisionReal;
    fn mul(self, rhs: &PrecisionReal) -> PrecisionReal {
        self.mul_to(rhs, self.bits.max(rhs.bits))
    }
}

impl Neg for &PrecisionReal {
    type Output = PrecisionReal;
    fn neg(self) -> PrecisionReal {
        PrecisionReal {
            mant: -&self.mant,
            bits: self.bits,
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for PrecisionReal {
            type Output = PrecisionReal;
            fn $f(self, rhs: PrecisionReal) -> PrecisionReal {
                (&self).$f(&rhs)
            }
        }
        impl $tr<&PrecisionReal> for PrecisionReal {
            type Output = PrecisionReal;
            fn $f(self, rhs: &PrecisionReal) -> PrecisionReal {
                (&self).$f(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for PrecisionReal {
    type Output = PrecisionReal;
    fn neg(self) -> PrecisionReal {
        PrecisionReal {
            mant: -self.mant,
            bits: self.bits,
        }
    }
}

/// `value@bits`, with the value printed exactly.
impl fmt::Display for PrecisionReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.to_decimal_string(), self.bits)
    }
}

impl FromStr for PrecisionReal {
    type Err = NumericsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (v, b) = s
            .rsplit_once('@')
            .ok_or_else(|| NumericsError::Parse(format!("missing @bits in {s:?}")))?;
        let bits: u32 = b
            .trim()
            .parse()
            .map_err(|_| NumericsError::Parse(format!("bad precision in {s:?}")))?;
        Self::parse_decimal(v, bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_round_is_half_up() {
        assert_eq!(shift_round(&BigInt::from(5), -1), BigInt::from(3));
        assert_eq!(shift_round(&BigInt::from(-5), -1), BigInt::from(-2));
        assert_eq!(shift_round(&BigInt::from(7), -2), BigInt::from(2));
        assert_eq!(shift_round(&BigInt::from(3), 2), BigInt::from(12));
    }

    #[test]
    fn div_round_both_signs() {
        assert_eq!(div_round(&BigInt::from(7), &BigInt::from(2)), BigInt::from(4));
        assert_eq!(div_round(&BigInt::from(-7), &BigInt::from(2)), BigInt::from(-3));
        assert_eq!(div_round(&BigInt::from(7), &BigInt::from(-2)), BigInt::from(-3));
        assert_eq!(div_round(&BigInt::from(5), &BigInt::from(3)), BigInt::from(2));
    }

    #[test]
    fn parse_and_print_roundtrip() {
        let x = PrecisionReal::parse_decimal("-0.375", 16).unwrap();
        assert_eq!(x.to_decimal_string(), "-0.375");
        assert_eq!(x.to_string(), "-0.375@16");
        let y: PrecisionReal = "-0.375@16".parse().unwrap();
        assert_eq!(x, y);
        let z = PrecisionReal::parse_decimal("1/3", 64).unwrap();
        let back: PrecisionReal = z.to_string().parse().unwrap();
        assert_eq!(z, back);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_rational("1.2.3").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("abc").is_err());
        assert_eq!(
            parse_rational("2.5e-1").unwrap(),
            BigRational::new(1.into(), 4.into())
        );
    }

    #[test]
    fn mixed_precision_arithmetic() {
        let a = PrecisionReal::parse_decimal("0.5", 8).unwrap();
        let b = PrecisionReal::parse_decimal("0.25", 32).unwrap();
        let s = &a + &b;
        assert_eq!(s.bits(), 32);
        assert_eq!(s.to_decimal_string(), "0.75");
        assert_eq!((&a * &b).to_decimal_string(), "0.125");
        assert_eq!(a.div(&b).unwrap().to_decimal_string(), "2");
        assert!(a > b);
    }

    #[test]
    fn sqrt_and_to_f64() {
        let two = PrecisionReal::from_int(2, 80);
        let r = two.sqrt().unwrap();
        assert!((r.to_f64() - std::f64::consts::SQRT_2).abs() < 1e-15);
        let sq = r.square();
        assert!((&sq - &two).abs() <= PrecisionReal::pow2(-78, 80));
    }

    #[test]
    fn fixed_string() {
        let x = PrecisionReal::parse_decimal("-0.0625", 20).unwrap();
        assert_eq!(x.to_fixed_string(3), "-0.062");
        assert_eq!(PrecisionReal::from_int(3, 4).to_fixed_string(2), "3.00");
    }
}
