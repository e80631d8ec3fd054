use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::{NumericsError, PrecisionReal};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PrecisionComplex {
    pub re: PrecisionReal,
    pub im: PrecisionReal,
}

impl PrecisionComplex {
    pub fn new(re: PrecisionReal, im: PrecisionReal) -> Self {
        let bits = re.bits().max(im.bits());
        PrecisionComplex {
            re: re.with_bits(bits),
            im: im.with_bits(bits),
        }
    }

    pub fn from_real(re: PrecisionReal) -> Self {
        let bits = re.bits();
        PrecisionComplex {
            re,
            im: PrecisionReal::zero(bits),
        }
    }

    pub fn zero(bits: u32) -> Self {
        Self::from_real(PrecisionReal::zero(bits))
    }

    pub fn one(bits: u32) -> Self {
        Self::from_real(PrecisionReal::one(bits))
    }

    pub fn from_f64(re: f64, im: f64, bits: u32) -> Self {
        PrecisionComplex {
            re: PrecisionReal::from_f64(re, bits),
            im: PrecisionReal::from_f64(im, bits),
        }
    }

    pub fn bits(&self) -> u32 {
        self.re.bits()
    }

    pub fn with_bits(&self, bits: u32) -> Self {
        PrecisionComplex {
            re: self.re.with_bits(bits),
            im: self.im.with_bits(bits),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        PrecisionComplex {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    /// `|z|^2` rounded to the working precision.
    pub fn norm_sqr(&self) -> PrecisionReal {
        let b = self.bits();
        &self.re.mul_to(&self.re, b) + &self.im.mul_to(&self.im, b)
    }

    pub fn abs(&self) -> PrecisionReal {
        // sqrt of the squared modulus loses half the bits near zero, so widen first
        let b = self.bits();
        let wide = self.with_bits(2 * b + 2);
        wide.norm_sqr()
            .sqrt()
            .expect("squared modulus is non-negative")
            .with_bits(b)
    }

    /// Max of the component magnitudes (cheap norm used for tolerances).
    pub fn max_abs(&self) -> PrecisionReal {
        self.re.abs().max(self.im.abs())
    }

    pub fn scale(&self, k: &PrecisionReal) -> Self {
        let b = self.bits().max(k.bits());
        PrecisionComplex {
            re: self.re.mul_to(k, b),
            im: self.im.mul_to(k, b),
        }
    }

    pub fn mul_to(&self, o: &Self, bits: u32) -> Self {
        // each component rounds once from the exact sum of products
        let p = self.bits() + o.bits();
        let rr = self.re.mantissa() * o.re.mantissa() - self.im.mantissa() * o.im.mantissa();
        let ii = self.re.mantissa() * o.im.mantissa() + self.im.mantissa() * o.re.mantissa();
        let s = bits as i64 - p as i64;
        PrecisionComplex {
            re: PrecisionReal::from_mantissa(super::real::shift_round(&rr, s), bits),
            im: PrecisionReal::from_mantissa(super::real::shift_round(&ii, s), bits),
        }
    }

    pub fn div_to(&self, o: &Self, bits: u32) -> Result<Self, NumericsError> {
        if o.is_zero() {
            return Err(NumericsError::Domain("complex division by zero".into()));
        }
        // widen so the denominator |o|^2 keeps full relative precision
        let extra = o
            .max_abs()
            .magnitude_log2()
            .map(|e| (-2 * e).max(0) as u32)
            .unwrap_or(0);
        let w = bits + extra + 8;
        let a = self.with_bits(w);
        let b = o.with_bits(w);
        let den = b.norm_sqr();
        let num = a.mul_to(&b.conj(), w);
        Ok(PrecisionComplex {
            re: num.re.div_to(&den, bits)?,
            im: num.im.div_to(&den, bits)?,
        })
    }

    pub fn div(&self, o: &Self) -> Result<Self, NumericsError> {
        self.div_to(o, self.bits().max(o.bits()))
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl Add for &PrecisionComplex {
    type Output = PrecisionComplex;
    fn add(self, o: &PrecisionComplex) -> PrecisionComplex {
        PrecisionComplex {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }
}

impl Sub for &PrecisionComplex {
    type Output = PrecisionComplex;
    fn sub(self, o: &PrecisionComplex) -> PrecisionComplex {
        PrecisionComplex {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }
}

impl Mul for &PrecisionComplex {
    type Output = PrecisionComplex;
    fn mul(self, o: &PrecisionComplex) -> PrecisionComplex {
        self.mul_to(o, self.bits().max(o.bits()))
    }
}

impl Neg for &PrecisionComplex {
    type Output = PrecisionComplex;
    fn neg(self) -> PrecisionComplex {
        PrecisionComplex {
            re: -&self.re,
            im: -&self.im,
        }
    }
}

impl fmt::Display for PrecisionComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.re, self.im)
    }
}
