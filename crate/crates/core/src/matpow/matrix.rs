use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::numerics::real::shift_round;
use crate::numerics::PrecisionReal;

/// Dense square matrix of fixed-point reals sharing one precision.
///
/// Entries are kept as raw mantissas (value = m / 2^bits) so products can be
/// accumulated exactly and rounded once per entry.
#[derive(Clone, PartialEq, Eq)]
pub struct SquareMatrix {
    n: usize,
    bits: u32,
    mant: Vec<BigInt>,
}

impl SquareMatrix {
    pub fn zero(n: usize, bits: u32) -> Self {
        SquareMatrix {
            n,
            bits,
            mant: vec![BigInt::zero(); n * n],
        }
    }

    pub fn identity(n: usize, bits: u32) -> Self {
        let mut m = Self::zero(n, bits);
        let one = BigInt::from(1) << bits as usize;
        for i in 0..n {
            m.mant[i * n + i] = one.clone();
        }
        m
    }

    pub fn diag(values: &[PrecisionReal], bits: u32) -> Self {
        let n = values.len();
        let mut m = Self::zero(n, bits);
        for (i, v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Row-major entries; all are rounded to `bits`.
    pub fn from_entries(n: usize, entries: &[PrecisionReal], bits: u32) -> Self {
        assert_eq!(entries.len(), n * n, "expected {} entries", n * n);
        SquareMatrix {
            n,
            bits,
            mant: entries
                .iter()
                .map(|e| e.with_bits(bits).mantissa().clone())
                .collect(),
        }
    }

    pub fn from_f64(n: usize, entries: &[f64], bits: u32) -> Self {
        assert_eq!(entries.len(), n * n, "expected {} entries", n * n);
        SquareMatrix {
            n,
            bits,
            mant: entries
                .iter()
                .map(|&v| PrecisionReal::from_f64(v, bits).mantissa().clone())
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn get(&self, i: usize, j: usize) -> PrecisionReal {
        PrecisionReal::from_mantissa(self.mant[i * self.n + j].clone(), self.bits)
    }

    pub fn set(&mut self, i: usize, j: usize, v: &PrecisionReal) {
        self.mant[i * self.n + j] = v.with_bits(self.bits).mantissa().clone();
    }

    pub fn entries(&self) -> Vec<PrecisionReal> {
        self.mant
            .iter()
            .map(|m| PrecisionReal::from_mantissa(m.clone(), self.bits))
            .collect()
    }

    pub fn with_bits(&self, bits: u32) -> Self {
        if bits == self.bits {
            return self.clone();
        }
        let s = bits as i64 - self.bits as i64;
        SquareMatrix {
            n: self.n,
            bits,
            mant: self.mant.iter().map(|m| shift_round(m, s)).collect(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries().iter().map(|e| e.to_f64()).collect()
    }

    /// Max absolute entry.
    pub fn max_norm(&self) -> PrecisionReal {
        let m = self.mant.iter().map(|m| m.abs()).max().unwrap_or_default();
        PrecisionReal::from_mantissa(m, self.bits)
    }

    /// Max absolute row sum (the operator infinity norm).
    pub fn row_sum_norm(&self) -> PrecisionReal {
        let m = self
            .mant
            .chunks(self.n.max(1))
            .map(|row| row.iter().map(|x| x.abs()).sum::<BigInt>())
            .max()
            .unwrap_or_default();
        PrecisionReal::from_mantissa(m, self.bits)
    }

    pub fn trace(&self) -> PrecisionReal {
        let t: BigInt = (0..self.n).map(|i| &self.mant[i * self.n + i]).sum();
        PrecisionReal::from_mantissa(t, self.bits)
    }

    /// Product rounded to `bits`; one rounding per entry.
    pub fn mul_to(&self, o: &Self, bits: u32) -> Self {
        assert_eq!(self.n, o.n, "dimension mismatch");
        let n = self.n;
        let s = bits as i64 - self.bits as i64 - o.bits as i64;
        let mut out = Vec::with_capacity(n * n);
        // transpose once so the inner loop walks both operands contiguously
        let mut bt = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                bt.push(&o.mant[k * n + j]);
            }
        }
        for i in 0..n {
            let row = &self.mant[i * n..(i + 1) * n];
            for j in 0..n {
                let col = &bt[j * n..(j + 1) * n];
                let mut acc = BigInt::zero();
                for (a, b) in row.iter().zip(col) {
                    if !a.is_zero() && !b.is_zero() {
                        acc += a * *b;
                    }
                }
                out.push(shift_round(&acc, s));
            }
        }
        SquareMatrix { n, bits, mant: out }
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.mul_to(o, self.bits.max(o.bits))
    }

    pub fn mul_vec(&self, v: &[PrecisionReal]) -> Vec<PrecisionReal> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| {
                let mut acc = PrecisionReal::zero(self.bits);
                for (j, x) in v.iter().enumerate() {
                    acc = &acc + &self.get(i, j).mul_to(x, self.bits.max(x.bits()));
                }
                acc
            })
            .collect()
    }

    fn zip_with(&self, o: &Self, f: impl Fn(&BigInt, &BigInt) -> BigInt) -> Self {
        assert_eq!(self.n, o.n, "dimension mismatch");
        let bits = self.bits.max(o.bits);
        let a = self.with_bits(bits);
        let b = o.with_bits(bits);
        SquareMatrix {
            n: self.n,
            bits,
            mant: a.mant.iter().zip(&b.mant).map(|(x, y)| f(x, y)).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip_with(o, |x, y| x + y)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip_with(o, |x, y| x - y)
    }

    pub fn scale(&self, k: &PrecisionReal) -> Self {
        let s = -(k.bits() as i64);
        SquareMatrix {
            n: self.n,
            bits: self.bits,
            mant: self
                .mant
                .iter()
                .map(|m| shift_round(&(m * k.mantissa()), s))
                .collect(),
        }
    }

    /// `self + c I`.
    pub fn add_identity(&self, c: &PrecisionReal) -> Self {
        let mut out = self.clone();
        let c = c.with_bits(self.bits);
        for i in 0..self.n {
            out.mant[i * self.n + i] += c.mantissa();
        }
        out
    }

    pub fn max_abs_diff(&self, o: &Self) -> PrecisionReal {
        self.sub(o).max_norm()
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SquareMatrix {}x{} @{} bits", self.n, self.n, self.bits)?;
        for row in self.to_f64().chunks(self.n.max(1)) {
            writeln!(f, "  {row:?}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_matches_f64() {
        let a = SquareMatrix::from_f64(2, &[1.0, 2.0, 3.0, 4.0], 64);
        let b = SquareMatrix::from_f64(2, &[0.5, -1.0, 0.25, 2.0], 64);
        assert_eq!(a.mul(&b).to_f64(), vec![1.0, 3.0, 2.5, 5.0]);
        assert_eq!(a.trace().to_f64(), 5.0);
        assert_eq!(a.row_sum_norm().to_f64(), 7.0);
        assert_eq!(a.max_norm().to_f64(), 4.0);
    }

    #[test]
    fn identity_is_neutral() {
        let a = SquareMatrix::from_f64(3, &[1.5, -2.0, 0.0, 0.125, 7.0, 3.0, -1.0, 0.0, 2.0], 80);
        let i = SquareMatrix::identity(3, 80);
        assert_eq!(a.mul(&i), a);
        assert_eq!(i.mul(&a), a);
        assert!(a.add_identity(&PrecisionReal::one(80)).sub(&a).eq(&i));
    }
}
