//! Scalar abstraction for polynomial evaluation.
//!
//! The same exact polynomial can be evaluated over `i64` (certified
//! overflow-free fast path), `BigInt`, `BigRational`, `f64` or
//! `Complex64` depending on the consumer.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// A ring scalar that integer polynomial coefficients embed into.
pub trait Scalar: Clone + Zero + One + std::ops::Mul<Output = Self> + std::ops::Add<Output = Self> {
    fn from_int(c: &BigInt) -> Self;

    fn pow_u(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Scalar for BigInt {
    fn from_int(c: &BigInt) -> Self {
        c.clone()
    }
    fn pow_u(&self, e: u32) -> Self {
        num_traits::Pow::pow(self, e)
    }
}

impl Scalar for i64 {
    fn from_int(c: &BigInt) -> Self {
        c.to_i64().expect("coefficient exceeds i64 fast path")
    }
}

impl Scalar for i128 {
    fn from_int(c: &BigInt) -> Self {
        c.to_i128().expect("coefficient exceeds i128")
    }
}

impl Scalar for f64 {
    fn from_int(c: &BigInt) -> Self {
        c.to_f64().unwrap_or(f64::NAN)
    }
    fn pow_u(&self, e: u32) -> Self {
        self.powi(e as i32)
    }
}

impl Scalar for BigRational {
    fn from_int(c: &BigInt) -> Self {
        BigRational::from_integer(c.clone())
    }
}

impl Scalar for Complex64 {
    fn from_int(c: &BigInt) -> Self {
        Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0)
    }
    fn pow_u(&self, e: u32) -> Self {
        self.powu(e)
    }
}
