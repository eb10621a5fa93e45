//! Scalar fields the algebra is evaluated over.
//!
//! Two modes exist: exact Gaussian rationals ([`Exact`]) and double-precision
//! complex numbers ([`Complex64`]). The mode is a type parameter, so a single
//! computation can never mix them.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};

/// Exact Gaussian rational `re + i im` with arbitrary-precision parts.
pub type Exact = Complex<BigRational>;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True for the exact mode, where `is_negligible` ignores its tolerance.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn imag_unit() -> Self;
    fn from_rational(r: &BigRational) -> Self;
    fn conj(&self) -> Self;
    fn modulus(&self) -> f64;
    fn to_complex64(&self) -> Complex64;
    /// Serialized coefficient: `[num_re, den_re, num_im, den_im]` (exact) or `[re, im]`.
    fn to_json(&self) -> Value;

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)))
    }

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn scale_i64(&self, n: i64) -> Self {
        self.clone() * Self::from_i64(n)
    }

    /// Zero test: exact equality in exact mode, `|x| <= tol` in float mode.
    fn is_negligible(&self, tol: f64) -> bool {
        if Self::EXACT {
            *self == Self::zero()
        } else {
            self.modulus() <= tol
        }
    }
}

impl Scalar for Exact {
    const EXACT: bool = true;

    fn zero() -> Self {
        Complex::new(BigRational::zero(), BigRational::zero())
    }

    fn one() -> Self {
        Complex::new(BigRational::one(), BigRational::zero())
    }

    fn imag_unit() -> Self {
        Complex::new(BigRational::zero(), BigRational::one())
    }

    fn from_rational(r: &BigRational) -> Self {
        Complex::new(r.clone(), BigRational::zero())
    }

    fn conj(&self) -> Self {
        Complex::conj(self)
    }

    fn modulus(&self) -> f64 {
        self.to_complex64().norm()
    }

    fn to_complex64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    fn to_json(&self) -> Value {
        json!([
            bigint_json(self.re.numer()),
            bigint_json(self.re.denom()),
            bigint_json(self.im.numer()),
            bigint_json(self.im.denom()),
        ])
    }

    fn is_negligible(&self, _tol: f64) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

fn bigint_json(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(v) => json!(v),
        None => json!(n.to_string()),
    }
}

impl Scalar for Complex64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }

    fn imag_unit() -> Self {
        Complex64::new(0.0, 1.0)
    }

    fn from_rational(r: &BigRational) -> Self {
        Complex64::new(r.to_f64().unwrap_or(f64::NAN), 0.0)
    }

    fn conj(&self) -> Self {
        Complex::conj(self)
    }

    fn modulus(&self) -> f64 {
        self.norm()
    }

    fn to_complex64(&self) -> Complex64 {
        *self
    }

    fn to_json(&self) -> Value {
        json!([self.re, self.im])
    }
}

/// Build an exact Gaussian rational from small integer parts.
pub fn gaussian(re_num: i64, re_den: i64, im_num: i64, im_den: i64) -> Exact {
    Complex::new(
        BigRational::new(re_num.into(), re_den.into()),
        BigRational::new(im_num.into(), im_den.into()),
    )
}
