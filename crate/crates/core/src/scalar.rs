//! Scalar fields used by the linear algebra.
//!
//! The workbench computes over Gaussian rationals. Real subspaces are handled over
//! `BigRational`, and a floating point path exists for eigenvalues and for the
//! randomized solver.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number.
pub type Q = BigRational;
/// Exact complex number with rational real and imaginary parts.
pub type GaussianRational = Complex<BigRational>;
pub type Gq = GaussianRational;
pub type C64 = Complex<f64>;

/// Threshold under which a float entry counts as zero during elimination.
pub const FLOAT_EPS: f64 = 1e-10;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    /// True when arithmetic is exact and zero tests are decisive.
    const EXACT: bool;

    fn conj(&self) -> Self;
    fn from_q(q: &Q) -> Self;
    fn magnitude(&self) -> f64;

    fn negligible(&self) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.magnitude() < FLOAT_EPS
        }
    }

    fn from_i64(v: i64) -> Self {
        Self::from_q(&Q::from_integer(BigInt::from(v)))
    }
}

/// A scalar field containing `i`.
pub trait ComplexScalar: Scalar {
    fn from_gq(g: &Gq) -> Self;
    fn i() -> Self;
    fn re_f64(&self) -> f64;
    fn im_f64(&self) -> f64;
}

impl Scalar for Q {
    const EXACT: bool = true;
    fn conj(&self) -> Self {
        self.clone()
    }
    fn from_q(q: &Q) -> Self {
        q.clone()
    }
    fn magnitude(&self) -> f64 {
        q_to_f64(self).abs()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn conj(&self) -> Self {
        *self
    }
    fn from_q(q: &Q) -> Self {
        q_to_f64(q)
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Scalar for Gq {
    const EXACT: bool = true;
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn from_q(q: &Q) -> Self {
        Complex::new(q.clone(), Q::zero())
    }
    fn magnitude(&self) -> f64 {
        q_to_f64(&self.re).hypot(q_to_f64(&self.im))
    }
}

impl Scalar for C64 {
    const EXACT: bool = false;
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn from_q(q: &Q) -> Self {
        Complex::new(q_to_f64(q), 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl ComplexScalar for Gq {
    fn from_gq(g: &Gq) -> Self {
        g.clone()
    }
    fn i() -> Self {
        Complex::new(Q::zero(), Q::one())
    }
    fn re_f64(&self) -> f64 {
        q_to_f64(&self.re)
    }
    fn im_f64(&self) -> f64 {
        q_to_f64(&self.im)
    }
}

impl ComplexScalar for C64 {
    fn from_gq(g: &Gq) -> Self {
        Complex::new(q_to_f64(&g.re), q_to_f64(&g.im))
    }
    fn i() -> Self {
        Complex::new(0.0, 1.0)
    }
    fn re_f64(&self) -> f64 {
        self.re
    }
    fn im_f64(&self) -> f64 {
        self.im
    }
}

pub fn q_to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Huge numerators/denominators: scale down before converting.
        let n = q.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = q.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn gq(re: Q, im: Q) -> Gq {
    Complex::new(re, im)
}

pub fn gq_int(re: i64, im: i64) -> Gq {
    Complex::new(qi(re), qi(im))
}

pub fn gq_from_q(re: Q) -> Gq {
    Complex::new(re, Q::zero())
}

pub fn gq_i() -> Gq {
    gq_int(0, 1)
}

/// `i^k` as a Gaussian rational.
pub fn i_pow(k: i64) -> Gq {
    match k.rem_euclid(4) {
        0 => gq_int(1, 0),
        1 => gq_int(0, 1),
        2 => gq_int(-1, 0),
        _ => gq_int(0, -1),
    }
}

pub fn q_pow(base: &Q, e: i64) -> Q {
    if e < 0 {
        return Q::one() / q_pow(base, -e);
    }
    let mut acc = Q::one();
    for _ in 0..e {
        acc = acc * base.clone();
    }
    acc
}

pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Exact text form: `a/b`, `c/d i`, or `a/b+c/d i`.
pub fn fmt_gq(z: &Gq) -> String {
    if z.im.is_zero() {
        return fmt_q(&z.re);
    }
    let im = if z.im.is_one() {
        "i".to_string()
    } else if (-z.im.clone()).is_one() {
        "-i".to_string()
    } else {
        format!("{} i", fmt_q(&z.im))
    };
    if z.re.is_zero() {
        im
    } else if z.im.is_negative() {
        format!("{}{}", fmt_q(&z.re), im)
    } else {
        format!("{}+{}", fmt_q(&z.re), im)
    }
}

pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().ok()?;
        let d: BigInt = b.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(Q::new(n, d))
    } else {
        let n: BigInt = s.parse().ok()?;
        Some(Q::from_integer(n))
    }
}

/// Inverse of [`fmt_gq`].
pub fn parse_gq(s: &str) -> Option<Gq> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    if !s.ends_with('i') {
        return parse_q(&s).map(gq_from_q);
    }
    let body = &s[..s.len() - 1];
    // split at the last sign that is not leading and not after '/'
    let bytes = body.as_bytes();
    let mut split = None;
    for idx in (1..bytes.len()).rev() {
        if (bytes[idx] == b'+' || bytes[idx] == b'-') && bytes[idx - 1] != b'/' {
            split = Some(idx);
            break;
        }
    }
    let (re, im) = match split {
        Some(idx) => (&body[..idx], &body[idx..]),
        None => ("", body),
    };
    let im = match im {
        "" | "+" => Q::one(),
        "-" => -Q::one(),
        other => parse_q(other.trim_start_matches('+'))?,
    };
    let re = if re.is_empty() { Q::zero() } else { parse_q(re)? };
    Some(gq(re, im))
}

/// Best rational approximation with denominator at most `bound`.
pub fn rationalize(x: f64, bound: u64) -> Q {
    if !x.is_finite() {
        return Q::zero();
    }
    let neg = x < 0.0;
    let mut v = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let bound = BigInt::from(bound);
    for _ in 0..64 {
        let a = v.floor();
        let ai = BigInt::from(a as u128);
        let p2 = &ai * &p1 + &p0;
        let q2 = &ai * &q1 + &q0;
        if q2 > bound {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = v - a;
        if frac < 1e-15 {
            break;
        }
        v = 1.0 / frac;
        if !v.is_finite() {
            break;
        }
    }
    if q1.is_zero() {
        return Q::zero();
    }
    let r = Q::new(p1, q1);
    if neg {
        -r
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gq_format_roundtrip() {
        for z in [
            gq_int(0, 0),
            gq_int(3, 0),
            gq(q(-1, 2), q(3, 4)),
            gq(q(1, 2), q(-3, 4)),
            gq(Q::zero(), q(5, 7)),
            gq_int(0, 1),
            gq_int(2, -1),
        ] {
            assert_eq!(parse_gq(&fmt_gq(&z)), Some(z.clone()), "{}", fmt_gq(&z));
        }
        assert_eq!(fmt_gq(&gq(q(1, 2), q(3, 4))), "1/2+3/4 i");
    }

    #[test]
    fn rationalize_recovers_simple_fractions() {
        assert_eq!(rationalize(0.75, 1000), q(3, 4));
        assert_eq!(rationalize(-1.0 / 3.0, 1000), q(-1, 3));
        let r = rationalize(std::f64::consts::PI, 1_000_000);
        assert!((q_to_f64(&r) - std::f64::consts::PI).abs() < 1e-11);
    }

    #[test]
    fn i_powers() {
        assert_eq!(i_pow(2), gq_int(-1, 0));
        assert_eq!(i_pow(-1), gq_int(0, -1));
        assert_eq!(gq_i() * gq_i(), i_pow(2));
    }
}
