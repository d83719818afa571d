//! Arbitrary-precision complex numbers on top of MPFR floats.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use rug::float::Constant;
use rug::ops::Pow;
use rug::{Assign, Float};

use crate::exact::Scalar;

#[derive(Clone, PartialEq, Debug)]
pub struct Complex {
    pub re: Float,
    pub im: Float,
}

fn big_to_float(n: &BigInt, prec: u32) -> Float {
    let s = n.to_string();
    Float::with_val(prec, Float::parse(&s).expect("integer literal"))
}

pub fn rational_to_float(r: &BigRational, prec: u32) -> Float {
    let n = big_to_float(r.numer(), prec + 16);
    let d = big_to_float(r.denom(), prec + 16);
    Float::with_val(prec, &n / &d)
}

impl Complex {
    pub fn zero(prec: u32) -> Self {
        Complex { re: Float::new(prec), im: Float::new(prec) }
    }

    pub fn one(prec: u32) -> Self {
        Complex { re: Float::with_val(prec, 1), im: Float::new(prec) }
    }

    pub fn i(prec: u32) -> Self {
        Complex { re: Float::new(prec), im: Float::with_val(prec, 1) }
    }

    pub fn from_f64(re: f64, im: f64, prec: u32) -> Self {
        Complex { re: Float::with_val(prec, re), im: Float::with_val(prec, im) }
    }

    pub fn from_floats(re: Float, im: Float) -> Self {
        Complex { re, im }
    }

    pub fn real(re: Float) -> Self {
        let p = re.prec();
        Complex { re, im: Float::new(p) }
    }

    pub fn from_scalar(s: &Scalar, prec: u32) -> Self {
        Complex { re: rational_to_float(&s.re, prec), im: rational_to_float(&s.im, prec) }
    }

    pub fn from_i64(n: i64, prec: u32) -> Self {
        Complex { re: Float::with_val(prec, n), im: Float::new(prec) }
    }

    pub fn pi(prec: u32) -> Self {
        Complex::real(Float::with_val(prec, Constant::Pi))
    }

    /// `2 pi i`.
    pub fn two_pi_i(prec: u32) -> Self {
        let mut p = Float::with_val(prec, Constant::Pi);
        p *= 2;
        Complex { re: Float::new(prec), im: p }
    }

    /// `exp(i theta)` for real `theta`.
    pub fn cis(theta: &Float) -> Self {
        let (s, c) = theta.clone().sin_cos(Float::new(theta.prec()));
        Complex { re: c, im: s }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, o: &Complex) -> Complex {
        let p = self.prec();
        Complex { re: Float::with_val(p, &self.re + &o.re), im: Float::with_val(p, &self.im + &o.im) }
    }

    pub fn sub(&self, o: &Complex) -> Complex {
        let p = self.prec();
        Complex { re: Float::with_val(p, &self.re - &o.re), im: Float::with_val(p, &self.im - &o.im) }
    }

    pub fn neg(&self) -> Complex {
        Complex { re: Float::with_val(self.prec(), -&self.re), im: Float::with_val(self.prec(), -&self.im) }
    }

    pub fn conj(&self) -> Complex {
        Complex { re: self.re.clone(), im: Float::with_val(self.prec(), -&self.im) }
    }

    pub fn mul(&self, o: &Complex) -> Complex {
        let p = self.prec();
        let mut re = Float::with_val(p, &self.re * &o.re);
        re -= Float::with_val(p, &self.im * &o.im);
        let mut im = Float::with_val(p, &self.re * &o.im);
        im += Float::with_val(p, &self.im * &o.re);
        Complex { re, im }
    }

    pub fn mul_real(&self, r: &Float) -> Complex {
        let p = self.prec();
        Complex { re: Float::with_val(p, &self.re * r), im: Float::with_val(p, &self.im * r) }
    }

    pub fn div_real(&self, r: &Float) -> Complex {
        let p = self.prec();
        Complex { re: Float::with_val(p, &self.re / r), im: Float::with_val(p, &self.im / r) }
    }

    pub fn mul_i64(&self, k: i64) -> Complex {
        let p = self.prec();
        Complex { re: Float::with_val(p, &self.re * k), im: Float::with_val(p, &self.im * k) }
    }

    pub fn div_i64(&self, k: i64) -> Complex {
        let p = self.prec();
        Complex { re: Float::with_val(p, &self.re / k), im: Float::with_val(p, &self.im / k) }
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.prec();
        let mut n = Float::with_val(p, self.re.square_ref());
        n += Float::with_val(p, self.im.square_ref());
        n
    }

    pub fn inv(&self) -> Complex {
        let n = self.norm_sqr();
        let p = self.prec();
        Complex { re: Float::with_val(p, &self.re / &n), im: Float::with_val(p, -&self.im) / &n }
    }

    pub fn div(&self, o: &Complex) -> Complex {
        self.mul(&o.inv())
    }

    /// `self += a * b`.
    pub fn add_mul(&mut self, a: &Complex, b: &Complex, tmp: &mut Float) {
        tmp.assign(&a.re * &b.re);
        self.re += &*tmp;
        tmp.assign(&a.im * &b.im);
        self.re -= &*tmp;
        tmp.assign(&a.re * &b.im);
        self.im += &*tmp;
        tmp.assign(&a.im * &b.re);
        self.im += &*tmp;
    }

    pub fn add_assign(&mut self, o: &Complex) {
        self.re += &o.re;
        self.im += &o.im;
    }

    pub fn sub_assign(&mut self, o: &Complex) {
        self.re -= &o.re;
        self.im -= &o.im;
    }

    pub fn abs(&self) -> Float {
        let mut h = self.re.clone();
        h.hypot_mut(&self.im);
        h
    }

    pub fn abs_f64(&self) -> f64 {
        self.abs().to_f64()
    }

    /// Principal argument in `(-pi, pi]`.
    pub fn arg(&self) -> Float {
        let mut y = self.im.clone();
        y.atan2_mut(&self.re);
        y
    }

    pub fn exp(&self) -> Complex {
        let e = Float::with_val(self.prec(), self.re.exp_ref());
        Complex::cis(&self.im).mul_real(&e)
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Complex {
        let m = self.abs().ln();
        Complex { re: m, im: self.arg() }
    }

    pub fn sqrt(&self) -> Complex {
        if self.is_zero() {
            return self.clone();
        }
        let mut half = self.ln();
        half.re /= 2;
        half.im /= 2;
        half.exp()
    }

    pub fn sin(&self) -> Complex {
        // sin(x+iy) = sin x cosh y + i cos x sinh y
        let p = self.prec();
        let (s, c) = self.re.clone().sin_cos(Float::new(p));
        let (sh, ch) = self.im.clone().sinh_cosh(Float::new(p));
        Complex { re: s * &ch, im: c * &sh }
    }

    pub fn cos(&self) -> Complex {
        let p = self.prec();
        let (s, c) = self.re.clone().sin_cos(Float::new(p));
        let (sh, ch) = self.im.clone().sinh_cosh(Float::new(p));
        Complex { re: c * &ch, im: -(s * &sh) }
    }

    pub fn powi(&self, k: i64) -> Complex {
        if k < 0 {
            return self.inv().powi(-k);
        }
        let mut acc = Complex::one(self.prec());
        let mut base = self.clone();
        let mut e = k as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// `self^s` on the branch whose argument is `arg`, i.e. `|self|^s exp(i s arg)`.
    pub fn pow_with_arg(&self, s: &Complex, arg: &Float) -> Complex {
        let l = Complex { re: self.abs().ln(), im: arg.clone() };
        l.mul(s).exp()
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    /// Fixed-format decimal rendering with `digits` significant digits per part.
    pub fn to_decimal(&self, digits: usize) -> (String, String) {
        (float_to_decimal(&self.re, digits), float_to_decimal(&self.im, digits))
    }

    pub fn max_abs(v: &[Complex]) -> f64 {
        v.iter().map(|c| c.abs_f64()).fold(0.0, f64::max)
    }

    pub fn with_prec(&self, prec: u32) -> Complex {
        Complex { re: Float::with_val(prec, &self.re), im: Float::with_val(prec, &self.im) }
    }

    pub fn pow_float(x: &Float, e: i64) -> Float {
        Float::with_val(x.prec(), x.pow(e as i32))
    }
}

/// Decimal string `d.ddddde±x` with a fixed number of significant digits; zero is `0`.
pub fn float_to_decimal(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let s = x.to_string_radix(10, Some(digits.max(2)));
    // MPFR renders as `d.ddde±x` or plain; normalize the exponent marker.
    s.replace("e+", "e")
}

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.to_decimal(20);
        write!(f, "({a}, {b})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elementary_functions() {
        let p = 200;
        let z = Complex::from_f64(0.3, -1.2, p);
        let e = z.exp().ln();
        assert!(e.sub(&z).abs_f64() < 1e-55);
        let s = z.sqrt();
        assert!(s.mul(&s).sub(&z).abs_f64() < 1e-55);
        let sc = z.sin().mul(&z.sin()).add(&z.cos().mul(&z.cos()));
        assert!(sc.sub(&Complex::one(p)).abs_f64() < 1e-55);
        let q = z.powi(-3).mul(&z.powi(3));
        assert!(q.sub(&Complex::one(p)).abs_f64() < 1e-55);
    }

    #[test]
    fn scalar_conversion() {
        let s = Scalar::gaussian((1, 3), (-5, 7));
        let c = Complex::from_scalar(&s, 256);
        let back = c.mul_i64(21);
        assert!(back.sub(&Complex::from_f64(7.0, -15.0, 256)).abs_f64() < 1e-70);
    }
}
