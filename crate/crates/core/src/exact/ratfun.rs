//! Rational functions over Q(i) in lowest terms with monic denominator.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::{Poly, Scalar};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RatFun {
    num: Poly,
    den: Poly,
}

impl RatFun {
    /// Builds `num/den` and reduces it. Panics if `den` is zero.
    pub fn new(num: Poly, den: Poly) -> Self {
        assert!(!den.is_zero(), "rational function with zero denominator");
        if num.is_zero() {
            return RatFun::zero();
        }
        let g = Poly::gcd(&num, &den);
        let (n, _) = num.div_rem(&g);
        let (d, _) = den.div_rem(&g);
        let lead = d.leading();
        let inv = lead.inv().unwrap();
        RatFun { num: n.scale(&inv), den: d.scale(&inv) }
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFun { num: p, den: Poly::one() }
    }

    pub fn constant(c: Scalar) -> Self {
        RatFun::from_poly(Poly::constant(c))
    }

    pub fn z() -> Self {
        RatFun::from_poly(Poly::z())
    }

    /// `c / (z - x)^k`.
    pub fn pole(c: Scalar, x: &Scalar, k: u32) -> Self {
        RatFun::new(Poly::constant(c), Poly::linear(x).pow(k))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_constant()
    }

    pub fn as_constant(&self) -> Option<Scalar> {
        if self.den.is_constant() && self.num.is_constant() {
            Some(self.num.coeff(0))
        } else {
            None
        }
    }

    pub fn eval(&self, x: &Scalar) -> Option<Scalar> {
        let d = self.den.eval(x);
        if d.is_zero() {
            None
        } else {
            Some(&self.num.eval(x) / &d)
        }
    }

    pub fn derivative(&self) -> RatFun {
        let n = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        RatFun::new(n, &self.den * &self.den)
    }

    pub fn inv(&self) -> Option<RatFun> {
        if self.num.is_zero() {
            None
        } else {
            Some(RatFun::new(self.den.clone(), self.num.clone()))
        }
    }

    pub fn scale(&self, c: &Scalar) -> RatFun {
        if c.is_zero() {
            return RatFun::zero();
        }
        RatFun { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn pow(&self, e: i32) -> RatFun {
        let base = if e < 0 { self.inv().expect("zero to a negative power") } else { self.clone() };
        let mut acc = RatFun::one();
        for _ in 0..e.unsigned_abs() {
            acc = &acc * &base;
        }
        acc
    }

    /// Order of vanishing at `x` (negative for a pole), `None` for the zero function.
    pub fn order_at(&self, x: &Scalar) -> Option<i64> {
        if self.num.is_zero() {
            return None;
        }
        let a = self.num.root_multiplicity(x) as i64;
        let b = self.den.root_multiplicity(x) as i64;
        Some(a - b)
    }

    /// Order of vanishing at infinity in the coordinate `w = 1/z`.
    pub fn order_at_infinity(&self) -> Option<i64> {
        if self.num.is_zero() {
            return None;
        }
        Some(self.den.deg_i() - self.num.deg_i())
    }

    /// Substitution `z -> 1/w`, returning a rational function of `w`.
    pub fn invert_variable(&self) -> RatFun {
        if self.num.is_zero() {
            return RatFun::zero();
        }
        let dn = self.num.degree().unwrap();
        let dd = self.den.degree().unwrap();
        let d = dn.max(dd);
        RatFun::new(self.num.reversed(d), self.den.reversed(d))
    }

    /// Substitution `z -> z + x`.
    pub fn shift(&self, x: &Scalar) -> RatFun {
        RatFun::new(self.num.taylor_shift(x), self.den.taylor_shift(x))
    }
}

impl Zero for RatFun {
    fn zero() -> Self {
        RatFun { num: Poly::zero(), den: Poly::one() }
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl One for RatFun {
    fn one() -> Self {
        RatFun { num: Poly::one(), den: Poly::one() }
    }
}

impl From<Scalar> for RatFun {
    fn from(c: Scalar) -> Self {
        RatFun::constant(c)
    }
}

impl From<Poly> for RatFun {
    fn from(p: Poly) -> Self {
        RatFun::from_poly(p)
    }
}

impl<'a> Add<&'a RatFun> for &'a RatFun {
    type Output = RatFun;
    fn add(self, o: &RatFun) -> RatFun {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            return RatFun::new(&self.num + &o.num, self.den.clone());
        }
        let n = &(&self.num * &o.den) + &(&o.num * &self.den);
        RatFun::new(n, &self.den * &o.den)
    }
}

impl<'a> Sub<&'a RatFun> for &'a RatFun {
    type Output = RatFun;
    fn sub(self, o: &RatFun) -> RatFun {
        self + &(-o)
    }
}

impl<'a> Neg for &'a RatFun {
    type Output = RatFun;
    fn neg(self) -> RatFun {
        RatFun { num: -&self.num, den: self.den.clone() }
    }
}

impl<'a> Mul<&'a RatFun> for &'a RatFun {
    type Output = RatFun;
    fn mul(self, o: &RatFun) -> RatFun {
        if self.is_zero() || o.is_zero() {
            return RatFun::zero();
        }
        RatFun::new(&self.num * &o.num, &self.den * &o.den)
    }
}

impl<'a> Div<&'a RatFun> for &'a RatFun {
    type Output = RatFun;
    fn div(self, o: &RatFun) -> RatFun {
        self * &o.inv().expect("division by the zero rational function")
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<RatFun> for RatFun {
            type Output = RatFun;
            fn $m(self, o: RatFun) -> RatFun {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a RatFun> for RatFun {
            type Output = RatFun;
            fn $m(self, o: &RatFun) -> RatFun {
                (&self).$m(o)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for RatFun {
    type Output = RatFun;
    fn neg(self) -> RatFun {
        -&self
    }
}

impl fmt::Display for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_constant() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_with_monic_denominator() {
        let x = Scalar::from_int(2);
        let n = &Poly::linear(&x) * &Poly::constant(Scalar::from_int(3));
        let d = &Poly::linear(&x) * &Poly::new(vec![Scalar::from_int(4), Scalar::from_int(2)]);
        let f = RatFun::new(n, d);
        assert_eq!(f.den().leading(), Scalar::one());
        assert_eq!(f.den().degree(), Some(1));
        assert_eq!(f.eval(&Scalar::zero()), Some(Scalar::from_ratio(3, 4)));
    }

    #[test]
    fn orders_and_chart_change() {
        // (3z^2+1)/((z-2)^2 (z+1))
        let num = Poly::new(vec![Scalar::one(), Scalar::zero(), Scalar::from_int(3)]);
        let den = &Poly::linear(&Scalar::from_int(2)).pow(2) * &Poly::linear(&Scalar::from_int(-1));
        let f = RatFun::new(num, den);
        assert_eq!(f.order_at(&Scalar::from_int(2)), Some(-2));
        assert_eq!(f.order_at(&Scalar::from_int(-1)), Some(-1));
        assert_eq!(f.order_at_infinity(), Some(1));
        let w = Scalar::from_ratio(1, 7);
        assert_eq!(f.invert_variable().eval(&w), f.eval(&w.inv().unwrap()));
    }

    #[test]
    fn derivative_quotient_rule() {
        let f = RatFun::new(Poly::one(), Poly::linear(&Scalar::i()));
        let d = f.derivative();
        let expected = RatFun::new(Poly::constant(Scalar::from_int(-1)), Poly::linear(&Scalar::i()).pow(2));
        assert_eq!(d, expected);
    }
}
