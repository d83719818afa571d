//! Truncated Laurent series at a point of the Riemann sphere.

use std::fmt;

use num_traits::{One, Zero};

use super::{Point, Poly, RatFun, Scalar};

/// `sum_{k >= start} c_k t^k`, with coefficients known exactly for exponents `< order`.
///
/// `t` is `z - x` at a finite point and `1/z` at infinity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Laurent {
    pub point: Point,
    start: i64,
    coeffs: Vec<Scalar>,
    order: i64,
}

impl Laurent {
    pub fn new(point: Point, start: i64, mut coeffs: Vec<Scalar>, order: i64) -> Self {
        let keep = (order - start).max(0) as usize;
        coeffs.truncate(keep);
        let mut s = Laurent { point, start, coeffs, order };
        s.normalize();
        s
    }

    pub fn zero(point: Point, order: i64) -> Self {
        Laurent { point, start: order, coeffs: Vec::new(), order }
    }

    fn normalize(&mut self) {
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.start += lead as i64;
        }
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.start = self.order;
        }
    }

    pub fn order(&self) -> i64 {
        self.order
    }

    /// Lowest exponent with a nonzero coefficient, if one is known.
    pub fn valuation(&self) -> Option<i64> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.start)
        }
    }

    /// Coefficient of `t^k`; `None` beyond the truncation order.
    pub fn coeff(&self, k: i64) -> Option<Scalar> {
        if k >= self.order {
            return None;
        }
        if k < self.start || k >= self.start + self.coeffs.len() as i64 {
            return Some(Scalar::zero());
        }
        Some(self.coeffs[(k - self.start) as usize].clone())
    }

    pub fn coeff_or_zero(&self, k: i64) -> Scalar {
        self.coeff(k).unwrap_or_else(Scalar::zero)
    }

    pub fn residue(&self) -> Scalar {
        self.coeff(-1).expect("residue beyond truncation order")
    }

    pub fn truncate(&self, order: i64) -> Laurent {
        Laurent::new(self.point.clone(), self.start, self.coeffs.clone(), order.min(self.order))
    }

    /// Multiplies by `t^m`.
    pub fn shift(&self, m: i64) -> Laurent {
        Laurent::new(self.point.clone(), self.start + m, self.coeffs.clone(), self.order + m)
    }

    pub fn scale(&self, c: &Scalar) -> Laurent {
        Laurent::new(self.point.clone(), self.start, self.coeffs.iter().map(|x| x * c).collect(), self.order)
    }

    pub fn add(&self, o: &Laurent) -> Laurent {
        let order = self.order.min(o.order);
        let start = self.start.min(o.start).min(order);
        let coeffs = (start..order).map(|k| &self.coeff_or_zero(k) + &o.coeff_or_zero(k)).collect();
        Laurent::new(self.point.clone(), start, coeffs, order)
    }

    pub fn sub(&self, o: &Laurent) -> Laurent {
        self.add(&o.scale(&Scalar::from_int(-1)))
    }

    pub fn mul(&self, o: &Laurent) -> Laurent {
        let (va, vb) = match (self.valuation(), o.valuation()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                let ord = match (self.valuation(), o.valuation()) {
                    (None, None) => self.order + o.order,
                    (None, Some(b)) => self.order + b,
                    (Some(a), None) => a + o.order,
                    _ => unreachable!(),
                };
                return Laurent::zero(self.point.clone(), ord);
            }
        };
        let order = (va + o.order).min(vb + self.order);
        let len = (order - va - vb).max(0) as usize;
        let mut c = vec![Scalar::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                if !b.is_zero() {
                    c[i + j] += &(a * b);
                }
            }
        }
        Laurent::new(self.point.clone(), va + vb, c, order)
    }

    /// Multiplicative inverse; `None` if no coefficient is known to be nonzero.
    pub fn inv(&self) -> Option<Laurent> {
        let v = self.valuation()?;
        let n = (self.order - v) as usize;
        let b0inv = self.coeffs[0].inv().unwrap();
        let mut c: Vec<Scalar> = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = if k == 0 { Scalar::one() } else { Scalar::zero() };
            for j in 1..=k.min(self.coeffs.len() - 1) {
                acc -= &(&self.coeffs[j] * &c[k - j]);
            }
            c.push(&acc * &b0inv);
        }
        Some(Laurent::new(self.point.clone(), -v, c, self.order - 2 * v))
    }

    /// Derivative with respect to the local coordinate `t`.
    pub fn derivative(&self) -> Laurent {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * &Scalar::from_int(self.start + i as i64))
            .collect();
        Laurent::new(self.point.clone(), self.start - 1, coeffs, self.order - 1)
    }

    /// The polar part together with the terms below the truncation order, as pairs
    /// `(exponent, coefficient)` of nonzero terms.
    pub fn terms(&self) -> Vec<(i64, Scalar)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (self.start + i as i64, c.clone()))
            .collect()
    }
}

impl fmt::Display for Laurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = match &self.point {
            Point::Finite(x) if x.is_zero() => "z".to_string(),
            Point::Finite(x) => format!("(z - ({x}))"),
            Point::Infinity => "w".to_string(),
        };
        let mut first = true;
        for (k, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})*{t}^{k}")?;
        }
        if !first {
            write!(f, " + ")?;
        }
        write!(f, "O({t}^{})", self.order)
    }
}

/// Power series quotient `a/b` with `b(0) != 0`, first `n` coefficients.
pub fn series_div(a: &[Scalar], b: &[Scalar], n: usize) -> Vec<Scalar> {
    let b0inv = b[0].inv().expect("series division by a non-unit");
    let mut c: Vec<Scalar> = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = a.get(k).cloned().unwrap_or_else(Scalar::zero);
        for j in 1..=k.min(b.len().saturating_sub(1)) {
            if !b[j].is_zero() && !c[k - j].is_zero() {
                acc -= &(&b[j] * &c[k - j]);
            }
        }
        c.push(&acc * &b0inv);
    }
    c
}

/// Expansion of a rational function in the local coordinate at `x`, exact through `t^n`.
pub fn series_expand(f: &RatFun, x: &Point, n: i64) -> Laurent {
    let g = match x {
        Point::Finite(a) => f.shift(a),
        Point::Infinity => f.invert_variable(),
    };
    if g.num().is_zero() {
        return Laurent::zero(x.clone(), n + 1);
    }
    let m = g.den().valuation().unwrap() as i64;
    let d: Vec<Scalar> = g.den().coeffs()[m as usize..].to_vec();
    let count = (n + 1 + m).max(0) as usize;
    let c = series_div(g.num().coeffs(), &d, count);
    Laurent::new(x.clone(), -m, c, n + 1)
}

/// Residue of the one-form `f dz` at `x`; at infinity `dz = -dw/w^2` is taken into account.
pub fn residue_at(f: &RatFun, x: &Point) -> Scalar {
    match x {
        Point::Finite(_) => series_expand(f, x, -1).coeff_or_zero(-1),
        Point::Infinity => -series_expand(f, x, 1).coeff_or_zero(1),
    }
}

/// Expansion of the coefficient of the form `f dz` in the local chart at `x`:
/// at infinity this is the coefficient of `dw`, namely `-f(1/w)/w^2`.
pub fn form_expand(f: &RatFun, x: &Point, n: i64) -> Laurent {
    match x {
        Point::Finite(_) => series_expand(f, x, n),
        Point::Infinity => series_expand(f, x, n + 2).shift(-2).scale(&Scalar::from_int(-1)),
    }
}

/// Polynomial in the local coordinate whose expansion at `x` is `p(z)`; infinity uses `z = 1/w`.
pub fn poly_to_laurent(p: &Poly, x: &Point, n: i64) -> Laurent {
    series_expand(&RatFun::from_poly(p.clone()), x, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn residues_of_dz_over_z() {
        let f = RatFun::new(Poly::one(), Poly::z());
        assert_eq!(residue_at(&f, &Point::Finite(Scalar::zero())), Scalar::one());
        assert_eq!(residue_at(&f, &Point::Infinity), Scalar::from_int(-1));
    }

    #[test]
    fn expansion_recombines() {
        // 1/(z (1 - z)) at 0 = 1/z + 1 + z + ...
        let f = RatFun::new(Poly::one(), Poly::new(vec![Scalar::zero(), Scalar::one(), Scalar::from_int(-1)]));
        let s = series_expand(&f, &Point::Finite(Scalar::zero()), 3);
        assert_eq!(s.valuation(), Some(-1));
        for k in -1..=3 {
            assert_eq!(s.coeff(k), Some(Scalar::one()));
        }
        assert_eq!(s.coeff(4), None);
    }

    #[test]
    fn product_and_inverse() {
        let f = RatFun::new(Poly::linear(&Scalar::from_int(3)), Poly::linear(&Scalar::from_int(1)).pow(2));
        let x = Point::Finite(Scalar::from_int(1));
        let s = series_expand(&f, &x, 6);
        let inv = s.inv().unwrap();
        let p = s.mul(&inv);
        assert_eq!(p.coeff(0), Some(Scalar::one()));
        for k in 1..p.order() {
            assert_eq!(p.coeff(k), Some(Scalar::zero()));
        }
    }
}
