//! Exact arithmetic over Q(i): scalars, polynomials, rational functions,
//! truncated Laurent series and linear algebra.

mod laurent;
mod matrix;
mod poly;
mod ratfun;
pub mod roots;
mod scalar;

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;

pub use laurent::{form_expand, poly_to_laurent, residue_at, series_div, series_expand, Laurent};
pub use matrix::{solve_exact, Field, LinearSolution, Mat, Matrix, RatMatrix};
pub use poly::Poly;
pub use ratfun::RatFun;
pub use scalar::{ParseScalarError, Scalar};

use crate::Error;

/// A point of the Riemann sphere.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Point {
    Finite(Scalar),
    Infinity,
}

impl Point {
    pub fn finite(&self) -> Option<&Scalar> {
        match self {
            Point::Finite(x) => Some(x),
            Point::Infinity => None,
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Point::Infinity)
    }

    /// Deterministic ordering: finite points lexicographically, infinity last.
    pub fn sort_key_cmp(&self, o: &Point) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match (self, o) {
            (Point::Finite(a), Point::Finite(b)) => a.lex_cmp(b),
            (Point::Finite(_), Point::Infinity) => Less,
            (Point::Infinity, Point::Finite(_)) => Greater,
            (Point::Infinity, Point::Infinity) => Equal,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Finite(x) => write!(f, "{x}"),
            Point::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Point {
    type Err = ParseScalarError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t == "inf" || t == "infinity" || t == "∞" {
            Ok(Point::Infinity)
        } else {
            t.parse().map(Point::Finite)
        }
    }
}

/// Partial fraction decomposition `poly + sum_x sum_k c_{x,k} / (z - x)^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialFractions {
    pub polynomial: Poly,
    /// Poles in increasing order with coefficients `c_1, c_2, ...` of `(z - x)^{-k}`.
    pub poles: Vec<(Scalar, Vec<Scalar>)>,
}

impl PartialFractions {
    pub fn recombine(&self) -> RatFun {
        let mut acc = RatFun::from_poly(self.polynomial.clone());
        for (x, cs) in &self.poles {
            for (k, c) in cs.iter().enumerate() {
                if !c.is_zero() {
                    acc = &acc + &RatFun::pole(c.clone(), x, k as u32 + 1);
                }
            }
        }
        acc
    }
}

/// Decomposes `f` into partial fractions over Q(i).
pub fn partial_fractions(f: &RatFun) -> Result<PartialFractions, Error> {
    let (roots, rest) = roots::gaussian_rational_roots(f.den());
    if rest.degree().unwrap_or(0) > 0 {
        return Err(Error::IrreduciblePoleFactor { factor: rest.to_string(), degree: rest.degree().unwrap() });
    }
    let (polynomial, _) = f.num().div_rem(f.den());
    let mut poles = Vec::new();
    for (x, m) in roots {
        let s = series_expand(f, &Point::Finite(x.clone()), -1);
        let cs = (1..=m as i64).map(|k| s.coeff_or_zero(-k)).collect();
        poles.push((x, cs));
    }
    Ok(PartialFractions { polynomial, poles })
}

/// Finite poles of `f` with their orders, in increasing order.
pub fn poles(f: &RatFun) -> Result<Vec<(Scalar, usize)>, Error> {
    let (roots, rest) = roots::gaussian_rational_roots(f.den());
    if rest.degree().unwrap_or(0) > 0 {
        return Err(Error::IrreduciblePoleFactor { factor: rest.to_string(), degree: rest.degree().unwrap() });
    }
    Ok(roots)
}

/// Residue of `f dz` summed over all points, which vanishes for every rational `f`.
pub fn total_residue(f: &RatFun) -> Result<Scalar, Error> {
    let mut acc = residue_at(f, &Point::Infinity);
    for (x, _) in poles(f)? {
        acc += &residue_at(f, &Point::Finite(x));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn partial_fraction_example() {
        // (3 z^2 + 1) / ((z - 2)^2 (z + 1))
        let num = Poly::new(vec![Scalar::from_int(1), Scalar::zero(), Scalar::from_int(3)]);
        let den = &Poly::linear(&Scalar::from_int(2)).pow(2) * &Poly::linear(&Scalar::from_int(-1));
        let f = RatFun::new(num, den);
        let pf = partial_fractions(&f).unwrap();
        assert_eq!(pf.recombine(), f);
        assert_eq!(pf.poles.len(), 2);
        assert_eq!(pf.poles[0].0, Scalar::from_int(-1));
        assert_eq!(pf.poles[0].1, vec![Scalar::from_ratio(4, 9)]);
        assert_eq!(pf.poles[1].1, vec![Scalar::from_ratio(23, 9), Scalar::from_ratio(13, 3)]);
    }

    #[test]
    fn irreducible_factor_is_reported() {
        let f = RatFun::new(Poly::one(), Poly::new(vec![Scalar::from_int(-2), Scalar::zero(), Scalar::one()]));
        assert!(matches!(partial_fractions(&f), Err(Error::IrreduciblePoleFactor { degree: 2, .. })));
        let g = RatFun::new(Poly::one(), Poly::new(vec![Scalar::one(), Scalar::zero(), Scalar::one()]));
        assert_eq!(partial_fractions(&g).unwrap().poles.len(), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        /// `poly + sum c / (z - x)^k` with Gaussian-integer poles.
        fn ratfun() -> impl Strategy<Value = RatFun> {
            let term = (-3i64..=3, -2i64..=2, 1u32..=3, -5i64..=5, 1i64..=4);
            (prop::collection::vec(term, 0..4), prop::collection::vec((-4i64..=4, 1i64..=3), 0..3)).prop_map(|(terms, poly)| {
                let p = Poly::new(poly.iter().map(|&(n, d)| Scalar::from_ratio(n, d)).collect());
                let mut f = RatFun::from_poly(p);
                for (a, b, k, n, d) in terms {
                    let x = Scalar::gaussian((a, 1), (b, 1));
                    f = &f + &RatFun::pole(Scalar::from_ratio(n, d), &x, k);
                }
                f
            })
        }

        fn point() -> impl Strategy<Value = Point> {
            prop_oneof![Just(Point::Infinity), (-3i64..=3, -2i64..=2).prop_map(|(a, b)| Point::Finite(Scalar::gaussian((a, 2), (b, 1))))]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn residues_sum_to_zero(f in ratfun()) {
                prop_assert!(total_residue(&f).unwrap().is_zero());
            }

            #[test]
            fn partial_fractions_recombine(f in ratfun()) {
                prop_assert_eq!(partial_fractions(&f).unwrap().recombine(), f);
            }

            #[test]
            fn expansion_is_multiplicative(f in ratfun(), g in ratfun(), x in point()) {
                let n = 6;
                let lhs = series_expand(&(&f * &g), &x, n);
                let rhs = series_expand(&f, &x, n + 8).mul(&series_expand(&g, &x, n + 8)).truncate(n + 1);
                for k in -8..=n {
                    prop_assert_eq!(lhs.coeff_or_zero(k), rhs.coeff_or_zero(k));
                }
            }

            #[test]
            fn solve_exact_solves(entries in prop::collection::vec(-3i64..=3, 12), b in prop::collection::vec(-3i64..=3, 3)) {
                let m = Mat::from_fn(3, 4, |r, c| Scalar::from_int(entries[r * 4 + c]));
                let rhs: Vec<Scalar> = b.iter().map(|&x| Scalar::from_int(x)).collect();
                if let LinearSolution::Consistent { particular, kernel } = solve_exact(&m, &rhs) {
                    prop_assert_eq!(m.mul_vec(&particular), rhs);
                    for k in &kernel {
                        prop_assert!(m.mul_vec(k).iter().all(|x| x.is_zero()));
                    }
                    prop_assert_eq!(kernel.len(), 4 - m.rank());
                } else {
                    let aug = Mat::from_fn(3, 5, |r, c| if c < 4 { m[(r, c)].clone() } else { rhs[r].clone() });
                    prop_assert!(m.rank() < aug.rank());
                }
            }
        }
    }
}
