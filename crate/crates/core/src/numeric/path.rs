//! Parametrized paths in the plane: segments, rays to infinity and circular arcs.

use num_rational::BigRational;
use rug::float::Constant;
use rug::Float;

use super::mp::{rational_to_float, Complex};
use crate::exact::Scalar;

#[derive(Clone, Debug)]
pub enum Path {
    /// `a + s (b - a)`, `s` in `[0, 1]`.
    Line { a: Complex, b: Complex },
    /// `p + s u` with `|u| = 1`, `s >= 0`.
    Ray { p: Complex, u: Complex },
    /// `c + r exp(i (theta0 + s sweep))`, `s` in `[0, 1]`.
    Arc { c: Complex, r: Float, theta0: Float, sweep: Float },
}

/// `q pi` as a float.
pub fn pi_times(q: &BigRational, prec: u32) -> Float {
    let mut t = Float::with_val(prec, Constant::Pi);
    t *= rational_to_float(q, prec);
    t
}

impl Path {
    pub fn line(a: &Scalar, b: &Scalar, prec: u32) -> Path {
        Path::Line { a: Complex::from_scalar(a, prec), b: Complex::from_scalar(b, prec) }
    }

    /// Ray from `p` in the direction `q pi`.
    pub fn ray(p: &Scalar, q: &BigRational, prec: u32) -> Path {
        Path::Ray { p: Complex::from_scalar(p, prec), u: Complex::cis(&pi_times(q, prec)) }
    }

    pub fn arc(c: &Scalar, r: &BigRational, theta0: &BigRational, sweep: &BigRational, prec: u32) -> Path {
        Path::Arc {
            c: Complex::from_scalar(c, prec),
            r: rational_to_float(r, prec),
            theta0: pi_times(theta0, prec),
            sweep: pi_times(sweep, prec),
        }
    }

    /// Full counterclockwise circle starting at angle 0.
    pub fn circle(c: &Scalar, r: BigRational, prec: u32) -> Path {
        Self::arc(c, &r, &BigRational::from_integer(0.into()), &BigRational::from_integer(2.into()), prec)
    }

    pub fn point(&self, s: f64, prec: u32) -> Complex {
        let sf = Float::with_val(prec, s);
        match self {
            Path::Line { a, b } => a.add(&b.sub(a).mul_real(&sf)),
            Path::Ray { p, u } => p.add(&u.mul_real(&sf)),
            Path::Arc { c, r, theta0, sweep } => {
                let th = Float::with_val(prec, theta0 + &(sweep * sf));
                c.add(&Complex::cis(&th).mul_real(r))
            }
        }
    }

    /// `|dz/ds|`.
    pub fn speed(&self, _s: f64) -> f64 {
        match self {
            Path::Line { a, b } => b.sub(a).abs_f64(),
            Path::Ray { .. } => 1.0,
            Path::Arc { r, sweep, .. } => r.to_f64() * sweep.to_f64().abs(),
        }
    }

    /// `dz/ds` as a floating complex number.
    pub fn tangent(&self, s: f64, prec: u32) -> Complex {
        match self {
            Path::Line { a, b } => b.sub(a),
            Path::Ray { u, .. } => u.clone(),
            Path::Arc { r, theta0, sweep, .. } => {
                let th = Float::with_val(prec, theta0 + &(sweep * Float::with_val(prec, s)));
                let rs = Float::with_val(prec, r * sweep);
                Complex::cis(&th).mul(&Complex::i(prec)).mul_real(&rs)
            }
        }
    }
}
