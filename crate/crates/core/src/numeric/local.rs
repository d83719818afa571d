//! Formal solutions at a singular point evaluated numerically.
//!
//! At a regular singular point the series converge and are summed to working
//! precision; at an irregular point they are asymptotic and summed up to the
//! smallest term.

use num_traits::Zero;
use rug::Float;

use super::cmat::CMat;
use super::mp::Complex;
use super::transport::mag;
use crate::connection::{Connection, Form};
use crate::exact::{Point, Scalar};
use crate::formal::{formal_solutions, newton_polygon, FormalSolution, VSeries};
use crate::{Error, Result};

const START_TERMS: usize = 24;
const MAX_TERMS_REGULAR: usize = 1536;
const MAX_TERMS_IRREGULAR: usize = 384;

#[derive(Clone, Debug)]
struct NumSolution {
    phi: Vec<Complex>,
    exponent: Complex,
    coeffs: Vec<Vec<Complex>>,
}

/// A basis of formal solutions at `point`, with coefficients extended on demand.
#[derive(Clone, Debug)]
pub struct LocalFrame {
    pub point: Point,
    pub regular: bool,
    pub solutions: Vec<FormalSolution>,
    conn: Connection,
    terms: usize,
    prec: u32,
    num: Vec<NumSolution>,
}

/// Chart coordinate `t` of `z`: `z - x`, or `1/z` at infinity.
pub fn chart(x: &Point, z: &Complex) -> Complex {
    match x {
        Point::Finite(c) => z.sub(&Complex::from_scalar(c, z.prec())),
        Point::Infinity => z.inv(),
    }
}

/// Inverse of [`chart`].
pub fn unchart(x: &Point, t: &Complex) -> Complex {
    match x {
        Point::Finite(c) => t.add(&Complex::from_scalar(c, t.prec())),
        Point::Infinity => t.inv(),
    }
}

/// Radius in the chart coordinate of the largest punctured disc at `x` free of other points of `D`
/// (1 when there are none).
pub fn local_radius(conn: &Connection, x: &Point) -> f64 {
    let others: Vec<(f64, f64)> = conn
        .singular
        .iter()
        .filter(|p| *p != x)
        .filter_map(|p| p.finite())
        .map(|s| s.to_f64())
        .collect();
    let r = match x {
        Point::Finite(c) => {
            let (cr, ci) = c.to_f64();
            others.iter().map(|(a, b)| (a - cr).hypot(b - ci)).fold(f64::INFINITY, f64::min)
        }
        Point::Infinity => {
            let m = others.iter().map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max);
            if m > 0.0 {
                1.0 / m
            } else {
                f64::INFINITY
            }
        }
    };
    if r.is_finite() {
        r
    } else {
        1.0
    }
}

/// `ln|t| + i arg` for the chosen determination of the argument.
pub fn log_with_arg(t: &Complex, arg: &Float) -> Complex {
    Complex::from_floats(t.abs().ln(), arg.clone())
}

impl LocalFrame {
    pub fn new(conn: &Connection, x: &Point, prec: u32) -> Result<Self> {
        let regular = newton_polygon(conn, x)?.is_regular();
        let mut f = LocalFrame {
            point: x.clone(),
            regular,
            solutions: Vec::new(),
            conn: conn.clone(),
            terms: 0,
            prec,
            num: Vec::new(),
        };
        f.extend(START_TERMS)?;
        Ok(f)
    }

    fn extend(&mut self, terms: usize) -> Result<()> {
        let sols = formal_solutions(&self.conn, &self.point, terms)?;
        let p = self.prec;
        self.num = sols
            .iter()
            .map(|s| NumSolution {
                phi: s.phi.iter().map(|c| Complex::from_scalar(c, p)).collect(),
                exponent: Complex::from_scalar(&s.exponent, p),
                coeffs: s.series.coeffs.iter().map(|v| v.iter().map(|c| Complex::from_scalar(c, p)).collect()).collect(),
            })
            .collect();
        self.solutions = sols;
        self.terms = terms;
        Ok(())
    }

    fn grow(&mut self) -> Result<bool> {
        let cap = if self.regular { MAX_TERMS_REGULAR } else { MAX_TERMS_IRREGULAR };
        if self.terms >= cap {
            return Ok(false);
        }
        self.extend((self.terms * 2).min(cap))?;
        Ok(true)
    }

    pub fn len(&self) -> usize {
        self.num.len()
    }

    pub fn is_empty(&self) -> bool {
        self.num.is_empty()
    }

    /// Whether solution `k` has a nontrivial exponential factor.
    pub fn is_exponential(&self, k: usize) -> bool {
        self.solutions[k].phi_degree() > 0
    }

    /// `exp(phi(t)) t^exponent` on the branch with argument `arg`.
    pub fn prefactor(&self, k: usize, t: &Complex, arg: &Float) -> Complex {
        let s = &self.num[k];
        let mut e = s.exponent.mul(&log_with_arg(t, arg));
        let tinv = t.inv();
        let mut pw = tinv.clone();
        for c in &s.phi {
            e.add_assign(&c.mul(&pw));
            pw = pw.mul(&tinv);
        }
        e.exp()
    }

    /// Real part of `phi(t)`, the exponential growth rate of solution `k` at `t`.
    pub fn growth(&self, k: usize, t: &Complex) -> f64 {
        let s = &self.num[k];
        let tinv = t.inv();
        let mut pw = tinv.clone();
        let mut e = Complex::zero(self.prec);
        for c in &s.phi {
            e.add_assign(&c.mul(&pw));
            pw = pw.mul(&tinv);
        }
        e.re.to_f64()
    }

    /// The power series part of solution `k` at `t`, to relative accuracy `tol`.
    pub fn series_value(&mut self, k: usize, t: &Complex, tol: f64) -> Result<Vec<Complex>> {
        loop {
            let r = if self.regular { self.sum_convergent(k, t, tol) } else { self.sum_asymptotic(k, t, tol) };
            match r {
                Some(Ok(v)) => return Ok(v),
                Some(Err(e)) => return Err(e),
                None => {
                    if !self.grow()? {
                        return Err(Error::TailTooLarge {
                            point: self.point.to_string(),
                            estimate: self.tail_estimate(k, t),
                        });
                    }
                }
            }
        }
    }

    fn tail_estimate(&self, k: usize, t: &Complex) -> f64 {
        let c = &self.num[k].coeffs;
        let at = t.abs_f64();
        let mx = c.iter().enumerate().map(|(j, v)| vmag(v) * at.powi(j as i32)).fold(0.0, f64::max);
        c.last().map_or(0.0, |v| vmag(v) * at.powi(c.len() as i32 - 1)) / mx.max(f64::MIN_POSITIVE)
    }

    fn sum_convergent(&self, k: usize, t: &Complex, tol: f64) -> Option<Result<Vec<Complex>>> {
        let c = &self.num[k].coeffs;
        let n = c.first().map_or(0, |v| v.len());
        let mut acc = vec![Complex::zero(self.prec); n];
        let mut pw = Complex::one(self.prec);
        let mut mx = 0.0f64;
        let mut small = 0;
        for v in c {
            let mut m = 0.0f64;
            for (a, ci) in acc.iter_mut().zip(v) {
                let term = ci.mul(&pw);
                m = m.max(mag(&term));
                a.add_assign(&term);
            }
            mx = mx.max(m);
            if m <= tol * mx {
                small += 1;
                if small >= 4 {
                    return Some(Ok(acc));
                }
            } else {
                small = 0;
            }
            pw = pw.mul(t);
        }
        None
    }

    fn sum_asymptotic(&self, k: usize, t: &Complex, tol: f64) -> Option<Result<Vec<Complex>>> {
        let c = &self.num[k].coeffs;
        let at = t.abs_f64();
        let mags: Vec<f64> = c.iter().enumerate().map(|(j, v)| vmag(v) * at.powi(j as i32)).collect();
        let mx = mags.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        // a finite series, or one that is negligible from some index on
        let mut cut = None;
        let mut small = 0;
        for (j, m) in mags.iter().enumerate() {
            if *m <= tol * mx {
                small += 1;
                if small >= 4 {
                    cut = Some(j + 1);
                    break;
                }
            } else {
                small = 0;
            }
        }
        let cut = match cut {
            Some(j) => j,
            None => {
                // smallest nonzero term, ignoring trailing exact zeros
                let nz: Vec<usize> = (0..mags.len()).filter(|&j| mags[j] > 0.0).collect();
                let jmin = *nz.iter().min_by(|&&a, &&b| mags[a].partial_cmp(&mags[b]).unwrap())?;
                if jmin + 2 >= mags.len() {
                    return None;
                }
                if mags[jmin] > tol * mx {
                    return Some(Err(Error::TailTooLarge { point: self.point.to_string(), estimate: mags[jmin] / mx }));
                }
                jmin
            }
        };
        let n = c.first().map_or(0, |v| v.len());
        let mut acc = vec![Complex::zero(self.prec); n];
        let mut pw = Complex::one(self.prec);
        for v in &c[..cut] {
            for (a, ci) in acc.iter_mut().zip(v) {
                a.add_assign(&ci.mul(&pw));
            }
            pw = pw.mul(t);
        }
        Some(Ok(acc))
    }

    /// Value of solution `k` at chart coordinate `t` on the branch with argument `arg`.
    pub fn value(&mut self, k: usize, t: &Complex, arg: &Float, tol: f64) -> Result<Vec<Complex>> {
        let s = self.series_value(k, t, tol)?;
        let f = self.prefactor(k, t, arg);
        Ok(s.iter().map(|c| c.mul(&f)).collect())
    }

    /// Matrix whose columns are the solutions at `t`.
    pub fn frame(&mut self, t: &Complex, arg: &Float, tol: f64) -> Result<CMat> {
        let n = self.len();
        let cols: Vec<Vec<Complex>> = (0..n).map(|k| self.value(k, t, arg, tol)).collect::<Result<_>>()?;
        Ok(CMat::from_fn(n, n, |r, c| cols[c][r].clone()))
    }

    /// Coordinates of the flat section with value `y` at `t` in the local basis.
    pub fn decompose(&mut self, t: &Complex, arg: &Float, y: &[Complex], tol: f64) -> Result<Vec<Complex>> {
        self.frame(t, arg, tol)?.solve(y)
    }

    /// `int_0^{t_a} <solution k, h>` in the chart, taken as the analytic continuation in the
    /// exponent (the finite part when it diverges). Only for regular singular points.
    ///
    /// Fails when a logarithmic term would appear, i.e. when `exponent + m + 1 = 0` with a
    /// nonzero coefficient.
    pub fn regularized_integral(&mut self, k: usize, h: &Form, t_a: &Complex, arg: &Float, tol: f64) -> Result<Complex> {
        assert!(self.regular);
        // make sure the series converges at t_a
        self.series_value(k, t_a, tol)?;
        let terms = self.num[k].coeffs.len();
        let hs = VSeries::from_form(h, &self.point, terms as i64);
        let hnum: Vec<Vec<Complex>> =
            hs.coeffs.iter().map(|v| v.iter().map(|c| Complex::from_scalar(c, self.prec)).collect()).collect();
        let lam = self.solutions[k].exponent.clone();
        let sol = &self.num[k];
        let p = self.prec;
        let mut acc = Complex::zero(p);
        let mut mx = 0.0f64;
        let mut small = 0;
        let lt = log_with_arg(t_a, arg);
        // g_m = sum_j c_j h_{m - j}, for t^{lambda + m}
        let m_lo = hs.start;
        let m_hi = hs.start + terms as i64;
        for m in m_lo..m_hi {
            let mut g = Complex::zero(p);
            for (j, cj) in sol.coeffs.iter().enumerate() {
                let hi = m - j as i64 - hs.start;
                if hi < 0 {
                    break;
                }
                if let Some(hv) = hnum.get(hi as usize) {
                    for (a, b) in cj.iter().zip(hv) {
                        g.add_assign(&a.mul(b));
                    }
                }
            }
            let e = &lam + &Scalar::from_int(m + 1);
            if e.is_zero() {
                if !exact_coeff(&self.solutions[k], &hs, m).is_zero() {
                    return Err(Error::InadmissibleEndpoint {
                        point: self.point.to_string(),
                        reason: "the regularized integral has a logarithmic term".into(),
                    });
                }
                continue;
            }
            let ec = Complex::from_scalar(&e, p);
            let term = g.mul(&ec.mul(&lt).exp()).div(&ec);
            let tm = mag(&term);
            mx = mx.max(tm);
            acc.add_assign(&term);
            if tm <= tol * mx {
                small += 1;
                if small >= 4 && m > 0 {
                    return Ok(acc);
                }
            } else {
                small = 0;
            }
        }
        if self.grow()? {
            return self.regularized_integral(k, h, t_a, arg, tol);
        }
        Err(Error::TailTooLarge { point: self.point.to_string(), estimate: mx })
    }
}

fn vmag(v: &[Complex]) -> f64 {
    v.iter().map(mag).fold(0.0, f64::max)
}

fn exact_coeff(s: &FormalSolution, h: &VSeries, m: i64) -> Scalar {
    let mut g = Scalar::zero();
    for (j, cj) in s.series.coeffs.iter().enumerate() {
        let hv = h.get(m - j as i64);
        for (a, b) in cj.iter().zip(&hv) {
            g += &(a * b);
        }
    }
    g
}
