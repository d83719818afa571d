//! Analytic continuation of flat sections by truncated Taylor stepping, with the
//! path integrals of paired forms accumulated along the way.

use rug::Float;

use super::mp::Complex;
use super::path::Path;
use super::policy::PrecisionPolicy;
use crate::connection::Connection;
use crate::exact::{Point, RatFun, RatMatrix};
use crate::{Error, Result};

/// A rational function with complex floating coefficients.
#[derive(Clone, Debug)]
pub struct NumRat {
    num: Vec<Complex>,
    den: Vec<Complex>,
}

fn horner(c: &[Complex], z: &Complex, prec: u32) -> Complex {
    let mut acc = Complex::zero(prec);
    for a in c.iter().rev() {
        acc = acc.mul(z).add(a);
    }
    acc
}

/// Coefficients of `p(z0 + h)` in `h`.
fn taylor_shift(c: &[Complex], z0: &Complex) -> Vec<Complex> {
    let mut a = c.to_vec();
    let n = a.len();
    for i in 0..n.saturating_sub(1) {
        for j in (i..n - 1).rev() {
            let t = a[j + 1].mul(z0);
            a[j].add_assign(&t);
        }
    }
    a
}

pub(crate) fn mag(c: &Complex) -> f64 {
    c.re.to_f64().abs().max(c.im.to_f64().abs())
}

impl NumRat {
    pub fn new(f: &RatFun, prec: u32) -> Self {
        let conv = |p: &crate::exact::Poly| p.coeffs().iter().map(|c| Complex::from_scalar(c, prec)).collect::<Vec<_>>();
        NumRat { num: conv(f.num()), den: conv(f.den()) }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    pub fn eval(&self, z: &Complex) -> Complex {
        let p = z.prec();
        if self.num.is_empty() {
            return Complex::zero(p);
        }
        horner(&self.num, z, p).div(&horner(&self.den, z, p))
    }

    /// Taylor coefficients at `z0`, each multiplied by `h^k`.
    pub fn taylor_scaled(&self, z0: &Complex, h: &Complex, terms: usize) -> Vec<Complex> {
        let p = z0.prec();
        if self.num.is_empty() {
            return vec![Complex::zero(p); terms];
        }
        let mut n = taylor_shift(&self.num, z0);
        let mut d = taylor_shift(&self.den, z0);
        let mut hk = Complex::one(p);
        for k in 0..n.len().max(d.len()) {
            if k < n.len() {
                n[k] = n[k].mul(&hk);
            }
            if k < d.len() {
                d[k] = d[k].mul(&hk);
            }
            hk = hk.mul(h);
        }
        let d0inv = d[0].inv();
        let mut q: Vec<Complex> = Vec::with_capacity(terms);
        let mut tmp = Float::new(p);
        for k in 0..terms {
            let mut acc = if k < n.len() { n[k].clone() } else { Complex::zero(p) };
            for j in 1..d.len().min(k + 1) {
                let mut neg = Complex::zero(p);
                neg.add_mul(&d[j], &q[k - j], &mut tmp);
                acc.sub_assign(&neg);
            }
            q.push(acc.mul(&d0inv));
        }
        q
    }
}

/// The connection matrix and the finite singular points, at working precision.
#[derive(Clone, Debug)]
pub struct NumSystem {
    pub n: usize,
    a: Vec<NumRat>,
    poles: Vec<Complex>,
    pub prec: u32,
}

/// Result of a single Taylor step.
struct StepOut {
    y: Vec<Complex>,
    integrals: Vec<Complex>,
}

/// State recorded at a requested parameter value.
#[derive(Clone, Debug)]
pub struct Stop {
    pub s: f64,
    pub z: Complex,
    pub y: Vec<Complex>,
    /// Integrals from the start of the walk.
    pub integrals: Vec<Complex>,
}

#[derive(Clone, Debug)]
pub struct Walk {
    pub s_end: f64,
    pub z_end: Complex,
    pub y: Vec<Complex>,
    pub integrals: Vec<Complex>,
    pub stops: Vec<Stop>,
    pub steps: usize,
}

/// How a walk ends.
#[derive(Clone, Copy, Debug)]
pub enum Until {
    /// At the given parameter.
    Param(f64),
    /// Once the integrands are negligible, heading toward the given parameter
    /// (`f64::INFINITY` for a ray); `anchor` is the singular point approached, if finite.
    Decay { toward: f64, tail: f64 },
}

pub fn numeric_vector(v: &[RatFun], prec: u32) -> Vec<NumRat> {
    v.iter().map(|f| NumRat::new(f, prec)).collect()
}

impl NumSystem {
    pub fn new(a: &RatMatrix, singular: &[Point], prec: u32) -> Self {
        let n = a.rows();
        let ents = a.to_rows().into_iter().flatten().map(|f| NumRat::new(&f, prec)).collect();
        let poles = singular.iter().filter_map(|p| p.finite()).map(|x| Complex::from_scalar(x, prec)).collect();
        NumSystem { n, a: ents, poles, prec }
    }

    pub fn from_connection(conn: &Connection, prec: u32) -> Self {
        Self::new(&conn.a, &conn.singular, prec)
    }

    /// Distance to the nearest finite singular point.
    pub fn radius(&self, z: &Complex) -> f64 {
        self.poles.iter().map(|p| z.sub(p).abs_f64()).fold(f64::INFINITY, f64::min)
    }

    pub fn eval(&self, z: &Complex) -> Vec<Complex> {
        self.a.iter().map(|f| f.eval(z)).collect()
    }

    fn a_norm(&self, z: &Complex) -> f64 {
        self.eval(z).iter().map(mag).fold(0.0, f64::max)
    }

    /// Pairing integrand `sum_i y_i h_i(z)` for each vector `h`.
    pub fn integrand(y: &[Complex], hs: &[Vec<NumRat>], z: &Complex) -> Vec<Complex> {
        let p = z.prec();
        hs.iter()
            .map(|h| {
                let mut acc = Complex::zero(p);
                for (yi, hi) in y.iter().zip(h) {
                    if !hi.is_zero() {
                        acc.add_assign(&yi.mul(&hi.eval(z)));
                    }
                }
                acc
            })
            .collect()
    }

    /// One Taylor step from `z0` by `h`; `None` when the series has not converged within `cap` terms.
    fn step(&self, z0: &Complex, y: &[Complex], h: &Complex, hs: &[Vec<NumRat>], cap: usize, tol: f64) -> Option<StepOut> {
        let n = self.n;
        let p = self.prec;
        let a: Vec<Vec<Complex>> = self.a.iter().map(|f| f.taylor_scaled(z0, h, cap + 1)).collect();
        let hcoef: Vec<Vec<Vec<Complex>>> =
            hs.iter().map(|v| v.iter().map(|f| f.taylor_scaled(z0, h, cap + 1)).collect()).collect();
        let mut ys: Vec<Vec<Complex>> = vec![y.to_vec()];
        let mut sum_y = y.to_vec();
        let mut ints = vec![Complex::zero(p); hs.len()];
        let mut tmp = Float::new(p);
        let mut max_y = y.iter().map(mag).fold(0.0, f64::max);
        let mut max_g = vec![0.0f64; hs.len()];
        let mut small_run = 0;
        for k in 0..cap {
            // integrand coefficient g_k and its contribution h g_k / (k+1)
            let mut g_small = true;
            for (f, hc) in hcoef.iter().enumerate() {
                let mut g = Complex::zero(p);
                for j in 0..=k {
                    let yv = &ys[k - j];
                    for i in 0..n {
                        if !hs[f][i].is_zero() {
                            g.add_mul(&yv[i], &hc[i][j], &mut tmp);
                        }
                    }
                }
                let m = mag(&g);
                max_g[f] = max_g[f].max(m);
                if m > tol * max_g[f] {
                    g_small = false;
                }
                ints[f].add_assign(&g.div_i64(k as i64 + 1));
            }
            // Y_{k+1} = h/(k+1) sum_j A_j Y_{k-j}
            let mut next = vec![Complex::zero(p); n];
            for j in 0..=k {
                let yv = &ys[k - j];
                for r in 0..n {
                    for c in 0..n {
                        let ac = &a[r * n + c][j];
                        if !ac.is_zero() {
                            next[r].add_mul(ac, &yv[c], &mut tmp);
                        }
                    }
                }
            }
            let next: Vec<Complex> = next.iter().map(|c| c.mul(h).div_i64(k as i64 + 1)).collect();
            let m = next.iter().map(mag).fold(0.0, f64::max);
            max_y = max_y.max(m);
            for (s, c) in sum_y.iter_mut().zip(&next) {
                s.add_assign(c);
            }
            ys.push(next);
            if m <= tol * max_y && g_small {
                small_run += 1;
                if small_run >= 3 {
                    let integrals = ints.iter().map(|c| c.mul(h)).collect();
                    return Some(StepOut { y: sum_y, integrals });
                }
            } else {
                small_run = 0;
            }
        }
        None
    }

    /// Transports `y0` along `path` from parameter `s_from`, integrating `sum_i y_i h_i dz`
    /// for each `h` in `hs`, and records the state at each of `stops` (in order of travel).
    pub fn walk(
        &self,
        path: &Path,
        s_from: f64,
        until: Until,
        y0: &[Complex],
        hs: &[Vec<NumRat>],
        stops: &[f64],
        policy: &PrecisionPolicy,
    ) -> Result<Walk> {
        let p = self.prec;
        let cap = policy.taylor_cap();
        let tol = policy.series_tol();
        let (target, decay_tail) = match until {
            Until::Param(s) => (s, None),
            Until::Decay { toward, tail } => (toward, Some(tail)),
        };
        let dir = if target >= s_from { 1.0 } else { -1.0 };
        let mut s = s_from;
        let mut z = path.point(s, p);
        let mut y = y0.to_vec();
        let mut ints = vec![Complex::zero(p); hs.len()];
        let mut out_stops = Vec::new();
        let mut next_stop = 0;
        let mut steps = 0usize;
        let mut quiet = 0;
        let mut last_tail = f64::INFINITY;
        let mut len_scale = 1.0f64;
        loop {
            if decay_tail.is_none() && s == target {
                break;
            }
            if let Some(tail) = decay_tail {
                let g = Self::integrand(&y, hs, &z);
                let dist = if target.is_infinite() { z.abs_f64().max(1.0) } else { path.speed(s) * (target - s).abs() };
                let est = g.iter().map(mag).fold(0.0, f64::max) * dist.max(1e-300);
                if est < tail && est <= last_tail {
                    quiet += 1;
                    if quiet >= 3 {
                        break;
                    }
                } else {
                    quiet = 0;
                }
                last_tail = est;
            }
            if steps > 200_000 {
                return Err(Error::PrecisionExhausted(format!("too many steps near {z}")));
            }
            let rho = self.radius(&z);
            let an = self.a_norm(&z);
            let mut hlen = (policy.step_ratio * rho).min(if an > 0.0 { 4.0 / an } else { f64::INFINITY });
            if !hlen.is_finite() {
                hlen = 1.0f64.max(z.abs_f64());
            }
            hlen *= len_scale;
            let speed = path.speed(s);
            let mut s_next = s + dir * hlen / speed;
            let bound = if next_stop < stops.len() { stops[next_stop] } else { target };
            if bound.is_finite() && (s_next - bound) * dir >= 0.0 {
                s_next = bound;
            }
            if hlen < 1e-40 * (1.0 + z.abs_f64()) {
                return Err(Error::StepUnderflow { at: z.to_string() });
            }
            let z_next = path.point(s_next, p);
            let h = z_next.sub(&z);
            match self.step(&z, &y, &h, hs, cap, tol) {
                Some(out) => {
                    y = out.y;
                    for (a, b) in ints.iter_mut().zip(&out.integrals) {
                        a.add_assign(b);
                    }
                    s = s_next;
                    z = z_next;
                    steps += 1;
                    len_scale = (len_scale * 2.0).min(1.0);
                    while next_stop < stops.len() && s == stops[next_stop] {
                        out_stops.push(Stop { s, z: z.clone(), y: y.clone(), integrals: ints.clone() });
                        next_stop += 1;
                    }
                }
                None => {
                    len_scale *= policy.shrink;
                }
            }
        }
        Ok(Walk { s_end: s, z_end: z, y, integrals: ints, stops: out_stops, steps })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{Mat, Scalar};
    use crate::expr::parse_ratfun;
    use num_rational::BigRational;
    use num_traits::One;
    use rug::float::Constant;

    fn sys(entries: &[&str], n: usize, sing: &[&str], prec: u32) -> NumSystem {
        let a = Mat::from_fn(n, n, |r, c| parse_ratfun(entries[r * n + c]).unwrap());
        let pts: Vec<Point> = sing.iter().map(|s| s.parse().unwrap()).collect();
        NumSystem::new(&a, &pts, prec)
    }

    #[test]
    fn monodromy_of_power() {
        let pol = PrecisionPolicy::default();
        let p = pol.bits();
        let s = sys(&["1/3/z"], 1, &["0", "inf"], p);
        let path = Path::circle(&Scalar::from_int(0), BigRational::from_integer(1.into()), p);
        let w = s.walk(&path, 0.0, Until::Param(1.0), &[Complex::one(p)], &[], &[], &pol).unwrap();
        let mut th = Float::with_val(p, Constant::Pi);
        th *= 2;
        th /= 3;
        let expect = Complex::cis(&th);
        assert!(w.y[0].sub(&expect).abs_f64() < 1e-45);
    }

    #[test]
    fn exponential_and_integral() {
        let pol = PrecisionPolicy::default();
        let p = pol.bits();
        let s = sys(&["1"], 1, &["inf"], p);
        let path = Path::line(&Scalar::from_int(0), &Scalar::from_int(3), p);
        let h = vec![numeric_vector(&[RatFun::one()], p)];
        let w = s.walk(&path, 0.0, Until::Param(1.0), &[Complex::one(p)], &h, &[0.5], &pol).unwrap();
        let e3 = Complex::from_i64(3, p).exp();
        assert!(w.y[0].sub(&e3).abs_f64() < 1e-45);
        // integral of e^z from 0 to 3
        assert!(w.integrals[0].sub(&e3.sub(&Complex::one(p))).abs_f64() < 1e-45);
        let e15 = Complex::from_f64(1.5, 0.0, p).exp();
        assert!(w.stops[0].y[0].sub(&e15).abs_f64() < 1e-45);
    }

    #[test]
    fn trivial_transport_is_identity() {
        let pol = PrecisionPolicy::default();
        let p = pol.bits();
        let s = sys(&["0", "0", "0", "0"], 2, &["0"], p);
        let path = Path::line(&Scalar::from_int(1), &Scalar::gaussian((2, 1), (3, 1)), p);
        let y0 = vec![Complex::from_f64(0.5, 1.0, p), Complex::from_f64(-2.0, 0.0, p)];
        let w = s.walk(&path, 0.0, Until::Param(1.0), &y0, &[], &[], &pol).unwrap();
        for (a, b) in w.y.iter().zip(&y0) {
            assert!(a.sub(b).abs_f64() < 1e-50);
        }
    }
}
