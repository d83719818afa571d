//! Roots in Q(i) of exact polynomials.
//!
//! Candidates are located numerically on the square-free part, rationalized by
//! continued fractions and then confirmed by exact evaluation, so every
//! reported root is exact. Roots outside Q(i) are left in the cofactor.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::{Poly, Scalar};

#[derive(Clone, Copy, Debug)]
struct C64(f64, f64);

impl C64 {
    fn add(self, o: C64) -> C64 {
        C64(self.0 + o.0, self.1 + o.1)
    }
    fn sub(self, o: C64) -> C64 {
        C64(self.0 - o.0, self.1 - o.1)
    }
    fn mul(self, o: C64) -> C64 {
        C64(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
    fn div(self, o: C64) -> C64 {
        let d = o.0 * o.0 + o.1 * o.1;
        C64((self.0 * o.0 + self.1 * o.1) / d, (self.1 * o.0 - self.0 * o.1) / d)
    }
    fn abs(self) -> f64 {
        self.0.hypot(self.1)
    }
}

fn eval_c(p: &[C64], z: C64) -> C64 {
    p.iter().rev().fold(C64(0.0, 0.0), |acc, &c| acc.mul(z).add(c))
}

/// Numerical approximations of all roots of a polynomial (Aberth iteration).
pub fn approximate_roots(p: &Poly) -> Vec<(f64, f64)> {
    let n = match p.degree() {
        Some(d) if d >= 1 => d,
        _ => return Vec::new(),
    };
    let lead = p.leading();
    let cs: Vec<C64> = p
        .coeffs()
        .iter()
        .map(|c| {
            let (a, b) = (c / &lead).to_f64();
            C64(a, b)
        })
        .collect();
    let dcs: Vec<C64> = (1..cs.len())
        .map(|k| C64(cs[k].0 * k as f64, cs[k].1 * k as f64))
        .collect();
    let radius = 1.0 + cs[..n].iter().map(|c| c.abs()).fold(0.0, f64::max);
    let mut z: Vec<C64> = (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            C64(0.5 * radius * t.cos(), 0.5 * radius * t.sin())
        })
        .collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let f = eval_c(&cs, z[i]);
            let df = eval_c(&dcs, z[i]);
            if f.abs() == 0.0 {
                continue;
            }
            let ratio = f.div(df);
            let mut s = C64(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    s = s.add(C64(1.0, 0.0).div(z[i].sub(z[j])));
                }
            }
            let w = ratio.div(C64(1.0, 0.0).sub(ratio.mul(s)));
            if w.0.is_finite() && w.1.is_finite() {
                z[i] = z[i].sub(w);
                delta = delta.max(w.abs() / (1.0 + z[i].abs()));
            }
        }
        if delta < 1e-15 {
            break;
        }
    }
    z.into_iter().map(|c| (c.0, c.1)).collect()
}

/// Best rational approximations of `x` by continued fractions with bounded denominator.
pub fn rationalize(x: f64, max_den: i64) -> Vec<BigRational> {
    let mut out = Vec::new();
    if !x.is_finite() {
        return out;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        out.push(BigRational::new(BigInt::from(h2), BigInt::from(k2)));
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = r - a;
        if frac.abs() < 1e-13 {
            break;
        }
        r = 1.0 / frac;
    }
    out.reverse();
    out
}

fn candidates(x: f64) -> Vec<BigRational> {
    let mut c = rationalize(x, 1_000_000);
    c.truncate(4);
    if c.is_empty() {
        c.push(BigRational::zero());
    }
    c
}

/// Roots of `p` lying in Q(i) with multiplicities, sorted, plus the monic cofactor
/// that has no roots in Q(i).
pub fn gaussian_rational_roots(p: &Poly) -> (Vec<(Scalar, usize)>, Poly) {
    if p.is_zero() {
        return (Vec::new(), Poly::zero());
    }
    let mut rest = p.monic();
    let mut found: Vec<(Scalar, usize)> = Vec::new();
    let sf = rest.squarefree_part();
    for (re, im) in approximate_roots(&sf) {
        let mut hit = None;
        'outer: for a in candidates(re) {
            for b in candidates(im) {
                let cand = Scalar::new(a.clone(), b);
                if sf.eval(&cand).is_zero() {
                    hit = Some(cand);
                    break 'outer;
                }
            }
        }
        if let Some(r) = hit {
            if found.iter().any(|(f, _)| *f == r) {
                continue;
            }
            let m = rest.root_multiplicity(&r);
            if m > 0 {
                rest = rest.div_rem(&Poly::linear(&r).pow(m as u32)).0;
                found.push((r, m));
            }
        }
    }
    found.sort_by(|a, b| a.0.lex_cmp(&b.0));
    (found, rest.monic())
}

/// True when the polynomial splits completely over Q(i).
pub fn splits(p: &Poly) -> bool {
    gaussian_rational_roots(p).1 == Poly::one()
}

/// Integer roots, ascending.
pub fn integer_roots(p: &Poly) -> Vec<i64> {
    let mut v: Vec<i64> = gaussian_rational_roots(p)
        .0
        .into_iter()
        .filter_map(|(r, _)| r.as_i64())
        .collect();
    v.sort();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn finds_gaussian_roots_with_multiplicity() {
        let a = Scalar::gaussian((1, 3), (-2, 5));
        let b = Scalar::from_ratio(-7, 2);
        let p = &(&Poly::linear(&a).pow(2) * &Poly::linear(&b)) * &Poly::new(vec![
            Scalar::from_int(2),
            Scalar::zero(),
            Scalar::one(),
        ]);
        let (roots, rest) = gaussian_rational_roots(&p);
        assert_eq!(roots.len(), 2);
        assert!(roots.contains(&(a, 2)));
        assert!(roots.contains(&(b, 1)));
        assert_eq!(rest.degree(), Some(2));
    }

    #[test]
    fn integer_roots_of_indicial_polynomial() {
        let p = &(&Poly::linear(&Scalar::from_int(3)) * &Poly::linear(&Scalar::from_int(-1)))
            * &Poly::linear(&Scalar::from_ratio(1, 2));
        assert_eq!(integer_roots(&p), vec![-1, 3]);
    }
}
