//! Formal local analysis at a singular point: Newton polygons, exponential factors,
//! formal solutions and formal primitives `m' - A m = omega`.
//!
//! Everything is computed in the chart coordinate `t = z - x` (or `w = 1/z` at
//! infinity). Exponential factors are found by splitting on leading terms; systems whose
//! leading term is nilpotent but not scalar would need ramification and shearing and are
//! reported as [`Error::UnsupportedLocalType`].

pub mod newton;
pub(crate) mod recursion;
pub mod series;
pub mod split;

use std::cmp::Ordering;

use num_traits::Zero;

use crate::connection::{expand_function_matrix, form_order, Connection, Form, LocalMatrix};
use crate::exact::roots::gaussian_rational_roots;
use crate::exact::{Matrix, Point, RatFun, Scalar};
use crate::{Error, Result};

pub use newton::{newton_polygon, NewtonPolygon};
use recursion::{irregular_recursion, leading_invertible, regular_recursion, resonances, Params};
pub use series::{mseries_apply, mseries_inv, mseries_mul, MSeries, VSeries};
pub use split::{normalize, split, Block};

/// An exponential factor `exp(phi(1/t))` with the exponents of its regular part.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpFactor {
    pub phi: Vec<Scalar>,
    pub multiplicity: usize,
    pub exponents: Vec<Scalar>,
}

#[derive(Clone, Debug)]
pub struct LocalModel {
    pub point: Point,
    pub rank: usize,
    pub pole_order: i64,
    pub newton: NewtonPolygon,
    /// `None` when the formal structure is outside the supported class.
    pub factors: Option<Vec<ExpFactor>>,
    pub note: Option<String>,
}

/// `exp(phi(t)) t^exponent sum_k series_k t^k` in the original frame.
#[derive(Clone, Debug)]
pub struct FormalSolution {
    pub phi: Vec<Scalar>,
    pub exponent: Scalar,
    pub series: VSeries,
}

impl FormalSolution {
    /// Degree of the exponential part in `1/t` (0 for moderate growth).
    pub fn phi_degree(&self) -> usize {
        self.phi.iter().rposition(|c| !c.is_zero()).map_or(0, |i| i + 1)
    }
}

#[derive(Clone, Debug)]
pub struct FormalPrimitive {
    pub point: Point,
    /// Coefficients of `t^k` for `k <= truncation`.
    pub series: VSeries,
    pub truncation: i64,
    /// Dimension of the affine family the returned solution was picked from.
    pub free_parameters: usize,
}

fn phi_cmp(a: &[Scalar], b: &[Scalar]) -> Ordering {
    let n = a.len().max(b.len());
    let z = Scalar::zero();
    for i in (0..n).rev() {
        let x = a.get(i).unwrap_or(&z);
        let y = b.get(i).unwrap_or(&z);
        match x.lex_cmp(y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    Ordering::Equal
}

fn eigen_split(m: &Matrix, x: &Point) -> Result<Vec<(Scalar, usize)>> {
    let (eig, rest) = gaussian_rational_roots(&m.char_poly());
    if rest.deg_i() > 0 {
        return Err(Error::UnsupportedLocalType {
            point: x.to_string(),
            reason: "exponents outside Q(i)".into(),
        });
    }
    Ok(eig)
}

/// Splits the system at `x` using `terms` coefficients of the local matrix.
/// At a regular singular point with a higher-order pole the blocks refer to the prepared frame.
pub fn local_blocks(conn: &Connection, x: &Point, terms: usize) -> Result<Vec<Block>> {
    split(&prepare(conn, x, terms)?.mm)
}

/// Newton polygon and exponential factors at `x`.
pub fn local_model(conn: &Connection, x: &Point) -> Result<LocalModel> {
    let newton = newton_polygon(conn, x)?;
    let pole_order = conn.pole_order(x);
    let terms = 2 * pole_order as usize + 4;
    let (factors, note) = match local_blocks(conn, x, terms).and_then(|bs| {
        let mut out: Vec<ExpFactor> = Vec::new();
        for b in bs {
            let eig = eigen_split(&b.residual.coeff(-1), x)?;
            let exps: Vec<Scalar> = eig.iter().flat_map(|(e, m)| std::iter::repeat(e.clone()).take(*m)).collect();
            let mut phi = b.phi.clone();
            while phi.last().is_some_and(|c| c.is_zero()) {
                phi.pop();
            }
            if let Some(f) = out.iter_mut().find(|f| f.phi == phi) {
                f.multiplicity += b.size();
                f.exponents.extend(exps);
            } else {
                out.push(ExpFactor { phi, multiplicity: b.size(), exponents: exps });
            }
        }
        for f in &mut out {
            f.exponents.sort_by(|a, b| a.lex_cmp(b));
        }
        out.sort_by(|a, b| phi_cmp(&a.phi, &b.phi));
        Ok(out)
    }) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(LocalModel { point: x.clone(), rank: conn.rank(), pole_order, newton, factors, note })
}

/// The local system used for formal computations at a point: either the chart matrix
/// itself, or, at a regular singular point with a higher-order pole, the system for
/// `u = T v` with `T = diag(1, t, ..., t^{n-1}) W` built from a cyclic frame `W`,
/// which has at most a simple pole.
struct Prepared {
    mm: LocalMatrix,
    gauge: Option<(LocalMatrix, LocalMatrix)>,
}

impl Prepared {
    /// Right-hand side in the prepared frame.
    fn rhs(&self, f: &VSeries) -> VSeries {
        match &self.gauge {
            Some((t, _)) => lm_apply(t, f),
            None => f.clone(),
        }
    }

    /// Back to the original frame.
    fn back(&self, u: &VSeries) -> VSeries {
        match &self.gauge {
            Some((_, tinv)) => lm_apply(tinv, u),
            None => u.clone(),
        }
    }
}

/// `L(t) v(t)` for a Laurent matrix `L` and vector series `v`.
pub fn lm_apply(l: &LocalMatrix, v: &VSeries) -> VSeries {
    let rows = l.coeffs[0].rows();
    let lorder = l.valuation + l.coeffs.len() as i64;
    let order = (l.valuation + v.order).min(lorder + v.start);
    let start = (l.valuation + v.start).min(order);
    let coeffs = (start..order)
        .map(|k| {
            let mut acc = vec![Scalar::zero(); rows];
            for (j, lj) in l.coeffs.iter().enumerate() {
                let idx = k - l.valuation - j as i64;
                if idx < v.start {
                    break;
                }
                if idx >= v.order {
                    continue;
                }
                let cv = v.get(idx);
                if cv.iter().all(|c| c.is_zero()) {
                    continue;
                }
                for (a, b) in acc.iter_mut().zip(lj.mul_vec(&cv)) {
                    *a += &b;
                }
            }
            acc
        })
        .collect();
    VSeries { dim: rows, start, coeffs, order }
}

fn prepare(conn: &Connection, x: &Point, terms: usize) -> Result<Prepared> {
    let mm = normalize(&conn.local_matrix(x, terms));
    if mm.valuation >= -1 || !newton_polygon(conn, x)?.is_regular() {
        return Ok(Prepared { mm, gauge: None });
    }
    let ac = newton::chart_matrix(conn, x);
    let (at, tfun) = match x {
        Point::Finite(c) => (x.clone(), RatFun::from_poly(crate::exact::Poly::linear(c))),
        Point::Infinity => (Point::Finite(Scalar::zero()), RatFun::z()),
    };
    let (w, _) = newton::cyclic_frame(&ac).map_err(|_| Error::UnsupportedLocalType {
        point: x.to_string(),
        reason: "no cyclic vector found".into(),
    })?;
    let n = ac.rows();
    let t = crate::exact::Mat::from_fn(n, n, |r, c| &w[(r, c)] * &tfun.pow(r as i32));
    let tinv = t.inverse().ok_or_else(|| Error::UnsupportedLocalType {
        point: x.to_string(),
        reason: "singular cyclic frame".into(),
    })?;
    let tp = t.map(|f| f.derivative());
    let b = tp.add(&t.matmul(&ac)).matmul(&tinv);
    let extra = terms + 2 * n * (conn.pole_order(x) as usize + 1);
    let bl = normalize(&relabel(expand_function_matrix(&b, &at, terms), x));
    if bl.valuation < -1 {
        return Err(Error::UnsupportedLocalType {
            point: x.to_string(),
            reason: "could not reduce the regular singular point to a simple pole".into(),
        });
    }
    let tl = relabel(expand_function_matrix(&t, &at, extra), x);
    let til = relabel(expand_function_matrix(&tinv, &at, extra), x);
    Ok(Prepared { mm: bl, gauge: Some((tl, til)) })
}

fn relabel(mut l: LocalMatrix, x: &Point) -> LocalMatrix {
    l.point = x.clone();
    l
}

/// Shifts a formal solution so that its series starts with a nonzero coefficient.
fn normalize_solution(phi: Vec<Scalar>, exponent: Scalar, s: VSeries, terms: usize) -> FormalSolution {
    let v = s.valuation().unwrap_or(s.start);
    let coeffs: Vec<Vec<Scalar>> = (v..v + terms as i64).map(|k| s.get(k)).collect();
    let known = (s.order - v).clamp(0, terms as i64) as usize;
    let series = VSeries::from_coeffs(s.dim, 0, coeffs[..known].to_vec());
    FormalSolution { phi, exponent: &exponent + &Scalar::from_int(v), series }
}

/// A full basis of formal solutions at `x`, each known to `terms` coefficients.
/// Solutions are ordered by exponential factor, then exponent.
pub fn formal_solutions(conn: &Connection, x: &Point, terms: usize) -> Result<Vec<FormalSolution>> {
    let p = conn.pole_order(x) as usize;
    let n = conn.rank();
    let mut extra = terms + 2 * (p + 1) * n + 4;
    loop {
        let prep = prepare(conn, x, extra)?;
        let blocks = split(&prep.mm)?;
        let mut out = Vec::new();
        for b in &blocks {
            let r0 = b.residual.coeff(-1);
            let eig = eigen_split(&r0, x)?;
            let mut count = 0;
            for (lambda, _) in &eig {
                let zero = VSeries::zero(b.size(), extra as i64);
                let sol =
                    regular_recursion(&b.residual, &zero, lambda, 0, extra as i64 - 2 * (p as i64 + 1) * n as i64 - 2, Params::StartOnly, x)?;
                for h in sol.homogeneous {
                    count += 1;
                    let v = prep.back(&mseries_apply(&b.gauge, &h));
                    out.push(normalize_solution(b.phi.clone(), lambda.clone(), v, terms));
                }
            }
            if count != b.size() {
                return Err(Error::UnsupportedLocalType {
                    point: x.to_string(),
                    reason: "non-semisimple residue (logarithmic solutions)".into(),
                });
            }
        }
        if out.iter().any(|s| (s.series.coeffs.len()) < terms) {
            extra *= 2;
            continue;
        }
        out.sort_by(|a, b| phi_cmp(&a.phi, &b.phi).then_with(|| a.exponent.lex_cmp(&b.exponent)));
        return Ok(out);
    }
}

/// Default truncation `max(10, 2 p n + pole order of omega)`.
pub fn default_truncation(conn: &Connection, x: &Point, omega: &Form) -> i64 {
    let p = conn.pole_order(x);
    let w = omega.iter().filter_map(|f| form_order(f, x)).min().map_or(0, |v| (-v).max(0));
    (2 * p * conn.rank() as i64 + w).max(10)
}

/// Solves `m' - A m = omega` in formal Laurent series at `x` through `t^N`.
///
/// With `n = None` the default truncation is used and raised past the last
/// resonance if needed; an explicit `n` below the last resonance is rejected.
pub fn solve_formal_primitive(conn: &Connection, x: &Point, omega: &Form, n: Option<i64>) -> Result<FormalPrimitive> {
    let n_req = n.unwrap_or_else(|| default_truncation(conn, x, omega));
    primitive_with(conn, x, omega, n_req, n.is_some())
}

/// Formal primitive known at least through `t^n_min` (and through the default
/// truncation), raised past resonances as needed.
pub fn primitive_through(conn: &Connection, x: &Point, omega: &Form, n_min: i64) -> Result<FormalPrimitive> {
    let n_req = n_min.max(default_truncation(conn, x, omega));
    primitive_with(conn, x, omega, n_req, false)
}

fn primitive_with(conn: &Connection, x: &Point, omega: &Form, n_req: i64, explicit: bool) -> Result<FormalPrimitive> {
    let rank = conn.rank();
    let p = conn.pole_order(x);
    let n = if explicit { Some(n_req) } else { None };
    let Some(fval) = omega.iter().filter_map(|f| form_order(f, x)).min() else {
        return Ok(FormalPrimitive { point: x.clone(), series: VSeries::zero(rank, n_req + 1), truncation: n_req, free_parameters: 0 });
    };
    let mut terms = (n_req - fval + 2 * (p + 1) * rank as i64 + 8).max(8) as usize;
    loop {
        let prep = prepare(conn, x, terms)?;
        let f = prep.rhs(&VSeries::from_form(omega, x, n_req + terms as i64));
        let out = if prep.mm.valuation >= -1 || leading_invertible(&prep.mm) {
            primitive_direct(&prep.mm, &f, x, n, n_req)?
        } else {
            primitive_split(&prep.mm, &f, x, n, n_req)?
        };
        if let Some(mut fp) = out {
            fp.series = prep.back(&fp.series);
            if fp.series.order > n_req {
                let keep = fp.truncation.max(n_req);
                fp.series = fp.series.truncate(keep + 1);
                fp.truncation = fp.series.order - 1;
                return Ok(fp);
            }
        }
        terms *= 2;
    }
}

fn check_resonance(last: i64, n: Option<i64>, n_req: i64, x: &Point) -> Result<i64> {
    if last > n_req {
        if n.is_some() {
            return Err(Error::TruncationTooSmall { point: x.to_string(), given: n_req, needed: last });
        }
        return Ok(last);
    }
    Ok(n_req)
}

fn regular_block_range(r: &LocalMatrix, f: &VSeries) -> (i64, i64) {
    let res = resonances(&r.coeff(-1), &Scalar::zero());
    let fstart = f.valuation().map_or(i64::MAX, |v| v + 1);
    let kmin = res.first().copied().unwrap_or(i64::MAX).min(fstart);
    (kmin, res.last().copied().unwrap_or(i64::MIN))
}

/// `Some` when the available terms sufficed.
fn primitive_direct(mm: &LocalMatrix, f: &VSeries, x: &Point, n: Option<i64>, n_req: i64) -> Result<Option<FormalPrimitive>> {
    let known = mm.valuation + mm.coeffs.len() as i64;
    if mm.valuation >= -1 {
        let (kmin, last) = regular_block_range(mm, f);
        let k_end = check_resonance(last, n, n_req, x)?;
        if kmin > k_end {
            return Ok(Some(FormalPrimitive { point: x.clone(), series: VSeries::zero(f.dim, k_end + 1), truncation: k_end, free_parameters: 0 }));
        }
        if known <= k_end - kmin || f.order < k_end {
            return Ok(None);
        }
        let sol = regular_recursion(mm, f, &Scalar::zero(), kmin, k_end, Params::Everywhere, x)?;
        return Ok(Some(FormalPrimitive {
            point: x.clone(),
            series: sol.particular,
            truncation: k_end,
            free_parameters: sol.homogeneous.len(),
        }));
    }
    let v = mm.valuation;
    let Some(fval) = f.valuation() else {
        return Ok(Some(FormalPrimitive { point: x.clone(), series: VSeries::zero(f.dim, n_req + 1), truncation: n_req, free_parameters: 0 }));
    };
    let k_min = fval - v;
    if known <= v + (n_req - k_min) || f.order <= n_req + v {
        return Ok(None);
    }
    let series = irregular_recursion(mm, f, n_req);
    Ok(Some(FormalPrimitive { point: x.clone(), series, truncation: n_req, free_parameters: 0 }))
}

/// Assembles the block gauges into a square matrix series.
fn full_gauge(blocks: &[Block], n: usize) -> MSeries {
    let len = blocks.iter().map(|b| b.gauge.len()).min().unwrap();
    (0..len)
        .map(|k| {
            let mut cols: Vec<Vec<Scalar>> = Vec::new();
            for b in blocks {
                for c in 0..b.size() {
                    cols.push(b.gauge[k].col(c));
                }
            }
            Matrix::from_fn(n, n, |r, c| cols[c][r].clone())
        })
        .collect()
}

fn sub_vseries(v: &VSeries, range: std::ops::Range<usize>) -> VSeries {
    VSeries {
        dim: range.len(),
        start: v.start,
        coeffs: v.coeffs.iter().map(|c| c[range.clone()].to_vec()).collect(),
        order: v.order,
    }
}

fn primitive_split(mm: &LocalMatrix, f: &VSeries, x: &Point, n: Option<i64>, n_req: i64) -> Result<Option<FormalPrimitive>> {
    let rank = f.dim;
    let blocks = split(mm)?;
    let q = full_gauge(&blocks, rank);
    let qinv = mseries_inv(&q, q.len()).expect("invertible gauge");
    let Some(fval) = f.valuation() else {
        return Ok(Some(FormalPrimitive { point: x.clone(), series: VSeries::zero(rank, n_req + 1), truncation: n_req, free_parameters: 0 }));
    };
    let mut k_end = n_req;
    let mut k_low = fval + 1;
    for b in &blocks {
        if b.is_regular() {
            let res = resonances(&b.residual.coeff(-1), &Scalar::zero());
            if let Some(&l) = res.last() {
                k_end = k_end.max(check_resonance(l, n, n_req, x)?);
            }
            if let Some(&f) = res.first() {
                k_low = k_low.min(f);
            }
        }
    }
    let span = k_end - k_low + 2;
    let p = mm.pole_order();
    if (q.len() as i64) < span || (mm.coeffs.len() as i64) < span + 2 * p + 2 || f.order < k_end + 1 {
        return Ok(None);
    }
    let fu = mseries_apply(&qinv, &f.truncate(k_end + 1));
    let mut us: Vec<VSeries> = Vec::new();
    let mut free = 0;
    let mut off = 0;
    for b in &blocks {
        let fb = sub_vseries(&fu, off..off + b.size());
        off += b.size();
        if b.is_regular() {
            let (kmin, _) = regular_block_range(&b.residual, &fb);
            let kmin = kmin.min(k_end);
            let sol = regular_recursion(&b.residual, &fb, &Scalar::zero(), kmin, k_end, Params::Everywhere, x)?;
            free += sol.homogeneous.len();
            us.push(sol.particular);
        } else {
            us.push(irregular_recursion(&b.full_matrix(), &fb, k_end));
        }
    }
    let start = us.iter().map(|u| u.start).min().unwrap().min(k_end + 1);
    let coeffs = (start..=k_end).map(|k| us.iter().flat_map(|u| u.get(k)).collect()).collect();
    let u = VSeries::from_coeffs(rank, start, coeffs);
    let series = mseries_apply(&q, &u);
    if series.order < k_end + 1 {
        return Ok(None);
    }
    Ok(Some(FormalPrimitive { point: x.clone(), series, truncation: k_end, free_parameters: free }))
}

/// Basis of formal Laurent flat sections at `x` (no exponential factor, integer exponent),
/// each known through `t^n` (or further when resonances require it).
pub fn formal_flat_basis(conn: &Connection, x: &Point, n: i64) -> Result<Vec<VSeries>> {
    let rank = conn.rank();
    let p = conn.pole_order(x) as usize;
    let mut terms = n.max(4) as usize + 2 * (p + 1) * rank + 8;
    'outer: loop {
        let prep = prepare(conn, x, terms)?;
        let blocks = split(&prep.mm)?;
        let mut out = Vec::new();
        let q = full_gauge(&blocks, rank);
        let mut off = 0;
        for b in &blocks {
            let sz = b.size();
            let here = off;
            off += sz;
            if !b.is_regular() {
                continue;
            }
            let res = resonances(&b.residual.coeff(-1), &Scalar::zero());
            let (Some(&lo), Some(&hi)) = (res.first(), res.last()) else { continue };
            let k_end = hi.max(n) + 2 * (p * rank) as i64;
            if (k_end - lo + 2) as usize > q.len() || (k_end - lo + 2) as usize > b.residual.coeffs.len() {
                terms *= 2;
                continue 'outer;
            }
            let zero = VSeries::zero(sz, k_end + 1);
            let sol = regular_recursion(&b.residual, &zero, &Scalar::zero(), lo, k_end, Params::Everywhere, x)?;
            for h in sol.homogeneous {
                let coeffs = h
                    .coeffs
                    .iter()
                    .map(|c| (0..rank).map(|i| if i >= here && i < here + sz { c[i - here].clone() } else { Scalar::zero() }).collect())
                    .collect();
                let full = VSeries::from_coeffs(rank, h.start, coeffs);
                let v = prep.back(&mseries_apply(&q, &full));
                if v.order <= n {
                    terms *= 2;
                    continue 'outer;
                }
                out.push(v.truncate(n + 1));
            }
        }
        return Ok(out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::Pairing;
    use crate::exact::{series_expand, Laurent, Mat, RatFun};
    use num_traits::One;
    use crate::expr::parse_ratfun;

    fn conn(rows: &[&[&str]], d: &[&str]) -> Connection {
        let a = Mat::from_rows(rows.iter().map(|r| r.iter().map(|s| parse_ratfun(s).unwrap()).collect()).collect());
        Connection::new(a, d.iter().map(|p| p.parse().unwrap()).collect(), Pairing::Dual).unwrap()
    }

    fn pt(s: &str) -> Point {
        s.parse().unwrap()
    }

    /// Coefficients of `m' - A m - omega` below `upto`, by direct series arithmetic.
    fn residual(c: &Connection, x: &Point, m: &VSeries, omega: &Form, upto: i64) -> Vec<Scalar> {
        let n = c.rank();
        let chart_a = match x {
            Point::Finite(_) => c.a.clone(),
            Point::Infinity => c.change_chart(),
        };
        let at = match x {
            Point::Finite(_) => x.clone(),
            Point::Infinity => pt("0"),
        };
        let w = VSeries::from_form(omega, x, upto + 1);
        let mut out = Vec::new();
        for i in 0..n {
            let mi = m.component(i, &at);
            let mut acc = mi.derivative();
            for j in 0..n {
                let aij: Laurent = series_expand(&chart_a[(i, j)], &at, upto + 2 - m.start);
                acc = acc.sub(&aij.mul(&m.component(j, &at)));
            }
            acc = acc.sub(&w.component(i, &at));
            for k in m.start - 4..upto {
                if let Some(v) = acc.coeff(k) {
                    out.push(v);
                }
            }
        }
        out
    }

    #[test]
    fn kummer_formal_solutions() {
        let c = conn(&[&["1/(3*z) - 1"]], &["0", "inf"]);
        let s0 = formal_solutions(&c, &pt("0"), 6).unwrap();
        assert_eq!(s0.len(), 1);
        assert_eq!(s0[0].exponent, Scalar::from_ratio(1, 3));
        assert_eq!(s0[0].phi_degree(), 0);
        // e^{-z}: coefficients 1, -1, 1/2
        let sr = &s0[0].series;
        assert_eq!(sr.get(2)[0].clone() * Scalar::from_int(2), sr.get(0)[0].clone());
        let si = formal_solutions(&c, &Point::Infinity, 6).unwrap();
        assert_eq!(si[0].phi, vec![Scalar::from_int(-1)]);
        assert_eq!(si[0].exponent, Scalar::from_ratio(-1, 3));
        let m = local_model(&c, &Point::Infinity).unwrap();
        assert_eq!(m.factors.unwrap().len(), 1);
    }

    #[test]
    fn split_two_factors() {
        let c = conn(&[&["z^-2 + 1/z", "1"], &["z", "-z^-2"]], &["0", "inf"]);
        let sols = formal_solutions(&c, &pt("0"), 8).unwrap();
        assert_eq!(sols.len(), 2);
        let degs: Vec<usize> = sols.iter().map(|s| s.phi_degree()).collect();
        assert_eq!(degs, vec![1, 1]);
        let m = local_model(&c, &pt("0")).unwrap();
        assert_eq!(m.newton.irregularity, num_rational::BigRational::from_integer(2.into()));
    }

    #[test]
    fn nilpotent_leading_term_unsupported() {
        let c = conn(&[&["0", "1"], &["z^-3", "0"]], &["0", "inf"]);
        assert!(matches!(formal_solutions(&c, &pt("0"), 4), Err(Error::UnsupportedLocalType { .. })));
        let m = local_model(&c, &pt("0")).unwrap();
        assert!(m.factors.is_none());
    }

    #[test]
    fn primitive_regular_and_irregular() {
        let c = conn(&[&["1/(3*z) - 1"]], &["0", "inf"]);
        let w: Form = vec![parse_ratfun("1/z").unwrap()];
        for x in [pt("0"), Point::Infinity] {
            let fp = solve_formal_primitive(&c, &x, &w, Some(12)).unwrap();
            assert!(residual(&c, &x, &fp.series, &w, 8).iter().all(|v| v.is_zero()), "{x}");
        }
    }

    #[test]
    fn primitive_with_resonance() {
        // exponent 2 at 0: resonant level 2
        let c = conn(&[&["2/z + 1"]], &["0", "inf"]);
        let w: Form = vec![parse_ratfun("-4*z^-3 - z^-2 + z^2 - z^3").unwrap()];
        let fp = solve_formal_primitive(&c, &pt("0"), &w, Some(10)).unwrap();
        assert!(residual(&c, &pt("0"), &fp.series, &w, 8).iter().all(|v| v.is_zero()));
        assert_eq!(fp.free_parameters, 1);
        let flat = formal_flat_basis(&c, &pt("0"), 6).unwrap();
        assert_eq!(flat.len(), 1);
        assert_eq!(flat[0].valuation(), Some(2));
    }

    #[test]
    fn obstruction_reported() {
        // exponent 0 at 0 with omega = dz/z: m = log z would be needed
        let c = conn(&[&["0"]], &["0", "inf"]);
        let w: Form = vec![RatFun::z().inv().unwrap()];
        assert!(matches!(solve_formal_primitive(&c, &pt("0"), &w, Some(5)), Err(Error::Obstruction { level: 0, .. })));
    }

    #[test]
    fn explicit_truncation_below_resonance() {
        let c = conn(&[&["7/z"]], &["0", "inf"]);
        let w: Form = vec![RatFun::one()];
        assert!(matches!(
            solve_formal_primitive(&c, &pt("0"), &w, Some(3)),
            Err(Error::TruncationTooSmall { needed: 7, .. })
        ));
    }

    #[test]
    fn primitive_via_split() {
        let c = conn(&[&["z^-2 + 1/z", "1"], &["z", "-z^-2"]], &["0", "inf"]);
        let w: Form = vec![parse_ratfun("1/z").unwrap(), parse_ratfun("z^-2").unwrap()];
        let fp = solve_formal_primitive(&c, &pt("0"), &w, Some(10)).unwrap();
        assert!(residual(&c, &pt("0"), &fp.series, &w, 6).iter().all(|v| v.is_zero()));
    }

    mod props {
        use super::*;
        use num_rational::BigRational;
        use proptest::prelude::*;

        fn third(n: i64) -> Scalar {
            Scalar::from_ratio(3 * n + 1, 3)
        }

        /// `L/z^2 + R/z` with `L = diag(l1, l2) + upper`, or a lower triangular `R/z` when `irregular` is false.
        fn connection() -> impl Strategy<Value = Connection> {
            (any::<bool>(), 1i64..=3, -3i64..=-1, -2i64..=2, -2i64..=1, -2i64..=1, -2i64..=2, -2i64..=2).prop_map(
                |(irregular, l1, l2, u, r1, r2, r12, c)| {
                    let z = RatFun::z();
                    let inv = z.inv().unwrap();
                    let k = |s: Scalar| RatFun::constant(s);
                    let i = |n: i64| k(Scalar::from_int(n));
                    let mut a = Mat::from_fn(2, 2, |_, _| RatFun::zero());
                    a[(0, 0)] = &k(third(r1)) * &inv;
                    a[(1, 1)] = &k(third(r2)) * &inv;
                    if irregular {
                        a[(0, 1)] = &i(r12) * &inv;
                        let inv2 = &inv * &inv;
                        a[(0, 0)] = &a[(0, 0)] + &(&i(l1) * &inv2);
                        a[(1, 1)] = &a[(1, 1)] + &(&i(l2) * &inv2);
                        a[(0, 1)] = &a[(0, 1)] + &(&i(u) * &inv2);
                    } else {
                        a[(1, 0)] = &i(c) * &inv;
                    }
                    Connection::new(a, vec![pt("0"), Point::Infinity], Pairing::Dual).unwrap()
                },
            )
        }

        fn form() -> impl Strategy<Value = Form> {
            prop::collection::vec(prop::collection::vec(-3i64..=3, 5), 2).prop_map(|cs| {
                cs.into_iter()
                    .map(|c| {
                        let mut f = RatFun::zero();
                        for (k, v) in c.into_iter().enumerate() {
                            f = &f + &(&RatFun::constant(Scalar::from_int(v)) * &RatFun::z().pow(k as i32 - 3));
                        }
                        f
                    })
                    .collect()
            })
        }

        fn factor_key(fs: &[ExpFactor]) -> Vec<String> {
            let mut k: Vec<String> = fs
                .iter()
                .map(|f| {
                    let mut e: Vec<String> = f.exponents.iter().map(|x| x.to_string()).collect();
                    e.sort();
                    format!("{:?} {} {:?}", f.phi.iter().map(|x| x.to_string()).collect::<Vec<_>>(), f.multiplicity, e)
                })
                .collect();
            k.sort();
            k
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn primitive_solves_through_truncation(c in connection(), w in form()) {
                match solve_formal_primitive(&c, &pt("0"), &w, None) {
                    Ok(fp) => {
                        let upto = fp.truncation - c.pole_order(&pt("0"));
                        let res = residual(&c, &pt("0"), &fp.series, &w, upto);
                        prop_assert!(res.iter().all(|v| v.is_zero()));
                    }
                    Err(Error::Obstruction { .. }) => {}
                    Err(e) => prop_assert!(false, "{}", e),
                }
            }

            #[test]
            fn factors_invariant_under_constant_gauge(c in connection(), t in prop::collection::vec(-3i64..=3, 4)) {
                let t = Mat::from_fn(2, 2, |r, k| RatFun::constant(Scalar::from_int(t[r * 2 + k])));
                let det = &(&t[(0, 0)] * &t[(1, 1)]) - &(&t[(0, 1)] * &t[(1, 0)]);
                prop_assume!(!det.is_zero());
                let g = c.gauge(&t).unwrap();
                for x in [pt("0"), Point::Infinity] {
                    let (a, b) = (local_model(&c, &x).unwrap(), local_model(&g, &x).unwrap());
                    prop_assert_eq!(&a.newton.irregularity, &b.newton.irregularity);
                    prop_assert_eq!(factor_key(a.factors.as_deref().unwrap()), factor_key(b.factors.as_deref().unwrap()));
                }
            }

            #[test]
            fn irregularity_counts_factor_degrees(c in connection()) {
                for x in [pt("0"), Point::Infinity] {
                    let m = local_model(&c, &x).unwrap();
                    prop_assert!(m.factors.is_some(), "{} {:?} {:?}", x, m.note, c.a);
                    let fs = m.factors.unwrap();
                    let total: usize = fs
                        .iter()
                        .map(|f| f.multiplicity * f.phi.iter().rposition(|v| !v.is_zero()).map_or(0, |i| i + 1))
                        .sum();
                    prop_assert_eq!(m.newton.irregularity, BigRational::from_integer((total as i64).into()));
                    prop_assert_eq!(fs.iter().map(|f| f.multiplicity).sum::<usize>(), c.rank());
                }
            }
        }
    }
}
