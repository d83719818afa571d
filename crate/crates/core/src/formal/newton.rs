//! Newton polygons through a cyclic vector.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::connection::{function_order, Connection};
use crate::exact::{Mat, Point, Poly, RatFun, RatMatrix, Scalar};
use crate::{Error, Result};

/// Slopes with multiplicities (horizontal lengths) and the total irregularity.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonPolygon {
    pub slopes: Vec<(BigRational, usize)>,
    pub irregularity: BigRational,
}

impl NewtonPolygon {
    pub fn is_regular(&self) -> bool {
        self.irregularity.is_zero()
    }

    /// Slopes listed with repetition, e.g. `{1/2, 1/2}`.
    pub fn slope_list(&self) -> Vec<BigRational> {
        self.slopes.iter().flat_map(|(s, m)| std::iter::repeat(s.clone()).take(*m)).collect()
    }
}

/// Matrix in the local chart at `x` as rational functions of the chart coordinate
/// (`z` itself at finite points, `w` at infinity).
pub fn chart_matrix(conn: &Connection, x: &Point) -> RatMatrix {
    match x {
        Point::Finite(_) => conn.a.clone(),
        Point::Infinity => conn.change_chart(),
    }
}

fn candidate_vectors(n: usize) -> Vec<Vec<RatFun>> {
    let mut out = Vec::new();
    for i in 0..n {
        out.push((0..n).map(|j| if i == j { RatFun::one() } else { RatFun::zero() }).collect());
    }
    out.push((0..n).map(|j| RatFun::from_poly(Poly::monomial(Scalar::one(), j))).collect());
    for seed in 1..6i64 {
        out.push((0..n).map(|j| RatFun::constant(Scalar::from_int((j as i64 + 1) * seed % 7 + 1))).collect());
        out.push(
            (0..n)
                .map(|j| {
                    RatFun::from_poly(Poly::new(vec![
                        Scalar::from_int(seed + j as i64),
                        Scalar::from_int(1 + (j as i64 * seed) % 3),
                    ]))
                })
                .collect(),
        );
    }
    out
}

/// Coefficients `b_0..b_{n-1}` of the scalar equation `y^(n) = sum b_k y^(k)` satisfied
/// by `y = c^T v` for a cyclic vector `c`, computed in the chart coordinate.
pub fn scalar_operator(a: &RatMatrix) -> Result<Vec<RatFun>> {
    let (w, cn) = cyclic_frame(a)?;
    let inv = w.transpose().inverse().unwrap();
    Ok(inv.mul_vec(&cn))
}

/// Rows `c_0^T, ..., c_{n-1}^T` of a cyclic frame (so `y_k = c_k^T v` is the k-th
/// derivative of `y_0`) together with `c_n`.
pub fn cyclic_frame(a: &RatMatrix) -> Result<(RatMatrix, Vec<RatFun>)> {
    let n = a.rows();
    let at = a.transpose();
    for c0 in candidate_vectors(n) {
        let mut cs: Vec<Vec<RatFun>> = vec![c0];
        for _ in 0..n {
            let prev = cs.last().unwrap();
            let d: Vec<RatFun> = prev.iter().map(|f| f.derivative()).collect();
            let m = at.mul_vec(prev);
            cs.push(d.iter().zip(m).map(|(x, y)| x + &y).collect());
        }
        let w = Mat::from_fn(n, n, |r, c| cs[r][c].clone());
        if w.det().is_zero() {
            continue;
        }
        return Ok((w, cs.pop().unwrap()));
    }
    Err(Error::UnsupportedLocalType { point: "?".into(), reason: "no cyclic vector found".into() })
}

/// Newton polygon of the connection at `x`.
pub fn newton_polygon(conn: &Connection, x: &Point) -> Result<NewtonPolygon> {
    let a = chart_matrix(conn, x);
    let b = scalar_operator(&a).map_err(|_| Error::UnsupportedLocalType {
        point: x.to_string(),
        reason: "no cyclic vector found".into(),
    })?;
    let n = b.len();
    let at = match x {
        Point::Finite(_) => x.clone(),
        Point::Infinity => Point::Finite(Scalar::zero()),
    };
    // Points (k, v(a_k) - k) for L = d^n - sum b_k d^k.
    let mut pts: Vec<(i64, i64)> = Vec::new();
    for (k, bk) in b.iter().enumerate() {
        if let Some(v) = function_order(bk, &at) {
            pts.push((k as i64, v - k as i64));
        }
    }
    pts.push((n as i64, -(n as i64)));
    Ok(polygon_from_points(&pts, n))
}

/// Lower boundary of the union of the quadrants `P + (-inf, 0] x [0, inf)`.
pub fn polygon_from_points(pts: &[(i64, i64)], n: usize) -> NewtonPolygon {
    let ymin = pts.iter().map(|p| p.1).min().unwrap();
    let k0 = pts.iter().filter(|p| p.1 == ymin).map(|p| p.0).max().unwrap();
    let mut slopes: Vec<(BigRational, usize)> = Vec::new();
    if k0 > 0 {
        slopes.push((BigRational::zero(), k0 as usize));
    }
    // Lower hull of the points with abscissa >= k0.
    let mut right: Vec<(i64, i64)> = pts.iter().copied().filter(|p| p.0 >= k0).collect();
    right.sort();
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for p in right {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // Remove b if it lies on or above segment a-p.
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0 {
                hull.pop();
            } else {
                break;
            }
        }
        if hull.last().is_some_and(|h| h.0 == p.0) {
            if hull.last().unwrap().1 > p.1 {
                hull.pop();
            } else {
                continue;
            }
        }
        hull.push(p);
    }
    let mut irr = BigRational::zero();
    for w in hull.windows(2) {
        let dx = w[1].0 - w[0].0;
        let dy = w[1].1 - w[0].1;
        let s = BigRational::new(BigInt::from(dy), BigInt::from(dx));
        irr += &s * BigRational::from_integer(BigInt::from(dx));
        match slopes.last_mut() {
            Some((last, m)) if *last == s => *m += dx as usize,
            _ => slopes.push((s, dx as usize)),
        }
    }
    let total: usize = slopes.iter().map(|s| s.1).sum();
    debug_assert_eq!(total, n);
    NewtonPolygon { slopes, irregularity: irr }
}
