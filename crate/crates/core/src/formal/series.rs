//! Truncated vector and matrix Laurent series in a local coordinate.

use num_traits::Zero;

use crate::exact::{form_expand, Laurent, Matrix, Point, RatFun, Scalar};

/// `sum_{k >= start} coeffs[k - start] t^k`, known for exponents `< order`.
#[derive(Clone, Debug, PartialEq)]
pub struct VSeries {
    pub dim: usize,
    pub start: i64,
    pub coeffs: Vec<Vec<Scalar>>,
    pub order: i64,
}

impl VSeries {
    pub fn zero(dim: usize, order: i64) -> Self {
        VSeries { dim, start: order, coeffs: Vec::new(), order }
    }

    /// Coefficient of `t^k`; zero below the start and at or beyond the stored range.
    pub fn get(&self, k: i64) -> Vec<Scalar> {
        let i = k - self.start;
        if i < 0 || i as usize >= self.coeffs.len() {
            vec![Scalar::zero(); self.dim]
        } else {
            self.coeffs[i as usize].clone()
        }
    }

    pub fn valuation(&self) -> Option<i64> {
        self.coeffs.iter().position(|c| c.iter().any(|x| !x.is_zero())).map(|i| self.start + i as i64)
    }

    /// Expands a form (one rational function per component) at `x` in the chart coordinate.
    pub fn from_form(w: &[RatFun], x: &Point, order: i64) -> Self {
        let ls: Vec<Laurent> = w.iter().map(|f| form_expand(f, x, order - 1)).collect();
        Self::from_components(&ls, order)
    }

    pub fn from_components(ls: &[Laurent], order: i64) -> Self {
        let dim = ls.len();
        let start = ls.iter().filter_map(|l| l.valuation()).min().unwrap_or(order).min(order);
        let coeffs = (start..order).map(|k| ls.iter().map(|l| l.coeff_or_zero(k)).collect()).collect();
        VSeries { dim, start, coeffs, order }
    }

    /// Builds a series from coefficients at `start, start+1, ...`.
    pub fn from_coeffs(dim: usize, start: i64, coeffs: Vec<Vec<Scalar>>) -> Self {
        let order = start + coeffs.len() as i64;
        VSeries { dim, start, coeffs, order }
    }

    pub fn component(&self, i: usize, point: &Point) -> Laurent {
        Laurent::new(point.clone(), self.start, self.coeffs.iter().map(|c| c[i].clone()).collect(), self.order)
    }

    pub fn truncate(&self, order: i64) -> Self {
        let order = order.min(self.order);
        let keep = (order - self.start).max(0) as usize;
        VSeries { dim: self.dim, start: self.start.min(order), coeffs: self.coeffs.iter().take(keep).cloned().collect(), order }
    }
}

/// Matrix power series `sum_{k >= 0} m[k] t^k`.
pub type MSeries = Vec<Matrix>;

pub fn mseries_mul(a: &[Matrix], b: &[Matrix], terms: usize) -> MSeries {
    let (r, c) = (a[0].rows(), b[0].cols());
    (0..terms)
        .map(|k| {
            let mut acc = Matrix::zeros(r, c);
            for j in 0..=k {
                if j < a.len() && k - j < b.len() {
                    acc = acc.add(&a[j].matmul(&b[k - j]));
                }
            }
            acc
        })
        .collect()
}

/// Inverse of a matrix power series with invertible constant term.
pub fn mseries_inv(a: &[Matrix], terms: usize) -> Option<MSeries> {
    let a0inv = a[0].inverse()?;
    let n = a0inv.rows();
    let mut out: Vec<Matrix> = vec![a0inv.clone()];
    for k in 1..terms {
        let mut acc = Matrix::zeros(n, n);
        for j in 1..=k {
            if j < a.len() {
                acc = acc.add(&a[j].matmul(&out[k - j]));
            }
        }
        out.push(a0inv.matmul(&acc).neg());
    }
    Some(out)
}

/// `Q(t) v(t)` for a matrix power series `Q` known to `q.len()` terms.
pub fn mseries_apply(q: &[Matrix], v: &VSeries) -> VSeries {
    let rows = q[0].rows();
    let order = v.order.min(v.start + q.len() as i64);
    let coeffs = (v.start..order)
        .map(|k| {
            let mut acc = vec![Scalar::zero(); rows];
            for j in 0..q.len() as i64 {
                let idx = k - j;
                if idx < v.start {
                    break;
                }
                let cv = v.get(idx);
                for (a, b) in acc.iter_mut().zip(q[j as usize].mul_vec(&cv)) {
                    *a += &b;
                }
            }
            acc
        })
        .collect();
    VSeries { dim: rows, start: v.start, coeffs, order }
}
