//! Dense complex matrices at working precision.

use super::mp::Complex;
use crate::exact::Matrix;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize, prec: u32) -> Self {
        CMat { rows, cols, data: vec![Complex::zero(prec); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMat { rows, cols, data }
    }

    pub fn from_exact(m: &Matrix, prec: u32) -> Self {
        Self::from_fn(m.rows(), m.cols(), |r, c| Complex::from_scalar(&m[(r, c)], prec))
    }

    pub fn get(&self, r: usize, c: usize) -> &Complex {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex) {
        self.data[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).clone())
    }

    pub fn matmul(&self, o: &CMat) -> Self {
        assert_eq!(self.cols, o.rows);
        let prec = self.data.first().or(o.data.first()).map_or(64, |c| c.prec());
        Self::from_fn(self.rows, o.cols, |r, c| {
            let mut acc = Complex::zero(prec);
            for k in 0..self.cols {
                acc.add_assign(&self.get(r, k).mul(o.get(k, c)));
            }
            acc
        })
    }

    pub fn scale(&self, s: &Complex) -> Self {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|c| c.mul(s)).collect() }
    }

    pub fn sub(&self, o: &CMat) -> Self {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        Complex::max_abs(&self.data)
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex>> {
        (0..self.rows).map(|r| self.data[r * self.cols..(r + 1) * self.cols].to_vec()).collect()
    }

    /// Solves `self x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[Complex]) -> Result<Vec<Complex>> {
        let n = self.rows;
        assert_eq!(n, self.cols);
        let mut a = self.clone();
        let mut x = b.to_vec();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a.get(i, col).abs_f64().partial_cmp(&a.get(j, col).abs_f64()).unwrap())
                .unwrap();
            if a.get(piv, col).abs_f64() == 0.0 {
                return Err(Error::PrecisionExhausted("singular local frame".into()));
            }
            if piv != col {
                for c in 0..n {
                    a.data.swap(piv * n + c, col * n + c);
                }
                x.swap(piv, col);
            }
            let inv = a.get(col, col).inv();
            for r in col + 1..n {
                let f = a.get(r, col).mul(&inv);
                if f.is_zero() {
                    continue;
                }
                for c in col..n {
                    let v = a.get(r, c).sub(&f.mul(a.get(col, c)));
                    a.set(r, c, v);
                }
                x[r] = x[r].sub(&f.mul(&x[col]));
            }
        }
        for r in (0..n).rev() {
            let mut acc = x[r].clone();
            for c in r + 1..n {
                acc = acc.sub(&a.get(r, c).mul(&x[c]));
            }
            x[r] = acc.div(a.get(r, r));
        }
        Ok(x)
    }
}
