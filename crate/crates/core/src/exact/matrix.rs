//! Dense matrices over exact fields and the exact linear solver.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::{Poly, RatFun, Scalar};

/// Minimal field interface shared by `Scalar` and `RatFun`.
pub trait Field: Clone + PartialEq + Zero + One + fmt::Debug
where
    for<'a> &'a Self: Add<&'a Self, Output = Self>
        + Sub<&'a Self, Output = Self>
        + Mul<&'a Self, Output = Self>
        + Neg<Output = Self>,
{
    fn inverse(&self) -> Option<Self>;

    /// Rough storage size, used to prefer small pivots.
    fn size(&self) -> u64 {
        0
    }
}

impl Field for Scalar {
    fn inverse(&self) -> Option<Self> {
        self.inv()
    }

    fn size(&self) -> u64 {
        [&self.re, &self.im].iter().map(|r| r.numer().bits() + r.denom().bits()).sum()
    }
}

impl Field for RatFun {
    fn inverse(&self) -> Option<Self> {
        self.inv()
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type Matrix = Mat<Scalar>;
pub type RatMatrix = Mat<RatFun>;

/// Result of `solve_exact`.
#[derive(Clone, Debug, PartialEq)]
pub enum LinearSolution<T> {
    Consistent { particular: Vec<T>, kernel: Vec<Vec<T>> },
    Inconsistent,
}

impl<T: Clone> Mat<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged matrix");
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Mat<U> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Mat::from_fn(rows.len(), cols.len(), |r, c| self[(rows[r], cols[c])].clone())
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

impl<T: Field> Mat<T>
where
    for<'a> &'a T: Add<&'a T, Output = T> + Sub<&'a T, Output = T> + Mul<&'a T, Output = T> + Neg<Output = T>,
{
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat::from_fn(rows, cols, |_, _| T::zero())
    }

    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, n, |r, c| if r == c { T::one() } else { T::zero() })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|x| x * s)
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                let mut acc = T::zero();
                for c in 0..self.cols {
                    let x = &self[(r, c)];
                    if !x.is_zero() && !v[c].is_zero() {
                        acc = &acc + &(x * &v[c]);
                    }
                }
                acc
            })
            .collect()
    }

    pub fn matmul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "dimension mismatch in product");
        let mut out = Mat::zeros(self.rows, o.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..o.cols {
                    let b = &o[(k, c)];
                    if !b.is_zero() {
                        let t = a * b;
                        out[(r, c)] = &out[(r, c)] + &t;
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat::from_fn(self.rows, self.cols, |r, c| &self[(r, c)] + &o[(r, c)])
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat::from_fn(self.rows, self.cols, |r, c| &self[(r, c)] - &o[(r, c)])
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -x)
    }

    /// Reduced row echelon form. Pivots are taken column by column, using the row at or
    /// below the current one whose entry is smallest. Returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).filter(|&r| !self[(r, col)].is_zero()).min_by_key(|&r| self[(r, col)].size()) else {
                continue;
            };
            if p != row {
                for c in 0..self.cols {
                    self.data.swap(p * self.cols + c, row * self.cols + c);
                }
            }
            let inv = self[(row, col)].inverse().unwrap();
            let support: Vec<usize> = (col..self.cols).filter(|&c| !self[(row, c)].is_zero()).collect();
            for &c in &support {
                self[(row, c)] = &self[(row, c)] * &inv;
            }
            for r in 0..self.rows {
                if r == row || self[(r, col)].is_zero() {
                    continue;
                }
                let f = self[(r, col)].clone();
                for &c in &support {
                    let t = &f * &self[(row, c)];
                    self[(r, c)] = &self[(r, c)] - &t;
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    pub fn det(&self) -> T {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        let mut m = self.clone();
        let mut det = T::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !m[(r, col)].is_zero()) else {
                return T::zero();
            };
            if p != col {
                for c in 0..n {
                    m.data.swap(p * n + c, col * n + c);
                }
                det = -&det;
            }
            let piv = m[(col, col)].clone();
            det = &det * &piv;
            let inv = piv.inverse().unwrap();
            for r in col + 1..n {
                if m[(r, col)].is_zero() {
                    continue;
                }
                let f = &m[(r, col)] * &inv;
                for c in col..n {
                    if !m[(col, c)].is_zero() {
                        let t = &f * &m[(col, c)];
                        m[(r, c)] = &m[(r, c)] - &t;
                    }
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<Self> {
        assert!(self.is_square());
        let n = self.rows;
        let mut aug = Mat::from_fn(n, 2 * n, |r, c| {
            if c < n {
                self[(r, c)].clone()
            } else if c - n == r {
                T::one()
            } else {
                T::zero()
            }
        });
        let piv = aug.rref();
        if piv.len() < n || piv[n - 1] != n - 1 {
            return None;
        }
        Some(Mat::from_fn(n, n, |r, c| aug[(r, c + n)].clone()))
    }

    /// Basis of the right kernel, one vector per free column in increasing order.
    pub fn kernel(&self) -> Vec<Vec<T>> {
        match solve_exact(self, &vec![T::zero(); self.rows]) {
            LinearSolution::Consistent { kernel, .. } => kernel,
            LinearSolution::Inconsistent => unreachable!(),
        }
    }
}

/// Solves `m x = b` exactly: a particular solution (free variables set to zero) and a
/// kernel basis, or `Inconsistent`.
pub fn solve_exact<T: Field>(m: &Mat<T>, b: &[T]) -> LinearSolution<T>
where
    for<'a> &'a T: Add<&'a T, Output = T> + Sub<&'a T, Output = T> + Mul<&'a T, Output = T> + Neg<Output = T>,
{
    assert_eq!(b.len(), m.rows, "right-hand side length mismatch");
    let n = m.cols;
    let mut aug = Mat::from_fn(m.rows, n + 1, |r, c| if c < n { m[(r, c)].clone() } else { b[r].clone() });
    let pivots = aug.rref();
    if pivots.last() == Some(&n) {
        return LinearSolution::Inconsistent;
    }
    let mut particular = vec![T::zero(); n];
    for (r, &pc) in pivots.iter().enumerate() {
        particular[pc] = aug[(r, n)].clone();
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let kernel = free
        .iter()
        .map(|&f| {
            let mut v = vec![T::zero(); n];
            v[f] = T::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -&aug[(r, f)];
            }
            v
        })
        .collect();
    LinearSolution::Consistent { particular, kernel }
}

impl Matrix {
    pub fn scalar_rows(rows: &[&[i64]]) -> Self {
        Mat::from_rows(rows.iter().map(|r| r.iter().map(|&x| Scalar::from_int(x)).collect()).collect())
    }

    /// Characteristic polynomial `det(x I - M)` by the Faddeev-LeVerrier recursion.
    pub fn char_poly(&self) -> Poly {
        assert!(self.is_square());
        let n = self.rows;
        let mut coeffs = vec![Scalar::zero(); n + 1];
        coeffs[n] = Scalar::one();
        let mut mk = Matrix::zeros(n, n);
        for k in 1..=n {
            let mut next = self.matmul(&mk);
            for i in 0..n {
                next[(i, i)] += &coeffs[n - k + 1];
            }
            mk = next;
            let am = self.matmul(&mk);
            let mut tr = Scalar::zero();
            for i in 0..n {
                tr += &am[(i, i)];
            }
            coeffs[n - k] = &(-&tr) / &Scalar::from_int(k as i64);
        }
        Poly::new(coeffs)
    }
}

impl<T: fmt::Display> fmt::Display for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.data[r * self.cols + c])?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_particular_and_kernel() {
        let m = Matrix::scalar_rows(&[&[1, 2, 3], &[2, 4, 6]]);
        let b = vec![Scalar::from_int(6), Scalar::from_int(12)];
        match solve_exact(&m, &b) {
            LinearSolution::Consistent { particular, kernel } => {
                assert_eq!(particular, vec![Scalar::from_int(6), Scalar::zero(), Scalar::zero()]);
                assert_eq!(kernel.len(), 2);
                for k in &kernel {
                    assert!(m.mul_vec(k).iter().all(|x| x.is_zero()));
                }
            }
            LinearSolution::Inconsistent => panic!("expected a solution"),
        }
        let bad = vec![Scalar::from_int(1), Scalar::from_int(3)];
        assert_eq!(solve_exact(&m, &bad), LinearSolution::Inconsistent);
    }

    #[test]
    fn determinant_inverse_charpoly() {
        let m = Matrix::scalar_rows(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        assert_eq!(m.det(), Scalar::from_int(18));
        let inv = m.inverse().unwrap();
        assert_eq!(m.matmul(&inv), Matrix::identity(3));
        let cp = m.char_poly();
        assert_eq!(cp.coeff(0), Scalar::from_int(-18));
        assert_eq!(cp.coeff(2), Scalar::from_int(-9));
        assert!(Matrix::scalar_rows(&[&[1, 2], &[2, 4]]).inverse().is_none());
    }
}
