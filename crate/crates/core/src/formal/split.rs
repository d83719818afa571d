//! Formal block splitting by leading terms and removal of scalar exponential parts.

use num_traits::Zero;

use super::series::{mseries_mul, MSeries};
use crate::connection::LocalMatrix;
use crate::exact::roots::gaussian_rational_roots;
use crate::exact::{solve_exact, LinearSolution, Mat, Matrix, Point, Scalar};
use crate::{Error, Result};

/// One block of the split system: `v = Q(t) u` with `u' = (phi'(t) + R(t)) u`.
#[derive(Clone, Debug)]
pub struct Block {
    /// `phi[j - 1]` is the coefficient of `t^{-j}` in the exponential factor.
    pub phi: Vec<Scalar>,
    /// Gauge columns, an `n x m` matrix power series.
    pub gauge: MSeries,
    /// Residual system with at most a simple pole.
    pub residual: LocalMatrix,
}

impl Block {
    pub fn size(&self) -> usize {
        self.gauge[0].cols()
    }

    pub fn is_regular(&self) -> bool {
        self.phi.iter().all(|c| c.is_zero())
    }

    /// Degree of the exponential factor in `1/t`.
    pub fn phi_degree(&self) -> usize {
        self.phi.iter().rposition(|c| !c.is_zero()).map_or(0, |i| i + 1)
    }

    /// The full block system `phi' I + R` as a local matrix.
    pub fn full_matrix(&self) -> LocalMatrix {
        let m = self.size();
        let q = self.phi_degree() as i64;
        if q == 0 {
            return self.residual.clone();
        }
        let v = -q - 1;
        let top = self.residual.valuation + self.residual.coeffs.len() as i64;
        let coeffs = (v..top)
            .map(|k| {
                let mut c = self.residual.coeff(k);
                // d/dt of phi_j t^{-j} is -j phi_j t^{-j-1}
                let j = -k - 1;
                if j >= 1 && (j as usize) <= self.phi.len() {
                    let s = &self.phi[j as usize - 1] * &Scalar::from_int(-j);
                    c = c.add(&Matrix::identity(m).scale(&s));
                }
                c
            })
            .collect();
        LocalMatrix { point: self.residual.point.clone(), valuation: v, coeffs }
    }
}

/// Drops leading zero coefficients.
pub fn normalize(mm: &LocalMatrix) -> LocalMatrix {
    match mm.coeffs.iter().position(|c| !c.is_zero()) {
        Some(i) => LocalMatrix {
            point: mm.point.clone(),
            valuation: mm.valuation + i as i64,
            coeffs: mm.coeffs[i..].to_vec(),
        },
        None => LocalMatrix { point: mm.point.clone(), valuation: 0, coeffs: mm.coeffs.clone() },
    }
}

fn unsupported(x: &Point, reason: &str) -> Error {
    Error::UnsupportedLocalType { point: x.to_string(), reason: reason.into() }
}

/// Splits the local system `v' = M v` into blocks with scalar exponential parts.
pub fn split(mm: &LocalMatrix) -> Result<Vec<Block>> {
    let n = mm.coeffs[0].rows();
    reduce(mm, vec![], n)
}

fn reduce(mm: &LocalMatrix, mut phi: Vec<Scalar>, n: usize) -> Result<Vec<Block>> {
    let x = mm.point.clone();
    let mm = normalize(mm);
    let terms = mm.coeffs.len();
    if mm.valuation >= -1 {
        let mut gauge = vec![Matrix::zeros(n, n); terms.max(1)];
        gauge[0] = Matrix::identity(n);
        return Ok(vec![Block { phi, gauge, residual: mm }]);
    }
    let q = (-mm.valuation - 1) as usize;
    let m0 = &mm.coeffs[0];
    let (eig, rest) = gaussian_rational_roots(&m0.char_poly());
    if rest.deg_i() > 0 {
        return Err(unsupported(&x, "leading eigenvalues outside Q(i)"));
    }
    if eig.len() == 1 {
        let mu = &eig[0].0;
        let scalar = Matrix::identity(n).scale(mu);
        if *m0 != scalar {
            return Err(unsupported(&x, "nilpotent leading term requires ramification"));
        }
        if phi.len() < q {
            phi.resize(q, Scalar::zero());
        }
        let t = -mu / &Scalar::from_int(q as i64);
        phi[q - 1] += &t;
        let mut rest = mm.clone();
        rest.coeffs[0] = Matrix::zeros(n, n);
        return reduce(&rest, phi, n);
    }
    // Generalized eigenspaces, one cluster per eigenvalue.
    let mut cols: Vec<Vec<Scalar>> = Vec::new();
    let mut sizes = Vec::new();
    for (mu, mult) in &eig {
        let mut p = m0.sub(&Matrix::identity(n).scale(mu));
        let base = p.clone();
        for _ in 1..*mult {
            p = p.matmul(&base);
        }
        let ker = p.kernel();
        sizes.push(ker.len());
        cols.extend(ker);
    }
    let p = Mat::from_fn(n, n, |r, c| cols[c][r].clone());
    let pinv = p.inverse().expect("generalized eigenvectors span");
    let conj: Vec<Matrix> = mm.coeffs.iter().map(|c| pinv.matmul(&c.matmul(&p))).collect();
    let (t, b) = block_split(&conj, &sizes, q as i64);
    let mut out = Vec::new();
    let mut off = 0;
    for &sz in &sizes {
        let idx: Vec<usize> = (off..off + sz).collect();
        let sub = LocalMatrix {
            point: x.clone(),
            valuation: mm.valuation,
            coeffs: b.iter().map(|c| c.submatrix(&idx, &idx)).collect(),
        };
        let embed: Vec<Matrix> = t
            .iter()
            .map(|tk| p.matmul(&Mat::from_fn(n, sz, |r, c| tk[(r, off + c)].clone())))
            .collect();
        for blk in reduce(&sub, phi.clone(), sz)? {
            let len = embed.len().min(blk.gauge.len());
            let gauge = mseries_mul(&embed, &blk.gauge, len);
            out.push(Block { phi: blk.phi, gauge, residual: blk.residual });
        }
        off += sz;
    }
    Ok(out)
}

/// Formal gauge `T = I + sum T_k t^k` block-diagonalizing `t^{-q-1} sum M_k t^k`
/// when `M_0` is block diagonal with disjoint block spectra.
fn block_split(m: &[Matrix], sizes: &[usize], q: i64) -> (Vec<Matrix>, Vec<Matrix>) {
    let n = m[0].rows();
    let mut offs = vec![0];
    for s in sizes {
        offs.push(offs.last().unwrap() + s);
    }
    let block_of = |i: usize| offs.iter().rposition(|&o| o <= i).unwrap().min(sizes.len() - 1);
    let mut t: Vec<Matrix> = vec![Matrix::identity(n)];
    let mut b: Vec<Matrix> = vec![m[0].clone()];
    let j_blocks: Vec<Matrix> = (0..sizes.len())
        .map(|a| {
            let idx: Vec<usize> = (offs[a]..offs[a + 1]).collect();
            m[0].submatrix(&idx, &idx)
        })
        .collect();
    for k in 1..m.len() {
        let mut r = m[k].clone();
        for j in 1..k {
            r = r.add(&m[j].matmul(&t[k - j])).sub(&t[k - j].matmul(&b[j]));
        }
        let d = k as i64 - q;
        if d >= 1 {
            r = r.sub(&t[d as usize].scale(&Scalar::from_int(d)));
        }
        let bk = Mat::from_fn(n, n, |i, j| if block_of(i) == block_of(j) { r[(i, j)].clone() } else { Scalar::zero() });
        let mut buf = vec![Scalar::zero(); n * n];
        for a in 0..sizes.len() {
            for c in 0..sizes.len() {
                if a == c {
                    continue;
                }
                let ri: Vec<usize> = (offs[a]..offs[a + 1]).collect();
                let ci: Vec<usize> = (offs[c]..offs[c + 1]).collect();
                let rab = r.submatrix(&ri, &ci).neg();
                let x = sylvester(&j_blocks[a], &j_blocks[c], &rab);
                for (ii, &i) in ri.iter().enumerate() {
                    for (jj, &j) in ci.iter().enumerate() {
                        buf[i * n + j] = x[(ii, jj)].clone();
                    }
                }
            }
        }
        t.push(Mat::from_fn(n, n, |i, j| buf[i * n + j].clone()));
        b.push(bk);
    }
    (t, b)
}

/// Solves `A X - X B = C` for disjoint spectra.
pub fn sylvester(a: &Matrix, b: &Matrix, c: &Matrix) -> Matrix {
    let (p, q) = (a.rows(), b.rows());
    let n = p * q;
    let big = Mat::from_fn(n, n, |row, col| {
        let (i, j) = (row / q, row % q);
        let (l, m) = (col / q, col % q);
        let mut v = Scalar::zero();
        if m == j {
            v += &a[(i, l)];
        }
        if l == i {
            v -= &b[(m, j)];
        }
        v
    });
    let rhs: Vec<Scalar> = (0..n).map(|r| c[(r / q, r % q)].clone()).collect();
    match solve_exact(&big, &rhs) {
        LinearSolution::Consistent { particular, .. } => Mat::from_fn(p, q, |i, j| particular[i * q + j].clone()),
        LinearSolution::Inconsistent => unreachable!("disjoint spectra"),
    }
}
