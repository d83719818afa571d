//! Order-by-order solution of `u' - M u = f` in formal Laurent series.

use num_traits::Zero;

use super::series::VSeries;
use crate::connection::LocalMatrix;
use crate::exact::roots::gaussian_rational_roots;
use crate::exact::{solve_exact, LinearSolution, Mat, Matrix, Point, Scalar};
use crate::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Params {
    /// Free parameters may enter at every resonant level.
    Everywhere,
    /// Free parameters enter only at the first level; later resonances must be
    /// consistent for every parameter value (no logarithmic terms).
    StartOnly,
}

#[derive(Clone, Debug)]
pub(crate) struct RegularSolution {
    pub particular: VSeries,
    pub homogeneous: Vec<VSeries>,
}

/// Integer values `k` with `det((k + shift) I - r0) = 0`, increasing.
pub(crate) fn resonances(r0: &Matrix, shift: &Scalar) -> Vec<i64> {
    let (roots, _) = gaussian_rational_roots(&r0.char_poly());
    let mut ks: Vec<i64> = roots
        .iter()
        .filter_map(|(rho, _)| {
            let d = rho - shift;
            if d.is_integer() {
                d.as_i64()
            } else {
                None
            }
        })
        .collect();
    ks.sort();
    ks.dedup();
    ks
}

fn axpy(acc: &mut [Scalar], m: &Matrix, v: &[Scalar]) {
    if v.iter().all(|x| x.is_zero()) {
        return;
    }
    for (a, b) in acc.iter_mut().zip(m.mul_vec(v)) {
        *a += &b;
    }
}

/// Solves `u' - R u = f` for `u = t^shift sum_{k = k_start}^{k_end} c_k t^k` where `R`
/// has at most a simple pole. Returns the particular solution with all remaining
/// parameters set to zero and the parameter directions.
pub(crate) fn regular_recursion(
    r: &LocalMatrix,
    f: &VSeries,
    shift: &Scalar,
    k_start: i64,
    k_end: i64,
    policy: Params,
    point: &Point,
) -> Result<RegularSolution> {
    debug_assert!(r.valuation >= -1);
    let m = f.dim;
    let rt: Vec<Matrix> = (0..=(k_end - k_start + 1).max(0)).map(|j| r.coeff(j - 1)).collect();
    let id = Matrix::identity(m);
    let mut base: Vec<Vec<Scalar>> = Vec::new();
    let mut parts: Vec<Vec<Vec<Scalar>>> = Vec::new();
    for k in k_start..=k_end {
        let idx = (k - k_start) as usize;
        let mut rb = f.get(k - 1);
        for j in 1..=idx {
            axpy(&mut rb, &rt[j], &base[idx - j]);
        }
        let rp: Vec<Vec<Scalar>> = parts
            .iter()
            .map(|p| {
                let mut acc = vec![Scalar::zero(); m];
                for j in 1..=idx {
                    axpy(&mut acc, &rt[j], &p[idx - j]);
                }
                acc
            })
            .collect();
        let kk = id.scale(&(&Scalar::from_int(k) + shift)).sub(&rt[0]);
        if policy == Params::StartOnly && k != k_start {
            let solve = |rhs: &[Scalar]| match solve_exact(&kk, rhs) {
                LinearSolution::Consistent { particular, .. } => Ok(particular),
                LinearSolution::Inconsistent => Err(Error::UnsupportedLocalType {
                    point: point.to_string(),
                    reason: format!("logarithmic term at level {k}"),
                }),
            };
            base.push(solve(&rb)?);
            for (p, r) in parts.iter_mut().zip(&rp) {
                p.push(solve(r)?);
            }
            continue;
        }
        let np = parts.len();
        let joint = Mat::from_fn(m, m + np, |i, c| if c < m { kk[(i, c)].clone() } else { -rp[c - m][i].clone() });
        let (xs, kernel) = match solve_exact(&joint, &rb) {
            LinearSolution::Consistent { particular, kernel } => (particular, kernel),
            LinearSolution::Inconsistent => {
                return Err(Error::Obstruction { point: point.to_string(), level: k });
            }
        };
        let alpha = &xs[m..];
        for (lvl, b) in base.iter_mut().enumerate() {
            for (r, a) in alpha.iter().enumerate() {
                if !a.is_zero() {
                    for i in 0..m {
                        let t = &parts[r][lvl][i] * a;
                        b[i] += &t;
                    }
                }
            }
        }
        let mut new_parts: Vec<Vec<Vec<Scalar>>> = Vec::new();
        for kv in &kernel {
            let mut levels: Vec<Vec<Scalar>> = (0..idx)
                .map(|lvl| {
                    let mut acc = vec![Scalar::zero(); m];
                    for r in 0..np {
                        let a = &kv[m + r];
                        if !a.is_zero() {
                            for i in 0..m {
                                let t = &parts[r][lvl][i] * a;
                                acc[i] += &t;
                            }
                        }
                    }
                    acc
                })
                .collect();
            levels.push(kv[..m].to_vec());
            new_parts.push(levels);
        }
        base.push(xs[..m].to_vec());
        parts = new_parts;
    }
    let particular = VSeries::from_coeffs(m, k_start, base);
    let homogeneous = parts.into_iter().map(|p| VSeries::from_coeffs(m, k_start, p)).collect();
    Ok(RegularSolution { particular, homogeneous })
}

/// Solves `u' - M u = f` when `M` has a pole of order `q + 1 >= 2` with invertible
/// leading coefficient; the solution is unique.
pub(crate) fn irregular_recursion(mm: &LocalMatrix, f: &VSeries, k_end: i64) -> VSeries {
    let v = mm.valuation;
    debug_assert!(v <= -2);
    let m = f.dim;
    let Some(fv) = f.valuation() else {
        return VSeries::zero(m, k_end + 1);
    };
    let k_min = fv - v;
    if k_min > k_end {
        return VSeries::zero(m, k_end + 1);
    }
    let a0inv = mm.coeff(v).inverse().expect("invertible leading coefficient");
    let aj: Vec<Matrix> = (0..=(k_end - k_min)).map(|j| mm.coeff(v + j)).collect();
    let mut cs: Vec<Vec<Scalar>> = Vec::new();
    let get = |cs: &Vec<Vec<Scalar>>, k: i64| -> Vec<Scalar> {
        if k < k_min {
            vec![Scalar::zero(); m]
        } else {
            cs[(k - k_min) as usize].clone()
        }
    };
    for k in k_min..=k_end {
        let mut rhs: Vec<Scalar> =
            get(&cs, k + v + 1).iter().map(|x| x * &Scalar::from_int(k + v + 1)).collect();
        for (a, b) in rhs.iter_mut().zip(f.get(k + v)) {
            *a -= &b;
        }
        for j in 1..=(k - k_min) as usize {
            let t = aj[j].mul_vec(&cs[(k - k_min) as usize - j]);
            for (a, b) in rhs.iter_mut().zip(t) {
                *a -= &b;
            }
        }
        cs.push(a0inv.mul_vec(&rhs));
    }
    VSeries::from_coeffs(m, k_min, cs)
}

/// Checks `M t^{-q-1}` has a scalar-invertible leading term; used to pick the
/// direct irregular recursion.
pub(crate) fn leading_invertible(mm: &LocalMatrix) -> bool {
    !mm.coeff(mm.valuation).det().is_zero()
}
