//! Algebraic de Rham cohomology of `(V, nabla)` on `U = P^1 \ D`.
//!
//! `H^1` is computed as the quotient `W_N / (nabla V_{N+1} ∩ W_N)` of forms with poles
//! of order at most `N` on `D` by images of sections with poles of order at most
//! `N + 1`, in partial-fraction coordinates. Middle classes are the forms whose
//! formal expansion at every point of `D` has a formal Laurent primitive; the
//! residue pairing `S` pairs their primitives with partner forms.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::connection::{form_order, Connection, Form, Pairing};
use crate::exact::{series_expand, solve_exact, LinearSolution, Mat, Matrix, Point, Poly, RatFun, Scalar};
use crate::formal::{self, newton_polygon, primitive_through, FormalPrimitive, VSeries};
use crate::{Error, Result};

/// Partial-fraction monomial: `(z - x_p)^{-k}` or `z^k`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
enum Key {
    Pole(usize, u32),
    Poly(u32),
}

type Coord = (usize, Key);

fn key_function(k: Key, pts: &[Scalar]) -> RatFun {
    match k {
        Key::Pole(p, e) => RatFun::pole(Scalar::one(), &pts[p], e),
        Key::Poly(e) => RatFun::from_poly(Poly::monomial(Scalar::one(), e as usize)),
    }
}

/// Partial-fraction coordinates of `f` whose finite poles lie in `pts`.
fn function_coords(f: &RatFun, pts: &[Scalar]) -> Vec<(Key, Scalar)> {
    let mut out = Vec::new();
    if f.is_zero() {
        return out;
    }
    let (q, _) = f.num().div_rem(f.den());
    for (k, c) in q.coeffs().iter().enumerate() {
        if !c.is_zero() {
            out.push((Key::Poly(k as u32), c.clone()));
        }
    }
    for (p, x) in pts.iter().enumerate() {
        let Some(v) = f.order_at(x) else { continue };
        if v >= 0 {
            continue;
        }
        let s = series_expand(f, &Point::Finite(x.clone()), -1);
        for k in 1..=(-v) {
            let c = s.coeff_or_zero(-k);
            if !c.is_zero() {
                out.push((Key::Pole(p, k as u32), c));
            }
        }
    }
    out
}

/// The pole-bounded linear algebra at a fixed bound.
struct Quotient {
    dimension: usize,
    h0: usize,
    representatives: Vec<Form>,
    /// Columns `[nabla V_M | representatives]` in coordinates, for reducing forms.
    system: Mat<Scalar>,
    rows: BTreeMap<Coord, usize>,
}

fn section_basis(rank: usize, pts: &[Scalar], has_inf: bool, m: u32) -> Vec<(usize, Key)> {
    let mut out = Vec::new();
    for i in 0..rank {
        for p in 0..pts.len() {
            for k in 1..=m {
                out.push((i, Key::Pole(p, k)));
            }
        }
        let top = if has_inf { m } else { 0 };
        for k in 0..=top {
            out.push((i, Key::Poly(k)));
        }
    }
    out
}

/// Forms with poles of order `<= n` on `D`, simplest first.
fn form_basis(rank: usize, pts: &[Scalar], has_inf: bool, n: u32) -> Vec<(u32, Vec<(Coord, Scalar)>)> {
    let mut out: Vec<(u32, usize, usize, Vec<(Coord, Scalar)>)> = Vec::new();
    for i in 0..rank {
        for (p, _) in pts.iter().enumerate() {
            for k in 1..=n {
                if k == 1 && !has_inf {
                    if p == 0 {
                        continue;
                    }
                    out.push((1, p, i, vec![((i, Key::Pole(p, 1)), Scalar::one()), ((i, Key::Pole(0, 1)), -Scalar::one())]));
                } else {
                    out.push((k, p, i, vec![((i, Key::Pole(p, k)), Scalar::one())]));
                }
            }
        }
        if has_inf && n >= 2 {
            for k in 0..=(n - 2) {
                out.push((k + 2, pts.len(), i, vec![((i, Key::Poly(k)), Scalar::one())]));
            }
        }
    }
    out.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    out.into_iter().map(|(c, _, _, v)| (c, v)).collect()
}

fn coords_to_form(rank: usize, pts: &[Scalar], v: &[(Coord, Scalar)]) -> Form {
    let mut f = vec![RatFun::zero(); rank];
    for ((i, k), c) in v {
        f[*i] = &f[*i] + &key_function(*k, pts).scale(c);
    }
    f
}

fn form_coords(w: &Form, pts: &[Scalar]) -> Vec<(Coord, Scalar)> {
    let mut out = Vec::new();
    for (i, f) in w.iter().enumerate() {
        for (k, c) in function_coords(f, pts) {
            out.push(((i, k), c));
        }
    }
    out
}

fn nabla_images(conn: &Connection, basis: &[(usize, Key)], pts: &[Scalar]) -> Vec<Vec<(Coord, Scalar)>> {
    let n = conn.rank();
    basis
        .iter()
        .map(|&(i, k)| {
            let g = key_function(k, pts);
            let v: Vec<RatFun> = (0..n).map(|j| if j == i { g.clone() } else { RatFun::zero() }).collect();
            form_coords(&conn.nabla(&v), pts)
        })
        .collect()
}

fn quotient(conn: &Connection, n: u32) -> Quotient {
    let rank = conn.rank();
    let pts = conn.finite_singular();
    let has_inf = conn.singular.iter().any(|p| p.is_infinity());
    let vb = section_basis(rank, &pts, has_inf, n + 1);
    let imgs = nabla_images(conn, &vb, &pts);
    let wb = form_basis(rank, &pts, has_inf, n);
    let mut rows: BTreeMap<Coord, usize> = BTreeMap::new();
    for col in imgs.iter().chain(wb.iter().map(|w| &w.1)) {
        for (c, _) in col {
            let len = rows.len();
            rows.entry(*c).or_insert(len);
        }
    }
    let ncols = imgs.len() + wb.len();
    let mut m = Mat::zeros(rows.len(), ncols);
    let mut data = vec![Scalar::zero(); rows.len() * ncols];
    for (j, col) in imgs.iter().chain(wb.iter().map(|w| &w.1)).enumerate() {
        for (c, v) in col {
            data[rows[c] * ncols + j] = v.clone();
        }
    }
    if !rows.is_empty() {
        m = Mat::from_fn(rows.len(), ncols, |r, c| data[r * ncols + c].clone());
    }
    let mut red = m.clone();
    let pivots = red.rref();
    let nv = imgs.len();
    let rank_img = pivots.iter().filter(|&&p| p < nv).count();
    let rep_cols: Vec<usize> = pivots.iter().copied().filter(|&p| p >= nv).collect();
    let representatives: Vec<Form> = rep_cols.iter().map(|&c| coords_to_form(rank, &pts, &wb[c - nv].1)).collect();
    let keep: Vec<usize> = (0..nv).chain(rep_cols.iter().copied()).collect();
    let all_rows: Vec<usize> = (0..rows.len()).collect();
    let system = if rows.is_empty() { Mat::zeros(0, keep.len()) } else { m.submatrix(&all_rows, &keep) };
    Quotient { dimension: rep_cols.len(), h0: nv - rank_img, representatives, system, rows }
}

/// Representatives of `H^1_dR(U, V)` with the stability certificate.
#[derive(Clone, Debug, Serialize)]
pub struct H1Basis {
    pub pole_bound: u32,
    pub dimension: usize,
    /// Dimensions at `N, N+1, N+2`.
    pub stability: Vec<usize>,
    /// Dimension of global flat sections found in the section space.
    pub h0: usize,
    pub expected: usize,
    #[serde(skip)]
    pub representatives: Vec<Form>,
}

/// Default pole bound `rank (1 + max pole order) + |D| + 2`.
pub fn default_pole_bound(conn: &Connection) -> u32 {
    (conn.rank() as i64 * (1 + conn.max_pole_order()) + conn.singular.len() as i64 + 2) as u32
}

/// Sum of irregularities over `D`.
pub fn total_irregularity(conn: &Connection) -> Result<BigRational> {
    let mut irr = BigRational::zero();
    for x in &conn.singular {
        irr += newton_polygon(conn, x)?.irregularity;
    }
    Ok(irr)
}

/// `rank (|D| - 2) + sum irr_x + h^0`.
pub fn expected_h1_dimension(conn: &Connection, h0: usize) -> Result<usize> {
    let irr = total_irregularity(conn)?;
    let base = BigRational::from_integer(BigInt::from(conn.rank() as i64 * (conn.singular.len() as i64 - 2) + h0 as i64));
    let e = base + irr;
    if !e.is_integer() {
        return Err(Error::CannotCertify(format!("non-integral index {e}")));
    }
    Ok(e.to_integer().try_into().unwrap_or(0))
}

/// `H^1` basis at pole bound `n` (default when `None`), certified stable at `n+1`, `n+2`.
pub fn h1_basis(conn: &Connection, n: Option<u32>) -> Result<H1Basis> {
    let n = n.unwrap_or_else(|| default_pole_bound(conn));
    let qs: Vec<Quotient> = (0..3).map(|d| quotient(conn, n + d)).collect();
    let dims: Vec<usize> = qs.iter().map(|q| q.dimension).collect();
    if dims.iter().any(|&d| d != dims[0]) {
        return Err(Error::UnstableDimension { bound: n as i64, dims });
    }
    let q = qs.into_iter().next().unwrap();
    let expected = expected_h1_dimension(conn, q.h0)?;
    Ok(H1Basis { pole_bound: n, dimension: q.dimension, stability: dims, h0: q.h0, expected, representatives: q.representatives })
}

/// Coordinates of the class of `w` in the representative basis of `h1_basis(conn, n)`,
/// `n` raised to cover the poles of `w`. The zero vector means `w` is exact.
pub fn class_coordinates(conn: &Connection, basis: &H1Basis, w: &Form) -> Result<Vec<Scalar>> {
    let pole = conn
        .singular
        .iter()
        .filter_map(|x| w.iter().filter_map(|f| form_order(f, x)).min())
        .map(|v| (-v).max(0) as u32)
        .max()
        .unwrap_or(0);
    let n = basis.pole_bound.max(pole);
    let q = quotient(conn, n);
    let pts = conn.finite_singular();
    let coords = form_coords(w, &pts);
    let mut b = vec![Scalar::zero(); q.rows.len()];
    for (c, v) in coords {
        match q.rows.get(&c) {
            Some(&r) => b[r] = v,
            None => return Err(Error::Input("form has poles outside D".into())),
        }
    }
    let nrep = q.dimension;
    let ncols = q.system.cols();
    let x = match solve_exact(&q.system, &b) {
        LinearSolution::Consistent { particular, .. } => particular,
        LinearSolution::Inconsistent => return Err(Error::CannotCertify("form not in W_N".into())),
    };
    let local: Vec<Scalar> = x[ncols - nrep..].to_vec();
    if n == basis.pole_bound {
        return Ok(local);
    }
    // Express the larger bound's representatives in the given basis.
    let mut out = vec![Scalar::zero(); basis.dimension];
    for (c, rep) in local.iter().zip(&q.representatives) {
        if c.is_zero() {
            continue;
        }
        if basis.representatives.contains(rep) {
            let i = basis.representatives.iter().position(|r| r == rep).unwrap();
            out[i] += c;
        } else {
            let sub = class_coordinates(conn, basis, rep)?;
            for (o, s) in out.iter_mut().zip(sub) {
                *o += &(c * &s);
            }
        }
    }
    Ok(out)
}

/// A form with formal primitives at every point of `D`.
#[derive(Clone, Debug)]
pub struct MiddleClass {
    pub form: Form,
    pub primitives: Vec<FormalPrimitive>,
}

#[derive(Clone, Debug)]
pub enum Lift {
    Middle(MiddleClass),
    NotMiddle { point: Point, level: i64 },
}

/// Formal primitives of `w` at every point of `D`, each known through `t^{n_min}` at least.
pub fn middle_lift_through(conn: &Connection, w: &Form, n_min: &BTreeMap<String, i64>) -> Result<Lift> {
    let mut prims = Vec::new();
    for x in &conn.singular {
        let need = n_min.get(&x.to_string()).copied().unwrap_or(0);
        match primitive_through(conn, x, w, need) {
            Ok(p) => prims.push(p),
            Err(Error::Obstruction { point: _, level }) => return Ok(Lift::NotMiddle { point: x.clone(), level }),
            Err(e) => return Err(e),
        }
    }
    Ok(Lift::Middle(MiddleClass { form: w.clone(), primitives: prims }))
}

pub fn middle_lift(conn: &Connection, w: &Form) -> Result<Lift> {
    middle_lift_through(conn, w, &BTreeMap::new())
}

/// Coefficient of `t^{-1}` in `sum_i a_i b_i`.
pub fn pair_residue(a: &VSeries, b: &VSeries) -> Scalar {
    let mut acc = Scalar::zero();
    for k in a.start..a.order {
        let j = -1 - k;
        if j < b.start || j >= b.order {
            continue;
        }
        let (u, v) = (a.get(k), b.get(j));
        for (x, y) in u.iter().zip(&v) {
            if !x.is_zero() && !y.is_zero() {
                acc += &(x * y);
            }
        }
    }
    acc
}

/// The form paired against sections: `G w` for a self-pairing, `w` itself for the dual pairing.
pub fn paired_form(conn: &Connection, w: &Form) -> Form {
    match &conn.pairing {
        Pairing::SelfPaired { g, .. } => g.mul_vec(w),
        Pairing::Dual => w.clone(),
    }
}

/// Exponent through which primitives are needed to pair against `forms` at each point.
pub fn needed_orders(conn: &Connection, partner_forms: &[Form]) -> BTreeMap<String, i64> {
    let mut out = BTreeMap::new();
    for x in &conn.singular {
        let mut need = 0;
        for w in partner_forms {
            let gw = paired_form(conn, w);
            if let Some(v) = gw.iter().filter_map(|f| form_order(f, x)).min() {
                need = need.max(-1 - v);
            }
        }
        out.insert(x.to_string(), need);
    }
    out
}

/// `sum_x res_x <m_x, w>` for the primitives of a middle class.
pub fn residue_pairing(conn: &Connection, cls: &MiddleClass, w: &Form) -> Result<Scalar> {
    let gw = paired_form(conn, w);
    let mut acc = Scalar::zero();
    for (x, m) in conn.singular.iter().zip(&cls.primitives) {
        let Some(v) = gw.iter().filter_map(|f| form_order(f, x)).min() else { continue };
        if m.series.order <= -1 - v {
            return Err(Error::TruncationTooSmall { point: x.to_string(), given: m.truncation, needed: -1 - v });
        }
        let ws = VSeries::from_form(&gw, x, (-m.series.start).max(v + 1));
        acc += &pair_residue(&m.series, &ws);
    }
    Ok(acc)
}

#[derive(Clone, Debug, Serialize)]
pub struct PairingMatrixS {
    #[serde(serialize_with = "ser_matrix")]
    pub entries: Matrix,
    /// Symmetry `S^T = sign S` verified in self-paired mode.
    pub symmetry: Option<i32>,
    #[serde(serialize_with = "ser_scalar")]
    pub determinant: Scalar,
}

fn ser_matrix<S: serde::Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<String>> = m.to_rows().iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
    rows.serialize(s)
}

fn ser_scalar<S: serde::Serializer>(x: &Scalar, s: S) -> std::result::Result<S::Ok, S::Error> {
    x.to_string().serialize(s)
}

/// `S[i][j] = sum_x res_x <m_i, w_j>`.
pub fn s_matrix(conn: &Connection, classes: &[MiddleClass], partner: &[Form]) -> Result<PairingMatrixS> {
    let d = classes.len();
    let mut rows = Vec::new();
    for c in classes {
        let mut r = Vec::new();
        for w in partner {
            r.push(residue_pairing(conn, c, w)?);
        }
        rows.push(r);
    }
    let entries = if d == 0 { Matrix::zeros(0, 0) } else { Mat::from_rows(rows) };
    let determinant = if d == 0 { Scalar::one() } else { entries.det() };
    let symmetry = match &conn.pairing {
        Pairing::SelfPaired { sign, .. } if partner.len() == d => {
            let t = entries.transpose();
            if t == entries.scale(&Scalar::from_int(-*sign as i64)) {
                Some(-sign)
            } else {
                return Err(Error::CannotCertify(format!("S is not ({})-symmetric", -sign)));
            }
        }
        _ => None,
    };
    Ok(PairingMatrixS { entries, symmetry, determinant })
}

/// Formal flat sections of the dual connection at each point; a form has a formal
/// primitive at `x` iff it pairs to zero residue with all of them.
fn obstruction_functionals(conn: &Connection, n: i64) -> Result<Vec<(Point, VSeries)>> {
    let dual = conn.dual();
    let mut out = Vec::new();
    for x in &conn.singular {
        for h in formal::formal_flat_basis(&dual, x, n)? {
            out.push((x.clone(), h));
        }
    }
    Ok(out)
}

fn obstruction_row(funcs: &[(Point, VSeries)], w: &Form) -> Vec<Scalar> {
    funcs
        .iter()
        .map(|(x, h)| {
            let ws = VSeries::from_form(w, x, -h.start + 1);
            pair_residue(h, &ws)
        })
        .collect()
}

/// A middle basis with its pairing matrix.
#[derive(Clone, Debug)]
pub struct MiddleBasis {
    pub h1: H1Basis,
    pub dimension: usize,
    pub classes: Vec<MiddleClass>,
    /// How the forms were chosen.
    pub policy: String,
}

/// Middle dimension `h^1 - rank(obstruction)` and a basis of liftable combinations of
/// the representatives: single representatives first, then kernel combinations.
pub fn middle_forms(conn: &Connection, h1: &H1Basis) -> Result<(usize, Vec<Form>, String)> {
    let funcs = obstruction_functionals(conn, h1.pole_bound as i64 + 2)?;
    let reps = &h1.representatives;
    let rows: Vec<Vec<Scalar>> = reps.iter().map(|w| obstruction_row(&funcs, w)).collect();
    let k = funcs.len();
    if k == 0 {
        return Ok((reps.len(), reps.clone(), "all representatives".into()));
    }
    // Obstruction matrix with one column per representative.
    let om = Mat::from_fn(k, reps.len(), |r, c| rows[c][r].clone());
    let kernel = om.kernel();
    let d = kernel.len();
    let mut chosen: Vec<Vec<Scalar>> = Vec::new();
    let mut singles = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.iter().all(|x| x.is_zero()) {
            let mut e = vec![Scalar::zero(); reps.len()];
            e[i] = Scalar::one();
            chosen.push(e);
            singles += 1;
        }
    }
    for v in kernel {
        if chosen.len() == d {
            break;
        }
        let mut trial = chosen.clone();
        trial.push(v.clone());
        if Mat::from_rows(trial.clone()).rank() == trial.len() {
            chosen = trial;
        }
    }
    let forms = chosen
        .iter()
        .map(|c| {
            let mut f = vec![RatFun::zero(); conn.rank()];
            for (coef, rep) in c.iter().zip(reps) {
                if !coef.is_zero() {
                    for (a, b) in f.iter_mut().zip(rep) {
                        *a = &*a + &b.scale(coef);
                    }
                }
            }
            f
        })
        .collect();
    let policy = format!("greedy: {singles} liftable representatives, {} kernel combinations", d - singles.min(d));
    Ok((d, forms, policy))
}

/// Middle classes for the forms of `mine`, with primitives deep enough to pair with `partner`.
pub fn lift_all(conn: &Connection, mine: &[Form], partner: &[Form]) -> Result<Vec<MiddleClass>> {
    let need = needed_orders(conn, partner);
    let mut out = Vec::new();
    for w in mine {
        match middle_lift_through(conn, w, &need)? {
            Lift::Middle(c) => out.push(c),
            Lift::NotMiddle { point, level } => {
                return Err(Error::CannotCertify(format!("form is not middle: obstruction at {point}, level {level}")));
            }
        }
    }
    Ok(out)
}

/// Global flat sections in the pole-bounded section space.
pub fn check_no_constant_subbundle(h1: &H1Basis) -> Result<()> {
    if h1.h0 > 0 {
        return Err(Error::ConstantSubbundle { dim: h1.h0 });
    }
    Ok(())
}

/// A compact-support class `(m, w)`: `nabla m_x = w` formally at each point.
#[derive(Clone, Debug)]
pub struct CompactSupportClass {
    pub primitives: Vec<(Point, VSeries)>,
    pub form: Form,
}

/// Formal flat sections `(m, 0)` at every point followed by the middle pairs.
pub fn compact_support_basis(conn: &Connection, h1: &H1Basis, middle: &[MiddleClass]) -> Result<Vec<CompactSupportClass>> {
    check_no_constant_subbundle(h1)?;
    let mut out = Vec::new();
    let zero = vec![RatFun::zero(); conn.rank()];
    for x in &conn.singular {
        for h in formal::formal_flat_basis(conn, x, h1.pole_bound as i64)? {
            out.push(CompactSupportClass { primitives: vec![(x.clone(), h)], form: zero.clone() });
        }
    }
    for c in middle {
        out.push(CompactSupportClass {
            primitives: conn.singular.iter().cloned().zip(c.primitives.iter().map(|p| p.series.clone())).collect(),
            form: c.form.clone(),
        });
    }
    Ok(out)
}

/// Trace `H^2_c -> C` on classes given by formal forms at points of `D`: the sum of residues.
pub fn trace_residue(forms_at: &[(Point, RatFun)]) -> Scalar {
    let mut acc = Scalar::zero();
    for (x, f) in forms_at {
        acc += &crate::exact::residue_at(f, x);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_ratfun;

    fn conn(rows: &[&[&str]], d: &[&str]) -> Connection {
        let a = Mat::from_rows(rows.iter().map(|r| r.iter().map(|s| parse_ratfun(s).unwrap()).collect()).collect());
        Connection::new(a, d.iter().map(|p| p.parse().unwrap()).collect(), Pairing::Dual).unwrap()
    }

    fn f(s: &str) -> RatFun {
        parse_ratfun(s).unwrap()
    }

    #[test]
    fn kummer_dual_h1() {
        let c = conn(&[&["-1/(3*z) + 1"]], &["0", "inf"]);
        let h = h1_basis(&c, None).unwrap();
        assert_eq!(h.dimension, 1);
        assert_eq!(h.expected, 1);
        assert_eq!(h.representatives, vec![vec![f("1/z")]]);
    }

    #[test]
    fn trivial_three_points() {
        let c = conn(&[&["0"]], &["0", "1", "inf"]);
        let h = h1_basis(&c, None).unwrap();
        assert_eq!(h.dimension, 2);
        assert_eq!(h.h0, 1);
        assert_eq!(h.expected, 2);
        assert_eq!(h.representatives, vec![vec![f("1/z")], vec![f("1/(z-1)")]]);
        let (d, _, _) = middle_forms(&c, &h).unwrap();
        assert_eq!(d, 0);
        assert!(matches!(middle_lift(&c, &vec![f("1/z")]).unwrap(), Lift::NotMiddle { level: 0, .. }));
        assert!(matches!(check_no_constant_subbundle(&h), Err(Error::ConstantSubbundle { dim: 1 })));
    }

    #[test]
    fn exact_forms_reduce_to_zero() {
        let c = conn(&[&["1/(3*z) - 1"]], &["0", "inf"]);
        let h = h1_basis(&c, None).unwrap();
        let v = vec![f("z^2 + 1/z^3")];
        let w = c.nabla(&v);
        let co = class_coordinates(&c, &h, &w).unwrap();
        assert!(co.iter().all(|x| x.is_zero()));
        let co1 = class_coordinates(&c, &h, &vec![f("1/z")]).unwrap();
        assert_eq!(co1.len(), 1);
        assert!(!co1[0].is_zero());
    }

    #[test]
    fn kummer_s_matrix() {
        let a = Scalar::from_ratio(1, 3);
        let c = conn(&[&["1/(3*z) - 1"]], &["0", "inf"]);
        let dual = c.dual();
        let w = vec![f("1/z")];
        let cls = lift_all(&c, &[w.clone()], &[w.clone()]).unwrap();
        let s = s_matrix(&c, &cls, &[w]).unwrap();
        assert_eq!(s.entries[(0, 0)], -Scalar::one() / a);
        let hd = h1_basis(&dual, None).unwrap();
        assert_eq!(middle_forms(&dual, &hd).unwrap().0, 1);
    }

    fn legendre(lam: &str) -> Connection {
        let fz = format!("z*(1-z)*(1-({lam})*z)");
        let alpha = format!("-(1 - 2*z - 2*({lam})*z + 3*({lam})*z^2)/(2*{fz})");
        let a = Mat::from_rows(vec![vec![f(&alpha), RatFun::zero()], vec![RatFun::zero(), f(&format!("-({alpha})"))]]);
        let g = Mat::from_rows(vec![vec![RatFun::zero(), RatFun::one()], vec![-RatFun::one(), RatFun::zero()]]);
        let inv = Scalar::from_ratio(1, 1) / lam.parse::<Scalar>().unwrap();
        let d = vec!["0".parse().unwrap(), "1".parse().unwrap(), Point::Finite(inv), Point::Infinity];
        Connection::new(a, d, Pairing::SelfPaired { g, sign: -1 }).unwrap()
    }

    #[test]
    fn legendre_middle_is_symmetric() {
        let c = legendre("1/2");
        let h = h1_basis(&c, None).unwrap();
        assert_eq!(h.dimension, 4);
        let (d, forms, _) = middle_forms(&c, &h).unwrap();
        assert_eq!(d, 4);
        let cls = lift_all(&c, &forms, &forms).unwrap();
        let s = s_matrix(&c, &cls, &forms).unwrap();
        assert_eq!(s.symmetry, Some(1));
        assert!(!s.determinant.is_zero());
    }

    #[test]
    fn euler_integral_hypergeometric() {
        let c = conn(&[&["-1/(2*z) - 1/(2*(z-1)) - 1/(2*(z-2))"]], &["0", "1", "2", "inf"]);
        let h = h1_basis(&c, None).unwrap();
        assert_eq!(h.dimension, 2);
        let (d, forms, _) = middle_forms(&c, &h).unwrap();
        assert_eq!(d, 2);
        let dual = c.dual();
        let (_, dforms, _) = middle_forms(&dual, &h1_basis(&dual, None).unwrap()).unwrap();
        let cls = lift_all(&c, &forms, &dforms).unwrap();
        let s = s_matrix(&c, &cls, &dforms).unwrap();
        assert!(!s.determinant.is_zero());
    }

    #[test]
    fn gauss_companion_has_no_middle() {
        // y'' = b1 y' + b0 y for (a, b, c) = (1/2, 1/2, 1)
        let c = conn(&[&["0", "1"], &["1/(4*z*(1-z))", "-(1 - 2*z)/(z*(1-z))"]], &["0", "1", "inf"]);
        let h = h1_basis(&c, None).unwrap();
        assert_eq!(h.dimension, 2);
        assert_eq!(middle_forms(&c, &h).unwrap().0, 0);
    }

    #[test]
    fn residue_trace() {
        assert_eq!(trace_residue(&[("0".parse().unwrap(), f("1/z"))]), Scalar::one());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn third(n: i64) -> Scalar {
            Scalar::from_ratio(3 * n + 1, 3)
        }

        fn rank_one(a: RatFun, d: Vec<Point>) -> Connection {
            Connection::new(Mat::from_rows(vec![vec![a]]), d, Pairing::Dual).unwrap()
        }

        /// `k/z + a/(z-1) + c` with `k` an integer: apparent at 0, so flat sections exist there.
        fn with_apparent_zero(k: i64, a: i64, c: i64) -> Connection {
            let z = RatFun::z();
            let e = &(&RatFun::constant(Scalar::from_int(k)) * &z.inv().unwrap())
                + &(&RatFun::constant(third(a)) * &(&z - &RatFun::one()).inv().unwrap());
            rank_one(&e + &RatFun::constant(Scalar::from_int(c)), vec!["0".parse().unwrap(), "1".parse().unwrap(), Point::Infinity])
        }

        fn add_flat(m: &VSeries, h: &VSeries, coef: &Scalar) -> VSeries {
            let start = m.start.min(h.start);
            let coeffs = (start..m.order)
                .map(|k| m.get(k).iter().zip(h.get(k)).map(|(x, y)| x + &(&y * coef)).collect())
                .collect();
            VSeries::from_coeffs(m.dim, start, coeffs)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(12))]

            #[test]
            fn s_ignores_flat_sections_added_to_primitives(
                k in 1i64..=3, a in -2i64..=1, c in prop::sample::select(vec![-2i64, -1, 1, 2]), coef in -5i64..=5
            ) {
                let conn = with_apparent_zero(k, a, c);
                let dual = conn.dual();
                let (d, forms, _) = middle_forms(&conn, &h1_basis(&conn, None).unwrap()).unwrap();
                let (dd, dforms, _) = middle_forms(&dual, &h1_basis(&dual, None).unwrap()).unwrap();
                prop_assert_eq!(d, 1);
                prop_assert_eq!(dd, 1);
                let cls = lift_all(&conn, &forms, &dforms).unwrap();
                let s = s_matrix(&conn, &cls, &dforms).unwrap();
                let x0: Point = "0".parse().unwrap();
                let flat = formal::formal_flat_basis(&conn, &x0, cls[0].primitives[0].series.order + 2).unwrap();
                prop_assert_eq!(flat.len(), 1);
                let mut moved = cls.clone();
                let p = &mut moved[0].primitives[0];
                p.series = add_flat(&p.series, &flat[0], &Scalar::from_int(coef));
                prop_assert!(coef == 0 || p.series != cls[0].primitives[0].series);
                prop_assert_eq!(s_matrix(&conn, &moved, &dforms).unwrap().entries, s.entries);
            }

            #[test]
            fn apparent_point_keeps_middle_dimension(
                a in -3i64..=2, c in prop::sample::select(vec![-2i64, -1, 1, 3]), p in prop::sample::select(vec!["1", "-2", "1/2+i"])
            ) {
                let e = &(&RatFun::constant(third(a)) * &RatFun::z().inv().unwrap()) + &RatFun::constant(Scalar::from_int(c));
                let plain = rank_one(e.clone(), vec!["0".parse().unwrap(), Point::Infinity]);
                let extra = rank_one(e, vec!["0".parse().unwrap(), p.parse().unwrap(), Point::Infinity]);
                let (h, he) = (h1_basis(&plain, None).unwrap(), h1_basis(&extra, None).unwrap());
                prop_assert_eq!(he.dimension, h.dimension + 1);
                prop_assert_eq!(middle_forms(&plain, &h).unwrap().0, middle_forms(&extra, &he).unwrap().0);
            }

            #[test]
            fn h1_stable_above_default_bound(k in 1i64..=3, a in -2i64..=1, c in -2i64..=2, up in 1u32..=3) {
                let conn = with_apparent_zero(k, a, c);
                let h = h1_basis(&conn, None).unwrap();
                prop_assert_eq!(h.dimension, h.expected);
                let hi = h1_basis(&conn, Some(h.pole_bound + up)).unwrap();
                prop_assert_eq!(hi.dimension, h.dimension);
            }
        }
    }
}
