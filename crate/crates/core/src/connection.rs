//! Meromorphic connections `d - A dz` on the trivial bundle over the sphere,
//! together with an optional flat self-pairing.
//!
//! A section `v` is flat when `v' = A v`. The dual connection is `-A^T`. A
//! self-pairing is `<v, w> = v^T G w` with `G' + A^T G + G A = 0` and
//! `G^T = sign * G`.

use num_traits::{One, Zero};

use crate::exact::{self, form_expand, Laurent, Mat, Matrix, Point, Poly, RatFun, RatMatrix, Scalar};
use crate::{Error, Result};

/// How the connection is paired with a partner.
#[derive(Clone, Debug, PartialEq)]
pub enum Pairing {
    /// A flat pairing of the connection with itself.
    SelfPaired { g: RatMatrix, sign: i32 },
    /// Paired with the dual connection by the tautological pairing.
    Dual,
}

impl Pairing {
    /// Identifier of the pairing-symmetry class: `dual`, `symmetric` or `skew`.
    pub fn class_name(&self) -> &'static str {
        match self {
            Pairing::Dual => "dual",
            Pairing::SelfPaired { sign: 1, .. } => "symmetric",
            Pairing::SelfPaired { .. } => "skew",
        }
    }
}

/// A vector-valued rational one-form `f(z) dz`.
pub type Form = Vec<RatFun>;

#[derive(Clone, Debug, PartialEq)]
pub struct Connection {
    pub a: RatMatrix,
    pub singular: Vec<Point>,
    pub pairing: Pairing,
}

/// Local expansion `A(t) = sum_k m[k] t^(valuation + k)` of a matrix of rational
/// functions (or of a matrix-valued form) at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalMatrix {
    pub point: Point,
    pub valuation: i64,
    pub coeffs: Vec<Matrix>,
}

impl LocalMatrix {
    /// Pole order `max(0, -valuation)`.
    pub fn pole_order(&self) -> i64 {
        (-self.valuation).max(0)
    }

    pub fn coeff(&self, k: i64) -> Matrix {
        let n = self.coeffs.first().map_or(0, |m| m.rows());
        let idx = k - self.valuation;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            Matrix::zeros(n, n)
        } else {
            self.coeffs[idx as usize].clone()
        }
    }
}

fn sort_points(pts: &mut Vec<Point>) {
    pts.sort_by(|a, b| a.sort_key_cmp(b));
    pts.dedup();
}

/// Expands a matrix of form coefficients at `x` (in the chart coordinate, so the
/// `-1/w^2` factor applies at infinity), with `terms` coefficients from the lowest
/// valuation found.
pub fn expand_form_matrix(m: &RatMatrix, x: &Point, terms: usize) -> LocalMatrix {
    let (r, c) = (m.rows(), m.cols());
    let mut val = i64::MAX;
    for i in 0..r {
        for j in 0..c {
            if let Some(v) = form_order(&m[(i, j)], x) {
                val = val.min(v);
            }
        }
    }
    if val == i64::MAX {
        val = 0;
    }
    let top = val + terms as i64 - 1;
    let ser: Vec<Vec<Laurent>> =
        (0..r).map(|i| (0..c).map(|j| form_expand(&m[(i, j)], x, top)).collect()).collect();
    let coeffs = (0..terms)
        .map(|k| Mat::from_fn(r, c, |i, j| ser[i][j].coeff_or_zero(val + k as i64)))
        .collect();
    LocalMatrix { point: x.clone(), valuation: val, coeffs }
}

/// Same as [`expand_form_matrix`] for functions (no chart factor at infinity).
pub fn expand_function_matrix(m: &RatMatrix, x: &Point, terms: usize) -> LocalMatrix {
    let (r, c) = (m.rows(), m.cols());
    let mut val = i64::MAX;
    for i in 0..r {
        for j in 0..c {
            if let Some(v) = function_order(&m[(i, j)], x) {
                val = val.min(v);
            }
        }
    }
    if val == i64::MAX {
        val = 0;
    }
    let top = val + terms as i64 - 1;
    let ser: Vec<Vec<Laurent>> =
        (0..r).map(|i| (0..c).map(|j| exact::series_expand(&m[(i, j)], x, top)).collect()).collect();
    let coeffs = (0..terms)
        .map(|k| Mat::from_fn(r, c, |i, j| ser[i][j].coeff_or_zero(val + k as i64)))
        .collect();
    LocalMatrix { point: x.clone(), valuation: val, coeffs }
}

/// Order of vanishing of `f` at `x`, `None` for zero.
pub fn function_order(f: &RatFun, x: &Point) -> Option<i64> {
    match x {
        Point::Finite(a) => f.order_at(a),
        Point::Infinity => f.order_at_infinity(),
    }
}

/// Order of the form `f dz` at `x` in the local chart coordinate.
pub fn form_order(f: &RatFun, x: &Point) -> Option<i64> {
    match x {
        Point::Finite(a) => f.order_at(a),
        Point::Infinity => f.order_at_infinity().map(|v| v - 2),
    }
}

/// Columns as vectors.
pub fn vec_to_col(v: &[RatFun]) -> RatMatrix {
    Mat::from_fn(v.len(), 1, |r, _| v[r].clone())
}

impl Connection {
    /// Builds and validates a connection.
    pub fn new(a: RatMatrix, singular: Vec<Point>, pairing: Pairing) -> Result<Self> {
        let mut singular = singular;
        sort_points(&mut singular);
        let c = Connection { a, singular, pairing };
        c.validate()?;
        Ok(c)
    }

    pub fn rank(&self) -> usize {
        self.a.rows()
    }

    /// Checks that poles lie in the singular set and that the pairing is flat and of
    /// the declared symmetry.
    pub fn validate(&self) -> Result<()> {
        if !self.a.is_square() || self.a.rows() == 0 {
            return Err(Error::Input("connection matrix must be square and nonempty".into()));
        }
        if self.singular.is_empty() {
            return Err(Error::Input("singular set is empty".into()));
        }
        for x in self.a.to_rows().iter().flatten() {
            self.check_poles(x, true)?;
        }
        if let Pairing::SelfPaired { g, sign } = &self.pairing {
            let n = self.rank();
            if g.rows() != n || g.cols() != n {
                return Err(Error::Input("pairing matrix has the wrong size".into()));
            }
            if *sign != 1 && *sign != -1 {
                return Err(Error::Input("pairing sign must be +1 or -1".into()));
            }
            let s = RatFun::constant(Scalar::from_int(*sign as i64));
            if g.transpose() != g.scale(&s) {
                return Err(Error::SymmetryViolation { sign: *sign });
            }
            for x in g.to_rows().iter().flatten() {
                self.check_poles(x, false)?;
            }
            let det = g.det();
            if det.is_zero() {
                return Err(Error::DegeneratePairing);
            }
            // det G must be a unit on U.
            for (root, _) in exact::poles(&det.inv().unwrap())? {
                if !self.singular.contains(&Point::Finite(root.clone())) {
                    return Err(Error::DegeneratePairing);
                }
            }
            if !self.singular.contains(&Point::Infinity) && det.order_at_infinity() != Some(0) {
                return Err(Error::DegeneratePairing);
            }
            let resid = self.flatness_residual(g);
            if !resid.is_zero() {
                return Err(Error::FlatnessViolation { residual: resid.to_string() });
            }
        }
        Ok(())
    }

    /// `G' + A^T G + G A`.
    pub fn flatness_residual(&self, g: &RatMatrix) -> RatMatrix {
        let gp = g.map(|x| x.derivative());
        gp.add(&self.a.transpose().matmul(g)).add(&g.matmul(&self.a))
    }

    /// Ensures the poles of `f` lie in the singular set. For connection entries the
    /// chart factor at infinity is included.
    fn check_poles(&self, f: &RatFun, is_form: bool) -> Result<()> {
        let (roots, rest) = exact::roots::gaussian_rational_roots(f.den());
        if rest.degree().unwrap_or(0) > 0 {
            return Err(Error::PoleOutsideD { point: format!("root of {rest}") });
        }
        for (r, _) in roots {
            let p = Point::Finite(r);
            if !self.singular.contains(&p) {
                return Err(Error::PoleOutsideD { point: p.to_string() });
            }
        }
        if !self.singular.contains(&Point::Infinity) && !f.is_zero() {
            let ord = if is_form { form_order(f, &Point::Infinity) } else { function_order(f, &Point::Infinity) };
            if ord.unwrap() < 0 {
                return Err(Error::PoleOutsideD { point: "inf".into() });
            }
        }
        Ok(())
    }

    /// Checks that a form has poles only in the singular set.
    pub fn check_form(&self, w: &Form) -> Result<()> {
        if w.len() != self.rank() {
            return Err(Error::Input(format!("form has {} components, rank is {}", w.len(), self.rank())));
        }
        for f in w {
            self.check_poles(f, true)?;
        }
        Ok(())
    }

    /// The dual connection `-A^T` paired tautologically.
    pub fn dual(&self) -> Connection {
        Connection { a: self.a.transpose().neg(), singular: self.singular.clone(), pairing: Pairing::Dual }
    }

    /// The matrix in the chart `w = 1/z`: `A_w(w) = -A(1/w)/w^2`.
    pub fn change_chart(&self) -> RatMatrix {
        let w2 = RatFun::from_poly(Poly::monomial(Scalar::one(), 2));
        self.a.map(|f| -(&f.invert_variable() / &w2))
    }

    /// Local expansion of `A` in the chart at `x` with `terms` coefficients.
    pub fn local_matrix(&self, x: &Point, terms: usize) -> LocalMatrix {
        expand_form_matrix(&self.a, x, terms)
    }

    /// Pole order of `A dz` at `x` in the local chart (0 when holomorphic).
    pub fn pole_order(&self, x: &Point) -> i64 {
        let mut v = i64::MAX;
        for f in self.a.to_rows().iter().flatten() {
            if let Some(o) = form_order(f, x) {
                v = v.min(o);
            }
        }
        if v == i64::MAX {
            0
        } else {
            (-v).max(0)
        }
    }

    pub fn max_pole_order(&self) -> i64 {
        self.singular.iter().map(|x| self.pole_order(x)).max().unwrap_or(0)
    }

    /// `nabla v = v' - A v` as a form.
    pub fn nabla(&self, v: &[RatFun]) -> Form {
        let av = self.a.mul_vec(v);
        v.iter().zip(av).map(|(f, g)| &f.derivative() - &g).collect()
    }

    /// Gauge transform by `v = T u`; the pairing becomes `T^T G T`.
    pub fn gauge(&self, t: &RatMatrix) -> Result<Connection> {
        let tinv = t.inverse().ok_or_else(|| Error::Input("gauge matrix is singular".into()))?;
        let tp = t.map(|x| x.derivative());
        let a = tinv.matmul(&self.a.matmul(t).sub(&tp));
        let pairing = match &self.pairing {
            Pairing::SelfPaired { g, sign } => Pairing::SelfPaired { g: t.transpose().matmul(g).matmul(t), sign: *sign },
            Pairing::Dual => Pairing::Dual,
        };
        Ok(Connection { a, singular: self.singular.clone(), pairing })
    }

    /// Gram matrix used to pair a section with a form: `G` for a self-pairing and
    /// the identity for the dual pairing.
    pub fn gram(&self) -> RatMatrix {
        match &self.pairing {
            Pairing::SelfPaired { g, .. } => g.clone(),
            Pairing::Dual => RatMatrix::identity(self.rank()),
        }
    }

    /// Finite singular points.
    pub fn finite_singular(&self) -> Vec<Scalar> {
        self.singular.iter().filter_map(|p| p.finite().cloned()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_ratfun;

    fn rm(rows: &[&[&str]]) -> RatMatrix {
        Mat::from_rows(rows.iter().map(|r| r.iter().map(|s| parse_ratfun(s).unwrap()).collect()).collect())
    }

    fn pts(s: &[&str]) -> Vec<Point> {
        s.iter().map(|p| p.parse().unwrap()).collect()
    }

    #[test]
    fn symplectic_pairing_is_flat() {
        let a = rm(&[&["0", "1"], &["z", "0"]]);
        let g = rm(&[&["0", "1"], &["-1", "0"]]);
        let c = Connection::new(a, pts(&["inf"]), Pairing::SelfPaired { g, sign: -1 });
        assert!(c.is_ok());
    }

    #[test]
    fn identity_pairing_is_not_flat() {
        let a = rm(&[&["0", "1"], &["z", "0"]]);
        let g = rm(&[&["1", "0"], &["0", "1"]]);
        let err = Connection::new(a, pts(&["inf"]), Pairing::SelfPaired { g, sign: 1 }).unwrap_err();
        match err {
            Error::FlatnessViolation { residual } => assert_eq!(residual, "[[0, z + 1], [z + 1, 0]]"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn poles_outside_singular_set() {
        let a = rm(&[&["1/(z-1)"]]);
        assert!(matches!(Connection::new(a.clone(), pts(&["0", "inf"]), Pairing::Dual), Err(Error::PoleOutsideD { .. })));
        // Residue at infinity of 1/(z-1) dz is nonzero, so infinity must be declared.
        assert!(matches!(Connection::new(a.clone(), pts(&["1"]), Pairing::Dual), Err(Error::PoleOutsideD { .. })));
        assert!(Connection::new(a, pts(&["1", "inf"]), Pairing::Dual).is_ok());
    }

    #[test]
    fn chart_change_at_infinity() {
        let a = rm(&[&["1/(3*z) - 1"]]);
        let c = Connection::new(a, pts(&["0", "inf"]), Pairing::Dual).unwrap();
        let aw = c.change_chart();
        assert_eq!(aw[(0, 0)], parse_ratfun("-1/(3*z) + 1/z^2").unwrap());
        let loc = c.local_matrix(&Point::Infinity, 3);
        assert_eq!(loc.valuation, -2);
        assert_eq!(loc.pole_order(), 2);
        assert_eq!(loc.coeffs[0][(0, 0)], Scalar::one());
        assert_eq!(loc.coeffs[1][(0, 0)], Scalar::from_ratio(-1, 3));
    }

    #[test]
    fn gauge_preserves_flatness() {
        let a = rm(&[&["0", "1"], &["z", "0"]]);
        let g = rm(&[&["0", "1"], &["-1", "0"]]);
        let c = Connection::new(a, pts(&["inf"]), Pairing::SelfPaired { g, sign: -1 }).unwrap();
        let t = rm(&[&["1", "z"], &["0", "1"]]);
        let d = c.gauge(&t).unwrap();
        assert!(d.validate().is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn matrix() -> impl Strategy<Value = RatMatrix> {
            let entry = (-4i64..=4, 1i64..=3, -3i64..=3, -2i64..=2, 1u32..=2, 0i64..=2);
            prop::collection::vec(entry, 4).prop_map(|es| {
                let fs: Vec<RatFun> = es
                    .into_iter()
                    .map(|(n, d, x, c, k, p)| {
                        let pole = RatFun::pole(Scalar::from_ratio(n, d), &Scalar::from_int(x), k);
                        &pole + &RatFun::from_poly(Poly::monomial(Scalar::from_int(c), p as usize))
                    })
                    .collect();
                Mat::from_fn(2, 2, |r, c| fs[r * 2 + c].clone())
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn dual_is_an_involution(a in matrix()) {
                let c = Connection { a: a.clone(), singular: vec![Point::Infinity], pairing: Pairing::Dual };
                prop_assert_eq!(c.dual().dual().a, a);
            }

            #[test]
            fn chart_change_twice_is_identity(a in matrix()) {
                let c = Connection { a: a.clone(), singular: vec![Point::Infinity], pairing: Pairing::Dual };
                let w = Connection { a: c.change_chart(), singular: vec![Point::Infinity], pairing: Pairing::Dual };
                prop_assert_eq!(w.change_chart(), a);
            }
        }
    }
}

