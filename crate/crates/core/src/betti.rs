//! Twisted chains, Stokes sectors and intersection numbers.
//!
//! A chain is a sequence of oriented segments (straight lines, rays to infinity,
//! circular arcs) each carrying a flat section. Singular points may only occur as
//! segment endpoints, approached along a straight line.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rug::Float;
use serde::Serialize;

use crate::connection::Connection;
use crate::exact::{Point, Scalar};
use crate::expr::Expr;
use crate::formal::local_model;
use crate::numeric::mp::Complex;
use crate::numeric::path::{pi_times, Path};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthClass {
    Rd,
    Mod,
}

impl fmt::Display for GrowthClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrowthClass::Rd => "rd",
            GrowthClass::Mod => "mod",
        })
    }
}

/// Which connection a cycle's sections belong to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    V,
    Partner,
}

/// A segment endpoint: a finite point, or infinity reached along the direction `q pi`.
#[derive(Clone, Debug, PartialEq)]
pub enum Endpoint {
    Finite(Scalar),
    Infinity(BigRational),
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Finite(s) => write!(f, "{s}"),
            Endpoint::Infinity(q) => write!(f, "inf@{q}pi"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    Line { from: Endpoint, to: Endpoint },
    /// `center + radius exp(i pi (start + s sweep))`, `s` in `[0, 1]`; angles in units of `pi`.
    Arc { center: Scalar, radius: BigRational, start: BigRational, sweep: BigRational },
}

/// Where an explicit section value is given.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anchor {
    Start,
    End,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coefficient {
    /// The section with the given value at a vertex of the segment.
    Vector { at: Anchor, values: Vec<Expr> },
    /// `scale` times formal solution `index` at the singular endpoint `point`, with the
    /// argument of the local coordinate shifted by `2 pi branch` from the approach direction.
    Factor { point: Point, index: usize, branch: i64, scale: Expr },
    /// Continuation of the previous segment's section across the shared vertex, times `scale`.
    Continue { scale: Expr },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub geometry: Geometry,
    pub coefficient: Coefficient,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistedChain {
    pub class: GrowthClass,
    pub segments: Vec<Segment>,
}

/// A homology class given by an rd representative and a mod representative.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleSpec {
    pub name: String,
    pub side: Side,
    pub rd: Option<TwistedChain>,
    pub moderate: Option<TwistedChain>,
}

impl CycleSpec {
    pub fn chain(&self, class: GrowthClass) -> Option<&TwistedChain> {
        match class {
            GrowthClass::Rd => self.rd.as_ref(),
            GrowthClass::Mod => self.moderate.as_ref(),
        }
    }
}

/// Exact `pi` multiple of the argument of `c` when it is one of the eight
/// directions of `Q(i)` with rational slope `0` or `+-1`.
pub fn exact_arg(c: &Scalar) -> Option<BigRational> {
    let (re, im) = (&c.re, &c.im);
    let r = |n: i64, d: i64| Some(BigRational::new(n.into(), d.into()));
    match (re.signum().to_i64()?, im.signum().to_i64()?) {
        (0, 0) => None,
        (1, 0) => r(0, 1),
        (-1, 0) => r(1, 1),
        (0, 1) => r(1, 2),
        (0, -1) => r(-1, 2),
        (sr, si) if re.abs() == im.abs() => match (sr, si) {
            (1, 1) => r(1, 4),
            (-1, 1) => r(3, 4),
            (-1, -1) => r(-3, 4),
            _ => r(-1, 4),
        },
        _ => None,
    }
}

/// An angle `pi_part pi + arg_coeff arg(reference)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactAngle {
    #[serde(serialize_with = "ser_rational")]
    pub pi_part: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub arg_coeff: BigRational,
    #[serde(serialize_with = "ser_display")]
    pub reference: Scalar,
}

fn ser_rational<S: serde::Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

fn ser_display<T: fmt::Display, S: serde::Serializer>(x: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

impl ExactAngle {
    /// Folds `arg(reference)` into the `pi` part when it is exactly known.
    fn normalized(mut self) -> Self {
        if !self.arg_coeff.is_zero() {
            if let Some(a) = exact_arg(&self.reference) {
                self.pi_part += &self.arg_coeff * a;
                self.arg_coeff = BigRational::zero();
                self.reference = Scalar::one();
            }
        }
        self
    }

    /// Value in units of `pi`, when exact.
    pub fn as_pi_multiple(&self) -> Option<BigRational> {
        self.arg_coeff.is_zero().then(|| self.pi_part.clone())
    }

    pub fn to_f64(&self) -> f64 {
        let (re, im) = self.reference.to_f64();
        let pi = std::f64::consts::PI;
        self.pi_part.to_f64().unwrap() * pi + self.arg_coeff.to_f64().unwrap() * im.atan2(re)
    }
}

impl fmt::Display for ExactAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}pi", self.pi_part)?;
        if !self.arg_coeff.is_zero() {
            write!(f, " + ({})arg({})", self.arg_coeff, self.reference)?;
        }
        Ok(())
    }
}

/// An open arc of directions `(from, to)` with `to - from = pi / q`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionArc {
    pub from: ExactAngle,
    pub to: ExactAngle,
}

/// Where a direction sits relative to a family of open arcs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArcPosition {
    Inside,
    Boundary,
    Outside,
}

fn position(arcs: &[DirectionArc], theta: &BigRational) -> ArcPosition {
    let pi = std::f64::consts::PI;
    let th = theta.to_f64().unwrap() * pi;
    let mut out = ArcPosition::Outside;
    for a in arcs {
        // exact comparison when both ends are rational multiples of pi
        if let (Some(f), Some(t)) = (a.from.as_pi_multiple(), a.to.as_pi_multiple()) {
            let two = BigRational::from_integer(2.into());
            let mut x = theta.clone();
            // bring x into [f, f + 2)
            let k = ((&x - &f) / &two).floor();
            x -= &k * &two;
            if x == f || x == t {
                out = ArcPosition::Boundary;
            } else if x > f && x < t {
                return ArcPosition::Inside;
            }
            continue;
        }
        let (f, t) = (a.from.to_f64(), a.to.to_f64());
        let x = f + (th - f).rem_euclid(2.0 * pi);
        if (x - f).abs() < 1e-12 || (x - t).abs() < 1e-12 || (x - f - 2.0 * pi).abs() < 1e-12 {
            out = ArcPosition::Boundary;
        } else if x > f && x < t {
            return ArcPosition::Inside;
        }
    }
    out
}

/// Directions of rapid decay and moderate growth for one exponential factor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorSectors {
    #[serde(serialize_with = "ser_phi")]
    pub phi: Vec<Scalar>,
    pub pole_order: usize,
    pub multiplicity: usize,
    /// Open arcs of approach directions (in the `z`-plane) along which `exp(phi)` decays rapidly.
    pub rd_arcs: Vec<DirectionArc>,
    /// Open arcs along which `exp(phi)` grows rapidly; the moderate-growth set is their complement.
    pub growth_arcs: Vec<DirectionArc>,
}

fn ser_phi<S: serde::Serializer>(phi: &[Scalar], s: S) -> std::result::Result<S::Ok, S::Error> {
    let v: Vec<String> = phi.iter().map(|c| c.to_string()).collect();
    v.serialize(s)
}

impl FactorSectors {
    /// Whether flat sections with this factor decay rapidly along direction `theta pi`.
    pub fn is_rd(&self, theta: &BigRational) -> bool {
        position(&self.rd_arcs, theta) == ArcPosition::Inside
    }

    /// Whether they have moderate growth along direction `theta pi` (boundary directions excluded).
    pub fn is_mod(&self, theta: &BigRational) -> bool {
        self.pole_order == 0
            || (position(&self.growth_arcs, theta) == ArcPosition::Outside
                && position(&self.rd_arcs, theta) == ArcPosition::Inside)
    }

    /// `is_rd` for a direction known only numerically (radians); boundary directions within 1e-9 count as outside.
    pub fn is_rd_approx(&self, theta: f64) -> bool {
        let two_pi = 2.0 * std::f64::consts::PI;
        self.rd_arcs.iter().any(|a| {
            let (f, t) = (a.from.to_f64(), a.to.to_f64());
            let x = f + (theta - f).rem_euclid(two_pi);
            x > f + 1e-9 && x < t - 1e-9
        })
    }

    /// Total angular measure of the rd arcs in units of `pi`.
    pub fn rd_measure(&self) -> BigRational {
        self.rd_arcs
            .iter()
            .map(|a| (&a.to.pi_part - &a.from.pi_part) + (&a.to.arg_coeff - &a.from.arg_coeff))
            .fold(BigRational::zero(), |x, y| x + y)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StokesSectorChart {
    #[serde(serialize_with = "ser_display")]
    pub point: Point,
    pub factors: Vec<FactorSectors>,
}

impl StokesSectorChart {
    pub fn factor_of(&self, phi: &[Scalar]) -> Option<&FactorSectors> {
        let trim = |p: &[Scalar]| -> Vec<Scalar> {
            let n = p.iter().rposition(|c| !c.is_zero()).map_or(0, |i| i + 1);
            p[..n].to_vec()
        };
        let want = trim(phi);
        self.factors.iter().find(|f| trim(&f.phi) == want)
    }
}

fn rq(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Arcs `(lo + 2 pi k / q, hi + 2 pi k / q)` where `lo, hi` are `(a_lo pi + s arg c) / q`.
fn arcs(q: usize, c: &Scalar, lo: BigRational, hi: BigRational, s: i64) -> Vec<DirectionArc> {
    let qq = BigRational::from_integer((q as i64).into());
    (0..q)
        .map(|k| {
            let shift = rq(2 * k as i64, q as i64);
            let mk = |pi: &BigRational| {
                ExactAngle { pi_part: pi / &qq + &shift, arg_coeff: rq(s, 1) / &qq, reference: c.clone() }.normalized()
            };
            DirectionArc { from: mk(&lo), to: mk(&hi) }
        })
        .collect()
}

/// Rapid-decay and rapid-growth arcs of every exponential factor at `x`.
///
/// For `phi` with leading term `c t^{-q}` (`t = z - x`, or `1/z` at infinity), `Re phi`
/// tends to `-infinity` exactly where `cos(arg c - q arg t) < 0`.
pub fn stokes_sectors(conn: &Connection, x: &Point) -> Result<StokesSectorChart> {
    let model = local_model(conn, x)?;
    let Some(factors) = model.factors else {
        return Err(Error::UnsupportedLocalType {
            point: x.to_string(),
            reason: model.note.unwrap_or_else(|| "formal structure outside the supported class".into()),
        });
    };
    let mut out = Vec::new();
    for f in factors {
        let q = f.phi.iter().rposition(|c| !c.is_zero()).map_or(0, |i| i + 1);
        let (rd_arcs, growth_arcs) = if q == 0 {
            (Vec::new(), Vec::new())
        } else {
            let c = &f.phi[q - 1];
            match x {
                // theta = arg t: decay for arg c - q theta in (pi/2, 3pi/2)
                Point::Finite(_) => (arcs(q, c, rq(-3, 2), rq(-1, 2), 1), arcs(q, c, rq(-1, 2), rq(1, 2), 1)),
                // theta = arg z = -arg t
                Point::Infinity => (arcs(q, c, rq(1, 2), rq(3, 2), -1), arcs(q, c, rq(-1, 2), rq(1, 2), -1)),
            }
        };
        out.push(FactorSectors { phi: f.phi.clone(), pole_order: q, multiplicity: f.multiplicity, rd_arcs, growth_arcs });
    }
    Ok(StokesSectorChart { point: x.clone(), factors: out })
}

/// `q` reduced into `(-1, 1]`.
pub fn normalize_pi(q: &BigRational) -> BigRational {
    let two = BigRational::from_integer(2.into());
    let mut x = q - (q / &two).floor() * &two;
    if x > BigRational::one() {
        x -= &two;
    }
    x
}

/// A segment as a parametrized path, traversed from `s_start` to `s_end`
/// (one of them infinite for a ray).
#[derive(Clone, Debug)]
pub struct SegPath {
    pub path: Path,
    pub s_start: f64,
    pub s_end: f64,
}

impl SegPath {
    /// Orientation sign of the parametrization: `+1` when `s` increases along the segment.
    pub fn dir(&self) -> f64 {
        if self.s_end > self.s_start {
            1.0
        } else {
            -1.0
        }
    }

    /// Oriented tangent at `s`.
    pub fn tangent(&self, s: f64, prec: u32) -> Complex {
        let t = self.path.tangent(s, prec);
        if self.dir() > 0.0 {
            t
        } else {
            t.neg()
        }
    }

    /// Parameter at distance `r` along the path from the given end (finite ends only, or a ray's base).
    pub fn param_from(&self, at_start: bool, r: f64) -> f64 {
        let base = if at_start { self.s_start } else { self.s_end };
        let other = if at_start { self.s_end } else { self.s_start };
        let sp = self.path.speed(0.0);
        if other > base {
            base + r / sp
        } else {
            base - r / sp
        }
    }
}

impl Geometry {
    pub fn start(&self) -> Option<Endpoint> {
        match self {
            Geometry::Line { from, .. } => Some(from.clone()),
            Geometry::Arc { .. } => self.arc_point(true).map(Endpoint::Finite),
        }
    }

    pub fn end(&self) -> Option<Endpoint> {
        match self {
            Geometry::Line { to, .. } => Some(to.clone()),
            Geometry::Arc { .. } => self.arc_point(false).map(Endpoint::Finite),
        }
    }

    /// Exact arc endpoint when the angle is a multiple of `pi/2`.
    fn arc_point(&self, start: bool) -> Option<Scalar> {
        let Geometry::Arc { center, radius, start: s0, sweep } = self else { return None };
        let th = if start { s0.clone() } else { s0 + sweep };
        let two = BigRational::from_integer(2.into());
        let h = &th * &two;
        if !h.is_integer() {
            return None;
        }
        let k = (h.to_integer() % num_bigint::BigInt::from(4) + num_bigint::BigInt::from(4)) % num_bigint::BigInt::from(4);
        let k = k.to_i64()?;

        let r = radius.clone();
        let z = BigRational::zero();
        let off = match k {
            0 => Scalar::new(r, z),
            1 => Scalar::new(z, r),
            2 => Scalar::new(-r, z),
            _ => Scalar::new(z, -r),
        };
        Some(center + &off)
    }

    pub fn seg_path(&self, prec: u32) -> Result<SegPath> {
        Ok(match self {
            Geometry::Line { from, to } => match (from, to) {
                (Endpoint::Finite(a), Endpoint::Finite(b)) => {
                    if a == b {
                        return Err(Error::Input(format!("degenerate segment at {a}")));
                    }
                    SegPath { path: Path::line(a, b, prec), s_start: 0.0, s_end: 1.0 }
                }
                (Endpoint::Finite(a), Endpoint::Infinity(q)) => {
                    SegPath { path: Path::ray(a, q, prec), s_start: 0.0, s_end: f64::INFINITY }
                }
                (Endpoint::Infinity(q), Endpoint::Finite(b)) => {
                    SegPath { path: Path::ray(b, q, prec), s_start: f64::INFINITY, s_end: 0.0 }
                }
                _ => return Err(Error::Input("a segment cannot join infinity to infinity".into())),
            },
            Geometry::Arc { center, radius, start, sweep } => {
                if !radius.is_positive() || sweep.is_zero() {
                    return Err(Error::Input("arc needs a positive radius and a nonzero sweep".into()));
                }
                SegPath { path: Path::arc(center, radius, start, sweep, prec), s_start: 0.0, s_end: 1.0 }
            }
        })
    }

    /// Direction (in units of `pi`) in which the segment leaves its finite endpoint toward the other end,
    /// when exact; `None` for arcs.
    pub fn direction_from(&self, at_start: bool, prec: u32) -> Option<Float> {
        let Geometry::Line { from, to } = self else { return None };
        let (a, b) = if at_start { (from, to) } else { (to, from) };
        match (a, b) {
            (Endpoint::Finite(a), Endpoint::Finite(b)) => Some(Complex::from_scalar(&(b - a), prec).arg()),
            (Endpoint::Finite(_), Endpoint::Infinity(q)) => Some(pi_times(&normalize_pi(q), prec)),
            _ => None,
        }
    }
}

/// One transversal crossing between two segments, with parameters on each.
#[derive(Clone, Debug)]
pub struct Crossing {
    pub seg_a: usize,
    pub seg_b: usize,
    pub s_a: f64,
    pub s_b: f64,
    pub point: (f64, f64),
    /// Sign of `Im(conj(tangent_a) tangent_b)`.
    pub epsilon: i32,
}

fn c64(c: &Complex) -> (f64, f64) {
    c.to_f64()
}

fn cross(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

/// Candidate crossing parameters of two paths, found in double precision.
fn raw_crossings(a: &SegPath, b: &SegPath) -> Vec<(f64, f64)> {
    const P: u32 = 64;
    let lin = |p: &SegPath| -> Option<((f64, f64), (f64, f64))> {
        match &p.path {
            Path::Line { a, b } => {
                let (pa, pb) = (c64(a), c64(b));
                Some((pa, (pb.0 - pa.0, pb.1 - pa.1)))
            }
            Path::Ray { p, u } => Some((c64(p), c64(u))),
            Path::Arc { .. } => None,
        }
    };
    let circ = |p: &SegPath| -> Option<((f64, f64), f64, f64, f64)> {
        match &p.path {
            Path::Arc { c, r, theta0, sweep } => Some((c64(c), r.to_f64(), theta0.to_f64(), sweep.to_f64())),
            _ => None,
        }
    };
    let _ = P;
    let arc_param = |th: f64, t0: f64, sw: f64| -> Option<f64> {
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut best = None;
        for k in -3..=3 {
            let s = (th + k as f64 * two_pi - t0) / sw;
            if (-1e-12..=1.0 + 1e-12).contains(&s) {
                best = Some(s);
            }
        }
        best
    };
    let mut out = Vec::new();
    match (lin(a), lin(b), circ(a), circ(b)) {
        (Some((p, d)), Some((q, e)), _, _) => {
            let den = cross(d, e);
            if den.abs() < 1e-14 * (d.0.hypot(d.1) * e.0.hypot(e.1)) {
                // parallel: overlapping collinear pieces are reported by the caller as a degenerate crossing
                let w = (q.0 - p.0, q.1 - p.1);
                if cross(w, d).abs() < 1e-12 * d.0.hypot(d.1).max(1.0) {
                    out.push((f64::NAN, f64::NAN));
                }
                return out;
            }
            let w = (q.0 - p.0, q.1 - p.1);
            let s = cross(w, e) / den;
            let u = cross(w, d) / den;
            out.push((s, u));
        }
        (Some((p, d)), None, _, Some((c, r, t0, sw))) => {
            for (s, th) in line_circle(p, d, c, r) {
                if let Some(u) = arc_param(th, t0, sw) {
                    out.push((s, u));
                }
            }
        }
        (None, Some((q, e)), Some((c, r, t0, sw)), _) => {
            for (u, th) in line_circle(q, e, c, r) {
                if let Some(s) = arc_param(th, t0, sw) {
                    out.push((s, u));
                }
            }
        }
        (None, None, Some((c1, r1, a0, asw)), Some((c2, r2, b0, bsw))) => {
            for (th1, th2) in circle_circle(c1, r1, c2, r2) {
                if let (Some(s), Some(u)) = (arc_param(th1, a0, asw), arc_param(th2, b0, bsw)) {
                    out.push((s, u));
                }
            }
        }
        _ => {}
    }
    out
}

/// Intersections of `p + s d` with the circle `|z - c| = r`: pairs `(s, angle)`.
fn line_circle(p: (f64, f64), d: (f64, f64), c: (f64, f64), r: f64) -> Vec<(f64, f64)> {
    let w = (p.0 - c.0, p.1 - c.1);
    let aa = d.0 * d.0 + d.1 * d.1;
    let bb = 2.0 * (w.0 * d.0 + w.1 * d.1);
    let cc = w.0 * w.0 + w.1 * w.1 - r * r;
    let disc = bb * bb - 4.0 * aa * cc;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let mut out = Vec::new();
    for s in [(-bb - sq) / (2.0 * aa), (-bb + sq) / (2.0 * aa)] {
        let z = (w.0 + s * d.0, w.1 + s * d.1);
        out.push((s, z.1.atan2(z.0)));
    }
    if disc == 0.0 {
        out.truncate(1);
    }
    out
}

/// Intersections of two circles as pairs of angles on each.
fn circle_circle(c1: (f64, f64), r1: f64, c2: (f64, f64), r2: f64) -> Vec<(f64, f64)> {
    let dx = c2.0 - c1.0;
    let dy = c2.1 - c1.1;
    let d = dx.hypot(dy);
    if d == 0.0 || d > r1 + r2 || d < (r1 - r2).abs() {
        return Vec::new();
    }
    let a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let h = (r1 * r1 - a * a).max(0.0).sqrt();
    let m = (c1.0 + a * dx / d, c1.1 + a * dy / d);
    let mut out = Vec::new();
    for sgn in [-1.0, 1.0] {
        let p = (m.0 + sgn * h * dy / d, m.1 - sgn * h * dx / d);
        out.push(((p.1 - c1.1).atan2(p.0 - c1.0), (p.1 - c2.1).atan2(p.0 - c2.0)));
    }
    out
}

/// Transversal crossings between the segments of two chains.
///
/// Fails with [`Error::NotInGeneralPosition`] when a crossing sits at a vertex,
/// on a point of `D`, is tangential, or the chains overlap.
pub fn crossings(a: &TwistedChain, b: &TwistedChain, singular: &[Point]) -> Result<Vec<Crossing>> {
    const P: u32 = 128;
    let pa: Vec<SegPath> = a.segments.iter().map(|s| s.geometry.seg_path(P)).collect::<Result<_>>()?;
    let pb: Vec<SegPath> = b.segments.iter().map(|s| s.geometry.seg_path(P)).collect::<Result<_>>()?;
    let sing: Vec<(f64, f64)> = singular.iter().filter_map(|p| p.finite()).map(|s| s.to_f64()).collect();
    let mut out = Vec::new();
    let mut bad = Vec::new();
    let inside = |sp: &SegPath, s: f64| -> Option<bool> {
        let (lo, hi) = if sp.s_start < sp.s_end { (sp.s_start, sp.s_end) } else { (sp.s_end, sp.s_start) };
        let tol = 1e-9;
        if s < lo - tol || s > hi + tol {
            return Some(false);
        }
        if (s - lo).abs() <= tol || (hi.is_finite() && (s - hi).abs() <= tol) {
            return None;
        }
        Some(true)
    };
    for (i, sa) in pa.iter().enumerate() {
        for (j, sb) in pb.iter().enumerate() {
            for (s, u) in raw_crossings(sa, sb) {
                if s.is_nan() {
                    bad.push(format!("segments {i} and {j} overlap"));
                    continue;
                }
                match (inside(sa, s), inside(sb, u)) {
                    (Some(false), _) | (_, Some(false)) => continue,
                    (None, _) | (_, None) => {
                        let z = c64(&sa.path.point(s, P));
                        bad.push(format!("segments {i} and {j} meet at a vertex near ({:.6}, {:.6})", z.0, z.1));
                        continue;
                    }
                    _ => {}
                }
                let z = c64(&sa.path.point(s, P));
                if sing.iter().any(|p| (p.0 - z.0).hypot(p.1 - z.1) < 1e-9) {
                    bad.push(format!("segments {i} and {j} meet on a singular point near ({:.6}, {:.6})", z.0, z.1));
                    continue;
                }
                let ta = c64(&sa.tangent(s, P));
                let tb = c64(&sb.tangent(u, P));
                let det = cross(ta, tb);
                if det.abs() < 1e-9 * ta.0.hypot(ta.1) * tb.0.hypot(tb.1) {
                    bad.push(format!("segments {i} and {j} are tangent near ({:.6}, {:.6})", z.0, z.1));
                    continue;
                }
                out.push(Crossing { seg_a: i, seg_b: j, s_a: s, s_b: u, point: z, epsilon: if det > 0.0 { 1 } else { -1 } });
            }
        }
    }
    if !bad.is_empty() {
        return Err(Error::NotInGeneralPosition(bad));
    }
    Ok(out)
}
