//! Period integrals of forms over twisted chains.
//!
//! Each segment is walked from the point where its section is known. At a regular
//! singular endpoint an rd chain is closed off analytically from an anchor point in a
//! local Frobenius basis (finite part of the integral); a mod chain is cut at
//! `epsilon` and corrected by the boundary term of a formal primitive. At an
//! irregular endpoint the section must decay and the walk stops once the integrand
//! is negligible.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::Zero;
use rug::Float;

use super::local::{chart, local_radius, LocalFrame};
use super::mp::Complex;
use super::path::pi_times;
use super::policy::PrecisionPolicy;
use super::transport::{mag, numeric_vector, NumRat, NumSystem, Until, Walk};
use crate::betti::{exact_arg, normalize_pi, stokes_sectors, Anchor, StokesSectorChart, Coefficient, Endpoint, Geometry, GrowthClass, SegPath, TwistedChain};
use crate::connection::{Connection, Form};
use crate::exact::{Point, RatMatrix};
use crate::formal::VSeries;
use crate::{Error, Result};

/// A form to integrate against the sections of a chain.
#[derive(Clone, Debug)]
pub struct Integrand {
    /// The form already multiplied by the pairing matrix, so the integrand is `sum_i y_i form_i`.
    pub form: Form,
    /// Formal primitives of the original form at points of `D` (for boundary terms).
    pub primitives: Vec<(Point, VSeries)>,
}

/// Results on one segment.
#[derive(Clone, Debug)]
pub struct SegmentEval {
    /// `[form][variant]`.
    pub integrals: Vec<Vec<Complex>>,
    /// Section values at the requested parameters.
    pub stops: Vec<(Complex, Vec<Complex>)>,
    pub start_value: Option<Vec<Complex>>,
    pub end_value: Option<Vec<Complex>>,
    pub steps: usize,
}

#[derive(Clone, Debug)]
pub struct ChainEval {
    /// `[form][variant]`; a single variant unless boundary-term regularization was used.
    pub values: Vec<Vec<Complex>>,
    /// Offsets (relative to the local radius) of the variants, in order; empty for a single variant.
    pub offsets: Vec<f64>,
    pub segments: Vec<SegmentEval>,
}

impl ChainEval {
    /// The value at the smallest offset.
    pub fn value(&self, form: usize) -> &Complex {
        self.values[form].last().expect("at least one variant")
    }

    /// Largest difference between the evaluations at each `epsilon` and `epsilon / 2`.
    pub fn halving_spread(&self, form: usize) -> Vec<f64> {
        self.values[form].chunks(2).filter(|c| c.len() == 2).map(|c| c[0].sub(&c[1]).abs_f64()).collect()
    }
}

/// The numerical data of one side (a connection and how its sections pair with forms).
pub struct SideContext {
    pub conn: Connection,
    pub sys: NumSystem,
    pub policy: PrecisionPolicy,
    k: Option<Vec<NumRat>>,
    frames: HashMap<String, LocalFrame>,
    sectors: HashMap<String, StokesSectorChart>,
    prec: u32,
}

#[derive(Clone, Debug)]
enum EndKind {
    Plain,
    Regular(Point),
    Irregular(Point),
}

/// How the walk from the known point toward an end finishes.
#[derive(Clone, Debug)]
enum Finish {
    Param(f64),
    /// Walk to the anchor, then integrate analytically to the singular point.
    Analytic { x: Point, s_anchor: f64 },
    /// Boundary terms at each offset parameter.
    Offsets { x: Point, params: Vec<f64> },
    /// Walk until the integrands are negligible; unless the segment's own coefficient is
    /// anchored there, first check at `check` that the section decays.
    Decay { toward: f64, check: Option<(Point, f64)> },
}

impl SideContext {
    /// `k` is the matrix `K` in the pairing `<y, w> = y . (K w)`; `None` for the identity.
    pub fn new(conn: Connection, k: Option<&RatMatrix>, policy: PrecisionPolicy) -> Self {
        let prec = policy.bits();
        let sys = NumSystem::from_connection(&conn, prec);
        let k = k.map(|m| m.to_rows().into_iter().flatten().map(|f| NumRat::new(&f, prec)).collect());
        SideContext { conn, sys, policy, k, frames: HashMap::new(), sectors: HashMap::new(), prec }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn frame(&mut self, x: &Point) -> Result<&mut LocalFrame> {
        let key = x.to_string();
        if !self.frames.contains_key(&key) {
            let f = LocalFrame::new(&self.conn, x, self.prec)?;
            self.frames.insert(key.clone(), f);
        }
        Ok(self.frames.get_mut(&key).unwrap())
    }

    pub fn sectors(&mut self, x: &Point) -> Result<&StokesSectorChart> {
        let key = x.to_string();
        if !self.sectors.contains_key(&key) {
            let c = stokes_sectors(&self.conn, x)?;
            self.sectors.insert(key.clone(), c);
        }
        Ok(&self.sectors[&key])
    }

    /// Whether formal solution `k` at the irregular point `x` decays along the segment's approach.
    fn solution_decays(&mut self, x: &Point, k: usize, geom: &Geometry, at_start: bool, z: &Complex) -> Result<bool> {
        let phi = self.frame(x)?.solutions[k].phi.clone();
        if phi.iter().all(|c| c.is_zero()) {
            return Ok(false);
        }
        let (exact, approx) = approach_direction(geom, at_start, x, z);
        let chart = self.sectors(x)?;
        let Some(fs) = chart.factor_of(&phi) else {
            return Err(Error::UnsupportedLocalType { point: x.to_string(), reason: "exponential factor not in the sector chart".into() });
        };
        Ok(match exact {
            Some(th) => fs.is_rd(&th),
            None => fs.is_rd_approx(approx),
        })
    }

    /// Decomposes the section `y` at `z` (near the irregular point `x`) and checks that every
    /// non-negligible component decays toward `x`.
    fn check_decay(&mut self, x: &Point, geom: &Geometry, at_start: bool, z: &Complex, y: &[Complex]) -> Result<()> {
        let t = chart(x, z);
        let arg = self.chart_arg(geom, at_start, x, &t, 0);
        let tol = self.policy.series_tol();
        let frame = self.frame(x)?;
        let basis = frame.frame(&t, &arg, tol)?;
        let alpha = frame.decompose(&t, &arg, y, tol)?;
        let scale = y.iter().map(mag).fold(0.0, f64::max).max(1e-300);
        let n = alpha.len();
        for (k, a) in alpha.iter().enumerate() {
            let col = (0..n).map(|r| mag(basis.get(r, k))).fold(0.0, f64::max);
            if mag(a) * col <= 1e-20 * scale {
                continue;
            }
            if !self.solution_decays(x, k, geom, at_start, z)? {
                return Err(Error::InadmissibleEndpoint {
                    point: x.to_string(),
                    reason: format!("the section has a component (formal solution {k}) without rapid decay along the approach"),
                });
            }
        }
        Ok(())
    }

    /// `y . (K(z) w)`.
    pub fn pair(&self, y: &[Complex], w: &[Complex], z: &Complex) -> Complex {
        let n = y.len();
        let mut acc = Complex::zero(self.prec);
        match &self.k {
            None => {
                for (a, b) in y.iter().zip(w) {
                    acc.add_assign(&a.mul(b));
                }
            }
            Some(k) => {
                for r in 0..n {
                    let mut kw = Complex::zero(self.prec);
                    for c in 0..n {
                        let e = &k[r * n + c];
                        if !e.is_zero() {
                            kw.add_assign(&e.eval(z).mul(&w[c]));
                        }
                    }
                    acc.add_assign(&y[r].mul(&kw));
                }
            }
        }
        acc
    }

    fn classify(&mut self, e: &Endpoint) -> Result<EndKind> {
        let x = match e {
            Endpoint::Finite(a) => {
                let p = Point::Finite(a.clone());
                if !self.conn.singular.contains(&p) {
                    return Ok(EndKind::Plain);
                }
                p
            }
            Endpoint::Infinity(_) => {
                if !self.conn.singular.contains(&Point::Infinity) {
                    return Err(Error::Input("a ray to infinity needs infinity in the singular set".into()));
                }
                Point::Infinity
            }
        };
        Ok(if self.frame(&x)?.regular { EndKind::Regular(x) } else { EndKind::Irregular(x) })
    }

    /// Evaluates `chain` against `integrands`, recording section values at the parameters
    /// in `stops[segment]`.
    pub fn eval_chain(&mut self, chain: &TwistedChain, integrands: &[Integrand], stops: &[Vec<f64>]) -> Result<ChainEval> {
        let mut prev: Option<Vec<Complex>> = None;
        let mut segs = Vec::new();
        for (i, seg) in chain.segments.iter().enumerate() {
            let st = stops.get(i).cloned().unwrap_or_default();
            let e = self
                .eval_segment(&seg.geometry, &seg.coefficient, prev.as_deref(), chain.class, integrands, &st)
                .map_err(|e| annotate(e, i))?;
            prev = e.end_value.clone();
            segs.push(e);
        }
        let nvar = segs.iter().flat_map(|s| s.integrals.first().map(|v| v.len())).max().unwrap_or(1);
        let offsets = if nvar > 1 {
            self.policy.epsilons.iter().flat_map(|e| [*e, e / 2.0]).collect()
        } else {
            Vec::new()
        };
        let values = (0..integrands.len())
            .map(|f| {
                (0..nvar)
                    .map(|v| {
                        let mut acc = Complex::zero(self.prec);
                        for s in &segs {
                            let row = &s.integrals[f];
                            acc.add_assign(if row.len() == 1 { &row[0] } else { &row[v] });
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok(ChainEval { values, offsets, segments: segs })
    }

    fn local_params(&self, sp: &SegPath, at_start: bool, x: &Point, r_chart: f64) -> f64 {
        // parameter whose point has chart coordinate of size about r_chart
        match x {
            Point::Finite(_) => sp.param_from(at_start, r_chart),
            Point::Infinity => {
                let p = match &sp.path {
                    super::path::Path::Ray { p, .. } => p.abs_f64(),
                    _ => 0.0,
                };
                1.0 / r_chart + p
            }
        }
    }

    /// Argument of the chart coordinate `t` on the segment near `x`, continued from the approach direction.
    fn chart_arg(&self, geom: &Geometry, at_start: bool, x: &Point, t: &Complex, branch: i64) -> Float {
        let p = self.prec;
        let theta = match (x, geom) {
            (Point::Finite(_), _) => geom.direction_from(at_start, p).unwrap_or_else(|| t.arg()),
            (Point::Infinity, Geometry::Line { from, to }) => {
                let q = match if at_start { from } else { to } {
                    Endpoint::Infinity(q) => q.clone(),
                    _ => unreachable!("infinity endpoint"),
                };
                pi_times(&normalize_pi(&-q), p)
            }
            _ => t.arg(),
        };
        let rel = t.mul(&Complex::cis(&Float::with_val(p, -&theta))).arg();
        let two_pi = pi_times(&num_rational::BigRational::from_integer(2.into()), p);
        Float::with_val(p, &theta + &rel) + Float::with_val(p, &two_pi * branch)
    }

    #[allow(clippy::too_many_arguments)]
    fn eval_segment(
        &mut self,
        geom: &Geometry,
        coef: &Coefficient,
        prev: Option<&[Complex]>,
        class: GrowthClass,
        integrands: &[Integrand],
        stops: &[f64],
    ) -> Result<SegmentEval> {
        let p = self.prec;
        let sp = geom.seg_path(p)?;
        self.check_avoids_d(geom, &sp)?;
        let (e0, e1) = (geom.start(), geom.end());
        let k0 = match &e0 {
            Some(e) => self.classify(e)?,
            None => EndKind::Plain,
        };
        let k1 = match &e1 {
            Some(e) => self.classify(e)?,
            None => EndKind::Plain,
        };
        let n = self.conn.rank();
        let tol = self.policy.series_tol();

        // distance scale at each end: local radius, limited by the segment and by requested stops
        let seg_len = if sp.s_start.is_finite() && sp.s_end.is_finite() {
            sp.path.speed(0.0) * (sp.s_end - sp.s_start).abs()
        } else {
            f64::INFINITY
        };
        let anchor_radius = |this: &Self, x: &Point, at_start: bool| -> f64 {
            let rho = local_radius(&this.conn, x);
            let mut r = rho / 4.0;
            if let Point::Finite(_) = x {
                r = r.min(seg_len / 2.0);
                for s in stops {
                    let base = if at_start { sp.s_start } else { sp.s_end };
                    r = r.min(0.5 * (s - base).abs() * sp.path.speed(0.0));
                }
            } else {
                // in the chart at infinity: stops lie at |z| about s
                for s in stops {
                    r = r.min(0.5 / (s.abs() + 1.0));
                }
            }
            r
        };

        // known point
        let (s_k, y_k): (f64, Vec<Complex>) = match coef {
            Coefficient::Vector { at, values } => {
                let (s, kind) = match at {
                    Anchor::Start => (sp.s_start, &k0),
                    Anchor::End => (sp.s_end, &k1),
                };
                if !matches!(kind, EndKind::Plain) || !s.is_finite() {
                    return Err(Error::Input("a section value must be given at a vertex outside D".into()));
                }
                if values.len() != n {
                    return Err(Error::Input(format!("section vector has {} entries, rank is {n}", values.len())));
                }
                let y = values.iter().map(|e| e.eval(p).map_err(Error::Input)).collect::<Result<Vec<_>>>()?;
                (s, y)
            }
            Coefficient::Continue { scale } => {
                let Some(prev) = prev else {
                    return Err(Error::Input("'continue' needs a previous segment ending outside D".into()));
                };
                if !matches!(k0, EndKind::Plain) {
                    return Err(Error::Input("'continue' needs a start vertex outside D".into()));
                }
                let c = scale.eval(p).map_err(Error::Input)?;
                (sp.s_start, prev.iter().map(|v| v.mul(&c)).collect())
            }
            Coefficient::Factor { point, index, branch, scale } => {
                let at_start = match (&k0, &k1) {
                    (EndKind::Regular(x) | EndKind::Irregular(x), _) if x == point => true,
                    (_, EndKind::Regular(x) | EndKind::Irregular(x)) if x == point => false,
                    _ => return Err(Error::Input(format!("factor section at {point}, which is not a singular endpoint of the segment"))),
                };
                let c = scale.eval(p).map_err(Error::Input)?;
                let mut r = anchor_radius(self, point, at_start);
                let mut attempts = 0;
                loop {
                    let s = self.local_params(&sp, at_start, point, r);
                    let z = sp.path.point(s, p);
                    let t = chart(point, &z);
                    let arg = self.chart_arg(geom, at_start, point, &t, *branch);
                    let frame = self.frame(point)?;
                    if *index >= frame.len() {
                        return Err(Error::Input(format!("factor index {index} out of range at {point}")));
                    }
                    if !frame.regular && !self.solution_decays(point, *index, geom, at_start, &z)? {
                        return Err(Error::InadmissibleEndpoint {
                            point: point.to_string(),
                            reason: format!("formal solution {index} has no rapid decay along the approach ({class} chain)"),
                        });
                    }
                    let frame = self.frame(point)?;
                    match frame.value(*index, &t, &arg, tol) {
                        Ok(v) => break (s, v.iter().map(|a| a.mul(&c)).collect()),
                        Err(Error::TailTooLarge { .. }) if attempts < 40 && !frame.regular => {
                            r /= 2.0;
                            attempts += 1;
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
        };

        let hs: Vec<Vec<NumRat>> = integrands.iter().map(|g| numeric_vector(&g.form, p)).collect();

        let finish = |this: &mut Self, kind: &EndKind, at_start: bool| -> Result<Finish> {
            let s_end = if at_start { sp.s_start } else { sp.s_end };
            Ok(match kind {
                EndKind::Plain => Finish::Param(s_end),
                EndKind::Irregular(x) => {
                    let own = matches!(coef, Coefficient::Factor { point, .. } if point == x);
                    let check = (!own).then(|| {
                        let r = anchor_radius(this, x, at_start);
                        (x.clone(), this.local_params(&sp, at_start, x, r))
                    });
                    Finish::Decay { toward: s_end, check }
                }
                EndKind::Regular(x) => match class {
                    GrowthClass::Rd => {
                        let r = anchor_radius(this, x, at_start);
                        let s_anchor = this.local_params(&sp, at_start, x, r);
                        Finish::Analytic { x: x.clone(), s_anchor }
                    }
                    GrowthClass::Mod => {
                        let rho = local_radius(&this.conn, x);
                        let params = this
                            .policy
                            .epsilons
                            .iter()
                            .flat_map(|e| [e * rho, e * rho / 2.0])
                            .map(|r| this.local_params(&sp, at_start, x, r))
                            .collect();
                        Finish::Offsets { x: x.clone(), params }
                    }
                },
            })
        };
        let f0 = finish(self, &k0, true)?;
        let f1 = finish(self, &k1, false)?;

        let mut stop_vals: Vec<Option<(Complex, Vec<Complex>)>> = vec![None; stops.len()];
        let mut steps = 0;
        // walk toward each end; collect [form][variant] integrals from the known point
        let mut sides: Vec<(Vec<Vec<Complex>>, Option<Vec<Complex>>)> = Vec::new();
        for (fin, at_start) in [(&f0, true), (&f1, false)] {
            let s_target_end = if at_start { sp.s_start } else { sp.s_end };
            let toward = |s: f64| (s - s_k) * (s_target_end - s_k) > 0.0 || s == s_target_end && s != s_k;
            let mut my_stops: Vec<(usize, f64)> = stops.iter().cloned().enumerate().filter(|(_, s)| toward(*s)).collect();
            my_stops.sort_by(|a, b| ((a.1 - s_k).abs()).partial_cmp(&(b.1 - s_k).abs()).unwrap());
            let (res, end_y, st, w_steps) = self.walk_end(&sp, geom, at_start, s_k, &y_k, &hs, &my_stops, fin, integrands)?;
            steps += w_steps;
            for (idx, v) in st {
                stop_vals[idx] = Some(v);
            }
            sides.push((res, end_y));
        }
        // stops exactly at the known point
        for (i, s) in stops.iter().enumerate() {
            if stop_vals[i].is_none() && *s == s_k {
                stop_vals[i] = Some((sp.path.point(s_k, p), y_k.clone()));
            }
        }
        let stops_out = stop_vals
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| Error::Input(format!("requested parameter {} is not on the segment", stops[i]))))
            .collect::<Result<Vec<_>>>()?;

        let (ws, y_start) = &sides[0];
        let (we, y_end) = &sides[1];
        let nvar = ws.first().map_or(1, |v| v.len()).max(we.first().map_or(1, |v| v.len()));
        let integrals = (0..integrands.len())
            .map(|f| {
                (0..nvar)
                    .map(|v| {
                        let a = if ws[f].len() == 1 { &ws[f][0] } else { &ws[f][v] };
                        let b = if we[f].len() == 1 { &we[f][0] } else { &we[f][v] };
                        // integral from start to end: (known -> end) - (known -> start)
                        b.sub(a)
                    })
                    .collect()
            })
            .collect();
        Ok(SegmentEval {
            integrals,
            stops: stops_out,
            start_value: if matches!(k0, EndKind::Plain) { y_start.clone() } else { None },
            end_value: if matches!(k1, EndKind::Plain) { y_end.clone() } else { None },
            steps,
        })
    }

    fn check_avoids_d(&self, geom: &Geometry, sp: &SegPath) -> Result<()> {
        let finite: Vec<(f64, f64)> = self.conn.finite_singular().iter().map(|s| s.to_f64()).collect();
        match geom {
            Geometry::Arc { center, radius, .. } => {
                let (cx, cy) = center.to_f64();
                let r = num_traits::ToPrimitive::to_f64(radius).unwrap();
                for (a, b) in &finite {
                    if ((a - cx).hypot(b - cy) - r).abs() < 1e-12 * r.max(1.0) {
                        return Err(Error::Input(format!("arc passes through the singular point {a}+{b}i")));
                    }
                }
            }
            Geometry::Line { .. } => {
                // z(s) = z(0) + s d for lines and rays alike
                let (lo, hi) = if sp.s_start < sp.s_end { (sp.s_start, sp.s_end) } else { (sp.s_end, sp.s_start) };
                let z0 = sp.path.point(0.0, 64).to_f64();
                let d = sp.path.tangent(0.0, 64).to_f64();
                let dd = d.0 * d.0 + d.1 * d.1;
                for (a, b) in &finite {
                    let w = (a - z0.0, b - z0.1);
                    let s = (w.0 * d.0 + w.1 * d.1) / dd;
                    let perp = (w.0 * d.1 - w.1 * d.0).abs() / dd.sqrt();
                    if perp < 1e-12 && s > lo + 1e-12 && s < hi - 1e-12 {
                        return Err(Error::Input(format!("segment passes through the singular point {a}+{b}i")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Walks from the known point toward one end and returns `[form][variant]` integrals
    /// from the known point to that end (with endpoint treatment), the section at the end
    /// when it is a plain vertex, and the recorded stops.
    #[allow(clippy::too_many_arguments, clippy::type_complexity)]
    fn walk_end(
        &mut self,
        sp: &SegPath,
        geom: &Geometry,
        at_start: bool,
        s_k: f64,
        y_k: &[Complex],
        hs: &[Vec<NumRat>],
        my_stops: &[(usize, f64)],
        fin: &Finish,
        integrands: &[Integrand],
    ) -> Result<(Vec<Vec<Complex>>, Option<Vec<Complex>>, Vec<(usize, (Complex, Vec<Complex>))>, usize)> {
        let p = self.prec;
        let nf = hs.len();
        let mut params: Vec<f64> = my_stops.iter().map(|x| x.1).collect();
        let special: Vec<f64> = match fin {
            Finish::Param(s) => vec![*s],
            Finish::Analytic { s_anchor, .. } => vec![*s_anchor],
            Finish::Offsets { params, .. } => params.clone(),
            Finish::Decay { check, .. } => check.iter().map(|c| c.1).collect(),
        };
        // all parameters in order of travel
        let dir = match fin {
            Finish::Param(s) => s - s_k,
            Finish::Analytic { s_anchor, .. } => s_anchor - s_k,
            Finish::Offsets { params, .. } => params[0] - s_k,
            Finish::Decay { check: Some((_, s)), .. } => s - s_k,
            Finish::Decay { toward, .. } => {
                if toward.is_infinite() {
                    1.0
                } else {
                    toward - s_k
                }
            }
        };
        if let Some(&s) = special.first() {
            if (s - s_k) * dir < 0.0 {
                return Err(Error::Input("a section anchor lies beyond a regularization point; move the vertex".into()));
            }
        }
        for s in &special {
            if !params.contains(s) {
                params.push(*s);
            }
        }
        params.retain(|s| *s != s_k);
        params.sort_by(|a, b| ((a - s_k) * dir.signum()).partial_cmp(&((b - s_k) * dir.signum())).unwrap());
        if let Some(&last_special) = special.last() {
            if let Some(&far) = params.last() {
                if far != last_special && !matches!(fin, Finish::Decay { .. }) {
                    return Err(Error::Input("a crossing lies closer to a singular endpoint than the regularization points".into()));
                }
            }
        }
        let walk = if params.is_empty() {
            Walk {
                s_end: s_k,
                z_end: sp.path.point(s_k, p),
                y: y_k.to_vec(),
                integrals: vec![Complex::zero(p); nf],
                stops: Vec::new(),
                steps: 0,
            }
        } else {
            let target = *params.last().unwrap();
            self.sys.walk(&sp.path, s_k, Until::Param(target), y_k, hs, &params, &self.policy)?
        };
        let mut steps = walk.steps;
        let stop_at = |walk: &Walk, s: f64| -> Option<(Complex, Vec<Complex>, Vec<Complex>)> {
            if s == s_k {
                return Some((sp.path.point(s_k, p), y_k.to_vec(), vec![Complex::zero(p); nf]));
            }
            walk.stops.iter().find(|st| st.s == s).map(|st| (st.z.clone(), st.y.clone(), st.integrals.clone()))
        };
        let mut rec = Vec::new();
        for (idx, s) in my_stops {
            let (z, y, _) = stop_at(&walk, *s).ok_or_else(|| Error::PrecisionExhausted("missing stop".into()))?;
            rec.push((*idx, (z, y)));
        }
        let out = match fin {
            Finish::Param(_) => {
                let rows = walk.integrals.iter().map(|c| vec![c.clone()]).collect();
                (rows, Some(walk.y.clone()))
            }
            Finish::Decay { toward, check } => {
                if let Some((x, s_anchor)) = check {
                    let (z, y, _) = stop_at(&walk, *s_anchor).ok_or_else(|| Error::PrecisionExhausted("missing anchor".into()))?;
                    self.check_decay_near(sp, geom, at_start, x, *s_anchor, z, y, hs)?;
                }
                let tail = self.policy.tolerance * 1e-3;
                let more = self.sys.walk(
                    &sp.path,
                    walk.s_end,
                    Until::Decay { toward: *toward, tail },
                    &walk.y,
                    hs,
                    &[],
                    &self.policy,
                )?;
                steps += more.steps;
                let rows = walk.integrals.iter().zip(&more.integrals).map(|(a, b)| vec![a.add(b)]).collect();
                (rows, None)
            }
            Finish::Analytic { x, s_anchor, .. } => {
                let (z, y, ints) = stop_at(&walk, *s_anchor).ok_or_else(|| Error::PrecisionExhausted("missing anchor".into()))?;
                let t = chart(x, &z);
                let arg = self.chart_arg(geom, at_start, x, &t, 0);
                let tol = self.policy.series_tol();
                let frame = self.frame(x)?;
                let alpha = frame.decompose(&t, &arg, &y, tol)?;
                let scale = y.iter().map(mag).fold(0.0, f64::max);
                let mut rows = Vec::new();
                for (f, g) in integrands.iter().enumerate() {
                    // known -> anchor, then anchor -> x = -(x -> anchor)
                    let mut acc = ints[f].clone();
                    for (kk, a) in alpha.iter().enumerate() {
                        if mag(a) <= 1e-6 * tol * scale.max(1e-300) {
                            continue;
                        }
                        let r = frame.regularized_integral(kk, &g.form, &t, &arg, tol)?;
                        acc.sub_assign(&a.mul(&r));
                    }
                    rows.push(vec![acc]);
                }
                (rows, None)
            }
            Finish::Offsets { x, params } => {
                let mut rows = vec![Vec::new(); nf];
                for s in params {
                    let (z, y, ints) = stop_at(&walk, *s).ok_or_else(|| Error::PrecisionExhausted("missing offset".into()))?;
                    let t = chart(x, &z);
                    for (f, g) in integrands.iter().enumerate() {
                        let m = g
                            .primitives
                            .iter()
                            .find(|(pt, _)| pt == x)
                            .map(|(_, m)| eval_vseries(m, &t))
                            .ok_or_else(|| Error::Input(format!("no formal primitive at {x}")))?;
                        // the segment value is (known -> end) - (known -> start) and the
                        // regularized one adds <y, m> at the start and subtracts it at the end
                        let b = self.pair(&y, &m, &z);
                        rows[f].push(ints[f].sub(&b));
                    }
                }
                (rows, None)
            }
        };
        Ok((out.0, out.1, rec, steps))
    }
}

impl SideContext {
    /// `check_decay`, moving closer to `x` while the asymptotic series is too inaccurate.
    #[allow(clippy::too_many_arguments)]
    fn check_decay_near(
        &mut self,
        sp: &SegPath,
        geom: &Geometry,
        at_start: bool,
        x: &Point,
        s0: f64,
        z0: Complex,
        y0: Vec<Complex>,
        hs: &[Vec<NumRat>],
    ) -> Result<()> {
        let (mut s, mut z, mut y) = (s0, z0, y0);
        let mut r = chart(x, &z).abs_f64();
        for _ in 0..40 {
            match self.check_decay(x, geom, at_start, &z, &y) {
                Err(Error::TailTooLarge { .. }) => {
                    r /= 2.0;
                    let s_next = self.local_params(sp, at_start, x, r);
                    let w = self.sys.walk(&sp.path, s, Until::Param(s_next), &y, &hs[..0], &[], &self.policy)?;
                    s = s_next;
                    z = w.z_end;
                    y = w.y;
                }
                other => return other,
            }
        }
        Err(Error::TailTooLarge { point: x.to_string(), estimate: r })
    }
}

/// Approach direction toward `x` (the direction of `z - x`, or of `z` at infinity), exactly
/// in units of `pi` when known, and in radians.
fn approach_direction(geom: &Geometry, at_start: bool, x: &Point, z: &Complex) -> (Option<BigRational>, f64) {
    let numeric = || match x {
        Point::Finite(a) => {
            let (ar, ai) = a.to_f64();
            let (zr, zi) = z.to_f64();
            (zi - ai).atan2(zr - ar)
        }
        Point::Infinity => {
            let (zr, zi) = z.to_f64();
            zi.atan2(zr)
        }
    };
    let exact = match geom {
        Geometry::Line { from, to } => {
            let (near, far) = if at_start { (from, to) } else { (to, from) };
            match (near, far) {
                (Endpoint::Infinity(q), _) => Some(normalize_pi(q)),
                (Endpoint::Finite(a), Endpoint::Finite(b)) => exact_arg(&(b - a)),
                (Endpoint::Finite(_), Endpoint::Infinity(q)) => Some(normalize_pi(q)),
            }
        }
        Geometry::Arc { .. } => None,
    };
    let approx = match &exact {
        Some(q) => num_traits::ToPrimitive::to_f64(q).unwrap() * std::f64::consts::PI,
        None => numeric(),
    };
    (exact, approx)
}

fn annotate(e: Error, seg: usize) -> Error {
    match e {
        Error::Input(m) => Error::Input(format!("segment {}: {m}", seg + 1)),
        other => other,
    }
}

/// `sum_k c_k t^k` for a vector Laurent series.
pub fn eval_vseries(m: &VSeries, t: &Complex) -> Vec<Complex> {
    let p = t.prec();
    let mut acc = vec![Complex::zero(p); m.dim];
    let mut pw = t.powi(m.start);
    for c in &m.coeffs {
        for (a, ci) in acc.iter_mut().zip(c) {
            if !ci.is_zero() {
                a.add_assign(&Complex::from_scalar(ci, p).mul(&pw));
            }
        }
        pw = pw.mul(t);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::betti::Segment;
    use crate::connection::Pairing;
    use crate::exact::{Mat, Scalar};
    use crate::expr::{parse_ratfun, Expr};
    use crate::formal::primitive_through;
    use num_rational::BigRational;

    fn kummer(a: &str) -> Connection {
        let m = Mat::from_rows(vec![vec![parse_ratfun(&format!("{a}/z - 1")).unwrap()]]);
        Connection::new(m, vec![Point::Finite(Scalar::zero()), Point::Infinity], Pairing::Dual).unwrap()
    }

    fn ray_chain(class: GrowthClass) -> TwistedChain {
        TwistedChain {
            class,
            segments: vec![Segment {
                geometry: Geometry::Line {
                    from: Endpoint::Finite(Scalar::zero()),
                    to: Endpoint::Infinity(BigRational::from_integer(0.into())),
                },
                coefficient: Coefficient::Factor {
                    point: Point::Finite(Scalar::zero()),
                    index: 0,
                    branch: 0,
                    scale: Expr::Num(Scalar::from_int(1)),
                },
            }],
        }
    }

    fn gamma(x: f64, prec: u32) -> Complex {
        Complex::real(Float::with_val(prec, x).gamma())
    }

    #[test]
    fn gamma_one_third_both_recipes() {
        let c = kummer("1/3");
        let pol = PrecisionPolicy::default();
        let form = vec![parse_ratfun("1/z").unwrap()];
        let dual = c.dual();
        let prims: Vec<(Point, VSeries)> = c
            .singular
            .iter()
            .filter(|x| !x.is_infinity())
            .map(|x| (x.clone(), primitive_through(&dual, x, &form, 40).unwrap().series))
            .collect();
        let ig = Integrand { form: form.clone(), primitives: prims };
        let mut side = SideContext::new(c, None, pol.clone());
        let p = side.prec();
        let third = Float::with_val(p, 1) / 3u32;
        let expect = Complex::real(third.gamma());
        let rd = side.eval_chain(&ray_chain(GrowthClass::Rd), std::slice::from_ref(&ig), &[]).unwrap();
        assert!(rd.value(0).sub(&expect).abs_f64() < 1e-32, "{:e}", rd.value(0).sub(&expect).abs_f64());
        let md = side.eval_chain(&ray_chain(GrowthClass::Mod), &[ig], &[]).unwrap();
        assert_eq!(md.values[0].len(), 6);
        assert!(md.value(0).sub(&expect).abs_f64() < 1e-32, "{}", md.value(0));
        assert!(md.halving_spread(0).iter().all(|d| *d < 1e-32));
        let _ = gamma(0.5, p);
    }

    #[test]
    fn finite_part_of_divergent_gamma() {
        // int_0^inf z^{1/3} e^{-z} dz/z^2 as a finite part is Gamma(-2/3)
        let c = kummer("1/3");
        let pol = PrecisionPolicy::default();
        let form = vec![parse_ratfun("1/z^2").unwrap()];
        let dual = c.dual();
        let prims = vec![(Point::Finite(Scalar::zero()), primitive_through(&dual, &Point::Finite(Scalar::zero()), &form, 40).unwrap().series)];
        let ig = Integrand { form, primitives: prims };
        let mut side = SideContext::new(c, None, pol);
        let p = side.prec();
        let x = Float::with_val(p, -2) / 3u32;
        let expect = Complex::real(x.gamma());
        let rd = side.eval_chain(&ray_chain(GrowthClass::Rd), std::slice::from_ref(&ig), &[]).unwrap();
        assert!(rd.value(0).sub(&expect).abs_f64() < 1e-32, "{:e}", rd.value(0).sub(&expect).abs_f64());
        let md = side.eval_chain(&ray_chain(GrowthClass::Mod), &[ig], &[]).unwrap();
        assert!(md.value(0).sub(&expect).abs_f64() < 1e-32, "{}", md.value(0));
    }
}
