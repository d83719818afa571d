//! The quadratic relations in middle dimension: S, the two period matrices and the
//! intersection matrix B, with the residual of `s 2 pi i B = P1 S^-1 P2^T`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::betti::{crossings, CycleSpec, GrowthClass, Side, TwistedChain};
use crate::connection::{Connection, Form, Pairing};
use crate::derham::{h1_basis, middle_forms, middle_lift_through, needed_orders, s_matrix, Lift, MiddleClass, PairingMatrixS};
use crate::exact::RatMatrix;
use crate::numeric::path::Path;
use crate::numeric::periods::{ChainEval, Integrand, SideContext};
use crate::numeric::{CMat, Complex, PrecisionPolicy, Until};
use crate::scenario::Scenario;
use crate::{Error, Result};

/// Formal primitives are computed at least through this order, for boundary terms.
pub const PRIMITIVE_DEPTH: i64 = 40;

/// Relative residual below which a relation passes.
pub const TAU_REL: f64 = 1e-20;

/// One side of the pairing: a connection with its middle classes.
#[derive(Clone, Debug)]
pub struct MiddleSide {
    pub conn: Connection,
    pub forms: Vec<Form>,
    pub classes: Vec<MiddleClass>,
    pub h1_dimension: usize,
    pub pole_bound: u32,
    pub basis_policy: String,
}

#[derive(Clone, Debug)]
pub struct MiddleData {
    pub v: MiddleSide,
    /// `V` itself for a self pairing.
    pub partner: MiddleSide,
    pub s: PairingMatrixS,
}

impl MiddleData {
    pub fn dimension(&self) -> usize {
        self.v.forms.len()
    }
}

fn lift_deep(conn: &Connection, mine: &[Form], other: &[Form], depth: Option<i64>) -> Result<Vec<MiddleClass>> {
    let mut need = needed_orders(conn, other);
    for x in &conn.singular {
        let e = need.entry(x.to_string()).or_insert(0);
        match depth {
            Some(n) if n < *e => {
                return Err(Error::TruncationTooSmall { point: x.to_string(), given: n, needed: *e });
            }
            Some(n) => *e = n,
            None => *e = (*e).max(PRIMITIVE_DEPTH),
        }
    }
    mine.iter()
        .map(|w| match middle_lift_through(conn, w, &need)? {
            Lift::Middle(c) => Ok(c),
            Lift::NotMiddle { point, level } => {
                Err(Error::CannotCertify(format!("form is not middle: obstruction at {point}, level {level}")))
            }
        })
        .collect()
}

fn choose_forms(conn: &Connection, given: Option<&[Form]>, pole_bound: Option<u32>) -> Result<(Vec<Form>, usize, u32, String)> {
    let h1 = h1_basis(conn, pole_bound)?;
    let (d, forms, policy) = middle_forms(conn, &h1)?;
    match given {
        None => Ok((forms, h1.dimension, h1.pole_bound, policy)),
        Some(g) => {
            if g.len() != d {
                return Err(Error::Input(format!("{} forms given, the middle dimension is {d}", g.len())));
            }
            Ok((g.to_vec(), h1.dimension, h1.pole_bound, "given".into()))
        }
    }
}

/// Middle classes of both sides and the exact pairing matrix `S`; formal primitives are
/// computed through `truncation` (default [`PRIMITIVE_DEPTH`]).
pub fn middle_data(
    conn: &Connection,
    forms_v: Option<&[Form]>,
    forms_partner: Option<&[Form]>,
    pole_bound: Option<u32>,
    truncation: Option<i64>,
) -> Result<MiddleData> {
    let (fv, h1v, nv, pv) = choose_forms(conn, forms_v, pole_bound)?;
    let (pconn, fp, h1p, np, pp) = match &conn.pairing {
        Pairing::SelfPaired { .. } => {
            if forms_partner.is_some() {
                return Err(Error::Input("partner forms are only meaningful for a dual pairing".into()));
            }
            (conn.clone(), fv.clone(), h1v, nv, pv.clone())
        }
        Pairing::Dual => {
            let dual = conn.dual();
            let (f, h, n, p) = choose_forms(&dual, forms_partner, pole_bound)?;
            (dual, f, h, n, p)
        }
    };
    if fv.len() != fp.len() {
        return Err(Error::CannotCertify(format!("middle dimensions differ: {} and {}", fv.len(), fp.len())));
    }
    let cv = lift_deep(conn, &fv, &fp, truncation)?;
    let cp = lift_deep(&pconn, &fp, &fv, truncation)?;
    let s = s_matrix(conn, &cv, &fp)?;
    if !fv.is_empty() && num_traits::Zero::is_zero(&s.determinant) {
        return Err(Error::CannotCertify("the pairing matrix S is singular".into()));
    }
    Ok(MiddleData {
        v: MiddleSide { conn: conn.clone(), forms: fv, classes: cv, h1_dimension: h1v, pole_bound: nv, basis_policy: pv },
        partner: MiddleSide { conn: pconn, forms: fp, classes: cp, h1_dimension: h1p, pole_bound: np, basis_policy: pp },
        s,
    })
}

/// `K` in `<y, w> = y . (K w)` for sections of the given side.
fn pairing_matrix(conn: &Connection, side: Side) -> Option<RatMatrix> {
    match (&conn.pairing, side) {
        (Pairing::SelfPaired { g, .. }, Side::V) => Some(g.clone()),
        (Pairing::SelfPaired { g, .. }, Side::Partner) => Some(g.transpose()),
        (Pairing::Dual, _) => None,
    }
}

/// Integrands for chains of one side: the other side's forms, with the other side's primitives.
fn integrands(k: Option<&RatMatrix>, other: &MiddleSide) -> Vec<Integrand> {
    other
        .classes
        .iter()
        .map(|c| Integrand {
            form: match k {
                Some(k) => k.mul_vec(&c.form),
                None => c.form.clone(),
            },
            primitives: other.conn.singular.iter().cloned().zip(c.primitives.iter().map(|p| p.series.clone())).collect(),
        })
        .collect()
}

/// The two sides of a pairing as numerical contexts.
pub struct Contexts {
    pub v: SideContext,
    pub partner: SideContext,
    pub v_integrands: Vec<Integrand>,
    pub partner_integrands: Vec<Integrand>,
}

impl Contexts {
    pub fn new(md: &MiddleData, policy: &PrecisionPolicy) -> Self {
        let base = &md.v.conn;
        let kv = pairing_matrix(base, Side::V);
        let kp = pairing_matrix(base, Side::Partner);
        Contexts {
            v_integrands: integrands(kv.as_ref(), &md.partner),
            partner_integrands: integrands(kp.as_ref(), &md.v),
            v: SideContext::new(md.v.conn.clone(), kv.as_ref(), policy.clone()),
            partner: SideContext::new(md.partner.conn.clone(), kp.as_ref(), policy.clone()),
        }
    }

    /// Contexts without forms, for section values only.
    pub fn bare(conn: &Connection, policy: &PrecisionPolicy) -> Self {
        let kv = pairing_matrix(conn, Side::V);
        let kp = pairing_matrix(conn, Side::Partner);
        let pconn = match conn.pairing {
            Pairing::SelfPaired { .. } => conn.clone(),
            Pairing::Dual => conn.dual(),
        };
        Contexts {
            v_integrands: Vec::new(),
            partner_integrands: Vec::new(),
            v: SideContext::new(conn.clone(), kv.as_ref(), policy.clone()),
            partner: SideContext::new(pconn, kp.as_ref(), policy.clone()),
        }
    }

    /// Evaluates the cycles of both sides.
    pub fn evaluate(&mut self, vc: &[CycleSpec], pc: &[CycleSpec], vs: &StopMap, ps: &StopMap) -> Result<(SideEvals, SideEvals)> {
        let ve = evaluate_side(&mut self.v, &self.v_integrands, vc, vs)?;
        let pe = evaluate_side(&mut self.partner, &self.partner_integrands, pc, ps)?;
        Ok((ve, pe))
    }

    pub fn side(&mut self, s: Side) -> (&mut SideContext, &[Integrand]) {
        match s {
            Side::V => (&mut self.v, &self.v_integrands),
            Side::Partner => (&mut self.partner, &self.partner_integrands),
        }
    }
}

/// The cycles used on each side: in self mode the same list serves both.
pub fn cycle_lists(conn: &Connection, cycles: &[CycleSpec]) -> Result<(Vec<CycleSpec>, Vec<CycleSpec>)> {
    let v: Vec<CycleSpec> = cycles.iter().filter(|c| c.side == Side::V).cloned().collect();
    let p: Vec<CycleSpec> = cycles.iter().filter(|c| c.side == Side::Partner).cloned().collect();
    match conn.pairing {
        Pairing::SelfPaired { .. } => {
            if !p.is_empty() {
                return Err(Error::Input("a self-paired connection takes only 'side V' cycles".into()));
            }
            let mut pp = v.clone();
            for c in &mut pp {
                c.side = Side::Partner;
            }
            Ok((v, pp))
        }
        Pairing::Dual => Ok((v, p)),
    }
}

/// Requested parameters `[(cycle, class)][segment]`.
pub type StopMap = BTreeMap<(usize, GrowthClass), Vec<Vec<f64>>>;

/// A period with both finite-part recipes and their certificates.
#[derive(Clone, Debug)]
pub struct PeriodEntry {
    pub rd: Option<Complex>,
    pub moderate: Option<Complex>,
    /// `|F(eps) - F(eps/2)|` at the smallest offset of the boundary-term recipe.
    pub halving: Option<f64>,
}

impl PeriodEntry {
    pub fn value(&self) -> &Complex {
        self.rd.as_ref().or(self.moderate.as_ref()).expect("at least one recipe")
    }

    pub fn agreement(&self) -> Option<f64> {
        match (&self.rd, &self.moderate) {
            (Some(a), Some(b)) => Some(a.sub(b).abs_f64()),
            _ => None,
        }
    }
}

/// Evaluations of every cycle of one side.
pub struct SideEvals {
    pub rd: Vec<Option<ChainEval>>,
    pub moderate: Vec<Option<ChainEval>>,
}

impl SideEvals {
    pub fn entries(&self) -> Vec<Vec<PeriodEntry>> {
        self.rd
            .iter()
            .zip(&self.moderate)
            .map(|(r, m)| {
                let nf = r.as_ref().or(m.as_ref()).map_or(0, |e| e.values.len());
                (0..nf)
                    .map(|f| PeriodEntry {
                        rd: r.as_ref().map(|e| e.value(f).clone()),
                        moderate: m.as_ref().map(|e| e.value(f).clone()),
                        halving: m.as_ref().and_then(|e| e.halving_spread(f).last().copied()),
                    })
                    .collect()
            })
            .collect()
    }
}

fn cycle_chain<'a>(c: &'a CycleSpec, class: GrowthClass) -> Result<&'a TwistedChain> {
    c.chain(class).ok_or_else(|| Error::Input(format!("cycle {} needs a {class} representative", c.name)))
}

/// Evaluates the cycles of one side on both representatives, recording section values at
/// the requested parameters `stops[cycle][class][segment]`.
pub fn evaluate_side(
    ctx: &mut SideContext,
    integrands: &[Integrand],
    cycles: &[CycleSpec],
    stops: &StopMap,
) -> Result<SideEvals> {
    let mut rd = Vec::new();
    let mut moderate = Vec::new();
    for (i, c) in cycles.iter().enumerate() {
        for class in [GrowthClass::Rd, GrowthClass::Mod] {
            let e = match c.chain(class) {
                Some(ch) => {
                    let st = stops.get(&(i, class)).cloned().unwrap_or_default();
                    Some(ctx.eval_chain(ch, integrands, &st).map_err(|e| in_cycle(e, &c.name, class))?)
                }
                None => None,
            };
            match class {
                GrowthClass::Rd => rd.push(e),
                GrowthClass::Mod => moderate.push(e),
            }
        }
    }
    Ok(SideEvals { rd, moderate })
}

fn in_cycle(e: Error, name: &str, class: GrowthClass) -> Error {
    match e {
        Error::Input(m) => Error::Input(format!("cycle {name} ({class}): {m}")),
        other => other,
    }
}

/// A crossing between the mod representative of a `V` cycle and the rd representative of a partner cycle.
#[derive(Clone, Debug, Serialize)]
pub struct CrossingRecord {
    pub v_cycle: usize,
    pub partner_cycle: usize,
    pub point: (f64, f64),
    pub epsilon: i32,
    /// `<v, w>` at the crossing, as (re, im).
    #[serde(skip)]
    pub pairing: Option<Complex>,
}

/// `B[i][j] = sum eps <v_i, w_j>` over crossings.
/// The cycles are evaluated once, with stops at the crossings; the evaluations are returned.
pub fn intersection_matrix(ctxs: &mut Contexts, v_cycles: &[CycleSpec], p_cycles: &[CycleSpec]) -> Result<(CMat, Vec<CrossingRecord>, SideEvals, SideEvals)> {
    let singular = ctxs.v.conn.singular.clone();
    let prec = ctxs.v.prec();
    let mut raw = Vec::new();
    let mut vstops: StopMap = BTreeMap::new();
    let mut pstops: StopMap = BTreeMap::new();
    for (i, vc) in v_cycles.iter().enumerate() {
        let a = cycle_chain(vc, GrowthClass::Mod)?;
        for (j, pc) in p_cycles.iter().enumerate() {
            let b = cycle_chain(pc, GrowthClass::Rd)?;
            let xs = crossings(a, b, &singular).map_err(|e| match e {
                Error::NotInGeneralPosition(mut v) => {
                    for m in &mut v {
                        *m = format!("{} (mod) x {} (rd): {m}", vc.name, pc.name);
                    }
                    Error::NotInGeneralPosition(v)
                }
                other => other,
            })?;
            for x in xs {
                let sa = vstops.entry((i, GrowthClass::Mod)).or_insert_with(|| vec![Vec::new(); a.segments.len()]);
                sa[x.seg_a].push(x.s_a);
                let sb = pstops.entry((j, GrowthClass::Rd)).or_insert_with(|| vec![Vec::new(); b.segments.len()]);
                sb[x.seg_b].push(x.s_b);
                raw.push((i, j, x));
            }
        }
    }
    let (ve, pe) = ctxs.evaluate(v_cycles, p_cycles, &vstops, &pstops)?;
    let find = |evals: &SideEvals, class: GrowthClass, cyc: usize, seg: usize, s: f64, stops: &StopMap| {
        let e = match class {
            GrowthClass::Rd => evals.rd[cyc].as_ref(),
            GrowthClass::Mod => evals.moderate[cyc].as_ref(),
        }
        .expect("evaluated");
        let k = stops[&(cyc, class)][seg].iter().position(|t| *t == s).expect("requested stop");
        e.segments[seg].stops[k].clone()
    };
    let d_v = v_cycles.len();
    let d_p = p_cycles.len();
    let mut b = CMat::zeros(d_v, d_p, prec);
    let mut records = Vec::new();
    for (i, j, x) in raw {
        let (za, v) = find(&ve, GrowthClass::Mod, i, x.seg_a, x.s_a, &vstops);
        let (zb, w) = find(&pe, GrowthClass::Rd, j, x.seg_b, x.s_b, &pstops);
        // the two parameters give the crossing to double precision; move w onto z_a
        let w = if zb.sub(&za).abs_f64() > 0.0 {
            let path = Path::Line { a: zb.clone(), b: za.clone() };
            ctxs.partner.sys.walk(&path, 0.0, Until::Param(1.0), &w, &[], &[], &ctxs.partner.policy)?.y
        } else {
            w
        };
        let pv = ctxs.v.pair(&v, &w, &za);
        let mut e = b.get(i, j).clone();
        if x.epsilon > 0 {
            e.add_assign(&pv);
        } else {
            e.sub_assign(&pv);
        }
        b.set(i, j, e);
        records.push(CrossingRecord { v_cycle: i, partner_cycle: j, point: x.point, epsilon: x.epsilon, pairing: Some(pv) });
    }
    Ok((b, records, ve, pe))
}

/// `max |c B - P1 S^-1 P2^T|` and `max |P1 S^-1 P2^T|`.
pub fn relation_residual(b: &CMat, p1: &CMat, s: &CMat, p2: &CMat, c: &Complex) -> Result<(f64, f64)> {
    let rhs = p1.matmul(&solve_right(s, &p2.transpose())?);
    Ok((b.scale(c).sub(&rhs).max_abs(), rhs.max_abs()))
}

/// `S^-1 M`, column by column.
fn solve_right(s: &CMat, m: &CMat) -> Result<CMat> {
    let mut out = CMat::zeros(m.rows, m.cols, m.data.first().map_or(64, |c| c.prec()));
    for c in 0..m.cols {
        let col: Vec<Complex> = (0..m.rows).map(|r| m.get(r, c).clone()).collect();
        let x = s.solve(&col).map_err(|_| Error::CannotCertify("the pairing matrix S is singular".into()))?;
        for (r, v) in x.into_iter().enumerate() {
            out.set(r, c, v);
        }
    }
    Ok(out)
}

/// The general identity `sign (-1)^{r(m-r)} 2 pi i B = P1 S^-1 P2^T` (the parity factor only
/// when `symmetric`); returns the max-norm residual.
#[allow(clippy::too_many_arguments)]
pub fn check_general_relation(b: &CMat, p1: &CMat, s: &CMat, p2: &CMat, r: i64, m: i64, sign: i32, symmetric: bool) -> Result<f64> {
    if p1.cols != s.rows || s.rows != s.cols || p2.cols != s.cols || b.rows != p1.rows || b.cols != p2.rows {
        return Err(Error::Input("matrix dimensions are incompatible".into()));
    }
    let prec = s.data.first().map_or(64, |c| c.prec());
    let mut k = sign as i64;
    if symmetric && (r * (m - r)) % 2 != 0 {
        k = -k;
    }
    let c = Complex::two_pi_i(prec).mul_i64(k);
    Ok(relation_residual(b, p1, s, p2, &c)?.0)
}

/// Coordinates `P1 S^-1`: row `a` expresses cycle `a` in the basis of `V` classes, via the
/// S-dual basis of partner forms.
pub fn rational_structure(p1: &CMat, s: &CMat) -> Result<CMat> {
    Ok(solve_right(&s.transpose(), &p1.transpose())?.transpose())
}

/// The frozen sign per pairing class; `None` where no calibration fixes it.
pub fn frozen_sign(pairing: &Pairing) -> Option<i32> {
    match pairing {
        Pairing::Dual => Some(-1),
        Pairing::SelfPaired { sign: -1, .. } => Some(-1),
        Pairing::SelfPaired { .. } => None,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub what: String,
    pub value: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MatrixReport {
    pub rows: usize,
    pub cols: usize,
    /// `[row][col] = [re, im]` as decimal strings.
    pub entries: Vec<Vec<[String; 2]>>,
}

impl MatrixReport {
    pub fn new(m: &CMat, digits: usize) -> Self {
        MatrixReport {
            rows: m.rows,
            cols: m.cols,
            entries: m.to_rows().iter().map(|r| r.iter().map(|c| decimal(c, digits)).collect()).collect(),
        }
    }
}

pub fn decimal(c: &Complex, digits: usize) -> [String; 2] {
    let (a, b) = c.to_decimal(digits);
    [a, b]
}

#[derive(Clone, Debug, Serialize)]
pub struct SideReport {
    pub h1_dimension: usize,
    pub pole_bound: u32,
    pub basis_policy: String,
    pub forms: Vec<Vec<String>>,
    /// Truncation order of the formal primitives at each point, per class.
    pub truncations: Vec<BTreeMap<String, i64>>,
}

impl SideReport {
    pub fn new(s: &MiddleSide) -> Self {
        SideReport {
            h1_dimension: s.h1_dimension,
            pole_bound: s.pole_bound,
            basis_policy: s.basis_policy.clone(),
            forms: s.forms.iter().map(|f| f.iter().map(|x| x.to_string()).collect()).collect(),
            truncations: s
                .classes
                .iter()
                .map(|c| c.primitives.iter().map(|p| (p.point.to_string(), p.series.order)).collect())
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairingReport {
    pub name: String,
    pub pairing: String,
    pub dimension: usize,
    pub v: Option<SideReport>,
    pub partner: Option<SideReport>,
    pub s: Option<PairingMatrixS>,
    /// Periods of `V` cycles against partner forms (rd recipe where available).
    pub p1: MatrixReport,
    pub p2: MatrixReport,
    /// The same periods by the boundary-term recipe on mod representatives.
    pub p1_mod: MatrixReport,
    pub p2_mod: MatrixReport,
    pub b: MatrixReport,
    pub crossings: Vec<CrossingRecord>,
    pub sign: i32,
    pub sign_source: String,
    pub residual: f64,
    pub residual_other_sign: f64,
    pub relative_residual: f64,
    pub threshold: f64,
    pub condition_s: f64,
    pub rational_structure: MatrixReport,
    pub certificates: Vec<Certificate>,
    pub policy: PrecisionPolicy,
    pub pass: bool,
}

fn empty_matrix() -> MatrixReport {
    MatrixReport { rows: 0, cols: 0, entries: Vec::new() }
}

fn entries_matrix(entries: &[Vec<PeriodEntry>], pick: impl Fn(&PeriodEntry) -> Option<Complex>, d: usize, prec: u32) -> CMat {
    CMat::from_fn(entries.len(), d, |i, j| pick(&entries[i][j]).unwrap_or_else(|| Complex::zero(prec)))
}

/// Offset-halving and recipe-agreement certificates of every period.
pub fn period_certificates(e1: &[Vec<PeriodEntry>], e2: &[Vec<PeriodEntry>], vc: &[CycleSpec], pc: &[CycleSpec], tau: f64) -> Vec<Certificate> {
    let mut certs = Vec::new();
    for (label, ents, cycles) in [("P1", e1, vc), ("P2", e2, pc)] {
        for (i, row) in ents.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                if let Some(h) = e.halving {
                    certs.push(Certificate {
                        what: format!("{label}[{i}][{j}] ({}) offset halving", cycles[i].name),
                        value: h,
                        bound: tau,
                        ok: h <= tau,
                    });
                }
                if let Some(a) = e.agreement() {
                    certs.push(Certificate {
                        what: format!("{label}[{i}][{j}] ({}) rd vs mod recipe", cycles[i].name),
                        value: a,
                        bound: 2.0 * tau,
                        ok: a <= 2.0 * tau,
                    });
                }
            }
        }
    }
    certs
}

/// Max-row-sum condition estimate `|S| |S^-1|` at working precision.
fn condition(s: &CMat) -> f64 {
    let n = s.rows;
    if n == 0 {
        return 1.0;
    }
    let id = CMat::from_fn(n, n, |r, c| if r == c { Complex::one(s.get(0, 0).prec()) } else { Complex::zero(s.get(0, 0).prec()) });
    let norm = |m: &CMat| (0..m.rows).map(|r| (0..m.cols).map(|c| m.get(r, c).abs_f64()).sum::<f64>()).fold(0.0, f64::max);
    match solve_right(s, &id) {
        Ok(inv) => norm(s) * norm(&inv),
        Err(_) => f64::INFINITY,
    }
}

/// Runs the whole middle-dimension pipeline on a scenario.
pub fn verify_middle(scn: &Scenario) -> Result<PairingReport> {
    let conn = &scn.connection;
    let policy = scn.policy.clone();
    let md = middle_data(conn, scn.forms_v.as_deref(), scn.forms_partner.as_deref(), scn.pole_bound, scn.truncation)?;
    let d = md.dimension();
    let digits = policy.digits as usize;
    if d == 0 {
        return Ok(PairingReport {
            name: scn.name.clone(),
            pairing: conn.pairing.class_name().into(),
            dimension: 0,
            v: Some(SideReport::new(&md.v)),
            partner: Some(SideReport::new(&md.partner)),
            s: Some(md.s.clone()),
            p1: empty_matrix(),
            p2: empty_matrix(),
            p1_mod: empty_matrix(),
            p2_mod: empty_matrix(),
            b: empty_matrix(),
            crossings: Vec::new(),
            sign: frozen_sign(&conn.pairing).unwrap_or(1),
            sign_source: "vacuous".into(),
            residual: 0.0,
            residual_other_sign: 0.0,
            relative_residual: 0.0,
            threshold: TAU_REL,
            condition_s: 1.0,
            rational_structure: empty_matrix(),
            certificates: Vec::new(),
            policy,
            pass: true,
        });
    }
    let (vc, pc) = cycle_lists(conn, &scn.cycles)?;
    if vc.len() != d || pc.len() != d {
        return Err(Error::Input(format!(
            "the middle dimension is {d}; got {} V cycles and {} partner cycles",
            vc.len(),
            pc.len()
        )));
    }
    let mut ctxs = Contexts::new(&md, &policy);
    let prec = ctxs.v.prec();
    let (b, records, ve, pe) = intersection_matrix(&mut ctxs, &vc, &pc)?;
    let e1 = ve.entries();
    let e2 = pe.entries();
    let certs = period_certificates(&e1, &e2, &vc, &pc, policy.tolerance);
    let p1 = entries_matrix(&e1, |e| Some(e.value().clone()), d, prec);
    let p2 = entries_matrix(&e2, |e| Some(e.value().clone()), d, prec);
    let p1m = entries_matrix(&e1, |e| e.moderate.clone(), d, prec);
    let p2m = entries_matrix(&e2, |e| e.moderate.clone(), d, prec);
    let s = CMat::from_exact(&md.s.entries, prec);
    let two_pi_i = Complex::two_pi_i(prec);
    let (r_plus, scale) = relation_residual(&b, &p1, &s, &p2, &two_pi_i)?;
    let (r_minus, _) = relation_residual(&b, &p1, &s, &p2, &two_pi_i.neg())?;
    let (sign, sign_source) = match frozen_sign(&conn.pairing) {
        Some(sg) => (sg, "frozen".to_string()),
        None => (if r_plus <= r_minus { 1 } else { -1 }, "resolved".to_string()),
    };
    let (residual, other) = if sign > 0 { (r_plus, r_minus) } else { (r_minus, r_plus) };
    let relative = residual / scale.max(f64::MIN_POSITIVE);
    let pass = relative <= TAU_REL && certs.iter().all(|c| c.ok);
    let rs = rational_structure(&p1, &s)?;
    Ok(PairingReport {
        name: scn.name.clone(),
        pairing: conn.pairing.class_name().into(),
        dimension: d,
        v: Some(SideReport::new(&md.v)),
        partner: Some(SideReport::new(&md.partner)),
        s: Some(md.s.clone()),
        p1: MatrixReport::new(&p1, digits),
        p2: MatrixReport::new(&p2, digits),
        p1_mod: MatrixReport::new(&p1m, digits),
        p2_mod: MatrixReport::new(&p2m, digits),
        b: MatrixReport::new(&b, digits),
        crossings: records,
        sign,
        sign_source,
        residual,
        residual_other_sign: other,
        relative_residual: relative,
        threshold: TAU_REL,
        condition_s: condition(&s),
        rational_structure: MatrixReport::new(&rs, digits),
        certificates: certs,
        policy,
        pass,
    })
}

/// Outcome of validating one representative of a cycle.
#[derive(Clone, Debug, Serialize)]
pub struct CycleCheck {
    pub name: String,
    pub side: Side,
    pub class: GrowthClass,
    pub segments: usize,
    /// Largest `|sum in - sum out|` of section values over vertices outside `D`.
    pub defect: f64,
    pub ok: bool,
    pub error_kind: Option<String>,
    pub error: Option<String>,
}

/// Cycle condition at interior vertices and admissibility at singular endpoints.
pub fn validate_cycle(ctx: &mut SideContext, spec: &CycleSpec, class: GrowthClass) -> Result<CycleCheck> {
    let chain = cycle_chain(spec, class)?;
    let mut check = CycleCheck {
        name: spec.name.clone(),
        side: spec.side,
        class,
        segments: chain.segments.len(),
        defect: 0.0,
        ok: true,
        error_kind: None,
        error: None,
    };
    let ev = match ctx.eval_chain(chain, &[], &[]) {
        Ok(ev) => ev,
        Err(e) if e.is_input_error() => return Err(in_cycle(e, &spec.name, class)),
        Err(e) => {
            check.ok = false;
            check.error_kind = Some(e.kind().into());
            check.error = Some(e.to_string());
            return Ok(check);
        }
    };
    let prec = ctx.prec();
    let tol = ctx.policy.tolerance;
    let mut vertices: Vec<((f64, f64), Vec<Complex>)> = Vec::new();
    let mut scale = 0.0f64;
    let mut add = |z: Complex, y: &[Complex], sign: i64| {
        let key = z.to_f64();
        let k = match vertices.iter().position(|(p, _)| (p.0 - key.0).hypot(p.1 - key.1) <= 1e-12 * (1.0 + key.0.hypot(key.1))) {
            Some(k) => k,
            None => {
                vertices.push((key, vec![Complex::zero(prec); y.len()]));
                vertices.len() - 1
            }
        };
        for (a, b) in vertices[k].1.iter_mut().zip(y) {
            a.add_assign(&b.mul_i64(sign));
        }
    };
    for (seg, e) in chain.segments.iter().zip(&ev.segments) {
        let sp = seg.geometry.seg_path(prec)?;
        if let Some(y) = &e.start_value {
            scale = scale.max(Complex::max_abs(y));
            add(sp.path.point(sp.s_start, prec), y, -1);
        }
        if let Some(y) = &e.end_value {
            scale = scale.max(Complex::max_abs(y));
            add(sp.path.point(sp.s_end, prec), y, 1);
        }
    }
    for (p, v) in &vertices {
        let d = Complex::max_abs(v);
        check.defect = check.defect.max(d);
        if d > tol * scale.max(1.0) && check.ok {
            let e = Error::CycleConditionViolated { vertex: format!("{}+{}i", p.0, p.1), defect: d };
            check.ok = false;
            check.error_kind = Some(e.kind().into());
            check.error = Some(e.to_string());
        }
    }
    Ok(check)
}

/// Validates every representative of every cycle of a scenario.
pub fn validate_cycles(scn: &Scenario) -> Result<Vec<CycleCheck>> {
    let mut ctxs = Contexts::bare(&scn.connection, &scn.policy);
    let mut out = Vec::new();
    for c in &scn.cycles {
        for class in [GrowthClass::Rd, GrowthClass::Mod] {
            if c.chain(class).is_some() {
                let (ctx, _) = ctxs.side(c.side);
                out.push(validate_cycle(ctx, c, class)?);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct BettiReport {
    pub name: String,
    pub pairing: String,
    pub cycles: Vec<CycleCheck>,
    pub v_cycles: Vec<String>,
    pub partner_cycles: Vec<String>,
    pub b: MatrixReport,
    pub crossings: Vec<CrossingRecord>,
    pub pass: bool,
}

/// Cycle validation and the intersection matrix, without any forms.
pub fn betti_report(scn: &Scenario) -> Result<BettiReport> {
    let conn = &scn.connection;
    let cycles = validate_cycles(scn)?;
    let (vc, pc) = cycle_lists(conn, &scn.cycles)?;
    let mut ctxs = Contexts::bare(conn, &scn.policy);
    let all_ok = cycles.iter().all(|c| c.ok);
    let (b, crossings) = if all_ok {
        let (b, r, _, _) = intersection_matrix(&mut ctxs, &vc, &pc)?;
        (MatrixReport::new(&b, scn.policy.digits as usize), r)
    } else {
        (empty_matrix(), Vec::new())
    };
    Ok(BettiReport {
        name: scn.name.clone(),
        pairing: conn.pairing.class_name().into(),
        cycles,
        v_cycles: vc.iter().map(|c| c.name.clone()).collect(),
        partner_cycles: pc.iter().map(|c| c.name.clone()).collect(),
        b,
        crossings,
        pass: all_ok,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodsReport {
    pub name: String,
    pub dimension: usize,
    pub p1: MatrixReport,
    pub p2: MatrixReport,
    pub p1_mod: MatrixReport,
    pub p2_mod: MatrixReport,
    pub certificates: Vec<Certificate>,
    pub policy: PrecisionPolicy,
    pub pass: bool,
}

/// Both period matrices by both finite-part recipes, with their certificates.
pub fn periods_report(scn: &Scenario) -> Result<PeriodsReport> {
    let conn = &scn.connection;
    let policy = scn.policy.clone();
    let md = middle_data(conn, scn.forms_v.as_deref(), scn.forms_partner.as_deref(), scn.pole_bound, scn.truncation)?;
    let d = md.dimension();
    let (vc, pc) = cycle_lists(conn, &scn.cycles)?;
    let mut ctxs = Contexts::new(&md, &policy);
    let prec = ctxs.v.prec();
    let (ve, pe) = ctxs.evaluate(&vc, &pc, &StopMap::new(), &StopMap::new())?;
    let (e1, e2) = (ve.entries(), pe.entries());
    let certificates = period_certificates(&e1, &e2, &vc, &pc, policy.tolerance);
    let digits = policy.digits as usize;
    let m = |e: &[Vec<PeriodEntry>], f: &dyn Fn(&PeriodEntry) -> Option<Complex>| MatrixReport::new(&entries_matrix(e, f, d, prec), digits);
    Ok(PeriodsReport {
        name: scn.name.clone(),
        dimension: d,
        p1: m(&e1, &|e| Some(e.value().clone())),
        p2: m(&e2, &|e| Some(e.value().clone())),
        p1_mod: m(&e1, &|e| e.moderate.clone()),
        p2_mod: m(&e2, &|e| e.moderate.clone()),
        pass: certificates.iter().all(|c| c.ok),
        certificates,
        policy,
    })
}
