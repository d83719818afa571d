//! Reports for each pipeline stage, as serializable structures and plain-text tables.

use std::fmt::Write as _;

use serde::Serialize;

use crate::betti::{stokes_sectors, StokesSectorChart};
use crate::derham::{h1_basis, H1Basis, PairingMatrixS};
use crate::formal::local_model;
use crate::relations::{middle_data, BettiReport, Certificate, CycleCheck, MatrixReport, PairingReport, PeriodsReport, SideReport};
use crate::scenario::Scenario;
use crate::Result;

#[derive(Clone, Debug, Serialize)]
pub struct FactorReport {
    pub phi: Vec<String>,
    pub multiplicity: usize,
    pub exponents: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalPointReport {
    pub point: String,
    pub regular: bool,
    pub pole_order: i64,
    /// Newton polygon slopes with multiplicities.
    pub slopes: Vec<(String, usize)>,
    pub irregularity: String,
    pub factors: Option<Vec<FactorReport>>,
    pub note: Option<String>,
    pub sectors: Option<StokesSectorChart>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalReport {
    pub name: String,
    pub rank: usize,
    pub points: Vec<LocalPointReport>,
}

pub fn local_report(scn: &Scenario) -> Result<LocalReport> {
    let conn = &scn.connection;
    let mut points = Vec::new();
    for x in &conn.singular {
        let m = local_model(conn, x)?;
        let sectors = if m.factors.is_some() { Some(stokes_sectors(conn, x)?) } else { None };
        points.push(LocalPointReport {
            point: x.to_string(),
            regular: m.newton.is_regular(),
            pole_order: m.pole_order,
            slopes: m.newton.slopes.iter().map(|(s, k)| (s.to_string(), *k)).collect(),
            irregularity: m.newton.irregularity.to_string(),
            factors: m.factors.as_ref().map(|fs| {
                fs.iter()
                    .map(|f| FactorReport {
                        phi: f.phi.iter().map(|c| c.to_string()).collect(),
                        multiplicity: f.multiplicity,
                        exponents: f.exponents.iter().map(|c| c.to_string()).collect(),
                    })
                    .collect()
            }),
            note: m.note.clone(),
            sectors,
        });
    }
    Ok(LocalReport { name: scn.name.clone(), rank: conn.rank(), points })
}

#[derive(Clone, Debug, Serialize)]
pub struct CohomologyReport {
    pub name: String,
    pub rank: usize,
    pub pairing: String,
    pub h1: H1Basis,
    pub representatives: Vec<Vec<String>>,
    pub middle_dimension: usize,
    pub v: SideReport,
    pub partner: SideReport,
    pub s: PairingMatrixS,
}

pub fn cohomology_report(scn: &Scenario) -> Result<CohomologyReport> {
    let conn = &scn.connection;
    let h1 = h1_basis(conn, scn.pole_bound)?;
    let md = middle_data(conn, scn.forms_v.as_deref(), scn.forms_partner.as_deref(), scn.pole_bound, scn.truncation)?;
    Ok(CohomologyReport {
        name: scn.name.clone(),
        rank: conn.rank(),
        pairing: conn.pairing.class_name().into(),
        representatives: h1.representatives.iter().map(|f| f.iter().map(|x| x.to_string()).collect()).collect(),
        h1,
        middle_dimension: md.dimension(),
        v: SideReport::new(&md.v),
        partner: SideReport::new(&md.partner),
        s: md.s,
    })
}

/// Short rendering of a decimal pair.
fn short(e: &[String; 2]) -> String {
    let f = |s: &str| s.parse::<f64>().unwrap_or(f64::NAN);
    let (a, b) = (f(&e[0]), f(&e[1]));
    if b == 0.0 {
        format!("{a:.15e}")
    } else {
        format!("{a:.15e} {} {:.15e}i", if b < 0.0 { '-' } else { '+' }, b.abs())
    }
}

fn matrix(out: &mut String, label: &str, m: &MatrixReport) {
    let _ = writeln!(out, "{label} ({}x{}):", m.rows, m.cols);
    for r in &m.entries {
        let row: Vec<String> = r.iter().map(short).collect();
        let _ = writeln!(out, "  [{}]", row.join(", "));
    }
}

fn exact_matrix(out: &mut String, label: &str, rows: &[Vec<String>]) {
    let _ = writeln!(out, "{label}:");
    for r in rows {
        let _ = writeln!(out, "  [{}]", r.join(", "));
    }
}

fn certificates(out: &mut String, cs: &[Certificate]) {
    if cs.is_empty() {
        return;
    }
    let _ = writeln!(out, "certificates:");
    for c in cs {
        let _ = writeln!(out, "  {:<4} {:<44} {:.3e} <= {:.1e}", if c.ok { "ok" } else { "FAIL" }, c.what, c.value, c.bound);
    }
}

fn cycle_checks(out: &mut String, cs: &[CycleCheck]) {
    let _ = writeln!(out, "cycles:");
    for c in cs {
        let _ = write!(out, "  {:<4} {:<12} {:<8} {:<4} segments {:<3} defect {:.2e}", if c.ok { "ok" } else { "FAIL" }, c.name, format!("{:?}", c.side).to_lowercase(), c.class, c.segments, c.defect);
        if let Some(e) = &c.error {
            let _ = write!(out, "  {e}");
        }
        let _ = writeln!(out);
    }
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub trait TextTable {
    fn text(&self) -> String;
}

impl TextTable for LocalReport {
    fn text(&self) -> String {
        let mut out = format!("scenario {} (rank {})\n", self.name, self.rank);
        for p in &self.points {
            let slopes: Vec<String> = p.slopes.iter().map(|(s, k)| format!("{s} x{k}")).collect();
            let _ = writeln!(
                out,
                "point {}: {} pole order {}, slopes [{}], irregularity {}",
                p.point,
                if p.regular { "regular singular," } else { "irregular," },
                p.pole_order,
                slopes.join(", "),
                p.irregularity
            );
            for f in p.factors.iter().flatten() {
                let _ = writeln!(out, "  factor phi = [{}] multiplicity {} exponents [{}]", f.phi.join(", "), f.multiplicity, f.exponents.join(", "));
            }
            if let Some(n) = &p.note {
                let _ = writeln!(out, "  note: {n}");
            }
            for fs in p.sectors.iter().flat_map(|s| &s.factors) {
                if fs.rd_arcs.is_empty() {
                    continue;
                }
                let arcs: Vec<String> = fs.rd_arcs.iter().map(|a| format!("({}, {})", a.from, a.to)).collect();
                let _ = writeln!(out, "  rapid decay for phi = [{}]: {}", fs.phi.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", "), arcs.join(" "));
            }
        }
        out
    }
}

impl TextTable for CohomologyReport {
    fn text(&self) -> String {
        let mut out = format!("scenario {} (rank {}, {} pairing)\n", self.name, self.rank, self.pairing);
        let _ = writeln!(
            out,
            "h1 = {} (expected {}, pole bound {}, stable {:?}, h0 = {})",
            self.h1.dimension, self.h1.expected, self.h1.pole_bound, self.h1.stability, self.h1.h0
        );
        exact_matrix(&mut out, "representatives", &self.representatives);
        let _ = writeln!(out, "middle dimension {}", self.middle_dimension);
        let _ = writeln!(out, "V basis ({}):", self.v.basis_policy);
        exact_matrix(&mut out, "  forms", &self.v.forms);
        let _ = writeln!(out, "partner basis ({}):", self.partner.basis_policy);
        exact_matrix(&mut out, "  forms", &self.partner.forms);
        let rows: Vec<Vec<String>> = self.s.entries.to_rows().iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
        exact_matrix(&mut out, "S", &rows);
        let _ = writeln!(out, "det S = {}", self.s.determinant);
        out
    }
}

impl TextTable for BettiReport {
    fn text(&self) -> String {
        let mut out = format!("scenario {} ({} pairing)\n", self.name, self.pairing);
        cycle_checks(&mut out, &self.cycles);
        let _ = writeln!(out, "rows (V, mod): {}", self.v_cycles.join(", "));
        let _ = writeln!(out, "columns (partner, rd): {}", self.partner_cycles.join(", "));
        matrix(&mut out, "B", &self.b);
        for c in &self.crossings {
            let _ = writeln!(out, "  crossing {} x {} at ({:.6}, {:.6}) sign {:+}", c.v_cycle, c.partner_cycle, c.point.0, c.point.1, c.epsilon);
        }
        let _ = writeln!(out, "status: {}", status(self.pass));
        out
    }
}

impl TextTable for PeriodsReport {
    fn text(&self) -> String {
        let mut out = format!("scenario {} (middle dimension {})\n", self.name, self.dimension);
        matrix(&mut out, "P1 (V cycles x partner forms)", &self.p1);
        matrix(&mut out, "P2 (partner cycles x V forms)", &self.p2);
        certificates(&mut out, &self.certificates);
        let _ = writeln!(out, "status: {}", status(self.pass));
        out
    }
}

impl TextTable for PairingReport {
    fn text(&self) -> String {
        let mut out = format!("scenario {} ({} pairing, middle dimension {})\n", self.name, self.pairing, self.dimension);
        if let Some(s) = &self.s {
            let rows: Vec<Vec<String>> = s.entries.to_rows().iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
            exact_matrix(&mut out, "S", &rows);
        }
        matrix(&mut out, "P1", &self.p1);
        matrix(&mut out, "P2", &self.p2);
        matrix(&mut out, "B", &self.b);
        certificates(&mut out, &self.certificates);
        let _ = writeln!(out, "sign {:+} ({})", self.sign, self.sign_source);
        let _ = writeln!(out, "residual {:.3e} (other sign {:.3e})", self.residual, self.residual_other_sign);
        let _ = writeln!(out, "relative residual {:.3e} (threshold {:.0e})", self.relative_residual, self.threshold);
        let _ = writeln!(out, "condition of S {:.3e}", self.condition_s);
        let _ = writeln!(out, "status: {}", status(self.pass));
        out
    }
}
