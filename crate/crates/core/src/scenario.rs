//! The line-oriented scenario format.
//!
//! ```text
//! format_version 1
//! name kummer
//! matrix
//!   [1/3/z - 1]
//! end
//! singular 0 inf
//! pairing dual
//! precision 50
//! cycle gamma side V
//!   rd
//!     line 0 -> inf@0
//!     section at 1 vector [exp(-1)]
//!   end
//! end
//! ```
//!
//! Rows, vectors and forms are bracketed, comma-separated expressions. Angles are
//! written as multiples of `pi` (`1/2pi`, `-pi`, `2pi`). `#` starts a comment.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::betti::{Anchor, Coefficient, CycleSpec, Endpoint, Geometry, GrowthClass, Segment, Side, TwistedChain};
use crate::connection::{Connection, Form, Pairing};
use crate::exact::{Mat, Point, RatFun, Scalar};
use crate::expr::{parse, Expr};
use crate::numeric::PrecisionPolicy;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub connection: Connection,
    pub forms_v: Option<Vec<Form>>,
    pub forms_partner: Option<Vec<Form>>,
    pub policy: PrecisionPolicy,
    pub pole_bound: Option<u32>,
    pub truncation: Option<i64>,
    pub cycles: Vec<CycleSpec>,
}

struct Line<'a> {
    no: usize,
    indent: usize,
    text: &'a str,
}

impl Line<'_> {
    fn err(&self, col: usize, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.no, col: self.indent + col + 1, msg: msg.into() }
    }

    fn keyword(&self) -> &str {
        self.text.split_whitespace().next().unwrap_or("")
    }

    /// Text after the keyword, with its column.
    fn rest(&self) -> (usize, &str) {
        let k = self.keyword().len();
        let r = &self.text[k..];
        let trimmed = r.trim_start();
        (k + r.len() - trimmed.len(), trimmed.trim_end())
    }
}

fn lines(src: &str) -> Vec<Line<'_>> {
    src.lines()
        .enumerate()
        .filter_map(|(i, l)| {
            let l = match l.find('#') {
                Some(k) => &l[..k],
                None => l,
            };
            let t = l.trim_start();
            if t.trim().is_empty() {
                return None;
            }
            Some(Line { no: i + 1, indent: l.len() - t.len(), text: t.trim_end() })
        })
        .collect()
}

fn expr_at(line: &Line, col: usize, s: &str) -> Result<Expr> {
    parse(s).map_err(|e| line.err(col + e.offset, e.msg))
}

fn ratfun_at(line: &Line, col: usize, s: &str) -> Result<RatFun> {
    expr_at(line, col, s)?.to_ratfun().map_err(|m| line.err(col, m))
}

fn scalar_at(line: &Line, col: usize, s: &str) -> Result<Scalar> {
    ratfun_at(line, col, s)?.as_constant().ok_or_else(|| line.err(col, "expected a constant"))
}

fn rational_at(line: &Line, col: usize, s: &str) -> Result<BigRational> {
    let v = scalar_at(line, col, s)?;
    if !v.im.is_zero() {
        return Err(line.err(col, "expected a real rational"));
    }
    Ok(v.re)
}

/// `q pi` written as `<q>pi`, `<q>*pi`, `pi`, `-pi`.
fn angle_at(line: &Line, col: usize, s: &str) -> Result<BigRational> {
    if s == "0" {
        return Ok(BigRational::zero());
    }
    let Some(body) = s.strip_suffix("pi") else {
        return Err(line.err(col, format!("angle '{s}' must be a multiple of pi, e.g. 1/2pi")));
    };
    let body = body.strip_suffix('*').unwrap_or(body);
    match body {
        "" => Ok(BigRational::one()),
        "-" => Ok(-BigRational::one()),
        _ => rational_at(line, col, body),
    }
}

/// Splits a bracketed list `[a, b, c]` into items with their columns.
fn bracket_items<'a>(line: &Line, col: usize, s: &'a str) -> Result<Vec<(usize, &'a str)>> {
    let t = s.trim();
    let off = s.len() - s.trim_start().len();
    if !t.starts_with('[') || !t.ends_with(']') {
        return Err(line.err(col, "expected a bracketed list [ ... ]"));
    }
    let inner = &t[1..t.len() - 1];
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in inner.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push((col + off + 1 + start, inner[start..i].trim()));
                start = i + 1;
            }
            _ => {}
        }
    }
    if !inner.trim().is_empty() {
        out.push((col + off + 1 + start, inner[start..].trim()));
    }
    if out.iter().any(|(_, x)| x.is_empty()) {
        return Err(line.err(col, "empty entry in list"));
    }
    Ok(out)
}

fn point_at(line: &Line, col: usize, s: &str) -> Result<Point> {
    if s == "inf" || s == "infinity" {
        Ok(Point::Infinity)
    } else {
        Ok(Point::Finite(scalar_at(line, col, s)?))
    }
}

fn endpoint_at(line: &Line, col: usize, s: &str) -> Result<Endpoint> {
    if let Some(a) = s.strip_prefix("inf@") {
        return Ok(Endpoint::Infinity(angle_at(line, col + 4, a)?));
    }
    if s == "inf" {
        return Err(line.err(col, "an endpoint at infinity needs a direction, e.g. inf@0pi"));
    }
    Ok(Endpoint::Finite(scalar_at(line, col, s)?))
}

struct Cursor<'a> {
    lines: Vec<Line<'a>>,
    pos: usize,
    last_line: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self) -> Option<&Line<'a>> {
        let l = self.lines.get(self.pos);
        self.pos += 1;
        l
    }

    fn peek(&self) -> Option<&Line<'a>> {
        self.lines.get(self.pos)
    }

    fn eof(&self, what: &str) -> Error {
        Error::Parse { line: self.last_line, col: 1, msg: format!("unexpected end of file in {what}") }
    }

    /// Lines up to the matching `end`.
    fn block(&mut self, what: &str) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        loop {
            let Some(l) = self.peek() else { return Err(self.eof(what)) };
            if l.text == "end" {
                self.pos += 1;
                return Ok(out);
            }
            out.push(self.pos);
            self.pos += 1;
        }
    }
}

fn parse_rows(cur: &Cursor, idx: &[usize]) -> Result<Vec<Vec<RatFun>>> {
    idx.iter()
        .map(|&i| {
            let l = &cur.lines[i];
            bracket_items(l, 0, l.text)?.into_iter().map(|(c, s)| ratfun_at(l, c, s)).collect()
        })
        .collect()
}

/// A parsed section line; `Some(p)` when the value is given at a point other than a named vertex.
fn parse_section(l: &Line) -> Result<(Coefficient, Option<Scalar>)> {
    let (c0, rest) = l.rest();
    if let Some(r) = rest.strip_prefix("continue") {
        let r = r.trim();
        if r.is_empty() {
            return Ok((Coefficient::Continue { scale: Expr::Num(Scalar::one()) }, None));
        }
        let col = c0 + rest.len() - r.len();
        let Some(s) = r.strip_prefix("scale") else {
            return Err(l.err(col, "expected 'scale <c>' after 'continue'"));
        };
        let s2 = s.trim();
        return Ok((Coefficient::Continue { scale: expr_at(l, col + 5 + s.len() - s2.len(), s2)? }, None));
    }
    let Some(r) = rest.strip_prefix("at") else {
        return Err(l.err(c0, "expected 'section at ...' or 'section continue'"));
    };
    let r_col = c0 + 2 + r.len() - r.trim_start().len();
    let r = r.trim();
    if r.contains("factor") {
        // at <x>, factor <k>, branch <b>, scale <c>
        let parts: Vec<&str> = r.split(',').collect();
        let mut col = r_col;
        let x = point_at(l, col, parts[0].trim())?;
        let mut index = None;
        let mut branch = 0i64;
        let mut scale = Expr::Num(Scalar::one());
        col += parts[0].len() + 1;
        for p in &parts[1..] {
            let t = p.trim();
            let pc = col + p.len() - p.trim_start().len();
            let (k, v) = t.split_once(char::is_whitespace).ok_or_else(|| l.err(pc, format!("expected '<key> <value>' in '{t}'")))?;
            let vc = pc + k.len() + 1;
            let v = v.trim();
            match k {
                "factor" => index = Some(v.parse::<usize>().map_err(|_| l.err(vc, "factor index must be a non-negative integer"))?),
                "branch" => branch = v.parse::<i64>().map_err(|_| l.err(vc, "branch must be an integer"))?,
                "scale" => scale = expr_at(l, vc, v)?,
                _ => return Err(l.err(pc, format!("unknown key '{k}'"))),
            }
            col += p.len() + 1;
        }
        let index = index.ok_or_else(|| l.err(r_col, "missing 'factor <k>'"))?;
        return Ok((Coefficient::Factor { point: x, index, branch, scale }, None));
    }
    // at <P|start|end>[:] vector [..]
    let (p, v) = r.split_once("vector").ok_or_else(|| l.err(r_col, "expected 'vector [...]'"))?;
    let ptxt = p.trim().trim_end_matches(':').trim();
    let (at, point) = match ptxt {
        "start" => (Anchor::Start, None),
        "end" => (Anchor::End, None),
        _ => (Anchor::Start, Some(scalar_at(l, r_col, ptxt)?)),
    };
    let vcol = r_col + p.len() + 6;
    let items = bracket_items(l, vcol, v)?;
    let values = items.into_iter().map(|(c, s)| expr_at(l, c, s)).collect::<Result<Vec<_>>>()?;
    if values.iter().any(|e| e.depends_on_z()) {
        return Err(l.err(vcol, "section entries must be constants"));
    }
    Ok((Coefficient::Vector { at, values }, point))
}

enum Placement {
    Vertex(Anchor),
    /// The segment split at the point: the first piece ends there.
    Split(Geometry, Geometry),
}

/// Locates an exact point on a segment.
fn place(g: &Geometry, p: &Scalar) -> Option<Placement> {
    let fp = Some(Endpoint::Finite(p.clone()));
    if g.start() == fp {
        return Some(Placement::Vertex(Anchor::Start));
    }
    if g.end() == fp {
        return Some(Placement::Vertex(Anchor::End));
    }
    let Geometry::Line { from, to } = g else { return None };
    let on = match (from, to) {
        (Endpoint::Finite(a), Endpoint::Finite(b)) => {
            let d = b - a;
            let w = (p - a) * d.conj();
            w.im.is_zero() && w.re.is_positive() && w.re < d.norm_sqr()
        }
        (Endpoint::Finite(a), Endpoint::Infinity(q)) | (Endpoint::Infinity(q), Endpoint::Finite(a)) => {
            crate::betti::exact_arg(&(p - a)) == Some(crate::betti::normalize_pi(q))
        }
        _ => false,
    };
    on.then(|| {
        let mid = Endpoint::Finite(p.clone());
        Placement::Split(Geometry::Line { from: from.clone(), to: mid.clone() }, Geometry::Line { from: mid, to: to.clone() })
    })
}

fn parse_segment(l: &Line) -> Result<Geometry> {
    let (c0, rest) = l.rest();
    match l.keyword() {
        "line" => {
            let (a, b) = rest.split_once("->").ok_or_else(|| l.err(c0, "expected 'line A -> B'"))?;
            let bcol = c0 + a.len() + 2 + b.len() - b.trim_start().len();
            Ok(Geometry::Line { from: endpoint_at(l, c0, a.trim())?, to: endpoint_at(l, bcol, b.trim())? })
        }
        "arc" => {
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() != 4 {
                return Err(l.err(c0, "expected 'arc <center> <radius> <start angle> <sweep>'"));
            }
            let mut cols = Vec::new();
            let mut search = 0;
            for t in &toks {
                let k = rest[search..].find(t).unwrap() + search;
                cols.push(c0 + k);
                search = k + t.len();
            }
            Ok(Geometry::Arc {
                center: scalar_at(l, cols[0], toks[0])?,
                radius: rational_at(l, cols[1], toks[1])?,
                start: angle_at(l, cols[2], toks[2])?,
                sweep: angle_at(l, cols[3], toks[3])?,
            })
        }
        k => Err(l.err(0, format!("expected a segment ('line' or 'arc'), found '{k}'"))),
    }
}

fn parse_chain(cur: &mut Cursor, class: GrowthClass) -> Result<TwistedChain> {
    let mut segments = Vec::new();
    loop {
        let Some(l) = cur.next() else { return Err(cur.eof("chain")) };
        if l.text == "end" {
            break;
        }
        let geometry = parse_segment(l)?;
        let lno = l.no;
        let Some(s) = cur.next() else { return Err(cur.eof("chain")) };
        if s.keyword() != "section" {
            return Err(s.err(0, format!("expected the section of the segment on line {lno}")));
        }
        let (coefficient, point) = parse_section(s)?;
        match point {
            None => segments.push(Segment { geometry, coefficient }),
            Some(p) => match place(&geometry, &p) {
                Some(Placement::Vertex(at)) => {
                    let Coefficient::Vector { values, .. } = coefficient else { unreachable!() };
                    segments.push(Segment { geometry, coefficient: Coefficient::Vector { at, values } });
                }
                Some(Placement::Split(g1, g2)) => {
                    let Coefficient::Vector { values, .. } = coefficient else { unreachable!() };
                    segments.push(Segment { geometry: g1, coefficient: Coefficient::Vector { at: Anchor::End, values } });
                    segments.push(Segment {
                        geometry: g2,
                        coefficient: Coefficient::Continue { scale: Expr::Num(Scalar::one()) },
                    });
                }
                None => return Err(s.err(0, format!("{p} is not an exactly located point of the segment on line {lno}"))),
            },
        }
    }
    if segments.is_empty() {
        return Err(cur.eof("empty chain"));
    }
    Ok(TwistedChain { class, segments })
}

fn parse_cycle(cur: &mut Cursor, head: usize) -> Result<CycleSpec> {
    let l = &cur.lines[head];
    let (c0, rest) = l.rest();
    let toks: Vec<&str> = rest.split_whitespace().collect();
    if toks.len() != 3 || toks[1] != "side" {
        return Err(l.err(c0, "expected 'cycle <name> side <V|partner>'"));
    }
    let side = match toks[2] {
        "V" | "v" => Side::V,
        "partner" => Side::Partner,
        s => return Err(l.err(c0 + rest.find(s).unwrap_or(0), format!("unknown side '{s}'"))),
    };
    let name = toks[0].to_string();
    let mut rd = None;
    let mut moderate = None;
    loop {
        let Some(l) = cur.next() else { return Err(cur.eof("cycle")) };
        match l.text {
            "end" => break,
            "rd" => rd = Some(parse_chain(cur, GrowthClass::Rd)?),
            "mod" => moderate = Some(parse_chain(cur, GrowthClass::Mod)?),
            _ => return Err(l.err(0, "expected 'rd', 'mod' or 'end'")),
        }
    }
    Ok(CycleSpec { name, side, rd, moderate })
}

/// Parses a scenario file.
pub fn parse_scenario(src: &str) -> Result<Scenario> {
    let ls = lines(src);
    let last_line = src.lines().count().max(1);
    let mut cur = Cursor { lines: ls, pos: 0, last_line };
    let mut version = None;
    let mut name = String::from("unnamed");
    let mut rank = None;
    let mut matrix: Option<(usize, Vec<Vec<RatFun>>)> = None;
    let mut singular: Option<Vec<Point>> = None;
    let mut pairing_sign: Option<Option<i32>> = None;
    let mut gram: Option<Vec<Vec<RatFun>>> = None;
    let mut forms_v = None;
    let mut forms_partner = None;
    let mut policy = PrecisionPolicy::default();
    let mut pole_bound = None;
    let mut truncation = None;
    let mut cycles = Vec::new();
    let mut pairing_line = 0;
    while cur.pos < cur.lines.len() {
        let i = cur.pos;
        cur.pos += 1;
        let l = &cur.lines[i];
        let (c0, rest) = l.rest();
        let kw = l.keyword().to_string();
        let lno = l.no;
        let int_arg = |what: &str| -> Result<i64> { rest.parse::<i64>().map_err(|_| l.err(c0, format!("{what} must be an integer"))) };
        let float_arg = |s: &str, col: usize| -> Result<f64> { s.parse::<f64>().map_err(|_| l.err(col, format!("'{s}' is not a number"))) };
        match kw.as_str() {
            "format_version" => {
                let v = int_arg("format_version")?;
                if v != FORMAT_VERSION as i64 {
                    return Err(l.err(c0, format!("unsupported format_version {v} (expected {FORMAT_VERSION})")));
                }
                version = Some(v);
            }
            "name" => name = rest.to_string(),
            "rank" => rank = Some((int_arg("rank")?, lno)),
            "matrix" => {
                let idx = cur.block("matrix")?;
                matrix = Some((lno, parse_rows(&cur, &idx)?));
            }
            "singular" => {
                let mut pts = Vec::new();
                let mut search = 0;
                for t in rest.split_whitespace() {
                    let k = rest[search..].find(t).unwrap() + search;
                    pts.push(point_at(l, c0 + k, t)?);
                    search = k + t.len();
                }
                singular = Some(pts);
            }
            "pairing" => {
                pairing_line = lno;
                let toks: Vec<&str> = rest.split_whitespace().collect();
                pairing_sign = Some(match toks.as_slice() {
                    ["dual"] => None,
                    ["self", "sign", s] => Some(match *s {
                        "1" | "+1" => 1,
                        "-1" => -1,
                        _ => return Err(l.err(c0, "pairing sign must be +1 or -1")),
                    }),
                    _ => return Err(l.err(c0, "expected 'pairing dual' or 'pairing self sign <+1|-1>'")),
                });
            }
            "gram" => {
                let idx = cur.block("gram")?;
                gram = Some(parse_rows(&cur, &idx)?);
            }
            "forms" => {
                let which = rest.to_string();
                let idx = cur.block("forms")?;
                let rows = parse_rows(&cur, &idx)?;
                match which.as_str() {
                    "V" | "v" => forms_v = Some(rows),
                    "partner" => forms_partner = Some(rows),
                    _ => return Err(Error::Parse { line: lno, col: c0 + 1, msg: "expected 'forms V' or 'forms partner'".into() }),
                }
            }
            "precision" => policy.digits = int_arg("precision")?.max(1) as u32,
            "tolerance" => policy.tolerance = float_arg(rest, c0)?,
            "epsilon" => {
                policy.epsilons = rest.split_whitespace().map(|t| float_arg(t, c0)).collect::<Result<_>>()?;
            }
            "step_ratio" => policy.step_ratio = float_arg(rest, c0)?,
            "max_order" => policy.max_order = int_arg("max_order")?.max(0) as usize,
            "pole_bound" => pole_bound = Some(int_arg("pole_bound")?.max(0) as u32),
            "truncation" => truncation = Some(int_arg("truncation")?),
            "cycle" => cycles.push(parse_cycle(&mut cur, i)?),
            _ => return Err(l.err(0, format!("unknown keyword '{kw}'"))),
        }
    }
    if version.is_none() {
        return Err(Error::Parse { line: 1, col: 1, msg: "missing 'format_version' header".into() });
    }
    let Some((mline, rows)) = matrix else {
        return Err(Error::Parse { line: last_line, col: 1, msg: "missing 'matrix' block".into() });
    };
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) || n == 0 {
        return Err(Error::Parse { line: mline, col: 1, msg: "connection matrix must be square and nonempty".into() });
    }
    if let Some((r, rl)) = rank {
        if r as usize != n {
            return Err(Error::Parse { line: rl, col: 1, msg: format!("rank {r} does not match the {n}x{n} matrix") });
        }
    }
    let a = Mat::from_rows(rows);
    let singular = match singular {
        Some(s) => s,
        None => {
            let mut pts: Vec<Point> = Vec::new();
            for f in a.to_rows().iter().flatten() {
                for (x, _) in crate::exact::poles(f)? {
                    let p = Point::Finite(x);
                    if !pts.contains(&p) {
                        pts.push(p);
                    }
                }
            }
            pts.push(Point::Infinity);
            pts
        }
    };
    let pairing = match pairing_sign {
        None | Some(None) => Pairing::Dual,
        Some(Some(sign)) => {
            let g = gram.ok_or(Error::Parse { line: pairing_line, col: 1, msg: "a self pairing needs a 'gram' block".into() })?;
            if g.len() != n || g.iter().any(|r| r.len() != n) {
                return Err(Error::Parse { line: pairing_line, col: 1, msg: "gram matrix has the wrong size".into() });
            }
            Pairing::SelfPaired { g: Mat::from_rows(g), sign }
        }
    };
    let connection = Connection::new(a, singular, pairing)?;
    for forms in [&forms_v, &forms_partner].into_iter().flatten() {
        for w in forms {
            if w.len() != n {
                return Err(Error::Input(format!("form has {} entries, rank is {n}", w.len())));
            }
        }
    }
    policy.validate()?;
    Ok(Scenario { name, connection, forms_v, forms_partner, policy, pole_bound, truncation, cycles })
}

#[cfg(test)]
mod tests {
    use super::*;

    const KUMMER: &str = "format_version 1
name kummer
rank 1
matrix
  [1/3/z - 1]
end
singular 0 inf
pairing dual
cycle g side V
  rd
    line 0 -> inf@0
    section at 1 vector [exp(-1)]
  end
  mod
    line 0 -> inf@0pi
    section at 0, factor 0, branch 0, scale 1
  end
end
";

    #[test]
    fn parses_kummer() {
        let s = parse_scenario(KUMMER).unwrap();
        assert_eq!(s.name, "kummer");
        assert_eq!(s.connection.rank(), 1);
        assert_eq!(s.cycles.len(), 1);
        let c = &s.cycles[0];
        assert_eq!(c.side, Side::V);
        assert!(matches!(c.rd.as_ref().unwrap().segments[0].coefficient, Coefficient::Vector { .. }));
        assert!(matches!(c.moderate.as_ref().unwrap().segments[0].coefficient, Coefficient::Factor { index: 0, .. }));
    }

    #[test]
    fn reports_line_and_column() {
        let bad = KUMMER.replace("[1/3/z - 1]", "[1/3/z - ]");
        match parse_scenario(&bad) {
            Err(Error::Parse { line, col, .. }) => {
                assert_eq!(line, 5);
                assert!(col >= 3, "{col}");
            }
            other => panic!("{other:?}"),
        }
        let bad = KUMMER.replace("format_version 1", "format_version 7");
        assert!(matches!(parse_scenario(&bad), Err(Error::Parse { line: 1, .. })));
        let bad = KUMMER.replace("line 0 -> inf@0", "line 0 -> inf");
        assert!(matches!(parse_scenario(&bad), Err(Error::Parse { line: 11, .. })));
    }

    #[test]
    fn flatness_violation_is_an_input_error() {
        let src = "format_version 1
matrix
  [1/z, 0]
  [0, 2/z]
end
pairing self sign 1
gram
  [1, 0]
  [0, 1]
end
";
        let e = parse_scenario(src).unwrap_err();
        assert!(matches!(e, Error::FlatnessViolation { .. }), "{e:?}");
        assert!(e.is_input_error());
    }
}
