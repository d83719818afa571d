//! Arithmetic expressions in `z` with Gaussian rational coefficients.
//!
//! The same grammar serves exact rational functions such as
//! `(3*z^2+1)/((z-2)^2*(z+1))` and numeric constants such as
//! `1/(exp(-2*pi*i/3)-1)`. A literal `p/q` written without spaces is a single
//! rational token, so `1/2+1/3i` reads as `1/2 + (1/3)i`.

use num_traits::{One, Zero};

use crate::exact::{Poly, RatFun, Scalar};
use crate::numeric::mp::Complex;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Scalar),
    Z,
    Pi,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sqrt,
    Sin,
    Cos,
    Log,
}

/// Parse failure with a 0-based character offset into the input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExprError {
    pub offset: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Scalar),
    Ident(String),
    Op(char),
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let chars: Vec<char> = s.chars().collect();
    let mut out: Vec<(usize, Tok)> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let after_caret = matches!(out.last(), Some((_, Tok::Op('^'))));
            if !after_caret
                && i + 1 < chars.len()
                && chars[i] == '/'
                && chars[i + 1].is_ascii_digit()
            {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let mut val: Scalar = text
                .parse()
                .map_err(|_| ExprError { offset: start, msg: format!("bad number `{text}`") })?;
            let next_is_ident = i + 1 < chars.len() && chars[i + 1].is_ascii_alphanumeric();
            if i < chars.len() && chars[i] == 'i' && !next_is_ident {
                val = &val * &Scalar::i();
                i += 1;
            }
            out.push((start, Tok::Num(val)));
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((start, Tok::Ident(chars[start..i].iter().collect())));
            continue;
        }
        if "+-*/^()".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
            continue;
        }
        return Err(ExprError { offset: i, msg: format!("unexpected character `{c}`") });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |t| t.0)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError { offset: self.offset(), msg: msg.into() })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else if matches!(self.peek(), Some(Tok::Op('(')) | Some(Tok::Ident(_)) | Some(Tok::Num(_))) {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.power()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected `)`");
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let func = match name.as_str() {
                    "z" => return Ok(Expr::Z),
                    "i" => return Ok(Expr::Num(Scalar::i())),
                    "pi" => return Ok(Expr::Pi),
                    "exp" => Func::Exp,
                    "sqrt" => Func::Sqrt,
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "log" => Func::Log,
                    _ => {
                        self.pos -= 1;
                        return self.err(format!("unknown identifier `{name}`"));
                    }
                };
                if !self.eat('(') {
                    return self.err("expected `(` after function name");
                }
                let arg = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected `)`");
                }
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Some(Tok::Op(c)) => self.err(format!("unexpected `{c}`")),
            None => self.err("unexpected end of expression"),
        }
    }
}

pub fn parse(s: &str) -> Result<Expr, ExprError> {
    let toks = lex(s)?;
    let mut p = Parser { toks, pos: 0, len: s.chars().count() };
    if p.peek().is_none() {
        return p.err("empty expression");
    }
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

impl Expr {
    /// Exact value as a rational function of `z`.
    pub fn to_ratfun(&self) -> Result<RatFun, String> {
        Ok(match self {
            Expr::Num(v) => RatFun::constant(v.clone()),
            Expr::Z => RatFun::z(),
            Expr::Pi | Expr::Call(..) => return Err("transcendental constant in an exact expression".into()),
            Expr::Neg(a) => -a.to_ratfun()?,
            Expr::Add(a, b) => a.to_ratfun()? + b.to_ratfun()?,
            Expr::Sub(a, b) => a.to_ratfun()? - b.to_ratfun()?,
            Expr::Mul(a, b) => a.to_ratfun()? * b.to_ratfun()?,
            Expr::Div(a, b) => {
                let d = b.to_ratfun()?;
                if d.is_zero() {
                    return Err("division by zero".into());
                }
                a.to_ratfun()? / d
            }
            Expr::Pow(a, e) => {
                let k = e
                    .to_ratfun()?
                    .as_constant()
                    .and_then(|c| c.as_i64())
                    .ok_or("exponent must be an integer")?;
                let base = a.to_ratfun()?;
                if k < 0 && base.is_zero() {
                    return Err("zero to a negative power".into());
                }
                base.pow(k as i32)
            }
        })
    }

    /// Exact constant value.
    pub fn to_scalar(&self) -> Result<Scalar, String> {
        self.to_ratfun()?.as_constant().ok_or_else(|| "expression depends on z".to_string())
    }

    pub fn depends_on_z(&self) -> bool {
        match self {
            Expr::Z => true,
            Expr::Num(_) | Expr::Pi => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on_z(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on_z() || b.depends_on_z()
            }
        }
    }

    /// Numeric value at working precision `prec` bits (the expression must not involve `z`).
    pub fn eval(&self, prec: u32) -> Result<Complex, String> {
        Ok(match self {
            Expr::Num(v) => Complex::from_scalar(v, prec),
            Expr::Z => return Err("numeric constant depends on z".into()),
            Expr::Pi => Complex::pi(prec),
            Expr::Neg(a) => a.eval(prec)?.neg(),
            Expr::Add(a, b) => a.eval(prec)?.add(&b.eval(prec)?),
            Expr::Sub(a, b) => a.eval(prec)?.sub(&b.eval(prec)?),
            Expr::Mul(a, b) => a.eval(prec)?.mul(&b.eval(prec)?),
            Expr::Div(a, b) => {
                let d = b.eval(prec)?;
                if d.is_zero() {
                    return Err("division by zero".into());
                }
                a.eval(prec)?.div(&d)
            }
            Expr::Pow(a, e) => {
                let base = a.eval(prec)?;
                match e.to_scalar().ok().and_then(|c| c.as_i64()) {
                    Some(k) => base.powi(k),
                    None => base.ln().mul(&e.eval(prec)?).exp(),
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval(prec)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Sqrt => x.sqrt(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Log => x.ln(),
                }
            }
        })
    }
}

/// Parses an exact rational function of `z`.
pub fn parse_ratfun(s: &str) -> Result<RatFun, ExprError> {
    let e = parse(s)?;
    e.to_ratfun().map_err(|msg| ExprError { offset: 0, msg })
}

/// Parses an exact constant.
pub fn parse_scalar(s: &str) -> Result<Scalar, ExprError> {
    let f = parse_ratfun(s)?;
    f.as_constant().ok_or(ExprError { offset: 0, msg: "expected a constant".into() })
}

/// `z` as a polynomial, for tests and builders.
pub fn z_poly() -> Poly {
    Poly::new(vec![Scalar::zero(), Scalar::one()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_function_literal() {
        let f = parse_ratfun("(3*z^2+1)/((z-2)^2*(z+1))").unwrap();
        assert_eq!(f.eval(&Scalar::zero()), Some(Scalar::from_ratio(1, 4)));
        assert_eq!(f.den().degree(), Some(3));
    }

    #[test]
    fn gaussian_literals() {
        assert_eq!(parse_scalar("1/2+1/3i").unwrap(), Scalar::gaussian((1, 2), (1, 3)));
        assert_eq!(parse_scalar("2i").unwrap(), Scalar::gaussian((0, 1), (2, 1)));
        assert_eq!(parse_scalar("z^2/4 - z^2/4 + 3").unwrap(), Scalar::from_int(3));
        assert_eq!(parse_ratfun("1/3/z").unwrap(), parse_ratfun("1/(3*z)").unwrap());
        assert_eq!(parse_ratfun("2z").unwrap(), parse_ratfun("2*z").unwrap());
        assert_eq!(parse_ratfun("z^-2").unwrap(), parse_ratfun("1/z^2").unwrap());
    }

    #[test]
    fn errors_carry_offsets() {
        let e = parse("(z + 1").unwrap_err();
        assert_eq!(e.offset, 6);
        let e = parse("z + $").unwrap_err();
        assert_eq!(e.offset, 4);
        assert!(parse_ratfun("exp(z)").is_err());
        assert!(parse_ratfun("1/(z-z)").is_err());
    }

    #[test]
    fn numeric_constants() {
        let v = parse("exp(2*pi*i/3)").unwrap().eval(128).unwrap();
        let (re, im) = v.to_f64();
        assert!((re + 0.5).abs() < 1e-15);
        assert!((im - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }
}
