//! Infix parser for fields and forms.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | wedge
//! wedge   := primary ('^' (unary-free primary | '-' primary))*
//! primary := number | 'i' | 'pi' | zK | tK | dzK | dzbarK | dtK
//!          | fn '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is an integer power when both sides are scalars and the right side
//! is an integer literal, and the wedge product as soon as either side
//! carries a differential.

use super::Expr;
use crate::Error;

/// A differential atom as written in the source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiffAtom {
    Dz(usize),
    Dzbar(usize),
    Dt(usize),
}

/// One parsed term `coeff * a_1 ^ ... ^ a_k`, atoms in source order.
#[derive(Clone, Debug)]
pub struct FormTermSyntax {
    pub coeff: Expr,
    pub atoms: Vec<DiffAtom>,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Sym(char),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, Error> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && i + 1 < bytes.len() && (bytes[i + 1] as char).is_ascii_digit()) {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push((start, Tok::Num(src[start..i].to_string())));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(Error::Parse {
                pos: i,
                msg: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

/// Intermediate value: a sum of terms, each a scalar times a word of differentials.
#[derive(Clone, Debug)]
struct Val(Vec<FormTermSyntax>);

impl Val {
    fn scalar(e: Expr) -> Val {
        Val(vec![FormTermSyntax { coeff: e, atoms: vec![] }])
    }

    fn as_scalar(&self) -> Option<Expr> {
        if self.0.iter().all(|t| t.atoms.is_empty()) {
            Some(Expr::sum(self.0.iter().map(|t| t.coeff.clone())))
        } else {
            None
        }
    }

    fn has_differential(&self) -> bool {
        self.0.iter().any(|t| !t.atoms.is_empty())
    }

    fn add(mut self, o: Val) -> Val {
        self.0.extend(o.0);
        self
    }

    fn neg(self) -> Val {
        Val(self
            .0
            .into_iter()
            .map(|t| FormTermSyntax { coeff: -t.coeff, atoms: t.atoms })
            .collect())
    }

    fn mul(&self, o: &Val) -> Val {
        if let (Some(a), Some(b)) = (self.as_scalar(), o.as_scalar()) {
            return Val::scalar(&a * &b);
        }
        let mut out = Vec::new();
        for a in &self.0 {
            for b in &o.0 {
                let mut atoms = a.atoms.clone();
                atoms.extend(b.atoms.iter().copied());
                out.push(FormTermSyntax {
                    coeff: &a.coeff * &b.coeff,
                    atoms,
                });
            }
        }
        Val(out)
    }
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, Error> {
        let pos = self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.src.len());
        Err(Error::Parse { pos, msg: msg.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Val, Error> {
        let mut v = self.term()?;
        loop {
            if self.eat('+') {
                v = v.add(self.term()?);
            } else if self.eat('-') {
                v = v.add(self.term()?.neg());
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<Val, Error> {
        let mut v = self.unary()?;
        loop {
            if self.eat('*') {
                let r = self.unary()?;
                v = v.mul(&r);
            } else if self.eat('/') {
                let r = self.unary()?;
                match r.as_scalar() {
                    Some(s) => v = v.mul(&Val::scalar(s.recip())),
                    None => return self.err("division by a form of positive degree"),
                }
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<Val, Error> {
        if self.eat('-') {
            Ok(self.unary()?.neg())
        } else if self.eat('+') {
            self.unary()
        } else {
            self.wedge()
        }
    }

    fn wedge(&mut self) -> Result<Val, Error> {
        let mut v = self.primary()?;
        while self.eat('^') {
            let rhs = if self.eat('-') { self.primary()?.neg() } else { self.primary()? };
            if !v.has_differential() && !rhs.has_differential() {
                let base = v.as_scalar().expect("scalar");
                let exp = rhs.as_scalar().expect("scalar");
                let n = match exp.as_constant().map(|c| c.to_complex()) {
                    Some(c) if c.im == 0.0 && c.re.fract() == 0.0 && c.re.abs() < 1e9 => c.re as i64,
                    _ => return self.err("exponent must be an integer literal"),
                };
                v = Val::scalar(base.powi(n));
            } else {
                v = v.mul(&rhs);
            }
        }
        Ok(v)
    }

    fn index(&self, name: &str, prefix: &str) -> Option<usize> {
        let rest = name.strip_prefix(prefix)?;
        if rest.is_empty() || !rest.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        rest.parse::<usize>().ok().filter(|k| *k >= 1).map(|k| k - 1)
    }

    fn primary(&mut self) -> Result<Val, Error> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return self.err("unexpected end of input"),
        };
        self.pos += 1;
        match tok {
            Tok::Num(s) => {
                if s.contains(['.', 'e', 'E']) {
                    match s.parse::<f64>() {
                        Ok(x) => Ok(Val::scalar(Expr::real(x))),
                        Err(_) => {
                            self.pos -= 1;
                            self.err(format!("bad number '{s}'"))
                        }
                    }
                } else {
                    match s.parse::<i64>() {
                        Ok(n) => Ok(Val::scalar(Expr::int(n))),
                        Err(_) => {
                            self.pos -= 1;
                            self.err(format!("integer literal '{s}' out of range"))
                        }
                    }
                }
            }
            Tok::Sym('(') => {
                let v = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected ')'");
                }
                Ok(v)
            }
            Tok::Sym(c) => {
                self.pos -= 1;
                self.err(format!("unexpected '{c}'"))
            }
            Tok::Ident(name) => {
                match name.as_str() {
                    "i" => return Ok(Val::scalar(Expr::imag_unit())),
                    "pi" => return Ok(Val::scalar(Expr::real(std::f64::consts::PI))),
                    "conj" | "bump" | "exp" | "re" | "im" => {
                        if !self.eat('(') {
                            return self.err(format!("expected '(' after {name}"));
                        }
                        let arg = self.expr()?;
                        if !self.eat(')') {
                            return self.err("expected ')'");
                        }
                        let Some(a) = arg.as_scalar() else {
                            return self.err(format!("{name} applied to a form of positive degree"));
                        };
                        let e = match name.as_str() {
                            "conj" => a.conj(),
                            "bump" => a.bump(),
                            "exp" => a.exp(),
                            "re" => a.re(),
                            _ => a.im(),
                        };
                        return Ok(Val::scalar(e));
                    }
                    _ => {}
                }
                let atom = |a: DiffAtom| {
                    Val(vec![FormTermSyntax {
                        coeff: Expr::one(),
                        atoms: vec![a],
                    }])
                };
                if let Some(k) = self.index(&name, "dzbar") {
                    Ok(atom(DiffAtom::Dzbar(k)))
                } else if let Some(k) = self.index(&name, "dz") {
                    Ok(atom(DiffAtom::Dz(k)))
                } else if let Some(k) = self.index(&name, "dt") {
                    Ok(atom(DiffAtom::Dt(k)))
                } else if let Some(k) = self.index(&name, "z") {
                    Ok(Val::scalar(Expr::var(k)))
                } else if let Some(k) = self.index(&name, "t") {
                    Ok(Val::scalar(Expr::param(k)))
                } else {
                    self.pos -= 1;
                    self.err(format!("unknown identifier '{name}'"))
                }
            }
        }
    }
}

fn parse_val(src: &str) -> Result<Val, Error> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, src };
    let v = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(v)
}

/// Parses a scalar field.
pub fn parse_expr(src: &str) -> Result<Expr, Error> {
    let v = parse_val(src)?;
    match v.as_scalar() {
        Some(e) => Ok(e),
        None => Err(Error::Parse {
            pos: 0,
            msg: "expected a scalar field, found differentials".into(),
        }),
    }
}

/// Parses a form into unnormalized terms.
pub fn parse_form_terms(src: &str) -> Result<Vec<FormTermSyntax>, Error> {
    Ok(parse_val(src)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn parses_rationals_and_powers() {
        let e = parse_expr("3/4*z1^2 - z2^(-1)").unwrap();
        let v = e.eval(&[Complex64::new(2.0, 0.0), Complex64::new(4.0, 0.0)], &[]).unwrap();
        assert!((v - Complex64::new(2.75, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "z1*conj(z1) + 3/2*i*exp(z2)",
            "bump(2*re(z1) - 1/3) * z1^(-2)",
            "im(z1*z2) - 0.25*t1",
            "(1 + i)*(z1 - 2)^3",
        ] {
            let e = parse_expr(src).unwrap();
            let again = parse_expr(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }

    #[test]
    fn wedge_and_power_share_the_caret() {
        let terms = parse_form_terms("z1^2 * dz1^dzbar2").unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].atoms, vec![DiffAtom::Dz(0), DiffAtom::Dzbar(1)]);
        assert_eq!(terms[0].coeff, Expr::var(0).powi(2));
    }

    #[test]
    fn reports_errors_with_position() {
        match parse_expr("z1 + * z2") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        assert!(parse_expr("z0").is_err());
        assert!(parse_expr("z1^z2").is_err());
        assert!(parse_expr("dz1").is_err());
    }
}
