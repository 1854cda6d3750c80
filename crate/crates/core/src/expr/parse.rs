//! Recursive-descent parser for the formula grammar.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := primary ('^' exponent)?
//! exponent := '-' exponent | power
//! primary  := number | ident | ('exp' | 'ln') '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers `x1..x3`, `k1..k3`, `y1..y3` are variables; every other
//! identifier is a parameter.

use super::{Expr, Var};
use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                let frac = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i == frac {
                    return Err(syntax(start, "malformed decimal literal"));
                }
            }
            let lit = &text[start..i];
            let value = lit
                .parse::<f64>()
                .map_err(|_| syntax(start, "malformed decimal literal"))?;
            out.push((Tok::Num(value), start));
        } else if c.is_ascii_alphabetic() {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => return Err(syntax(start, &format!("unexpected character `{c}`"))),
            };
            out.push((tok, start));
            i += 1;
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

fn syntax(pos: usize, msg: &str) -> ParseError {
    ParseError::Syntax {
        pos,
        msg: msg.to_string(),
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    declared: Option<&'a dyn Fn(&str) -> bool>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self) -> ParseError {
        match self.peek() {
            Tok::End => syntax(self.pos(), "unexpected end of input"),
            t => syntax(self.pos(), &format!("unexpected token {t:?}")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = lhs + self.term()?;
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = lhs * self.unary()?;
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = lhs / self.unary()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == &Tok::Op('-') {
            self.bump();
            return Ok(negate(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek() != &Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let pos = self.pos();
        let exponent = self.exponent()?;
        if !exponent.is_variable_free() {
            return Err(syntax(pos, "exponent must not depend on any variable"));
        }
        Ok(base.pow(exponent))
    }

    fn exponent(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == &Tok::Op('-') {
            self.bump();
            return Ok(negate(self.exponent()?));
        }
        self.power()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(c) => {
                self.bump();
                Ok(Expr::Const(c))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                self.identifier(name, pos)
            }
            _ => Err(self.unexpected()),
        }
    }

    fn identifier(&mut self, name: String, pos: usize) -> Result<Expr, ParseError> {
        if self.peek() == &Tok::LParen {
            let build: fn(Expr) -> Expr = match name.as_str() {
                "exp" => Expr::exp,
                "ln" => Expr::ln,
                _ => return Err(ParseError::UnknownSymbol { name, pos }),
            };
            self.bump();
            let arg = self.expr()?;
            self.expect_rparen()?;
            return Ok(build(arg));
        }
        if let Some(v) = Var::from_name(&name) {
            return Ok(Expr::Var(v));
        }
        if name == "exp" || name == "ln" {
            return Err(syntax(self.pos(), &format!("expected `(` after `{name}`")));
        }
        if let Some(declared) = self.declared {
            if !declared(&name) {
                return Err(ParseError::UnknownSymbol { name, pos });
            }
        }
        Ok(Expr::Param(name))
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.peek() == &Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }
}

fn negate(e: Expr) -> Expr {
    match e {
        Expr::Const(c) => Expr::Const(-c),
        other => -other,
    }
}

fn run(text: &str, declared: Option<&dyn Fn(&str) -> bool>) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        at: 0,
        declared,
    };
    let e = p.expr()?;
    if p.peek() != &Tok::End {
        return Err(p.unexpected());
    }
    Ok(e)
}

/// Parses a formula; unknown identifiers become parameters.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    run(text, None)
}

/// Parses a formula, rejecting parameters not in `declared`.
pub fn parse_declared<S: AsRef<str>>(text: &str, declared: &[S]) -> Result<Expr, ParseError> {
    let known = |name: &str| declared.iter().any(|d| d.as_ref() == name);
    run(text, Some(&known))
}
