//! Recursive-descent parser for rational expressions over a declared
//! variable space.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' nat)?          -- exponent is a literal nonneg integer
//! atom   := nat | ident | '(' expr ')'
//! nat    := [0-9]+
//! ident  := [A-Za-z] [A-Za-z0-9_]*
//! ```
//!
//! `^` binds tighter than unary minus: `-x^2` is `-(x^2)`. Every identifier
//! must already be declared in the supplied `VarSpace`; errors carry the byte
//! position of the offending token.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::algebra::{Poly, RatFun, VarSpace};
use crate::error::{Error, Result};

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    space: &'a Arc<VarSpace>,
}

/// Parse `text` into a normalized rational function over `space`.
pub fn parse_expr(text: &str, space: &Arc<VarSpace>) -> Result<RatFun> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        space,
    };
    let f = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(Error::Syntax {
            pos: p.pos,
            msg: format!("unexpected `{}`", p.peek_char()),
        });
    }
    Ok(f)
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn peek_char(&self) -> String {
        self.src
            .get(self.pos)
            .map(|&b| (b as char).to_string())
            .unwrap_or_else(|| "end of input".to_string())
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn expr(&mut self) -> Result<RatFun> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.bump();
                    acc = acc.add(&self.term()?);
                }
                b'-' => {
                    self.bump();
                    acc = acc.sub(&self.term()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<RatFun> {
        let mut acc = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.bump();
                    acc = acc.mul(&self.unary()?);
                }
                b'/' => {
                    let at = self.pos;
                    self.bump();
                    let rhs = self.unary()?;
                    acc = acc.div(&rhs).map_err(|_| Error::Syntax {
                        pos: at,
                        msg: "division by zero".to_string(),
                    })?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<RatFun> {
        if self.peek() == Some(b'-') {
            self.bump();
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<RatFun> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.bump();
            let at = self.pos;
            let e = self.nat()?;
            let e32 = u32::try_from(e).map_err(|_| Error::Syntax {
                pos: at,
                msg: "exponent too large".to_string(),
            })?;
            return base.pow(e32 as i32);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<RatFun> {
        match self.peek() {
            Some(b'(') => {
                self.bump();
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(Error::Syntax {
                        pos: self.pos,
                        msg: "expected `)`".to_string(),
                    });
                }
                self.bump();
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.nat()?;
                Ok(RatFun::rational(
                    self.space,
                    BigRational::from_integer(n),
                ))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let at = self.pos;
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let name = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                self.pos = end;
                match self.space.lookup(name) {
                    Some(v) => Ok(RatFun::from_poly(Poly::var(self.space, v))),
                    None => Err(Error::UnknownIdentifier {
                        name: name.to_string(),
                        pos: at,
                    }),
                }
            }
            _ => Err(Error::Syntax {
                pos: self.pos,
                msg: format!("expected number, identifier or `(`, found `{}`", self.peek_char()),
            }),
        }
    }

    fn nat(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Syntax {
                pos: start,
                msg: "expected integer".to_string(),
            });
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(s.parse::<BigInt>().unwrap())
    }
}

/// Parse a rational number given as `p`, `-p`, or `p/q` (used for CLI flags).
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let (neg, t) = match t.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, t),
    };
    let mut parts = t.splitn(2, '/');
    let p: BigInt = parts
        .next()
        .unwrap_or("")
        .trim()
        .parse()
        .map_err(|_| Error::Syntax {
            pos: 0,
            msg: format!("not a rational: `{text}`"),
        })?;
    let q: BigInt = match parts.next() {
        Some(q) => q.trim().parse().map_err(|_| Error::Syntax {
            pos: 0,
            msg: format!("not a rational: `{text}`"),
        })?,
        None => BigInt::from(1),
    };
    if q == BigInt::from(0) {
        return Err(Error::DivisionByZero);
    }
    let r = BigRational::new(p, q);
    Ok(if neg { -r } else { r })
}
