//! Recursive-descent parser for polynomial expressions.
//!
//! Grammar (no implicit multiplication):
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary ('*' unary)*
//! unary    := '-' unary | factor
//! factor   := atom ('^' natural)?
//! atom     := variable | rational | '(' expr ')'
//! rational := natural ('/' natural)?
//! ```
//!
//! Variables must be declared in the ring. Whitespace is ignored.

use super::{Polynomial, Rat, Ring};
use num::{BigInt, BigRational, Zero};
use thiserror::Error;

/// Expansion guard for untrusted input: expressions are rejected once their
/// expanded total degree would exceed this.
const MAX_PARSE_DEGREE: u64 = 512;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{name}` at position {pos}")]
    UnknownVariable { pos: usize, name: String },
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    ring: &'a Ring,
}

/// Parse `text` into canonical form over `ring`.
pub fn parse_polynomial(text: &str, ring: &Ring) -> Result<Polynomial, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        ring,
    };
    p.skip_ws();
    let poly = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(poly)
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    self.skip_ws();
                    let t = self.term()?;
                    acc = acc.add(&t);
                }
                Some(b'-') => {
                    self.pos += 1;
                    self.skip_ws();
                    let t = self.term()?;
                    acc = acc.sub(&t);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.unary()?;
        loop {
            self.skip_ws();
            if self.eat(b'*') {
                self.skip_ws();
                let f = self.unary()?;
                let deg = acc.degree().unwrap_or(0) as u64 + f.degree().unwrap_or(0) as u64;
                if deg > MAX_PARSE_DEGREE {
                    return Err(self.err("expanded degree too large"));
                }
                acc = acc.mul(&f);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Polynomial, ParseError> {
        self.skip_ws();
        if self.eat(b'-') {
            let inner = self.unary()?;
            Ok(inner.neg())
        } else {
            self.factor()
        }
    }

    fn factor(&mut self) -> Result<Polynomial, ParseError> {
        let base = self.atom()?;
        self.skip_ws();
        if self.eat(b'^') {
            self.skip_ws();
            let e = self.natural()?;
            // Expansion guard for untrusted input.
            let base_deg = base.degree().unwrap_or(0) as u64;
            if e > 4096 || base_deg.saturating_mul(e) > MAX_PARSE_DEGREE {
                return Err(self.err("exponent too large"));
            }
            Ok(base.pow(e as u32))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Polynomial, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let r = self.rational()?;
                Ok(Polynomial::constant(self.ring, r))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self
                    .peek()
                    .map(|c| c.is_ascii_alphanumeric() || c == b'_')
                    .unwrap_or(false)
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match self.ring.var_index(name) {
                    Some(i) => Ok(Polynomial::var(self.ring, i)),
                    None => Err(ParseError::UnknownVariable {
                        pos: start,
                        name: name.to_string(),
                    }),
                }
            }
            _ => Err(self.err("expected variable, number, or `(`")),
        }
    }

    fn natural(&mut self) -> Result<u64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected an integer"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        s.parse::<u64>().map_err(|_| ParseError::Syntax {
            pos: start,
            msg: "integer literal too large".to_string(),
        })
    }

    fn rational(&mut self) -> Result<Rat, ParseError> {
        let start = self.pos;
        while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
            self.pos += 1;
        }
        let num_str = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let numer: BigInt = num_str.parse().map_err(|_| ParseError::Syntax {
            pos: start,
            msg: "bad integer literal".to_string(),
        })?;
        // A '/' directly after an integer literal continues the literal.
        if self.peek() == Some(b'/') {
            self.pos += 1;
            let dstart = self.pos;
            while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
                self.pos += 1;
            }
            if self.pos == dstart {
                return Err(self.err("expected denominator after `/`"));
            }
            let den_str = std::str::from_utf8(&self.src[dstart..self.pos]).unwrap();
            let denom: BigInt = den_str.parse().map_err(|_| ParseError::Syntax {
                pos: dstart,
                msg: "bad integer literal".to_string(),
            })?;
            if denom.is_zero() {
                return Err(ParseError::Syntax {
                    pos: dstart,
                    msg: "zero denominator".to_string(),
                });
            }
            Ok(BigRational::new(numer, denom))
        } else {
            Ok(BigRational::from_integer(numer))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::rat_frac;

    #[test]
    fn rational_literals() {
        let r = Ring::new(vec!["x"]);
        let p = parse_polynomial("3/4*x + 1/2", &r).unwrap();
        let x = Polynomial::var(&r, 0);
        let want = x
            .scale(&rat_frac(3, 4))
            .add(&Polynomial::constant(&r, rat_frac(1, 2)));
        assert_eq!(p, want);
    }

    #[test]
    fn error_positions() {
        let r = Ring::new(vec!["x", "y"]);
        match parse_polynomial("x + ", &r) {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
        match parse_polynomial("x + z", &r) {
            Err(ParseError::UnknownVariable { pos, name }) => {
                assert_eq!(pos, 4);
                assert_eq!(name, "z");
            }
            other => panic!("expected unknown variable, got {other:?}"),
        }
    }

    #[test]
    fn no_implicit_multiplication() {
        let r = Ring::new(vec!["x", "y"]);
        assert!(parse_polynomial("x y", &r).is_err());
        assert!(parse_polynomial("2x", &r).is_err());
    }

    #[test]
    fn unary_minus_and_powers() {
        let r = Ring::new(vec!["x"]);
        let p = parse_polynomial("-x^2 - -3", &r).unwrap();
        let want = parse_polynomial("3 - x^2", &r).unwrap();
        assert_eq!(p, want);
        assert!(parse_polynomial("x^", &r).is_err());
        assert!(parse_polynomial("1/0", &r).is_err());
    }

    #[test]
    fn parentheses_and_power_of_sum() {
        let r = Ring::new(vec!["x", "y"]);
        let p = parse_polynomial("(x + y)^2", &r).unwrap();
        let want = parse_polynomial("x^2 + 2*x*y + y^2", &r).unwrap();
        assert_eq!(p, want);
    }
}
