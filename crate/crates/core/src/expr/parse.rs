//! Recursive-descent parser for arithmetic expressions over declared
//! parameters.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' INTEGER)?
//! atom   := NUMBER | IDENT | '(' expr ')'
//! ```

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{Coeff, ExprError, ParamId, Polynomial, RationalFunction};

pub fn parse_expr(text: &str, params: &[ParamId]) -> Result<RationalFunction, ExprError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        params,
    };
    let f = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(f)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    params: &'a [ParamId],
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> ExprError {
        ExprError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<RationalFunction, ExprError> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                b'-' => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<RationalFunction, ExprError> {
        let mut acc = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?);
                }
                b'/' => {
                    self.pos += 1;
                    let at = self.pos;
                    let rhs = self.unary()?;
                    acc = acc
                        .div(&rhs)
                        .map_err(|_| ExprError::DivisionByZero { pos: at })?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<RationalFunction, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<RationalFunction, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.error("expected a non-negative integer exponent"));
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let e: u32 = digits.parse().map_err(|_| ExprError::Syntax {
                pos: start,
                msg: "exponent too large".into(),
            })?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<RationalFunction, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match self.params.iter().find(|p| p.as_str() == name) {
                    Some(p) => Ok(RationalFunction::var(p.clone())),
                    None => Err(ExprError::UndeclaredParam {
                        name: name.to_string(),
                        pos: start,
                    }),
                }
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<RationalFunction, ExprError> {
        let start = self.pos;
        let mut int_digits = String::new();
        let mut frac_digits = String::new();
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            int_digits.push(self.src[self.pos] as char);
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                frac_digits.push(self.src[self.pos] as char);
                self.pos += 1;
            }
        }
        if int_digits.is_empty() && frac_digits.is_empty() {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        Ok(RationalFunction::from_poly(Polynomial::constant(
            decimal_to_coeff(&int_digits, &frac_digits),
        )))
    }
}

fn decimal_to_coeff(int_digits: &str, frac_digits: &str) -> Coeff {
    let digits = format!("{int_digits}{frac_digits}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().expect("ascii digits")
    };
    let mut denom = BigInt::one();
    for _ in 0..frac_digits.len() {
        denom *= 10;
    }
    Coeff::new(numer, denom)
}

/// Parses a non-negative decimal literal such as `0.26` exactly.
pub(crate) fn parse_decimal(text: &str) -> Option<Coeff> {
    let text = text.trim();
    let (int_part, frac_part) = match text.split_once('.') {
        Some((a, b)) => (a, b),
        None => (text, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(decimal_to_coeff(int_part, frac_part))
}
