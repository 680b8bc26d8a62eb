//! Recursive-descent parser for the field-expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' int)?
//! atom   := number | 're(' int ')' | 'im(' int ')' | 'abs2(' int ')' | 'norm2'
//!         | 'max(' expr {',' expr} ')' | 'min(' expr {',' expr} ')' | '(' expr ')'
//! ```
//!
//! Unary minus binds looser than `^`, so `-re(1)^2` is `-(re(1)^2)`.

use crate::error::{Error, Result};
use crate::expr::{Node, ScalarField};

pub fn parse_field(text: &str, dimension: usize) -> Result<ScalarField> {
    if dimension == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let mut p = Parser { src: text.as_bytes(), pos: 0, dim: dimension };
    let root = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    ScalarField::new(root, dimension)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax { pos: self.pos, msg: msg.to_string() }
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

    fn eat(&mut self, ch: u8) -> bool {
        if self.peek() == Some(ch) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, ch: u8) -> Result<()> {
        if self.eat(ch) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", ch as char)))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = Node::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = Node::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while self.eat(b'*') {
            let rhs = self.unary()?;
            lhs = Node::Mul(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat(b'^') {
            self.skip_ws();
            let at = self.pos;
            let k = self.integer()?;
            if k == 0 || k > u32::MAX as usize {
                return Err(Error::Syntax { pos: at, msg: "exponent must be a positive integer".into() });
            }
            return Ok(Node::Pow(Box::new(base), k as u32));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::Syntax { pos: start, msg: "integer too large".into() })
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        self.pos = i;
        std::str::from_utf8(&s[start..i])
            .unwrap()
            .parse::<f64>()
            .map_err(|_| Error::Syntax { pos: start, msg: "malformed number".into() })
    }

    fn ident(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap()
    }

    fn coord_index(&mut self) -> Result<usize> {
        self.expect(b'(')?;
        self.skip_ws();
        let at = self.pos;
        let j = self.integer()?;
        self.expect(b')')?;
        if j == 0 || j > self.dim {
            let _ = at;
            return Err(Error::CoordOutOfRange { index: j, dim: self.dim });
        }
        Ok(j)
    }

    fn list(&mut self) -> Result<Vec<Node>> {
        self.expect(b'(')?;
        let mut xs = vec![self.expr()?];
        while self.eat(b',') {
            xs.push(self.expr()?);
        }
        self.expect(b')')?;
        Ok(xs)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(ch) if ch.is_ascii_digit() || ch == b'.' => Ok(Node::Const(self.number()?)),
            Some(ch) if ch.is_ascii_alphabetic() => {
                let start = self.pos;
                let name = self.ident().to_string();
                match name.as_str() {
                    "re" => Ok(Node::Re(self.coord_index()?)),
                    "im" => Ok(Node::Im(self.coord_index()?)),
                    "abs2" => Ok(Node::Abs2(self.coord_index()?)),
                    "norm2" => Ok(Node::Norm2),
                    "max" => Ok(Node::Max(self.list()?)),
                    "min" => Ok(Node::Min(self.list()?)),
                    _ => Err(Error::Syntax { pos: start, msg: format!("unknown function `{name}`") }),
                }
            }
            Some(_) => Err(self.err("unexpected character")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvec::c;

    #[test]
    fn precedence() {
        let f = parse_field("1 + 2*3 - -re(1)^2", 1).unwrap();
        assert_eq!(f.eval(&[c(3.0, 0.0)]).unwrap(), 1.0 + 6.0 + 9.0);
        let g = parse_field("-re(1)^2", 1).unwrap();
        assert_eq!(g.eval(&[c(3.0, 0.0)]).unwrap(), -9.0);
    }

    #[test]
    fn syntax_error_carries_position() {
        match parse_field("re(1) + * 2", 1) {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 8),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_field("foo(1)", 1), Err(Error::Syntax { pos: 0, .. })));
        assert!(matches!(parse_field("re(1", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse_field("re(1))", 1), Err(Error::Syntax { .. })));
    }

    #[test]
    fn coordinate_out_of_range() {
        assert!(matches!(parse_field("re(3)", 2), Err(Error::CoordOutOfRange { index: 3, dim: 2 })));
        assert!(matches!(parse_field("abs2(0)", 2), Err(Error::CoordOutOfRange { .. })));
    }

    #[test]
    fn scientific_notation_and_lists() {
        let f = parse_field("max(1e-3, 2.5E+1*re(1), min(im(1), 4))", 1).unwrap();
        assert_eq!(f.eval(&[c(2.0, 3.0)]).unwrap(), 50.0);
    }
}
