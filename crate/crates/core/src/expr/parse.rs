use std::sync::Arc;

use super::{add, call, constant, div, mul, neg, pow, sub, Expr, ExprError, Func, COORDS};

/// Parses `text` over the chart variables `x1..x4`.
pub fn parse_expression(text: &str) -> Result<Arc<Expr>, ExprError> {
    parse_with_vars(text, &COORDS)
}

/// Parses `text` with an explicit ordered variable list; `names[i]` binds to
/// variable index `i`.
pub fn parse_with_vars(text: &str, names: &[&str]) -> Result<Arc<Expr>, ExprError> {
    let mut parser = Parser {
        src: text.as_bytes(),
        pos: 0,
        names,
    };
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        return Err(parser.syntax("unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    names: &'a [&'a str],
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn syntax(&self, message: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn expect(&mut self, byte: u8) -> Result<(), ExprError> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", byte as char)))
        }
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<Arc<Expr>, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = add(lhs, rhs);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = sub(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    // term := unary (('*' | '/') unary)*
    fn term(&mut self) -> Result<Arc<Expr>, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = mul(lhs, rhs);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = div(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    // unary := '-' unary | '+' unary | power
    fn unary(&mut self) -> Result<Arc<Expr>, ExprError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(neg(self.unary()?))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    // power := primary ('^' exponent)?, right associative through the
    // exponent, which must fold to an integer constant.
    fn power(&mut self) -> Result<Arc<Expr>, ExprError> {
        let base = self.primary()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        self.skip_ws();
        let at = self.pos;
        let exponent = self.unary()?;
        match *exponent {
            Expr::Const(c) if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 => Ok(pow(base, c as i32)),
            _ => Err(ExprError::NonIntegerExponent { offset: at }),
        }
    }

    fn primary(&mut self) -> Result<Arc<Expr>, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.syntax("unexpected character")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Arc<Expr>, ExprError> {
        let start = self.pos;
        let src = self.src;
        let digits = |p: &mut usize| {
            while *p < src.len() && src[*p].is_ascii_digit() {
                *p += 1;
            }
        };
        digits(&mut self.pos);
        if self.pos < src.len() && src[self.pos] == b'.' {
            self.pos += 1;
            digits(&mut self.pos);
        }
        if self.pos < src.len() && (src[self.pos] == b'e' || src[self.pos] == b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < src.len() && (src[self.pos] == b'+' || src[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < src.len() && src[self.pos].is_ascii_digit() {
                digits(&mut self.pos);
            } else {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(constant).map_err(|_| ExprError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })
    }

    fn identifier(&mut self) -> Result<Arc<Expr>, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if let Some(index) = self.names.iter().position(|n| *n == name) {
            return Ok(Arc::new(Expr::Var(index)));
        }
        if let Some(func) = Func::from_name(name) {
            if self.peek() != Some(b'(') {
                return Err(self.syntax(&format!("expected `(` after `{name}`")));
            }
            self.pos += 1;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(call(func, arg));
        }
        if name == "pi" {
            return Ok(constant(std::f64::consts::PI));
        }
        Err(ExprError::UnknownIdentifier {
            name: name.to_string(),
            offset: start,
        })
    }
}
