//! Recursive-descent parser for the polynomial expression language.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | '+' unary | power
//! power  := atom ('^' INTEGER)?
//! atom   := INTEGER | NAME | '(' expr ')'
//! ```
//!
//! `/` is only accepted with a nonzero constant divisor, which covers
//! rational literals such as `1/2`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::{is_valid_name, ExprError, Expression, Rational, VarTable};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Name(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(pos, ch)) = it.peek() {
        if ch.is_whitespace() {
            it.next();
            continue;
        }
        let single = match ch {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((pos, tok));
            it.next();
            continue;
        }
        if ch.is_ascii_digit() {
            let mut end = pos;
            while let Some(&(p, c)) = it.peek() {
                if c.is_ascii_digit() {
                    end = p + c.len_utf8();
                    it.next();
                } else {
                    break;
                }
            }
            if let Some(&(p, c)) = it.peek() {
                if c.is_alphabetic() || c == '_' || c == '.' {
                    return Err(ExprError::Syntax {
                        offset: p,
                        message: format!("unexpected `{c}` after number"),
                    });
                }
            }
            let n: BigInt = text[pos..end].parse().expect("digits");
            out.push((pos, Tok::Int(n)));
            continue;
        }
        if ch.is_alphabetic() || ch == '_' {
            let mut end = pos;
            while let Some(&(p, c)) = it.peek() {
                if c.is_alphanumeric() || c == '_' {
                    end = p + c.len_utf8();
                    it.next();
                } else {
                    break;
                }
            }
            let name = &text[pos..end];
            debug_assert!(is_valid_name(name));
            out.push((pos, Tok::Name(name.to_string())));
            continue;
        }
        return Err(ExprError::Syntax {
            offset: pos,
            message: format!("unexpected character `{ch}`"),
        });
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    vars: &'a Arc<VarTable>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Expression, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expression, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    acc = &acc * &self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let at = self.offset();
                    let divisor = self.unary()?;
                    match divisor.as_constant() {
                        Some(d) if !d.is_zero() => acc = acc.scale(&d.recip()),
                        _ => return Err(ExprError::BadDivision { offset: at }),
                    }
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expression, ExprError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                Ok(-self.unary()?)
            }
            Some(Tok::Plus) => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expression, ExprError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.bump();
        let at = self.offset();
        match self.bump() {
            Some(Tok::Int(n)) => {
                let exp = n.to_u32().ok_or(ExprError::BadExponent { offset: at })?;
                Ok(base.pow(exp))
            }
            _ => Err(ExprError::BadExponent { offset: at }),
        }
    }

    fn atom(&mut self) -> Result<Expression, ExprError> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::Int(n)) => Ok(Expression::constant(self.vars, Rational::from_integer(n))),
            Some(Tok::Name(name)) => match self.vars.index_of(&name) {
                Some(i) => Ok(Expression::var(self.vars, i)),
                None => Err(ExprError::UnknownVariable { name, offset: at }),
            },
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                if self.bump() != Some(Tok::RParen) {
                    self.pos -= 1;
                    return self.syntax("expected `)`");
                }
                Ok(inner)
            }
            Some(t) => {
                self.pos -= 1;
                self.syntax(format!("unexpected token {t:?}"))
            }
            None => self.syntax("unexpected end of input"),
        }
    }
}

/// Parses `text` into a canonical [`Expression`] over `vars`.
pub fn parse_expression(text: &str, vars: &Arc<VarTable>) -> Result<Expression, ExprError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        vars,
    };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return p.syntax("trailing input");
    }
    Ok(e)
}
