//! Attribute expressions relating pattern variables.
//!
//! ```text
//! "provided"                          constant
//! b.name                              copy
//! 2 * b.callCount + 1                 affine
//! b.totalTimeMs / max(b.callCount, 1) ratio
//! ```

use std::fmt;

use crate::model::{Value, ValueKind};

/// A `var.attribute` reference. `V` is the variable representation: a name
/// while parsing, an element index once resolved against a rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Slot<V = String> {
    pub var: V,
    pub attr: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr<V = String> {
    Const(Value),
    Copy(Slot<V>),
    Affine { scale: f64, operand: Slot<V>, offset: f64 },
    Ratio { num: Slot<V>, den: Slot<V>, floor: f64 },
}

impl<V> Expr<V> {
    pub fn operands(&self) -> Vec<&Slot<V>> {
        match self {
            Expr::Const(_) => vec![],
            Expr::Copy(s) | Expr::Affine { operand: s, .. } => vec![s],
            Expr::Ratio { num, den, .. } => vec![num, den],
        }
    }

    /// Constant and copy are the only forms that can be solved for their
    /// operand.
    pub fn is_invertible(&self) -> bool {
        matches!(self, Expr::Const(_) | Expr::Copy(_))
    }

    pub fn map_vars<W, E>(self, mut f: impl FnMut(V) -> Result<W, E>) -> Result<Expr<W>, E> {
        let mut slot = |s: Slot<V>| -> Result<Slot<W>, E> { Ok(Slot { var: f(s.var)?, attr: s.attr }) };
        Ok(match self {
            Expr::Const(v) => Expr::Const(v),
            Expr::Copy(s) => Expr::Copy(slot(s)?),
            Expr::Affine { scale, operand, offset } => Expr::Affine {
                scale,
                operand: slot(operand)?,
                offset,
            },
            Expr::Ratio { num, den, floor } => Expr::Ratio {
                num: slot(num)?,
                den: slot(den)?,
                floor,
            },
        })
    }

    /// Evaluates the expression into a value of `kind`. `get` resolves
    /// operands; `None` if an operand is missing or ill-typed.
    pub fn eval(&self, kind: ValueKind, get: impl Fn(&Slot<V>) -> Option<Value>) -> Option<Value> {
        let numeric = |x: f64| -> Option<Value> {
            match kind {
                ValueKind::Real => Some(Value::Real(x)),
                ValueKind::Integer if x.is_finite() => Some(Value::Int(x.round() as i64)),
                _ => None,
            }
        };
        match self {
            Expr::Const(v) => v.clone().coerce(kind),
            Expr::Copy(s) => get(s)?.coerce(kind),
            Expr::Affine { scale, operand, offset } => numeric(scale * get(operand)?.as_f64()? + offset),
            Expr::Ratio { num, den, floor } => {
                let n = get(num)?.as_f64()?;
                let d = get(den)?.as_f64()?.max(*floor);
                numeric(n / d)
            }
        }
    }
}

impl fmt::Display for Slot<String> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.var, self.attr)
    }
}

#[derive(Debug, PartialEq)]
enum Tok {
    Str(String),
    Num(String),
    Ident(String),
    Sym(char),
}

fn tokenize(text: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let signed = c == '-' && chars.clone().nth(1).is_some_and(|d| d.is_ascii_digit());
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some('\\') => s.push(chars.next().ok_or("unterminated escape")?),
                    Some(c) => s.push(c),
                    None => return Err("unterminated string literal".into()),
                }
            }
            out.push(Tok::Str(s));
        } else if c.is_ascii_digit() || signed {
            let mut s = String::new();
            s.push(c);
            chars.next();
            while let Some(&d) = chars.peek() {
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' {
                    s.push(d);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push(Tok::Num(s));
        } else if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_alphanumeric() || d == '_' {
                    s.push(d);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push(Tok::Ident(s));
        } else if "*+-/(),.".contains(c) {
            out.push(Tok::Sym(c));
            chars.next();
        } else {
            return Err(format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

fn number(s: &str) -> Result<Value, String> {
    if s.contains(['.', 'e', 'E']) {
        s.parse::<f64>().map(Value::Real).map_err(|e| format!("bad number {s:?}: {e}"))
    } else {
        s.parse::<i64>().map(Value::Int).map_err(|e| format!("bad number {s:?}: {e}"))
    }
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| match t {
            Tok::Str(s) => Tok::Str(s.clone()),
            Tok::Num(s) => Tok::Num(s.clone()),
            Tok::Ident(s) => Tok::Ident(s.clone()),
            Tok::Sym(c) => Tok::Sym(*c),
        });
        self.pos += 1;
        t
    }

    fn expect(&mut self, c: char) -> Result<(), String> {
        match self.next() {
            Some(Tok::Sym(d)) if d == c => Ok(()),
            other => Err(format!("expected {c:?}, found {other:?}")),
        }
    }

    fn slot(&mut self) -> Result<Slot, String> {
        let var = match self.next() {
            Some(Tok::Ident(v)) => v,
            other => return Err(format!("expected variable, found {other:?}")),
        };
        self.expect('.')?;
        match self.next() {
            Some(Tok::Ident(attr)) => Ok(Slot { var, attr }),
            other => Err(format!("expected attribute name, found {other:?}")),
        }
    }

    fn num(&mut self) -> Result<f64, String> {
        match self.next() {
            Some(Tok::Num(s)) => number(&s).map(|v| v.as_f64().expect("numeric")),
            other => Err(format!("expected number, found {other:?}")),
        }
    }

    fn offset(&mut self) -> Result<f64, String> {
        match self.peek() {
            Some(Tok::Sym('+')) => {
                self.pos += 1;
                self.num()
            }
            Some(Tok::Sym('-')) => {
                self.pos += 1;
                Ok(-self.num()?)
            }
            // "-3" lexes as a single signed number
            Some(Tok::Num(s)) if s.starts_with('-') => self.num(),
            _ => Ok(0.0),
        }
    }

    fn expr(&mut self) -> Result<Expr, String> {
        match self.peek() {
            Some(Tok::Str(_)) => match self.next() {
                Some(Tok::Str(s)) => Ok(Expr::Const(Value::Str(s))),
                _ => unreachable!(),
            },
            Some(Tok::Ident(s)) if s == "true" || s == "false" => {
                let b = s == "true";
                self.pos += 1;
                Ok(Expr::Const(Value::Bool(b)))
            }
            Some(Tok::Num(_)) => {
                let Some(Tok::Num(s)) = self.next() else { unreachable!() };
                if matches!(self.peek(), Some(Tok::Sym('*'))) {
                    self.pos += 1;
                    let scale = number(&s)?.as_f64().expect("numeric");
                    let operand = self.slot()?;
                    let offset = self.offset()?;
                    Ok(Expr::Affine { scale, operand, offset })
                } else {
                    Ok(Expr::Const(number(&s)?))
                }
            }
            Some(Tok::Ident(_)) => {
                let s = self.slot()?;
                match self.peek() {
                    None => Ok(Expr::Copy(s)),
                    Some(Tok::Sym('/')) => {
                        self.pos += 1;
                        match self.next() {
                            Some(Tok::Ident(m)) if m == "max" => {}
                            other => return Err(format!("expected max(..), found {other:?}")),
                        }
                        self.expect('(')?;
                        let den = self.slot()?;
                        self.expect(',')?;
                        let floor = self.num()?;
                        self.expect(')')?;
                        Ok(Expr::Ratio { num: s, den, floor })
                    }
                    Some(Tok::Sym('*')) => {
                        self.pos += 1;
                        let scale = self.num()?;
                        let offset = self.offset()?;
                        Ok(Expr::Affine { scale, operand: s, offset })
                    }
                    _ => {
                        let offset = self.offset()?;
                        Ok(Expr::Affine { scale: 1.0, operand: s, offset })
                    }
                }
            }
            other => Err(format!("unexpected token {other:?}")),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let mut p = Parser {
            toks: tokenize(text)?,
            pos: 0,
        };
        let e = p.expr()?;
        if p.pos < p.toks.len() {
            return Err(format!("trailing input after expression in {text:?}"));
        }
        Ok(e)
    }
}

pub fn parse_slot(text: &str) -> Result<Slot, String> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let s = p.slot()?;
    if p.pos < p.toks.len() {
        return Err(format!("trailing input after slot in {text:?}"));
    }
    Ok(s)
}
