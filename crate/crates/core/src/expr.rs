//! Expression trees for family components, constraints and level sets.
//!
//! The surface syntax is small: rational and decimal literals, indexed
//! variables `x1, a2, y3`, the four arithmetic operations, unary minus,
//! natural number powers written `base ^ k`, and `sin/cos/exp/log` applied
//! to a parenthesized argument. Precedence from tightest to loosest is
//! power, unary minus, `*` and `/`, then `+` and `-`; binary operators
//! associate left. A slash directly between digits, as in `3/4`, lexes as
//! one rational literal, so `3/4 ^ 2` squares three quarters.
//!
//! Printing is fully parenthesized and canonical: `parse(print(e))` equals
//! `e` up to rewriting negative constants as negated positive ones, and no
//! simplification ever happens. Differentiation applies the usual rules
//! and keeps the result as a literal tree.

use crate::linalg::{Elementary, ElementaryError, Rat, Scalar};
use num::{BigInt, One, ToPrimitive, Zero};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarClass {
    X,
    A,
    Y,
}

impl fmt::Display for VarClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarClass::X => "x",
            VarClass::A => "a",
            VarClass::Y => "y",
        })
    }
}

/// Indexed variable; indices are 1-based in the surface syntax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub class: VarClass,
    pub index: usize,
}

impl Var {
    pub fn x(index: usize) -> Self {
        Var {
            class: VarClass::X,
            index,
        }
    }

    pub fn a(index: usize) -> Self {
        Var {
            class: VarClass::A,
            index,
        }
    }

    pub fn y(index: usize) -> Self {
        Var {
            class: VarClass::Y,
            index,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.class, self.index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Constant(Rat),
    Var(Var),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    IntPow(Box<Expr>, u32),
    Func(Elementary, Box<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("malformed number at byte {offset}: {message}")]
    MalformedNumber { offset: usize, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("unbound variable {var}")]
    UnboundVariable { var: Var },
    #[error(transparent)]
    Elementary(#[from] ElementaryError),
}

/// Values for the three variable classes; slices may be empty for classes
/// the expression does not use.
#[derive(Debug, Clone, Copy)]
pub struct Bindings<'a, S> {
    pub x: &'a [S],
    pub a: &'a [S],
    pub y: &'a [S],
}

impl<'a, S> Bindings<'a, S> {
    pub fn xa(x: &'a [S], a: &'a [S]) -> Self {
        Bindings { x, a, y: &[] }
    }

    pub fn y_only(y: &'a [S]) -> Self {
        Bindings { x: &[], a: &[], y }
    }

    fn lookup(&self, var: Var) -> Option<&S> {
        let slot = match var.class {
            VarClass::X => self.x,
            VarClass::A => self.a,
            VarClass::Y => self.y,
        };
        var.index.checked_sub(1).and_then(|i| slot.get(i))
    }
}

/// Largest index used per variable class; zero means the class is unused.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VarBounds {
    pub max_x: usize,
    pub max_a: usize,
    pub max_y: usize,
}

impl VarBounds {
    fn absorb(&mut self, var: Var) {
        let slot = match var.class {
            VarClass::X => &mut self.max_x,
            VarClass::A => &mut self.max_a,
            VarClass::Y => &mut self.max_y,
        };
        *slot = (*slot).max(var.index);
    }

    fn merge(self, other: VarBounds) -> VarBounds {
        VarBounds {
            max_x: self.max_x.max(other.max_x),
            max_a: self.max_a.max(other.max_a),
            max_y: self.max_y.max(other.max_y),
        }
    }
}

impl Expr {
    pub fn constant(r: Rat) -> Expr {
        Expr::Constant(r)
    }

    pub fn int(v: i64) -> Expr {
        Expr::Constant(Rat::from_integer(BigInt::from(v)))
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn var_bounds(&self) -> VarBounds {
        match self {
            Expr::Constant(_) => VarBounds::default(),
            Expr::Var(v) => {
                let mut b = VarBounds::default();
                b.absorb(*v);
                b
            }
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) | Expr::Div(l, r) => {
                l.var_bounds().merge(r.var_bounds())
            }
            Expr::Neg(e) | Expr::IntPow(e, _) | Expr::Func(_, e) => e.var_bounds(),
        }
    }

    pub fn uses_elementary(&self) -> bool {
        match self {
            Expr::Constant(_) | Expr::Var(_) => false,
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) | Expr::Div(l, r) => {
                l.uses_elementary() || r.uses_elementary()
            }
            Expr::Neg(e) | Expr::IntPow(e, _) => e.uses_elementary(),
            Expr::Func(_, _) => true,
        }
    }

    /// Canonical form reached by printing and reparsing: negative constants
    /// become negated positive constants, everything else is unchanged.
    pub fn canonicalized(&self) -> Expr {
        match self {
            Expr::Constant(c) => {
                if is_negative(c) {
                    Expr::Neg(Box::new(Expr::Constant(-c.clone())))
                } else {
                    Expr::Constant(c.clone())
                }
            }
            Expr::Var(v) => Expr::Var(*v),
            Expr::Add(l, r) => Expr::Add(
                Box::new(l.canonicalized()),
                Box::new(r.canonicalized()),
            ),
            Expr::Sub(l, r) => Expr::Sub(
                Box::new(l.canonicalized()),
                Box::new(r.canonicalized()),
            ),
            Expr::Mul(l, r) => Expr::Mul(
                Box::new(l.canonicalized()),
                Box::new(r.canonicalized()),
            ),
            Expr::Div(l, r) => Expr::Div(
                Box::new(l.canonicalized()),
                Box::new(r.canonicalized()),
            ),
            Expr::Neg(e) => Expr::Neg(Box::new(e.canonicalized())),
            Expr::IntPow(e, k) => Expr::IntPow(Box::new(e.canonicalized()), *k),
            Expr::Func(f, e) => Expr::Func(*f, Box::new(e.canonicalized())),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Constant(c) => {
                if is_negative(c) {
                    write!(f, "(-{})", format_rat(&-c.clone()))
                } else {
                    f.write_str(&format_rat(c))
                }
            }
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Add(l, r) => write!(f, "({l} + {r})"),
            Expr::Sub(l, r) => write!(f, "({l} - {r})"),
            Expr::Mul(l, r) => write!(f, "({l} * {r})"),
            Expr::Div(l, r) => write!(f, "({l} / {r})"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::IntPow(e, k) => write!(f, "({e} ^ {k})"),
            Expr::Func(func, e) => write!(f, "{func}({e})"),
        }
    }
}

fn is_negative(r: &Rat) -> bool {
    r.numer().sign() == num::bigint::Sign::Minus
}

/// `p/q` for proper fractions, plain integer otherwise; the sign rides on
/// the numerator.
pub fn format_rat(r: &Rat) -> String {
    if r.denom() == &BigInt::one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn evaluate<S: Scalar>(e: &Expr, env: &Bindings<'_, S>) -> Result<S, EvalError> {
    match e {
        Expr::Constant(c) => Ok(S::from_rational(c)),
        Expr::Var(v) => env
            .lookup(*v)
            .cloned()
            .ok_or(EvalError::UnboundVariable { var: *v }),
        Expr::Add(l, r) => Ok(evaluate(l, env)?.add(&evaluate(r, env)?)),
        Expr::Sub(l, r) => Ok(evaluate(l, env)?.sub(&evaluate(r, env)?)),
        Expr::Mul(l, r) => Ok(evaluate(l, env)?.mul(&evaluate(r, env)?)),
        Expr::Div(l, r) => {
            let num = evaluate(l, env)?;
            let den = evaluate(r, env)?;
            num.checked_div(&den).ok_or(EvalError::DivisionByZero)
        }
        Expr::Neg(e) => Ok(evaluate(e, env)?.neg()),
        Expr::IntPow(e, k) => Ok(evaluate(e, env)?.int_pow(*k)),
        Expr::Func(func, e) => Ok(evaluate(e, env)?.elementary(*func)?),
    }
}

/// Partial derivative with respect to `var`, by the textbook rules. The
/// result is left unsimplified; evaluation handles the bookkeeping.
pub fn derive(e: &Expr, var: Var) -> Expr {
    match e {
        Expr::Constant(_) => Expr::int(0),
        Expr::Var(v) => {
            if *v == var {
                Expr::int(1)
            } else {
                Expr::int(0)
            }
        }
        Expr::Add(l, r) => Expr::Add(Box::new(derive(l, var)), Box::new(derive(r, var))),
        Expr::Sub(l, r) => Expr::Sub(Box::new(derive(l, var)), Box::new(derive(r, var))),
        Expr::Mul(l, r) => Expr::Add(
            Box::new(Expr::Mul(Box::new(derive(l, var)), r.clone())),
            Box::new(Expr::Mul(l.clone(), Box::new(derive(r, var)))),
        ),
        Expr::Div(l, r) => Expr::Div(
            Box::new(Expr::Sub(
                Box::new(Expr::Mul(Box::new(derive(l, var)), r.clone())),
                Box::new(Expr::Mul(l.clone(), Box::new(derive(r, var)))),
            )),
            Box::new(Expr::IntPow(r.clone(), 2)),
        ),
        Expr::Neg(e) => Expr::Neg(Box::new(derive(e, var))),
        Expr::IntPow(_, 0) => Expr::int(0),
        Expr::IntPow(base, k) => Expr::Mul(
            Box::new(Expr::Mul(
                Box::new(Expr::int(*k as i64)),
                Box::new(Expr::IntPow(base.clone(), k - 1)),
            )),
            Box::new(derive(base, var)),
        ),
        Expr::Func(func, arg) => {
            let inner = Box::new(derive(arg, var));
            match func {
                Elementary::Sin => Expr::Mul(
                    Box::new(Expr::Func(Elementary::Cos, arg.clone())),
                    inner,
                ),
                Elementary::Cos => Expr::Mul(
                    Box::new(Expr::Neg(Box::new(Expr::Func(Elementary::Sin, arg.clone())))),
                    inner,
                ),
                Elementary::Exp => Expr::Mul(
                    Box::new(Expr::Func(Elementary::Exp, arg.clone())),
                    inner,
                ),
                Elementary::Log => Expr::Div(inner, arg.clone()),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(Rat),
    Var(Var),
    Func(Elementary),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Num(_) => "number".into(),
            Token::Var(v) => format!("variable {v}"),
            Token::Func(f) => format!("function {f}"),
            Token::Plus => "'+'".into(),
            Token::Minus => "'-'".into(),
            Token::Star => "'*'".into(),
            Token::Slash => "'/'".into(),
            Token::Caret => "'^'".into(),
            Token::LParen => "'('".into(),
            Token::RParen => "')'".into(),
            Token::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn peek_at(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> Result<Token, ParseError> {
        let start = self.pos;
        let int_part = self.digits();
        match self.peek() {
            Some(b'.') => {
                self.pos += 1;
                if !matches!(self.peek(), Some(b'0'..=b'9')) {
                    return Err(ParseError::MalformedNumber {
                        offset: start,
                        message: "expected digits after decimal point".into(),
                    });
                }
                let frac = self.digits();
                let scale = BigInt::from(10u32).pow(frac.len() as u32);
                let numer: BigInt = format!("{int_part}{frac}").parse().expect("digits");
                Ok(Token::Num(Rat::new(numer, scale)))
            }
            // A slash glued between digits makes one rational literal.
            Some(b'/') if matches!(self.peek_at(1), Some(b'0'..=b'9')) => {
                self.pos += 1;
                let den_text = self.digits();
                let numer: BigInt = int_part.parse().expect("digits");
                let denom: BigInt = den_text.parse().expect("digits");
                if denom.is_zero() {
                    return Err(ParseError::MalformedNumber {
                        offset: start,
                        message: "denominator is zero".into(),
                    });
                }
                Ok(Token::Num(Rat::new(numer, denom)))
            }
            _ => {
                let numer: BigInt = int_part.parse().expect("digits");
                Ok(Token::Num(Rat::from_integer(numer)))
            }
        }
    }

    fn identifier(&mut self) -> Result<Token, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'a'..=b'z') | Some(b'A'..=b'Z')) {
            self.pos += 1;
        }
        let name = String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned();
        let index_text = self.digits();
        if index_text.is_empty() {
            return match name.as_str() {
                "sin" => Ok(Token::Func(Elementary::Sin)),
                "cos" => Ok(Token::Func(Elementary::Cos)),
                "exp" => Ok(Token::Func(Elementary::Exp)),
                "log" => Ok(Token::Func(Elementary::Log)),
                _ => Err(ParseError::UnknownIdentifier {
                    offset: start,
                    name,
                }),
            };
        }
        let class = match name.as_str() {
            "x" => VarClass::X,
            "a" => VarClass::A,
            "y" => VarClass::Y,
            _ => {
                return Err(ParseError::UnknownIdentifier {
                    offset: start,
                    name: format!("{name}{index_text}"),
                })
            }
        };
        let index: usize = index_text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: "variable index too large".into(),
        })?;
        if index == 0 {
            return Err(ParseError::Syntax {
                offset: start,
                message: "variable index must be at least 1".into(),
            });
        }
        Ok(Token::Var(Var { class, index }))
    }

    fn tokens(mut self) -> Result<Vec<(Token, usize)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.peek(), Some(b' ') | Some(b'\t')) {
                self.pos += 1;
            }
            let offset = self.pos;
            let Some(c) = self.peek() else {
                out.push((Token::Eof, offset));
                return Ok(out);
            };
            let token = match c {
                b'0'..=b'9' => self.number()?,
                b'a'..=b'z' | b'A'..=b'Z' => self.identifier()?,
                b'+' => {
                    self.pos += 1;
                    Token::Plus
                }
                b'-' => {
                    self.pos += 1;
                    Token::Minus
                }
                b'*' => {
                    self.pos += 1;
                    Token::Star
                }
                b'/' => {
                    self.pos += 1;
                    Token::Slash
                }
                b'^' => {
                    self.pos += 1;
                    Token::Caret
                }
                b'(' => {
                    self.pos += 1;
                    Token::LParen
                }
                b')' => {
                    self.pos += 1;
                    Token::RParen
                }
                other => {
                    return Err(ParseError::Syntax {
                        offset,
                        message: format!("unexpected character '{}'", other as char),
                    })
                }
            };
            out.push((token, offset));
        }
    }
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Token, what: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.advance();
            Ok(())
        } else {
            Err(ParseError::Syntax {
                offset: self.offset(),
                message: format!("expected {what}, found {}", self.peek().describe()),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Token::Plus => {
                    self.advance();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Token::Minus => {
                    self.advance();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Token::Star => {
                    self.advance();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Token::Slash => {
                    self.advance();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Token::Minus {
            self.advance();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if *self.peek() != Token::Caret {
            return Ok(base);
        }
        self.advance();
        let offset = self.offset();
        match self.advance() {
            Token::Num(r) => {
                if r.denom() != &BigInt::one() {
                    return Err(ParseError::Syntax {
                        offset,
                        message: "exponent must be a natural number".into(),
                    });
                }
                let k = r.numer().to_u32().ok_or(ParseError::Syntax {
                    offset,
                    message: "exponent out of range".into(),
                })?;
                Ok(Expr::IntPow(Box::new(base), k))
            }
            other => Err(ParseError::Syntax {
                offset,
                message: format!("expected a natural number exponent, found {}", other.describe()),
            }),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.advance() {
            Token::Num(r) => Ok(Expr::Constant(r)),
            Token::Var(v) => Ok(Expr::Var(v)),
            Token::Func(f) => {
                self.expect(Token::LParen, "'(' after function name")?;
                let arg = self.expr()?;
                self.expect(Token::RParen, "')'")?;
                Ok(Expr::Func(f, Box::new(arg)))
            }
            Token::LParen => {
                let inner = self.expr()?;
                self.expect(Token::RParen, "')'")?;
                Ok(inner)
            }
            other => Err(ParseError::Syntax {
                offset,
                message: format!("expected expression, found {}", other.describe()),
            }),
        }
    }
}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let tokens = Lexer::new(src).tokens()?;
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.expr()?;
    if *parser.peek() != Token::Eof {
        return Err(ParseError::Syntax {
            offset: parser.offset(),
            message: format!("unexpected {}", parser.peek().describe()),
        });
    }
    Ok(expr)
}

/// Convenience wrapper for literal rationals in scenario values: an
/// optionally signed integer, fraction or decimal.
pub fn parse_rational(src: &str) -> Result<Rat, ParseError> {
    let expr = parse(src)?;
    fn fold(e: &Expr) -> Option<Rat> {
        match e {
            Expr::Constant(c) => Some(c.clone()),
            Expr::Neg(inner) => fold(inner).map(|v| -v),
            _ => None,
        }
    }
    fold(&expr).ok_or(ParseError::Syntax {
        offset: 0,
        message: "expected a literal rational".into(),
    })
}

pub use crate::linalg::Elementary as FuncName;
