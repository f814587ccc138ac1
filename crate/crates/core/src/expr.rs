//! A small expression language for kernels and forcing terms.
//!
//! Expressions are written in the variables `t`, `s` and `x` with the
//! constants `pi` and `e`. Operator precedence, tightest first:
//!
//! | operator        | associativity |
//! |-----------------|---------------|
//! | `^`             | right         |
//! | unary `-`       | prefix        |
//! | `*` `/`         | left          |
//! | `+` `-`         | left          |
//!
//! so `-t^2` is `-(t^2)`. Functions take exactly one argument:
//! `sin cos tan exp ln sqrt abs`. Implicit multiplication (`5t`) is rejected.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("unknown character {ch:?} at offset {offset}")]
    UnknownCharacter { ch: char, offset: usize },
    #[error("malformed number literal at offset {offset}")]
    MalformedNumber { offset: usize },
    #[error("unexpected {found} at offset {offset}")]
    UnexpectedToken { found: String, offset: usize },
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unbalanced parentheses at offset {offset}")]
    UnbalancedParens { offset: usize },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unknown variable `{name}` at offset {offset} (expected t, s, x, pi or e)")]
    UnknownVariable { name: String, offset: usize },
    #[error("function `{name}` at offset {offset} takes exactly one argument, got {got}")]
    Arity {
        name: String,
        offset: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error in `{node}` at t={t}, s={s}, x={x}: {reason}")]
pub struct EvalError {
    pub node: String,
    pub reason: &'static str,
    pub t: f64,
    pub s: f64,
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Number,
    Identifier,
    Operator,
    LeftParen,
    RightParen,
    Comma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// Byte offset into the source.
    pub position: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    S,
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos];
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        let start = pos;
        let kind = match c {
            b'0'..=b'9' | b'.' => {
                pos = scan_number(bytes, pos)?;
                TokenKind::Number
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while pos < bytes.len()
                    && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_')
                {
                    pos += 1;
                }
                TokenKind::Identifier
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                pos += 1;
                TokenKind::Operator
            }
            b'(' => {
                pos += 1;
                TokenKind::LeftParen
            }
            b')' => {
                pos += 1;
                TokenKind::RightParen
            }
            b',' => {
                pos += 1;
                TokenKind::Comma
            }
            _ => {
                let ch = source[pos..].chars().next().unwrap_or('\u{fffd}');
                return Err(ParseError::UnknownCharacter { ch, offset: pos });
            }
        };
        tokens.push(Token {
            kind,
            lexeme: source[start..pos].to_string(),
            position: start,
        });
    }
    Ok(tokens)
}

/// Scans `digits [. digits] [(e|E) [+-] digits]` and returns the end offset.
fn scan_number(bytes: &[u8], start: usize) -> Result<usize, ParseError> {
    let mut pos = start;
    let mut first_dot = None;
    let mut digits = 0;
    while pos < bytes.len() && (bytes[pos].is_ascii_digit() || bytes[pos] == b'.') {
        if bytes[pos] == b'.' {
            if let Some(dot) = first_dot {
                return Err(ParseError::MalformedNumber { offset: dot });
            }
            first_dot = Some(pos);
        } else {
            digits += 1;
        }
        pos += 1;
    }
    if digits == 0 {
        return Err(ParseError::MalformedNumber { offset: start });
    }
    // Exponent only if followed by digits; `2e` alone would be implicit multiplication.
    if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
        let mut probe = pos + 1;
        if probe < bytes.len() && (bytes[probe] == b'+' || bytes[probe] == b'-') {
            probe += 1;
        }
        if probe < bytes.len() && bytes[probe].is_ascii_digit() {
            while probe < bytes.len() && bytes[probe].is_ascii_digit() {
                probe += 1;
            }
            pos = probe;
        } else {
            return Err(ParseError::MalformedNumber { offset: pos });
        }
    }
    let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii slice");
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(pos),
        _ => Err(ParseError::MalformedNumber { offset: start }),
    }
}

pub fn parse(tokens: &[Token]) -> Result<Expr, ParseError> {
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.expression()?;
    match parser.peek() {
        None => Ok(expr),
        Some(tok) if tok.kind == TokenKind::RightParen => Err(ParseError::UnbalancedParens {
            offset: tok.position,
        }),
        Some(tok) => Err(unexpected(tok)),
    }
}

fn unexpected(tok: &Token) -> ParseError {
    ParseError::UnexpectedToken {
        found: format!("`{}`", tok.lexeme),
        offset: tok.position,
    }
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&'a Token> {
        let tok = self.tokens.get(self.pos);
        self.pos += 1;
        tok
    }

    fn peek_op(&self, ops: &[&str]) -> Option<&'a str> {
        self.peek()
            .filter(|t| t.kind == TokenKind::Operator && ops.contains(&t.lexeme.as_str()))
            .map(|t| t.lexeme.as_str())
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.peek_op(&["+", "-"]) {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if op == "+" { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_op(&["*", "/"]) {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if op == "*" { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek_op(&["-"]).is_some() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek_op(&["^"]).is_some() {
            self.pos += 1;
            // Right-associative; the exponent may carry its own sign (`2^-1`).
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let tok = self.next().ok_or(ParseError::UnexpectedEnd)?;
        match tok.kind {
            TokenKind::Number => {
                let v: f64 = tok
                    .lexeme
                    .parse()
                    .map_err(|_| ParseError::MalformedNumber {
                        offset: tok.position,
                    })?;
                Ok(Expr::Const(v))
            }
            TokenKind::LeftParen => {
                let inner = self.expression()?;
                match self.next() {
                    Some(t) if t.kind == TokenKind::RightParen => Ok(inner),
                    Some(t) => Err(unexpected(t)),
                    None => Err(ParseError::UnbalancedParens {
                        offset: tok.position,
                    }),
                }
            }
            TokenKind::Identifier => self.identifier(tok),
            TokenKind::RightParen => Err(ParseError::UnbalancedParens {
                offset: tok.position,
            }),
            TokenKind::Operator | TokenKind::Comma => Err(unexpected(tok)),
        }
    }

    fn identifier(&mut self, tok: &'a Token) -> Result<Expr, ParseError> {
        let name = tok.lexeme.as_str();
        let is_call = self.peek().is_some_and(|t| t.kind == TokenKind::LeftParen);
        if is_call {
            let func = Func::from_name(name).ok_or_else(|| ParseError::UnknownFunction {
                name: name.to_string(),
                offset: tok.position,
            })?;
            let open = self.next().expect("peeked");
            let mut args = vec![self.expression()?];
            loop {
                match self.next() {
                    Some(t) if t.kind == TokenKind::Comma => args.push(self.expression()?),
                    Some(t) if t.kind == TokenKind::RightParen => break,
                    Some(t) => return Err(unexpected(t)),
                    None => {
                        return Err(ParseError::UnbalancedParens {
                            offset: open.position,
                        })
                    }
                }
            }
            if args.len() != 1 {
                return Err(ParseError::Arity {
                    name: name.to_string(),
                    offset: tok.position,
                    got: args.len(),
                });
            }
            let arg = args.pop().expect("one argument");
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        match name {
            "t" => Ok(Expr::Var(Var::T)),
            "s" => Ok(Expr::Var(Var::S)),
            "x" => Ok(Expr::Var(Var::X)),
            "pi" => Ok(Expr::Const(std::f64::consts::PI)),
            "e" => Ok(Expr::Const(std::f64::consts::E)),
            _ if Func::from_name(name).is_some() => Err(ParseError::UnexpectedToken {
                found: format!("function `{name}` without argument list"),
                offset: tok.position,
            }),
            _ => Err(ParseError::UnknownVariable {
                name: name.to_string(),
                offset: tok.position,
            }),
        }
    }
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(source: &str) -> Result<Self, Self::Err> {
        parse(&tokenize(source)?)
    }
}

impl Expr {
    pub fn eval(&self, t: f64, s: f64, x: f64) -> Result<f64, EvalError> {
        let fail = |node: &Expr, reason| EvalError {
            node: node.to_string(),
            reason,
            t,
            s,
            x,
        };
        let value = match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::T) => t,
            Expr::Var(Var::S) => s,
            Expr::Var(Var::X) => x,
            Expr::Neg(e) => -e.eval(t, s, x)?,
            Expr::Binary(op, l, r) => {
                let a = l.eval(t, s, x)?;
                let b = r.eval(t, s, x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(fail(self, "division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(fail(self, "negative base with non-integer exponent"));
                        }
                        if a == 0.0 && b < 0.0 {
                            return Err(fail(self, "zero raised to a negative power"));
                        }
                        a.powf(b)
                    }
                }
            }
            Expr::Call(f, arg) => {
                let a = arg.eval(t, s, x)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Tan => a.tan(),
                    Func::Exp => a.exp(),
                    Func::Ln => {
                        if a <= 0.0 {
                            return Err(fail(self, "logarithm of a non-positive value"));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(fail(self, "square root of a negative value"));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(fail(self, "non-finite result"))
        }
    }

    /// True when the tree mentions `var` anywhere.
    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(e) | Expr::Call(_, e) => e.depends_on(var),
            Expr::Binary(_, l, r) => l.depends_on(var) || r.depends_on(var),
        }
    }
}

/// Fully parenthesized form that parses back to an equivalent tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => {
                write!(f, "(-{:?})", -c)
            }
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Var(Var::S) => f.write_str("s"),
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, l, r) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({l} {sym} {r})")
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}
