//! A small arithmetic expression language over the variables `x` and `t`.
//!
//! Scenario coefficient functions (cell density `f(x,t)`, tip force `g(t)`,
//! friction `beta(t)`) are supplied as text and parsed into an [`Expr`] tree.
//!
//! Grammar, lowest to highest precedence:
//!
//! ```text
//! sum     := product (('+' | '-') product)*         left associative
//! product := unary (('*' | '/') unary)*             left associative
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?                      right associative
//! atom    := number | 'x' | 't' | func '(' args ')' | '(' sum ')'
//! func    := sin | cos | exp | abs | max | min
//! ```
//!
//! `-x^2` therefore means `-(x^2)` and `2^-1` means `2^(-1)`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier '{name}' at position {pos}")]
    UnknownIdent { name: String, pos: usize },
    #[error("function '{name}' at position {pos} takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        pos: usize,
        expected: usize,
        got: usize,
    },
    #[error("expression is empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("non-finite result from '{op}' at x={x}, t={t}")]
    NonFinite { op: String, x: f64, t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    Max,
    Min,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "max" => Func::Max,
            "min" => Func::Min,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Max => "max",
            Func::Min => "min",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Max | Func::Min => 2,
            _ => 1,
        }
    }
}

/// Parsed expression tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        parse_expr(source)
    }

    pub fn constant(value: f64) -> Expr {
        Expr::Num(value)
    }

    /// Evaluates at `(x, t)`. Any non-finite intermediate value is an error.
    pub fn eval(&self, x: f64, t: f64) -> Result<f64, EvalError> {
        let value = match self {
            Expr::Num(v) => return Ok(*v),
            Expr::Var(Var::X) => return Ok(x),
            Expr::Var(Var::T) => return Ok(t),
            Expr::Neg(inner) => return Ok(-inner.eval(x, t)?),
            Expr::Bin(op, lhs, rhs) => {
                let a = lhs.eval(x, t)?;
                let b = rhs.eval(x, t)?;
                let v = match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(non_finite("/", x, t));
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                };
                (op.symbol().to_string(), v)
            }
            Expr::Call(func, args) => {
                let a = args[0].eval(x, t)?;
                let v = match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Abs => a.abs(),
                    Func::Max => a.max(args[1].eval(x, t)?),
                    Func::Min => a.min(args[1].eval(x, t)?),
                };
                (func.name().to_string(), v)
            }
        };
        let (op, v) = value;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { op, x, t })
        }
    }

    pub fn references(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(inner) => inner.references(var),
            Expr::Bin(_, a, b) => a.references(var) || b.references(var),
            Expr::Call(_, args) => args.iter().any(|a| a.references(var)),
        }
    }

    /// Finite-difference approximation of the x-derivative.
    ///
    /// Central differences in the interior of `[0, 1]`, second-order
    /// one-sided stencils where `x ± h` would leave the interval.
    pub fn partial_x(&self, x: f64, t: f64, h: f64) -> Result<f64, EvalError> {
        eval_partial_x(self, x, t, h)
    }
}

fn non_finite(op: &str, x: f64, t: f64) -> EvalError {
    EvalError::NonFinite {
        op: op.to_string(),
        x,
        t,
    }
}

/// Default finite-difference step for [`eval_partial_x`].
pub const DEFAULT_FD_STEP: f64 = 1e-6;

pub fn parse_expr(source: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(source)?;
    if tokens.len() == 1 {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser { tokens, cursor: 0 };
    let expr = parser.sum()?;
    match parser.peek() {
        (Token::End, _) => Ok(expr),
        (tok, pos) => Err(ParseError::Syntax {
            pos,
            msg: format!("unexpected {}", tok.describe()),
        }),
    }
}

pub fn eval_expr(expr: &Expr, x: f64, t: f64) -> Result<f64, EvalError> {
    expr.eval(x, t)
}

pub fn eval_partial_x(expr: &Expr, x: f64, t: f64, h: f64) -> Result<f64, EvalError> {
    let f = |x: f64| expr.eval(x, t);
    if x - h < 0.0 {
        Ok((-3.0 * f(x)? + 4.0 * f(x + h)? - f(x + 2.0 * h)?) / (2.0 * h))
    } else if x + h > 1.0 {
        Ok((3.0 * f(x)? - 4.0 * f(x - h)? + f(x - 2.0 * h)?) / (2.0 * h))
    } else {
        Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Num(v) => format!("number {v}"),
            Token::Ident(s) => format!("identifier '{s}'"),
            Token::Op(c) => format!("operator '{c}'"),
            Token::LParen => "'('".into(),
            Token::RParen => "')'".into(),
            Token::Comma => "','".into(),
            Token::End => "end of input".into(),
        }
    }
}

fn tokenize(source: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        match c {
            '+' | '-' | '*' | '/' | '^' => {
                tokens.push((Token::Op(c), start));
                i += 1;
            }
            '(' => {
                tokens.push((Token::LParen, start));
                i += 1;
            }
            ')' => {
                tokens.push((Token::RParen, start));
                i += 1;
            }
            ',' => {
                tokens.push((Token::Comma, start));
                i += 1;
            }
            '0'..='9' | '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &source[start..i];
                let value = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                    pos: start,
                    msg: format!("malformed number '{text}'"),
                })?;
                tokens.push((Token::Num(value), start));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push((Token::Ident(source[start..i].to_string()), start));
            }
            _ => {
                let ch = source[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    pos: start,
                    msg: format!("unexpected character '{ch}'"),
                });
            }
        }
    }
    tokens.push((Token::End, source.len()));
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    cursor: usize,
}

impl Parser {
    fn peek(&self) -> (Token, usize) {
        self.tokens[self.cursor].clone()
    }

    fn bump(&mut self) -> (Token, usize) {
        let tok = self.peek();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        tok
    }

    fn expect(&mut self, want: Token) -> Result<(), ParseError> {
        let (tok, pos) = self.bump();
        if tok == want {
            Ok(())
        } else {
            Err(ParseError::Syntax {
                pos,
                msg: format!("expected {}, found {}", want.describe(), tok.describe()),
            })
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek().0 {
                Token::Op('+') => BinOp::Add,
                Token::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().0 {
                Token::Op('*') => BinOp::Mul,
                Token::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().0 == Token::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek().0 == Token::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, pos) = self.bump();
        match tok {
            Token::Num(v) => Ok(Expr::Num(v)),
            Token::LParen => {
                let inner = self.sum()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Token::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::Var(Var::X)),
                "t" => Ok(Expr::Var(Var::T)),
                _ => {
                    let func = Func::from_name(&name).ok_or_else(|| ParseError::UnknownIdent {
                        name: name.clone(),
                        pos,
                    })?;
                    self.call(func, pos)
                }
            },
            other => Err(ParseError::Syntax {
                pos,
                msg: format!("unexpected {}", other.describe()),
            }),
        }
    }

    fn call(&mut self, func: Func, pos: usize) -> Result<Expr, ParseError> {
        self.expect(Token::LParen)?;
        let mut args = Vec::new();
        if self.peek().0 != Token::RParen {
            args.push(self.sum()?);
            while self.peek().0 == Token::Comma {
                self.bump();
                args.push(self.sum()?);
            }
        }
        self.expect(Token::RParen)?;
        if args.len() != func.arity() {
            return Err(ParseError::Arity {
                name: func.name().to_string(),
                pos,
                expected: func.arity(),
                got: args.len(),
            });
        }
        Ok(Expr::Call(func, args))
    }
}

// Fully parenthesized output; re-parses to an equivalent tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => {
                write!(f, "(-{:?})", -v)
            }
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Neg(inner) => write!(f, "(-{inner})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{arg}")?;
                }
                f.write_str(")")
            }
        }
    }
}
