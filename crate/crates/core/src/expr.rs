//! Arithmetic expression language for metrics, conformal factors and
//! submanifold immersions.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'pi' | variable | func '(' sum (',' sum)* ')' | '(' sum ')'
//! ```
//!
//! so `-y0^2` is `-(y0^2)` and `^` is right associative. Variables are
//! `x0..x{n-1}`, `y0..y{n-1}` and, for submanifold patches, `u0..u{d-1}`.
//! Functions: `exp log sqrt sin cos asin acos atan` (one argument), `atan2`
//! and `pow` (two arguments).

use std::fmt;

use thiserror::Error;

use crate::jets::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X(usize),
    Y(usize),
    U(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{i}"),
            Var::Y(i) => write!(f, "y{i}"),
            Var::U(i) => write!(f, "u{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Asin,
    Acos,
    Atan,
    Atan2,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "asin" => Func::Asin,
            "acos" => Func::Acos,
            "atan" => Func::Atan,
            "atan2" => Func::Atan2,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Asin => "asin",
            Func::Acos => "acos",
            Func::Atan => "atan",
            Func::Atan2 => "atan2",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Atan2 | Func::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at offset {offset}")]
pub struct ParseError {
    /// One-based character column of the offending token (end of input is
    /// `len + 1`).
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{func} requires a positive argument, got {value}")]
    NonPositive { func: &'static str, value: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("{func} argument {value} outside [-1, 1]")]
    OutOfRange { func: &'static str, value: f64 },
    #[error("variable {0} is not bound")]
    Unbound(Var),
}

/// Which variable names a parse accepts.
#[derive(Debug, Clone, Copy)]
pub struct Scope {
    pub dim: usize,
    pub params: usize,
    pub allow_tangent: bool,
}

impl Scope {
    /// `x0..`, `y0..` of an `n`-dimensional manifold.
    pub fn tangent(dim: usize) -> Scope {
        Scope {
            dim,
            params: 0,
            allow_tangent: true,
        }
    }

    /// `u0..u{d-1}` only.
    pub fn params(params: usize) -> Scope {
        Scope {
            dim: 0,
            params,
            allow_tangent: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Token {
    Num(f64),
    Ident,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
}

struct Lexed<'a> {
    token: Token,
    text: &'a str,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            chars: src.char_indices().collect(),
            pos: 0,
        }
    }

    fn byte_at(&self, pos: usize) -> usize {
        self.chars.get(pos).map(|&(b, _)| b).unwrap_or(self.src.len())
    }

    fn next(&mut self) -> Result<Lexed<'a>, ParseError> {
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let column = start + 1;
        let Some(&(_, c)) = self.chars.get(start) else {
            return Ok(Lexed {
                token: Token::End,
                text: "",
                column,
            });
        };
        let single = |token| Lexed {
            token,
            text: &self.src[self.byte_at(start)..self.byte_at(start + 1)],
            column,
        };
        let lexed = match c {
            '+' => single(Token::Plus),
            '-' => single(Token::Minus),
            '*' => single(Token::Star),
            '/' => single(Token::Slash),
            '^' => single(Token::Caret),
            '(' => single(Token::LParen),
            ')' => single(Token::RParen),
            ',' => single(Token::Comma),
            c if c.is_ascii_digit() || c == '.' => {
                let mut end = start;
                let at = |i: usize| self.chars.get(i).map(|&(_, c)| c);
                while at(end).is_some_and(|c| c.is_ascii_digit() || c == '.') {
                    end += 1;
                }
                if at(end).is_some_and(|c| c == 'e' || c == 'E') {
                    let mut probe = end + 1;
                    if at(probe).is_some_and(|c| c == '+' || c == '-') {
                        probe += 1;
                    }
                    if at(probe).is_some_and(|c| c.is_ascii_digit()) {
                        end = probe;
                        while at(end).is_some_and(|c| c.is_ascii_digit()) {
                            end += 1;
                        }
                    }
                }
                let text = &self.src[self.byte_at(start)..self.byte_at(end)];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    offset: column,
                    message: format!("malformed number '{text}'"),
                })?;
                self.pos = end;
                return Ok(Lexed {
                    token: Token::Num(value),
                    text,
                    column,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut end = start;
                while self
                    .chars
                    .get(end)
                    .is_some_and(|&(_, c)| c.is_ascii_alphanumeric() || c == '_')
                {
                    end += 1;
                }
                let text = &self.src[self.byte_at(start)..self.byte_at(end)];
                self.pos = end;
                return Ok(Lexed {
                    token: Token::Ident,
                    text,
                    column,
                });
            }
            other => {
                return Err(ParseError {
                    offset: column,
                    message: format!("unexpected character '{other}'"),
                })
            }
        };
        self.pos += 1;
        Ok(lexed)
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    current: Lexed<'a>,
    scope: Scope,
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<(), ParseError> {
        self.current = self.lexer.next()?;
        Ok(())
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            offset: self.current.column,
            message: message.into(),
        })
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<(), ParseError> {
        if self.current.token == token {
            self.advance()
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            match self.current.token {
                Token::Plus => {
                    self.advance()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Token::Minus => {
                    self.advance()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.current.token {
                Token::Star => {
                    self.advance()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Token::Slash => {
                    self.advance()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.current.token {
            Token::Minus => {
                self.advance()?;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Token::Plus => {
                self.advance()?;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.current.token == Token::Caret {
            self.advance()?;
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn variable(&self, name: &str) -> Option<Var> {
        let (head, digits) = name.split_at(1);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let index: usize = digits.parse().ok()?;
        match head {
            "x" if self.scope.allow_tangent && index < self.scope.dim => Some(Var::X(index)),
            "y" if self.scope.allow_tangent && index < self.scope.dim => Some(Var::Y(index)),
            "u" if index < self.scope.params => Some(Var::U(index)),
            _ => None,
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.current.token {
            Token::Num(value) => {
                self.advance()?;
                Ok(Expr::Const(value))
            }
            Token::LParen => {
                self.advance()?;
                let inner = self.sum()?;
                self.expect(Token::RParen, "')'")?;
                Ok(inner)
            }
            Token::Ident => {
                let name = self.current.text;
                let column = self.current.column;
                if name == "pi" {
                    self.advance()?;
                    return Ok(Expr::Const(std::f64::consts::PI));
                }
                if let Some(var) = self.variable(name) {
                    self.advance()?;
                    return Ok(Expr::Var(var));
                }
                let Some(func) = Func::from_name(name) else {
                    return self.error(format!("unknown identifier '{name}'"));
                };
                self.advance()?;
                self.expect(Token::LParen, &format!("'(' after {name}"))?;
                let mut args = vec![self.sum()?];
                while self.current.token == Token::Comma {
                    self.advance()?;
                    args.push(self.sum()?);
                }
                self.expect(Token::RParen, "')'")?;
                if args.len() != func.arity() {
                    return Err(ParseError {
                        offset: column,
                        message: format!(
                            "{name} takes {} argument(s), got {}",
                            func.arity(),
                            args.len()
                        ),
                    });
                }
                Ok(Expr::Call(func, args))
            }
            Token::End => self.error("unexpected end of input"),
            _ => self.error(format!("unexpected '{}'", self.current.text)),
        }
    }
}

impl Expr {
    pub fn parse(src: &str, scope: Scope) -> Result<Expr, ParseError> {
        if src.trim().is_empty() {
            return Err(ParseError {
                offset: 1,
                message: "empty expression".into(),
            });
        }
        let mut lexer = Lexer::new(src);
        let current = lexer.next()?;
        let mut parser = Parser {
            lexer,
            current,
            scope,
        };
        let expr = parser.sum()?;
        if parser.current.token != Token::End {
            return parser.error(format!("unexpected '{}'", parser.current.text));
        }
        Ok(expr)
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn product(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    /// Whether any `x` variable occurs.
    pub fn depends_on_x(&self) -> bool {
        self.any_var(&|v| matches!(v, Var::X(_)))
    }

    fn any_var(&self, pred: &dyn Fn(Var) -> bool) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => pred(*v),
            Expr::Neg(a) => a.any_var(pred),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.any_var(pred) || b.any_var(pred)
            }
            Expr::Call(_, args) => args.iter().any(|a| a.any_var(pred)),
        }
    }

    /// Evaluate over any [`Scalar`]; `proto` supplies the representation of
    /// constants and `lookup` binds variables.
    pub fn eval<S: Scalar>(&self, proto: &S, lookup: &dyn Fn(Var) -> Option<S>) -> Result<S, EvalError> {
        Ok(match self {
            Expr::Const(c) => proto.constant_like(*c),
            Expr::Var(v) => lookup(*v).ok_or(EvalError::Unbound(*v))?,
            Expr::Neg(a) => a.eval(proto, lookup)?.neg(),
            Expr::Add(a, b) => a.eval(proto, lookup)?.add(&b.eval(proto, lookup)?),
            Expr::Sub(a, b) => a.eval(proto, lookup)?.sub(&b.eval(proto, lookup)?),
            Expr::Mul(a, b) => a.eval(proto, lookup)?.mul(&b.eval(proto, lookup)?),
            Expr::Div(a, b) => {
                let num = a.eval(proto, lookup)?;
                let den = b.eval(proto, lookup)?;
                if den.value() == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                num.div(&den)
            }
            Expr::Pow(base, exponent) => power(base.eval(proto, lookup)?, exponent, proto, lookup)?,
            Expr::Call(func, args) => {
                let a = args[0].eval(proto, lookup)?;
                match func {
                    Func::Exp => a.exp(),
                    Func::Log => a.ln_checked("log")?,
                    Func::Sqrt => {
                        if a.value() <= 0.0 {
                            return Err(EvalError::NonPositive {
                                func: "sqrt",
                                value: a.value(),
                            });
                        }
                        a.sqrt()
                    }
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Asin | Func::Acos => {
                        if a.value().abs() >= 1.0 {
                            return Err(EvalError::OutOfRange {
                                func: func.name(),
                                value: a.value(),
                            });
                        }
                        if *func == Func::Asin {
                            a.asin()
                        } else {
                            a.acos()
                        }
                    }
                    Func::Atan => a.atan(),
                    Func::Atan2 => {
                        let x = args[1].eval(proto, lookup)?;
                        if a.value() == 0.0 && x.value() == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a.atan2(&x)
                    }
                    Func::Pow => power(a, &args[1], proto, lookup)?,
                }
            }
        })
    }

    /// Plain-real evaluation with a variable table.
    pub fn eval_real(&self, x: &[f64], y: &[f64], u: &[f64]) -> Result<f64, EvalError> {
        self.eval(&0.0, &|v| match v {
            Var::X(i) => x.get(i).copied(),
            Var::Y(i) => y.get(i).copied(),
            Var::U(i) => u.get(i).copied(),
        })
    }
}

trait LnChecked: Sized {
    fn ln_checked(&self, func: &'static str) -> Result<Self, EvalError>;
}

impl<S: Scalar> LnChecked for S {
    fn ln_checked(&self, func: &'static str) -> Result<S, EvalError> {
        if self.value() <= 0.0 {
            return Err(EvalError::NonPositive {
                func,
                value: self.value(),
            });
        }
        Ok(self.ln())
    }
}

/// `base ^ exponent`: integer constants use repeated multiplication (any
/// sign of base), other constants need a positive base, and a non-constant
/// exponent goes through `exp(e · log(base))`.
fn power<S: Scalar>(
    base: S,
    exponent: &Expr,
    proto: &S,
    lookup: &dyn Fn(Var) -> Option<S>,
) -> Result<S, EvalError> {
    let constant = if exponent.any_var(&|_| true) {
        None
    } else {
        Some(exponent.eval_real(&[], &[], &[])?)
    };
    match constant {
        Some(p) if p.fract() == 0.0 && p.abs() <= 64.0 => {
            if p < 0.0 && base.value() == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            Ok(base.powi(p as i32))
        }
        Some(p) => {
            if base.value() <= 0.0 {
                return Err(EvalError::NonPositive {
                    func: "pow",
                    value: base.value(),
                });
            }
            Ok(base.powf(p))
        }
        None => {
            let e = exponent.eval(proto, lookup)?;
            Ok(e.mul(&base.ln_checked("pow")?).exp())
        }
    }
}

/// Fully parenthesised rendering; `parse ∘ to_string` is a fixed point of
/// `to_string`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => write!(f, "(-{:?})", -c),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse3(src: &str) -> Result<Expr, ParseError> {
        Expr::parse(src, Scope::tangent(3))
    }

    #[test]
    fn lightlike_minkowski_evaluation() {
        let e = parse3("-y0^2 + y1^2 + y2^2").unwrap();
        assert_eq!(e.eval_real(&[0.0; 3], &[1.0, 1.0, 0.0], &[]).unwrap(), 0.0);
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = parse3("-y0^2").unwrap();
        assert_eq!(e.eval_real(&[0.0; 3], &[3.0, 0.0, 0.0], &[]).unwrap(), -9.0);
        let e = parse3("2^3^2").unwrap();
        assert_eq!(e.eval_real(&[0.0; 3], &[0.0; 3], &[]).unwrap(), 512.0);
        let e = parse3("y0^-2").unwrap();
        assert_eq!(e.eval_real(&[0.0; 3], &[2.0, 0.0, 0.0], &[]).unwrap(), 0.25);
    }

    #[test]
    fn precedence_and_parentheses() {
        let e = parse3("1 + 2 * 3 - 4 / 2").unwrap();
        assert_eq!(e.eval_real(&[0.0; 3], &[0.0; 3], &[]).unwrap(), 5.0);
        let e = parse3("(1 + 2) * (3 - 1)").unwrap();
        assert_eq!(e.eval_real(&[0.0; 3], &[0.0; 3], &[]).unwrap(), 6.0);
    }

    #[test]
    fn bogoslovsky_closed_form() {
        let e = Expr::parse("pow(y0-y1, 1.3) * pow(y0+y1, 0.7)", Scope::tangent(2)).unwrap();
        let value = e.eval_real(&[0.0; 2], &[2.0, 1.0], &[]).unwrap();
        assert!((value - 3f64.powf(0.7)).abs() < 1e-15);
        assert!((value - 2.157669).abs() < 1e-6);
    }

    #[test]
    fn malformed_input_reports_offset() {
        let err = parse3("y0 + +").unwrap_err();
        assert_eq!(err.offset, 7);
        let err = parse3("y0 * )").unwrap_err();
        assert_eq!(err.offset, 6);
    }

    #[test]
    fn unknown_identifier_and_arity() {
        let err = parse3("z0 + y1").unwrap_err();
        assert!(err.message.contains("unknown identifier 'z0'"), "{err}");
        let err = parse3("x3").unwrap_err();
        assert!(err.message.contains("unknown identifier"));
        let err = parse3("pow(y0)").unwrap_err();
        assert!(err.message.contains("takes 2 argument"), "{err}");
        assert_eq!(err.offset, 1);
        assert!(Expr::parse("u0", Scope::tangent(2)).is_err());
        assert!(Expr::parse("u0 + u1", Scope::params(2)).is_ok());
        assert!(Expr::parse("", Scope::tangent(2)).is_err());
    }

    #[test]
    fn domain_errors() {
        let e = parse3("log(y0)").unwrap();
        assert!(matches!(
            e.eval_real(&[0.0; 3], &[-1.0, 0.0, 0.0], &[]),
            Err(EvalError::NonPositive { func: "log", .. })
        ));
        let e = parse3("pow(y0, 0.5)").unwrap();
        assert!(e.eval_real(&[0.0; 3], &[-1.0, 0.0, 0.0], &[]).is_err());
        let e = parse3("pow(y0, 3)").unwrap();
        assert_eq!(e.eval_real(&[0.0; 3], &[-2.0, 0.0, 0.0], &[]).unwrap(), -8.0);
        let e = parse3("1 / y1").unwrap();
        assert!(matches!(
            e.eval_real(&[0.0; 3], &[1.0, 0.0, 0.0], &[]),
            Err(EvalError::DivisionByZero)
        ));
    }

    #[test]
    fn variable_exponent_goes_through_exp_log() {
        let e = parse3("pow(y0, 1 + x0)").unwrap();
        let v = e.eval_real(&[0.5, 0.0, 0.0], &[2.0, 0.0, 0.0], &[]).unwrap();
        assert!((v - 2f64.powf(1.5)).abs() < 1e-14);
    }

    #[test]
    fn pretty_print_fixed_point_examples() {
        for src in [
            "-y0^2 + y1^2 + sin(x1)^2 * y2^2",
            "pow(y0-y1, 1.3) * pow(y0+y1, 0.7)",
            "atan2(y1, y0) - 1e-3 / (2 + -x0)",
            "-(-(2))",
        ] {
            let printed = parse3(src).unwrap().to_string();
            let again = parse3(&printed).unwrap().to_string();
            assert_eq!(printed, again, "{src}");
        }
        assert_eq!(Expr::Const(-2.0).to_string(), "(-2.0)");
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-5.0f64..5.0).prop_map(Expr::Const),
            (0usize..3).prop_map(|i| Expr::Var(Var::X(i))),
            (0usize..3).prop_map(|i| Expr::Var(Var::Y(i))),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Pow(Box::new(a), Box::new(b))),
                inner.clone().prop_map(|a| Expr::Call(Func::Sin, vec![a])),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Call(Func::Atan2, vec![a, b])),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_print_is_fixed_point(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse3(&printed).unwrap();
            prop_assert_eq!(reparsed.to_string(), printed);
        }
    }
}
