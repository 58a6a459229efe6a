//! Scalar expressions in the single variable `s`.
//!
//! Grammar: numbers, `s`, `+ - * / ^`, parentheses, unary minus and the
//! functions `exp log sin cos abs max min`. `^` takes an integer constant
//! exponent and binds tighter than unary minus, so `-s^2` is `-(s^2)`.
//!
//! Parsed expressions are differentiated symbolically and compiled to a flat
//! program. Pure polynomials compile to Horner form.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of a non-positive value {0}")]
    LogDomain(f64),
    #[error("non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Abs,
    /// Internal: derivative of `abs`.
    Sign,
    /// Internal: Heaviside step, 1 for positive arguments.
    Step,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Step => "step",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "({c})")
                } else {
                    write!(f, "{c}")
                }
            }
            Expr::Var => write!(f, "s"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) => write!(f, "({a}^{n})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Max(a, b) => write!(f, "max({a}, {b})"),
            Expr::Min(a, b) => write!(f, "min({a}, {b})"),
        }
    }
}

// Smart constructors with light constant folding, used by `derivative`.

fn c(v: f64) -> Expr {
    Expr::Const(v)
}

fn is_const(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Const(x) if *x == v)
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => c(-x),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => c(x + y),
        _ if is_const(&a, 0.0) => b,
        _ if is_const(&b, 0.0) => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => c(x - y),
        _ if is_const(&b, 0.0) => a,
        _ if is_const(&a, 0.0) => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => c(x * y),
        _ if is_const(&a, 0.0) || is_const(&b, 0.0) => c(0.0),
        _ if is_const(&a, 1.0) => b,
        _ if is_const(&b, 1.0) => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_const(&a, 0.0) && !is_const(&b, 0.0) {
        return c(0.0);
    }
    if is_const(&b, 1.0) {
        return a;
    }
    Expr::Div(Box::new(a), Box::new(b))
}

fn powi(a: Expr, n: i32) -> Expr {
    match n {
        0 => c(1.0),
        1 => a,
        _ => match a {
            Expr::Const(x) => c(x.powi(n)),
            other => Expr::Pow(Box::new(other), n),
        },
    }
}

fn call(func: Func, a: Expr) -> Expr {
    Expr::Call(func, Box::new(a))
}

impl Expr {
    /// Symbolic derivative with respect to `s`.
    pub fn derivative(&self) -> Expr {
        match self {
            Expr::Const(_) => c(0.0),
            Expr::Var => c(1.0),
            Expr::Neg(a) => neg(a.derivative()),
            Expr::Add(a, b) => add(a.derivative(), b.derivative()),
            Expr::Sub(a, b) => sub(a.derivative(), b.derivative()),
            Expr::Mul(a, b) => add(
                mul(a.derivative(), (**b).clone()),
                mul((**a).clone(), b.derivative()),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.derivative(), (**b).clone()),
                    mul((**a).clone(), b.derivative()),
                ),
                powi((**b).clone(), 2),
            ),
            Expr::Pow(a, n) => mul(
                mul(c(f64::from(*n)), powi((**a).clone(), n - 1)),
                a.derivative(),
            ),
            Expr::Call(func, a) => {
                let inner = (**a).clone();
                let da = a.derivative();
                match func {
                    Func::Exp => mul(call(Func::Exp, inner), da),
                    Func::Log => div(da, inner),
                    Func::Sin => mul(call(Func::Cos, inner), da),
                    Func::Cos => neg(mul(call(Func::Sin, inner), da)),
                    Func::Abs => mul(call(Func::Sign, inner), da),
                    Func::Sign | Func::Step => c(0.0),
                }
            }
            Expr::Max(a, b) => {
                let h = call(Func::Step, sub((**a).clone(), (**b).clone()));
                add(
                    mul(h.clone(), a.derivative()),
                    mul(sub(c(1.0), h), b.derivative()),
                )
            }
            Expr::Min(a, b) => {
                let h = call(Func::Step, sub((**b).clone(), (**a).clone()));
                add(
                    mul(h.clone(), a.derivative()),
                    mul(sub(c(1.0), h), b.derivative()),
                )
            }
        }
    }

    /// Tree-walking evaluation. Slow; use [`Program`] in loops.
    pub fn eval(&self, s: f64) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(x) => *x,
            Expr::Var => s,
            Expr::Neg(a) => -a.eval(s)?,
            Expr::Add(a, b) => a.eval(s)? + b.eval(s)?,
            Expr::Sub(a, b) => a.eval(s)? - b.eval(s)?,
            Expr::Mul(a, b) => a.eval(s)? * b.eval(s)?,
            Expr::Div(a, b) => {
                let d = b.eval(s)?;
                if d == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                a.eval(s)? / d
            }
            Expr::Pow(a, n) => {
                let x = a.eval(s)?;
                if x == 0.0 && *n < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                x.powi(*n)
            }
            Expr::Call(func, a) => apply_func(*func, a.eval(s)?)?,
            Expr::Max(a, b) => a.eval(s)?.max(b.eval(s)?),
            Expr::Min(a, b) => a.eval(s)?.min(b.eval(s)?),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// Coefficients (lowest degree first) if the expression is a polynomial.
    fn polynomial(&self) -> Option<Vec<f64>> {
        const MAX_DEGREE: usize = 24;
        let p = match self {
            Expr::Const(x) => vec![*x],
            Expr::Var => vec![0.0, 1.0],
            Expr::Neg(a) => a.polynomial()?.into_iter().map(|x| -x).collect(),
            Expr::Add(a, b) => poly_add(&a.polynomial()?, &b.polynomial()?, 1.0),
            Expr::Sub(a, b) => poly_add(&a.polynomial()?, &b.polynomial()?, -1.0),
            Expr::Mul(a, b) => poly_mul(&a.polynomial()?, &b.polynomial()?),
            Expr::Div(a, b) => match b.polynomial()?.as_slice() {
                [d] if *d != 0.0 => a.polynomial()?.into_iter().map(|x| x / d).collect(),
                _ => return None,
            },
            Expr::Pow(a, n) if *n >= 0 => {
                let base = a.polynomial()?;
                let mut acc = vec![1.0];
                for _ in 0..*n {
                    acc = poly_mul(&acc, &base);
                    if acc.len() > MAX_DEGREE + 1 {
                        return None;
                    }
                }
                acc
            }
            _ => return None,
        };
        (p.len() <= MAX_DEGREE + 1).then_some(p)
    }
}

fn poly_add(a: &[f64], b: &[f64], sign: f64) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, x) in b.iter().enumerate() {
        out[i] += sign * x;
    }
    out
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn apply_func(func: Func, x: f64) -> Result<f64, EvalError> {
    Ok(match func {
        Func::Exp => x.exp(),
        Func::Log => {
            if x <= 0.0 {
                return Err(EvalError::LogDomain(x));
            }
            x.ln()
        }
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Abs => x.abs(),
        Func::Sign => {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
        Func::Step => {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    })
}

// ---------------------------------------------------------------------------
// Parser

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if start >= bytes.len() {
            return Ok((Tok::End, start));
        }
        let ch = bytes[start];
        if ch.is_ascii_digit() || ch == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &self.src[start..end];
            let value = text.parse::<f64>().map_err(|_| ExprError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            self.pos = end;
            return Ok((Tok::Num(value), start));
        }
        if ch.is_ascii_alphabetic() || ch == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        if b"+-*/^(),".contains(&ch) {
            self.pos += 1;
            return Ok((Tok::Sym(ch as char), start));
        }
        let bad = self.src[start..].chars().next().unwrap_or('?');
        Err(ExprError::Syntax {
            offset: start,
            message: format!("unexpected character `{bad}`"),
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    offset: usize,
}

const UNARY_BP: u8 = 5;

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ExprError> {
        let (tok, offset) = self.lexer.next()?;
        self.tok = tok;
        self.offset = offset;
        Ok(())
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            offset: self.offset,
            message: message.into(),
        })
    }

    fn expect(&mut self, sym: char) -> Result<(), ExprError> {
        if self.tok == Tok::Sym(sym) {
            self.bump()
        } else if self.tok == Tok::End {
            self.syntax(format!("expected `{sym}`, found end of input"))
        } else {
            self.syntax(format!("expected `{sym}`"))
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ExprError> {
        let mut lhs = self.prefix()?;
        loop {
            let (lbp, rbp, op) = match self.tok {
                Tok::Sym(op @ ('+' | '-')) => (1, 2, op),
                Tok::Sym(op @ ('*' | '/')) => (3, 4, op),
                Tok::Sym('^') => (7, 6, '^'),
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            self.bump()?;
            let rhs_offset = self.offset;
            let rhs = self.expr(rbp)?;
            lhs = match op {
                '+' => Expr::Add(Box::new(lhs), Box::new(rhs)),
                '-' => Expr::Sub(Box::new(lhs), Box::new(rhs)),
                '*' => Expr::Mul(Box::new(lhs), Box::new(rhs)),
                '/' => Expr::Div(Box::new(lhs), Box::new(rhs)),
                _ => {
                    let n = integer_exponent(&rhs).ok_or_else(|| ExprError::Syntax {
                        offset: rhs_offset,
                        message: "exponent must be an integer constant".into(),
                    })?;
                    Expr::Pow(Box::new(lhs), n)
                }
            };
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ExprError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Const(v))
            }
            Tok::Sym('-') => {
                self.bump()?;
                Ok(Expr::Neg(Box::new(self.expr(UNARY_BP)?)))
            }
            Tok::Sym('(') => {
                self.bump()?;
                let e = self.expr(0)?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let offset = self.offset;
                self.bump()?;
                if name == "s" {
                    return Ok(Expr::Var);
                }
                let func = match name.as_str() {
                    "exp" => Some(Func::Exp),
                    "log" => Some(Func::Log),
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "abs" => Some(Func::Abs),
                    "max" | "min" => None,
                    _ => return Err(ExprError::UnknownIdentifier { name, offset }),
                };
                self.expect('(')?;
                let a = self.expr(0)?;
                let e = match func {
                    Some(func) => Expr::Call(func, Box::new(a)),
                    None => {
                        self.expect(',')?;
                        let b = self.expr(0)?;
                        if name == "max" {
                            Expr::Max(Box::new(a), Box::new(b))
                        } else {
                            Expr::Min(Box::new(a), Box::new(b))
                        }
                    }
                };
                self.expect(')')?;
                Ok(e)
            }
            Tok::End => self.syntax("unexpected end of input"),
            Tok::Sym(ch) => self.syntax(format!("unexpected `{ch}`")),
        }
    }
}

fn integer_exponent(e: &Expr) -> Option<i32> {
    let v = e.eval(0.0).ok()?;
    if has_var(e) || v.fract() != 0.0 || v.abs() > 1.0e6 {
        return None;
    }
    Some(v as i32)
}

fn has_var(e: &Expr) -> bool {
    match e {
        Expr::Const(_) => false,
        Expr::Var => true,
        Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => has_var(a),
        Expr::Add(a, b)
        | Expr::Sub(a, b)
        | Expr::Mul(a, b)
        | Expr::Div(a, b)
        | Expr::Max(a, b)
        | Expr::Min(a, b) => has_var(a) || has_var(b),
    }
}

/// Parses an expression in `s`.
pub fn parse(src: &str) -> Result<Expr, ExprError> {
    let mut p = Parser {
        lexer: Lexer { src, pos: 0 },
        tok: Tok::End,
        offset: 0,
    };
    p.bump()?;
    let e = p.expr(0)?;
    if p.tok != Tok::End {
        return p.syntax("unexpected trailing input");
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// Compiled evaluation

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Var,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Powi(i32),
    Call(Func),
    Max,
    Min,
}

#[derive(Debug, Clone)]
enum Code {
    Horner(Vec<f64>),
    Stack { ops: Vec<Op>, depth: usize },
}

/// An expression compiled for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Program {
    code: Code,
}

const INLINE_STACK: usize = 32;

impl Program {
    pub fn compile(e: &Expr) -> Program {
        if let Some(coeffs) = e.polynomial() {
            return Program {
                code: Code::Horner(coeffs),
            };
        }
        let mut ops = Vec::new();
        emit(e, &mut ops);
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Var => depth += 1,
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Max | Op::Min => depth -= 1,
                Op::Neg | Op::Powi(_) | Op::Call(_) => {}
            }
            max_depth = max_depth.max(depth);
        }
        Program {
            code: Code::Stack {
                ops,
                depth: max_depth,
            },
        }
    }

    #[inline(always)]
    pub fn eval(&self, s: f64) -> Result<f64, EvalError> {
        match &self.code {
            Code::Horner(coeffs) => {
                let mut acc = 0.0;
                for a in coeffs.iter().rev() {
                    acc = acc * s + a;
                }
                if acc.is_finite() {
                    Ok(acc)
                } else {
                    Err(EvalError::NonFinite)
                }
            }
            Code::Stack { ops, depth } => {
                if *depth <= INLINE_STACK {
                    let mut stack = [0.0f64; INLINE_STACK];
                    run(ops, s, &mut stack)
                } else {
                    let mut stack = vec![0.0f64; *depth];
                    run(ops, s, &mut stack)
                }
            }
        }
    }
}

fn emit(e: &Expr, ops: &mut Vec<Op>) {
    match e {
        Expr::Const(x) => ops.push(Op::Const(*x)),
        Expr::Var => ops.push(Op::Var),
        Expr::Neg(a) => {
            emit(a, ops);
            ops.push(Op::Neg);
        }
        Expr::Pow(a, n) => {
            emit(a, ops);
            ops.push(Op::Powi(*n));
        }
        Expr::Call(f, a) => {
            emit(a, ops);
            ops.push(Op::Call(*f));
        }
        Expr::Add(a, b)
        | Expr::Sub(a, b)
        | Expr::Mul(a, b)
        | Expr::Div(a, b)
        | Expr::Max(a, b)
        | Expr::Min(a, b) => {
            emit(a, ops);
            emit(b, ops);
            ops.push(match e {
                Expr::Add(..) => Op::Add,
                Expr::Sub(..) => Op::Sub,
                Expr::Mul(..) => Op::Mul,
                Expr::Div(..) => Op::Div,
                Expr::Max(..) => Op::Max,
                _ => Op::Min,
            });
        }
    }
}

#[inline]
fn run(ops: &[Op], s: f64, stack: &mut [f64]) -> Result<f64, EvalError> {
    let mut sp = 0usize;
    for op in ops {
        match *op {
            Op::Const(x) => {
                stack[sp] = x;
                sp += 1;
            }
            Op::Var => {
                stack[sp] = s;
                sp += 1;
            }
            Op::Neg => stack[sp - 1] = -stack[sp - 1],
            Op::Powi(n) => {
                let x = stack[sp - 1];
                if x == 0.0 && n < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                stack[sp - 1] = x.powi(n);
            }
            Op::Call(f) => stack[sp - 1] = apply_func(f, stack[sp - 1])?,
            binary => {
                sp -= 1;
                let b = stack[sp];
                let a = stack[sp - 1];
                stack[sp - 1] = match binary {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                    Op::Max => a.max(b),
                    _ => a.min(b),
                };
            }
        }
    }
    let v = stack[0];
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, s: f64) -> f64 {
        parse(src).unwrap().eval(s).unwrap()
    }

    #[test]
    fn cubic_reference_values() {
        let e = parse("s*(s-1)*(3-s)").unwrap();
        assert_eq!(e.eval(2.0).unwrap(), 2.0);
        assert_eq!(e.derivative().eval(3.0).unwrap(), -6.0);
        let p = Program::compile(&e);
        assert_eq!(p.eval(2.0).unwrap(), 2.0);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("-s^2", 3.0), -9.0);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("1 - 2 - 3", 0.0), -4.0);
        assert_eq!(ev("8 / 4 / 2", 0.0), 1.0);
        assert_eq!(ev("2 * -s", 4.0), -8.0);
        assert_eq!(ev("s^-1", 4.0), 0.25);
        assert_eq!(ev("max(s, 1) + min(s, 1)", 3.0), 4.0);
        assert_eq!(ev("1.5e1 + .5", 0.0), 15.5);
    }

    #[test]
    fn truncated_input_reports_offset() {
        match parse("s*(") {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        match parse("s + tanh(s)") {
            Err(ExprError::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "tanh");
                assert_eq!(offset, 4);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_integer_exponent_rejected() {
        assert!(matches!(
            parse("s^0.5"),
            Err(ExprError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(parse("s^s"), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn eval_errors() {
        assert_eq!(
            parse("1/s").unwrap().eval(0.0),
            Err(EvalError::DivisionByZero)
        );
        assert!(matches!(
            parse("log(s)").unwrap().eval(-1.0),
            Err(EvalError::LogDomain(_))
        ));
        let p = Program::compile(&parse("log(s) + exp(s)").unwrap());
        assert!(p.eval(0.0).is_err());
    }

    #[test]
    fn polynomial_detection() {
        let p = Program::compile(&parse("(s-1)*(2-s)").unwrap());
        assert!(matches!(p.code, Code::Horner(ref c) if c.len() == 3));
        let q = Program::compile(&parse("exp(s)").unwrap());
        assert!(matches!(q.code, Code::Stack { .. }));
    }

    #[test]
    fn derivative_of_kinked_functions() {
        let d = parse("abs(s - 1) + max(s, 2)").unwrap().derivative();
        assert_eq!(d.eval(0.0).unwrap(), -1.0);
        assert_eq!(d.eval(3.0).unwrap(), 2.0);
    }
}
