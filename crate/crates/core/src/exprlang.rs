//! Scalar nonlinearity expressions.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := ['-'] atom ['^' uint]
//! atom   := number | var | func '(' expr ')' | '(' expr ')'
//! var    := ('x'|'u'|'y') uint ['@' uint]  |  't'
//! func   := sin | cos | tanh | exp | abs
//! ```
//!
//! `u2@1` is the second input component delayed by the first entry of the
//! input delay list; `y1@3` reads the third output delay. `t` is only
//! accepted when the parse context allows it (input signals).

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    State,
    Input,
    Output,
}

impl VarKind {
    fn letter(self) -> char {
        match self {
            VarKind::State => 'x',
            VarKind::Input => 'u',
            VarKind::Output => 'y',
        }
    }
}

/// Reference to one component of the state, a (possibly delayed) input or a
/// (possibly delayed) output. `index` is 1-based; `delay_slot` 0 means
/// undelayed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarRef {
    pub kind: VarKind,
    pub index: usize,
    pub delay_slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tanh,
    Exp,
    Abs,
}

impl Func {
    const ALL: [Func; 5] = [Func::Sin, Func::Cos, Func::Tanh, Func::Exp, Func::Abs];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tanh => v.tanh(),
            Func::Exp => v.exp(),
            Func::Abs => v.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Parsed expression tree. Constants produced by the parser are finite and
/// nonnegative; negation is always an explicit node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(VarRef),
    Time,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

/// Sizes an expression may refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub n_u: usize,
    pub n_y: usize,
    /// Length of the input delay list.
    pub input_slots: usize,
    /// Length of the output delay list.
    pub output_slots: usize,
    pub allow_time: bool,
}

impl Dims {
    /// Context for an input signal: only `t` is available.
    pub fn time_only() -> Self {
        Dims { n: 0, n_u: 0, n_y: 0, input_slots: 0, output_slots: 0, allow_time: true }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("reference {reference} out of range: {msg}")]
    Range { reference: String, msg: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result")]
    NonFinite,
}

/// Values an expression is evaluated against.
///
/// `u[k]` / `y[k]` hold the input / output vectors at delay slot `k`
/// (slot 0 is undelayed).
#[derive(Debug, Clone, Copy)]
pub struct EvalEnv<'a> {
    pub t: f64,
    pub x: &'a [f64],
    pub u: &'a [Vec<f64>],
    pub y: &'a [Vec<f64>],
}

impl<'a> EvalEnv<'a> {
    pub fn time(t: f64) -> Self {
        EvalEnv { t, x: &[], u: &[], y: &[] }
    }
}

impl Expr {
    pub fn parse(text: &str, dims: &Dims) -> Result<Expr, ParseError> {
        let mut p = Parser { src: text.as_bytes(), pos: 0, dims };
        p.skip_ws();
        if p.peek().is_none() {
            return Err(p.error("empty expression"));
        }
        let e = p.expr()?;
        p.skip_ws();
        match p.peek() {
            None => Ok(e),
            Some(c) => Err(p.error(&format!("unexpected character {:?}", c as char))),
        }
    }

    pub fn eval(&self, env: &EvalEnv<'_>) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Time => env.t,
            Expr::Var(r) => {
                let i = r.index - 1;
                match r.kind {
                    VarKind::State => env.x[i],
                    VarKind::Input => env.u[r.delay_slot][i],
                    VarKind::Output => env.y[r.delay_slot][i],
                }
            }
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Bin(op, a, b) => {
                let a = a.eval(env)?;
                let b = b.eval(env)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                }
            }
            Expr::Pow(a, k) => a.eval(env)?.powi(*k as i32),
            Expr::Call(f, a) => f.apply(a.eval(env)?),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// Visits every variable reference in the tree.
    pub fn for_each_var(&self, f: &mut impl FnMut(&VarRef)) {
        match self {
            Expr::Const(_) | Expr::Time => {}
            Expr::Var(r) => f(r),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.for_each_var(f),
            Expr::Bin(_, a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
        }
    }

    pub fn references(&self, kind: VarKind) -> bool {
        let mut found = false;
        self.for_each_var(&mut |r| found |= r.kind == kind);
        found
    }

    /// Checks every reference against `dims`.
    pub fn check_dims(&self, dims: &Dims) -> Result<(), ParseError> {
        let mut err = None;
        self.for_each_var(&mut |r| {
            if err.is_none() {
                err = check_ref(r, dims).err();
            }
        });
        if err.is_none() && !dims.allow_time && self.uses_time() {
            err = Some(ParseError::Range { reference: "t".into(), msg: "time is not available here".into() });
        }
        err.map_or(Ok(()), Err)
    }

    fn uses_time(&self) -> bool {
        match self {
            Expr::Time => true,
            Expr::Const(_) | Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.uses_time(),
            Expr::Bin(_, a, b) => a.uses_time() || b.uses_time(),
        }
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind.letter(), self.index)?;
        if self.delay_slot > 0 {
            write!(f, "@{}", self.delay_slot)?;
        }
        Ok(())
    }
}

/// Fully parenthesized form; `Expr::parse` of the output reproduces the tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => write!(f, "(-{})", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(r) => write!(f, "{r}"),
            Expr::Time => f.write_str("t"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => write!(f, "({a}{}{b})", op.symbol()),
            Expr::Pow(a, k) => write!(f, "({a}^{k})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

fn check_ref(r: &VarRef, dims: &Dims) -> Result<(), ParseError> {
    let range = |msg: String| Err(ParseError::Range { reference: r.to_string(), msg });
    let (size, slots) = match r.kind {
        VarKind::State => (dims.n, 0),
        VarKind::Input => (dims.n_u, dims.input_slots),
        VarKind::Output => (dims.n_y, dims.output_slots),
    };
    if r.index == 0 || r.index > size {
        return range(format!("index must be in 1..={size}"));
    }
    if r.kind == VarKind::State && r.delay_slot != 0 {
        return range("state references cannot be delayed".into());
    }
    if r.delay_slot > slots {
        return range(format!("delay slot must be at most {slots}"));
    }
    Ok(())
}

struct Parser<'s, 'd> {
    src: &'s [u8],
    pos: usize,
    dims: &'d Dims,
}

impl Parser<'_, '_> {
    fn error(&self, msg: &str) -> ParseError {
        ParseError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    /// Next non-whitespace byte, without consuming it.
    fn peek_tok(&mut self) -> Option<u8> {
        self.skip_ws();
        self.peek()
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek_tok() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected {:?}", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_tok() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek_tok() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let negate = if self.peek_tok() == Some(b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let mut e = self.atom()?;
        if self.peek_tok() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let k = self.uint()?;
            let k = u32::try_from(k).map_err(|_| self.error("exponent too large"))?;
            e = Expr::Pow(Box::new(e), k);
        }
        Ok(if negate { Expr::Neg(Box::new(e)) } else { e })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek_tok() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.word(),
            Some(c) => Err(self.error(&format!("unexpected character {:?}", c as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn uint(&mut self) -> Result<usize, ParseError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an unsigned integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ParseError::Syntax { pos: start, msg: "integer too large".into() })
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.peek().is_some_and(|c| c.is_ascii_digit()) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(ParseError::Syntax { pos: start, msg: "malformed number".into() });
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return Err(self.error("malformed exponent"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let v: f64 = text
            .parse()
            .map_err(|_| ParseError::Syntax { pos: start, msg: format!("malformed number {text:?}") })?;
        if !v.is_finite() {
            return Err(ParseError::Syntax { pos: start, msg: "number out of range".into() });
        }
        if self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
            return Err(self.error("implicit multiplication is not allowed"));
        }
        Ok(Expr::Const(v))
    }

    fn word(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if let Some(func) = Func::from_name(name) {
            self.expect(b'(')?;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        let kind = match name {
            "x" => VarKind::State,
            "u" => VarKind::Input,
            "y" => VarKind::Output,
            "t" => {
                if !self.dims.allow_time {
                    return Err(ParseError::Range {
                        reference: "t".into(),
                        msg: "time is not available here".into(),
                    });
                }
                return Ok(Expr::Time);
            }
            _ => {
                return Err(ParseError::Syntax { pos: start, msg: format!("unknown identifier {name:?}") });
            }
        };
        let index = self.uint()?;
        let delay_slot = if self.peek() == Some(b'@') {
            self.pos += 1;
            self.uint()?
        } else {
            0
        };
        let r = VarRef { kind, index, delay_slot };
        check_ref(&r, self.dims)?;
        Ok(Expr::Var(r))
    }
}
