//! The expression language shared by expression signals, triggers and
//! keyframe expression placeholders.
//!
//! Precedence, tightest first: unary minus, `* /`, `+ -`, comparisons,
//! then `!` and `&&`, then `||`. Variables are dotted identifiers; a name
//! such as `hand.x` falls back to the `x` component of a vec3 signal `hand`
//! when no variable with the full name exists.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use super::value::{angle_between_deg, SignalType, SignalValue, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Normalise,
    Distance,
    Angle,
    Clamp,
    Abs,
    Min,
    Max,
    Dot,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "normalise" | "normalize" => Func::Normalise,
            "distance" => Func::Distance,
            "angle" => Func::Angle,
            "clamp" => Func::Clamp,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "dot" => Func::Dot,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Normalise => "normalise",
            Func::Distance => "distance",
            Func::Angle => "angle",
            Func::Clamp => "clamp",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Dot => "dot",
        }
    }

    /// Inclusive argument count bounds.
    fn arity(self) -> (usize, usize) {
        match self {
            Func::Normalise | Func::Clamp => (3, 3),
            Func::Distance | Func::Dot => (2, 2),
            Func::Angle => (1, 2),
            Func::Abs => (1, 1),
            Func::Min | Func::Max => (2, usize::MAX),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Number(f64),
    Bool(bool),
    Text(String),
    Var(String),
    Vec3(Box<[Expr; 3]>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("`{function}` takes {expected} argument(s), got {found}")]
    Arity {
        function: &'static str,
        expected: String,
        found: usize,
    },
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("division by zero")]
    DivisionByZero,
}

/// Variable bindings for evaluation.
pub trait Env {
    fn lookup(&self, name: &str) -> Option<SignalValue>;
}

impl Env for BTreeMap<String, SignalValue> {
    fn lookup(&self, name: &str) -> Option<SignalValue> {
        self.get(name).cloned()
    }
}

impl Env for HashMap<String, SignalValue> {
    fn lookup(&self, name: &str) -> Option<SignalValue> {
        self.get(name).cloned()
    }
}

impl<F> Env for F
where
    F: Fn(&str) -> Option<SignalValue>,
{
    fn lookup(&self, name: &str) -> Option<SignalValue> {
        self(name)
    }
}

// ---------------------------------------------------------------------------
// lexing

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Str(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
}

struct Lexed {
    tok: Tok,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Lexed>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |column: usize, message: String| ParseError::Syntax { column, message };
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let n: f64 = s
                .parse()
                .map_err(|_| err(column, format!("malformed number `{s}`")))?;
            out.push(Lexed { tok: Tok::Num(n), column });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            loop {
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let continues = chars.get(i) == Some(&'.')
                    && chars
                        .get(i + 1)
                        .is_some_and(|n| n.is_alphabetic() || *n == '_');
                if continues {
                    i += 1;
                } else {
                    break;
                }
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Lexed { tok: Tok::Ident(s), column });
            continue;
        }
        if c == '\'' || c == '"' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i] != c {
                i += 1;
            }
            if i >= chars.len() {
                return Err(err(column, "unterminated string".into()));
            }
            out.push(Lexed {
                tok: Tok::Str(chars[start..i].iter().collect()),
                column,
            });
            i += 1;
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let op2 = ["<=", ">=", "==", "!=", "&&", "||"]
            .into_iter()
            .find(|op| *op == two);
        if let Some(op) = op2 {
            out.push(Lexed { tok: Tok::Op(op), column });
            i += 2;
            continue;
        }
        let tok = match c {
            '+' => Tok::Op("+"),
            '-' => Tok::Op("-"),
            '*' => Tok::Op("*"),
            '/' => Tok::Op("/"),
            '<' => Tok::Op("<"),
            '>' => Tok::Op(">"),
            '!' => Tok::Op("!"),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            other => return Err(err(column, format!("unexpected character `{other}`"))),
        };
        out.push(Lexed { tok, column });
        i += 1;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// parsing

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    end_column: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|l| &l.tok)
    }

    fn column(&self) -> usize {
        self.toks
            .get(self.pos)
            .map_or(self.end_column, |l| l.column)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            column: self.column(),
            message: message.into(),
        })
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.peek() == Some(&Tok::Op(static_op(op))) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn or(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and()?;
        while self.eat_op("||") {
            let rhs = self.and()?;
            lhs = Expr::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.not()?;
        while self.eat_op("&&") {
            let rhs = self.not()?;
            lhs = Expr::Binary(BinOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op("!") {
            let inner = self.not()?;
            return Ok(Expr::Unary(UnOp::Not, Box::new(inner)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.additive()?;
        let Some(op) = self.comparison_op() else {
            return Ok(lhs);
        };
        self.pos += 1;
        let rhs = self.additive()?;
        if self.comparison_op().is_some() {
            return self.error("comparisons cannot be chained");
        }
        Ok(Expr::Binary(op, Box::new(lhs), Box::new(rhs)))
    }

    fn comparison_op(&self) -> Option<BinOp> {
        match self.peek() {
            Some(Tok::Op(op)) => match *op {
                "<" => Some(BinOp::Lt),
                "<=" => Some(BinOp::Le),
                ">" => Some(BinOp::Gt),
                ">=" => Some(BinOp::Ge),
                "==" => Some(BinOp::Eq),
                "!=" => Some(BinOp::Ne),
                _ => None,
            },
            _ => None,
        }
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = if self.eat_op("+") {
                BinOp::Add
            } else if self.eat_op("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.multiplicative()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_op("*") {
                BinOp::Mul
            } else if self.eat_op("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op("-") {
            let inner = self.unary()?;
            return Ok(Expr::Unary(UnOp::Neg, Box::new(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return self.error("unexpected end of expression");
        };
        match tok {
            Tok::Num(n) => {
                self.pos += 1;
                Ok(Expr::Number(n))
            }
            Tok::Str(s) => {
                self.pos += 1;
                Ok(Expr::Text(s))
            }
            Tok::Ident(name) => {
                let column = self.column();
                self.pos += 1;
                if self.peek() == Some(&Tok::LParen) {
                    let Some(func) = Func::lookup(&name) else {
                        return Err(ParseError::Syntax {
                            column,
                            message: format!("unknown function `{name}`"),
                        });
                    };
                    self.pos += 1;
                    let args = self.arguments()?;
                    let (lo, hi) = func.arity();
                    if args.len() < lo || args.len() > hi {
                        let expected = match (lo, hi) {
                            (l, h) if l == h => l.to_string(),
                            (l, usize::MAX) => format!("at least {l}"),
                            (l, h) => format!("{l} to {h}"),
                        };
                        return Err(ParseError::Arity {
                            function: func.name(),
                            expected,
                            found: args.len(),
                        });
                    }
                    return Ok(Expr::Call(func, args));
                }
                Ok(match name.as_str() {
                    "true" => Expr::Bool(true),
                    "false" => Expr::Bool(false),
                    _ => Expr::Var(name),
                })
            }
            Tok::LParen => {
                self.pos += 1;
                let first = self.or()?;
                if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                    let second = self.or()?;
                    self.expect(Tok::Comma, "`,` in vector literal")?;
                    let third = self.or()?;
                    self.expect(Tok::RParen, "`)` closing vector literal")?;
                    return Ok(Expr::Vec3(Box::new([first, second, third])));
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(first)
            }
            Tok::RParen | Tok::Comma | Tok::Op(_) => self.error("expected a value"),
        }
    }

    fn arguments(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::RParen) {
            self.pos += 1;
            return Ok(args);
        }
        loop {
            args.push(self.or()?);
            match self.peek() {
                Some(Tok::Comma) => self.pos += 1,
                Some(Tok::RParen) => {
                    self.pos += 1;
                    return Ok(args);
                }
                _ => return self.error("expected `,` or `)` in argument list"),
            }
        }
    }
}

fn static_op(op: &str) -> &'static str {
    ["||", "&&", "!", "+", "-", "*", "/"]
        .into_iter()
        .find(|o| *o == op)
        .expect("known operator")
}

/// Parses expression text into a tree.
pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let end_column = text.chars().count() + 1;
    if toks.is_empty() {
        return Err(ParseError::Syntax {
            column: 1,
            message: "empty expression".into(),
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end_column,
    };
    let e = p.or()?;
    if p.pos < p.toks.len() {
        return p.error("unexpected trailing input");
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// evaluation

fn type_err<T>(msg: impl Into<String>) -> Result<T, EvalError> {
    Err(EvalError::Type(msg.into()))
}

fn num(v: &SignalValue, ctx: &str) -> Result<f64, EvalError> {
    v.as_f64()
        .map_or_else(|| type_err(format!("{ctx} expects a number, got {}", v.type_name())), Ok)
}

fn vec(v: &SignalValue, ctx: &str) -> Result<Vec3, EvalError> {
    match v {
        SignalValue::Vec3(v) => Ok(*v),
        other => type_err(format!("{ctx} expects a vec3, got {}", other.type_name())),
    }
}

fn boolean(v: &SignalValue, ctx: &str) -> Result<bool, EvalError> {
    v.as_bool()
        .map_or_else(|| type_err(format!("{ctx} expects a boolean, got {}", v.type_name())), Ok)
}

/// `clamp((x - lo) / (hi - lo), 0, 1)`.
pub fn normalise(x: f64, lo: f64, hi: f64) -> Result<f64, EvalError> {
    let span = hi - lo;
    if span == 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    Ok(((x - lo) / span).clamp(0.0, 1.0))
}

pub fn lookup_var(env: &dyn Env, name: &str) -> Result<SignalValue, EvalError> {
    if let Some(v) = env.lookup(name) {
        return Ok(v);
    }
    if let Some((base, comp)) = name.rsplit_once('.') {
        let idx = match comp {
            "x" => Some(0),
            "y" => Some(1),
            "z" => Some(2),
            _ => None,
        };
        if let (Some(idx), Some(SignalValue::Vec3(v))) = (idx, env.lookup(base)) {
            return Ok(SignalValue::Number(v[idx]));
        }
    }
    Err(EvalError::UnknownVariable(name.to_string()))
}

impl Expr {
    pub fn eval(&self, env: &dyn Env) -> Result<SignalValue, EvalError> {
        let v = self.eval_inner(env)?;
        match &v {
            SignalValue::Number(n) if !n.is_finite() => type_err("non-finite result"),
            SignalValue::Vec3(x) if !x.iter().all(|c| c.is_finite()) => {
                type_err("non-finite vector")
            }
            _ => Ok(v),
        }
    }

    fn eval_inner(&self, env: &dyn Env) -> Result<SignalValue, EvalError> {
        use SignalValue as V;
        Ok(match self {
            Expr::Number(n) => V::Number(*n),
            Expr::Bool(b) => V::Bool(*b),
            Expr::Text(t) => V::Text(t.clone()),
            Expr::Var(name) => lookup_var(env, name)?,
            Expr::Vec3(parts) => {
                let mut c = [0.0; 3];
                for (slot, e) in c.iter_mut().zip(parts.iter()) {
                    *slot = num(&e.eval_inner(env)?, "vector component")?;
                }
                V::Vec3(Vec3::new(c[0], c[1], c[2]))
            }
            Expr::Unary(UnOp::Neg, e) => match e.eval_inner(env)? {
                V::Number(n) => V::Number(-n),
                V::Vec3(v) => V::Vec3(-v),
                other => return type_err(format!("cannot negate {}", other.type_name())),
            },
            Expr::Unary(UnOp::Not, e) => V::Bool(!boolean(&e.eval_inner(env)?, "`!`")?),
            Expr::Binary(BinOp::And, a, b) => {
                V::Bool(boolean(&a.eval_inner(env)?, "`&&`")? && boolean(&b.eval_inner(env)?, "`&&`")?)
            }
            Expr::Binary(BinOp::Or, a, b) => {
                V::Bool(boolean(&a.eval_inner(env)?, "`||`")? || boolean(&b.eval_inner(env)?, "`||`")?)
            }
            Expr::Binary(op, a, b) => binary(*op, a.eval_inner(env)?, b.eval_inner(env)?)?,
            Expr::Call(func, args) => {
                let vals = args
                    .iter()
                    .map(|a| a.eval_inner(env))
                    .collect::<Result<Vec<_>, _>>()?;
                call(*func, &vals)?
            }
        })
    }

    /// Every variable name referenced, in first-appearance order.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Var(v) => {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
            Expr::Vec3(parts) => parts.iter().for_each(|p| p.collect_vars(out)),
            Expr::Unary(_, e) => e.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            Expr::Number(_) | Expr::Bool(_) | Expr::Text(_) => {}
        }
    }

    /// Best-effort static result type given variable types.
    pub fn infer(&self, vars: &dyn Fn(&str) -> SignalType) -> SignalType {
        use SignalType as T;
        match self {
            Expr::Number(_) => T::Number,
            Expr::Bool(_) => T::Bool,
            Expr::Text(_) => T::Text,
            Expr::Var(v) => vars(v),
            Expr::Vec3(_) => T::Vec3,
            Expr::Unary(UnOp::Not, _) => T::Bool,
            Expr::Unary(UnOp::Neg, e) => match e.infer(vars) {
                T::Vec3 => T::Vec3,
                T::Unknown => T::Unknown,
                _ => T::Number,
            },
            Expr::Binary(op, a, b) => {
                if op.is_comparison() || matches!(op, BinOp::And | BinOp::Or) {
                    return T::Bool;
                }
                match (a.infer(vars), b.infer(vars)) {
                    (T::Vec3, _) | (_, T::Vec3) => T::Vec3,
                    (T::Number, T::Number) => T::Number,
                    _ => T::Unknown,
                }
            }
            Expr::Call(Func::Dot | Func::Distance | Func::Angle | Func::Normalise, _) => T::Number,
            Expr::Call(_, args) => {
                if args.iter().all(|a| a.infer(vars) == T::Number) {
                    T::Number
                } else {
                    T::Unknown
                }
            }
        }
    }

    /// True when the expression is a single variable reference.
    pub fn as_var(&self) -> Option<&str> {
        match self {
            Expr::Var(v) => Some(v),
            _ => None,
        }
    }
}

fn binary(op: BinOp, a: SignalValue, b: SignalValue) -> Result<SignalValue, EvalError> {
    use SignalValue as V;
    let sym = op.symbol();
    Ok(match (op, &a, &b) {
        (BinOp::Add, V::Number(x), V::Number(y)) => V::Number(x + y),
        (BinOp::Sub, V::Number(x), V::Number(y)) => V::Number(x - y),
        (BinOp::Mul, V::Number(x), V::Number(y)) => V::Number(x * y),
        (BinOp::Div, V::Number(_), V::Number(y)) if *y == 0.0 => return Err(EvalError::DivisionByZero),
        (BinOp::Div, V::Number(x), V::Number(y)) => V::Number(x / y),
        (BinOp::Add, V::Vec3(x), V::Vec3(y)) => V::Vec3(x + y),
        (BinOp::Sub, V::Vec3(x), V::Vec3(y)) => V::Vec3(x - y),
        (BinOp::Mul, V::Vec3(x), V::Number(s)) | (BinOp::Mul, V::Number(s), V::Vec3(x)) => {
            V::Vec3(x * *s)
        }
        (BinOp::Div, V::Vec3(_), V::Number(s)) if *s == 0.0 => return Err(EvalError::DivisionByZero),
        (BinOp::Div, V::Vec3(x), V::Number(s)) => V::Vec3(x / *s),
        (BinOp::Lt, V::Number(x), V::Number(y)) => V::Bool(x < y),
        (BinOp::Le, V::Number(x), V::Number(y)) => V::Bool(x <= y),
        (BinOp::Gt, V::Number(x), V::Number(y)) => V::Bool(x > y),
        (BinOp::Ge, V::Number(x), V::Number(y)) => V::Bool(x >= y),
        (BinOp::Eq | BinOp::Ne, _, _) => {
            if a.type_of() != b.type_of() {
                return type_err(format!(
                    "cannot compare {} {sym} {}",
                    a.type_name(),
                    b.type_name()
                ));
            }
            let eq = a == b;
            V::Bool(if op == BinOp::Eq { eq } else { !eq })
        }
        _ => {
            return type_err(format!(
                "operator `{sym}` does not apply to {} and {}",
                a.type_name(),
                b.type_name()
            ))
        }
    })
}

fn call(func: Func, args: &[SignalValue]) -> Result<SignalValue, EvalError> {
    use SignalValue as V;
    let name = func.name();
    Ok(match func {
        Func::Normalise => V::Number(normalise(
            num(&args[0], name)?,
            num(&args[1], name)?,
            num(&args[2], name)?,
        )?),
        Func::Clamp => {
            let (x, lo, hi) = (num(&args[0], name)?, num(&args[1], name)?, num(&args[2], name)?);
            if lo > hi {
                return type_err("clamp bounds are inverted");
            }
            V::Number(x.clamp(lo, hi))
        }
        Func::Abs => V::Number(num(&args[0], name)?.abs()),
        Func::Min | Func::Max => {
            let mut acc = num(&args[0], name)?;
            for a in &args[1..] {
                let v = num(a, name)?;
                acc = if func == Func::Min { acc.min(v) } else { acc.max(v) };
            }
            V::Number(acc)
        }
        Func::Distance => V::Number((vec(&args[0], name)? - vec(&args[1], name)?).norm()),
        Func::Dot => V::Number(vec(&args[0], name)?.dot(&vec(&args[1], name)?)),
        Func::Angle => match args {
            [V::Rotation(q)] => V::Number(q.angle().to_degrees()),
            [a, b] => {
                let (a, b) = (vec(a, name)?, vec(b, name)?);
                V::Number(
                    angle_between_deg(&a, &b)
                        .map_or_else(|| type_err("angle of a zero-length vector"), Ok)?,
                )
            }
            [other] => {
                return type_err(format!(
                    "angle expects a rotation or two vec3, got {}",
                    other.type_name()
                ))
            }
            _ => unreachable!("arity checked at parse time"),
        },
    })
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(n) => write!(f, "{n}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Text(t) => write!(f, "'{t}'"),
            Expr::Var(v) => f.write_str(v),
            Expr::Vec3(p) => write!(f, "({}, {}, {})", p[0], p[1], p[2]),
            Expr::Unary(UnOp::Neg, e) => write!(f, "-({e})"),
            Expr::Unary(UnOp::Not, e) => write!(f, "!({e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
