//! A small expression language for coefficient functions and implicit
//! domain predicates.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! or      := and ("or" and)*
//! and     := not ("and" not)*
//! not     := "not" not | cmp
//! cmp     := sum (("<" | "<=" | ">" | ">=") sum)?
//! sum     := product (("+" | "-") product)*
//! product := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := atom ("^" unary)?
//! atom    := number | "pi" | x1..x9 | func "(" args ")" | "(" or ")"
//! ```
//!
//! Scalar expressions may not contain boolean subterms; predicates must
//! have a boolean root.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Context {
    Scalar,
    Predicate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    Sqrt,
    Min,
    Max,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    /// 1-based variable index (`x1` is `Var(1)`).
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Bool(bool),
}

impl Expr {
    pub fn is_predicate(&self) -> bool {
        matches!(
            self,
            Expr::Cmp(..) | Expr::Not(_) | Expr::And(..) | Expr::Or(..)
        )
    }

    /// Largest variable index used, 0 if none.
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Pi => 0,
            Expr::Var(k) => *k,
            Expr::Neg(e) | Expr::Not(e) => e.max_var(),
            Expr::Bin(_, a, b) | Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                a.max_var().max(b.max_var())
            }
            Expr::Call(_, args) => args.iter().map(Expr::max_var).max().unwrap_or(0),
        }
    }

    pub fn eval(&self, point: &[f64]) -> Result<Value> {
        Ok(match self {
            Expr::Num(v) => Value::Num(*v),
            Expr::Pi => Value::Num(std::f64::consts::PI),
            Expr::Var(k) => Value::Num(
                *point
                    .get(k - 1)
                    .ok_or_else(|| Error::Eval(format!("unbound variable x{k}")))?,
            ),
            Expr::Neg(e) => Value::Num(-e.eval_num(point)?),
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval_num(point)?, b.eval_num(point)?);
                Value::Num(match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(Error::Eval("division by zero".into()));
                        }
                        x / y
                    }
                    BinOp::Pow => x.powf(y),
                })
            }
            Expr::Call(f, args) => {
                let x = args[0].eval_num(point)?;
                Value::Num(match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Abs => x.abs(),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(Error::Eval(format!("sqrt of negative value {x}")));
                        }
                        x.sqrt()
                    }
                    Func::Min => x.min(args[1].eval_num(point)?),
                    Func::Max => x.max(args[1].eval_num(point)?),
                })
            }
            Expr::Cmp(op, a, b) => {
                let (x, y) = (a.eval_num(point)?, b.eval_num(point)?);
                Value::Bool(match op {
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    CmpOp::Ge => x >= y,
                })
            }
            Expr::Not(e) => Value::Bool(!e.eval_bool(point)?),
            Expr::And(a, b) => Value::Bool(a.eval_bool(point)? && b.eval_bool(point)?),
            Expr::Or(a, b) => Value::Bool(a.eval_bool(point)? || b.eval_bool(point)?),
        })
    }

    pub fn eval_num(&self, point: &[f64]) -> Result<f64> {
        match self.eval(point)? {
            Value::Num(v) => Ok(v),
            Value::Bool(_) => Err(Error::Eval("expected a number, found a boolean".into())),
        }
    }

    pub fn eval_bool(&self, point: &[f64]) -> Result<bool> {
        match self.eval(point)? {
            Value::Bool(b) => Ok(b),
            Value::Num(_) => Err(Error::Eval("expected a boolean, found a number".into())),
        }
    }
}

/// Fully parenthesized output; `parse(print(e)) == e` for every tree the
/// parser can produce.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 => write!(f, "(-{:?})", -v),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var(k) => write!(f, "x{k}"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Expr::Cmp(op, a, b) => {
                let s = match op {
                    CmpOp::Lt => "<",
                    CmpOp::Le => "<=",
                    CmpOp::Gt => ">",
                    CmpOp::Ge => ">=",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Not(e) => write!(f, "(not {e})"),
            Expr::And(a, b) => write!(f, "({a} and {b})"),
            Expr::Or(a, b) => write!(f, "({a} or {b})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(&'static str),
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        let (l0, c0) = (line, col);
        let push = |out: &mut Vec<Token>, tok| {
            out.push(Token {
                tok,
                line: l0,
                column: c0,
            })
        };
        if c == '\n' {
            line += 1;
            col = 1;
            k += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            k += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(k + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_digit() || chars[k] == '.') {
                k += 1;
            }
            if k < chars.len() && (chars[k] == 'e' || chars[k] == 'E') {
                let mut j = k + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    k = j;
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let text: String = chars[start..k].iter().collect();
            let v: f64 = text.parse().map_err(|_| Error::Parse {
                line: l0,
                column: c0,
                message: format!("malformed number '{text}'"),
            })?;
            col += k - start;
            push(&mut out, Tok::Num(v));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            col += k - start;
            push(&mut out, Tok::Ident(chars[start..k].iter().collect()));
            continue;
        }
        let two: String = chars[k..(k + 2).min(chars.len())].iter().collect();
        let sym: Option<(&'static str, usize)> = match two.as_str() {
            "<=" => Some(("<=", 2)),
            ">=" => Some((">=", 2)),
            "&&" => Some(("and", 2)),
            "||" => Some(("or", 2)),
            _ => match c {
                '+' => Some(("+", 1)),
                '-' => Some(("-", 1)),
                '*' => Some(("*", 1)),
                '/' => Some(("/", 1)),
                '^' => Some(("^", 1)),
                '(' => Some(("(", 1)),
                ')' => Some((")", 1)),
                ',' => Some((",", 1)),
                '<' => Some(("<", 1)),
                '>' => Some((">", 1)),
                '≤' => Some(("<=", 1)),
                '≥' => Some((">=", 1)),
                '!' => Some(("not", 1)),
                _ => None,
            },
        };
        match sym {
            Some((s, len)) => {
                push(&mut out, Tok::Sym(s));
                k += len;
                col += len;
            }
            None => {
                return Err(Error::Parse {
                    line: l0,
                    column: c0,
                    message: format!("unexpected character '{c}'"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::End,
        line,
        column: col,
    });
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Ty {
    Num,
    Bool,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        let t = self.peek();
        Err(Error::Parse {
            line: t.line,
            column: t.column,
            message: message.into(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        match &self.peek().tok {
            Tok::Sym(x) => *x == s,
            Tok::Ident(x) => (s == "and" || s == "or" || s == "not") && x == s,
            _ => false,
        }
    }

    fn expect(&mut self, s: &str) -> Result<()> {
        if self.is_sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{s}'"))
        }
    }

    fn want(&self, got: Ty, want: Ty, at: &Token) -> Result<()> {
        if got == want {
            return Ok(());
        }
        Err(Error::Parse {
            line: at.line,
            column: at.column,
            message: match want {
                Ty::Num => "expected a numeric operand, found a boolean".into(),
                Ty::Bool => "expected a boolean operand, found a number".into(),
            },
        })
    }

    fn or(&mut self) -> Result<(Expr, Ty)> {
        let at = self.peek().clone();
        let (mut lhs, mut ty) = self.and()?;
        while self.is_sym("or") {
            self.want(ty, Ty::Bool, &at)?;
            self.pos += 1;
            let at = self.peek().clone();
            let (rhs, rty) = self.and()?;
            self.want(rty, Ty::Bool, &at)?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
            ty = Ty::Bool;
        }
        Ok((lhs, ty))
    }

    fn and(&mut self) -> Result<(Expr, Ty)> {
        let at = self.peek().clone();
        let (mut lhs, mut ty) = self.not()?;
        while self.is_sym("and") {
            self.want(ty, Ty::Bool, &at)?;
            self.pos += 1;
            let at = self.peek().clone();
            let (rhs, rty) = self.not()?;
            self.want(rty, Ty::Bool, &at)?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
            ty = Ty::Bool;
        }
        Ok((lhs, ty))
    }

    fn not(&mut self) -> Result<(Expr, Ty)> {
        if self.is_sym("not") {
            self.pos += 1;
            let at = self.peek().clone();
            let (e, ty) = self.not()?;
            self.want(ty, Ty::Bool, &at)?;
            return Ok((Expr::Not(Box::new(e)), Ty::Bool));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<(Expr, Ty)> {
        let at = self.peek().clone();
        let (lhs, ty) = self.sum()?;
        let op = match &self.peek().tok {
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            _ => return Ok((lhs, ty)),
        };
        self.want(ty, Ty::Num, &at)?;
        self.pos += 1;
        let at = self.peek().clone();
        let (rhs, rty) = self.sum()?;
        self.want(rty, Ty::Num, &at)?;
        if matches!(self.peek().tok, Tok::Sym("<" | "<=" | ">" | ">=")) {
            return self.err("comparisons cannot be chained");
        }
        Ok((Expr::Cmp(op, Box::new(lhs), Box::new(rhs)), Ty::Bool))
    }

    fn sum(&mut self) -> Result<(Expr, Ty)> {
        let at = self.peek().clone();
        let (mut lhs, ty) = self.product()?;
        loop {
            let op = match &self.peek().tok {
                Tok::Sym("+") => BinOp::Add,
                Tok::Sym("-") => BinOp::Sub,
                _ => return Ok((lhs, ty)),
            };
            self.want(ty, Ty::Num, &at)?;
            self.pos += 1;
            let at = self.peek().clone();
            let (rhs, rty) = self.product()?;
            self.want(rty, Ty::Num, &at)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<(Expr, Ty)> {
        let at = self.peek().clone();
        let (mut lhs, ty) = self.unary()?;
        loop {
            let op = match &self.peek().tok {
                Tok::Sym("*") => BinOp::Mul,
                Tok::Sym("/") => BinOp::Div,
                _ => return Ok((lhs, ty)),
            };
            self.want(ty, Ty::Num, &at)?;
            self.pos += 1;
            let at = self.peek().clone();
            let (rhs, rty) = self.unary()?;
            self.want(rty, Ty::Num, &at)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<(Expr, Ty)> {
        if self.is_sym("-") {
            self.pos += 1;
            let at = self.peek().clone();
            let (e, ty) = self.unary()?;
            self.want(ty, Ty::Num, &at)?;
            return Ok((Expr::Neg(Box::new(e)), Ty::Num));
        }
        self.power()
    }

    fn power(&mut self) -> Result<(Expr, Ty)> {
        let at = self.peek().clone();
        let (base, ty) = self.atom()?;
        if self.is_sym("^") {
            self.want(ty, Ty::Num, &at)?;
            self.pos += 1;
            let at = self.peek().clone();
            let (exp, ety) = self.unary()?;
            self.want(ety, Ty::Num, &at)?;
            return Ok((Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)), Ty::Num));
        }
        Ok((base, ty))
    }

    fn atom(&mut self) -> Result<(Expr, Ty)> {
        let tok = self.peek().clone();
        match tok.tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok((Expr::Num(v), Ty::Num))
            }
            Tok::Sym("(") => {
                self.pos += 1;
                let inner = self.or()?;
                self.expect(")")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if name == "pi" {
                    return Ok((Expr::Pi, Ty::Num));
                }
                if let Some(k) = parse_var(&name) {
                    return Ok((Expr::Var(k), Ty::Num));
                }
                let Some(func) = Func::from_name(&name) else {
                    self.pos -= 1;
                    return self.err(format!("unknown identifier '{name}'"));
                };
                self.expect("(")?;
                let mut args = Vec::new();
                loop {
                    let at = self.peek().clone();
                    let (a, ty) = self.or()?;
                    self.want(ty, Ty::Num, &at)?;
                    args.push(a);
                    if self.is_sym(",") {
                        self.pos += 1;
                        continue;
                    }
                    break;
                }
                self.expect(")")?;
                if args.len() != func.arity() {
                    return Err(Error::Parse {
                        line: tok.line,
                        column: tok.column,
                        message: format!(
                            "{} takes {} argument(s), got {}",
                            func.name(),
                            func.arity(),
                            args.len()
                        ),
                    });
                }
                Ok((Expr::Call(func, args), Ty::Num))
            }
            Tok::End => self.err("unexpected end of input"),
            Tok::Sym(s) => self.err(format!("unexpected '{s}'")),
        }
    }
}

fn parse_var(name: &str) -> Option<usize> {
    let rest = name.strip_prefix('x')?;
    if rest.len() != 1 {
        return None;
    }
    let k = rest.parse::<usize>().ok()?;
    (1..=9).contains(&k).then_some(k)
}

pub fn parse(src: &str, context: Context) -> Result<Expr> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let (e, ty) = p.or()?;
    if p.peek().tok != Tok::End {
        return p.err("trailing input");
    }
    match (context, ty) {
        (Context::Scalar, Ty::Bool) => Err(Error::Parse {
            line: 1,
            column: 1,
            message: "boolean expression in scalar context".into(),
        }),
        (Context::Predicate, Ty::Num) => Err(Error::Parse {
            line: 1,
            column: 1,
            message: "predicate must be a boolean expression".into(),
        }),
        _ => Ok(e),
    }
}
