//! Guard constraints over read (`v`) and written (`v'`) copies of process variables.
//!
//! Concrete syntax accepted by [`Guard::parse`]:
//!
//! ```text
//! or    := and (("||" | "or" | "∨") and)*
//! and   := not (("&&" | "and" | "∧") not)*
//! not   := ("!" | "not" | "¬") not | cmp
//! cmp   := sum (op sum)?        op ∈ >= > <= < == = != <> ≥ ≤ ≠
//! sum   := neg (("+" | "-") neg)*
//! neg   := "-" neg | atom
//! atom  := number | number "/" number | "string" | true | false | var | "(" or ")"
//! var   := ident | ident "'" | ident "^w" | ident "^r"
//! ```
//!
//! A bare identifier (or `x^r`) is the value read before the transition fires,
//! `x'` (or `x^w`) the value written by it. String literals must be quoted.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::value::{format_rational, parse_decimal, Sort, Value};

/// Whether a variable occurrence refers to the value before (read) or after (write) firing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ann {
    Read,
    Write,
}

/// An annotated variable `v^r` or `v^w`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AnnVar {
    pub name: String,
    pub ann: Ann,
}

impl AnnVar {
    pub fn read(name: &str) -> Self {
        AnnVar { name: name.to_string(), ann: Ann::Read }
    }

    pub fn write(name: &str) -> Self {
        AnnVar { name: name.to_string(), ann: Ann::Write }
    }
}

impl fmt::Display for AnnVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ann {
            Ann::Read => write!(f, "{}", self.name),
            Ann::Write => write!(f, "{}'", self.name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Ge,
    Gt,
    Eq,
    Le,
    Lt,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
            CmpOp::Eq => "==",
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Ne => "!=",
        }
    }

    /// The operator obtained by swapping the operands (`k < x` is `x > k`).
    pub fn flipped(self) -> CmpOp {
        match self {
            CmpOp::Ge => CmpOp::Le,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Lt => CmpOp::Gt,
            other => other,
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Ge => ord != Less,
            CmpOp::Gt => ord == Greater,
            CmpOp::Eq => ord == Equal,
            CmpOp::Le => ord != Greater,
            CmpOp::Lt => ord == Less,
            CmpOp::Ne => ord != Equal,
        }
    }

    pub fn is_equality(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

/// Expression tree. Boolean and term positions share one type; well-sortedness
/// is established by [`Expr::check`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(AnnVar),
    Const(Value),
    Add(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Not(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GuardError {
    #[error("guard syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("variable `{0}` is not declared")]
    Undeclared(String),
    #[error("ill-sorted guard: {0}")]
    IllSorted(String),
    #[error("unbound variable `{0}` during guard evaluation")]
    Unbound(String),
}

impl Expr {
    pub fn var(name: &str, ann: Ann) -> Expr {
        Expr::Var(AnnVar { name: name.to_string(), ann })
    }

    pub fn cmp(op: CmpOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Cmp(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn truth() -> Expr {
        Expr::Const(Value::Bool(true))
    }

    pub fn is_true_literal(&self) -> bool {
        matches!(self, Expr::Const(Value::Bool(true))) || matches!(self, Expr::And(v) if v.is_empty())
    }

    /// All annotated variables occurring in the expression.
    pub fn vars(&self) -> BTreeSet<AnnVar> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<AnnVar>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Const(_) => {}
            Expr::Add(a, b) | Expr::Cmp(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Neg(a) | Expr::Not(a) => a.collect_vars(out),
            Expr::And(xs) | Expr::Or(xs) => xs.iter().for_each(|x| x.collect_vars(out)),
        }
    }

    /// Infers the sort of the expression given the sorts of the base variables.
    pub fn check(&self, sort_of: &dyn Fn(&str) -> Option<Sort>) -> Result<Sort, GuardError> {
        match self {
            Expr::Var(v) => sort_of(&v.name).ok_or_else(|| GuardError::Undeclared(v.name.clone())),
            Expr::Const(c) => Ok(c.sort()),
            Expr::Add(a, b) => {
                let (sa, sb) = (a.check(sort_of)?, b.check(sort_of)?);
                if !sa.is_numeric() || !sb.is_numeric() {
                    return Err(GuardError::IllSorted(format!("`+` applied to {sa} and {sb}")));
                }
                Ok(if sa == Sort::Int && sb == Sort::Int { Sort::Int } else { Sort::Rat })
            }
            Expr::Neg(a) => {
                let s = a.check(sort_of)?;
                if !s.is_numeric() {
                    return Err(GuardError::IllSorted(format!("negation of {s}")));
                }
                Ok(s)
            }
            Expr::Cmp(op, a, b) => {
                let (sa, sb) = (a.check(sort_of)?, b.check(sort_of)?);
                let ok = if sa.is_numeric() && sb.is_numeric() {
                    true
                } else {
                    op.is_equality() && sa == sb
                };
                if !ok {
                    return Err(GuardError::IllSorted(format!(
                        "`{}` between {sa} and {sb}",
                        op.symbol()
                    )));
                }
                Ok(Sort::Bool)
            }
            Expr::Not(a) => {
                let s = a.check(sort_of)?;
                if s != Sort::Bool {
                    return Err(GuardError::IllSorted(format!("`!` applied to {s}")));
                }
                Ok(Sort::Bool)
            }
            Expr::And(xs) | Expr::Or(xs) => {
                for x in xs {
                    let s = x.check(sort_of)?;
                    if s != Sort::Bool {
                        return Err(GuardError::IllSorted(format!("connective applied to {s}")));
                    }
                }
                Ok(Sort::Bool)
            }
        }
    }

    /// Evaluates the expression with exact arithmetic.
    pub fn eval(&self, lookup: &dyn Fn(&AnnVar) -> Option<Value>) -> Result<Value, GuardError> {
        match self {
            Expr::Var(v) => lookup(v).ok_or_else(|| GuardError::Unbound(v.to_string())),
            Expr::Const(c) => Ok(c.clone()),
            Expr::Add(a, b) => {
                let (va, vb) = (a.eval(lookup)?, b.eval(lookup)?);
                match (&va, &vb) {
                    (Value::Int(x), Value::Int(y)) => Ok(Value::Int(x + y)),
                    _ => match (va.as_rational(), vb.as_rational()) {
                        (Some(x), Some(y)) => Ok(Value::Rat(x + y)),
                        _ => Err(GuardError::IllSorted("`+` on non-numeric values".into())),
                    },
                }
            }
            Expr::Neg(a) => match a.eval(lookup)? {
                Value::Int(x) => Ok(Value::Int(-x)),
                Value::Rat(x) => Ok(Value::Rat(-x)),
                _ => Err(GuardError::IllSorted("negation of non-numeric value".into())),
            },
            Expr::Cmp(op, a, b) => {
                let (va, vb) = (a.eval(lookup)?, b.eval(lookup)?);
                let result = match (va.as_rational(), vb.as_rational()) {
                    (Some(x), Some(y)) => op.holds(x.cmp(&y)),
                    _ if op.is_equality() && va.sort() == vb.sort() => {
                        (va == vb) == (*op == CmpOp::Eq)
                    }
                    _ => {
                        return Err(GuardError::IllSorted(format!(
                            "`{}` between {} and {}",
                            op.symbol(),
                            va.sort(),
                            vb.sort()
                        )))
                    }
                };
                Ok(Value::Bool(result))
            }
            Expr::Not(a) => match a.eval(lookup)? {
                Value::Bool(x) => Ok(Value::Bool(!x)),
                _ => Err(GuardError::IllSorted("`!` applied to non-boolean".into())),
            },
            Expr::And(xs) | Expr::Or(xs) => {
                let is_and = matches!(self, Expr::And(_));
                let mut acc = is_and;
                // No short-circuit: unbound variables are reported regardless of operand order.
                for x in xs {
                    match x.eval(lookup)? {
                        Value::Bool(b) => {
                            acc = if is_and { acc && b } else { acc || b };
                        }
                        _ => return Err(GuardError::IllSorted("connective on non-boolean".into())),
                    }
                }
                Ok(Value::Bool(acc))
            }
        }
    }

    /// Value of a variable-free expression.
    pub fn const_value(&self) -> Option<Value> {
        if !self.vars().is_empty() {
            return None;
        }
        self.eval(&|_| None).ok()
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(xs) if xs.len() > 1 => 1,
            Expr::And(xs) if xs.len() > 1 => 2,
            Expr::Not(_) => 3,
            Expr::Cmp(..) => 4,
            Expr::Add(..) => 5,
            Expr::Neg(_) => 6,
            Expr::Const(Value::Int(i)) if i.sign() == num_bigint::Sign::Minus => 6,
            Expr::Const(Value::Rat(_)) => 6,
            _ => 7,
        }
    }

    fn fmt_child(&self, child: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if child.precedence() < min {
            write!(f, "({child})")
        } else {
            write!(f, "{child}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Const(Value::Rat(r)) => {
                let text = format_rational(r);
                if text.contains('/') {
                    write!(f, "({text})")
                } else if r.is_integer() {
                    // keep the literal rational-sorted on re-parse
                    write!(f, "{text}.0")
                } else {
                    write!(f, "{text}")
                }
            }
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Add(a, b) => {
                self.fmt_child(a, 5, f)?;
                if let Expr::Neg(inner) = b.as_ref() {
                    f.write_str(" - ")?;
                    self.fmt_child(inner, 6, f)
                } else {
                    f.write_str(" + ")?;
                    self.fmt_child(b, 6, f)
                }
            }
            Expr::Neg(a) => {
                f.write_str("-")?;
                self.fmt_child(a, 7, f)
            }
            Expr::Cmp(op, a, b) => {
                self.fmt_child(a, 5, f)?;
                write!(f, " {} ", op.symbol())?;
                self.fmt_child(b, 5, f)
            }
            Expr::Not(a) => {
                f.write_str("!")?;
                self.fmt_child(a, 3, f)
            }
            Expr::And(xs) | Expr::Or(xs) => {
                let (sep, prec, empty) = if matches!(self, Expr::And(_)) {
                    (" && ", 3, "true")
                } else {
                    (" || ", 2, "false")
                };
                if xs.is_empty() {
                    return f.write_str(empty);
                }
                if xs.len() == 1 {
                    return write!(f, "{}", xs[0]);
                }
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    self.fmt_child(x, prec, f)?;
                }
                Ok(())
            }
        }
    }
}

/// A type-checked guard together with its source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guard {
    pub expr: Expr,
}

impl Guard {
    pub fn always() -> Guard {
        Guard { expr: Expr::truth() }
    }

    pub fn new(expr: Expr) -> Guard {
        Guard { expr }
    }

    /// Parses guard text. An empty or whitespace-only string is the trivially true guard.
    pub fn parse(text: &str) -> Result<Guard, GuardError> {
        if text.trim().is_empty() {
            return Ok(Guard::always());
        }
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0, len: text.len() };
        let expr = p.parse_or()?;
        if p.pos < p.tokens.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Guard { expr })
    }

    pub fn vars(&self) -> BTreeSet<AnnVar> {
        self.expr.vars()
    }

    /// Evaluates the guard under a transition assignment.
    pub fn eval(&self, lookup: &dyn Fn(&AnnVar) -> Option<Value>) -> Result<bool, GuardError> {
        match self.expr.eval(lookup)? {
            Value::Bool(b) => Ok(b),
            other => Err(GuardError::IllSorted(format!("guard evaluates to {}", other.sort()))),
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Str(String),
    Ident(String, Option<Ann>),
    True,
    False,
    LParen,
    RParen,
    Plus,
    Minus,
    Slash,
    And,
    Or,
    Not,
    Op(CmpOp),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, GuardError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |offset: usize, message: &str| GuardError::Syntax { offset, message: message.to_string() };
    while i < chars.len() {
        let (off, c) = chars[i];
        let next = chars.get(i + 1).map(|&(_, c)| c);
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let two = |a: char, b: char| c == a && next == Some(b);
        let (tok, width) = if two('>', '=') {
            (Tok::Op(CmpOp::Ge), 2)
        } else if two('<', '=') {
            (Tok::Op(CmpOp::Le), 2)
        } else if two('=', '=') {
            (Tok::Op(CmpOp::Eq), 2)
        } else if two('!', '=') || two('<', '>') {
            (Tok::Op(CmpOp::Ne), 2)
        } else if two('&', '&') {
            (Tok::And, 2)
        } else if two('|', '|') {
            (Tok::Or, 2)
        } else {
            match c {
                '>' => (Tok::Op(CmpOp::Gt), 1),
                '<' => (Tok::Op(CmpOp::Lt), 1),
                '=' => (Tok::Op(CmpOp::Eq), 1),
                '≥' => (Tok::Op(CmpOp::Ge), 1),
                '≤' => (Tok::Op(CmpOp::Le), 1),
                '≠' => (Tok::Op(CmpOp::Ne), 1),
                '∧' => (Tok::And, 1),
                '∨' => (Tok::Or, 1),
                '!' | '¬' => (Tok::Not, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '+' => (Tok::Plus, 1),
                '-' => (Tok::Minus, 1),
                '/' => (Tok::Slash, 1),
                '"' => {
                    let mut s = String::new();
                    let mut j = i + 1;
                    loop {
                        match chars.get(j) {
                            None => return Err(err(off, "unterminated string literal")),
                            Some(&(_, '\\')) if chars.get(j + 1).is_some() => {
                                s.push(chars[j + 1].1);
                                j += 2;
                            }
                            Some(&(_, '"')) => break,
                            Some(&(_, ch)) => {
                                s.push(ch);
                                j += 1;
                            }
                        }
                    }
                    out.push((off, Tok::Str(s)));
                    i = j + 1;
                    continue;
                }
                d if d.is_ascii_digit() || (d == '.' && next.is_some_and(|n| n.is_ascii_digit())) => {
                    let mut j = i;
                    let mut s = String::new();
                    while let Some(&(_, ch)) = chars.get(j) {
                        let exp_sign = (ch == '-' || ch == '+')
                            && matches!(s.chars().last(), Some('e' | 'E'));
                        if ch.is_ascii_digit() || ch == '.' || ch == 'e' || ch == 'E' || exp_sign {
                            s.push(ch);
                            j += 1;
                        } else {
                            break;
                        }
                    }
                    out.push((off, Tok::Num(s)));
                    i = j;
                    continue;
                }
                a if a.is_alphabetic() || a == '_' => {
                    let mut j = i;
                    let mut s = String::new();
                    while let Some(&(_, ch)) = chars.get(j) {
                        if ch.is_alphanumeric() || ch == '_' || ch == '.' || ch == ':' {
                            s.push(ch);
                            j += 1;
                        } else {
                            break;
                        }
                    }
                    let mut ann = None;
                    match (chars.get(j).map(|p| p.1), chars.get(j + 1).map(|p| p.1)) {
                        (Some('\''), _) => {
                            ann = Some(Ann::Write);
                            j += 1;
                        }
                        (Some('^'), Some('w')) => {
                            ann = Some(Ann::Write);
                            j += 2;
                        }
                        (Some('^'), Some('r')) => {
                            ann = Some(Ann::Read);
                            j += 2;
                        }
                        _ => {}
                    }
                    let tok = match (s.as_str(), ann) {
                        ("true", None) => Tok::True,
                        ("false", None) => Tok::False,
                        ("and" | "AND", None) => Tok::And,
                        ("or" | "OR", None) => Tok::Or,
                        ("not" | "NOT", None) => Tok::Not,
                        _ => Tok::Ident(s, ann),
                    };
                    out.push((off, tok));
                    i = j;
                    continue;
                }
                _ => return Err(err(off, &format!("unexpected character `{c}`"))),
            }
        };
        out.push((off, tok));
        i += width;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn error(&self, message: &str) -> GuardError {
        let offset = self.tokens.get(self.pos).map(|(o, _)| *o).unwrap_or(self.len);
        GuardError::Syntax { offset, message: message.to_string() }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_or(&mut self) -> Result<Expr, GuardError> {
        let mut xs = vec![self.parse_and()?];
        while self.eat(&Tok::Or) {
            xs.push(self.parse_and()?);
        }
        Ok(if xs.len() == 1 { xs.pop().unwrap() } else { Expr::Or(xs) })
    }

    fn parse_and(&mut self) -> Result<Expr, GuardError> {
        let mut xs = vec![self.parse_not()?];
        while self.eat(&Tok::And) {
            xs.push(self.parse_not()?);
        }
        Ok(if xs.len() == 1 { xs.pop().unwrap() } else { Expr::And(xs) })
    }

    fn parse_not(&mut self) -> Result<Expr, GuardError> {
        if self.eat(&Tok::Not) {
            return Ok(Expr::Not(Box::new(self.parse_not()?)));
        }
        self.parse_cmp()
    }

    fn parse_cmp(&mut self) -> Result<Expr, GuardError> {
        let lhs = self.parse_sum()?;
        if let Some(Tok::Op(op)) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.parse_sum()?;
            return Ok(Expr::cmp(op, lhs, rhs));
        }
        Ok(lhs)
    }

    fn parse_sum(&mut self) -> Result<Expr, GuardError> {
        let mut acc = self.parse_neg()?;
        loop {
            if self.eat(&Tok::Plus) {
                acc = Expr::Add(Box::new(acc), Box::new(self.parse_neg()?));
            } else if self.eat(&Tok::Minus) {
                let rhs = self.parse_neg()?;
                acc = Expr::Add(Box::new(acc), Box::new(Expr::Neg(Box::new(rhs))));
            } else {
                return Ok(acc);
            }
        }
    }

    fn parse_neg(&mut self) -> Result<Expr, GuardError> {
        if self.eat(&Tok::Minus) {
            let inner = self.parse_neg()?;
            // fold negative literals so `x > -1` stays variable-to-constant
            return Ok(match inner {
                Expr::Const(Value::Int(i)) => Expr::Const(Value::Int(-i)),
                Expr::Const(Value::Rat(r)) => Expr::Const(Value::Rat(-r)),
                other => Expr::Neg(Box::new(other)),
            });
        }
        self.parse_atom()
    }

    fn parse_atom(&mut self) -> Result<Expr, GuardError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("unexpected end of guard"));
        };
        self.pos += 1;
        match tok {
            Tok::True => Ok(Expr::Const(Value::Bool(true))),
            Tok::False => Ok(Expr::Const(Value::Bool(false))),
            Tok::Str(s) => Ok(Expr::Const(Value::str(&s))),
            Tok::Ident(name, ann) => Ok(Expr::var(&name, ann.unwrap_or(Ann::Read))),
            Tok::Num(text) => {
                let value = parse_number(&text).ok_or_else(|| {
                    self.pos -= 1;
                    self.error(&format!("malformed number `{text}`"))
                })?;
                if matches!(value, Value::Int(_)) && self.peek() == Some(&Tok::Slash) {
                    if let Some(Tok::Num(d)) = self.tokens.get(self.pos + 1).map(|t| t.1.clone()) {
                        if let Some(Value::Int(denom)) = parse_number(&d) {
                            if denom != BigInt::from(0) {
                                self.pos += 2;
                                let Value::Int(numer) = value else { unreachable!() };
                                return Ok(Expr::Const(Value::Rat(BigRational::new(numer, denom))));
                            }
                        }
                    }
                    return Err(self.error("division is only supported between integer literals"));
                }
                Ok(Expr::Const(value))
            }
            Tok::LParen => {
                let inner = self.parse_or()?;
                if !self.eat(&Tok::RParen) {
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            _ => {
                self.pos -= 1;
                Err(self.error("expected an operand"))
            }
        }
    }
}

fn parse_number(text: &str) -> Option<Value> {
    if text.chars().all(|c| c.is_ascii_digit()) {
        return text.parse::<BigInt>().ok().map(Value::Int);
    }
    parse_decimal(text).map(Value::Rat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn env(pairs: &[(AnnVar, Value)]) -> BTreeMap<AnnVar, Value> {
        pairs.iter().cloned().collect()
    }

    fn eval(g: &str, pairs: &[(AnnVar, Value)]) -> Result<bool, GuardError> {
        let e = env(pairs);
        Guard::parse(g).unwrap().eval(&|v| e.get(v).cloned())
    }

    #[test]
    fn write_guard_with_constant() {
        assert_eq!(eval("x' >= 0", &[(AnnVar::write("x"), Value::int(2))]), Ok(true));
        assert_eq!(eval("x^w ≥ 0", &[(AnnVar::write("x"), Value::int(-1))]), Ok(false));
    }

    #[test]
    fn increment_guard() {
        let beta = [(AnnVar::read("y"), Value::int(0)), (AnnVar::write("y"), Value::int(1))];
        assert_eq!(eval("y' == y + 1", &beta), Ok(true));
        assert_eq!(eval("y^w = y^r + 1", &beta), Ok(true));
    }

    #[test]
    fn conjunction_of_reads() {
        let beta = [(AnnVar::read("x"), Value::int(4)), (AnnVar::read("y"), Value::int(1))];
        assert_eq!(eval("x <= 3 && y < 4", &beta), Ok(false));
        assert_eq!(eval("x <= 3 || y < 4", &beta), Ok(true));
    }

    #[test]
    fn unbound_variable_is_named() {
        assert_eq!(eval("z' > 1", &[]), Err(GuardError::Unbound("z'".into())));
    }

    #[test]
    fn strings_and_booleans() {
        let beta = [(AnnVar::write("s"), Value::str("NIL")), (AnnVar::read("b"), Value::Bool(true))];
        assert_eq!(eval("s' == \"NIL\" && b", &beta), Ok(true));
        assert_eq!(eval("s' != \"NIL\" || !b", &beta), Ok(false));
    }

    #[test]
    fn rational_literals() {
        let beta = [(AnnVar::write("r"), Value::rat(1, 3))];
        assert_eq!(eval("r' < 0.5", &beta), Ok(true));
        assert_eq!(eval("r' == 1/3", &beta), Ok(true));
        assert_eq!(eval("r' > -0.25e1", &beta), Ok(true));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match Guard::parse("x > ") {
            Err(GuardError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(Guard::parse("(x > 1"), Err(GuardError::Syntax { .. })));
        assert!(matches!(Guard::parse("x > 1 )"), Err(GuardError::Syntax { .. })));
        assert!(matches!(Guard::parse("x # 1"), Err(GuardError::Syntax { .. })));
    }

    #[test]
    fn sort_checking() {
        let sorts = |v: &str| match v {
            "x" => Some(Sort::Int),
            "r" => Some(Sort::Rat),
            "s" => Some(Sort::String),
            "b" => Some(Sort::Bool),
            _ => None,
        };
        let check = |g: &str| Guard::parse(g).unwrap().expr.check(&sorts);
        assert_eq!(check("x' > r + 1"), Ok(Sort::Bool));
        assert_eq!(check("s == \"a\" && b'"), Ok(Sort::Bool));
        assert!(matches!(check("s > \"a\""), Err(GuardError::IllSorted(_))));
        assert!(matches!(check("b + 1 > 0"), Err(GuardError::IllSorted(_))));
        assert!(matches!(check("x && b"), Err(GuardError::IllSorted(_))));
        assert_eq!(check("q > 1"), Err(GuardError::Undeclared("q".into())));
    }

    #[test]
    fn display_reparses_to_same_tree() {
        for g in [
            "x' >= 0",
            "x <= 3 && y < 4",
            "y' == y + 1",
            "!(a || b') && c",
            "r' - -2 > 1/3",
            "s' != \"x y\" || r == 2.5",
            "-(x + 1) < 0",
            "(a || b) && (c || !d)",
        ] {
            let parsed = Guard::parse(g).unwrap();
            let again = Guard::parse(&parsed.to_string()).unwrap();
            assert_eq!(parsed, again, "{g} printed as {parsed}");
        }
    }
}
