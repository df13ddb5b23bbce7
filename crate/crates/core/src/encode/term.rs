//! Quantifier-free linear arithmetic terms, printed as SMT-LIB 2 and
//! evaluable locally under a valuation.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::model::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SmtSort {
    Bool,
    Int,
    Real,
}

impl SmtSort {
    pub fn name(self) -> &'static str {
        match self {
            SmtSort::Bool => "Bool",
            SmtSort::Int => "Int",
            SmtSort::Real => "Real",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rel {
    Eq,
    Le,
    Lt,
    Ge,
    Gt,
}

impl Rel {
    fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Le => "<=",
            Rel::Lt => "<",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Bool(bool),
    Int(BigInt),
    Real(BigRational),
    ToReal(Box<Term>),
    Add(Vec<Term>),
    Neg(Box<Term>),
    Cmp(Rel, Box<Term>, Box<Term>),
    Not(Box<Term>),
    And(Vec<Term>),
    Or(Vec<Term>),
    Implies(Box<Term>, Box<Term>),
    Ite(Box<Term>, Box<Term>, Box<Term>),
}

pub fn var(name: &str) -> Term {
    Term::Var(name.to_string())
}

pub fn int(k: i64) -> Term {
    Term::Int(BigInt::from(k))
}

pub fn cmp(rel: Rel, a: Term, b: Term) -> Term {
    Term::Cmp(rel, Box::new(a), Box::new(b))
}

pub fn eq(a: Term, b: Term) -> Term {
    cmp(Rel::Eq, a, b)
}

pub fn ge(a: Term, b: Term) -> Term {
    cmp(Rel::Ge, a, b)
}

pub fn le(a: Term, b: Term) -> Term {
    cmp(Rel::Le, a, b)
}

pub fn not(a: Term) -> Term {
    match a {
        Term::Bool(b) => Term::Bool(!b),
        Term::Not(inner) => *inner,
        other => Term::Not(Box::new(other)),
    }
}

/// Conjunction with trivial operands folded away.
pub fn and(xs: impl IntoIterator<Item = Term>) -> Term {
    let mut out = Vec::new();
    for x in xs {
        match x {
            Term::Bool(true) => {}
            Term::Bool(false) => return Term::Bool(false),
            Term::And(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    match out.len() {
        0 => Term::Bool(true),
        1 => out.pop().unwrap(),
        _ => Term::And(out),
    }
}

/// Disjunction with trivial operands folded away.
pub fn or(xs: impl IntoIterator<Item = Term>) -> Term {
    let mut out = Vec::new();
    for x in xs {
        match x {
            Term::Bool(false) => {}
            Term::Bool(true) => return Term::Bool(true),
            Term::Or(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    match out.len() {
        0 => Term::Bool(false),
        1 => out.pop().unwrap(),
        _ => Term::Or(out),
    }
}

pub fn implies(a: Term, b: Term) -> Term {
    match (&a, &b) {
        (_, Term::Bool(true)) | (Term::Bool(false), _) => Term::Bool(true),
        (Term::Bool(true), _) => b,
        _ => Term::Implies(Box::new(a), Box::new(b)),
    }
}

pub fn ite(c: Term, t: Term, e: Term) -> Term {
    if t == e {
        return t;
    }
    match c {
        Term::Bool(true) => t,
        Term::Bool(false) => e,
        c => Term::Ite(Box::new(c), Box::new(t), Box::new(e)),
    }
}

/// Sum with integer constants folded together.
pub fn add(xs: impl IntoIterator<Item = Term>) -> Term {
    let mut constant = BigInt::zero();
    let mut out = Vec::new();
    for x in xs {
        match x {
            Term::Int(k) => constant += k,
            Term::Add(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    if !constant.is_zero() || out.is_empty() {
        out.push(Term::Int(constant));
    }
    match out.len() {
        1 => out.pop().unwrap(),
        _ => Term::Add(out),
    }
}

impl Term {
    pub fn is_const(&self) -> bool {
        matches!(self, Term::Bool(_) | Term::Int(_) | Term::Real(_))
    }

    /// Evaluates the term; `None` if a variable is unbound or sorts clash.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<Value>) -> Option<Value> {
        Some(match self {
            Term::Var(name) => env(name)?,
            Term::Bool(b) => Value::Bool(*b),
            Term::Int(k) => Value::Int(k.clone()),
            Term::Real(r) => Value::Rat(r.clone()),
            Term::ToReal(a) => Value::Rat(a.eval(env)?.as_rational()?),
            Term::Add(xs) => {
                let mut all_int = true;
                let mut acc = BigRational::zero();
                for x in xs {
                    let v = x.eval(env)?;
                    all_int &= matches!(v, Value::Int(_));
                    acc += v.as_rational()?;
                }
                if all_int {
                    Value::Int(acc.to_integer())
                } else {
                    Value::Rat(acc)
                }
            }
            Term::Neg(a) => match a.eval(env)? {
                Value::Int(k) => Value::Int(-k),
                Value::Rat(r) => Value::Rat(-r),
                _ => return None,
            },
            Term::Cmp(rel, a, b) => {
                let (va, vb) = (a.eval(env)?, b.eval(env)?);
                let ord = match (va.as_rational(), vb.as_rational()) {
                    (Some(x), Some(y)) => x.cmp(&y),
                    _ if *rel == Rel::Eq => return Some(Value::Bool(va == vb)),
                    _ => return None,
                };
                Value::Bool(match rel {
                    Rel::Eq => ord.is_eq(),
                    Rel::Le => ord.is_le(),
                    Rel::Lt => ord.is_lt(),
                    Rel::Ge => ord.is_ge(),
                    Rel::Gt => ord.is_gt(),
                })
            }
            Term::Not(a) => Value::Bool(!a.eval_bool(env)?),
            Term::And(xs) => {
                let mut acc = true;
                for x in xs {
                    acc &= x.eval_bool(env)?;
                }
                Value::Bool(acc)
            }
            Term::Or(xs) => {
                let mut acc = false;
                for x in xs {
                    acc |= x.eval_bool(env)?;
                }
                Value::Bool(acc)
            }
            Term::Implies(a, b) => Value::Bool(!a.eval_bool(env)? || b.eval_bool(env)?),
            Term::Ite(c, t, e) => {
                if c.eval_bool(env)? {
                    t.eval(env)?
                } else {
                    e.eval(env)?
                }
            }
        })
    }

    pub fn eval_bool(&self, env: &dyn Fn(&str) -> Option<Value>) -> Option<bool> {
        match self.eval(env)? {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, op: &str, xs: &[Term]) -> fmt::Result {
    write!(f, "({op}")?;
    for x in xs {
        write!(f, " {x}")?;
    }
    f.write_str(")")
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(name) => f.write_str(name),
            Term::Bool(b) => write!(f, "{b}"),
            Term::Int(k) if k.is_negative() => write!(f, "(- {})", -k),
            Term::Int(k) => write!(f, "{k}"),
            Term::Real(r) => {
                let (n, d) = (r.numer().abs(), r.denom());
                let body = if r.is_integer() { format!("{n}.0") } else { format!("(/ {n}.0 {d}.0)") };
                if r.is_negative() {
                    write!(f, "(- {body})")
                } else {
                    f.write_str(&body)
                }
            }
            Term::ToReal(a) => write!(f, "(to_real {a})"),
            Term::Add(xs) => write_list(f, "+", xs),
            Term::Neg(a) => write!(f, "(- {a})"),
            Term::Cmp(rel, a, b) => write!(f, "({} {a} {b})", rel.symbol()),
            Term::Not(a) => write!(f, "(not {a})"),
            Term::And(xs) => write_list(f, "and", xs),
            Term::Or(xs) => write_list(f, "or", xs),
            Term::Implies(a, b) => write!(f, "(=> {a} {b})"),
            Term::Ite(c, t, e) => write!(f, "(ite {c} {t} {e})"),
        }
    }
}
