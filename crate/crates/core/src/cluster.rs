//! Trace equivalence up to constant comparison, and partitioning of a
//! deduplicated log into classes that share their optimal alignment cost.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_rational::BigRational;

use crate::log::{LogTrace, UniqueTrace};
use crate::model::{CmpOp, Dpn, Expr, Value};

/// A variable-to-constant predicate `var op constant`, oriented variable first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub var: String,
    pub op: CmpOp,
    pub constant: Value,
}

impl Atom {
    pub fn new(var: &str, op: CmpOp, constant: Value) -> Atom {
        Atom { var: var.to_string(), op, constant }
    }

    /// The positive base predicate (`>`, `>=` or `=`) this atom negates or equals.
    pub fn base(&self) -> Atom {
        let op = match self.op {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Ne => CmpOp::Eq,
            op => op,
        };
        Atom { var: self.var.clone(), op, constant: self.constant.clone() }
    }

    pub fn holds(&self, value: &Value) -> bool {
        let ord = match (value.as_rational(), self.constant.as_rational()) {
            (Some(a), Some(b)) => a.cmp(&b),
            _ if self.op.is_equality() => {
                return (value == &self.constant) == (self.op == CmpOp::Eq);
            }
            _ => value.cmp(&self.constant),
        };
        self.op.holds(ord)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.var, self.op.symbol(), self.constant)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarAtoms {
    /// Every guard atom mentioning the variable compares it with a constant.
    pub restricted: bool,
    /// The atoms as they occur in guards (variable first).
    pub atoms: BTreeSet<Atom>,
}

impl VarAtoms {
    /// Normalized base atoms, over which regions are computed.
    pub fn base(&self) -> BTreeSet<Atom> {
        self.atoms.iter().map(Atom::base).collect()
    }
}

/// Per-variable comparison atoms of a net.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AtomSet {
    pub vars: BTreeMap<String, VarAtoms>,
}

impl AtomSet {
    pub fn restricted(&self, var: &str) -> bool {
        self.vars.get(var).is_some_and(|a| a.restricted)
    }

    /// `ats_v` for a restricted variable, `None` otherwise.
    pub fn atoms(&self, var: &str) -> Option<&BTreeSet<Atom>> {
        self.vars.get(var).filter(|a| a.restricted).map(|a| &a.atoms)
    }

    pub fn restricted_vars(&self) -> impl Iterator<Item = &str> {
        self.vars.iter().filter(|(_, a)| a.restricted).map(|(v, _)| v.as_str())
    }
}

fn var_and_const(lhs: &Expr, rhs: &Expr, op: CmpOp) -> Option<(String, CmpOp, Value)> {
    match (lhs, rhs) {
        (Expr::Var(v), c) => Some((v.name.clone(), op, c.const_value()?)),
        (c, Expr::Var(v)) => Some((v.name.clone(), op.flipped(), c.const_value()?)),
        _ => None,
    }
}

fn collect(expr: &Expr, found: &mut Vec<Atom>, unrestricted: &mut BTreeSet<String>) {
    match expr {
        Expr::And(xs) | Expr::Or(xs) => xs.iter().for_each(|x| collect(x, found, unrestricted)),
        Expr::Not(x) => collect(x, found, unrestricted),
        Expr::Var(v) => found.push(Atom::new(&v.name, CmpOp::Eq, Value::Bool(true))),
        Expr::Const(_) => {}
        Expr::Cmp(op, lhs, rhs) => match var_and_const(lhs, rhs, *op) {
            Some((v, op, k)) => found.push(Atom { var: v, op, constant: k }),
            None => unrestricted.extend(expr.vars().into_iter().map(|v| v.name)),
        },
        other => unrestricted.extend(other.vars().into_iter().map(|v| v.name)),
    }
}

/// Collects comparison atoms from every guard. Variables that never occur in a
/// guard are restricted with no atoms.
pub fn extract_atoms(dpn: &Dpn) -> AtomSet {
    let mut found = Vec::new();
    let mut unrestricted = BTreeSet::new();
    for t in &dpn.transitions {
        collect(&t.guard.expr, &mut found, &mut unrestricted);
    }
    let mut vars: BTreeMap<String, VarAtoms> =
        dpn.variables.iter().map(|d| (d.name.clone(), VarAtoms { restricted: true, atoms: BTreeSet::new() })).collect();
    for a in found {
        vars.entry(a.var.clone()).or_default().atoms.insert(a);
    }
    for v in unrestricted {
        vars.entry(v).or_default().restricted = false;
    }
    for entry in vars.values_mut() {
        if !entry.restricted {
            entry.atoms.clear();
        }
    }
    AtomSet { vars }
}

/// Whether two values satisfy exactly the same atoms.
pub fn value_equiv<'a>(u1: &Value, u2: &Value, ats: impl IntoIterator<Item = &'a Atom>) -> bool {
    ats.into_iter().all(|a| a.holds(u1) == a.holds(u2))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Token {
    Exact(Value),
    Region(Vec<bool>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EventSignature {
    pub activity: String,
    /// One token per defined variable, in name order.
    pub tokens: Vec<(String, Token)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceSignature(pub Vec<EventSignature>);

fn canonical(v: &Value) -> Value {
    match v.as_rational() {
        Some(r) => Value::Rat(r),
        None => v.clone(),
    }
}

/// Precomputed base atoms for fast signatures.
pub struct Signer<'a> {
    atoms: &'a AtomSet,
    base: HashMap<&'a str, Vec<Atom>>,
}

impl<'a> Signer<'a> {
    pub fn new(atoms: &'a AtomSet) -> Signer<'a> {
        let base = atoms
            .vars
            .iter()
            .filter(|(_, a)| a.restricted)
            .map(|(v, a)| (v.as_str(), a.base().into_iter().collect()))
            .collect();
        Signer { atoms, base }
    }

    pub fn sign(&self, trace: &LogTrace) -> TraceSignature {
        let events = trace.events.iter().map(|e| EventSignature {
            activity: e.activity.clone(),
            tokens: e
                .assignment
                .iter()
                .map(|(v, val)| {
                    let token = match self.base.get(v.as_str()) {
                        Some(ats) if self.atoms.restricted(v) => Token::Region(ats.iter().map(|a| a.holds(val)).collect()),
                        _ => Token::Exact(canonical(val)),
                    };
                    (v.clone(), token)
                })
                .collect(),
        });
        TraceSignature(events.collect())
    }
}

pub fn signature(trace: &LogTrace, atoms: &AtomSet) -> TraceSignature {
    Signer::new(atoms).sign(trace)
}

/// Direct check of equivalence up to constant comparison, without hashing.
pub fn traces_equivalent(a: &LogTrace, b: &LogTrace, atoms: &AtomSet) -> bool {
    a.len() == b.len()
        && a.events.iter().zip(&b.events).all(|(e1, e2)| {
            e1.activity == e2.activity
                && e1.assignment.keys().eq(e2.assignment.keys())
                && e1.assignment.iter().all(|(v, u1)| {
                    let u2 = &e2.assignment[v];
                    match atoms.atoms(v) {
                        Some(ats) => value_equiv(u1, u2, ats),
                        None => u1.sem_eq(u2),
                    }
                })
        })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    /// Index into the unique-trace list; the first member.
    pub representative: usize,
    /// Indices into the unique-trace list, in input order.
    pub members: Vec<usize>,
    /// Number of original traces covered.
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Clustering {
    pub clusters: Vec<Cluster>,
}

impl Clustering {
    /// One cluster per unique trace.
    pub fn singletons(unique: &[UniqueTrace]) -> Clustering {
        let clusters = unique
            .iter()
            .enumerate()
            .map(|(i, u)| Cluster { representative: i, members: vec![i], multiplicity: u.count() })
            .collect();
        Clustering { clusters }
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

/// Partitions the unique traces by signature; representatives are the first
/// trace of each class in input order.
pub fn cluster_log(unique: &[UniqueTrace], atoms: &AtomSet) -> Clustering {
    let signer = Signer::new(atoms);
    let mut index: HashMap<TraceSignature, usize> = HashMap::new();
    let mut clusters: Vec<Cluster> = Vec::new();
    for (i, u) in unique.iter().enumerate() {
        let sig = signer.sign(&u.trace);
        match index.get(&sig) {
            Some(&c) => {
                clusters[c].members.push(i);
                clusters[c].multiplicity += u.count();
            }
            None => {
                index.insert(sig, clusters.len());
                clusters.push(Cluster { representative: i, members: vec![i], multiplicity: u.count() });
            }
        }
    }
    Clustering { clusters }
}

/// Sorted distinct constants of the atoms over `var`.
pub fn constants(atoms: &AtomSet, var: &str) -> Vec<Value> {
    let mut ks: Vec<Value> = atoms.vars.get(var).map_or_else(Vec::new, |a| a.atoms.iter().map(|a| a.constant.clone()).collect());
    ks.sort_by(|a, b| match (a.as_rational(), b.as_rational()) {
        (Some(x), Some(y)) => x.cmp(&y),
        _ => a.cmp(b),
    });
    ks.dedup_by(|a, b| a.sem_eq(b));
    ks
}

/// One numeric value per region of the restricted variable's atoms: each
/// constant, plus a point below, between and above them.
pub fn region_witnesses(atoms: &AtomSet, var: &str) -> Vec<BigRational> {
    let ks: Vec<BigRational> = constants(atoms, var).iter().filter_map(Value::as_rational).collect();
    let Some(first) = ks.first() else {
        return vec![BigRational::from_integer(0.into())];
    };
    let one = BigRational::from_integer(1.into());
    let two = BigRational::from_integer(2.into());
    let mut out = vec![first - &one];
    for w in ks.windows(2) {
        out.push(w[0].clone());
        out.push((&w[0] + &w[1]) / &two);
    }
    out.push(ks.last().unwrap().clone());
    out.push(ks.last().unwrap() + &one);
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    out
}
