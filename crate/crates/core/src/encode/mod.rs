//! Symbolic encoding of the optimal-alignment problem for one trace and a
//! bound `n` on the number of model steps.
//!
//! Step variable `S_i` ranges over `0..=|T|`, where `k ≥ 1` selects the
//! `k`-th transition and `0` is an idle padding step that keeps marking and
//! data unchanged. Idle steps may only form a suffix, so every model of the
//! constraints describes a run of length at most `n`.

pub mod term;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::cost::PenaltyFunctions;
use crate::log::LogTrace;
use crate::model::{
    reachable_transition_sets, shortest_final_distance, Ann, CmpOp, Dpn, Expr, ModelError, Sort, Value,
};
use term::{add, and, eq, ge, implies, int, ite, le, not, or, var, Rel, SmtSort, Term};

/// The four encoding refinements; all are on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EncodeOptions {
    /// Restrict step ranges to control-flow reachable transitions and reuse
    /// data variables across steps that cannot write them.
    pub reachability: bool,
    /// Boolean marking variables for nets that stay 1-bounded.
    pub boolean_markings: bool,
    /// Lower-bound disjunctions instead of exact minima for inner distance cells.
    pub delta_inequalities: bool,
    /// Auxiliary variables for per-step and per-cell penalty terms.
    pub aux_variables: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions { reachability: true, boolean_markings: true, delta_inequalities: true, aux_variables: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Optimization {
    Reachability,
    BooleanMarkings,
    DeltaInequalities,
    AuxVariables,
}

impl Optimization {
    pub const ALL: [Optimization; 4] = [
        Optimization::Reachability,
        Optimization::BooleanMarkings,
        Optimization::DeltaInequalities,
        Optimization::AuxVariables,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Optimization::Reachability => "reach",
            Optimization::BooleanMarkings => "bool-marking",
            Optimization::DeltaInequalities => "delta-ineq",
            Optimization::AuxVariables => "aux",
        }
    }
}

impl FromStr for Optimization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Optimization::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| format!("unknown optimization `{s}` (expected reach, bool-marking, delta-ineq or aux)"))
    }
}

impl EncodeOptions {
    pub fn none() -> EncodeOptions {
        EncodeOptions { reachability: false, boolean_markings: false, delta_inequalities: false, aux_variables: false }
    }

    pub fn without(mut self, opt: Optimization) -> EncodeOptions {
        *self.flag(opt) = false;
        self
    }

    pub fn flag(&mut self, opt: Optimization) -> &mut bool {
        match opt {
            Optimization::Reachability => &mut self.reachability,
            Optimization::BooleanMarkings => &mut self.boolean_markings,
            Optimization::DeltaInequalities => &mut self.delta_inequalities,
            Optimization::AuxVariables => &mut self.aux_variables,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Role {
    Step(usize),
    Marking(usize, usize),
    Data(usize, String),
    Distance(usize, usize),
    Aux,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymVar {
    pub name: String,
    pub sort: SmtSort,
    pub role: Role,
}

/// Constraint families, used for bookkeeping and size checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    Init,
    Final,
    Trans,
    Padding,
    Enabled,
    Mark,
    Data,
    Delta,
    Aux,
}

/// Dense integer codes for string values, assigned in sorted order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StringTable {
    strings: Vec<Arc<str>>,
    codes: HashMap<Arc<str>, i64>,
}

impl StringTable {
    pub fn new(strings: impl IntoIterator<Item = Arc<str>>) -> StringTable {
        let sorted: BTreeSet<Arc<str>> = strings.into_iter().collect();
        let strings: Vec<Arc<str>> = sorted.into_iter().collect();
        let codes = strings.iter().enumerate().map(|(i, s)| (s.clone(), i as i64)).collect();
        StringTable { strings, codes }
    }

    pub fn code(&self, s: &str) -> Option<i64> {
        self.codes.get(s).copied()
    }

    /// Codes outside the table stand for strings distinct from every known one.
    pub fn decode(&self, code: &BigInt) -> Value {
        match code.to_usize().and_then(|i| self.strings.get(i)) {
            Some(s) => Value::Str(s.clone()),
            None => Value::str(&format!("<fresh#{code}>")),
        }
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("transition `{transition}`: {reason}")]
    UnsupportedGuard { transition: String, reason: String },
    #[error("initial value of `{0}` does not fit its sort")]
    InitialValue(String),
}

/// The constraint system for one trace and bound, with handles to the
/// variables needed for decoding.
#[derive(Debug, Clone)]
pub struct EncodingArtifact {
    pub vars: Vec<SymVar>,
    pub assertions: Vec<(Group, Term)>,
    /// Name of `δ_{m,n}`.
    pub objective: String,
    /// Finite stand-in for an infinite penalty.
    pub big_m: u64,
    pub n: usize,
    pub m: usize,
    /// `steps[i-1]` is `S_i`.
    pub steps: Vec<String>,
    /// Transitions step `i` may take (`candidates[i-1]`, 0-based indices).
    pub candidates: Vec<Vec<usize>>,
    /// `markings[i][p]` is `M_{i,p}`.
    pub markings: Vec<Vec<String>>,
    pub boolean_markings: bool,
    /// `data[i][v]` is the symbol holding `v` at instant `i`; frozen steps
    /// share the symbol of the previous instant.
    pub data: Vec<BTreeMap<String, String>>,
    /// `delta[i][j]` is `δ_{i,j}`.
    pub delta: Vec<Vec<String>>,
    pub strings: StringTable,
    pub options: EncodeOptions,
    pub logic: &'static str,
    sorts: HashMap<String, SmtSort>,
}

impl EncodingArtifact {
    pub fn sort_of(&self, name: &str) -> Option<SmtSort> {
        self.sorts.get(name).copied()
    }

    pub fn count(&self, group: Group) -> usize {
        self.assertions.iter().filter(|(g, _)| *g == group).count()
    }

    /// Symbols whose values the decoder needs.
    pub fn decode_vars(&self) -> Vec<String> {
        let mut out: Vec<String> = self.steps.clone();
        let mut seen = BTreeSet::new();
        for row in &self.data {
            for sym in row.values() {
                if seen.insert(sym.clone()) {
                    out.push(sym.clone());
                }
            }
        }
        if self.options.delta_inequalities {
            out.push(self.objective.clone());
        } else {
            out.extend(self.delta.iter().flatten().cloned());
        }
        out
    }

    /// Converts a solver value for symbol `X_{i,v}` back to a process value.
    pub fn decode_value(&self, sort: Sort, raw: &Value) -> Option<Value> {
        match (sort, raw) {
            (Sort::String, Value::Int(code)) => Some(self.strings.decode(code)),
            (Sort::String, _) => None,
            (s, v) => v.coerce(s),
        }
    }

    /// Declarations and assertions as an SMT-LIB 2 script body.
    pub fn to_smtlib(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "(set-logic {})", self.logic);
        for v in &self.vars {
            let _ = writeln!(out, "(declare-fun {} () {})", v.name, v.sort.name());
        }
        for (_, a) in &self.assertions {
            let _ = writeln!(out, "(assert {a})");
        }
        out
    }

    /// Stand-alone script for offline debugging.
    pub fn to_script(&self) -> String {
        let mut out = String::from("(set-option :produce-models true)\n");
        out.push_str(&self.to_smtlib());
        let _ = writeln!(out, "(check-sat)\n(get-value ({}))", self.objective);
        out
    }

    /// Index of the first assertion that is false (or not evaluable) under `env`.
    pub fn first_violation(&self, env: &dyn Fn(&str) -> Option<Value>) -> Option<usize> {
        self.assertions.iter().position(|(_, a)| a.eval_bool(env) != Some(true))
    }
}

/// Number of model steps to encode: the override if given, otherwise the
/// trace length plus the shortest control-flow distance to the final marking.
pub fn compute_bound(dpn: &Dpn, trace: &LogTrace, override_: Option<usize>) -> Result<usize, ModelError> {
    match override_ {
        Some(n) => Ok(n),
        None => Ok(trace.len() + shortest_final_distance(dpn)?),
    }
}

fn smt_sort(sort: Sort) -> SmtSort {
    match sort {
        Sort::Bool => SmtSort::Bool,
        Sort::Int | Sort::String => SmtSort::Int,
        Sort::Rat => SmtSort::Real,
    }
}

struct Builder {
    vars: Vec<SymVar>,
    sorts: HashMap<String, SmtSort>,
    assertions: Vec<(Group, Term)>,
}

impl Builder {
    fn declare(&mut self, name: String, sort: SmtSort, role: Role) -> String {
        self.sorts.insert(name.clone(), sort);
        self.vars.push(SymVar { name: name.clone(), sort, role });
        name
    }

    fn assert(&mut self, group: Group, t: Term) {
        self.assertions.push((group, t));
    }
}

fn value_term(strings: &StringTable, v: &Value) -> Term {
    match v {
        Value::Bool(b) => Term::Bool(*b),
        Value::Int(k) => Term::Int(k.clone()),
        Value::Rat(r) => Term::Real(r.clone()),
        Value::Str(s) => int(strings.code(s).expect("string interned before encoding")),
    }
}

fn to_real(t: Term, sort: Sort) -> Term {
    if sort == Sort::Int {
        match t {
            Term::Int(k) => Term::Real(num_rational::BigRational::from_integer(k)),
            t => Term::ToReal(Box::new(t)),
        }
    } else {
        t
    }
}

fn collect_strings(expr: &Expr, out: &mut Vec<Arc<str>>) {
    match expr {
        Expr::Const(Value::Str(s)) => out.push(s.clone()),
        Expr::Const(_) | Expr::Var(_) => {}
        Expr::Add(a, b) | Expr::Cmp(_, a, b) => {
            collect_strings(a, out);
            collect_strings(b, out);
        }
        Expr::Neg(a) | Expr::Not(a) => collect_strings(a, out),
        Expr::And(xs) | Expr::Or(xs) => xs.iter().for_each(|x| collect_strings(x, out)),
    }
}

/// Guard translation with `v` ↦ `pre[v]` and `v'` ↦ `post[v]`.
struct Chi<'a> {
    dpn: &'a Dpn,
    strings: &'a StringTable,
    pre: &'a BTreeMap<String, String>,
    post: &'a BTreeMap<String, String>,
}

impl Chi<'_> {
    fn term(&self, e: &Expr) -> Result<(Term, Sort), String> {
        Ok(match e {
            Expr::Var(av) => {
                let sort = self.dpn.sort_of(&av.name).ok_or_else(|| format!("undeclared `{}`", av.name))?;
                let table = if av.ann == Ann::Read { self.pre } else { self.post };
                (var(&table[&av.name]), sort)
            }
            Expr::Const(c) => (value_term(self.strings, c), c.sort()),
            Expr::Add(a, b) => {
                let ((ta, sa), (tb, sb)) = (self.term(a)?, self.term(b)?);
                if sa == Sort::Int && sb == Sort::Int {
                    (Term::Add(vec![ta, tb]), Sort::Int)
                } else {
                    (Term::Add(vec![to_real(ta, sa), to_real(tb, sb)]), Sort::Rat)
                }
            }
            Expr::Neg(a) => {
                let (ta, sa) = self.term(a)?;
                (Term::Neg(Box::new(ta)), sa)
            }
            Expr::Cmp(op, a, b) => {
                let ((mut ta, sa), (mut tb, sb)) = (self.term(a)?, self.term(b)?);
                if sa.is_numeric() && sb.is_numeric() && sa != sb {
                    ta = to_real(ta, sa);
                    tb = to_real(tb, sb);
                } else if sa != sb {
                    return Err(format!("`{}` between {sa} and {sb}", op.symbol()));
                } else if !sa.is_numeric() && !op.is_equality() {
                    return Err(format!("`{}` on {sa}", op.symbol()));
                }
                let t = match op {
                    CmpOp::Eq => term::cmp(Rel::Eq, ta, tb),
                    CmpOp::Ne => not(term::cmp(Rel::Eq, ta, tb)),
                    CmpOp::Ge => term::cmp(Rel::Ge, ta, tb),
                    CmpOp::Gt => term::cmp(Rel::Gt, ta, tb),
                    CmpOp::Le => term::cmp(Rel::Le, ta, tb),
                    CmpOp::Lt => term::cmp(Rel::Lt, ta, tb),
                };
                (t, Sort::Bool)
            }
            Expr::Not(a) => (not(self.term(a)?.0), Sort::Bool),
            Expr::And(xs) => (and(xs.iter().map(|x| self.term(x).map(|t| t.0)).collect::<Result<Vec<_>, _>>()?), Sort::Bool),
            Expr::Or(xs) => (or(xs.iter().map(|x| self.term(x).map(|t| t.0)).collect::<Result<Vec<_>, _>>()?), Sort::Bool),
        })
    }
}

/// Builds the constraint system for aligning `trace` with runs of at most `n` steps.
pub fn encode(
    dpn: &Dpn,
    trace: &LogTrace,
    n: usize,
    pf: PenaltyFunctions,
    opts: EncodeOptions,
) -> Result<EncodingArtifact, EncodeError> {
    let m = trace.len();
    let nt = dpn.transitions.len();
    let reach = (opts.reachability || opts.boolean_markings).then(|| reachable_transition_sets(dpn, n));
    let candidates: Vec<Vec<usize>> = match &reach {
        Some(r) if opts.reachability => r.steps.iter().map(|s| s.iter().copied().collect()).collect(),
        _ => vec![(0..nt).collect(); n],
    };
    let boolean_markings = opts.boolean_markings && reach.as_ref().is_some_and(|r| r.one_bounded);

    let mut strings = Vec::new();
    for t in &dpn.transitions {
        collect_strings(&t.guard.expr, &mut strings);
    }
    for v in dpn.initial_assignment.values().chain(trace.events.iter().flat_map(|e| e.assignment.values())) {
        if let Value::Str(s) = v {
            strings.push(s.clone());
        }
    }
    let strings = StringTable::new(strings);

    let mut b = Builder { vars: Vec::new(), sorts: HashMap::new(), assertions: Vec::new() };

    // variables
    let steps: Vec<String> =
        (1..=n).map(|i| b.declare(format!("S_{i}"), SmtSort::Int, Role::Step(i))).collect();
    let mark_sort = if boolean_markings { SmtSort::Bool } else { SmtSort::Int };
    let markings: Vec<Vec<String>> = (0..=n)
        .map(|i| {
            (0..dpn.places.len())
                .map(|p| b.declare(format!("M_{i}_{p}"), mark_sort, Role::Marking(i, p)))
                .collect()
        })
        .collect();
    let mut data: Vec<BTreeMap<String, String>> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut row = BTreeMap::new();
        for (k, decl) in dpn.variables.iter().enumerate() {
            let frozen = i > 0
                && opts.reachability
                && !candidates[i - 1].iter().any(|&t| dpn.transitions[t].writes().contains(&decl.name));
            let sym = if frozen {
                data[i - 1][&decl.name].clone()
            } else {
                b.declare(format!("X_{i}_{k}"), smt_sort(decl.sort), Role::Data(i, decl.name.clone()))
            };
            row.insert(decl.name.clone(), sym);
        }
        data.push(row);
    }
    let delta: Vec<Vec<String>> = (0..=m)
        .map(|i| (0..=n).map(|j| b.declare(format!("d_{i}_{j}"), SmtSort::Int, Role::Distance(i, j))).collect())
        .collect();

    let tokens = |i: usize, p: usize, k: u64| -> Term {
        if boolean_markings {
            match k {
                0 => not(var(&markings[i][p])),
                1 => var(&markings[i][p]),
                _ => Term::Bool(false),
            }
        } else {
            eq(var(&markings[i][p]), int(k as i64))
        }
    };

    // φ_init, φ_final
    for p in 0..dpn.places.len() {
        b.assert(Group::Init, tokens(0, p, dpn.initial_marking.0[p]));
    }
    for decl in &dpn.variables {
        let v0 = dpn.initial_assignment[&decl.name]
            .coerce(decl.sort)
            .ok_or_else(|| EncodeError::InitialValue(decl.name.clone()))?;
        b.assert(Group::Init, eq(var(&data[0][&decl.name]), value_term(&strings, &v0)));
    }
    for p in 0..dpn.places.len() {
        b.assert(Group::Final, tokens(n, p, dpn.final_marking.0[p]));
    }

    let step_is = |i: usize, t: usize| eq(var(&steps[i - 1]), int(t as i64 + 1));
    let idle = |i: usize| eq(var(&steps[i - 1]), int(0));

    // φ_trans and idle padding
    for i in 1..=n {
        let range = if opts.reachability {
            or(std::iter::once(idle(i)).chain(candidates[i - 1].iter().map(|&t| step_is(i, t))))
        } else {
            and([ge(var(&steps[i - 1]), int(0)), le(var(&steps[i - 1]), int(nt as i64))])
        };
        b.assert(Group::Trans, range);
    }
    for i in 1..n {
        b.assert(Group::Padding, implies(idle(i), idle(i + 1)));
    }
    for i in 1..=n {
        let mut frame = Vec::new();
        for p in 0..dpn.places.len() {
            frame.push(eq(var(&markings[i][p]), var(&markings[i - 1][p])));
        }
        for decl in &dpn.variables {
            let (before, after) = (&data[i - 1][&decl.name], &data[i][&decl.name]);
            if before != after {
                frame.push(eq(var(after), var(before)));
            }
        }
        b.assert(Group::Padding, implies(idle(i), and(frame)));
    }

    // φ_enabled, φ_mark, φ_data
    for i in 1..=n {
        for &t in &candidates[i - 1] {
            let tr = &dpn.transitions[t];
            if !tr.pre.is_empty() {
                let need = tr.pre.iter().map(|&(p, w)| {
                    if boolean_markings {
                        if w == 1 { var(&markings[i - 1][p]) } else { Term::Bool(false) }
                    } else {
                        ge(var(&markings[i - 1][p]), int(w as i64))
                    }
                });
                b.assert(Group::Enabled, implies(step_is(i, t), and(need.collect::<Vec<_>>())));
            }
            let effect = (0..dpn.places.len()).map(|p| {
                let change = tr.post_weight(p) as i64 - tr.pre_weight(p) as i64;
                let (now, before) = (&markings[i][p], &markings[i - 1][p]);
                if boolean_markings {
                    match change {
                        0 => eq(var(now), var(before)),
                        1 => and([var(now), not(var(before))]),
                        -1 => and([not(var(now)), var(before)]),
                        _ => Term::Bool(false),
                    }
                } else {
                    eq(var(now), add([var(before), int(change)]))
                }
            });
            b.assert(Group::Mark, implies(step_is(i, t), and(effect.collect::<Vec<_>>())));

            let chi = Chi { dpn, strings: &strings, pre: &data[i - 1], post: &data[i] };
            let (guard, _) = chi
                .term(&tr.guard.expr)
                .map_err(|reason| EncodeError::UnsupportedGuard { transition: tr.id.clone(), reason })?;
            let mut body = vec![guard];
            for decl in &dpn.variables {
                let (before, after) = (&data[i - 1][&decl.name], &data[i][&decl.name]);
                if !tr.writes().contains(&decl.name) && before != after {
                    body.push(eq(var(after), var(before)));
                }
            }
            b.assert(Group::Data, implies(step_is(i, t), and(body)));
        }
    }

    // φ_δ
    let pl: Vec<u64> = trace.events.iter().map(|e| pf.log_move(e)).collect();
    let max_pm = (0..nt).map(|t| pf.model_move_of(dpn, t)).max().unwrap_or(0);
    let big_m = 1 + pl.iter().sum::<u64>() + n as u64 * max_pm;

    let mut pm: Vec<Term> = vec![int(0)];
    for j in 1..=n {
        let mut by_cost: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for &t in &candidates[j - 1] {
            by_cost.entry(pf.model_move_of(dpn, t)).or_default().push(t);
        }
        let mut expr = int(0);
        for (&c, ts) in by_cost.iter().rev() {
            if c > 0 {
                expr = ite(or(ts.iter().map(|&t| step_is(j, t))), int(c as i64), expr);
            }
        }
        if opts.aux_variables && !expr.is_const() {
            let name = b.declare(format!("pm_{j}"), SmtSort::Int, Role::Aux);
            b.assert(Group::Aux, eq(var(&name), expr));
            expr = var(&name);
        }
        pm.push(expr);
    }

    let sync_term = |i: usize, j: usize| -> Term {
        let event = &trace.events[i - 1];
        let Some(t) = candidates[j - 1].iter().copied().find(|&t| dpn.transitions[t].label.matches(&event.activity))
        else {
            return int(big_m as i64);
        };
        let penalty = match pf {
            PenaltyFunctions::Levenshtein => int(0),
            PenaltyFunctions::Standard => {
                let writes = dpn.transitions[t].writes();
                add(event.assignment.iter().map(|(v, value)| {
                    let expected = dpn.sort_of(v).and_then(|s| value.coerce(s));
                    match expected {
                        Some(val) if writes.contains(v) => {
                            ite(eq(var(&data[j][v]), value_term(&strings, &val)), int(0), int(1))
                        }
                        _ => int(1),
                    }
                }))
            }
        };
        ite(step_is(j, t), penalty, int(big_m as i64))
    };

    let d = |i: usize, j: usize| var(&delta[i][j]);
    b.assert(Group::Delta, eq(d(0, 0), int(0)));
    for i in 1..=m {
        b.assert(Group::Delta, eq(d(i, 0), add([d(i - 1, 0), int(pl[i - 1] as i64)])));
    }
    for j in 1..=n {
        b.assert(Group::Delta, eq(d(0, j), add([d(0, j - 1), pm[j].clone()])));
    }
    for i in 1..=m {
        for j in 1..=n {
            let mut ps = sync_term(i, j);
            if opts.aux_variables && !ps.is_const() {
                let name = b.declare(format!("ps_{i}_{j}"), SmtSort::Int, Role::Aux);
                b.assert(Group::Aux, eq(var(&name), ps));
                ps = var(&name);
            }
            let e1 = add([ps, d(i - 1, j - 1)]);
            let e2 = add([d(i - 1, j), int(pl[i - 1] as i64)]);
            let e3 = add([d(i, j - 1), pm[j].clone()]);
            let cell = if opts.delta_inequalities {
                or([ge(d(i, j), e1), ge(d(i, j), e2), ge(d(i, j), e3)])
            } else {
                eq(d(i, j), min3(e1, e2, e3))
            };
            b.assert(Group::Delta, cell);
        }
    }

    let logic = if b.vars.iter().any(|v| v.sort == SmtSort::Real) { "QF_LIRA" } else { "QF_LIA" };
    Ok(EncodingArtifact {
        objective: delta[m][n].clone(),
        vars: b.vars,
        assertions: b.assertions,
        big_m,
        n,
        m,
        steps,
        candidates,
        markings,
        boolean_markings,
        data,
        delta,
        strings,
        options: opts,
        logic,
        sorts: b.sorts,
    })
}

fn min3(a: Term, b: Term, c: Term) -> Term {
    let ab = ite(le(a.clone(), b.clone()), a, b);
    ite(le(ab.clone(), c.clone()), ab, c)
}
