//! Small reference nets and traces used by tests, examples and the Python smoke script.

use crate::log::{Event, LogTrace};
use crate::model::{Ann, Dpn, DpnBuilder, Expr, Guard, Label, LabelPolicy, Sort, Value};

/// Transition indices of [`running_example`].
pub mod ex1 {
    pub const A: usize = 0;
    pub const B: usize = 1;
    /// Silent step out of the place after `a`.
    pub const TAU1: usize = 2;
    /// Silent step out of the place after `b`.
    pub const TAU2: usize = 3;
    pub const D: usize = 4;
}

/// Four-place net with activities `a`, `b`, `d` and a silent shortcut.
///
/// ```text
/// p0 -a[x' >= 0]-> p1 -b[y' > 0]-> p2 -τ[x <= 3 && y < 4]-> p3 <-> d[y' == y + 1]
///                   \------------τ[x <= 3 && y < 4]-------/
/// ```
///
/// The silent step can consume from either `p1` or `p2`, so it is modelled as
/// two silent transitions sharing one guard.
pub fn running_example() -> Dpn {
    let mut b = DpnBuilder::new("running-example");
    let p: Vec<usize> = (0..4).map(|i| b.place(&format!("p{i}"))).collect();
    let g = |s: &str| Guard::parse(s).expect("fixture guard");
    let a = b.transition("a", Label::activity("a"), g("x' >= 0"));
    let bb = b.transition("b", Label::activity("b"), g("y' > 0"));
    let tau1 = b.transition("tau1", Label::Silent, g("x <= 3 && y < 4"));
    let tau2 = b.transition("tau2", Label::Silent, g("x <= 3 && y < 4"));
    let d = b.transition("d", Label::activity("d"), g("y' == y + 1"));
    b.arc_in(p[0], a, 1);
    b.arc_out(a, p[1], 1);
    b.arc_in(p[1], bb, 1);
    b.arc_out(bb, p[2], 1);
    b.arc_in(p[1], tau1, 1);
    b.arc_out(tau1, p[3], 1);
    b.arc_in(p[2], tau2, 1);
    b.arc_out(tau2, p[3], 1);
    b.arc_in(p[3], d, 1);
    b.arc_out(d, p[3], 1);
    b.variable("x", Sort::Int);
    b.variable("y", Sort::Int);
    b.initial_value("x", Value::int(0));
    b.initial_value("y", Value::int(0));
    b.initial_tokens(p[0], 1);
    b.final_tokens(p[3], 1);
    b.build(LabelPolicy::SilentDuplicates).expect("running example is well formed")
}

/// `⟨a(x=x), b(y=y)⟩`
pub fn ab_trace(id: &str, x: i64, y: i64) -> LogTrace {
    LogTrace::new(id, vec![Event::ints("a", &[("x", x)]), Event::ints("b", &[("y", y)])])
}

/// The four traces used to illustrate constant-comparison clustering.
pub fn clustering_traces() -> Vec<LogTrace> {
    vec![ab_trace("e1", 2, 1), ab_trace("e2", 3, 1), ab_trace("e3", 4, 1), ab_trace("e4", 3, 2)]
}

/// Replaces every variable occurrence by its written copy.
pub fn primed(expr: &Expr) -> Expr {
    match expr {
        Expr::Var(v) => Expr::var(&v.name, Ann::Write),
        Expr::Const(c) => Expr::Const(c.clone()),
        Expr::Add(a, b) => Expr::Add(Box::new(primed(a)), Box::new(primed(b))),
        Expr::Neg(a) => Expr::Neg(Box::new(primed(a))),
        Expr::Not(a) => Expr::Not(Box::new(primed(a))),
        Expr::Cmp(op, a, b) => Expr::cmp(*op, primed(a), primed(b)),
        Expr::And(xs) => Expr::And(xs.iter().map(primed).collect()),
        Expr::Or(xs) => Expr::Or(xs.iter().map(primed).collect()),
    }
}

/// Two-place net with an unconstrained step `t_top` and a step `t_phi` whose
/// guard is `formula` over written copies of the boolean `vars`. The trace
/// `⟨t_phi⟩` aligns at cost 0 iff the formula is satisfiable.
pub fn sat_gadget(formula: &Expr, vars: &[&str]) -> Dpn {
    let mut b = DpnBuilder::new("sat-gadget");
    let p0 = b.place("p0");
    let p1 = b.place("p1");
    let top = b.transition("t_top", Label::activity("t_top"), Guard::always());
    let phi = b.transition("t_phi", Label::activity("t_phi"), Guard::new(primed(formula)));
    for t in [top, phi] {
        b.arc_in(p0, t, 1);
        b.arc_out(t, p1, 1);
    }
    for v in vars {
        b.variable(v, Sort::Bool);
        b.declare_access(phi, v, Ann::Write);
    }
    b.initial_tokens(p0, 1);
    b.final_tokens(p1, 1);
    b.build(LabelPolicy::Strict).expect("gadget is well formed")
}

/// The single-event trace `⟨(t_phi, ∅)⟩`.
pub fn gadget_trace() -> LogTrace {
    LogTrace::new("phi", vec![Event::new("t_phi", [])])
}
