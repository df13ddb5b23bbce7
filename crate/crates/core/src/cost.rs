//! Distance-based alignment costs: penalty profiles, the edit-distance matrix
//! and alignment reconstruction from it.

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::log::{Event, LogTrace};
use crate::model::{Dpn, Firing, ProcessRun};

/// A natural number or +∞. Addition saturates at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CostValue {
    Finite(u64),
    Infinite,
}

impl CostValue {
    pub const ZERO: CostValue = CostValue::Finite(0);

    pub fn finite(self) -> Option<u64> {
        match self {
            CostValue::Finite(c) => Some(c),
            CostValue::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == CostValue::Infinite
    }
}

impl Add for CostValue {
    type Output = CostValue;

    fn add(self, rhs: CostValue) -> CostValue {
        match (self, rhs) {
            (CostValue::Finite(a), CostValue::Finite(b)) => CostValue::Finite(a.saturating_add(b)),
            _ => CostValue::Infinite,
        }
    }
}

impl From<u64> for CostValue {
    fn from(c: u64) -> Self {
        CostValue::Finite(c)
    }
}

impl fmt::Display for CostValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostValue::Finite(c) => write!(f, "{c}"),
            CostValue::Infinite => f.write_str("inf"),
        }
    }
}

/// Built-in penalty functions `(P_L, P_M, P_=)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyFunctions {
    /// Log moves cost 1, visible model moves `1 + |write(t)|`, silent ones 0;
    /// synchronous moves count the event variables whose written value differs.
    #[default]
    Standard,
    /// Plain edit distance on activity labels.
    Levenshtein,
}

pub fn standard_profile() -> PenaltyFunctions {
    PenaltyFunctions::Standard
}

pub fn levenshtein_profile() -> PenaltyFunctions {
    PenaltyFunctions::Levenshtein
}

impl PenaltyFunctions {
    /// Penalties depend on values only through label equality and equality of
    /// event values with written values.
    pub fn comparison_based(self) -> bool {
        true
    }

    pub fn name(self) -> &'static str {
        match self {
            PenaltyFunctions::Standard => "standard",
            PenaltyFunctions::Levenshtein => "levenshtein",
        }
    }

    pub fn log_move(self, _event: &Event) -> u64 {
        1
    }

    /// Model-move penalty of transition `t`; it does not depend on β.
    pub fn model_move_of(self, dpn: &Dpn, t: usize) -> u64 {
        let tr = &dpn.transitions[t];
        match self {
            PenaltyFunctions::Standard if tr.label.is_silent() => 0,
            PenaltyFunctions::Standard => tr.writes().len() as u64 + 1,
            PenaltyFunctions::Levenshtein => 1,
        }
    }

    pub fn model_move(self, dpn: &Dpn, firing: &Firing) -> u64 {
        self.model_move_of(dpn, firing.transition)
    }

    pub fn sync_move(self, dpn: &Dpn, event: &Event, firing: &Firing) -> CostValue {
        let tr = &dpn.transitions[firing.transition];
        if !tr.label.matches(&event.activity) {
            return CostValue::Infinite;
        }
        match self {
            PenaltyFunctions::Levenshtein => CostValue::ZERO,
            PenaltyFunctions::Standard => {
                let mismatched = event
                    .assignment
                    .iter()
                    .filter(|(v, value)| !firing.written(v).is_some_and(|w| w.sem_eq(value)))
                    .count();
                CostValue::Finite(mismatched as u64)
            }
        }
    }
}

impl FromStr for PenaltyFunctions {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(PenaltyFunctions::Standard),
            "levenshtein" => Ok(PenaltyFunctions::Levenshtein),
            other => Err(format!("unknown cost profile `{other}`")),
        }
    }
}

impl fmt::Display for PenaltyFunctions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Move {
    Log { event: Event },
    Model { firing: Firing },
    Sync { event: Event, firing: Firing },
}

impl Move {
    pub fn kind(&self) -> &'static str {
        match self {
            Move::Log { .. } => "log",
            Move::Model { .. } => "model",
            Move::Sync { .. } => "sync",
        }
    }

    pub fn event(&self) -> Option<&Event> {
        match self {
            Move::Log { event } | Move::Sync { event, .. } => Some(event),
            Move::Model { .. } => None,
        }
    }

    pub fn firing(&self) -> Option<&Firing> {
        match self {
            Move::Model { firing } | Move::Sync { firing, .. } => Some(firing),
            Move::Log { .. } => None,
        }
    }

    pub fn cost(&self, dpn: &Dpn, pf: PenaltyFunctions) -> CostValue {
        match self {
            Move::Log { event } => pf.log_move(event).into(),
            Move::Model { firing } => pf.model_move(dpn, firing).into(),
            Move::Sync { event, firing } => pf.sync_move(dpn, event, firing),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub moves: Vec<Move>,
}

impl Alignment {
    pub fn new(moves: Vec<Move>) -> Alignment {
        Alignment { moves }
    }

    pub fn log_projection(&self) -> Vec<Event> {
        self.moves.iter().filter_map(|m| m.event().cloned()).collect()
    }

    pub fn model_projection(&self) -> ProcessRun {
        ProcessRun::new(self.moves.iter().filter_map(|m| m.firing().cloned()).collect())
    }
}

/// Sum of the move penalties.
pub fn alignment_cost(dpn: &Dpn, alignment: &Alignment, pf: PenaltyFunctions) -> CostValue {
    alignment.moves.iter().fold(CostValue::ZERO, |acc, m| acc + m.cost(dpn, pf))
}

/// `(m+1) × (n+1)` matrix with `D[i][j]` the distance between the length-`i`
/// trace prefix and the length-`j` run prefix.
pub type DistanceMatrix = Vec<Vec<CostValue>>;

/// Edit distance between a trace and a (not necessarily valid) firing sequence.
pub fn edit_distance(
    dpn: &Dpn,
    trace: &LogTrace,
    run: &ProcessRun,
    pf: PenaltyFunctions,
) -> (CostValue, DistanceMatrix) {
    let (m, n) = (trace.len(), run.len());
    let mut d = vec![vec![CostValue::ZERO; n + 1]; m + 1];
    for i in 1..=m {
        d[i][0] = d[i - 1][0] + pf.log_move(&trace.events[i - 1]).into();
    }
    for j in 1..=n {
        d[0][j] = d[0][j - 1] + pf.model_move(dpn, &run.firings[j - 1]).into();
    }
    for i in 1..=m {
        let e = &trace.events[i - 1];
        let pl = CostValue::from(pf.log_move(e));
        for j in 1..=n {
            let f = &run.firings[j - 1];
            let sync = d[i - 1][j - 1] + pf.sync_move(dpn, e, f);
            let log = d[i - 1][j] + pl;
            let model = d[i][j - 1] + pf.model_move(dpn, f).into();
            d[i][j] = sync.min(log).min(model);
        }
    }
    (d[m][n], d)
}

/// Reads an alignment off a distance matrix. On ties a log move is preferred,
/// then a model move, then a synchronous move.
pub fn reconstruct_alignment(
    dpn: &Dpn,
    trace: &LogTrace,
    run: &ProcessRun,
    d: &DistanceMatrix,
    pf: PenaltyFunctions,
) -> Alignment {
    let (mut i, mut j) = (trace.len(), run.len());
    let mut rev = Vec::with_capacity(i + j);
    while i > 0 || j > 0 {
        let log_move = || Move::Log { event: trace.events[i - 1].clone() };
        let model_move = || Move::Model { firing: run.firings[j - 1].clone() };
        if j == 0 {
            rev.push(log_move());
            i -= 1;
        } else if i == 0 {
            rev.push(model_move());
            j -= 1;
        } else if d[i][j] == d[i - 1][j] + pf.log_move(&trace.events[i - 1]).into() {
            rev.push(log_move());
            i -= 1;
        } else if d[i][j] == d[i][j - 1] + pf.model_move(dpn, &run.firings[j - 1]).into() {
            rev.push(model_move());
            j -= 1;
        } else {
            rev.push(Move::Sync { event: trace.events[i - 1].clone(), firing: run.firings[j - 1].clone() });
            i -= 1;
            j -= 1;
        }
    }
    rev.reverse();
    Alignment::new(rev)
}

/// Optimal alignment of `trace` against the fixed firing sequence `run`.
pub fn align_with_run(dpn: &Dpn, trace: &LogTrace, run: &ProcessRun, pf: PenaltyFunctions) -> (CostValue, Alignment) {
    let (cost, d) = edit_distance(dpn, trace, run, pf);
    (cost, reconstruct_alignment(dpn, trace, run, &d, pf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{ab_trace, ex1, running_example};
    use crate::model::{AnnVar, Value};
    use proptest::prelude::*;

    fn fire(t: usize, writes: &[(&str, i64)]) -> Firing {
        Firing::new(t, writes.iter().map(|&(v, k)| (AnnVar::write(v), Value::int(k))))
    }

    fn ex2_alignments() -> [Alignment; 3] {
        let trace = ab_trace("ex2", 2, 1);
        let (a, b) = (trace.events[0].clone(), trace.events[1].clone());
        let g1 = Alignment::new(vec![
            Move::Sync { event: a.clone(), firing: fire(ex1::A, &[("x", 2)]) },
            Move::Sync { event: b.clone(), firing: fire(ex1::B, &[("y", 1)]) },
            Move::Model { firing: fire(ex1::TAU2, &[]) },
        ]);
        let g2 = Alignment::new(vec![
            Move::Sync { event: a.clone(), firing: fire(ex1::A, &[("x", 3)]) },
            Move::Model { firing: fire(ex1::TAU1, &[]) },
            Move::Log { event: b.clone() },
        ]);
        let g3 = Alignment::new(vec![
            Move::Log { event: a },
            Move::Log { event: b },
            Move::Model { firing: fire(ex1::A, &[("x", 3)]) },
            Move::Model { firing: fire(ex1::TAU1, &[]) },
        ]);
        [g1, g2, g3]
    }

    #[test]
    fn example_alignment_costs() {
        let net = running_example();
        let costs: Vec<CostValue> =
            ex2_alignments().iter().map(|g| alignment_cost(&net, g, standard_profile())).collect();
        assert_eq!(costs, vec![0.into(), 2.into(), 4.into()]);
        for g in ex2_alignments() {
            assert!(net.validate_run(&g.model_projection()));
        }
    }

    #[test]
    fn distance_of_first_alignment_is_zero_and_reconstructs_it() {
        let net = running_example();
        let trace = ab_trace("ex2", 2, 1);
        let [g1, ..] = ex2_alignments();
        let run = g1.model_projection();
        let (cost, d) = edit_distance(&net, &trace, &run, standard_profile());
        assert_eq!(cost, CostValue::ZERO);
        assert_eq!(reconstruct_alignment(&net, &trace, &run, &d, standard_profile()), g1);
    }

    #[test]
    fn degenerate_matrices() {
        let net = running_example();
        let empty = LogTrace::new("empty", vec![]);
        let (c, d) = edit_distance(&net, &empty, &ProcessRun::default(), standard_profile());
        assert_eq!(c, CostValue::ZERO);
        assert_eq!(d, vec![vec![CostValue::ZERO]]);

        let run = ProcessRun::new(vec![fire(ex1::A, &[("x", 1)]), fire(ex1::B, &[("y", 1)])]);
        let (c, d) = edit_distance(&net, &empty, &run, standard_profile());
        assert_eq!(c, 4.into());
        let g = reconstruct_alignment(&net, &empty, &run, &d, standard_profile());
        assert!(g.moves.iter().all(|m| m.kind() == "model"));

        let trace = ab_trace("t", 1, 1);
        let (c, d) = edit_distance(&net, &trace, &ProcessRun::default(), standard_profile());
        assert_eq!(c, 2.into());
        let g = reconstruct_alignment(&net, &trace, &ProcessRun::default(), &d, standard_profile());
        assert!(g.moves.iter().all(|m| m.kind() == "log"));
    }

    #[test]
    fn levenshtein_small_cases() {
        let net = running_example();
        let lev = levenshtein_profile();
        let run = ProcessRun::new(vec![fire(ex1::A, &[("x", 9)]), fire(ex1::B, &[("y", 9)])]);
        assert_eq!(edit_distance(&net, &ab_trace("t", 0, 0), &run, lev).0, CostValue::ZERO);
        let abd = LogTrace::new(
            "abd",
            vec![Event::ints("a", &[]), Event::ints("b", &[]), Event::ints("d", &[])],
        );
        assert_eq!(edit_distance(&net, &abd, &run, lev).0, 1.into());
        let just_a = LogTrace::new("a", vec![Event::ints("a", &[])]);
        let just_b = ProcessRun::new(vec![fire(ex1::B, &[("y", 1)])]);
        assert_eq!(edit_distance(&net, &just_a, &just_b, lev).0, 2.into());
    }

    #[test]
    fn sync_penalty_counts_event_variables_only() {
        let net = running_example();
        let pf = standard_profile();
        // variable written by the model but absent from the event: no penalty
        let e = Event::ints("a", &[]);
        assert_eq!(pf.sync_move(&net, &e, &fire(ex1::A, &[("x", 5)])), CostValue::ZERO);
        // event variable the transition does not write: penalty 1
        let e = Event::ints("a", &[("x", 5), ("y", 0)]);
        assert_eq!(pf.sync_move(&net, &e, &fire(ex1::A, &[("x", 5)])), 1.into());
        // label mismatch
        assert_eq!(pf.sync_move(&net, &e, &fire(ex1::B, &[("y", 0)])), CostValue::Infinite);
        assert_eq!(pf.sync_move(&net, &Event::ints("tau", &[]), &fire(ex1::TAU1, &[])), CostValue::Infinite);
    }

    #[test]
    fn cost_arithmetic_saturates() {
        assert_eq!(CostValue::Finite(3) + CostValue::Infinite, CostValue::Infinite);
        assert_eq!(CostValue::Finite(u64::MAX) + CostValue::Finite(1), CostValue::Finite(u64::MAX));
        assert!(CostValue::Finite(u64::MAX) < CostValue::Infinite);
    }

    fn arb_case() -> impl Strategy<Value = (LogTrace, ProcessRun)> {
        let event = (prop::sample::select(vec!["a", "b", "d", "c"]), prop::option::of(0i64..3));
        let firing = (prop::sample::select(vec![ex1::A, ex1::B, ex1::TAU1, ex1::D]), 0i64..3);
        (prop::collection::vec(event, 0..6), prop::collection::vec(firing, 0..6)).prop_map(|(es, fs)| {
            let events = es
                .into_iter()
                .map(|(a, x)| match x {
                    Some(x) => Event::ints(a, &[(if a == "a" { "x" } else { "y" }, x)]),
                    None => Event::ints(a, &[]),
                })
                .collect();
            let firings = fs
                .into_iter()
                .map(|(t, k)| match t {
                    ex1::A => fire(t, &[("x", k)]),
                    ex1::B | ex1::D => fire(t, &[("y", k)]),
                    _ => fire(t, &[]),
                })
                .collect();
            (LogTrace::new("p", events), ProcessRun::new(firings))
        })
    }

    proptest! {
        #[test]
        fn reconstruction_matches_distance((trace, run) in arb_case(), lev in any::<bool>()) {
            let net = running_example();
            let pf = if lev { levenshtein_profile() } else { standard_profile() };
            let (cost, d) = edit_distance(&net, &trace, &run, pf);
            let g = reconstruct_alignment(&net, &trace, &run, &d, pf);
            prop_assert_eq!(alignment_cost(&net, &g, pf), cost);
            prop_assert_eq!(g.log_projection(), trace.events.clone());
            prop_assert_eq!(g.model_projection(), run.clone());
            for i in 0..=trace.len() {
                for j in 0..=run.len() {
                    if i > 0 {
                        prop_assert!(d[i][j] <= d[i - 1][j] + pf.log_move(&trace.events[i - 1]).into());
                    }
                    if j > 0 {
                        prop_assert!(d[i][j] <= d[i][j - 1] + pf.model_move(&net, &run.firings[j - 1]).into());
                    }
                }
            }
        }
    }
}
