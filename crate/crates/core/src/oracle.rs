//! Exhaustive reference implementation for small nets whose written values
//! range over explicit finite domains.

use std::collections::{BTreeMap, HashMap};

use crate::cost::{CostValue, PenaltyFunctions};
use crate::log::LogTrace;
use crate::model::{Assignment, AnnVar, Dpn, Firing, Marking, ProcessRun, State, Value};

/// Candidate values per variable for written copies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FiniteDomains {
    pub values: BTreeMap<String, Vec<Value>>,
}

impl FiniteDomains {
    pub fn new() -> FiniteDomains {
        FiniteDomains::default()
    }

    pub fn with(mut self, var: &str, values: impl IntoIterator<Item = Value>) -> FiniteDomains {
        let mut vs: Vec<Value> = values.into_iter().collect();
        vs.sort();
        vs.dedup();
        self.values.insert(var.to_string(), vs);
        self
    }

    pub fn ints(self, var: &str, range: std::ops::RangeInclusive<i64>) -> FiniteDomains {
        self.with(var, range.map(Value::int))
    }

    pub fn bools(self, var: &str) -> FiniteDomains {
        self.with(var, [Value::Bool(false), Value::Bool(true)])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("search exceeded {0} nodes")]
    CapExceeded(usize),
    #[error("no domain given for written variable `{0}`")]
    MissingDomain(String),
    #[error("no run reaches the final marking within {0} steps")]
    NoRun(usize),
}

/// Default limit on explored search nodes.
pub const DEFAULT_CAP: usize = 2_000_000;

/// Every enabled firing of every transition in `state`, writes drawn from `domains`.
fn successors(dpn: &Dpn, state: &State, domains: &FiniteDomains) -> Result<Vec<(Firing, State)>, OracleError> {
    let mut out = Vec::new();
    for (t, tr) in dpn.transitions.iter().enumerate() {
        if !dpn.control_enabled(&state.marking, t) {
            continue;
        }
        let writes: Vec<&String> = tr.writes().iter().collect();
        let mut choices: Vec<&[Value]> = Vec::with_capacity(writes.len());
        for v in &writes {
            choices.push(domains.values.get(*v).ok_or_else(|| OracleError::MissingDomain(v.to_string()))?);
        }
        if choices.iter().any(|c| c.is_empty()) {
            continue;
        }
        let mut idx = vec![0usize; writes.len()];
        loop {
            let mut beta: Vec<(AnnVar, Value)> =
                writes.iter().enumerate().map(|(k, v)| (AnnVar::write(v), choices[k][idx[k]].clone())).collect();
            for v in tr.reads() {
                beta.push((AnnVar::read(v), state.assignment[v].clone()));
            }
            let f = Firing::new(t, beta);
            if dpn.enabled(state, &f) {
                let next = dpn.fire(state, &f).expect("enabled firing");
                out.push((f, next));
            }
            // odometer
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < choices[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    Ok(out)
}

/// All valid runs of length at most `max_len`, in depth-first order.
pub fn enumerate_runs(dpn: &Dpn, domains: &FiniteDomains, max_len: usize, cap: usize) -> Result<Vec<ProcessRun>, OracleError> {
    fn go(
        dpn: &Dpn,
        domains: &FiniteDomains,
        state: &State,
        prefix: &mut Vec<Firing>,
        left: usize,
        cap: usize,
        nodes: &mut usize,
        out: &mut Vec<ProcessRun>,
    ) -> Result<(), OracleError> {
        *nodes += 1;
        if *nodes > cap {
            return Err(OracleError::CapExceeded(cap));
        }
        if state.marking == dpn.final_marking {
            out.push(ProcessRun::new(prefix.clone()));
        }
        if left == 0 {
            return Ok(());
        }
        for (f, next) in successors(dpn, state, domains)? {
            prefix.push(f);
            go(dpn, domains, &next, prefix, left - 1, cap, nodes, out)?;
            prefix.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    let mut nodes = 0;
    go(dpn, domains, &dpn.initial_state(), &mut Vec::new(), max_len, cap, &mut nodes, &mut out)?;
    Ok(out)
}

type Key = (Marking, Assignment, Vec<CostValue>);

struct Search<'a> {
    dpn: &'a Dpn,
    trace: &'a LogTrace,
    pf: PenaltyFunctions,
    domains: &'a FiniteDomains,
    cap: usize,
    nodes: usize,
    best: CostValue,
    found: bool,
    /// Largest remaining depth already explored per (state, column).
    seen: HashMap<Key, usize>,
}

impl Search<'_> {
    fn go(&mut self, state: &State, col: Vec<CostValue>, left: usize) -> Result<(), OracleError> {
        self.nodes += 1;
        if self.nodes > self.cap {
            return Err(OracleError::CapExceeded(self.cap));
        }
        if state.marking == self.dpn.final_marking {
            self.found = true;
            self.best = self.best.min(*col.last().unwrap());
        }
        // every completion passes through this column
        if left == 0 || col.iter().min().copied().unwrap_or(CostValue::ZERO) >= self.best {
            return Ok(());
        }
        let key = (state.marking.clone(), state.assignment.clone(), col);
        if self.seen.get(&key).is_some_and(|&l| l >= left) {
            return Ok(());
        }
        self.seen.insert(key.clone(), left);
        let col = key.2;
        for (f, next) in successors(self.dpn, state, self.domains)? {
            let pm = CostValue::from(self.pf.model_move(self.dpn, &f));
            let mut new = Vec::with_capacity(col.len());
            new.push(col[0] + pm);
            for (i, e) in self.trace.events.iter().enumerate() {
                let sync = col[i] + self.pf.sync_move(self.dpn, e, &f);
                let log = new[i] + self.pf.log_move(e).into();
                let model = col[i + 1] + pm;
                new.push(sync.min(log).min(model));
            }
            self.go(&next, new, left - 1)?;
        }
        Ok(())
    }
}

/// Minimum edit distance between `trace` and any valid run of length at most `max_len`.
pub fn brute_force_optimal(
    dpn: &Dpn,
    trace: &LogTrace,
    pf: PenaltyFunctions,
    domains: &FiniteDomains,
    max_len: usize,
) -> Result<CostValue, OracleError> {
    brute_force_optimal_capped(dpn, trace, pf, domains, max_len, DEFAULT_CAP)
}

pub fn brute_force_optimal_capped(
    dpn: &Dpn,
    trace: &LogTrace,
    pf: PenaltyFunctions,
    domains: &FiniteDomains,
    max_len: usize,
    cap: usize,
) -> Result<CostValue, OracleError> {
    let mut col = vec![CostValue::ZERO];
    for e in &trace.events {
        let last = *col.last().unwrap();
        col.push(last + pf.log_move(e).into());
    }
    let mut s = Search { dpn, trace, pf, domains, cap, nodes: 0, best: CostValue::Infinite, found: false, seen: HashMap::new() };
    s.go(&dpn.initial_state(), col, max_len)?;
    if !s.found {
        return Err(OracleError::NoRun(max_len));
    }
    Ok(s.best)
}
