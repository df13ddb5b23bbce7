//! Per-trace conformance: bound, encode, minimize, decode. Also moves an
//! optimal alignment between traces that are equivalent up to constant comparison.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::cluster::{traces_equivalent, AtomSet};
use crate::cost::{alignment_cost, edit_distance, reconstruct_alignment, Alignment, CostValue, Move, PenaltyFunctions};
use crate::encode::{compute_bound, encode, EncodeError, EncodeOptions, EncodingArtifact};
use crate::log::{Event, LogTrace};
use crate::model::{AnnVar, Dpn, Firing, ModelError, ProcessRun, Value};
use crate::solver::{minimize, Session, SolverConfig, SolverError, Strategy, Valuation};

#[derive(Debug, Clone)]
pub struct AlignOptions {
    pub encode: EncodeOptions,
    pub solver: SolverConfig,
    /// Fixed number of model steps instead of the computed bound.
    pub bound: Option<usize>,
    /// Extra steps tried, one at a time, when the bound admits no run.
    pub retry: usize,
    pub strategy: Strategy,
    /// Directory receiving one SMT-LIB script per encoded trace.
    pub dump_smt: Option<PathBuf>,
}

impl Default for AlignOptions {
    fn default() -> Self {
        AlignOptions {
            encode: EncodeOptions::default(),
            solver: SolverConfig::from_env(),
            bound: None,
            retry: 3,
            strategy: Strategy::Binary,
            dump_smt: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Timings {
    pub parse: Duration,
    pub encode: Duration,
    pub solve: Duration,
}

impl std::ops::AddAssign for Timings {
    fn add_assign(&mut self, rhs: Timings) {
        self.parse += rhs.parse;
        self.encode += rhs.encode;
        self.solve += rhs.solve;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConformanceResult {
    pub trace_id: String,
    /// Optimal cost, or an upper bound when `timed_out`; `None` if no model was found in time.
    pub cost: Option<u64>,
    pub timed_out: bool,
    pub alignment: Option<Alignment>,
    pub run: Option<ProcessRun>,
    /// Number of model steps of the final encoding.
    pub bound: usize,
    pub timings: Timings,
}

#[derive(Debug, thiserror::Error)]
pub enum AlignError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("trace `{trace}`: no alignment found at bound {bound}")]
    NoAlignment { trace: String, bound: usize },
    #[error("cannot write SMT dump: {0}")]
    Dump(std::io::Error),
    #[error("traces are not equivalent up to constant comparison")]
    NotEquivalent,
    #[error("internal error: {0}")]
    Internal(String),
}

fn int_of(v: &Valuation, name: &str) -> Result<i64, AlignError> {
    match v.get(name) {
        Some(Value::Int(k)) => i64::try_from(k).map_err(|_| AlignError::Internal(format!("{name} out of range"))),
        _ => Err(AlignError::Internal(format!("no integer value for {name}"))),
    }
}

fn data_value(v: &Valuation, artifact: &EncodingArtifact, dpn: &Dpn, i: usize, var: &str) -> Result<Value, AlignError> {
    let sym = &artifact.data[i][var];
    let sort = dpn.sort_of(var).ok_or_else(|| AlignError::Internal(format!("undeclared {var}")))?;
    v.get(sym)
        .and_then(|raw| artifact.decode_value(sort, raw))
        .ok_or_else(|| AlignError::Internal(format!("no value for {sym}")))
}

/// The run encoded by a model: step `i` fires `t_{ν(S_i)}` with reads taken
/// from instant `i-1` and writes from instant `i`. Idle steps are dropped.
pub fn decode_run(valuation: &Valuation, artifact: &EncodingArtifact, dpn: &Dpn) -> Result<ProcessRun, AlignError> {
    let mut firings = Vec::new();
    for i in 1..=artifact.n {
        let s = int_of(valuation, &artifact.steps[i - 1])?;
        if s == 0 {
            break;
        }
        let t = usize::try_from(s - 1)
            .ok()
            .filter(|&t| t < dpn.transitions.len())
            .ok_or_else(|| AlignError::Internal(format!("step {i} selects {s}")))?;
        let tr = &dpn.transitions[t];
        let mut beta = Vec::new();
        for v in tr.reads() {
            beta.push((AnnVar::read(v), data_value(valuation, artifact, dpn, i - 1, v)?));
        }
        for v in tr.writes() {
            beta.push((AnnVar::write(v), data_value(valuation, artifact, dpn, i, v)?));
        }
        firings.push(Firing::new(t, beta));
    }
    let run = ProcessRun::new(firings);
    if !dpn.validate_run(&run) {
        return Err(AlignError::Internal("decoded run is not a valid run of the net".into()));
    }
    Ok(run)
}

/// Reads the optimal alignment off the model, preferring log, then model,
/// then synchronous moves on ties.
pub fn decode_alignment(
    valuation: &Valuation,
    artifact: &EncodingArtifact,
    dpn: &Dpn,
    trace: &LogTrace,
    run: &ProcessRun,
    pf: PenaltyFunctions,
) -> Result<Alignment, AlignError> {
    let (cost, d) = edit_distance(dpn, trace, run, pf);
    let objective = u64::try_from(int_of(valuation, &artifact.objective)?).ok();
    if cost.finite() != objective {
        return Err(AlignError::Internal(format!("model distance {objective:?} differs from recomputed {cost}")));
    }
    if artifact.options.delta_inequalities {
        return Ok(reconstruct_alignment(dpn, trace, run, &d, pf));
    }
    // exact cells: follow the recurrence over the model's own matrix
    let k = run.len();
    let mut nu = vec![vec![CostValue::ZERO; k + 1]; trace.len() + 1];
    for (i, row) in nu.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let value = int_of(valuation, &artifact.delta[i][j])?;
            *cell = CostValue::Finite(value as u64);
            if d[i][j] != *cell {
                return Err(AlignError::Internal(format!("cell ({i},{j}) is {value}, recurrence gives {}", d[i][j])));
            }
        }
    }
    Ok(reconstruct_alignment(dpn, trace, run, &nu, pf))
}

fn dump(dir: &std::path::Path, trace: &LogTrace, n: usize, artifact: &EncodingArtifact) -> Result<(), AlignError> {
    std::fs::create_dir_all(dir).map_err(AlignError::Dump)?;
    let safe: String = trace.id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    std::fs::write(dir.join(format!("{safe}.n{n}.smt2")), artifact.to_script()).map_err(AlignError::Dump)
}

/// Optimal alignment of `trace` against `dpn`.
pub fn conformance(dpn: &Dpn, trace: &LogTrace, pf: PenaltyFunctions, opts: &AlignOptions) -> Result<ConformanceResult, AlignError> {
    let base = compute_bound(dpn, trace, opts.bound)?;
    let mut timings = Timings::default();
    for n in base..=base + opts.retry {
        let started = Instant::now();
        let artifact = encode(dpn, trace, n, pf, opts.encode)?;
        if let Some(dir) = &opts.dump_smt {
            dump(dir, trace, n, &artifact)?;
        }
        timings.encode += started.elapsed();

        let started = Instant::now();
        let mut session = Session::start(&opts.solver)?;
        let outcome = minimize(&mut session, &artifact, opts.strategy);
        drop(session);
        timings.solve += started.elapsed();
        let min = match outcome {
            Ok(Some(min)) => min,
            Ok(None) => {
                log::debug!("trace {}: no run within {n} steps", trace.id);
                continue;
            }
            Err(SolverError::Timeout) | Err(SolverError::Unknown(_)) => {
                return Ok(ConformanceResult {
                    trace_id: trace.id.clone(),
                    cost: None,
                    timed_out: true,
                    alignment: None,
                    run: None,
                    bound: n,
                    timings,
                })
            }
            Err(e) => return Err(e.into()),
        };
        let run = decode_run(&min.valuation, &artifact, dpn)?;
        let alignment = decode_alignment(&min.valuation, &artifact, dpn, trace, &run, pf)?;
        let cost = alignment_cost(dpn, &alignment, pf);
        if cost.finite() != Some(min.value) {
            return Err(AlignError::Internal(format!("alignment costs {cost}, solver reported {}", min.value)));
        }
        return Ok(ConformanceResult {
            trace_id: trace.id.clone(),
            cost: Some(min.value),
            timed_out: !min.optimal,
            alignment: Some(alignment),
            run: Some(run),
            bound: n,
            timings,
        });
    }
    Err(AlignError::NoAlignment { trace: trace.id.clone(), bound: base + opts.retry })
}

fn transferred_write(var: &str, written: &Value, source: &Event, target: &Event, atoms: &AtomSet, dpn: &Dpn) -> Value {
    if !atoms.restricted(var) {
        return written.clone();
    }
    let (Some(a1), Some(a2)) = (source.assignment.get(var), target.assignment.get(var)) else {
        return written.clone();
    };
    let sort = written.sort();
    let pick = |v: &Value| v.coerce(sort).or_else(|| dpn.sort_of(var).and_then(|s| v.coerce(s))).unwrap_or_else(|| v.clone());
    if written.sem_eq(a1) {
        pick(a2)
    } else if written.sem_eq(a2) {
        pick(a1)
    } else {
        written.clone()
    }
}

/// Rewrites an alignment for `source` into one for the equivalent `target`
/// with the same cost, in a single pass over the moves.
pub fn transfer_alignment(
    gamma: &Alignment,
    source: &LogTrace,
    target: &LogTrace,
    dpn: &Dpn,
    atoms: &AtomSet,
) -> Result<Alignment, AlignError> {
    if !traces_equivalent(source, target, atoms) {
        return Err(AlignError::NotEquivalent);
    }
    let mut state = dpn.initial_state();
    let mut events = 0usize;
    let mut moves = Vec::with_capacity(gamma.moves.len());
    for mv in &gamma.moves {
        let (firing, pair) = match mv {
            Move::Log { .. } => {
                moves.push(Move::Log { event: target.events[events].clone() });
                events += 1;
                continue;
            }
            Move::Model { firing } => (firing, None),
            Move::Sync { firing, .. } => {
                let pair = (&source.events[events], &target.events[events]);
                events += 1;
                (firing, Some(pair))
            }
        };
        let t = &dpn.transitions[firing.transition];
        let mut beta = Vec::new();
        for v in t.reads() {
            let current = state.assignment.get(v).cloned().ok_or_else(|| AlignError::Internal(format!("{v} unset")))?;
            beta.push((AnnVar::read(v), current));
        }
        for v in t.writes() {
            let written = firing.written(v).ok_or_else(|| AlignError::Internal(format!("{v} not written")))?;
            let value = match pair {
                Some((e1, e2)) => transferred_write(v, written, e1, e2, atoms, dpn),
                None => written.clone(),
            };
            beta.push((AnnVar::write(v), value));
        }
        let f2 = Firing::new(firing.transition, beta);
        state = dpn.fire(&state, &f2).map_err(|e| AlignError::Internal(format!("transferred run: {e}")))?;
        moves.push(match pair {
            Some((_, e2)) => Move::Sync { event: e2.clone(), firing: f2 },
            None => Move::Model { firing: f2 },
        });
    }
    Ok(Alignment::new(moves))
}

pub fn format_event(e: &Event) -> String {
    if e.assignment.is_empty() {
        return e.activity.clone();
    }
    let body: Vec<String> = e.assignment.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{} {{{}}}", e.activity, body.join(", "))
}

pub fn format_firing(dpn: &Dpn, f: &Firing) -> String {
    let t = &dpn.transitions[f.transition];
    let name = if t.label.is_silent() { format!("{} ({})", t.label, t.id) } else { t.label.to_string() };
    let writes: Vec<String> = f.beta.iter().filter(|(k, _)| t.writes().contains(&k.name) && k.ann == crate::model::Ann::Write).map(|(k, v)| format!("{k}={v}")).collect();
    if writes.is_empty() {
        name
    } else {
        format!("{name} {{{}}}", writes.join(", "))
    }
}

/// Three-column table: log event, model firing, move kind. `>>` marks a skip.
pub fn render(dpn: &Dpn, alignment: &Alignment) -> String {
    let rows: Vec<[String; 3]> = alignment
        .moves
        .iter()
        .map(|m| {
            [
                m.event().map_or_else(|| ">>".to_string(), format_event),
                m.firing().map_or_else(|| ">>".to_string(), |f| format_firing(dpn, f)),
                m.kind().to_string(),
            ]
        })
        .collect();
    let header = ["log", "model", "move"].map(String::from);
    let width = |c: usize| rows.iter().chain([&header]).map(|r| r[c].chars().count()).max().unwrap_or(0);
    let (w0, w1) = (width(0), width(1));
    let mut out = String::new();
    for r in std::iter::once(&header).chain(&rows) {
        let _ = writeln!(out, "{:<w0$} | {:<w1$} | {}", r[0], r[1], r[2]);
    }
    out
}
