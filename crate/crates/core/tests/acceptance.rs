//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero if any of them fails.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::{align_options, indel_distance, random_trace, region_variant, suite, Instance, MAX_LEN, ORACLE_CAP};
use dpnalign_core::align::{conformance, transfer_alignment, AlignOptions};
use dpnalign_core::cluster::{cluster_log, extract_atoms, signature, traces_equivalent, Atom};
use dpnalign_core::cost::{alignment_cost, Alignment, CostValue, Move, PenaltyFunctions};
use dpnalign_core::encode::{EncodeOptions, Optimization};
use dpnalign_core::fixtures::{ab_trace, clustering_traces, ex1, gadget_trace, running_example, sat_gadget};
use dpnalign_core::io::{parse_pnml, parse_xes, PnmlOptions};
use dpnalign_core::log::{dedupe, Event, EventLog, LogTrace};
use dpnalign_core::model::{Ann, AnnVar, CmpOp, Dpn, DpnBuilder, Expr, Firing, Guard, Label, LabelPolicy, Value};
use dpnalign_core::oracle::brute_force_optimal_capped;
use dpnalign_core::pipeline::{check_log, PipelineOptions};

const C1_MAX_SECONDS: f64 = 5.0;
const C4_FORMULAS: usize = 50;
const C4_MAX_SECONDS: f64 = 60.0;
const C5_MIN_INSTANCES: usize = 200;
const C5_INSTANCES: usize = 220;
const C5_MAX_SECONDS: f64 = 600.0;
const C6_EXTRA_TRACES: usize = 6;
const C8_CASES: usize = 100;
const C9_UNIQUE: usize = 35681;
const C9_CLUSTERS: usize = 4290;
const PROFILES: [PenaltyFunctions; 2] = [PenaltyFunctions::Standard, PenaltyFunctions::Levenshtein];

struct Report {
    failed: bool,
}

impl Report {
    fn line(&mut self, n: u32, pass: bool, detail: String) {
        self.failed |= !pass;
        println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn engine(dpn: &Dpn, trace: &LogTrace, pf: PenaltyFunctions, opts: &AlignOptions) -> Result<(u64, Alignment), String> {
    let r = conformance(dpn, trace, pf, opts).map_err(|e| e.to_string())?;
    match (r.timed_out, r.cost, r.alignment) {
        (false, Some(c), Some(a)) => Ok((c, a)),
        _ => Err(format!("trace {} timed out", trace.id)),
    }
}

// 1 ------------------------------------------------------------------------

fn running_example_costs(encode: EncodeOptions) -> Result<String, String> {
    let net = running_example();
    let opts = AlignOptions { encode, solver: common::solver(), ..AlignOptions::default() };
    let mut detail = Vec::new();
    for (trace, expected) in [(ab_trace("e1", 2, 1), 0), (ab_trace("e3", 4, 1), 1)] {
        let started = Instant::now();
        let (cost, _) = engine(&net, &trace, PenaltyFunctions::Standard, &opts)?;
        let secs = started.elapsed().as_secs_f64();
        if cost != expected || secs >= C1_MAX_SECONDS {
            return Err(format!("{}: cost {cost} (expected {expected}) in {secs:.2}s", trace.id));
        }
        detail.push(format!("{}={cost} in {secs:.2}s", trace.id));
    }
    Ok(detail.join(", "))
}

// 2 ------------------------------------------------------------------------

fn fire(t: usize, writes: &[(&str, i64)]) -> Firing {
    Firing::new(t, writes.iter().map(|&(v, k)| (AnnVar::write(v), Value::int(k))))
}

fn cost_unit_checks() -> Result<String, String> {
    let net = running_example();
    let trace = ab_trace("ex2", 2, 1);
    let (a, b) = (trace.events[0].clone(), trace.events[1].clone());
    let gammas = [
        Alignment::new(vec![
            Move::Sync { event: a.clone(), firing: fire(ex1::A, &[("x", 2)]) },
            Move::Sync { event: b.clone(), firing: fire(ex1::B, &[("y", 1)]) },
            Move::Model { firing: fire(ex1::TAU2, &[]) },
        ]),
        Alignment::new(vec![
            Move::Sync { event: a.clone(), firing: fire(ex1::A, &[("x", 3)]) },
            Move::Model { firing: fire(ex1::TAU1, &[]) },
            Move::Log { event: b.clone() },
        ]),
        Alignment::new(vec![
            Move::Log { event: a },
            Move::Log { event: b },
            Move::Model { firing: fire(ex1::A, &[("x", 3)]) },
            Move::Model { firing: fire(ex1::TAU1, &[]) },
        ]),
    ];
    let costs: Vec<CostValue> = gammas.iter().map(|g| alignment_cost(&net, g, PenaltyFunctions::Standard)).collect();
    let expected: Vec<CostValue> = vec![0.into(), 2.into(), 4.into()];
    if costs != expected {
        return Err(format!("costs {costs:?}"));
    }
    Ok("costs 0, 2, 4".into())
}

// 3 ------------------------------------------------------------------------

fn clustering_example() -> Result<String, String> {
    let atoms = extract_atoms(&running_example());
    let x: Vec<Atom> = atoms.atoms("x").map(|s| s.iter().cloned().collect()).unwrap_or_default();
    let expected = vec![Atom::new("x", CmpOp::Ge, Value::int(0)), Atom::new("x", CmpOp::Le, Value::int(3))];
    let mut got = x.clone();
    got.sort();
    let mut want = expected.clone();
    want.sort();
    if got != want {
        return Err(format!("ats_x = {x:?}"));
    }
    if atoms.restricted("y") {
        return Err("y is restricted".into());
    }
    let log = EventLog::new(clustering_traces());
    let unique = dedupe(&log);
    let clustering = cluster_log(&unique, &atoms);
    let mut parts: Vec<Vec<String>> =
        clustering.clusters.iter().map(|c| c.members.iter().map(|&m| unique[m].trace.id.clone()).collect()).collect();
    parts.iter_mut().for_each(|p| p.sort());
    parts.sort();
    let want: Vec<Vec<String>> = vec![vec!["e1".into(), "e2".into()], vec!["e3".into()], vec!["e4".into()]];
    if parts != want {
        return Err(format!("partition {parts:?}"));
    }
    Ok("ats_x = {x >= 0, x <= 3}, y unrestricted, partition {e1,e2} {e3} {e4}".into())
}

// 4 ------------------------------------------------------------------------

/// Clauses of literals `(variable index, polarity)`.
type Cnf = Vec<Vec<(usize, bool)>>;

const SAT_VARS: [&str; 3] = ["p", "q", "r"];

fn random_cnf(rng: &mut ChaCha8Rng) -> Cnf {
    let clauses = rng.gen_range(2..=8);
    (0..clauses)
        .map(|_| {
            let width = rng.gen_range(1..=2);
            (0..width).map(|_| (rng.gen_range(0..3), rng.gen_bool(0.5))).collect()
        })
        .collect()
}

fn truth_table_sat(cnf: &Cnf) -> bool {
    (0..8u8).any(|bits| cnf.iter().all(|c| c.iter().any(|&(v, pos)| ((bits >> v) & 1 == 1) == pos)))
}

fn cnf_expr(cnf: &Cnf) -> Expr {
    Expr::And(
        cnf.iter()
            .map(|c| {
                Expr::Or(
                    c.iter()
                        .map(|&(v, pos)| {
                            let var = Expr::var(SAT_VARS[v], Ann::Read);
                            if pos { var } else { Expr::Not(Box::new(var)) }
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

fn sat_gadgets() -> Result<String, String> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let formulas: Vec<Cnf> = (0..C4_FORMULAS).map(|_| random_cnf(&mut rng)).collect();
    let opts = align_options(EncodeOptions::default(), None);
    let outcomes: Vec<Result<(bool, u64), String>> = formulas
        .par_iter()
        .map(|cnf| {
            let net = sat_gadget(&cnf_expr(cnf), &SAT_VARS);
            let (cost, _) = engine(&net, &gadget_trace(), PenaltyFunctions::Standard, &opts)?;
            Ok((truth_table_sat(cnf), cost))
        })
        .collect();
    let mut sat = 0;
    for (i, o) in outcomes.into_iter().enumerate() {
        let (is_sat, cost) = o?;
        let expected = if is_sat { 0 } else { 2 };
        if cost != expected {
            return Err(format!("formula {i}: cost {cost}, truth table says {}", if is_sat { "sat" } else { "unsat" }));
        }
        sat += is_sat as usize;
    }
    let secs = started.elapsed().as_secs_f64();
    if secs >= C4_MAX_SECONDS {
        return Err(format!("took {secs:.1}s"));
    }
    Ok(format!("{C4_FORMULAS} formulas ({sat} sat, {} unsat) in {secs:.1}s", C4_FORMULAS - sat))
}

// 5 and 7 ------------------------------------------------------------------

struct Expected {
    seed: u64,
    costs: [u64; 2],
}

fn oracle_optima(instances: &[Instance]) -> Result<Vec<Expected>, String> {
    instances
        .par_iter()
        .map(|inst| {
            let mut costs = [0; 2];
            for (k, pf) in PROFILES.into_iter().enumerate() {
                let c = brute_force_optimal_capped(&inst.dpn, &inst.trace, pf, &inst.domains, MAX_LEN, ORACLE_CAP)
                    .map_err(|e| format!("seed {}: oracle: {e}", inst.seed))?;
                costs[k] = c.finite().ok_or_else(|| format!("seed {}: infinite optimum", inst.seed))?;
            }
            Ok(Expected { seed: inst.seed, costs })
        })
        .collect()
}

fn oracle_suite(instances: &[Instance], expected: &[Expected], encode: EncodeOptions) -> Result<String, String> {
    let started = Instant::now();
    let opts = align_options(encode, Some(MAX_LEN));
    let mismatches: Vec<String> = instances
        .par_iter()
        .zip(expected)
        .flat_map_iter(|(inst, exp)| {
            PROFILES.into_iter().enumerate().filter_map(|(k, pf)| match engine(&inst.dpn, &inst.trace, pf, &opts) {
                Ok((c, _)) if c == exp.costs[k] => None,
                Ok((c, _)) => Some(format!("seed {} {}: engine {c}, oracle {}", exp.seed, pf.name(), exp.costs[k])),
                Err(e) => Some(format!("seed {} {}: {e}", exp.seed, pf.name())),
            })
        })
        .collect();
    let secs = started.elapsed().as_secs_f64();
    if let Some(first) = mismatches.first() {
        return Err(format!("{} mismatches, first: {first}", mismatches.len()));
    }
    if instances.len() < C5_MIN_INSTANCES || secs >= C5_MAX_SECONDS {
        return Err(format!("{} instances in {secs:.1}s", instances.len()));
    }
    let nonzero = expected.iter().filter(|e| e.costs[0] > 0).count();
    let max = expected.iter().map(|e| e.costs[0].max(e.costs[1])).max().unwrap_or(0);
    Ok(format!(
        "{} instances x 2 profiles match the oracle ({nonzero} with nonzero standard cost, max {max}) in {secs:.1}s",
        instances.len()
    ))
}

// 6 ------------------------------------------------------------------------

fn shifted(trace: &LogTrace, id: &str, var: &str, value: i64) -> LogTrace {
    let mut t = trace.clone();
    t.id = id.to_string();
    for e in &mut t.events {
        if e.assignment.contains_key(var) {
            e.assignment.insert(var.to_string(), Value::int(value));
        }
    }
    t
}

fn equivalent_pairs(instances: &[Instance]) -> Vec<(Dpn, LogTrace, LogTrace)> {
    let mut pairs = Vec::new();
    for inst in instances {
        let atoms = extract_atoms(&inst.dpn);
        let variant = region_variant(&inst.trace, &atoms, &format!("{}'", inst.trace.id));
        if variant.events != inst.trace.events && traces_equivalent(&inst.trace, &variant, &atoms) {
            pairs.push((inst.dpn.clone(), inst.trace.clone(), variant));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(inst.seed ^ 0x5eed);
        let extra: Vec<LogTrace> =
            (0..C6_EXTRA_TRACES).map(|k| random_trace(&mut rng, &inst.dpn, &format!("{}.{k}", inst.trace.id))).collect();
        let mut by_sig: BTreeMap<String, Vec<&LogTrace>> = BTreeMap::new();
        for t in &extra {
            by_sig.entry(format!("{:?}", signature(t, &atoms))).or_default().push(t);
        }
        for group in by_sig.values() {
            for w in group.windows(2) {
                if w[0].events != w[1].events {
                    pairs.push((inst.dpn.clone(), w[0].clone(), w[1].clone()));
                }
            }
        }
    }
    let net = running_example();
    let e1 = ab_trace("e1", 2, 1);
    let e3 = ab_trace("e3", 4, 1);
    pairs.push((net.clone(), e1.clone(), ab_trace("e2", 3, 1)));
    pairs.push((net.clone(), e1.clone(), shifted(&e1, "e1-x0", "x", 0)));
    pairs.push((net.clone(), e3.clone(), shifted(&e3, "e3-x9", "x", 9)));
    pairs.push((net.clone(), shifted(&e3, "neg", "x", -1), shifted(&e3, "neg7", "x", -7)));
    pairs
}

fn check_pair(dpn: &Dpn, a: &LogTrace, b: &LogTrace, pf: PenaltyFunctions, opts: &AlignOptions) -> Result<(), String> {
    let atoms = extract_atoms(dpn);
    if !traces_equivalent(a, b, &atoms) {
        return Err(format!("{} and {} are not equivalent", a.id, b.id));
    }
    let (ca, ga) = engine(dpn, a, pf, opts)?;
    let (cb, _) = engine(dpn, b, pf, opts)?;
    if ca != cb {
        return Err(format!("{}: {ca} vs {}: {cb} ({})", a.id, b.id, pf.name()));
    }
    let moved = transfer_alignment(&ga, a, b, dpn, &atoms).map_err(|e| format!("{} -> {}: {e}", a.id, b.id))?;
    if !dpn.validate_run(&moved.model_projection()) {
        return Err(format!("{} -> {}: transferred run is not valid", a.id, b.id));
    }
    if moved.log_projection() != b.events {
        return Err(format!("{} -> {}: transferred alignment does not cover the trace", a.id, b.id));
    }
    let c = alignment_cost(dpn, &moved, pf);
    if c.finite() != Some(cb) {
        return Err(format!("{} -> {}: transferred cost {c}, optimum {cb}", a.id, b.id));
    }
    Ok(())
}

fn equivalent_traces_share_optima(instances: &[Instance]) -> Result<String, String> {
    let pairs = equivalent_pairs(instances);
    let opts = align_options(EncodeOptions::default(), Some(MAX_LEN));
    let failures: Vec<String> = pairs
        .par_iter()
        .flat_map_iter(|(dpn, a, b)| PROFILES.into_iter().filter_map(|pf| check_pair(dpn, a, b, pf, &opts).err()))
        .collect();
    if let Some(first) = failures.first() {
        return Err(format!("{} failures, first: {first}", failures.len()));
    }
    Ok(format!("{} equivalent pairs x 2 profiles: equal optima, transferred alignments valid and optimal", pairs.len()))
}

// 8 ------------------------------------------------------------------------

enum Tree {
    Leaf(&'static str),
    Seq(Vec<Tree>),
    Xor(Vec<Tree>),
}

const ACTIVITIES: [&str; 8] = ["a", "b", "c", "d", "e", "f", "g", "h"];

/// Labels must be unique, so leaves draw from `pool` without replacement.
fn random_tree(rng: &mut ChaCha8Rng, depth: usize, pool: &mut Vec<&'static str>) -> Tree {
    if depth == 0 || pool.len() < 2 || rng.gen_bool(0.3) {
        return Tree::Leaf(pool.pop().expect("pool is never drained"));
    }
    let mut kids = Vec::new();
    for _ in 0..rng.gen_range(2..=3) {
        if pool.is_empty() {
            break;
        }
        kids.push(random_tree(rng, depth - 1, pool));
    }
    if kids.len() == 1 {
        return kids.pop().unwrap();
    }
    if rng.gen_bool(0.5) { Tree::Seq(kids) } else { Tree::Xor(kids) }
}

fn language(t: &Tree) -> Vec<Vec<&'static str>> {
    match t {
        Tree::Leaf(a) => vec![vec![a]],
        Tree::Xor(kids) => kids.iter().flat_map(language).collect(),
        Tree::Seq(kids) => kids.iter().fold(vec![vec![]], |acc, k| {
            let tail = language(k);
            acc.iter().flat_map(|w| tail.iter().map(move |v| [w.clone(), v.clone()].concat())).collect()
        }),
    }
}

/// Wires `t` between places `from` and `to`.
fn build_tree(b: &mut DpnBuilder, t: &Tree, from: usize, to: usize, counter: &mut usize) {
    match t {
        Tree::Leaf(a) => {
            *counter += 1;
            let ix = b.transition(&format!("t{counter}"), Label::activity(a), Guard::always());
            b.arc_in(from, ix, 1);
            b.arc_out(ix, to, 1);
        }
        Tree::Xor(kids) => kids.iter().for_each(|k| build_tree(b, k, from, to, counter)),
        Tree::Seq(kids) => {
            let mut cur = from;
            for (i, k) in kids.iter().enumerate() {
                let next = if i + 1 == kids.len() {
                    to
                } else {
                    *counter += 1;
                    b.place(&format!("q{counter}"))
                };
                build_tree(b, k, cur, next, counter);
                cur = next;
            }
        }
    }
}

fn tree_net(t: &Tree) -> Dpn {
    let mut b = DpnBuilder::new("tree");
    let start = b.place("start");
    let end = b.place("end");
    build_tree(&mut b, t, start, end, &mut 0);
    b.initial_tokens(start, 1);
    b.final_tokens(end, 1);
    b.build(LabelPolicy::Strict).expect("tree net is well formed")
}

fn levenshtein_degeneration() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cases: Vec<(Tree, Vec<&str>)> = (0..C8_CASES)
        .map(|_| {
            let mut pool = ACTIVITIES.to_vec();
            pool.shuffle(&mut rng);
            let tree = random_tree(&mut rng, 3, &mut pool);
            let len = rng.gen_range(0..=6);
            let trace = (0..len).map(|_| *ACTIVITIES.choose(&mut rng).unwrap()).collect();
            (tree, trace)
        })
        .collect();
    let failures: Vec<String> = cases
        .par_iter()
        .enumerate()
        .filter_map(|(i, (tree, acts))| {
            let words = language(tree);
            let expected = words.iter().map(|w| indel_distance(acts, w)).min().unwrap();
            let longest = words.iter().map(Vec::len).max().unwrap();
            let net = tree_net(tree);
            let trace = LogTrace::new(&format!("c{i}"), acts.iter().map(|a| Event::new(a, [])).collect());
            let opts = align_options(EncodeOptions::default(), Some(longest));
            match engine(&net, &trace, PenaltyFunctions::Levenshtein, &opts) {
                Ok((c, _)) if c == expected => None,
                Ok((c, _)) => Some(format!("case {i}: engine {c}, edit distance {expected}")),
                Err(e) => Some(format!("case {i}: {e}")),
            }
        })
        .collect();
    if let Some(first) = failures.first() {
        return Err(format!("{} failures, first: {first}", failures.len()));
    }
    Ok(format!("{C8_CASES} data-free cases match indel edit distance"))
}

// 9 ------------------------------------------------------------------------

fn road_fines() -> Option<Result<String, String>> {
    let pnml = std::env::var("DPNALIGN_ROAD_FINES_PNML").ok()?;
    let xes = std::env::var("DPNALIGN_ROAD_FINES_XES").ok()?;
    let run = || -> Result<String, String> {
        let started = Instant::now();
        let text = std::fs::read_to_string(&pnml).map_err(|e| format!("{pnml}: {e}"))?;
        let dpn = parse_pnml(&text, &PnmlOptions::default()).map_err(|e| e.to_string())?.value;
        let text = std::fs::read_to_string(&xes).map_err(|e| format!("{xes}: {e}"))?;
        let log = parse_xes(&text, &dpn).map_err(|e| e.to_string())?.value;
        let parse = started.elapsed();
        let out = check_log(&dpn, &log, &PipelineOptions { align: align_options(EncodeOptions::default(), None), ..Default::default() }, parse)
            .map_err(|e| e.to_string())?;
        let s = &out.summary;
        if s.unique != C9_UNIQUE || s.clusters != C9_CLUSTERS {
            return Err(format!("{} unique traces, {} clusters", s.unique, s.clusters));
        }
        Ok(format!("{} unique, {} clusters, {} timeouts, wall {:.1}s", s.unique, s.clusters, s.timed_out, s.wall_seconds))
    };
    Some(run())
}

fn main() {
    let mut report = Report { failed: false };
    let mut emit = |n: u32, r: Result<String, String>| match r {
        Ok(d) => report.line(n, true, d),
        Err(d) => report.line(n, false, d),
    };

    emit(1, running_example_costs(EncodeOptions::default()));
    emit(2, cost_unit_checks());
    emit(3, clustering_example());
    emit(4, sat_gadgets());

    let prep = Instant::now();
    let instances = suite(0, C5_INSTANCES);
    let expected = oracle_optima(&instances);
    let prep = prep.elapsed();
    match &expected {
        Ok(expected) => {
            emit(5, oracle_suite(&instances, expected, EncodeOptions::default()).map(|d| format!("{d} (oracle {:.1}s)", prep.as_secs_f64())));
            emit(6, equivalent_traces_share_optima(&instances));
            let seven: Result<Vec<String>, String> = Optimization::ALL
                .into_iter()
                .map(|o| {
                    let enc = EncodeOptions::default().without(o);
                    running_example_costs(enc).map_err(|e| format!("without {}: example: {e}", o.name()))?;
                    oracle_suite(&instances, expected, enc).map_err(|e| format!("without {}: suite: {e}", o.name()))?;
                    Ok(o.name().to_string())
                })
                .collect();
            emit(7, seven.map(|names| format!("examples and suite unchanged without each of {}", names.join(", "))));
        }
        Err(e) => {
            emit(5, Err(e.clone()));
            emit(6, Err("suite unavailable".into()));
            emit(7, Err("suite unavailable".into()));
        }
    }
    emit(8, levenshtein_degeneration());
    match road_fines() {
        Some(r) => emit(9, r),
        None => println!("criterion 9: SKIP road-fines data not supplied (set DPNALIGN_ROAD_FINES_PNML and DPNALIGN_ROAD_FINES_XES)"),
    }
    if report.failed {
        std::process::exit(1);
    }
}
