#![allow(dead_code)]

use std::time::Duration;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use dpnalign_core::align::AlignOptions;
use dpnalign_core::cluster::AtomSet;
use dpnalign_core::encode::EncodeOptions;
use dpnalign_core::log::{Event, LogTrace};
use dpnalign_core::model::{Ann, CmpOp, Dpn, DpnBuilder, Expr, Guard, Label, LabelPolicy, Marking, Sort, Value};
use dpnalign_core::oracle::{brute_force_optimal_capped, FiniteDomains, OracleError};
use dpnalign_core::cost::PenaltyFunctions;
use dpnalign_core::solver::SolverConfig;

pub const MAX_LEN: usize = 6;
pub const ORACLE_CAP: usize = 400_000;
pub const INT_DOMAIN: [i64; 5] = [-1, 0, 1, 2, 3];
pub const CONSTANTS: [i64; 2] = [0, 2];

pub fn solver() -> SolverConfig {
    SolverConfig::new("z3").with_timeout(Duration::from_secs(120))
}

pub fn align_options(encode: EncodeOptions, bound: Option<usize>) -> AlignOptions {
    AlignOptions { encode, solver: solver(), bound, retry: 0, ..AlignOptions::default() }
}

pub struct Instance {
    pub seed: u64,
    pub dpn: Dpn,
    pub trace: LogTrace,
    pub domains: FiniteDomains,
}

fn atom(rng: &mut ChaCha8Rng, var: &str, sort: Sort, others: &[(String, Sort)]) -> Expr {
    let ann = if rng.gen_bool(0.5) { Ann::Read } else { Ann::Write };
    let v = Expr::var(var, ann);
    match sort {
        Sort::Bool => match rng.gen_range(0..3) {
            0 => v,
            1 => Expr::Not(Box::new(v)),
            _ => Expr::cmp(CmpOp::Eq, v, Expr::Const(Value::Bool(true))),
        },
        _ => {
            let ints: Vec<&String> = others.iter().filter(|(n, s)| n != var && *s == Sort::Int).map(|(n, _)| n).collect();
            if !ints.is_empty() && rng.gen_bool(0.15) {
                // copy between variables
                return Expr::cmp(CmpOp::Eq, Expr::var(var, Ann::Write), Expr::var(ints[0], Ann::Read));
            }
            let op = *[CmpOp::Ge, CmpOp::Gt, CmpOp::Eq, CmpOp::Le, CmpOp::Lt, CmpOp::Ne].choose(rng).unwrap();
            let k = Expr::Const(Value::int(*CONSTANTS.choose(rng).unwrap()));
            if rng.gen_bool(0.2) {
                Expr::cmp(op, k, v)
            } else {
                Expr::cmp(op, v, k)
            }
        }
    }
}

/// A random net with at most 5 places, 5 transitions and 2 variables, and a
/// final marking reachable by the control flow alone.
pub fn random_net(rng: &mut ChaCha8Rng) -> Dpn {
    let np = rng.gen_range(2..=5);
    let nt = rng.gen_range(2..=5);
    let nv = rng.gen_range(0..=2);
    let vars: Vec<(String, Sort)> = ["x", "y"][..nv]
        .iter()
        .map(|v| (v.to_string(), if rng.gen_bool(0.2) { Sort::Bool } else { Sort::Int }))
        .collect();
    let mut b = DpnBuilder::new("random");
    let places: Vec<usize> = (0..np).map(|i| b.place(&format!("p{i}"))).collect();
    let labels = ["a", "b", "c", "d", "e"];
    let mut pre: Vec<Vec<usize>> = Vec::new();
    let mut post: Vec<Vec<usize>> = Vec::new();
    for t in 0..nt {
        let label = if t > 0 && rng.gen_bool(0.2) { Label::Silent } else { Label::activity(labels[t]) };
        let guard = if vars.is_empty() || rng.gen_bool(0.35) {
            Guard::always()
        } else {
            let k = rng.gen_range(1..=2);
            let atoms: Vec<Expr> = (0..k)
                .map(|_| {
                    let (v, s) = vars.choose(rng).unwrap();
                    atom(rng, v, *s, &vars)
                })
                .collect();
            if atoms.len() > 1 && rng.gen_bool(0.3) { Guard::new(Expr::Or(atoms)) } else { Guard::new(Expr::And(atoms)) }
        };
        let ix = b.transition(&format!("t{t}"), label, guard);
        for (v, _) in &vars {
            if rng.gen_bool(0.25) {
                b.declare_access(ix, v, Ann::Write);
            }
        }
        let input = if t == 0 { places[0] } else { *places.choose(rng).unwrap() };
        let mut ins = vec![input];
        if rng.gen_bool(0.15) {
            ins.push(*places.choose(rng).unwrap());
        }
        let mut outs = vec![*places.choose(rng).unwrap()];
        if rng.gen_bool(0.15) {
            outs.push(*places.choose(rng).unwrap());
        }
        for &p in &ins {
            b.arc_in(p, ix, 1);
        }
        for &p in &outs {
            b.arc_out(ix, p, 1);
        }
        pre.push(ins);
        post.push(outs);
    }
    for (v, s) in &vars {
        b.variable(v, *s);
    }
    b.initial_tokens(places[0], 1);
    // walk the token game to pick a reachable final marking
    let mut m = vec![0u64; np];
    m[0] = 1;
    let steps = rng.gen_range(1..=4);
    for _ in 0..steps {
        let enabled: Vec<usize> = (0..nt)
            .filter(|&t| {
                let mut need = vec![0u64; np];
                pre[t].iter().for_each(|&p| need[p] += 1);
                need.iter().zip(&m).all(|(n, h)| h >= n)
            })
            .collect();
        let Some(&t) = enabled.choose(rng) else { break };
        pre[t].iter().for_each(|&p| m[p] -= 1);
        post[t].iter().for_each(|&p| m[p] += 1);
    }
    for (p, &k) in m.iter().enumerate() {
        if k > 0 {
            b.final_tokens(places[p], k);
        }
    }
    b.build(LabelPolicy::SilentDuplicates).expect("generated net is well formed")
}

pub fn domains_for(dpn: &Dpn) -> FiniteDomains {
    dpn.variables.iter().fold(FiniteDomains::new(), |d, v| match v.sort {
        Sort::Bool => d.bools(&v.name),
        _ => d.with(&v.name, INT_DOMAIN.iter().map(|&k| Value::int(k))),
    })
}

fn random_value(rng: &mut ChaCha8Rng, sort: Sort) -> Value {
    match sort {
        Sort::Bool => Value::Bool(rng.gen_bool(0.5)),
        _ => Value::int(*INT_DOMAIN.choose(rng).unwrap()),
    }
}

pub fn random_trace(rng: &mut ChaCha8Rng, dpn: &Dpn, id: &str) -> LogTrace {
    let visible: Vec<String> = dpn.transitions.iter().filter(|t| !t.label.is_silent()).map(|t| t.label.to_string()).collect();
    let len = rng.gen_range(0..=4);
    let events = (0..len)
        .map(|_| {
            let activity = if visible.is_empty() || rng.gen_bool(0.15) { "z".to_string() } else { visible.choose(rng).unwrap().clone() };
            let mut assignment = Vec::new();
            for v in &dpn.variables {
                if rng.gen_bool(0.5) {
                    assignment.push((v.name.clone(), random_value(rng, v.sort)));
                }
            }
            Event::new(&activity, assignment)
        })
        .collect();
    LogTrace::new(id, events)
}

/// A random instance whose oracle terminates within the cap and finds a run.
pub fn random_instance(seed: u64) -> Option<Instance> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dpn = random_net(&mut rng);
    let trace = random_trace(&mut rng, &dpn, &format!("s{seed}"));
    let domains = domains_for(&dpn);
    match brute_force_optimal_capped(&dpn, &trace, PenaltyFunctions::Standard, &domains, MAX_LEN, ORACLE_CAP) {
        Ok(_) => Some(Instance { seed, dpn, trace, domains }),
        Err(OracleError::NoRun(_)) | Err(OracleError::CapExceeded(_)) => None,
        Err(e) => panic!("seed {seed}: {e}"),
    }
}

/// The first `count` usable instances starting at seed `from`.
pub fn suite(from: u64, count: usize) -> Vec<Instance> {
    (from..).filter_map(random_instance).take(count).collect()
}

/// Moves restricted integer values to another point of the same region.
pub fn region_variant(trace: &LogTrace, atoms: &AtomSet, id: &str) -> LogTrace {
    let shift = |v: &Value| match v {
        Value::Int(k) if *k < 0.into() => Value::Int(k - 4),
        Value::Int(k) if *k > 2.into() => Value::Int(k + 4),
        other => other.clone(),
    };
    let events = trace
        .events
        .iter()
        .map(|e| {
            let assignment = e
                .assignment
                .iter()
                .map(|(k, v)| (k.clone(), if atoms.restricted(k) { shift(v) } else { v.clone() }))
                .collect::<Vec<_>>();
            Event::new(&e.activity, assignment)
        })
        .collect();
    LogTrace::new(id, events)
}

/// Plain edit distance with unit insertions and deletions and no substitution.
pub fn indel_distance(a: &[&str], b: &[&str]) -> u64 {
    let mut d = vec![vec![0u64; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i as u64;
    }
    for j in 0..=b.len() {
        d[0][j] = j as u64;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let mut best = (d[i - 1][j] + 1).min(d[i][j - 1] + 1);
            if a[i - 1] == b[j - 1] {
                best = best.min(d[i - 1][j - 1]);
            }
            d[i][j] = best;
        }
    }
    d[a.len()][b.len()]
}

pub fn marking_of(v: &[u64]) -> Marking {
    Marking(v.to_vec())
}
