//! Control-flow-only exploration of the marking graph (guards ignored).

use std::collections::{BTreeSet, HashSet, VecDeque};

use super::dpn::{Dpn, Marking, ModelError};

/// Bounds on the explicit marking exploration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExplorationLimits {
    /// Maximum number of distinct markings visited.
    pub max_markings: usize,
}

impl Default for ExplorationLimits {
    fn default() -> Self {
        ExplorationLimits { max_markings: 100_000 }
    }
}

/// Per-step over-approximation of what a run can do at each instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachableSets {
    /// `steps[i]` holds the transitions that may fire as the `(i+1)`-th step.
    pub steps: Vec<BTreeSet<usize>>,
    /// `writes[i]` holds the variables possibly written by step `i+1`.
    pub writes: Vec<BTreeSet<String>>,
    /// False when the exploration hit a cap and every set is "all transitions".
    pub exact: bool,
    /// True when every marking reachable within the horizon, and the final
    /// marking, has at most one token per place.
    pub one_bounded: bool,
}

/// Cap on tokens per place during exploration.
fn token_cap(dpn: &Dpn) -> u64 {
    let max_marking = dpn
        .initial_marking
        .0
        .iter()
        .chain(&dpn.final_marking.0)
        .copied()
        .max()
        .unwrap_or(0);
    2 * max_marking.max(dpn.max_arc_weight()).max(1)
}

/// Layered forward exploration up to `horizon` steps. Step `i` collects the
/// transitions control-enabled in some marking reachable in exactly `i-1` steps.
/// Falls back to all transitions at every step when a cap is hit.
pub fn reachable_transition_sets(dpn: &Dpn, horizon: usize) -> ReachableSets {
    reachable_transition_sets_with(dpn, horizon, ExplorationLimits::default())
}

pub fn reachable_transition_sets_with(
    dpn: &Dpn,
    horizon: usize,
    limits: ExplorationLimits,
) -> ReachableSets {
    let cap = token_cap(dpn);
    let mut seen: HashSet<Marking> = HashSet::new();
    let mut layer: HashSet<Marking> = HashSet::from([dpn.initial_marking.clone()]);
    seen.insert(dpn.initial_marking.clone());
    let mut steps = Vec::with_capacity(horizon);
    let mut one_bounded = dpn.initial_marking.0.iter().chain(&dpn.final_marking.0).all(|&k| k <= 1);
    let mut truncated = false;

    'outer: for _ in 0..horizon {
        let mut fireable = BTreeSet::new();
        let mut next: HashSet<Marking> = HashSet::new();
        for m in &layer {
            for t in 0..dpn.transitions.len() {
                if !dpn.control_enabled(m, t) {
                    continue;
                }
                fireable.insert(t);
                let succ = dpn.control_fire(m, t);
                if succ.0.iter().any(|&k| k > cap) {
                    truncated = true;
                    break 'outer;
                }
                if succ.0.iter().any(|&k| k > 1) {
                    one_bounded = false;
                }
                seen.insert(succ.clone());
                if seen.len() > limits.max_markings {
                    truncated = true;
                    break 'outer;
                }
                next.insert(succ);
            }
        }
        steps.push(fireable);
        layer = next;
    }

    if truncated {
        let all: BTreeSet<usize> = (0..dpn.transitions.len()).collect();
        let all_writes = writes_of(dpn, &all);
        return ReachableSets {
            steps: vec![all; horizon],
            writes: vec![all_writes; horizon],
            exact: false,
            one_bounded: false,
        };
    }
    let writes = steps.iter().map(|s| writes_of(dpn, s)).collect();
    ReachableSets { steps, writes, exact: true, one_bounded }
}

fn writes_of(dpn: &Dpn, ts: &BTreeSet<usize>) -> BTreeSet<String> {
    ts.iter().flat_map(|&t| dpn.transitions[t].writes().iter().cloned()).collect()
}

/// Length of the shortest control-flow firing sequence from the initial to the
/// final marking.
pub fn shortest_final_distance(dpn: &Dpn) -> Result<usize, ModelError> {
    shortest_final_distance_with(dpn, ExplorationLimits::default())
}

pub fn shortest_final_distance_with(dpn: &Dpn, limits: ExplorationLimits) -> Result<usize, ModelError> {
    let cap = token_cap(dpn);
    let mut seen: HashSet<Marking> = HashSet::from([dpn.initial_marking.clone()]);
    let mut queue = VecDeque::from([(dpn.initial_marking.clone(), 0usize)]);
    let mut truncated = false;
    while let Some((m, d)) = queue.pop_front() {
        if m == dpn.final_marking {
            return Ok(d);
        }
        for t in 0..dpn.transitions.len() {
            if !dpn.control_enabled(&m, t) {
                continue;
            }
            let succ = dpn.control_fire(&m, t);
            if succ.0.iter().any(|&k| k > cap) || seen.len() >= limits.max_markings {
                truncated = true;
                continue;
            }
            if seen.insert(succ.clone()) {
                queue.push_back((succ, d + 1));
            }
        }
    }
    Err(ModelError::NoPathToFinal(if truncated {
        " within the exploration cap; pass an explicit bound".to_string()
    } else {
        String::new()
    }))
}
