use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::guard::{Ann, AnnVar, Guard, GuardError};
use super::value::{Sort, Value};

/// Transition label: an activity name or the silent marker.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Silent,
    Activity(String),
}

impl Label {
    pub fn activity(name: &str) -> Label {
        Label::Activity(name.to_string())
    }

    pub fn is_silent(&self) -> bool {
        matches!(self, Label::Silent)
    }

    pub fn matches(&self, activity: &str) -> bool {
        matches!(self, Label::Activity(a) if a == activity)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Silent => f.write_str("τ"),
            Label::Activity(a) => f.write_str(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Place {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub sort: Sort,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub id: String,
    pub label: Label,
    pub guard: Guard,
    reads: BTreeSet<String>,
    writes: BTreeSet<String>,
    /// Input places with arc multiplicities, sorted by place index.
    pub pre: Vec<(usize, u64)>,
    /// Output places with arc multiplicities, sorted by place index.
    pub post: Vec<(usize, u64)>,
}

impl Transition {
    /// Variables read by the transition: those occurring as `v^r` in the guard,
    /// plus any read declared explicitly by the model file.
    pub fn reads(&self) -> &BTreeSet<String> {
        &self.reads
    }

    /// Variables written by the transition: those occurring as `v^w` in the
    /// guard, plus any write declared explicitly by the model file.
    pub fn writes(&self) -> &BTreeSet<String> {
        &self.writes
    }

    pub fn pre_weight(&self, place: usize) -> u64 {
        self.pre.iter().find(|(p, _)| *p == place).map_or(0, |(_, w)| *w)
    }

    pub fn post_weight(&self, place: usize) -> u64 {
        self.post.iter().find(|(p, _)| *p == place).map_or(0, |(_, w)| *w)
    }
}

/// Token counts indexed by place.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Marking(pub Vec<u64>);

impl Marking {
    pub fn empty(places: usize) -> Marking {
        Marking(vec![0; places])
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn get(&self, place: usize) -> u64 {
        self.0[place]
    }
}

/// Total assignment of values to process variables.
pub type Assignment = BTreeMap<String, Value>;

/// Partial assignment to annotated variables (`β`).
pub type Beta = BTreeMap<AnnVar, Value>;

/// A DPN state: marking plus total variable assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub marking: Marking,
    pub assignment: Assignment,
}

/// A transition firing `(t, β)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Firing {
    pub transition: usize,
    pub beta: Beta,
}

impl Firing {
    pub fn new(transition: usize, beta: impl IntoIterator<Item = (AnnVar, Value)>) -> Firing {
        Firing { transition, beta: beta.into_iter().collect() }
    }

    pub fn written(&self, var: &str) -> Option<&Value> {
        self.beta.get(&AnnVar { name: var.to_string(), ann: Ann::Write })
    }
}

/// A sequence of transition firings.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProcessRun {
    pub firings: Vec<Firing>,
}

impl ProcessRun {
    pub fn new(firings: Vec<Firing>) -> ProcessRun {
        ProcessRun { firings }
    }

    pub fn len(&self) -> usize {
        self.firings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.firings.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("a net needs at least one place and one transition")]
    Empty,
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("transition `{transition}`: {source}")]
    Guard { transition: String, source: GuardError },
    #[error("label `{0}` is used by more than one transition")]
    LabelNotInjective(String),
    #[error("initial value for `{var}` has sort {found}, expected {expected}")]
    InitialSort { var: String, expected: Sort, found: Sort },
    #[error("initial value given for undeclared variable `{0}`")]
    UnknownVariable(String),
    #[error("firing of `{0}` is not enabled")]
    NotEnabled(String),
    #[error("no control-flow path from the initial to the final marking{0}")]
    NoPathToFinal(String),
}

/// How strictly transition labels must be injective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelPolicy {
    /// Every label, including the silent one, occurs at most once.
    #[default]
    Strict,
    /// Activity labels are unique; any number of silent transitions is allowed.
    SilentDuplicates,
}

/// A data Petri net with initial and final markings and an initial assignment.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dpn {
    pub name: String,
    pub places: Vec<Place>,
    pub transitions: Vec<Transition>,
    pub variables: Vec<VarDecl>,
    pub initial_marking: Marking,
    pub final_marking: Marking,
    pub initial_assignment: Assignment,
}

impl Dpn {
    pub fn sort_of(&self, var: &str) -> Option<Sort> {
        self.variables.iter().find(|v| v.name == var).map(|v| v.sort)
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.places.iter().position(|p| p.id == id)
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.id == id)
    }

    /// Transitions carrying the given activity label.
    pub fn transitions_labelled<'a>(&'a self, activity: &'a str) -> impl Iterator<Item = usize> + 'a {
        self.transitions
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.label.matches(activity))
            .map(|(i, _)| i)
    }

    /// Largest arc multiplicity in the net.
    pub fn max_arc_weight(&self) -> u64 {
        self.transitions
            .iter()
            .flat_map(|t| t.pre.iter().chain(&t.post).map(|(_, w)| *w))
            .max()
            .unwrap_or(0)
    }

    pub fn initial_state(&self) -> State {
        State { marking: self.initial_marking.clone(), assignment: self.initial_assignment.clone() }
    }

    /// Whether the input places of `t` carry enough tokens (data ignored).
    pub fn control_enabled(&self, marking: &Marking, t: usize) -> bool {
        self.transitions[t].pre.iter().all(|&(p, w)| marking.0[p] >= w)
    }

    /// Token game only; the caller must ensure `control_enabled`.
    pub fn control_fire(&self, marking: &Marking, t: usize) -> Marking {
        let mut next = marking.clone();
        let tr = &self.transitions[t];
        for &(p, w) in &tr.pre {
            next.0[p] -= w;
        }
        for &(p, w) in &tr.post {
            next.0[p] += w;
        }
        next
    }

    /// The firing's assignment extended with the read values taken from `state`.
    /// Returns `None` if β is not sort-correct, mentions annotated variables the
    /// transition does not read or write, contradicts the state on a read, or
    /// leaves a written variable undefined.
    pub fn complete_beta(&self, state: &State, firing: &Firing) -> Option<Beta> {
        let t = self.transitions.get(firing.transition)?;
        for (av, value) in &firing.beta {
            let allowed = match av.ann {
                Ann::Read => t.reads.contains(&av.name),
                Ann::Write => t.writes.contains(&av.name),
            };
            if !allowed || self.sort_of(&av.name) != Some(value.sort()) {
                return None;
            }
        }
        let mut beta = firing.beta.clone();
        for v in &t.reads {
            let current = state.assignment.get(v)?;
            match beta.get(&AnnVar::read(v)) {
                Some(given) if given != current => return None,
                Some(_) => {}
                None => {
                    beta.insert(AnnVar::read(v), current.clone());
                }
            }
        }
        if t.writes.iter().any(|v| !beta.contains_key(&AnnVar::write(v))) {
            return None;
        }
        Some(beta)
    }

    /// Enabledness of a firing in a state: reads agree with the state, the
    /// guard holds, and every input place holds at least the arc weight.
    pub fn enabled(&self, state: &State, firing: &Firing) -> bool {
        let Some(beta) = self.complete_beta(state, firing) else {
            return false;
        };
        let t = &self.transitions[firing.transition];
        let guard_ok = eval_guard(&t.guard, &beta).unwrap_or(false);
        guard_ok && self.control_enabled(&state.marking, firing.transition)
    }

    pub fn fire(&self, state: &State, firing: &Firing) -> Result<State, ModelError> {
        if !self.enabled(state, firing) {
            let id = self.transitions.get(firing.transition).map_or("?", |t| t.id.as_str());
            return Err(ModelError::NotEnabled(id.to_string()));
        }
        let t = &self.transitions[firing.transition];
        let marking = self.control_fire(&state.marking, firing.transition);
        let mut assignment = state.assignment.clone();
        for v in &t.writes {
            let value = firing.beta[&AnnVar::write(v)].clone();
            assignment.insert(v.clone(), value);
        }
        Ok(State { marking, assignment })
    }

    /// Replays `run` from the initial state and returns every intermediate
    /// state (initial state first).
    pub fn replay(&self, run: &ProcessRun) -> Result<Vec<State>, ModelError> {
        let mut states = vec![self.initial_state()];
        for f in &run.firings {
            let next = self.fire(states.last().unwrap(), f)?;
            states.push(next);
        }
        Ok(states)
    }

    /// Whether `run` replays from the initial state and ends in the final marking.
    pub fn validate_run(&self, run: &ProcessRun) -> bool {
        match self.replay(run) {
            Ok(states) => states.last().unwrap().marking == self.final_marking,
            Err(_) => false,
        }
    }
}

/// Evaluates a guard under a (completed) transition assignment.
pub fn eval_guard(guard: &Guard, beta: &Beta) -> Result<bool, GuardError> {
    guard.eval(&|v| beta.get(v).cloned())
}

struct PendingTransition {
    id: String,
    label: Label,
    guard: Guard,
    extra_reads: BTreeSet<String>,
    extra_writes: BTreeSet<String>,
}

/// Incremental construction of a [`Dpn`]; validation happens in [`DpnBuilder::build`].
#[derive(Default)]
pub struct DpnBuilder {
    name: String,
    places: Vec<Place>,
    transitions: Vec<PendingTransition>,
    arcs: Vec<(ArcEnd, ArcEnd, u64)>,
    variables: Vec<VarDecl>,
    initial: BTreeMap<usize, u64>,
    final_: BTreeMap<usize, u64>,
    initial_values: Vec<(String, Value)>,
}

#[derive(Clone, Copy)]
enum ArcEnd {
    Place(usize),
    Transition(usize),
}

impl DpnBuilder {
    pub fn new(name: &str) -> Self {
        DpnBuilder { name: name.to_string(), ..Default::default() }
    }

    pub fn place(&mut self, id: &str) -> usize {
        self.places.push(Place { id: id.to_string(), name: id.to_string() });
        self.places.len() - 1
    }

    pub fn named_place(&mut self, id: &str, name: &str) -> usize {
        self.places.push(Place { id: id.to_string(), name: name.to_string() });
        self.places.len() - 1
    }

    pub fn transition(&mut self, id: &str, label: Label, guard: Guard) -> usize {
        self.transitions.push(PendingTransition {
            id: id.to_string(),
            label,
            guard,
            extra_reads: BTreeSet::new(),
            extra_writes: BTreeSet::new(),
        });
        self.transitions.len() - 1
    }

    /// Declares that `t` reads/writes `var` even if the guard does not mention it.
    pub fn declare_access(&mut self, t: usize, var: &str, ann: Ann) {
        let pending = &mut self.transitions[t];
        match ann {
            Ann::Read => pending.extra_reads.insert(var.to_string()),
            Ann::Write => pending.extra_writes.insert(var.to_string()),
        };
    }

    pub fn arc_in(&mut self, place: usize, t: usize, weight: u64) {
        self.arcs.push((ArcEnd::Place(place), ArcEnd::Transition(t), weight));
    }

    pub fn arc_out(&mut self, t: usize, place: usize, weight: u64) {
        self.arcs.push((ArcEnd::Transition(t), ArcEnd::Place(place), weight));
    }

    pub fn variable(&mut self, name: &str, sort: Sort) {
        self.variables.push(VarDecl { name: name.to_string(), sort });
    }

    pub fn initial_value(&mut self, name: &str, value: Value) {
        self.initial_values.push((name.to_string(), value));
    }

    pub fn initial_tokens(&mut self, place: usize, tokens: u64) {
        self.initial.insert(place, tokens);
    }

    pub fn final_tokens(&mut self, place: usize, tokens: u64) {
        self.final_.insert(place, tokens);
    }

    pub fn build(self, policy: LabelPolicy) -> Result<Dpn, ModelError> {
        if self.places.is_empty() || self.transitions.is_empty() {
            return Err(ModelError::Empty);
        }
        let mut ids = HashMap::new();
        for id in self.places.iter().map(|p| &p.id).chain(self.transitions.iter().map(|t| &t.id)) {
            if ids.insert(id.clone(), ()).is_some() {
                return Err(ModelError::DuplicateId(id.clone()));
            }
        }
        let mut sorts: BTreeMap<String, Sort> = BTreeMap::new();
        for v in &self.variables {
            if sorts.insert(v.name.clone(), v.sort).is_some() {
                return Err(ModelError::DuplicateVariable(v.name.clone()));
            }
        }

        let mut seen_labels: BTreeSet<&Label> = BTreeSet::new();
        for t in &self.transitions {
            let duplicate = !seen_labels.insert(&t.label);
            if duplicate && !(policy == LabelPolicy::SilentDuplicates && t.label.is_silent()) {
                return Err(ModelError::LabelNotInjective(t.label.to_string()));
            }
        }

        let sort_of = |v: &str| sorts.get(v).copied();
        let mut transitions = Vec::with_capacity(self.transitions.len());
        for t in self.transitions {
            let wrap = |source| ModelError::Guard { transition: t.id.clone(), source };
            let sort = t.guard.expr.check(&sort_of).map_err(wrap)?;
            if sort != Sort::Bool {
                return Err(wrap(GuardError::IllSorted(format!("guard has sort {sort}"))));
            }
            let mut reads = t.extra_reads;
            let mut writes = t.extra_writes;
            for v in reads.iter().chain(writes.iter()) {
                if !sorts.contains_key(v) {
                    return Err(wrap(GuardError::Undeclared(v.clone())));
                }
            }
            for av in t.guard.vars() {
                match av.ann {
                    Ann::Read => reads.insert(av.name),
                    Ann::Write => writes.insert(av.name),
                };
            }
            transitions.push(Transition {
                id: t.id,
                label: t.label,
                guard: t.guard,
                reads,
                writes,
                pre: Vec::new(),
                post: Vec::new(),
            });
        }

        for (from, to, w) in self.arcs {
            match (from, to) {
                (ArcEnd::Place(p), ArcEnd::Transition(t)) => add_weight(&mut transitions[t].pre, p, w),
                (ArcEnd::Transition(t), ArcEnd::Place(p)) => add_weight(&mut transitions[t].post, p, w),
                _ => unreachable!("arcs always connect a place and a transition"),
            }
        }
        for t in &mut transitions {
            t.pre.retain(|(_, w)| *w > 0);
            t.post.retain(|(_, w)| *w > 0);
            t.pre.sort();
            t.post.sort();
        }

        let mut initial_assignment: Assignment =
            self.variables.iter().map(|v| (v.name.clone(), v.sort.default_value())).collect();
        for (name, value) in self.initial_values {
            let Some(&expected) = sorts.get(&name) else {
                return Err(ModelError::UnknownVariable(name));
            };
            let value = value.coerce(expected).ok_or(ModelError::InitialSort {
                var: name.clone(),
                expected,
                found: value.sort(),
            })?;
            initial_assignment.insert(name, value);
        }

        let n = self.places.len();
        let to_marking = |m: &BTreeMap<usize, u64>| {
            let mut out = Marking::empty(n);
            for (&p, &k) in m {
                out.0[p] = k;
            }
            out
        };
        Ok(Dpn {
            name: self.name,
            initial_marking: to_marking(&self.initial),
            final_marking: to_marking(&self.final_),
            places: self.places,
            transitions,
            variables: self.variables,
            initial_assignment,
        })
    }
}

fn add_weight(arcs: &mut Vec<(usize, u64)>, place: usize, w: u64) {
    match arcs.iter_mut().find(|(p, _)| *p == place) {
        Some(entry) => entry.1 += w,
        None => arcs.push((place, w)),
    }
}
