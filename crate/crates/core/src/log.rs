//! Events, log traces and event logs.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::model::Value;

/// An observed activity together with the (partial) variable assignment it carries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub activity: String,
    pub assignment: BTreeMap<String, Value>,
}

impl Event {
    pub fn new(activity: &str, assignment: impl IntoIterator<Item = (String, Value)>) -> Event {
        Event { activity: activity.to_string(), assignment: assignment.into_iter().collect() }
    }

    /// Shorthand for events with integer payloads, e.g. `Event::ints("a", &[("x", 2)])`.
    pub fn ints(activity: &str, pairs: &[(&str, i64)]) -> Event {
        Event::new(activity, pairs.iter().map(|&(k, v)| (k.to_string(), Value::int(v))))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogTrace {
    pub id: String,
    pub events: Vec<Event>,
}

impl LogTrace {
    pub fn new(id: &str, events: Vec<Event>) -> LogTrace {
        LogTrace { id: id.to_string(), events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn activities(&self) -> Vec<&str> {
        self.events.iter().map(|e| e.activity.as_str()).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    pub traces: Vec<LogTrace>,
}

impl EventLog {
    pub fn new(traces: Vec<LogTrace>) -> EventLog {
        EventLog { traces }
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }
}

/// One class of identical traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniqueTrace {
    /// First trace of the class in log order.
    pub trace: LogTrace,
    /// Identifiers of every trace in the class, representative first.
    pub members: Vec<String>,
}

impl UniqueTrace {
    pub fn count(&self) -> usize {
        self.members.len()
    }
}

/// Groups traces whose event sequences (activities and assignments) are
/// identical, preserving first-occurrence order.
pub fn dedupe(log: &EventLog) -> Vec<UniqueTrace> {
    let mut index: HashMap<&[Event], usize> = HashMap::new();
    let mut out: Vec<UniqueTrace> = Vec::new();
    for trace in &log.traces {
        match index.get(trace.events.as_slice()) {
            Some(&i) => out[i].members.push(trace.id.clone()),
            None => {
                index.insert(trace.events.as_slice(), out.len());
                out.push(UniqueTrace { trace: trace.clone(), members: vec![trace.id.clone()] });
            }
        }
    }
    out
}
