//! XES event logs. Only `concept:name` and attributes whose key is a declared
//! net variable are kept.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use roxmltree::{Document, Node};

use super::{escape, location, parse_value, xml_error, ParseDiagnostics, ParseError, Parsed};
use crate::log::{Event, EventLog, LogTrace};
use crate::model::{Dpn, Sort, Value};

const NAME: &str = "concept:name";

fn attr_sort(tag: &str) -> Option<Sort> {
    match tag {
        "int" => Some(Sort::Int),
        "float" => Some(Sort::Rat),
        "boolean" => Some(Sort::Bool),
        "string" | "id" => Some(Sort::String),
        _ => None,
    }
}

fn name_attr(node: Node<'_, '_>) -> Option<String> {
    node.children()
        .find(|c| c.is_element() && c.attribute("key") == Some(NAME))
        .and_then(|c| c.attribute("value"))
        .map(str::to_string)
}

/// Reads the traces of an XES document. Trace ids default to the 1-based position.
pub fn parse_xes(text: &str, dpn: &Dpn) -> Result<Parsed<EventLog>, ParseError> {
    let doc = Document::parse(text).map_err(xml_error)?;
    let mut diag = ParseDiagnostics::default();
    let mut ignored: BTreeSet<String> = BTreeSet::new();
    let mut traces = Vec::new();
    for (ti, t) in doc.root_element().children().filter(|c| c.has_tag_name("trace")).enumerate() {
        let id = name_attr(t).unwrap_or_else(|| (ti + 1).to_string());
        let mut events = Vec::new();
        for (ei, e) in t.children().filter(|c| c.has_tag_name("event")).enumerate() {
            let Some(activity) = name_attr(e) else {
                diag.error(location(&doc, e), format!("trace `{id}`, event {}: no {NAME}", ei + 1));
                continue;
            };
            let mut assignment = Vec::new();
            for a in e.children().filter(|c| c.is_element()) {
                let (Some(key), Some(raw)) = (a.attribute("key"), a.attribute("value")) else {
                    continue;
                };
                if key == NAME {
                    continue;
                }
                let Some(declared) = dpn.sort_of(key) else {
                    if ignored.insert(key.to_string()) && !key.contains(':') {
                        diag.warn(location(&doc, a), format!("attribute `{key}` is not a net variable; ignored"));
                    }
                    continue;
                };
                let found = attr_sort(a.tag_name().name());
                let value = found.and_then(|s| parse_value(s, raw)).and_then(|v| v.coerce(declared));
                match value {
                    Some(v) => assignment.push((key.to_string(), v)),
                    None => diag.error(
                        location(&doc, a),
                        format!(
                            "trace `{id}`, event {} ({activity}): `{key}` is <{}> `{raw}`, expected {declared}",
                            ei + 1,
                            a.tag_name().name()
                        ),
                    ),
                }
            }
            events.push(Event::new(&activity, assignment));
        }
        traces.push(LogTrace::new(&id, events));
    }
    if !diag.errors.is_empty() {
        return Err(ParseError(diag));
    }
    Ok(Parsed { value: EventLog::new(traces), warnings: diag.warnings })
}

fn attribute(out: &mut String, indent: &str, key: &str, v: &Value) {
    let (tag, text) = match v {
        Value::Bool(b) => ("boolean", b.to_string()),
        Value::Int(k) => ("int", k.to_string()),
        Value::Rat(r) => ("float", crate::model::value::format_rational(r)),
        Value::Str(s) => ("string", s.to_string()),
    };
    let _ = writeln!(out, "{indent}<{tag} key=\"{}\" value=\"{}\"/>", escape(key), escape(&text));
}

/// Serializes a log. Rationals without a finite decimal expansion are written as `n/d`.
pub fn write_xes(log: &EventLog) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<log xes.version=\"1.0\">\n");
    for t in &log.traces {
        out.push_str("  <trace>\n");
        attribute(&mut out, "    ", NAME, &Value::str(&t.id));
        for e in &t.events {
            out.push_str("    <event>\n");
            attribute(&mut out, "      ", NAME, &Value::str(&e.activity));
            for (k, v) in &e.assignment {
                attribute(&mut out, "      ", k, v);
            }
            out.push_str("    </event>\n");
        }
        out.push_str("  </trace>\n");
    }
    out.push_str("</log>\n");
    out
}
