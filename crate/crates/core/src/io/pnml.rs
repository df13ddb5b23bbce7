//! PNML with the data extension used by ProM: a `variables` section,
//! `guard` attributes on transitions, `readVariable`/`writeVariable` children,
//! and a `finalmarkings` section.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use roxmltree::{Document, Node};

use super::{escape, location, parse_value, xml_error, ParseDiagnostics, ParseError, Parsed};
use crate::model::{Ann, Dpn, DpnBuilder, Guard, Label, LabelPolicy, Sort, Value};

#[derive(Debug, Clone, Default)]
pub struct PnmlOptions {
    pub policy: LabelPolicy,
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(name))
}

/// `<x><text>..</text></x>` or `<x>..</x>`.
fn text_of(node: Node<'_, '_>) -> Option<String> {
    match child(node, "text") {
        Some(t) => t.text().map(|s| s.trim().to_string()),
        None => node.text().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()),
    }
}

fn name_of(node: Node<'_, '_>) -> Option<String> {
    child(node, "name").and_then(text_of)
}

fn tokens(text: &str) -> Option<u64> {
    text.trim().parse().ok()
}

fn is_invisible(t: Node<'_, '_>) -> bool {
    let flag = |v: Option<&str>| v.is_some_and(|s| s.eq_ignore_ascii_case("true"));
    flag(t.attribute("invisible"))
        || t.children().any(|c| {
            c.has_tag_name("toolspecific") && (c.attribute("activity") == Some("$invisible$") || flag(c.attribute("invisible")))
        })
}

pub fn parse_pnml(text: &str, opts: &PnmlOptions) -> Result<Parsed<Dpn>, ParseError> {
    let doc = Document::parse(text).map_err(xml_error)?;
    let mut diag = ParseDiagnostics::default();
    let root = doc.root_element();
    let Some(net) = root.descendants().find(|n| n.has_tag_name("net")) else {
        diag.error(location(&doc, root), "no <net> element");
        return Err(ParseError(diag));
    };
    let loc = |n: Node<'_, '_>| location(&doc, n);
    let mut b = DpnBuilder::new(&name_of(net).or_else(|| net.attribute("id").map(str::to_string)).unwrap_or_default());

    // variables first: guards are checked against them
    let mut sorts: BTreeMap<String, Sort> = BTreeMap::new();
    for v in net.descendants().filter(|n| n.has_tag_name("variable")) {
        let Some(name) = name_of(v) else {
            diag.error(loc(v), "variable without a name");
            continue;
        };
        let ty = v.attribute("type").unwrap_or("");
        let sort = match ty.parse::<Sort>() {
            Ok(s) => s,
            Err(e) => {
                diag.error(loc(v), format!("variable `{name}`: {e}"));
                continue;
            }
        };
        b.variable(&name, sort);
        sorts.insert(name.clone(), sort);
        let initial = v.attribute("initialValue").map(str::to_string).or_else(|| child(v, "initialValue").and_then(text_of));
        if let Some(raw) = initial {
            match parse_value(sort, &raw) {
                Some(value) => b.initial_value(&name, value),
                None => diag.error(loc(v), format!("variable `{name}`: cannot read initial value `{raw}` as {sort}")),
            }
        }
    }

    let mut place_ix: HashMap<String, usize> = HashMap::new();
    let mut trans_ix: HashMap<String, usize> = HashMap::new();
    let structural = |n: &Node<'_, '_>| !n.ancestors().any(|a| a.has_tag_name("finalmarkings"));
    for p in net.descendants().filter(|n| n.has_tag_name("place") && structural(n)) {
        let Some(id) = p.attribute("id") else {
            diag.error(loc(p), "place without an id");
            continue;
        };
        let ix = b.named_place(id, &name_of(p).unwrap_or_else(|| id.to_string()));
        place_ix.insert(id.to_string(), ix);
        if let Some(m) = child(p, "initialMarking").and_then(text_of) {
            match tokens(&m) {
                Some(k) => b.initial_tokens(ix, k),
                None => diag.error(loc(p), format!("place `{id}`: bad initial marking `{m}`")),
            }
        }
    }

    for t in net.descendants().filter(|n| n.has_tag_name("transition")) {
        let Some(id) = t.attribute("id") else {
            diag.error(loc(t), "transition without an id");
            continue;
        };
        let label = if is_invisible(t) { Label::Silent } else { Label::activity(&name_of(t).unwrap_or_else(|| id.to_string())) };
        let guard_text = t.attribute("guard").map(str::to_string).or_else(|| child(t, "guard").and_then(text_of)).unwrap_or_default();
        let guard = match Guard::parse(&guard_text) {
            Ok(g) => g,
            Err(e) => {
                diag.error(loc(t), format!("transition `{id}`: {e}"));
                Guard::always()
            }
        };
        let ix = b.transition(id, label, guard);
        trans_ix.insert(id.to_string(), ix);
        for (tag, ann) in [("readVariable", Ann::Read), ("writeVariable", Ann::Write)] {
            for access in t.children().filter(|c| c.has_tag_name(tag)) {
                let var = access.text().unwrap_or("").trim();
                if sorts.contains_key(var) {
                    b.declare_access(ix, var, ann);
                } else {
                    diag.error(loc(access), format!("transition `{id}`: {tag} names undeclared variable `{var}`"));
                }
            }
        }
    }

    for a in net.descendants().filter(|n| n.has_tag_name("arc")) {
        let (Some(src), Some(dst)) = (a.attribute("source"), a.attribute("target")) else {
            diag.error(loc(a), "arc without source or target");
            continue;
        };
        let weight = match child(a, "inscription").and_then(text_of) {
            None => 1,
            Some(w) => match tokens(&w) {
                Some(k) => k,
                None => {
                    diag.error(loc(a), format!("arc {src} -> {dst}: bad inscription `{w}`"));
                    continue;
                }
            },
        };
        match (place_ix.get(src), trans_ix.get(dst), trans_ix.get(src), place_ix.get(dst)) {
            (Some(&p), Some(&t), _, _) => b.arc_in(p, t, weight),
            (_, _, Some(&t), Some(&p)) => b.arc_out(t, p, weight),
            _ => diag.error(loc(a), format!("arc {src} -> {dst} does not connect a place and a transition")),
        }
    }

    let finals = net.descendants().find(|n| n.has_tag_name("finalmarkings"));
    match finals.and_then(|f| f.children().find(|c| c.has_tag_name("marking"))) {
        None => diag.error(loc(net), "missing final marking (<finalmarkings>)"),
        Some(m) => {
            for p in m.children().filter(|c| c.has_tag_name("place")) {
                let id = p.attribute("idref").unwrap_or("");
                let Some(&ix) = place_ix.get(id) else {
                    diag.error(loc(p), format!("final marking names unknown place `{id}`"));
                    continue;
                };
                match text_of(p).as_deref().map(tokens) {
                    Some(Some(k)) => b.final_tokens(ix, k),
                    None => b.final_tokens(ix, 1),
                    Some(None) => diag.error(loc(p), format!("final marking of `{id}` is not a number")),
                }
            }
        }
    }

    if !diag.errors.is_empty() {
        return Err(ParseError(diag));
    }
    match b.build(opts.policy) {
        Ok(dpn) => Ok(Parsed { value: dpn, warnings: diag.warnings }),
        Err(e) => {
            diag.error(loc(net), e.to_string());
            Err(ParseError(diag))
        }
    }
}

fn java_type(sort: Sort) -> &'static str {
    match sort {
        Sort::Bool => "java.lang.Boolean",
        Sort::Int => "java.lang.Long",
        Sort::Rat => "java.lang.Double",
        Sort::String => "java.lang.String",
    }
}

fn literal(v: &Value) -> String {
    match v {
        Value::Str(s) => s.to_string(),
        Value::Rat(r) => crate::model::value::format_rational(r),
        other => other.to_string(),
    }
}

/// Serializes a net in the dialect accepted by [`parse_pnml`].
pub fn write_pnml(dpn: &Dpn) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(out, "<pnml>");
    let _ = writeln!(out, "  <net id=\"net\" type=\"http://www.pnml.org/version-2009/grammar/pnmlcoremodel\">");
    let _ = writeln!(out, "    <name><text>{}</text></name>", escape(&dpn.name));
    let _ = writeln!(out, "    <page id=\"page\">");
    for (i, p) in dpn.places.iter().enumerate() {
        let _ = write!(out, "      <place id=\"{}\"><name><text>{}</text></name>", escape(&p.id), escape(&p.name));
        if dpn.initial_marking.0[i] > 0 {
            let _ = write!(out, "<initialMarking><text>{}</text></initialMarking>", dpn.initial_marking.0[i]);
        }
        let _ = writeln!(out, "</place>");
    }
    for t in &dpn.transitions {
        let name = match &t.label {
            Label::Silent => t.id.clone(),
            Label::Activity(a) => a.clone(),
        };
        let _ = write!(out, "      <transition id=\"{}\" guard=\"{}\"", escape(&t.id), escape(&t.guard.to_string()));
        if t.label.is_silent() {
            out.push_str(" invisible=\"true\"");
        }
        let _ = writeln!(out, ">");
        let _ = writeln!(out, "        <name><text>{}</text></name>", escape(&name));
        for v in t.reads() {
            let _ = writeln!(out, "        <readVariable>{}</readVariable>", escape(v));
        }
        for v in t.writes() {
            let _ = writeln!(out, "        <writeVariable>{}</writeVariable>", escape(v));
        }
        let _ = writeln!(out, "      </transition>");
    }
    let mut arc = 0;
    for t in &dpn.transitions {
        for &(p, w) in &t.pre {
            arc += 1;
            let _ = writeln!(
                out,
                "      <arc id=\"arc{arc}\" source=\"{}\" target=\"{}\"><inscription><text>{w}</text></inscription></arc>",
                escape(&dpn.places[p].id),
                escape(&t.id)
            );
        }
        for &(p, w) in &t.post {
            arc += 1;
            let _ = writeln!(
                out,
                "      <arc id=\"arc{arc}\" source=\"{}\" target=\"{}\"><inscription><text>{w}</text></inscription></arc>",
                escape(&t.id),
                escape(&dpn.places[p].id)
            );
        }
    }
    let _ = writeln!(out, "    </page>");
    let _ = writeln!(out, "    <finalmarkings>\n      <marking>");
    for (i, p) in dpn.places.iter().enumerate() {
        let k = dpn.final_marking.0[i];
        if k > 0 {
            let _ = writeln!(out, "        <place idref=\"{}\"><text>{k}</text></place>", escape(&p.id));
        }
    }
    let _ = writeln!(out, "      </marking>\n    </finalmarkings>");
    if !dpn.variables.is_empty() {
        let _ = writeln!(out, "    <variables>");
        for v in &dpn.variables {
            let init = &dpn.initial_assignment[&v.name];
            let _ = writeln!(
                out,
                "      <variable type=\"{}\"><name>{}</name><initialValue>{}</initialValue></variable>",
                java_type(v.sort),
                escape(&v.name),
                escape(&literal(init))
            );
        }
        let _ = writeln!(out, "    </variables>");
    }
    let _ = writeln!(out, "  </net>\n</pnml>");
    out
}

/// Overrides the initial value of a declared variable from its textual form.
pub fn set_initial_value(dpn: &mut Dpn, var: &str, text: &str) -> Result<(), String> {
    let sort = dpn.sort_of(var).ok_or_else(|| format!("unknown variable `{var}`"))?;
    let value = parse_value(sort, text).ok_or_else(|| format!("cannot read `{text}` as {sort}"))?;
    dpn.initial_assignment.insert(var.to_string(), value);
    Ok(())
}
