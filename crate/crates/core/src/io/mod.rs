//! Reading nets (PNML) and logs (XES), and writing result reports.

pub mod pnml;
pub mod report;
pub mod xes;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::model::value::parse_decimal;
use crate::model::{Sort, Value};

pub use pnml::{parse_pnml, write_pnml, PnmlOptions};
pub use report::{write_report, ReportFormat, ReportRow};
pub use xes::{parse_xes, write_xes};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub location: Option<Location>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.location {
            Some(l) => write!(f, "{l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Warnings and errors collected while reading a document. Parsing
/// succeeded iff `errors` is empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseDiagnostics {
    pub warnings: Vec<Diagnostic>,
    pub errors: Vec<Diagnostic>,
}

impl ParseDiagnostics {
    fn error(&mut self, location: Option<Location>, message: impl Into<String>) {
        self.errors.push(Diagnostic { location, message: message.into() });
    }

    fn warn(&mut self, location: Option<Location>, message: impl Into<String>) {
        self.warnings.push(Diagnostic { location, message: message.into() });
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError(pub ParseDiagnostics);

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.errors.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// A successfully parsed document and its warnings.
#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<Diagnostic>,
}

fn location(doc: &roxmltree::Document<'_>, node: roxmltree::Node<'_, '_>) -> Option<Location> {
    let pos = doc.text_pos_at(node.range().start);
    Some(Location { line: pos.row, column: pos.col })
}

fn xml_error(e: roxmltree::Error) -> ParseError {
    let pos = e.pos();
    let mut d = ParseDiagnostics::default();
    d.error(Some(Location { line: pos.row, column: pos.col }), e.to_string());
    ParseError(d)
}

/// Reads a literal of the given sort: integers, decimals (exactly), `true`/`false`, or raw text.
pub fn parse_value(sort: Sort, text: &str) -> Option<Value> {
    let t = text.trim();
    match sort {
        Sort::Bool => match t.to_ascii_lowercase().as_str() {
            "true" => Some(Value::Bool(true)),
            "false" => Some(Value::Bool(false)),
            _ => None,
        },
        Sort::Int => t.parse::<BigInt>().ok().map(Value::Int).or_else(|| parse_decimal(t).and_then(|r| Value::Rat(r).coerce(Sort::Int))),
        Sort::Rat => match t.split_once('/') {
            Some((n, d)) => {
                let (n, d) = (n.trim().parse::<BigInt>().ok()?, d.trim().parse::<BigInt>().ok()?);
                (d != BigInt::from(0)).then(|| Value::Rat(BigRational::new(n, d)))
            }
            None => parse_decimal(t).map(Value::Rat),
        },
        Sort::String => Some(Value::Str(text.into())),
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}
