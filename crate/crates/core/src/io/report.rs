//! Per-trace result reports in CSV or JSON.

use std::io::Write;
use std::str::FromStr;
use std::time::Duration;

use serde::Serialize;

use crate::align::{format_event, format_firing};
use crate::cost::Alignment;
use crate::model::Dpn;

pub const TIMEOUT: &str = "TIMEOUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

/// Outcome for one unique trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRow {
    pub trace_id: String,
    /// Ids of all original traces identical to this one.
    pub members: Vec<String>,
    pub cluster: usize,
    /// Optimal cost; with `timed_out` set, an upper bound if present.
    pub cost: Option<u64>,
    pub timed_out: bool,
    /// The alignment was transferred from the cluster representative.
    pub transferred: bool,
    pub solve_time: Duration,
    pub encode_time: Duration,
    pub alignment: Option<Alignment>,
}

impl ReportRow {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }

    pub fn cost_field(&self) -> String {
        match (self.timed_out, self.cost) {
            (false, Some(c)) => c.to_string(),
            _ => TIMEOUT.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Summary {
    pub traces: usize,
    pub unique: usize,
    pub clusters: usize,
    pub solved: usize,
    pub timed_out: usize,
    /// Sum of optimal costs over all original traces.
    pub total_cost: u64,
    pub mean_cost: f64,
    pub max_cost: u64,
    pub parse_seconds: f64,
    pub encode_seconds: f64,
    pub solve_seconds: f64,
    pub wall_seconds: f64,
}

#[derive(Serialize)]
struct MoveRow {
    log: Option<String>,
    model: Option<String>,
    #[serde(rename = "move")]
    kind: &'static str,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    trace_id: &'a str,
    members: &'a [String],
    multiplicity: usize,
    cluster: usize,
    cost: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper_bound: Option<u64>,
    transferred: bool,
    solve_seconds: f64,
    encode_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    alignment: Option<Vec<MoveRow>>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<&'a Summary>,
    traces: Vec<JsonRow<'a>>,
}

fn move_rows(dpn: &Dpn, a: &Alignment) -> Vec<MoveRow> {
    a.moves
        .iter()
        .map(|m| MoveRow { log: m.event().map(format_event), model: m.firing().map(|f| format_firing(dpn, f)), kind: m.kind() })
        .collect()
}

/// CSV columns: trace id, multiplicity, cluster, cost (or `TIMEOUT`), solve and
/// encode time in seconds. JSON adds member ids, an optional summary and, when
/// `verbose`, each alignment as rows of log event, model firing and move kind.
pub fn write_report(
    rows: &[ReportRow],
    dpn: &Dpn,
    format: ReportFormat,
    verbose: bool,
    summary: Option<&Summary>,
    sink: &mut dyn Write,
) -> std::io::Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(["trace_id", "multiplicity", "cluster", "cost", "solve_seconds", "encode_seconds"])?;
            for r in rows {
                w.write_record([
                    r.trace_id.clone(),
                    r.multiplicity().to_string(),
                    r.cluster.to_string(),
                    r.cost_field(),
                    format!("{:.6}", r.solve_time.as_secs_f64()),
                    format!("{:.6}", r.encode_time.as_secs_f64()),
                ])?;
            }
            w.flush()
        }
        ReportFormat::Json => {
            let traces = rows
                .iter()
                .map(|r| JsonRow {
                    trace_id: &r.trace_id,
                    members: &r.members,
                    multiplicity: r.multiplicity(),
                    cluster: r.cluster,
                    cost: match (r.timed_out, r.cost) {
                        (false, Some(c)) => c.into(),
                        _ => TIMEOUT.into(),
                    },
                    upper_bound: if r.timed_out { r.cost } else { None },
                    transferred: r.transferred,
                    solve_seconds: r.solve_time.as_secs_f64(),
                    encode_seconds: r.encode_time.as_secs_f64(),
                    alignment: if verbose { r.alignment.as_ref().map(|a| move_rows(dpn, a)) } else { None },
                })
                .collect();
            serde_json::to_writer_pretty(&mut *sink, &JsonReport { summary, traces })?;
            writeln!(sink)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::Move;
    use crate::fixtures::running_example;
    use crate::log::Event;

    fn row(id: &str, cost: Option<u64>, timed_out: bool) -> ReportRow {
        ReportRow {
            trace_id: id.into(),
            members: vec![id.into(), format!("{id}-copy")],
            cluster: 0,
            cost,
            timed_out,
            transferred: false,
            solve_time: Duration::from_millis(1500),
            encode_time: Duration::from_millis(2),
            alignment: Some(Alignment::new(vec![Move::Log { event: Event::ints("a", &[("x", 1)]) }])),
        }
    }

    #[test]
    fn csv_rows() {
        let mut out = Vec::new();
        let rows = [row("t,1", Some(2), false), row("t2", Some(5), true)];
        write_report(&rows, &running_example(), ReportFormat::Csv, false, None, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "trace_id,multiplicity,cluster,cost,solve_seconds,encode_seconds");
        assert_eq!(lines[1], "\"t,1\",2,0,2,1.500000,0.002000");
        assert!(lines[2].contains(",TIMEOUT,"));
    }

    #[test]
    fn json_verbose() {
        let mut out = Vec::new();
        write_report(&[row("t", Some(5), true)], &running_example(), ReportFormat::Json, true, None, &mut out).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
        let t = &v["traces"][0];
        assert_eq!(t["cost"], "TIMEOUT");
        assert_eq!(t["upper_bound"], 5);
        assert_eq!(t["alignment"][0]["move"], "log");
        assert_eq!(t["alignment"][0]["log"], "a {x=1}");
        assert!(t["alignment"][0]["model"].is_null());
    }
}
