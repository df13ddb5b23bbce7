//! Whole-log conformance: deduplicate, cluster, solve one representative per
//! cluster in parallel, and transfer its alignment to the other members.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::align::{conformance, transfer_alignment, AlignError, AlignOptions, ConformanceResult};
use crate::cluster::{cluster_log, extract_atoms, Clustering};
use crate::cost::{alignment_cost, PenaltyFunctions};
use crate::io::report::{ReportRow, Summary};
use crate::log::{dedupe, EventLog};
use crate::model::Dpn;

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub align: AlignOptions,
    pub cost: PenaltyFunctions,
    pub cluster: bool,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    /// Re-solve every transferred member and compare costs.
    pub verify_transfer: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { align: AlignOptions::default(), cost: PenaltyFunctions::Standard, cluster: true, jobs: 0, verify_transfer: false }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error("transferred alignment for `{trace}` costs {transferred}, solving it gives {solved}")]
    TransferMismatch { trace: String, transferred: String, solved: String },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// One row per unique trace, in first-occurrence order.
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
    pub clustering: Clustering,
    /// Solver invocations, one per cluster (plus re-solves when verifying).
    pub solved: usize,
}

fn row_from(result: &ConformanceResult, members: Vec<String>, cluster: usize) -> ReportRow {
    ReportRow {
        trace_id: result.trace_id.clone(),
        members,
        cluster,
        cost: result.cost,
        timed_out: result.timed_out,
        transferred: false,
        solve_time: result.timings.solve,
        encode_time: result.timings.encode,
        alignment: result.alignment.clone(),
    }
}

pub fn check_log(dpn: &Dpn, log: &EventLog, opts: &PipelineOptions, parse_time: Duration) -> Result<PipelineOutput, PipelineError> {
    let started = Instant::now();
    let unique = dedupe(log);
    let atoms = extract_atoms(dpn);
    let clustering = if opts.cluster { cluster_log(&unique, &atoms) } else { Clustering::singletons(&unique) };
    log::info!("{} traces, {} unique, {} clusters", log.len(), unique.len(), clustering.len());

    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs).build().map_err(|e| PipelineError::Pool(e.to_string()))?;
    let results: Vec<Result<ConformanceResult, AlignError>> = pool.install(|| {
        clustering
            .clusters
            .par_iter()
            .map(|c| conformance(dpn, &unique[c.representative].trace, opts.cost, &opts.align))
            .collect()
    });
    let mut solved = clustering.len();

    let mut rows: Vec<Option<ReportRow>> = vec![None; unique.len()];
    for (ci, (c, result)) in clustering.clusters.iter().zip(results).enumerate() {
        let result = result?;
        let rep = &unique[c.representative];
        for &m in &c.members {
            let u = &unique[m];
            if m == c.representative {
                rows[m] = Some(row_from(&result, u.members.clone(), ci));
                continue;
            }
            let mut row = ReportRow {
                trace_id: u.trace.id.clone(),
                members: u.members.clone(),
                cluster: ci,
                cost: None,
                timed_out: true,
                transferred: true,
                solve_time: Duration::ZERO,
                encode_time: Duration::ZERO,
                alignment: None,
            };
            if let (false, Some(gamma)) = (result.timed_out, &result.alignment) {
                let moved = transfer_alignment(gamma, &rep.trace, &u.trace, dpn, &atoms)?;
                let cost = alignment_cost(dpn, &moved, opts.cost);
                if opts.verify_transfer {
                    solved += 1;
                    let fresh = conformance(dpn, &u.trace, opts.cost, &opts.align)?;
                    if !fresh.timed_out && fresh.cost != cost.finite() {
                        return Err(PipelineError::TransferMismatch {
                            trace: u.trace.id.clone(),
                            transferred: cost.to_string(),
                            solved: format!("{:?}", fresh.cost),
                        });
                    }
                }
                row.cost = cost.finite();
                row.timed_out = false;
                row.alignment = Some(moved);
            }
            rows[m] = Some(row);
        }
    }
    let rows: Vec<ReportRow> = rows.into_iter().map(|r| r.expect("every unique trace is in a cluster")).collect();

    let mut s = Summary { traces: log.len(), unique: unique.len(), clusters: clustering.len(), ..Summary::default() };
    for r in &rows {
        s.encode_seconds += r.encode_time.as_secs_f64();
        s.solve_seconds += r.solve_time.as_secs_f64();
        match (r.timed_out, r.cost) {
            (false, Some(c)) => {
                s.solved += r.multiplicity();
                s.total_cost += c * r.multiplicity() as u64;
                s.max_cost = s.max_cost.max(c);
            }
            _ => s.timed_out += r.multiplicity(),
        }
    }
    if s.solved > 0 {
        s.mean_cost = s.total_cost as f64 / s.solved as f64;
    }
    s.parse_seconds = parse_time.as_secs_f64();
    s.wall_seconds = (started.elapsed() + parse_time).as_secs_f64();
    Ok(PipelineOutput { rows, summary: s, clustering, solved })
}
