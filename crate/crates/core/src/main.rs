use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use dpnalign_core::align::{render, AlignError, AlignOptions};
use dpnalign_core::cost::PenaltyFunctions;
use dpnalign_core::encode::{EncodeOptions, Optimization};
use dpnalign_core::io::pnml::set_initial_value;
use dpnalign_core::io::{parse_pnml, parse_value, parse_xes, write_report, ParseError, PnmlOptions, ReportFormat};
use dpnalign_core::log::EventLog;
use dpnalign_core::model::{Dpn, LabelPolicy};
use dpnalign_core::oracle::{brute_force_optimal, FiniteDomains};
use dpnalign_core::pipeline::{check_log, PipelineError, PipelineOptions};
use dpnalign_core::solver::{Session, SolverConfig, SolverError, Strategy, SOLVER_ENV};

const EXIT_INTERNAL: u8 = 1;
const EXIT_PARSE: u8 = 3;
const EXIT_SOLVER_MISSING: u8 = 4;
const EXIT_TIMEOUTS: u8 = 5;

#[derive(Parser)]
#[command(name = "dpnalign", version, about = "Optimal alignments of event logs against data Petri nets")]
#[command(args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Exhaustive search over explicit finite domains (small models only).
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CostArg {
    Standard,
    Levenshtein,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Binary,
    Linear,
    Native,
}

#[derive(Args)]
struct ModelArgs {
    /// Data Petri net (PNML).
    #[arg(long, required = true)]
    model: Option<PathBuf>,
    /// Event log (XES).
    #[arg(long, required = true)]
    log: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "standard")]
    cost: CostArg,
    /// Initial variable value, overriding the model (`name=value`).
    #[arg(long = "init", value_name = "NAME=VALUE")]
    init: Vec<String>,
    /// Accept several silent transitions (visible labels must stay unique).
    #[arg(long)]
    allow_silent_duplicates: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// SMT solver executable.
    #[arg(long, env = SOLVER_ENV, default_value = "z3")]
    solver: String,
    /// Extra solver argument (repeatable); replaces the defaults.
    #[arg(long = "solver-arg", allow_hyphen_values = true)]
    solver_args: Vec<String>,
    /// Per-check timeout in seconds.
    #[arg(long, default_value_t = 600)]
    timeout: u64,
    /// Fixed number of model steps instead of the computed bound.
    #[arg(long)]
    bound: Option<usize>,
    /// Extra steps to try when the bound admits no run.
    #[arg(long, default_value_t = 3)]
    retry: usize,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    no_cluster: bool,
    /// Disable encoding optimizations (comma separated: reach, bool-marking, delta-ineq, aux, all).
    #[arg(long, value_delimiter = ',')]
    no_opt: Vec<String>,
    #[arg(long, value_enum, default_value = "binary")]
    strategy: StrategyArg,
    /// Print alignments and include them in JSON reports.
    #[arg(short, long)]
    verbose: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Report file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write each SMT encoding to this directory.
    #[arg(long)]
    dump_smt: Option<PathBuf>,
    /// Re-solve clustered traces and compare with the transferred cost.
    #[arg(long)]
    verify_transfer: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Candidate values for a variable: `x=0..4` or `s=a,b,c`.
    #[arg(long = "domain", value_name = "VAR=VALUES")]
    domains: Vec<String>,
    #[arg(long, default_value_t = 6)]
    max_len: usize,
}

enum Failure {
    Usage(String),
    Parse(String),
    SolverMissing(String),
    Internal(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        let (code, msg) = match self {
            Failure::Usage(m) => (2, m),
            Failure::Parse(m) => (EXIT_PARSE, m),
            Failure::SolverMissing(m) => (EXIT_SOLVER_MISSING, m),
            Failure::Internal(m) => (EXIT_INTERNAL, m),
        };
        eprintln!("error: {msg}");
        ExitCode::from(code)
    }
}

fn parse_failure(path: &Path, e: ParseError) -> Failure {
    Failure::Parse(format!("{}:\n{e}", path.display()))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn load(args: &ModelArgs) -> Result<(Dpn, EventLog, Duration), Failure> {
    let started = Instant::now();
    let (model, log) = (args.model.as_deref().unwrap(), args.log.as_deref().unwrap());
    let policy = if args.allow_silent_duplicates { LabelPolicy::SilentDuplicates } else { LabelPolicy::Strict };
    let parsed = parse_pnml(&read(model)?, &PnmlOptions { policy }).map_err(|e| parse_failure(model, e))?;
    for w in &parsed.warnings {
        log::warn!("{}: {w}", model.display());
    }
    let mut dpn = parsed.value;
    for kv in &args.init {
        let (k, v) = kv.split_once('=').ok_or_else(|| Failure::Usage(format!("--init expects NAME=VALUE, got `{kv}`")))?;
        set_initial_value(&mut dpn, k.trim(), v).map_err(|e| Failure::Usage(format!("--init {kv}: {e}")))?;
    }
    let parsed = parse_xes(&read(log)?, &dpn).map_err(|e| parse_failure(log, e))?;
    for w in &parsed.warnings {
        log::warn!("{}: {w}", log.display());
    }
    Ok((dpn, parsed.value, started.elapsed()))
}

fn profile(c: CostArg) -> PenaltyFunctions {
    match c {
        CostArg::Standard => PenaltyFunctions::Standard,
        CostArg::Levenshtein => PenaltyFunctions::Levenshtein,
    }
}

fn encode_options(names: &[String]) -> Result<EncodeOptions, Failure> {
    let mut opts = EncodeOptions::default();
    for n in names {
        if n == "all" {
            opts = EncodeOptions::none();
            continue;
        }
        let o: Optimization = n.parse().map_err(Failure::Usage)?;
        opts = opts.without(o);
    }
    Ok(opts)
}

fn run(args: RunArgs) -> Result<ExitCode, Failure> {
    let mut solver = SolverConfig::new(&args.solver).with_timeout(Duration::from_secs(args.timeout));
    if !args.solver_args.is_empty() {
        solver = solver.with_args(args.solver_args.clone());
    }
    match Session::start(&solver) {
        Err(e @ SolverError::Spawn { .. }) => return Err(Failure::SolverMissing(e.to_string())),
        Err(e) => return Err(Failure::Internal(e.to_string())),
        Ok(_) => {}
    }
    let (dpn, log, parse_time) = load(&args.model)?;
    let opts = PipelineOptions {
        align: AlignOptions {
            encode: encode_options(&args.no_opt)?,
            solver,
            bound: args.bound,
            retry: args.retry,
            strategy: match args.strategy {
                StrategyArg::Binary => Strategy::Binary,
                StrategyArg::Linear => Strategy::Linear,
                StrategyArg::Native => Strategy::Native,
            },
            dump_smt: args.dump_smt.clone(),
        },
        cost: profile(args.model.cost),
        cluster: !args.no_cluster,
        jobs: args.jobs,
        verify_transfer: args.verify_transfer,
    };
    let out = check_log(&dpn, &log, &opts, parse_time).map_err(|e| match e {
        PipelineError::Align(AlignError::Solver(e @ SolverError::Spawn { .. })) => Failure::SolverMissing(e.to_string()),
        e => Failure::Internal(e.to_string()),
    })?;

    if args.verbose {
        let mut err = io::stderr().lock();
        for r in &out.rows {
            let _ = writeln!(err, "trace {} (x{}) cost {}", r.trace_id, r.multiplicity(), r.cost_field());
            if let Some(a) = &r.alignment {
                let _ = writeln!(err, "{}", render(&dpn, a));
            }
        }
    }
    let format = match args.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Json => ReportFormat::Json,
    };
    let written = match &args.out {
        Some(path) => fs::File::create(path).and_then(|mut f| write_report(&out.rows, &dpn, format, args.verbose, Some(&out.summary), &mut f)),
        None => write_report(&out.rows, &dpn, format, args.verbose, Some(&out.summary), &mut io::stdout().lock()),
    };
    written.map_err(|e| Failure::Internal(format!("writing report: {e}")))?;

    let s = &out.summary;
    let phases = s.parse_seconds + s.encode_seconds + s.solve_seconds;
    let pct = |x: f64| if phases > 0.0 { 100.0 * x / phases } else { 0.0 };
    eprintln!(
        "{} traces, {} unique, {} clusters, {} solved, {} timed out; cost total {} mean {:.3} max {}; \
         parse {:.1}% encode {:.1}% solve {:.1}%; {:.2}s",
        s.traces,
        s.unique,
        s.clusters,
        s.solved,
        s.timed_out,
        s.total_cost,
        s.mean_cost,
        s.max_cost,
        pct(s.parse_seconds),
        pct(s.encode_seconds),
        pct(s.solve_seconds),
        s.wall_seconds
    );
    Ok(if s.timed_out > 0 { ExitCode::from(EXIT_TIMEOUTS) } else { ExitCode::SUCCESS })
}

fn domains(dpn: &Dpn, specs: &[String]) -> Result<FiniteDomains, Failure> {
    let mut values: BTreeMap<String, Vec<_>> = BTreeMap::new();
    for spec in specs {
        let (var, body) = spec.split_once('=').ok_or_else(|| Failure::Usage(format!("--domain expects VAR=VALUES, got `{spec}`")))?;
        let sort = dpn.sort_of(var).ok_or_else(|| Failure::Usage(format!("--domain: unknown variable `{var}`")))?;
        let bad = || Failure::Usage(format!("--domain {spec}: values do not fit {sort}"));
        let vs = match body.split_once("..") {
            Some((lo, hi)) => {
                let (lo, hi): (i64, i64) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
                (lo..=hi).map(|k| parse_value(sort, &k.to_string()).ok_or_else(bad)).collect::<Result<Vec<_>, _>>()?
            }
            None => body.split(',').map(|t| parse_value(sort, t).ok_or_else(bad)).collect::<Result<Vec<_>, _>>()?,
        };
        values.entry(var.to_string()).or_default().extend(vs);
    }
    Ok(values.into_iter().fold(FiniteDomains::new(), |d, (k, v)| d.with(&k, v)))
}

fn oracle(args: OracleArgs) -> Result<ExitCode, Failure> {
    let (dpn, log, _) = load(&args.model)?;
    let doms = domains(&dpn, &args.domains)?;
    let pf = profile(args.model.cost);
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "trace_id,cost");
    for t in &log.traces {
        let cost = brute_force_optimal(&dpn, t, pf, &doms, args.max_len).map_err(|e| Failure::Internal(format!("trace {}: {e}", t.id)))?;
        let _ = writeln!(out, "{},{cost}", t.id);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Some(Command::Oracle(args)) => oracle(args),
        None => run(cli.run),
    };
    result.unwrap_or_else(Failure::report)
}
