//! SMT-LIB 2 over the standard streams of an external solver process, and
//! objective minimization by repeated satisfiability checks.

use std::collections::BTreeMap;
use std::io::{self, BufReader, Read, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::encode::term::SmtSort;
use crate::encode::EncodingArtifact;
use crate::model::value::parse_decimal;
use crate::model::Value;

/// Environment variable naming the default solver executable.
pub const SOLVER_ENV: &str = "DPNALIGN_SOLVER";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    pub program: String,
    pub args: Vec<String>,
    /// Limit for a single satisfiability check.
    pub timeout: Duration,
}

impl SolverConfig {
    /// Uses the usual interactive flags for Z3 and Yices; other solvers get no arguments.
    pub fn new(program: &str) -> SolverConfig {
        let base = Path::new(program).file_name().and_then(|s| s.to_str()).unwrap_or(program);
        let args: &[&str] = if base.starts_with("z3") {
            &["-in", "-smt2"]
        } else if base.starts_with("yices") {
            &["--incremental"]
        } else {
            &[]
        };
        SolverConfig {
            program: program.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
            timeout: Duration::from_secs(600),
        }
    }

    /// `$DPNALIGN_SOLVER`, falling back to `z3` on the search path.
    pub fn from_env() -> SolverConfig {
        SolverConfig::new(&std::env::var(SOLVER_ENV).unwrap_or_else(|_| "z3".to_string()))
    }

    pub fn with_timeout(mut self, timeout: Duration) -> SolverConfig {
        self.timeout = timeout;
        self
    }

    pub fn with_args(mut self, args: Vec<String>) -> SolverConfig {
        self.args = args;
        self
    }

    pub fn is_z3(&self) -> bool {
        Path::new(&self.program).file_name().and_then(|s| s.to_str()).is_some_and(|s| s.starts_with("z3"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("cannot start solver `{program}`: {source}")]
    Spawn { program: String, source: io::Error },
    #[error("solver i/o: {0}")]
    Io(#[from] io::Error),
    #[error("solver protocol: {0}")]
    Protocol(String),
    #[error("solver process exited")]
    Died,
    #[error("solver check timed out")]
    Timeout,
    #[error("solver answered unknown: {0}")]
    Unknown(String),
    #[error("{0}")]
    Unsupported(String),
}

/// Symbol values returned by the solver.
pub type Valuation = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Sat(Valuation),
    Unsat,
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn parse(text: &str) -> Result<SExpr, SolverError> {
        let mut tokens = tokenize(text).into_iter().peekable();
        let e = parse_sexpr(&mut tokens)?;
        if tokens.peek().is_some() {
            return Err(SolverError::Protocol(format!("trailing input in `{text}`")));
        }
        Ok(e)
    }
}

fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' | ')' => out.push(c.to_string()),
            c if c.is_whitespace() => {}
            '"' => {
                let mut s = String::from('"');
                while let Some(c) = chars.next() {
                    s.push(c);
                    if c == '"' {
                        if chars.peek() == Some(&'"') {
                            s.push(chars.next().unwrap());
                        } else {
                            break;
                        }
                    }
                }
                out.push(s);
            }
            '|' => {
                let mut s = String::from('|');
                for c in chars.by_ref() {
                    s.push(c);
                    if c == '|' {
                        break;
                    }
                }
                out.push(s);
            }
            _ => {
                let mut s = String::from(c);
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                out.push(s);
            }
        }
    }
    out
}

fn parse_sexpr(tokens: &mut std::iter::Peekable<std::vec::IntoIter<String>>) -> Result<SExpr, SolverError> {
    match tokens.next().as_deref() {
        None => Err(SolverError::Protocol("unexpected end of response".into())),
        Some(")") => Err(SolverError::Protocol("unbalanced `)`".into())),
        Some("(") => {
            let mut items = Vec::new();
            loop {
                match tokens.peek().map(String::as_str) {
                    Some(")") => {
                        tokens.next();
                        return Ok(SExpr::List(items));
                    }
                    None => return Err(SolverError::Protocol("unbalanced `(`".into())),
                    _ => items.push(parse_sexpr(tokens)?),
                }
            }
        }
        Some(atom) => Ok(SExpr::Atom(atom.to_string())),
    }
}

/// Reads a solver value term: booleans, integers, decimals, `n/d`, `(- x)` and `(/ x y)`.
pub fn parse_value(e: &SExpr) -> Option<Value> {
    match e {
        SExpr::Atom(a) if a == "true" => Some(Value::Bool(true)),
        SExpr::Atom(a) if a == "false" => Some(Value::Bool(false)),
        SExpr::Atom(a) => {
            if let Ok(k) = a.parse::<BigInt>() {
                return Some(Value::Int(k));
            }
            if let Some((n, d)) = a.split_once('/') {
                let (n, d) = (n.parse::<BigInt>().ok()?, d.parse::<BigInt>().ok()?);
                return (!d.is_zero()).then(|| Value::Rat(BigRational::new(n, d)));
            }
            parse_decimal(a).map(Value::Rat)
        }
        SExpr::List(items) => match items.as_slice() {
            [SExpr::Atom(op), x] if op == "-" => match parse_value(x)? {
                Value::Int(k) => Some(Value::Int(-k)),
                Value::Rat(r) => Some(Value::Rat(-r)),
                _ => None,
            },
            [SExpr::Atom(op), x, y] if op == "/" => {
                let (x, y) = (parse_value(x)?.as_rational()?, parse_value(y)?.as_rational()?);
                (!y.is_zero()).then(|| Value::Rat(x / y))
            }
            [SExpr::Atom(op), x] if op == "to_real" => Some(Value::Rat(parse_value(x)?.as_rational()?)),
            _ => None,
        },
    }
}

fn coerce_to(sort: SmtSort, v: Value) -> Option<Value> {
    match (sort, v) {
        (SmtSort::Bool, v @ Value::Bool(_)) => Some(v),
        (SmtSort::Int, v) => v.coerce(crate::model::Sort::Int),
        (SmtSort::Real, v) => v.coerce(crate::model::Sort::Rat),
        _ => None,
    }
}

/// Splits the solver's output into complete top-level responses.
fn spawn_reader(stdout: impl Read + Send + 'static) -> Receiver<String> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut reader = BufReader::new(stdout);
        let mut buf = [0u8; 4096];
        let mut current = Vec::new();
        let mut depth = 0i64;
        let mut in_string = false;
        let mut in_quoted = false;
        loop {
            let k = match reader.read(&mut buf) {
                Ok(0) | Err(_) => return,
                Ok(k) => k,
            };
            for &byte in &buf[..k] {
                let c = byte as char;
                if in_string {
                    current.push(byte);
                    in_string = c != '"';
                    continue;
                }
                if in_quoted {
                    current.push(byte);
                    in_quoted = c != '|';
                    continue;
                }
                match c {
                    '(' => {
                        depth += 1;
                        current.push(byte);
                    }
                    ')' => {
                        depth -= 1;
                        current.push(byte);
                    }
                    '"' => {
                        in_string = true;
                        current.push(byte);
                    }
                    '|' => {
                        in_quoted = true;
                        current.push(byte);
                    }
                    c if c.is_whitespace() => {
                        if depth == 0 && !current.is_empty() {
                            let msg = String::from_utf8_lossy(&current).into_owned();
                            current.clear();
                            if tx.send(msg).is_err() {
                                return;
                            }
                        } else if !current.is_empty() {
                            current.push(b' ');
                        }
                        continue;
                    }
                    _ => current.push(byte),
                }
                if depth == 0 && c == ')' {
                    let msg = String::from_utf8_lossy(&current).into_owned();
                    current.clear();
                    if tx.send(msg).is_err() {
                        return;
                    }
                }
            }
        }
    });
    rx
}

/// One solver child process.
pub struct Session {
    child: Child,
    stdin: ChildStdin,
    responses: Receiver<String>,
    timeout: Duration,
    depth: usize,
    dead: bool,
    z3: bool,
    /// Number of `check-sat` commands issued.
    pub checks: usize,
}

impl Session {
    pub fn start(config: &SolverConfig) -> Result<Session, SolverError> {
        let mut child = Command::new(&config.program)
            .args(&config.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| SolverError::Spawn { program: config.program.clone(), source })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut s = Session {
            child,
            stdin,
            responses: spawn_reader(stdout),
            timeout: config.timeout,
            depth: 0,
            dead: false,
            z3: config.is_z3(),
            checks: 0,
        };
        s.send("(set-option :print-success false)")?;
        s.send("(set-option :produce-models true)")?;
        Ok(s)
    }

    /// Whether a push/pop stack is still balanced and the process usable.
    pub fn is_live(&self) -> bool {
        !self.dead
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn send(&mut self, command: &str) -> Result<(), SolverError> {
        if self.dead {
            return Err(SolverError::Died);
        }
        let r = writeln!(self.stdin, "{command}").and_then(|_| self.stdin.flush());
        r.map_err(|e| {
            self.dead = true;
            if e.kind() == io::ErrorKind::BrokenPipe { SolverError::Died } else { SolverError::Io(e) }
        })
    }

    fn receive(&mut self) -> Result<String, SolverError> {
        match self.responses.recv_timeout(self.timeout) {
            Ok(r) if r.starts_with("(error") => {
                self.dead = true;
                Err(SolverError::Protocol(r))
            }
            Ok(r) => Ok(r),
            Err(RecvTimeoutError::Timeout) => {
                self.dead = true;
                let _ = self.child.kill();
                Err(SolverError::Timeout)
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.dead = true;
                Err(SolverError::Died)
            }
        }
    }

    /// Declares the artifact's symbols and asserts its constraints.
    pub fn load(&mut self, artifact: &EncodingArtifact) -> Result<(), SolverError> {
        let script = artifact.to_smtlib();
        if self.dead {
            return Err(SolverError::Died);
        }
        self.stdin.write_all(script.as_bytes()).and_then(|_| self.stdin.flush()).map_err(|e| {
            self.dead = true;
            SolverError::Io(e)
        })
    }

    pub fn push(&mut self) -> Result<(), SolverError> {
        self.send("(push 1)")?;
        self.depth += 1;
        Ok(())
    }

    pub fn pop(&mut self) -> Result<(), SolverError> {
        if self.depth == 0 {
            return Err(SolverError::Protocol("pop without matching push".into()));
        }
        self.send("(pop 1)")?;
        self.depth -= 1;
        Ok(())
    }

    pub fn assert(&mut self, formula: &str) -> Result<(), SolverError> {
        self.send(&format!("(assert {formula})"))
    }

    pub fn check_sat(&mut self) -> Result<Verdict, SolverError> {
        self.send("(check-sat)")?;
        self.checks += 1;
        match self.receive()?.as_str() {
            "sat" => Ok(Verdict::Sat(Valuation::new())),
            "unsat" => Ok(Verdict::Unsat),
            "unknown" => {
                self.send("(get-info :reason-unknown)")?;
                let reason = self.receive().unwrap_or_default();
                Ok(Verdict::Unknown(reason))
            }
            other => {
                self.dead = true;
                Err(SolverError::Protocol(format!("unexpected answer `{other}`")))
            }
        }
    }

    /// Values of the given symbols in the current model, coerced to their declared sorts.
    pub fn get_values(&mut self, artifact: &EncodingArtifact, names: &[String]) -> Result<Valuation, SolverError> {
        let mut out = Valuation::new();
        for chunk in names.chunks(512) {
            self.send(&format!("(get-value ({}))", chunk.join(" ")))?;
            let response = self.receive()?;
            let SExpr::List(pairs) = SExpr::parse(&response)? else {
                return Err(SolverError::Protocol(format!("bad get-value answer `{response}`")));
            };
            for pair in pairs {
                let SExpr::List(kv) = pair else {
                    return Err(SolverError::Protocol("bad get-value pair".into()));
                };
                let [SExpr::Atom(name), value] = kv.as_slice() else {
                    return Err(SolverError::Protocol("bad get-value pair".into()));
                };
                let sort = artifact.sort_of(name).ok_or_else(|| SolverError::Protocol(format!("unknown symbol `{name}`")))?;
                let v = parse_value(value)
                    .and_then(|v| coerce_to(sort, v))
                    .ok_or_else(|| SolverError::Protocol(format!("cannot read value of `{name}`")))?;
                out.insert(name.clone(), v);
            }
        }
        Ok(out)
    }

    fn objective_value(v: &Valuation, artifact: &EncodingArtifact) -> Result<u64, SolverError> {
        match v.get(&artifact.objective) {
            Some(Value::Int(k)) => {
                u64::try_from(k.clone()).map_err(|_| SolverError::Protocol(format!("negative objective {k}")))
            }
            _ => Err(SolverError::Protocol("objective missing from model".into())),
        }
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        if !self.dead {
            let _ = writeln!(self.stdin, "(exit)");
            let _ = self.stdin.flush();
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Loads the artifact and checks it once, fetching the decoder's symbols on sat.
pub fn check(session: &mut Session, artifact: &EncodingArtifact) -> Result<Verdict, SolverError> {
    session.load(artifact)?;
    fetch(session, artifact)
}

fn fetch(session: &mut Session, artifact: &EncodingArtifact) -> Result<Verdict, SolverError> {
    match session.check_sat()? {
        Verdict::Sat(_) => {
            let v = session.get_values(artifact, &artifact.decode_vars())?;
            Ok(Verdict::Sat(v))
        }
        other => Ok(other),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Bisection on the objective with `push`/`pop`.
    #[default]
    Binary,
    /// Repeatedly ask for a strictly smaller objective.
    Linear,
    /// A single `(minimize ...)` query; Z3 only.
    Native,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Minimum {
    pub value: u64,
    pub valuation: Valuation,
    /// False when a check timed out; `value` is then only an upper bound.
    pub optimal: bool,
}

/// Minimizes the artifact's objective. `Ok(None)` means the constraints are
/// unsatisfiable. A timeout after the first model yields the best model found
/// so far with `optimal == false`.
pub fn minimize(
    session: &mut Session,
    artifact: &EncodingArtifact,
    strategy: Strategy,
) -> Result<Option<Minimum>, SolverError> {
    session.load(artifact)?;
    if strategy == Strategy::Native {
        if !session.z3 {
            return Err(SolverError::Unsupported("native minimization needs z3".into()));
        }
        session.push()?;
        session.send(&format!("(minimize {})", artifact.objective))?;
        let result = match fetch(session, artifact)? {
            Verdict::Sat(v) => {
                let value = Session::objective_value(&v, artifact)?;
                Some(Minimum { value, valuation: v, optimal: true })
            }
            Verdict::Unsat => None,
            Verdict::Unknown(r) => return Err(SolverError::Unknown(r)),
        };
        session.pop()?;
        return Ok(result);
    }

    let mut best = match fetch(session, artifact)? {
        Verdict::Sat(v) => v,
        Verdict::Unsat => return Ok(None),
        Verdict::Unknown(r) => return Err(SolverError::Unknown(r)),
    };
    let mut hi = Session::objective_value(&best, artifact)?;
    let mut lo = 0u64;
    while lo < hi {
        let target = match strategy {
            Strategy::Linear => hi - 1,
            _ => lo + (hi - lo) / 2,
        };
        let step = (|| -> Result<Option<Valuation>, SolverError> {
            session.push()?;
            session.assert(&format!("(<= {} {target})", artifact.objective))?;
            let verdict = fetch(session, artifact)?;
            session.pop()?;
            match verdict {
                Verdict::Sat(v) => Ok(Some(v)),
                Verdict::Unsat => Ok(None),
                Verdict::Unknown(r) => Err(SolverError::Unknown(r)),
            }
        })();
        match step {
            Ok(Some(v)) => {
                hi = Session::objective_value(&v, artifact)?;
                best = v;
            }
            Ok(None) => lo = target + 1,
            Err(SolverError::Timeout) | Err(SolverError::Unknown(_)) => {
                return Ok(Some(Minimum { value: hi, valuation: best, optimal: false }))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Some(Minimum { value: hi, valuation: best, optimal: true }))
}
