//! `evoverify`: command-line front end.
//!
//! Exit codes: 0 holds / valid, 1 violated / invalid, 2 unknown (bounds hit),
//! 3 usage, input or parse error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use evoverify_core::choreo::{project, project_system, Choreography};
use evoverify_core::connectedness::check_connectedness;
use evoverify_core::logic::{classify_formula, schema, Formula, SchemaKind, SchemaParams};
use evoverify_core::lts::{explore, ExploreOptions, StateGraph};
use evoverify_core::orch::{check_correct_composition_capped, check_implements_capped, System, DEFAULT_STATE_CAP};
use evoverify_core::process::{Barb, Process};
use evoverify_core::syntax::{parse_choreography, parse_formula, parse_process, parse_system, SourceTerm, TermKind};
use evoverify_core::update::{simulate, trace_correspondence, validate_updatable, Script, Subject};
use evoverify_core::verdict::{Status, Verdict};
use evoverify_core::verify::{check_ba, check_ea, model_check};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "evoverify", version, about = "Verification toolkit for adaptable processes and choreographies")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Worker threads for state-space exploration (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Clone, Copy)]
struct Bounds {
    /// Stop exploring after this many states (default 100000, or EVOVERIFY_MAX_STATES).
    #[arg(long)]
    max_states: Option<usize>,
    /// Do not expand states deeper than this.
    #[arg(long)]
    max_depth: Option<usize>,
}

impl Bounds {
    fn options(self) -> ExploreOptions {
        let mut opts = ExploreOptions::from_env();
        if let Some(n) = self.max_states {
            opts.max_states = n;
        }
        if self.max_depth.is_some() {
            opts.max_depth = self.max_depth;
        }
        opts
    }
}

#[derive(Args, Clone, Copy)]
struct Cap {
    /// Stop exploring after this many system states.
    #[arg(long)]
    max_states: Option<usize>,
}

impl Cap {
    fn get(self) -> usize {
        self.max_states.or_else(env_cap).unwrap_or(DEFAULT_STATE_CAP)
    }
}

fn env_cap() -> Option<usize> {
    std::env::var("EVOVERIFY_MAX_STATES").ok()?.parse().ok()
}

#[derive(Subcommand)]
enum Command {
    /// Parse a term and print it in normal syntax.
    Parse {
        file: PathBuf,
        /// Term language; guessed from the extension or the content if omitted.
        #[arg(long)]
        kind: Option<TermKind>,
    },
    /// Explore the reduction graph of a process.
    Lts {
        file: PathBuf,
        #[command(flatten)]
        bounds: Bounds,
        /// Print the graph in Graphviz format.
        #[arg(long, conflicts_with = "json")]
        dot: bool,
        /// Print the graph as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Check an adaptation property of a process.
    #[command(subcommand)]
    Check(CheckCommand),
    /// Model-check a formula against a process.
    Mc {
        file: PathBuf,
        /// Formula, inline or as a file path.
        #[arg(long, required_unless_present = "schema", conflicts_with = "schema")]
        formula: Option<String>,
        /// Instantiate a property schema instead of giving a formula.
        #[arg(long)]
        schema: Option<SchemaKind>,
        #[arg(long)]
        error: Option<Barb>,
        #[arg(long)]
        ok: Option<Barb>,
        #[arg(long)]
        k: Option<usize>,
        /// Also report the fragment of the logic the formula belongs to.
        #[arg(long)]
        classify: bool,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Choreography commands.
    #[command(subcommand)]
    Choreo(ChoreoCommand),
    /// System commands.
    #[command(subcommand)]
    Orch(OrchCommand),
    /// Dynamic update commands.
    #[command(subcommand)]
    Upd(UpdCommand),
}

#[derive(Subcommand)]
enum CheckCommand {
    /// Bounded adaptation: at most K consecutive error states on every run.
    Ba {
        file: PathBuf,
        #[arg(long)]
        error: Barb,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Eventual adaptation: no run stays in error states forever.
    Ea {
        file: PathBuf,
        #[arg(long)]
        error: Barb,
        #[command(flatten)]
        bounds: Bounds,
    },
}

#[derive(Subcommand)]
enum ChoreoCommand {
    /// Project onto one role, or onto every role as a system.
    Project {
        file: PathBuf,
        #[arg(long)]
        role: Option<String>,
    },
    /// Check that the projected system implements the choreography.
    Wf {
        file: PathBuf,
        #[command(flatten)]
        cap: Cap,
    },
    /// Check the syntactic connectedness conditions.
    Connected { file: PathBuf },
}

#[derive(Subcommand)]
enum OrchCommand {
    /// Check that every reachable state can still terminate successfully.
    Correct {
        file: PathBuf,
        #[command(flatten)]
        cap: Cap,
    },
    /// Check that a system implements a choreography.
    Implements {
        system: PathBuf,
        choreography: PathBuf,
        #[command(flatten)]
        cap: Cap,
    },
}

#[derive(Subcommand)]
enum UpdCommand {
    /// Check that updates on a choreography are well defined.
    Validate { file: PathBuf },
    /// Run a choreography or a system under a script of steps and updates.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        script: PathBuf,
    },
    /// Compare the traces of a choreography with updates and of its projection.
    Correspond {
        file: PathBuf,
        #[command(flatten)]
        cap: Cap,
    },
}

/// Usage or input problem; exits with 3.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Run = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let out = Out(cli.format);
    match run(cli.command, out) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

#[derive(Clone, Copy)]
struct Out(Format);

impl Out {
    fn json(self) -> bool {
        self.0 == Format::Json
    }

    fn emit(self, text: impl FnOnce() -> String, value: impl FnOnce() -> Value) {
        if self.json() {
            put(&(serde_json::to_string_pretty(&value()).expect("json") + "\n"));
        } else {
            put(&text());
        }
    }
}

// A closed pipe (e.g. `| head`) is not an error worth reporting.
fn put(s: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(s.as_bytes()).and_then(|()| out.flush());
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn with_path<T, E: std::fmt::Display>(path: &Path, r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn load_process(path: &Path) -> Result<Process, Failure> {
    with_path(path, parse_process(&read(path)?))
}

fn load_choreography(path: &Path) -> Result<Choreography, Failure> {
    with_path(path, parse_choreography(&read(path)?))
}

fn load_system(path: &Path) -> Result<System, Failure> {
    with_path(path, parse_system(&read(path)?))
}

fn kind_from_extension(path: &Path) -> Option<TermKind> {
    Some(match path.extension()?.to_str()? {
        "ev" | "proc" => TermKind::Process,
        "pat" => TermKind::Pattern,
        "phi" | "fml" => TermKind::Formula,
        "ch" | "chor" => TermKind::Choreography,
        "orch" => TermKind::Orchestration,
        "sys" => TermKind::System,
        _ => return None,
    })
}

fn kind_name(kind: TermKind) -> &'static str {
    match kind {
        TermKind::Process => "process",
        TermKind::Pattern => "pattern",
        TermKind::Formula => "formula",
        TermKind::Choreography => "choreography",
        TermKind::Orchestration => "orchestration",
        TermKind::System => "system",
    }
}

fn status_code(s: Status) -> u8 {
    match s {
        Status::Holds => 0,
        Status::Violated => 1,
        Status::Unknown => 2,
    }
}

fn bounds_json(opts: ExploreOptions) -> Value {
    json!({ "max_states": opts.max_states, "max_depth": opts.max_depth })
}

fn bounds_text(opts: ExploreOptions) -> String {
    let depth = opts.max_depth.map_or("none".to_string(), |d| d.to_string());
    format!("max_states={}, max_depth={depth}", opts.max_states)
}

// Verdict rendering. `state`, when given, prints each witness state.
fn verdict_text(v: &Verdict, bounds: &str, state: Option<&dyn Fn(usize) -> String>) -> String {
    let mut s = format!("{}: {}\n", v.property, v.status.as_str());
    if !v.reason.is_empty() {
        let _ = writeln!(s, "  {}", v.reason);
    }
    let extent = if v.complete { "complete" } else { "truncated" };
    let _ = writeln!(s, "  states explored: {} ({extent})", v.states_explored);
    let _ = writeln!(s, "  bounds: {bounds}");
    if let Some(trace) = &v.trace {
        let _ = writeln!(s, "  trace: {}", trace.join(" "));
    }
    match (&v.witness, state) {
        (Some(w), Some(state)) => {
            let _ = writeln!(s, "  witness:");
            for &i in w {
                let _ = writeln!(s, "    #{i} {}", state(i));
            }
        }
        (Some(w), None) => {
            let ids: Vec<String> = w.iter().map(|i| format!("#{i}")).collect();
            let _ = writeln!(s, "  witness: {}", ids.join(" "));
        }
        (None, _) => {}
    }
    s
}

fn verdict_json(v: &Verdict, bounds: Value) -> Value {
    let mut j = v.to_json();
    j["bounds"] = bounds;
    j
}

fn emit_process_verdict(out: Out, v: &Verdict, g: &StateGraph, opts: ExploreOptions) -> u8 {
    out.emit(
        || verdict_text(v, &bounds_text(opts), Some(&|i| g.states[i].to_string())),
        || verdict_json(v, bounds_json(opts)),
    );
    status_code(v.status)
}

fn emit_system_verdict(out: Out, v: &Verdict, cap: usize) -> u8 {
    out.emit(
        || verdict_text(v, &format!("max_states={cap}"), None),
        || verdict_json(v, json!({ "max_states": cap })),
    );
    status_code(v.status)
}

fn graph_of(path: &Path, bounds: Bounds) -> Result<(StateGraph, ExploreOptions), Failure> {
    let p = load_process(path)?;
    let opts = bounds.options();
    Ok((explore(&p, opts)?, opts))
}

fn run(command: Command, out: Out) -> Run {
    match command {
        Command::Parse { file, kind } => parse_command(&file, kind, out),
        Command::Lts { file, bounds, dot, json } => {
            let (g, opts) = graph_of(&file, bounds)?;
            if dot {
                put(&g.to_dot());
            } else if json || out.json() {
                let mut j = g.to_json();
                j["bounds"] = bounds_json(opts);
                put(&(serde_json::to_string_pretty(&j)? + "\n"));
            } else {
                put(&lts_text(&g, opts));
            }
            Ok(0)
        }
        Command::Check(CheckCommand::Ba { file, error, k, bounds }) => {
            let (g, opts) = graph_of(&file, bounds)?;
            Ok(emit_process_verdict(out, &check_ba(&g, &error, k), &g, opts))
        }
        Command::Check(CheckCommand::Ea { file, error, bounds }) => {
            let (g, opts) = graph_of(&file, bounds)?;
            Ok(emit_process_verdict(out, &check_ea(&g, &error), &g, opts))
        }
        Command::Mc { file, formula, schema: kind, error, ok, k, classify, bounds } => {
            let phi = match (formula, kind) {
                (Some(f), _) => load_formula(&f)?,
                (None, Some(kind)) => schema(kind, &SchemaParams { error, ok, k })?,
                (None, None) => return Err(Failure("either --formula or --schema is required".into())),
            };
            let (g, opts) = graph_of(&file, bounds)?;
            let mc = model_check(&g, &phi);
            let class = classify.then(|| classify_formula(&phi).as_str());
            out.emit(
                || {
                    let mut s = format!("formula: {phi}\n");
                    if let Some(c) = class {
                        let _ = writeln!(s, "class: {c}");
                    }
                    let _ = writeln!(s, "satisfying states: {} of {}", mc.sat.len(), g.len());
                    s + &verdict_text(&mc.verdict, &bounds_text(opts), Some(&|i| g.states[i].to_string()))
                },
                || {
                    let mut j = verdict_json(&mc.verdict, bounds_json(opts));
                    j["formula"] = json!(phi.to_string());
                    j["sat"] = json!(mc.sat);
                    if let Some(c) = class {
                        j["class"] = json!(c);
                    }
                    j
                },
            );
            Ok(status_code(mc.verdict.status))
        }
        Command::Choreo(c) => choreo_command(c, out),
        Command::Orch(OrchCommand::Correct { file, cap }) => {
            let sys = load_system(&file)?;
            let v = check_correct_composition_capped(&sys, cap.get())?;
            Ok(emit_system_verdict(out, &v, cap.get()))
        }
        Command::Orch(OrchCommand::Implements { system, choreography, cap }) => {
            let sys = load_system(&system)?;
            let h = load_choreography(&choreography)?;
            let v = check_implements_capped(&sys, &h, cap.get())?;
            Ok(emit_system_verdict(out, &v, cap.get()))
        }
        Command::Upd(c) => upd_command(c, out),
    }
}

fn load_formula(arg: &str) -> Result<Formula, Failure> {
    let path = Path::new(arg);
    if path.is_file() {
        with_path(path, parse_formula(&read(path)?))
    } else {
        Ok(parse_formula(arg)?)
    }
}

fn parse_command(file: &Path, kind: Option<TermKind>, out: Out) -> Run {
    let text = read(file)?;
    let (kind, term) = match kind.or_else(|| kind_from_extension(file)) {
        Some(kind) => (kind, with_path(file, SourceTerm { text, kind }.normalize())?),
        None => guess_kind(file, &text)?,
    };
    out.emit(|| format!("{term}\n"), || json!({ "kind": kind_name(kind), "term": term }));
    Ok(0)
}

// Tries the languages in a fixed order; the first successful parse wins.
fn guess_kind(file: &Path, text: &str) -> Result<(TermKind, String), Failure> {
    let order = [
        TermKind::System,
        TermKind::Process,
        TermKind::Choreography,
        TermKind::Orchestration,
        TermKind::Formula,
        TermKind::Pattern,
    ];
    let mut first_error = None;
    for kind in order {
        match (SourceTerm { text: text.to_string(), kind }).normalize() {
            Ok(term) => return Ok((kind, term)),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let e = first_error.expect("at least one language");
    Err(Failure(format!("{}: not a term of any language ({e}); use --kind", file.display())))
}

fn lts_text(g: &StateGraph, opts: ExploreOptions) -> String {
    let extent = if g.complete { "complete".to_string() } else { format!("truncated ({:?})", g.bounds_hit) };
    let mut s = format!("{} states, {} edges, {extent}\n", g.len(), g.edges().len());
    let _ = writeln!(s, "bounds: {}", bounds_text(opts));
    for (i, q) in g.states.iter().enumerate() {
        let barbs: Vec<String> = g.barbs[i].iter().map(|b| b.to_string()).collect();
        let succ: Vec<String> = g.succ[i].iter().map(|j| format!("#{j}")).collect();
        let _ = writeln!(s, "#{i} {q}");
        let _ = writeln!(s, "    barbs: {{{}}}  ->  {}", barbs.join(", "), succ.join(" "));
    }
    s
}

fn choreo_command(c: ChoreoCommand, out: Out) -> Run {
    match c {
        ChoreoCommand::Project { file, role } => {
            let h = load_choreography(&file)?;
            match role {
                Some(r) => {
                    let c = project(&h, &r).strip_units();
                    out.emit(|| format!("{c}\n"), || json!({ "role": r, "orchestration": c.to_string() }));
                }
                None => {
                    let sys = project_system(&h).strip_units();
                    out.emit(
                        || format!("{sys}\n"),
                        || {
                            let roles: Vec<Value> = sys
                                .roles
                                .iter()
                                .map(|(r, c)| json!({ "role": r, "orchestration": c.to_string() }))
                                .collect();
                            json!({ "system": sys.to_string(), "roles": roles })
                        },
                    );
                }
            }
            Ok(0)
        }
        ChoreoCommand::Wf { file, cap } => {
            let h = load_choreography(&file)?;
            let v = check_implements_capped(&project_system(&h), &h, cap.get())?;
            let v = Verdict { property: "well-formed".into(), ..v };
            Ok(emit_system_verdict(out, &v, cap.get()))
        }
        ChoreoCommand::Connected { file } => {
            let h = load_choreography(&file)?;
            let r = check_connectedness(&h)?;
            out.emit(
                || {
                    let mark = |b: bool| if b { "ok" } else { "fails" };
                    let mut s = format!("connected: {}\n", r.connected());
                    let _ = writeln!(s, "  sequence: {}", mark(r.seq));
                    let _ = writeln!(s, "  unique point of choice: {}", mark(r.choice));
                    let _ = writeln!(s, "  no operation interference: {}", mark(r.interference));
                    for w in &r.witnesses {
                        let _ = writeln!(s, "  - {w}");
                    }
                    s
                },
                || {
                    let mut j = serde_json::to_value(&r).expect("json");
                    j["connected"] = json!(r.connected());
                    j
                },
            );
            Ok(if r.connected() { 0 } else { 1 })
        }
    }
}

fn upd_command(c: UpdCommand, out: Out) -> Run {
    match c {
        UpdCommand::Validate { file } => {
            let h = load_choreography(&file)?;
            let r = validate_updatable(&h);
            out.emit(
                || {
                    let mut s = format!("valid: {}\n", r.valid);
                    for v in &r.violations {
                        let pos: Vec<String> = v.position.iter().map(|p| p.to_string()).collect();
                        let _ = writeln!(s, "  - {} at [{}]: {}", v.scope, pos.join("."), v.message);
                    }
                    s
                },
                || serde_json::to_value(&r).expect("json"),
            );
            Ok(if r.valid { 0 } else { 1 })
        }
        UpdCommand::Simulate { file, script } => {
            let text = read(&file)?;
            let is_system = kind_from_extension(&file) == Some(TermKind::System)
                || (kind_from_extension(&file).is_none() && text.trim_start().starts_with('['));
            let subject = if is_system {
                Subject::System(with_path(&file, parse_system(&text))?)
            } else {
                Subject::Choreography(with_path(&file, parse_choreography(&text))?)
            };
            let mut s = with_path(&script, Script::parse(&read(&script)?))?;
            let base = script.parent().unwrap_or(Path::new("."));
            with_path(&script, s.resolve_files(base))?;
            let log = simulate(&subject, &s)?;
            out.emit(|| log.to_text(), || log.to_json());
            Ok(0)
        }
        UpdCommand::Correspond { file, cap } => {
            let h = load_choreography(&file)?;
            let r = trace_correspondence(&h, cap.get())?;
            out.emit(
                || {
                    let mut s = format!("corresponds: {}\n  states explored: {}\n", r.corresponds, r.states_explored);
                    if let Some(w) = &r.counterexample {
                        let _ = writeln!(s, "  counterexample: {}", w.join(" "));
                    }
                    s
                },
                || serde_json::to_value(&r).expect("json"),
            );
            Ok(if r.corresponds { 0 } else { 1 })
        }
    }
}
