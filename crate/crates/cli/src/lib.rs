//! Argument handling for the `surveil` binary, kept in a library so tests
//! can drive it without spawning processes.

use std::fmt::{Display, Write as _};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use surveil_core::scenario::{self, load_events, load_graph, load_pairs, load_table, ReportFormat, Scenario};
use surveil_core::{
    classify_cardinality, reduce_ims, schemes, surveil_and_sort, validate_format, ModelError, Scheme, ScenarioError,
    Snapshot, TransformChain, TransformTable,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "surveil", version, about = "Identifier schemes, identity systems and surveillance over event streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a value against an identifier scheme.
    Validate {
        /// Built-in scheme (NI, PASSPORT, NHS, LICENCE) or one declared in --scenario.
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        value: String,
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Classify the cardinality of an `identifier,entity` CSV relation.
    Classify {
        #[arg(long)]
        pairs: PathBuf,
    },
    /// Run surveillance and social sorting over an event stream.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        events: PathBuf,
        /// Write the report here; the table form still goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "structured")]
        format: Format,
        /// End of stream in ms; defaults to the last event's time.
        #[arg(long)]
        stream_end: Option<u64>,
    },
    /// Query a provenance graph.
    Prov(ProvArgs),
    /// Translate an identifier through one or more lookup tables.
    Translate {
        /// Declares the schemes on each side of the tables.
        #[arg(long)]
        scenario: PathBuf,
        /// A table name declared in the scenario, or a CSV path matching one.
        #[arg(long)]
        table: String,
        #[arg(long)]
        value: String,
        /// Further tables applied in order after --table.
        #[arg(long, value_delimiter = ',')]
        chain: Vec<String>,
    },
    /// Score how faithfully one snapshot's system reduces to another's.
    Reduce {
        #[arg(long)]
        from_snap: PathBuf,
        #[arg(long)]
        to_snap: PathBuf,
        #[arg(long)]
        table: PathBuf,
        /// Needed only when the snapshot holds more than one system.
        #[arg(long)]
        from_ims: Option<String>,
        #[arg(long)]
        to_ims: Option<String>,
    },
    /// Instantiate a scenario's systems and save them as a snapshot.
    Snapshot {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[group(skip)]
#[command(group(clap::ArgGroup::new("query").required(true).multiple(false)))]
struct ProvArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    node: String,
    #[arg(long, group = "query")]
    paths: bool,
    #[arg(long, group = "query")]
    validity: bool,
    #[arg(long, group = "query")]
    reliability: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Structured,
    Table,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Structured => ReportFormat::Structured,
            Format::Table => ReportFormat::Table,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// A domain failure: where it happened and the error, whose message
/// starts with its name.
struct Failure(String);

fn at(location: impl Display) -> impl FnOnce(ScenarioError) -> Failure {
    move |e| Failure(format!("{location}: {e}"))
}

fn fail(location: impl Display, e: impl Display) -> Failure {
    Failure(format!("{location}: {e}"))
}

/// Parses `argv` (including the program name) and runs the command.
pub fn dispatch<I, T>(argv: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let (stdout, stderr) = if code == EXIT_OK { (text, String::new()) } else { (String::new(), text) };
            return CommandOutcome { code, stdout, stderr };
        }
    };
    let mut out = String::new();
    match run(cli.command, &mut out) {
        Ok(()) => CommandOutcome { code: EXIT_OK, stdout: out, stderr: String::new() },
        Err(Failure(msg)) => CommandOutcome { code: EXIT_DOMAIN, stdout: out, stderr: format!("error: {msg}\n") },
    }
}

fn find_scheme(name: &str, scenario: Option<&Path>) -> Result<Scheme, Failure> {
    if let Some(path) = scenario {
        let s = scenario::load_scenario(path).map_err(at(path.display()))?;
        if let Ok(scheme) = s.model.scheme(name) {
            return Ok(scheme.clone());
        }
    }
    schemes::by_name(name).ok_or_else(|| {
        fail("--scheme", ScenarioError::UnknownName { kind: "scheme", name: name.to_string() })
    })
}

/// Resolves a table by declared name, or by a path naming a declared table's file.
fn find_table<'a>(s: &'a Scenario, key: &str) -> Result<&'a TransformTable, Failure> {
    if let Ok(t) = s.table(key) {
        return Ok(t);
    }
    let wanted = std::fs::canonicalize(key).ok();
    s.model
        .tables
        .values()
        .find(|d| wanted.is_some() && std::fs::canonicalize(s.base_dir.join(&d.file)).ok() == wanted)
        .and_then(|d| s.tables.get(&d.name))
        .ok_or_else(|| fail("--table", ScenarioError::UnknownName { kind: "table", name: key.to_string() }))
}

fn pick_system<'a>(
    snap: &'a Snapshot,
    name: Option<&str>,
    path: &Path,
) -> Result<&'a surveil_core::IdentityManagementSystem, Failure> {
    match name {
        Some(n) => snap.system(n).map_err(at(path.display())),
        None if snap.systems.len() == 1 => Ok(snap.systems.values().next().expect("one system")),
        None => Err(fail(
            path.display(),
            ScenarioError::UnknownName { kind: "system (pass --from-ims/--to-ims)", name: "<unspecified>".into() },
        )),
    }
}

fn run(command: Command, out: &mut String) -> Result<(), Failure> {
    match command {
        Command::Validate { scheme, value, scenario } => {
            let scheme = find_scheme(&scheme, scenario.as_deref())?;
            let check = validate_format(&value, &scheme);
            match check.canonical {
                Some(c) if check.valid => {
                    let _ = writeln!(out, "valid {c}");
                }
                _ => {
                    out.push_str("invalid\n");
                    let e = ModelError::FormatMismatch { scheme: scheme.name().to_string(), value };
                    return Err(fail("--value", e));
                }
            }
        }
        Command::Classify { pairs } => {
            let assoc = load_pairs(&pairs).map_err(at(pairs.display()))?;
            let class = classify_cardinality(&assoc);
            let _ = writeln!(out, "{class} (case {}, {})", class.case_number(), class.legacy_label());
        }
        Command::Run { scenario, events, out: report_path, format, stream_end } => {
            let s = scenario::load_scenario(&scenario).map_err(at(scenario.display()))?;
            let mut ctx = s.model.context().map_err(at(scenario.display()))?;
            ctx.stream_end = stream_end;
            let evs = load_events(&events).map_err(at(events.display()))?;
            let report = surveil_and_sort(&evs, &ctx, &s.model.sort_keys).map_err(|e| fail(scenario.display(), e))?;
            match report_path {
                Some(path) => {
                    scenario::write_report(&report, format.into(), &path).map_err(at(path.display()))?;
                    out.push_str(&scenario::render_report(&report, ReportFormat::Table));
                }
                None => out.push_str(&scenario::render_report(&report, format.into())),
            }
        }
        Command::Prov(args) => {
            let g = load_graph(&args.graph).map_err(at(args.graph.display()))?;
            let loc = format!("{} node {}", args.graph.display(), args.node);
            if args.paths {
                for path in g.provenance_paths(&args.node).map_err(|e| fail(&loc, e))? {
                    let _ = writeln!(out, "{}", path.join(" -> "));
                }
            } else if args.validity {
                let valid = g.evaluate_validity(&args.node).map_err(|e| fail(&loc, e))?;
                out.push_str(if valid { "valid\n" } else { "invalid\n" });
            } else {
                let r = g.evaluate_reliability(&args.node).map_err(|e| fail(&loc, e))?;
                let _ = writeln!(out, "{r}");
            }
        }
        Command::Translate { scenario, table, value, chain } => {
            let s = scenario::load_scenario(&scenario).map_err(at(scenario.display()))?;
            let mut steps = vec![find_table(&s, &table)?];
            for name in &chain {
                steps.push(find_table(&s, name)?);
            }
            let chain = TransformChain::new(steps).map_err(|e| fail("--chain", e))?;
            let from = s.model.scheme(chain.steps()[0].from_scheme()).map_err(at(scenario.display()))?;
            let id = from.identifier(&value).map_err(|e| fail("--value", e))?;
            let t = chain.compose(&id).map_err(|e| fail("--value", e))?;
            for step in &t.trace {
                let _ = writeln!(out, "{}: {} -> {}", step.table, step.input, step.output);
            }
            let _ = writeln!(out, "{}", t.result);
        }
        Command::Reduce { from_snap, to_snap, table, from_ims, to_ims } => {
            let a_snap = Snapshot::load(&from_snap).map_err(at(from_snap.display()))?;
            let b_snap = Snapshot::load(&to_snap).map_err(at(to_snap.display()))?;
            let a = pick_system(&a_snap, from_ims.as_deref(), &from_snap)?;
            let b = pick_system(&b_snap, to_ims.as_deref(), &to_snap)?;
            let name = table.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let t = load_table(&table, &name, a.scheme(), b.scheme()).map_err(at(table.display()))?;
            let r = reduce_ims(a, b, &t).map_err(|e| fail(table.display(), e))?;
            let missing: Vec<String> = r.missing.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "coverage: {}", r.coverage);
            let _ = writeln!(out, "conflicts: {}", r.conflicts);
            let _ = writeln!(out, "missing: {}", if missing.is_empty() { "-".into() } else { missing.join(", ") });
        }
        Command::Snapshot { scenario, out: path } => {
            let s = scenario::load_scenario(&scenario).map_err(at(scenario.display()))?;
            let snap = Snapshot::from_model(s.model).map_err(at(scenario.display()))?;
            snap.save(&path).map_err(at(path.display()))?;
            let _ = writeln!(out, "wrote {} ({} systems)", path.display(), snap.systems.len());
        }
    }
    Ok(())
}
