//! Command-line frontend: solve, diagnose and explain catalog problems.
//!
//! Exit codes: 0 on success, 1 when no allowed relaxation helps (or a
//! validated space has violations), 2 on unreadable or malformed input.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use cfxplain_core::catalog::resolve_catalog;
use cfxplain_core::report::format_solutions;
use cfxplain_core::{
    assemble_problem, assemble_problem_unvalidated, counterfactual_xplain, load_problem_file, maximal_relaxation,
    minimal_conflict, solve, validate_space, Assembled, CatalogError, Constraint, ExplainError, Outcome, OutcomeReport,
    ProblemSpec,
};
use cfxplain_service::{CatalogUpload, SessionStore};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(
    name = "cfxplain",
    version,
    about = "Counterfactual explanations for over-constrained catalog problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Problem file, or `-` for standard input.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List solutions of the background plus all user constraints.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        limit: u64,
    },
    /// Find the smallest changes to user constraints that restore feasibility.
    Explain {
        #[command(flatten)]
        common: Common,
        /// Include every tightening attempt.
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        limit: u64,
    },
    /// Report a minimal conflicting subset of the user constraints.
    Conflict {
        #[command(flatten)]
        common: Common,
    },
    /// Keep as many user constraints as possible, in order.
    Relax {
        #[command(flatten)]
        common: Common,
    },
    /// Check every relaxation space for structural and semantic problems.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Run the HTTP session service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// CSV catalogs to register at startup, named after the file stem.
        #[arg(long = "catalog")]
        catalogs: Vec<PathBuf>,
        /// Write a JSON snapshot of each session after every change.
        #[arg(long)]
        snapshot_dir: Option<PathBuf>,
    },
}

/// Output streams; `stdin` feeds `-` inputs.
pub struct Io<'a> {
    pub stdin: &'a mut dyn Read,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

enum Failure {
    Input(String),
    Io(std::io::Error),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<CatalogError> for Failure {
    fn from(e: CatalogError) -> Self {
        match e {
            CatalogError::Io { .. } => Failure::Input(e.to_string()),
            other => Failure::Input(format!("invalid problem: {other}")),
        }
    }
}

impl From<ExplainError> for Failure {
    fn from(e: ExplainError) -> Self {
        Failure::Input(format!("cannot analyse problem: {e}"))
    }
}

impl From<cfxplain_core::CspError> for Failure {
    fn from(e: cfxplain_core::CspError) -> Self {
        Failure::Input(format!("invalid problem: {e}"))
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, io: &mut Io<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(io.stderr, "{text}");
                2
            } else {
                let _ = write!(io.stdout, "{text}");
                0
            };
        }
    };
    match execute(cli.command, io) {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(io.stderr, "error: {msg}");
            2
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(io.stderr, "error: {e}");
            2
        }
    }
}

fn read_spec(input: &Path, stdin: &mut dyn Read) -> Result<(ProblemSpec, Option<cfxplain_core::Catalog>), Failure> {
    if input == Path::new("-") {
        let mut text = String::new();
        stdin
            .read_to_string(&mut text)
            .map_err(|e| Failure::Input(format!("cannot read standard input: {e}")))?;
        let spec = ProblemSpec::from_json(&text)?;
        let catalog = resolve_catalog(&spec, Path::new("."))?;
        Ok((spec, catalog))
    } else {
        Ok(load_problem_file(input)?)
    }
}

fn load(common: &Common, stdin: &mut dyn Read) -> Result<Assembled, Failure> {
    let (spec, catalog) = read_spec(&common.input, stdin)?;
    Ok(assemble_problem(&spec, catalog.as_ref())?)
}

fn listing(constraints: &[Constraint]) -> Vec<serde_json::Value> {
    constraints
        .iter()
        .map(|c| json!({"id": c.id, "constraint": c.body.to_string()}))
        .collect()
}

fn pretty(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("json value serializes")
}

fn execute(command: Command, io: &mut Io<'_>) -> Result<i32, Failure> {
    match command {
        Command::Solve { common, limit } => {
            let a = load(&common, io.stdin)?;
            let all: Vec<Constraint> = a
                .problem
                .background()
                .iter()
                .chain(a.problem.foreground())
                .cloned()
                .collect();
            let solutions = solve(&a.problem, &all, limit as usize)?;
            match common.format {
                Format::Json => {
                    let out = json!({"consistent": !solutions.is_empty(), "solutions": solutions});
                    writeln!(io.stdout, "{}", pretty(&out))?;
                }
                Format::Text if solutions.is_empty() => writeln!(io.stdout, "no solutions")?,
                Format::Text => {
                    writeln!(io.stdout, "{} solution(s):", solutions.len())?;
                    write!(io.stdout, "{}", format_solutions(&solutions))?;
                }
            }
            Ok(0)
        }
        Command::Explain { common, trace, limit } => {
            let a = load(&common, io.stdin)?;
            let outcome = counterfactual_xplain(&a.problem, &a.spaces)?;
            let report = OutcomeReport::build(&a.problem, &outcome, limit as usize, trace)?;
            match common.format {
                Format::Json => writeln!(io.stdout, "{}", report.to_json())?,
                Format::Text => write!(io.stdout, "{}", report.to_text(&a.problem, &outcome))?,
            }
            Ok(if outcome == Outcome::NoRelaxation { 1 } else { 0 })
        }
        Command::Conflict { common } => {
            let a = load(&common, io.stdin)?;
            match minimal_conflict(&a.problem) {
                Err(ExplainError::NoConflict) => {
                    match common.format {
                        Format::Json => writeln!(io.stdout, "{}", pretty(&json!({"conflict": []})))?,
                        Format::Text => writeln!(io.stdout, "no conflict")?,
                    }
                    Ok(0)
                }
                Err(e) => Err(e.into()),
                Ok(conflict) => {
                    match common.format {
                        Format::Json => writeln!(io.stdout, "{}", pretty(&json!({"conflict": listing(&conflict)})))?,
                        Format::Text => {
                            writeln!(io.stdout, "minimal conflict:")?;
                            for c in &conflict {
                                writeln!(io.stdout, "  {}: {}", c.id, c.body)?;
                            }
                        }
                    }
                    Ok(0)
                }
            }
        }
        Command::Relax { common } => {
            let a = load(&common, io.stdin)?;
            let (kept, excluded) = maximal_relaxation(&a.problem)?;
            match common.format {
                Format::Json => {
                    let out = json!({"relaxation": listing(&kept), "exclusion": listing(&excluded)});
                    writeln!(io.stdout, "{}", pretty(&out))?;
                }
                Format::Text => {
                    for (title, list) in [("kept", &kept), ("excluded", &excluded)] {
                        writeln!(io.stdout, "{title}:")?;
                        for c in list {
                            writeln!(io.stdout, "  {}: {}", c.id, c.body)?;
                        }
                    }
                }
            }
            Ok(0)
        }
        Command::Validate { common } => {
            let (spec, catalog) = read_spec(&common.input, io.stdin)?;
            let a = assemble_problem_unvalidated(&spec, catalog.as_ref())?;
            let mut reports = Vec::new();
            let mut clean = true;
            for c in a.problem.foreground() {
                let violations: Vec<String> = validate_space(&a.spaces[&c.id], &a.problem)
                    .iter()
                    .map(ToString::to_string)
                    .collect();
                clean &= violations.is_empty();
                reports.push((c.id.clone(), violations));
            }
            match common.format {
                Format::Json => {
                    let spaces: Vec<_> = reports
                        .iter()
                        .map(|(id, v)| json!({"id": id, "violations": v}))
                        .collect();
                    writeln!(io.stdout, "{}", pretty(&json!({"valid": clean, "spaces": spaces})))?;
                }
                Format::Text => {
                    for (id, violations) in &reports {
                        if violations.is_empty() {
                            writeln!(io.stdout, "{id}: ok")?;
                        }
                        for v in violations {
                            writeln!(io.stdout, "{id}: {v}")?;
                        }
                    }
                }
            }
            Ok(if clean { 0 } else { 1 })
        }
        Command::Serve {
            port,
            host,
            catalogs,
            snapshot_dir,
        } => {
            let store = match snapshot_dir {
                Some(dir) => SessionStore::with_snapshot_dir(dir),
                None => SessionStore::new(),
            };
            for path in catalogs {
                let csv = std::fs::read_to_string(&path)
                    .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
                let id = path.file_stem().map(|s| s.to_string_lossy().into_owned());
                let info = store
                    .register_catalog(CatalogUpload {
                        id,
                        csv: Some(csv),
                        ..CatalogUpload::default()
                    })
                    .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                writeln!(io.stderr, "registered catalog {:?} ({} rows)", info.id, info.rows)?;
            }
            let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            runtime.block_on(cfxplain_service::serve(SocketAddr::new(host, port), Arc::new(store)))?;
            Ok(0)
        }
    }
}
