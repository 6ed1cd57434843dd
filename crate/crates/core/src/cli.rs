//! Command-line front end. Every report line is a set of `key=value` pairs.
//!
//! Exit codes: 0 success, 1 parse/validation/internal error, 2 infeasible or
//! otherwise negative answer, 3 oracle state limit hit.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::graph::SlideViolation;
use crate::instance::{format_sequence, parse_sequence, Instance, ParseError};
use crate::oracle::{enumerate_exhaustive, oracle_shortest, sample_instances, Limits, OracleError, ShapeSpec};
use crate::planner::{solve, PlanError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "spider-ts", version, about = "Shortest token sliding on spider graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance and report length, lower bound and detours.
    Solve {
        instance: PathBuf,
        /// Write the slide sequence here.
        #[arg(long)]
        emit_sequence: Option<PathBuf>,
    },
    /// Check that a sequence turns I into J.
    Verify { instance: PathBuf, sequence: PathBuf },
    /// Exact shortest length by breadth-first search.
    Oracle {
        instance: PathBuf,
        #[arg(long, default_value_t = Limits::default().max_states)]
        max_states: usize,
    },
    /// Write seeded random instances to a directory.
    Gen {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Compare the solver with the oracle on generated instances.
    Diff {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// Enumerate every instance of the shape instead of sampling.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = Limits::default().max_states)]
        max_states: usize,
        /// Mismatching instances are written here.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ShapeArgs {
    #[arg(long, default_value_t = 3)]
    pub legs: usize,
    #[arg(long, default_value_t = 3)]
    pub leg_len: usize,
    #[arg(long, default_value_t = 3)]
    pub tokens: usize,
    #[arg(long)]
    pub max_vertices: Option<usize>,
}

impl ShapeArgs {
    fn spec(self) -> ShapeSpec {
        let spec = ShapeSpec::new(self.legs, self.leg_len, self.tokens);
        match self.max_vertices {
            Some(m) => spec.with_max_vertices(m),
            None => spec,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("output: {0}")]
    Output(#[from] std::io::Error),
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn load(path: &Path) -> Result<Instance, CliError> {
    Instance::parse(&read(path)?).map_err(|source| CliError::Parse { path: path.to_owned(), source })
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn execute(command: Command, out: &mut impl Write) -> Result<i32, CliError> {
    match command {
        Command::Solve { instance, emit_sequence } => cmd_solve(&instance, emit_sequence.as_deref(), out),
        Command::Verify { instance, sequence } => cmd_verify(&instance, &sequence, out),
        Command::Oracle { instance, max_states } => cmd_oracle(&instance, Limits { max_states }, out),
        Command::Gen { shape, seed, count, corpus } => cmd_gen(shape.spec(), seed, count, &corpus, out),
        Command::Diff { shape, seed, count, exhaustive, max_states, corpus } => {
            let instances: Box<dyn Iterator<Item = Instance>> = if exhaustive {
                Box::new(enumerate_exhaustive(shape.spec()))
            } else {
                Box::new(sample_instances(shape.spec(), seed).take(count))
            };
            cmd_diff(instances, seed, Limits { max_states }, corpus.as_deref(), out)
        }
    }
}

pub fn cmd_solve(path: &Path, emit: Option<&Path>, out: &mut impl Write) -> Result<i32, CliError> {
    let inst = load(path)?;
    let report = solve(&inst.spider, &inst.i, &inst.j)?;
    let case = report.case_tag.map_or("none", |t| t.as_str());
    writeln!(
        out,
        "len={} mstar={} detours={} case={case} feasible={}",
        report.length, report.mstar, report.detours, report.feasible
    )?;
    if !report.feasible {
        writeln!(out, "reason={:?}", report.verdict.to_string())?;
        return Ok(EXIT_NEGATIVE);
    }
    if let Some(emit) = emit {
        write(emit, &format_sequence(&report.sequence, Some((report.detours, report.mstar))))?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify(path: &Path, seq_path: &Path, out: &mut impl Write) -> Result<i32, CliError> {
    let inst = load(path)?;
    let seq = parse_sequence(&read(seq_path)?).map_err(|source| CliError::Parse { path: seq_path.to_owned(), source })?;
    match inst.spider.tree().replay(&inst.i, &seq) {
        Err(SlideViolation { index, kind }) => {
            writeln!(out, "valid=false move={index} reason={:?}", format!("{kind:?}"))?;
            Ok(EXIT_NEGATIVE)
        }
        Ok(reached) if reached != inst.j => {
            writeln!(out, "valid=false reason={:?} reached={:?}", "end state ≠ J", reached.to_string())?;
            Ok(EXIT_NEGATIVE)
        }
        Ok(_) => {
            writeln!(out, "valid=true len={}", seq.len())?;
            Ok(EXIT_OK)
        }
    }
}

pub fn cmd_oracle(path: &Path, limits: Limits, out: &mut impl Write) -> Result<i32, CliError> {
    let inst = load(path)?;
    match oracle_shortest(inst.spider.tree(), &inst.i, &inst.j, limits) {
        Ok(Some((len, _))) => {
            writeln!(out, "len={len}")?;
            Ok(EXIT_OK)
        }
        Ok(None) => {
            writeln!(out, "len=UNREACHABLE")?;
            Ok(EXIT_NEGATIVE)
        }
        Err(OracleError::ResourceExceeded(_)) => {
            writeln!(out, "len=RESOURCE-EXCEEDED")?;
            Ok(EXIT_RESOURCE)
        }
        Err(e) => Err(e.into()),
    }
}

fn instance_name(seed: u64, index: usize) -> String {
    format!("seed{seed}-{index:06}")
}

pub fn cmd_gen(shape: ShapeSpec, seed: u64, count: usize, dir: &Path, out: &mut impl Write) -> Result<i32, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_owned(), source })?;
    for (index, inst) in sample_instances(shape, seed).take(count).enumerate() {
        let path = dir.join(format!("{}.txt", instance_name(seed, index)));
        write(&path, &inst.to_string())?;
    }
    writeln!(out, "generated={count} seed={seed}")?;
    Ok(EXIT_OK)
}

/// Solver length, or `None` when it declares the instance infeasible.
fn solver_length(inst: &Instance) -> Result<Option<usize>, PlanError> {
    let report = solve(&inst.spider, &inst.i, &inst.j)?;
    Ok(report.feasible.then_some(report.length))
}

fn show(len: Option<usize>) -> String {
    len.map_or_else(|| "UNREACHABLE".to_owned(), |l| l.to_string())
}

pub fn cmd_diff(
    instances: impl Iterator<Item = Instance>,
    seed: u64,
    limits: Limits,
    corpus: Option<&Path>,
    out: &mut impl Write,
) -> Result<i32, CliError> {
    let (mut checked, mut mismatches, mut skipped) = (0, 0, 0);
    for (index, inst) in instances.enumerate() {
        let expected = match oracle_shortest(inst.spider.tree(), &inst.i, &inst.j, limits) {
            Ok(found) => found.map(|(len, _)| len),
            Err(OracleError::ResourceExceeded(_)) => {
                skipped += 1;
                writeln!(out, "skipped index={index}")?;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        checked += 1;
        let got = solver_length(&inst).map_err(|e| e.to_string());
        if got.as_ref() == Ok(&expected) {
            continue;
        }
        mismatches += 1;
        let shown = match &got {
            Ok(len) => show(*len),
            Err(e) => format!("{e:?}"),
        };
        writeln!(out, "mismatch index={index} solve={shown} oracle={}", show(expected))?;
        if let Some(dir) = corpus {
            fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_owned(), source })?;
            let name = instance_name(seed, index);
            write(&dir.join(format!("{name}.txt")), &inst.to_string())?;
            write(&dir.join(format!("{name}.expected")), &format!("{}\n", show(expected)))?;
        }
    }
    writeln!(out, "checked={checked} mismatches={mismatches} skipped={skipped}")?;
    Ok(if mismatches == 0 { EXIT_OK } else { EXIT_NEGATIVE })
}
