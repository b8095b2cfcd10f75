//! Command-line front end: job documents in, tables and JSON reports out.
//!
//! Exit codes: 0 success, 1 a validated mathematical failure (the report
//! carries a witness), 2 usage, parse, schema or other input errors.

pub mod job;
pub mod report;
pub mod wire;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::mixed::DegreeCohomology;
use crate::singularity::{jacobian_ring, TwistedDeRhamSetup};
use crate::Cutoffs;
use job::{JobDocument, Payload};
use wire::{form_witness, poly_witness};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MATHEMATICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Check,
    Classify,
    Truncate,
    Cohomology,
    CrystalCohomology,
    Compare,
    Singularity,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Classify => "classify",
            Command::Truncate => "truncate",
            Command::Cohomology => "cohomology",
            Command::CrystalCohomology => "crystal-cohomology",
            Command::Compare => "compare",
            Command::Singularity => "singularity",
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "foliate", version, about = "Exact computations with derived foliations on affine space")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand, Debug)]
enum CliCommand {
    /// Validate the structure (integrability, Jacobi identity, flatness).
    Check(JobArgs),
    /// Smooth / quasi-smooth / rigid verdicts.
    Classify(JobArgs),
    /// Generators of the classical truncation up to the degree cutoff.
    Truncate(JobArgs),
    /// Foliated de Rham cohomology of the foliation (or crystal, or flat functions).
    Cohomology(JobArgs),
    /// Foliated cohomology of a crystal; plain foliations use the unit crystal.
    CrystalCohomology(JobArgs),
    /// Foliated versus naive de Rham cohomology.
    Compare(JobArgs),
    /// Jacobian ring, Milnor number and Koszul stages of a function.
    Singularity(JobArgs),
}

/// Per-invocation options shared by every command.
#[derive(Args, Debug, Clone, Default)]
pub struct JobArgs {
    /// Path to a JSON job document.
    pub job: PathBuf,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Weight cutoff P.
    #[arg(long)]
    pub cutoff_weight: Option<usize>,
    /// Polynomial degree cutoff D.
    #[arg(long)]
    pub cutoff_degree: Option<i64>,
    /// Jet / multiplier bound for ideal computations.
    #[arg(long)]
    pub jet_bound: Option<u32>,
    /// Suppress the table on stdout and the timing line on stderr.
    #[arg(long)]
    pub quiet: bool,
}

impl JobArgs {
    /// Document cutoffs (or defaults) overridden by any flags given.
    pub fn cutoffs(&self, job: &JobDocument) -> Cutoffs {
        let mut c = job.effective_cutoffs();
        if let Some(w) = self.cutoff_weight {
            c.weight = w;
        }
        if let Some(d) = self.cutoff_degree {
            c.poly_degree = d;
        }
        if let Some(j) = self.jet_bound {
            c.jet_bound = j;
        }
        c
    }
}

/// A finished run: the JSON report and the process exit code.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub exit_code: i32,
}

impl Outcome {
    /// Pretty JSON with sorted keys and a trailing newline.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut s = serde_json::to_string_pretty(&self.report).expect("reports serialize");
        s.push('\n');
        s.into_bytes()
    }
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_mathematical() {
        EXIT_MATHEMATICAL
    } else {
        EXIT_USAGE
    }
}

/// Runs `command` on a parsed job with the given effective cutoffs.
pub fn run(command: Command, job: &JobDocument, cutoffs: Cutoffs) -> Outcome {
    let mut report = BTreeMap::new();
    report.insert("command".to_string(), json!(command.name()));
    report.insert("job".to_string(), job.to_json());
    report.insert("cutoffs".to_string(), json!(cutoffs));
    let exit = match dispatch(command, job, &cutoffs) {
        Ok(result) => {
            report.insert("status".into(), json!("ok"));
            report.insert("result".into(), result);
            EXIT_OK
        }
        Err(e) => {
            let code = exit_code(&e);
            let status = if code == EXIT_MATHEMATICAL { "mathematical_failure" } else { "error" };
            report.insert("status".into(), json!(status));
            report.insert("error".into(), error_json(&e, &job.variables));
            code
        }
    };
    report.insert("exit_code".into(), json!(exit));
    Outcome {
        report: Value::Object(report.into_iter().collect()),
        exit_code: exit,
    }
}

/// Parses the job at `args.job` and runs `command` on it.
pub fn run_path(command: Command, args: &JobArgs) -> Outcome {
    match job::parse_job(&args.job) {
        Ok(job) => run(command, &job, args.cutoffs(&job)),
        Err(e) => Outcome {
            report: json!({
                "command": command.name(),
                "status": "error",
                "error": error_json(&e, &[]),
                "exit_code": EXIT_USAGE,
            }),
            exit_code: EXIT_USAGE,
        },
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::ShapeMismatch(_) => "ShapeMismatch",
        Error::NotAComplex(_) => "NotAComplex",
        Error::NonSquare { .. } => "NonSquare",
        Error::NotDifferentialIdeal { .. } => "NotDifferentialIdeal",
        Error::ConnectionNotFlat { .. } => "ConnectionNotFlat",
        Error::NotALieAlgebroid { .. } => "NotALieAlgebroid",
        Error::NotFlat { .. } => "NotFlat",
        Error::Unsupported(_) => "Unsupported",
        Error::NotIsolated(_) => "NotIsolated",
        Error::InvalidInput(_) => "InvalidInput",
        Error::InvalidMixedStructure(_) => "InvalidMixedStructure",
        Error::CutoffOutOfRange { .. } => "CutoffOutOfRange",
        Error::Parse(_) => "ParseError",
        Error::Schema { .. } => "SchemaError",
        Error::Io(_) => "IoError",
    }
}

fn error_json(e: &Error, names: &[String]) -> Value {
    let mut o = json!({ "kind": error_kind(e), "message": e.to_string() });
    let witness = match e {
        Error::NotDifferentialIdeal {
            index,
            residual,
            in_ideal,
        } => Some(json!({
            "index": index,
            "residual": form_witness(residual, names),
            "residual_in_ideal": in_ideal,
        })),
        Error::ConnectionNotFlat { defect } => {
            let entries: Vec<Value> = defect
                .entries()
                .iter()
                .enumerate()
                .flat_map(|(i, row)| {
                    row.iter().enumerate().filter(|(_, w)| !w.is_zero()).map(move |(j, w)| {
                        json!({ "row": i, "column": j, "form": form_witness(w, names) })
                    })
                })
                .collect();
            Some(json!({ "curvature_entries": entries }))
        }
        Error::NotALieAlgebroid { identity, defect } => Some(json!({
            "identity": identity,
            "defect": defect.iter().map(|p| poly_witness(p, names)).collect::<Vec<_>>(),
        })),
        Error::NotFlat { pair, defect } => Some(json!({
            "pair": pair,
            "curvature": defect
                .iter()
                .map(|row| row.iter().map(|p| poly_witness(p, names)).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })),
        Error::Schema { path, .. } => Some(json!({ "path": path })),
        Error::NotIsolated(bound) => Some(json!({ "jet_bound": bound })),
        _ => None,
    };
    if let Some(w) = witness {
        o["witness"] = w;
    }
    o
}

fn degrees_json(map: &BTreeMap<i64, DegreeCohomology>) -> Value {
    Value::Array(
        map.iter()
            .map(|(q, c)| {
                let mut v = serde_json::to_value(c).expect("cohomology serializes");
                v["degree"] = json!(q);
                v
            })
            .collect(),
    )
}

fn incompatible(command: Command, job: &JobDocument) -> Error {
    Error::Unsupported(format!("command {} does not apply to a {} job", command.name(), job.kind()))
}

fn singularity_setup(job: &JobDocument, cutoffs: &Cutoffs) -> Result<TwistedDeRhamSetup> {
    let f = match &job.payload {
        Payload::Singularity { function } => function.clone(),
        Payload::Integrable { functions } if functions.len() == 1 => functions[0].clone(),
        _ => return Err(Error::Unsupported("expected a singularity job or a single integrable function".into())),
    };
    TwistedDeRhamSetup::new(f, *cutoffs, job.weights.clone())
}

fn dispatch(command: Command, job: &JobDocument, cutoffs: &Cutoffs) -> Result<Value> {
    let names = &job.variables;
    match command {
        Command::Check => {
            let fol = job.foliation()?;
            let mut out = json!({
                "valid": true,
                "provenance": fol.provenance(),
                "n": fol.n(),
                "letters": fol.model().num_letters,
                "cotangent": { "k": fol.cotangent().k, "m": fol.cotangent().m },
            });
            match &job.payload {
                Payload::Crystal { .. } => {
                    let c = job.crystal()?;
                    out["rank"] = json!(c.rank());
                    out["flat"] = json!(true);
                }
                Payload::Singularity { function } => {
                    let data = jacobian_ring(function, cutoffs.jet_bound);
                    out["isolated"] = json!(data.is_isolated());
                    out["milnor_number"] = json!(data.milnor_number);
                }
                _ => {}
            }
            Ok(out)
        }
        Command::Classify => {
            let fol = job.foliation()?;
            let mut out = serde_json::to_value(fol.classify(cutoffs)).expect("classification serializes");
            out["provenance"] = json!(fol.provenance());
            Ok(out)
        }
        Command::Truncate => {
            if let Payload::Crystal { .. } = job.payload {
                let obj = job.crystal()?.truncate(cutoffs.poly_degree)?;
                let connection: Vec<Vec<Value>> = obj
                    .connection
                    .iter()
                    .map(|row| row.iter().map(|w| form_witness(w, names)).collect())
                    .collect();
                return Ok(json!({
                    "degree_bound": obj.gens.degree_bound,
                    "generators": obj.gens.generators.iter().map(|g| form_witness(g, names)).collect::<Vec<_>>(),
                    "rank": obj.rank,
                    "connection": connection,
                    "curvature_in_ideal": obj.flat,
                }));
            }
            let gens = job.foliation()?.truncate(cutoffs.poly_degree)?;
            Ok(json!({
                "degree_bound": gens.degree_bound,
                "generators": gens.generators.iter().map(|g| form_witness(g, names)).collect::<Vec<_>>(),
            }))
        }
        Command::Cohomology => {
            let map = match &job.payload {
                Payload::Crystal { .. } => job.crystal()?.foliated_cohomology(cutoffs)?,
                Payload::Singularity { .. } => singularity_setup(job, cutoffs)?.flat_function_cohomology()?,
                _ => job.foliation()?.cohomology(cutoffs)?,
            };
            Ok(json!({ "degrees": degrees_json(&map) }))
        }
        Command::CrystalCohomology => {
            if let Payload::Singularity { .. } = job.payload {
                return Err(incompatible(command, job));
            }
            let c = job.crystal()?;
            let map = c.foliated_cohomology(cutoffs)?;
            Ok(json!({ "rank": c.rank(), "degrees": degrees_json(&map) }))
        }
        Command::Compare => {
            if let Payload::Singularity { .. } = job.payload {
                let report = singularity_setup(job, cutoffs)?.twisted_comparison_report()?;
                return Ok(serde_json::to_value(report).expect("comparison serializes"));
            }
            let report = job.crystal()?.comparison_report(cutoffs)?;
            Ok(serde_json::to_value(report).expect("comparison serializes"))
        }
        Command::Singularity => {
            let setup = singularity_setup(job, cutoffs)?;
            let data = jacobian_ring(&setup.f, cutoffs.jet_bound);
            let mut out = json!({
                "function": poly_witness(&setup.f, names),
                "isolated": data.is_isolated(),
                "milnor_number": data.milnor_number,
                "jacobian": data,
            });
            if data.is_isolated() {
                let koszul = setup.koszul_stage_cohomology(setup.n)?;
                out["koszul"] = degrees_json(&koszul);
            }
            let gradient: Vec<Value> = setup.f.gradient().iter().map(|g| poly_witness(g, names)).collect();
            out["gradient"] = Value::Array(gradient);
            Ok(out)
        }
    }
}

fn write_report(path: &Path, outcome: &Outcome) -> Result<()> {
    std::fs::write(path, outcome.to_bytes()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_entry<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (command, args) = match cli.command {
        CliCommand::Check(a) => (Command::Check, a),
        CliCommand::Classify(a) => (Command::Classify, a),
        CliCommand::Truncate(a) => (Command::Truncate, a),
        CliCommand::Cohomology(a) => (Command::Cohomology, a),
        CliCommand::CrystalCohomology(a) => (Command::CrystalCohomology, a),
        CliCommand::Compare(a) => (Command::Compare, a),
        CliCommand::Singularity(a) => (Command::Singularity, a),
    };
    let start = Instant::now();
    let outcome = run_path(command, &args);
    let elapsed = start.elapsed();
    if !args.quiet {
        print!("{}", report::render_table(&outcome.report));
        eprintln!("elapsed: {:.3} s", elapsed.as_secs_f64());
    }
    if let Some(path) = &args.out {
        if let Err(e) = write_report(path, &outcome) {
            eprintln!("{e}");
            return EXIT_USAGE;
        }
    }
    outcome.exit_code
}
