use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use cicero_core::diff::diff;
use cicero_core::layout::{grid_dump, resolve_layout_with, DEFAULT_RESOLUTION};
use cicero_core::query::{resolve, QueryError};
use cicero_core::rules::{cicero_errors, cicero_from_value, Specifier};
use cicero_core::transform::{compile_with, CompileOptions};
use cicero_core::vis::{canonical_serialize, from_value, validation_errors, VisSpec};

const OK: u8 = 0;
const INVALID: u8 = 1;
const COMPILE_FAILED: u8 = 2;
const IO_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "cicero", version, about = "Compile responsive chart transformation rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a chart or rule document and list every problem.
    Validate { path: PathBuf },
    /// Print the paths of the elements a specifier selects, one per line.
    Query {
        vis: PathBuf,
        /// Specifier as inline JSON.
        specifier: String,
    },
    /// Apply a rule document to a chart.
    Compile {
        vis: PathBuf,
        rules: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write one JSON line per rule to standard error.
        #[arg(long)]
        trace: bool,
        /// Write the output's occupancy grid (PBM) to standard error.
        #[arg(long)]
        grid_dump: bool,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        grid_resolution: f64,
    },
    /// Compare two charts element by element.
    Diff { a: PathBuf, b: PathBuf },
}

/// A failed command: exit status plus the lines to report.
struct Failure(u8, Vec<String>);

fn read_input(path: &PathBuf) -> Result<String, Failure> {
    let res = if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map(|_| s)
    } else {
        fs::read_to_string(path)
    };
    res.map_err(|e| Failure(IO_FAILED, vec![format!("{}: {e}", path.display())]))
}

fn read_json(path: &PathBuf) -> Result<Value, Failure> {
    let text = read_input(path)?;
    serde_json::from_str(&text).map_err(|e| Failure(INVALID, vec![format!("{}: syntax error: {e}", path.display())]))
}

fn read_vis(path: &PathBuf) -> Result<VisSpec, Failure> {
    let spec = from_value(read_json(path)?).map_err(|e| Failure(INVALID, vec![format!("{}: {e}", path.display())]))?;
    let mut errs: Vec<String> = validation_errors(&spec).iter().map(|e| format!("{}: {e}", path.display())).collect();
    if errs.is_empty() {
        return Ok(spec);
    }
    errs.sort();
    Err(Failure(INVALID, errs))
}

fn is_rule_document(v: &Value) -> bool {
    v.get("transformations").is_some()
}

fn validate(path: &PathBuf) -> Result<Vec<String>, Failure> {
    let value = read_json(path)?;
    if !is_rule_document(&value) {
        read_vis(path)?;
        return Ok(vec![format!("{}: valid chart", path.display())]);
    }
    let mut errs: Vec<String> = cicero_errors(&value.to_string()).iter().map(|e| e.to_string()).collect();
    if let Ok(spec) = cicero_from_value(&value) {
        for (i, rule) in spec.transformations.iter().enumerate() {
            if let Err(e) = rule.specifier.canonical_role() {
                errs.push(format!("rule {i}: unknown role \"{}\"", e.0));
            }
        }
    }
    if errs.is_empty() {
        return Ok(vec![format!("{}: valid rule document", path.display())]);
    }
    errs.sort();
    Err(Failure(INVALID, errs.into_iter().map(|e| format!("{}: {e}", path.display())).collect()))
}

fn query(vis: &PathBuf, specifier: &str) -> Result<Vec<String>, Failure> {
    let spec = read_vis(vis)?;
    let value: Value = serde_json::from_str(specifier).map_err(|e| Failure(INVALID, vec![format!("specifier: syntax error: {e}")]))?;
    let specifier = Specifier::from_value(&value).map_err(|e| Failure(INVALID, vec![format!("specifier: {e}")]))?;
    let selection = resolve(&specifier, &spec).map_err(|e: QueryError| Failure(INVALID, vec![format!("specifier: {e}")]))?;
    let mut out = io::stdout().lock();
    for path in selection.paths() {
        let _ = writeln!(out, "{}", Value::from(path));
    }
    Ok(vec![format!("{} element(s) matched", selection.elements.len())])
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) if p.as_os_str() != "-" => fs::write(p, text).map_err(|e| Failure(IO_FAILED, vec![format!("{}: {e}", p.display())])),
        _ => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure(IO_FAILED, vec![format!("stdout: {e}")])),
    }
}

fn compile_cmd(
    vis: &PathBuf,
    rules: &PathBuf,
    out: &Option<PathBuf>,
    trace: bool,
    dump: bool,
    resolution: f64,
) -> Result<Vec<String>, Failure> {
    let spec = read_vis(vis)?;
    let rule_value = read_json(rules)?;
    let cicero = cicero_from_value(&rule_value).map_err(|e| Failure(INVALID, vec![format!("{}: {e}", rules.display())]))?;
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Failure(INVALID, vec![format!("grid resolution must be positive, got {resolution}")]));
    }
    let output = compile_with(&spec, &cicero, CompileOptions { resolution })
        .map_err(|e| Failure(COMPILE_FAILED, vec![format!("{}: {e}", rules.display())]))?;
    write_output(out, &canonical_serialize(&output.spec))?;
    let mut notes = Vec::new();
    if trace {
        let mut sorted = output.trace.clone();
        sorted.sort_by_key(|t| t.rule);
        notes.extend(sorted.iter().map(|t| serde_json::to_string(t).expect("plain data")));
    }
    notes.extend(output.diagnostics());
    if dump {
        let frame = resolve_layout_with(&output.spec, resolution).map_err(|e| Failure(COMPILE_FAILED, vec![format!("layout: {e}")]))?;
        notes.push(grid_dump(&frame).trim_end().to_string());
    }
    Ok(notes)
}

fn diff_cmd(a: &PathBuf, b: &PathBuf) -> Result<Vec<String>, Failure> {
    let (x, y) = (read_vis(a)?, read_vis(b)?);
    let report = diff(&x, &y);
    let text = serde_json::to_string_pretty(&report.to_value()).expect("plain data");
    println!("{text}");
    if report.is_empty() {
        Ok(Vec::new())
    } else {
        Err(Failure(INVALID, Vec::new()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { path } => validate(path),
        Command::Query { vis, specifier } => query(vis, specifier),
        Command::Compile { vis, rules, out, trace, grid_dump, grid_resolution } => {
            compile_cmd(vis, rules, out, *trace, *grid_dump, *grid_resolution)
        }
        Command::Diff { a, b } => diff_cmd(a, b),
    };
    let (code, lines) = match result {
        Ok(lines) => (OK, lines),
        Err(Failure(code, lines)) => (code, lines),
    };
    let mut err = io::stderr().lock();
    for l in lines {
        let _ = writeln!(err, "{l}");
    }
    ExitCode::from(code)
}
