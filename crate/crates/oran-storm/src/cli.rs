//! Command-line front end: argument parsing, artifact writing, exit codes.
//!
//! Four subcommands cover the workflows: `run` executes one experiment
//! and writes its trace and summary, `compare` runs several and combines
//! their resilience scores, `sweep` reruns the config across one
//! parameter's values, and `list` shows what can be run. Bad input
//! (unreadable or invalid configs, unknown names or parameters) exits
//! with 2, failures of a valid run with 3. Every file is written to a
//! temporary sibling and renamed into place, so interrupted invocations
//! leave no partial artifacts. Diagnostics go to stderr; `--format`
//! echoes the chosen artifact to stdout.

use std::cmp::Ordering;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::config::{self, ConfigError};
use crate::experiments::{
    self, available_experiments, find_experiment, run_experiment, ExperimentError, RunArtifacts,
    SweepParameter,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("compare needs at least one experiment name")]
    EmptySelection,
}

impl CliError {
    /// 2 for caller mistakes, 3 for failures of a valid request.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::EmptySelection => 2,
            CliError::Experiment(e) if e.is_usage() => 2,
            _ => 3,
        }
    }
}

/// Attachment-latency and signaling-storm experiment harness.
#[derive(Debug, Parser)]
#[command(name = "oran-storm", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment; writes <name>.trace.csv and <name>.summary.json.
    Run {
        /// Experiment name; `list` shows the choices.
        experiment: String,
        /// Config file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Echo an artifact to stdout.
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
    /// Run several experiments and write a combined comparison.json.
    Compare {
        /// Experiment names to run.
        #[arg(required = true)]
        experiments: Vec<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
    /// Rerun the config across one parameter's values; writes sweep.csv.
    Sweep {
        /// One of: transmission_rate, rho, proc_time_total, servers, V, W.
        parameter: String,
        /// Comma-separated numeric values.
        #[arg(required = true, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
    /// List runnable experiments.
    List {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            experiment,
            config,
            out,
            format,
        } => cmd_run(config.as_deref(), &experiment, &out, format),
        Command::Compare {
            experiments,
            config,
            out,
            format,
        } => cmd_compare(config.as_deref(), &experiments, &out, format),
        Command::Sweep {
            parameter,
            values,
            config,
            out,
            format,
        } => cmd_sweep(config.as_deref(), &parameter, &values, &out, format),
        Command::List { config, format } => cmd_list(config.as_deref(), format),
    }
}

fn write_failure(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Write {
        path: path.to_owned(),
        source,
    }
}

/// Writes via a temporary sibling plus rename, so the final path either
/// holds the complete contents or does not exist.
fn atomic_write(path: &Path, contents: &str) -> Result<(), CliError> {
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!("{file_name}.tmp"));
    fs::write(&tmp, contents).map_err(write_failure(&tmp))?;
    fs::rename(&tmp, path).map_err(write_failure(path))
}

fn pretty_json(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("summaries serialize");
    text.push('\n');
    text
}

fn write_artifacts(out_dir: &Path, art: &RunArtifacts) -> Result<(), CliError> {
    fs::create_dir_all(out_dir).map_err(write_failure(out_dir))?;
    atomic_write(&out_dir.join(format!("{}.trace.csv", art.name)), &art.csv)?;
    atomic_write(
        &out_dir.join(format!("{}.summary.json", art.name)),
        &pretty_json(&art.summary),
    )
}

/// Runs one named experiment and writes its artifacts.
pub fn cmd_run(
    config: Option<&Path>,
    experiment: &str,
    out_dir: &Path,
    format: Option<OutputFormat>,
) -> Result<(), CliError> {
    let cfg = config::load_or_default(config)?;
    let spec = find_experiment(&cfg, experiment)?;
    let art = run_experiment(&cfg, &spec)?;
    write_artifacts(out_dir, &art)?;
    match format {
        Some(OutputFormat::Csv) => print!("{}", art.csv),
        Some(OutputFormat::Json) => print!("{}", pretty_json(&art.summary)),
        None => {}
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ComparisonEntry {
    name: String,
    kind: &'static str,
    p: Option<f64>,
    summary: serde_json::Value,
}

#[derive(Debug, Serialize)]
struct Comparison {
    runs: Vec<ComparisonEntry>,
}

/// Runs every named experiment, writes per-run artifacts, and combines
/// the runs into `comparison.json` ordered by resilience score, highest
/// first; runs without a score follow in name order.
pub fn cmd_compare(
    config: Option<&Path>,
    names: &[String],
    out_dir: &Path,
    format: Option<OutputFormat>,
) -> Result<(), CliError> {
    if names.is_empty() {
        return Err(CliError::EmptySelection);
    }
    let cfg = config::load_or_default(config)?;
    let specs = names
        .iter()
        .map(|n| find_experiment(&cfg, n))
        .collect::<Result<Vec<_>, _>>()?;
    let artifacts = specs
        .iter()
        .map(|spec| run_experiment(&cfg, spec))
        .collect::<Result<Vec<_>, _>>()?;
    for art in &artifacts {
        write_artifacts(out_dir, art)?;
    }
    let mut runs: Vec<ComparisonEntry> = artifacts
        .into_iter()
        .map(|art| ComparisonEntry {
            name: art.name,
            kind: art.kind.name(),
            p: art.p,
            summary: art.summary,
        })
        .collect();
    runs.sort_by(|a, b| match (a.p, b.p) {
        (Some(x), Some(y)) => y
            .partial_cmp(&x)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.name.cmp(&b.name)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.name.cmp(&b.name),
    });
    let comparison = serde_json::to_value(Comparison { runs }).expect("comparison serializes");
    atomic_write(&out_dir.join("comparison.json"), &pretty_json(&comparison))?;
    match format {
        Some(OutputFormat::Csv) => {
            let mut csv = String::from("name,kind,p\n");
            for run in comparison["runs"].as_array().into_iter().flatten() {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    run["name"].as_str().unwrap_or_default(),
                    run["kind"].as_str().unwrap_or_default(),
                    run["p"]
                        .as_f64()
                        .map(|p| format!("{p:.9e}"))
                        .unwrap_or_default()
                ));
            }
            print!("{csv}");
        }
        Some(OutputFormat::Json) => print!("{}", pretty_json(&comparison)),
        None => {}
    }
    Ok(())
}

/// Parses one CSV document into an array of row objects, recovering
/// numbers and booleans where the cells parse as such.
fn csv_to_json(csv: &str) -> serde_json::Value {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let rows: Vec<serde_json::Value> = lines
        .map(|line| {
            let mut row = serde_json::Map::new();
            for (key, cell) in header.iter().zip(line.split(',')) {
                let value = if cell.is_empty() {
                    serde_json::Value::Null
                } else if let Ok(b) = cell.parse::<bool>() {
                    serde_json::Value::Bool(b)
                } else if let Ok(x) = cell.parse::<f64>() {
                    serde_json::Number::from_f64(x)
                        .map(serde_json::Value::Number)
                        .unwrap_or_else(|| serde_json::Value::String(cell.to_string()))
                } else {
                    serde_json::Value::String(cell.to_string())
                };
                row.insert((*key).to_owned(), value);
            }
            serde_json::Value::Object(row)
        })
        .collect();
    serde_json::Value::Array(rows)
}

/// Sweeps one parameter across the given values and writes `sweep.csv`.
pub fn cmd_sweep(
    config: Option<&Path>,
    parameter: &str,
    values: &[f64],
    out_dir: &Path,
    format: Option<OutputFormat>,
) -> Result<(), CliError> {
    let cfg = config::load_or_default(config)?;
    let param: SweepParameter = parameter.parse()?;
    let csv = experiments::sweep(&cfg, param, values)?;
    fs::create_dir_all(out_dir).map_err(write_failure(out_dir))?;
    atomic_write(&out_dir.join("sweep.csv"), &csv)?;
    match format {
        Some(OutputFormat::Csv) => print!("{csv}"),
        Some(OutputFormat::Json) => print!("{}", pretty_json(&csv_to_json(&csv))),
        None => {}
    }
    Ok(())
}

/// Prints the experiments runnable with this config.
pub fn cmd_list(config: Option<&Path>, format: Option<OutputFormat>) -> Result<(), CliError> {
    let cfg = config::load_or_default(config)?;
    let specs = available_experiments(&cfg);
    match format {
        None => {
            for spec in &specs {
                println!("{:<32} {}", spec.name, spec.kind.name());
            }
        }
        Some(OutputFormat::Csv) => {
            let mut csv = String::from("name,kind\n");
            for spec in &specs {
                csv.push_str(&format!("{},{}\n", spec.name, spec.kind.name()));
            }
            print!("{csv}");
        }
        Some(OutputFormat::Json) => {
            let entries: Vec<serde_json::Value> = specs
                .iter()
                .map(|spec| serde_json::json!({ "name": spec.name, "kind": spec.kind.name() }))
                .collect();
            print!("{}", pretty_json(&serde_json::Value::Array(entries)));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(of: &[&str]) -> Vec<String> {
        of.iter().map(|s| (*s).to_string()).collect()
    }

    #[test]
    fn run_writes_both_artifacts_and_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        cmd_run(None, "storm", dir.path(), None).unwrap();
        let mut entries: Vec<String> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        entries.sort();
        assert_eq!(entries, ["storm.summary.json", "storm.trace.csv"]);
        let trace = fs::read_to_string(dir.path().join("storm.trace.csv")).unwrap();
        assert!(trace.starts_with("t,lambda,c,queue_len,wait_s,utility\n"));
    }

    #[test]
    fn missing_config_fails_before_writing_anything() {
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_run(
            Some(Path::new("/definitely/not/here.toml")),
            "storm",
            dir.path(),
            None,
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn unknown_experiment_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_run(None, "tableau", dir.path(), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn compare_writes_sorted_comparison() {
        let dir = tempfile::tempdir().unwrap();
        cmd_compare(
            None,
            &names(&["storm-fixed-c1", "storm-fixed-c6"]),
            dir.path(),
            None,
        )
        .unwrap();
        let combined: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("comparison.json")).unwrap())
                .unwrap();
        let runs = combined["runs"].as_array().unwrap();
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0]["name"], "storm-fixed-c6");
        assert!(runs[0]["p"].as_f64().unwrap() > runs[1]["p"].as_f64().unwrap());
        assert!(dir.path().join("storm-fixed-c1.trace.csv").exists());
    }

    #[test]
    fn compare_rejects_empty_and_unknown_selections() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(
            cmd_compare(None, &[], dir.path(), None)
                .unwrap_err()
                .exit_code(),
            2
        );
        let err = cmd_compare(None, &names(&["storm", "nope"]), dir.path(), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        // The unknown name was rejected before any run started.
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn sweep_writes_one_row_per_value() {
        let dir = tempfile::tempdir().unwrap();
        cmd_sweep(None, "servers", &[1.0, 2.0], dir.path(), None).unwrap();
        let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("servers,"));
    }

    #[test]
    fn sweep_rejects_unknown_parameters() {
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_sweep(None, "bandwidth", &[1.0], dir.path(), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn csv_json_rendering_recovers_types() {
        let json = csv_to_json("a,b,c,d\n1.5,true,,text\n");
        assert_eq!(json[0]["a"], 1.5);
        assert_eq!(json[0]["b"], true);
        assert!(json[0]["c"].is_null());
        assert_eq!(json[0]["d"], "text");
    }

    #[test]
    fn identical_compares_are_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let selection = names(&["storm-fixed-c2", "storm-adaptive-utility-first"]);
        cmd_compare(None, &selection, a.path(), None).unwrap();
        cmd_compare(None, &selection, b.path(), None).unwrap();
        let read = |dir: &Path, file: &str| fs::read(dir.join(file)).unwrap();
        for file in [
            "comparison.json",
            "storm-fixed-c2.trace.csv",
            "storm-adaptive-utility-first.summary.json",
        ] {
            assert_eq!(read(a.path(), file), read(b.path(), file), "{file}");
        }
    }
}
