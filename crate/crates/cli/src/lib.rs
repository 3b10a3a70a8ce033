//! Batch runner for the `fractal-trace` library: one TOML config describes
//! one experiment (or a grid of them) and produces a JSON summary plus a CSV
//! detail table.

pub mod config;
pub mod error;
pub mod ops;
pub mod output;

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use config::ExperimentConfig;
use error::{CliError, Outcome};
use ops::{Cache, Table};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "FTL_WORKERS";

/// Output directory: the override, else `output.dir` relative to the config file.
fn output_dir(cfg: &ExperimentConfig, config_path: &Path, dir_override: Option<&Path>) -> PathBuf {
    match dir_override {
        Some(d) => d.to_path_buf(),
        None if cfg.output.dir.is_absolute() => cfg.output.dir.clone(),
        None => config_path.parent().unwrap_or(Path::new(".")).join(&cfg.output.dir),
    }
}

fn echo(cfg: &ExperimentConfig) -> Value {
    let mut v = serde_json::to_value(cfg).unwrap_or(Value::Null);
    if let Value::Object(m) = &mut v {
        // Where the files went is not part of the experiment.
        m.remove("output");
    }
    v
}

/// Runs one experiment and writes `<stem>.json` and `<stem>.csv` into `dir`.
pub fn run_config(cfg: &ExperimentConfig, dir: &Path, cache: &Cache) -> Result<Outcome, CliError> {
    let admissibility = ops::admissibility(cfg)?;
    let report = ops::execute(cfg, cache)?;
    let outcome = Outcome::from(report.status);
    output::ensure_dir(dir)?;
    let stem = cfg.stem();
    let csv_name = format!("{stem}.csv");
    output::write_csv(&dir.join(&csv_name), &report.table)?;
    let doc = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "operation": cfg.operation,
        "config": echo(cfg),
        "admissibility": admissibility,
        "status": outcome.name(),
        "exit_code": outcome.code(),
        "result": report.result,
        "files": { "csv": csv_name },
    });
    output::write_json(&dir.join(format!("{stem}.json")), &doc)?;
    Ok(outcome)
}

/// `run <config>`; returns the process exit code.
pub fn run(config_path: &Path, dir_override: Option<&Path>) -> i32 {
    let result = ExperimentConfig::load(config_path).and_then(|cfg| {
        if cfg.sweep.is_some() {
            return Err(CliError::Invalid("config has a [sweep] table; use `sweep`".into()));
        }
        let dir = output_dir(&cfg, config_path, dir_override);
        run_config(&cfg, &dir, &Cache::default()).map(|o| (o, dir.join(format!("{}.json", cfg.stem()))))
    });
    match result {
        Ok((outcome, json_path)) => {
            eprintln!("{}: {}", outcome.name(), json_path.display());
            outcome.code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            Outcome::from(&e).code()
        }
    }
}

fn cell(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Float(f) => ops::num(*f),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        other => other.to_string(),
    }
}

/// Runs every grid point and writes one summary row per point.
pub fn sweep_config(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome, CliError> {
    let grid = cfg.grid()?;
    let cache = Cache::default();
    let axes: Vec<String> = grid[0].assignment.iter().map(|(k, _)| k.clone()).collect();
    struct Row {
        index: usize,
        values: Vec<String>,
        assignment: Map<String, Value>,
        outcome: Outcome,
        headline: Vec<(String, f64)>,
        error: Option<String>,
    }
    let mut rows = Vec::with_capacity(grid.len());
    for point in grid {
        let values = point.assignment.iter().map(|(_, v)| cell(v)).collect();
        let assignment = point
            .assignment
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::to_value(v).unwrap_or(Value::Null)))
            .collect();
        let run = point.config.and_then(|c| ops::execute(&c, &cache));
        let (outcome, headline, error) = match run {
            Ok(r) => (Outcome::from(r.status), r.headline, None),
            Err(e) => (Outcome::from(&e), Vec::new(), Some(e.to_string())),
        };
        eprintln!("  point {}: {}", point.index, outcome.name());
        rows.push(Row { index: point.index, values, assignment, outcome, headline, error });
    }
    let mut metrics: Vec<String> = Vec::new();
    for r in &rows {
        for (k, _) in &r.headline {
            if !metrics.contains(k) {
                metrics.push(k.clone());
            }
        }
    }
    let worst = rows.iter().map(|r| r.outcome).max().unwrap_or(Outcome::Converged);

    let mut header: Vec<&str> = vec!["point"];
    header.extend(axes.iter().map(String::as_str));
    header.extend(["status", "exit_code"]);
    header.extend(metrics.iter().map(String::as_str));
    header.push("error");
    let mut table = Table { header: Vec::new(), rows: Vec::new() };
    for r in &rows {
        let mut line = vec![r.index.to_string()];
        line.extend(r.values.iter().cloned());
        line.push(r.outcome.name().into());
        line.push(r.outcome.code().to_string());
        for m in &metrics {
            line.push(r.headline.iter().find(|(k, _)| k == m).map(|(_, v)| ops::num(*v)).unwrap_or_default());
        }
        line.push(r.error.clone().unwrap_or_default());
        table.rows.push(line);
    }

    output::ensure_dir(dir)?;
    let stem = cfg.stem();
    let csv_name = format!("{stem}.csv");
    let path = dir.join(&csv_name);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut write = |rec: &[&str]| w.write_record(rec).map_err(|e| CliError::Io(format!("{}: {e}", path.display())));
    write(&header)?;
    for line in &table.rows {
        write(&line.iter().map(String::as_str).collect::<Vec<_>>())?;
    }
    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;

    let json_rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "point": r.index,
                "assignment": r.assignment,
                "status": r.outcome.name(),
                "exit_code": r.outcome.code(),
                "headline": r.headline.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<Map<_, _>>(),
                "error": r.error,
            })
        })
        .collect();
    let doc = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "operation": cfg.operation,
        "config": echo(cfg),
        "axes": axes,
        "rows": json_rows,
        "status": worst.name(),
        "exit_code": worst.code(),
        "files": { "csv": csv_name },
    });
    output::write_json(&dir.join(format!("{stem}.json")), &doc)?;
    Ok(worst)
}

/// `sweep <config>`; returns the process exit code.
pub fn sweep(config_path: &Path, dir_override: Option<&Path>) -> i32 {
    let result = ExperimentConfig::load(config_path).and_then(|cfg| {
        let dir = output_dir(&cfg, config_path, dir_override);
        sweep_config(&cfg, &dir).map(|o| (o, dir.join(format!("{}.json", cfg.stem()))))
    });
    match result {
        Ok((outcome, json_path)) => {
            eprintln!("worst {}: {}", outcome.name(), json_path.display());
            outcome.code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            Outcome::from(&e).code()
        }
    }
}
