//! Scenario files, CSV results and the `run` / `sweep` / `verify` commands
//! behind the `scs` binary.

pub mod output;
pub mod scenario;
pub mod verify;

use output::ResultRow;
use rayon::prelude::*;
use scenario::ScenarioConfig;
use scs_core::analysis::AnalysisError;
use scs_core::sim::{run_simulation, EngineSpec, SimError};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub use scenario::{load_scenario, parse_scenario, ScenarioError};
pub use verify::{run_suite, Suite, VerifyReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{context}: {source}")]
    Simulation {
        context: String,
        #[source]
        source: SimError,
    },
    #[error("solver failure: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("verification failed")]
    Verification(VerifyReport),
}

impl CliError {
    /// 1 usage or parse, 2 solver failure, 3 verification failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Scenario(_) | CliError::Io { .. } => 1,
            CliError::Simulation {
                source: SimError::InvalidScenario(_),
                ..
            } => 1,
            CliError::Simulation { .. } | CliError::Analysis(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// One simulation: a sweep point (if any), an engine and a seed.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    point: Option<usize>,
    engine: usize,
    seed: u64,
}

fn trace_path(base: &Path, cell: &Cell, engine: EngineSpec, single: bool) -> PathBuf {
    if single {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into());
    let mut name = format!("{stem}.{}.s{}", engine.token().replace(':', "_"), cell.seed);
    if let Some(p) = cell.point {
        name.push_str(&format!(".v{p}"));
    }
    if let Some(ext) = base.extension() {
        name.push('.');
        name.push_str(&ext.to_string_lossy());
    }
    base.with_file_name(name)
}

fn simulate(
    configs: &[(Option<f64>, ScenarioConfig)],
    cells: &[Cell],
    trace: Option<&Path>,
) -> Result<Vec<ResultRow>, CliError> {
    let single = cells.len() == 1;
    cells
        .par_iter()
        .map(|cell| {
            let (value, config) = &configs[cell.point.unwrap_or(0)];
            let engine = config.engines[cell.engine];
            let mut sc = config.scenario(engine, cell.seed);
            sc.record_trace = trace.is_some();
            let out = run_simulation(&sc).map_err(|source| CliError::Simulation {
                context: format!(
                    "{} engine {} seed {}{}",
                    config.id,
                    engine.token(),
                    cell.seed,
                    value.map(|v| format!(" at {v}")).unwrap_or_default()
                ),
                source,
            })?;
            if let (Some(base), Some(t)) = (trace, &out.trace) {
                let path = trace_path(base, cell, engine, single);
                std::fs::write(&path, t.to_csv(&config.instance)).map_err(|e| io_err(&path, e))?;
            }
            Ok(ResultRow {
                scenario_id: config.id.clone(),
                engine,
                seed: cell.seed,
                sweep_value: *value,
                metrics: out.metrics,
            })
        })
        .collect()
}

fn slice_ids(config: &ScenarioConfig) -> Vec<String> {
    config
        .instance
        .slices()
        .iter()
        .map(|s| s.id.clone())
        .collect()
}

/// Every engine on every seed of the run block, at the file's own
/// parameters (a sweep block is ignored). Returns the CSV text.
pub fn cmd_run(config: &ScenarioConfig, trace: Option<&Path>) -> Result<String, CliError> {
    let cells: Vec<Cell> = (0..config.engines.len())
        .flat_map(|engine| {
            config.seeds.iter().map(move |&seed| Cell {
                point: None,
                engine,
                seed,
            })
        })
        .collect();
    let rows = simulate(&[(None, config.clone())], &cells, trace)?;
    Ok(output::to_csv(&slice_ids(config), &rows))
}

/// Every sweep value x engine x seed, rows in that order.
pub fn cmd_sweep(config: &ScenarioConfig, trace: Option<&Path>) -> Result<String, CliError> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("scenario {} has no [sweep] block", config.id)))?;
    let configs = sweep
        .values
        .iter()
        .map(|&v| Ok((Some(v), config.apply_sweep(v)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let cells: Vec<Cell> = (0..configs.len())
        .flat_map(|p| {
            (0..config.engines.len()).flat_map(move |engine| {
                config.seeds.iter().map(move |&seed| Cell {
                    point: Some(p),
                    engine,
                    seed,
                })
            })
        })
        .collect();
    let rows = simulate(&configs, &cells, trace)?;
    Ok(output::to_csv(&slice_ids(config), &rows))
}

pub fn cmd_verify(
    suite: Suite,
    instances: Option<usize>,
    meta_seed: u64,
) -> Result<VerifyReport, CliError> {
    let report = run_suite(
        suite,
        instances.unwrap_or(suite.default_instances()),
        meta_seed,
    )?;
    if report.passed() {
        Ok(report)
    } else {
        Err(CliError::Verification(report))
    }
}

pub fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_scenario(path: &Path) -> Result<ScenarioConfig, CliError> {
    Ok(load_scenario(path)?)
}
