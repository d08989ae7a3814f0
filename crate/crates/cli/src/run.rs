//! `run` and `resume`: propagate, stream the CSV time series, write the
//! manifest and checkpoints.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use deom_core::bath::{fit_report, BathError, BathExpansion, SpectralDensitySpec};
use deom_core::hierarchy::{
    initial_hierarchy, propagate, stability_number, Checkpoint, HierarchyError, HierarchyState, PropagateOptions,
};
use deom_core::observables::{evaluate_row, ObservableSpec};

use crate::build::{self, Setup};
use crate::config::{parse_config_value, RunConfig};
use crate::{format_f64, CliError};

pub const CSV_NAME: &str = "timeseries.csv";
pub const MANIFEST_NAME: &str = "manifest.json";
pub const CHECKPOINT_NAME: &str = "checkpoint.json";
const FIT_SAMPLES: usize = 201;

/// Command-line overrides of the configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output: Option<PathBuf>,
    pub stride: Option<u64>,
    /// Stop (and checkpoint) after this many steps of this invocation.
    pub stop_after: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub steps: u64,
    pub completed: bool,
}

/// On-disk checkpoint: the resolved configuration, how much of the CSV
/// belongs to the checkpointed state, and the hierarchy itself.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunCheckpoint {
    pub config: Value,
    pub csv_bytes: u64,
    pub state: Checkpoint,
}

pub fn apply_overrides(cfg: &mut RunConfig, opts: &RunOptions) {
    if let Some(o) = &opts.output {
        cfg.output.path = o.display().to_string();
    }
    if let Some(s) = opts.stride {
        cfg.hierarchy.stride = s;
    }
}

pub fn csv_header(specs: &[ObservableSpec]) -> String {
    let mut h = vec!["t".to_string()];
    for s in specs {
        let n = s.column_name();
        h.push(format!("{n}.re"));
        h.push(format!("{n}.im"));
    }
    h.join(",") + "\n"
}

fn csv_row(t: f64, values: &[num_complex::Complex64]) -> String {
    let mut line = format_f64(t);
    for v in values {
        line.push(',');
        line.push_str(&format_f64(v.re));
        line.push(',');
        line.push_str(&format_f64(v.im));
    }
    line.push('\n');
    line
}

/// Fit quality of the expansion on `[0, T]`, moving the window start off
/// zero when `C(0)` itself diverges.
pub fn fit_summary(exp: &BathExpansion, spec: &SpectralDensitySpec, t_end: f64) -> Value {
    let t1 = if t_end > 0.0 { t_end } else { 1.0 };
    match fit_report(exp, spec, (0.0, t1), FIT_SAMPLES) {
        Ok(r) => json!(r),
        Err(BathError::NonConvergent { t, .. }) if t == 0.0 => match fit_report(exp, spec, (t1 / 200.0, t1), FIT_SAMPLES) {
            Ok(r) => {
                let mut v = json!(r);
                v["note"] = json!("the correlation function diverges at t = 0; window starts at T/200");
                v
            }
            Err(e) => json!({ "error": e.to_string() }),
        },
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn write_checkpoint(dir: &Path, cfg: &RunConfig, csv_bytes: u64, state: &HierarchyState) -> Result<(), CliError> {
    let ck = RunCheckpoint { config: cfg.to_value(), csv_bytes, state: state.to_checkpoint() };
    let text = serde_json::to_string(&ck).expect("checkpoint serialises");
    write_atomic(&dir.join(CHECKPOINT_NAME), &text)
}

pub fn run(mut cfg: RunConfig, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    apply_overrides(&mut cfg, opts);
    let setup = build::setup(&cfg)?;
    let catalog = build::catalog(&setup.dynamics, cfg.hierarchy.max_tier, cfg.hierarchy.max_slots)?;
    let mut state = initial_hierarchy(&setup.rho0, catalog).map_err(|e| CliError::Config(e.to_string()))?;
    if cfg.hierarchy.scaling {
        state = setup.dynamics.rescale(&state, true).map_err(|e| CliError::Config(e.to_string()))?;
    }
    let dir = PathBuf::from(&cfg.output.path);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let csv_path = dir.join(CSV_NAME);
    let mut file = File::create(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    let header = csv_header(&cfg.output.observables);
    file.write_all(header.as_bytes()).map_err(|e| CliError::io(&csv_path, e))?;
    drive(&cfg, &setup, state, file, header.len() as u64, opts.stop_after, &dir)
}

pub fn resume(checkpoint: &Path, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let text = fs::read_to_string(checkpoint).map_err(|e| CliError::io(checkpoint, e))?;
    let ck: RunCheckpoint =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: not a checkpoint: {e}", checkpoint.display())))?;
    let mut cfg = parse_config_value(&ck.config)?;
    if opts.stride.is_some_and(|s| s != cfg.hierarchy.stride) {
        return Err(CliError::Config("--stride cannot change on resume".into()));
    }
    let dir = match &opts.output {
        Some(o) => o.clone(),
        None => checkpoint.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
    };
    cfg.output.path = dir.display().to_string();
    let setup = build::setup(&cfg)?;
    let state = HierarchyState::from_checkpoint(&ck.state, Some(cfg.hierarchy.max_slots)).map_err(|e| match e {
        HierarchyError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
        other => CliError::Config(other.to_string()),
    })?;
    if state.catalog().labels() != setup.dynamics.labels().len() || state.basis().dim() != setup.dynamics.dim() {
        return Err(CliError::Config("checkpoint does not match its configuration".into()));
    }
    let csv_path = dir.join(CSV_NAME);
    let file = OpenOptions::new().read(true).write(true).open(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    let len = file.metadata().map_err(|e| CliError::io(&csv_path, e))?.len();
    if len < ck.csv_bytes {
        return Err(CliError::io(
            &csv_path,
            std::io::Error::new(std::io::ErrorKind::UnexpectedEof, format!("time series has {len} bytes, checkpoint expects {}", ck.csv_bytes)),
        ));
    }
    // rows written after the checkpoint are regenerated
    file.set_len(ck.csv_bytes).map_err(|e| CliError::io(&csv_path, e))?;
    let mut file = file;
    std::io::Seek::seek(&mut file, std::io::SeekFrom::End(0)).map_err(|e| CliError::io(&csv_path, e))?;
    drive(&cfg, &setup, state, file, ck.csv_bytes, opts.stop_after, &dir)
}

fn drive(
    cfg: &RunConfig,
    setup: &Setup,
    mut state: HierarchyState,
    file: File,
    mut written: u64,
    stop_after: Option<u64>,
    dir: &Path,
) -> Result<RunOutcome, CliError> {
    let clock = Instant::now();
    let dynamics = &setup.dynamics;
    let h = &cfg.hierarchy;
    let csv_path = dir.join(CSV_NAME);
    let mut out = BufWriter::new(file);
    let options = PropagateOptions { stride: h.stride, filter_tol: h.filter_tol, divergence_bound: h.divergence_bound };
    let first_step = state.step();
    let t_start = state.time();
    let mut failure: Option<CliError> = None;
    let mut stopped = false;

    let result = propagate(dynamics, &mut state, h.t_final, h.dt, &options, |s, snapshot| {
        let mut step = || -> Result<bool, CliError> {
            if snapshot {
                let values = evaluate_row(&cfg.output.observables, s, dynamics).map_err(|e| CliError::Config(e.to_string()))?;
                let line = csv_row(s.time(), &values);
                out.write_all(line.as_bytes()).map_err(|e| CliError::io(&csv_path, e))?;
                written += line.len() as u64;
            }
            let stop = stop_after.is_some_and(|n| s.step().saturating_sub(first_step) >= n);
            let due = h.checkpoint_every > 0 && s.step() > 0 && s.step() % h.checkpoint_every == 0;
            if stop || due {
                out.flush().map_err(|e| CliError::io(&csv_path, e))?;
                write_checkpoint(dir, cfg, written, s)?;
            }
            Ok(stop)
        };
        match step() {
            Ok(false) => ControlFlow::Continue(()),
            Ok(true) => {
                stopped = true;
                ControlFlow::Break(())
            }
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(())
            }
        }
    });
    out.flush().map_err(|e| CliError::io(&csv_path, e))?;
    if let Some(e) = failure {
        return Err(e);
    }

    let (status, steps, error) = match &result {
        Ok(summary) => (if stopped { "stopped" } else { "completed" }, summary.steps, None),
        Err(HierarchyError::Diverged { .. }) => ("diverged", state.step().saturating_sub(first_step), result.as_ref().err().map(|e| e.to_string())),
        Err(e) => return Err(CliError::Config(e.to_string())),
    };
    let labels = dynamics.labels();
    let manifest = json!({
        "program": "deom",
        "version": env!("CARGO_PKG_VERSION"),
        "status": status,
        "error": error,
        "config": cfg.to_value(),
        "catalog": {
            "labels": labels.len(),
            "components": labels.components().iter().map(|&c| ["x", "y", "z"][c]).collect::<Vec<_>>(),
            "terms_per_component": labels.terms(),
            "max_tier": state.catalog().max_tier(),
            "slots": state.catalog().len(),
        },
        "expansion": serde_json::from_str::<Value>(&dynamics.expansion.to_json().expect("expansion serialises")).expect("valid JSON"),
        "fit_report": fit_summary(&dynamics.expansion, &setup.spec, h.t_final),
        "stability_number": stability_number(dynamics, h.max_tier, h.dt).ok(),
        "steps": steps,
        "t_start": t_start,
        "t_final": state.time(),
        "wall_time_s": clock.elapsed().as_secs_f64(),
        "threads": rayon::current_num_threads(),
        "files": {
            "timeseries": CSV_NAME,
            "checkpoint": (h.checkpoint_every > 0 || stopped).then_some(CHECKPOINT_NAME),
        },
    });
    write_atomic(&dir.join(MANIFEST_NAME), &serde_json::to_string_pretty(&manifest).expect("manifest serialises"))?;
    if let Err(e) = result {
        return Err(CliError::Diverged(e.to_string()));
    }
    Ok(RunOutcome { dir: dir.to_path_buf(), steps, completed: !stopped })
}
