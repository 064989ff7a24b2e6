//! Grid sweeps and mode benchmarks written as versioned CSV.
//!
//! Rows are computed by a pool of scoped worker threads and written by one
//! writer in row order, so the file content depends only on the config
//! (`wall_time_s` aside). An existing file with the same schema line and
//! header is resumed: a partial trailing line is dropped and complete rows
//! are not recomputed.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use super::config::{ExperimentConfig, PipelineMode};
use super::pipeline::{responses, run_pipeline_with, score_readout, LinkCache, Score};
use super::HarnessError;
use crate::readout::WindowSpec;

pub const SCHEMA_VERSION: u32 = 1;

const RESULT_COLUMNS: [&str; 13] = [
    "mode",
    "repetition",
    "mask_id",
    "ber",
    "errors",
    "test_bits",
    "threshold",
    "train_ber",
    "validation_ber",
    "ber_floor",
    "phase",
    "error",
    "wall_time_s",
];

#[derive(Debug, Clone, PartialEq)]
pub enum RowOutcome {
    Scored(Score),
    /// Stage-labelled failure; the sweep carries on with the next row.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub row: usize,
    pub axes: Vec<f64>,
    pub mode: PipelineMode,
    pub repetition: usize,
    pub mask_id: usize,
    pub outcome: RowOutcome,
    pub wall_time_s: f64,
}

impl SweepRow {
    pub fn ber(&self) -> Option<f64> {
        match &self.outcome {
            RowOutcome::Scored(s) => Some(s.ber),
            RowOutcome::Failed(_) => None,
        }
    }

    fn fields(&self) -> Vec<String> {
        let mut f = vec![self.row.to_string()];
        f.extend(self.axes.iter().map(|v| v.to_string()));
        f.extend([self.mode.to_string(), self.repetition.to_string(), self.mask_id.to_string()]);
        match &self.outcome {
            RowOutcome::Scored(s) => f.extend([
                s.ber.to_string(),
                s.errors.to_string(),
                s.test_bits.to_string(),
                s.threshold.to_string(),
                s.train_ber.to_string(),
                s.validation_ber.to_string(),
                s.ber_floor.to_string(),
                s.phase.map(|p| p.to_string()).unwrap_or_default(),
                String::new(),
            ]),
            RowOutcome::Failed(e) => {
                f.extend(std::iter::repeat_n(String::new(), 8));
                // one physical line per row keeps resumption line-based
                f.push(e.replace(['\n', '\r'], " "));
            }
        }
        f.push(format!("{:.3}", self.wall_time_s));
        f
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis_names: Vec<String>,
    /// Rows computed by this call, in row order.
    pub rows: Vec<SweepRow>,
    /// Rows already present in the output file and skipped.
    pub resumed_rows: usize,
}

impl SweepResult {
    /// Scored row with the lowest BER (first on ties).
    pub fn best(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter_map(|r| r.ber().map(|b| (b, r)))
            .fold(None, |acc: Option<(f64, &SweepRow)>, (b, r)| match acc {
                Some((best, _)) if best <= b => acc,
                _ => Some((b, r)),
            })
            .map(|(_, r)| r)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.ber().is_none()).count()
    }
}

fn schema_line() -> String {
    format!("# tdrc results schema {SCHEMA_VERSION}")
}

fn header(axis_names: &[String]) -> Vec<String> {
    let mut h = vec!["row".to_string()];
    h.extend(axis_names.iter().cloned());
    h.extend(RESULT_COLUMNS.iter().map(|c| c.to_string()));
    h
}

/// Block of consecutive rows sharing one computation.
struct Job {
    first_row: usize,
    mode: PipelineMode,
    cfg: Result<ExperimentConfig, String>,
    axes: Vec<f64>,
    repetition: usize,
    mask_id: usize,
    /// Benchmark jobs score one reservoir run under several windows.
    windows: Option<Vec<usize>>,
}

impl Job {
    fn n_rows(&self) -> usize {
        self.windows.as_ref().map_or(1, |w| w.len())
    }

    fn row(&self, offset: usize, axes: Vec<f64>, outcome: RowOutcome, wall_time_s: f64) -> SweepRow {
        SweepRow {
            row: self.first_row + offset,
            axes,
            mode: self.mode,
            repetition: self.repetition,
            mask_id: self.mask_id,
            outcome,
            wall_time_s,
        }
    }

    fn execute(&self, cache: &LinkCache) -> Vec<SweepRow> {
        let start = Instant::now();
        let cfg = match &self.cfg {
            Ok(c) => c,
            Err(e) => return vec![self.row(0, self.axes.clone(), RowOutcome::Failed(e.clone()), 0.0)],
        };
        let Some(windows) = &self.windows else {
            let outcome = match run_pipeline_with(cfg, self.repetition, self.mask_id, cache) {
                Ok(s) => RowOutcome::Scored(s),
                Err(e) => RowOutcome::Failed(e.to_string()),
            };
            return vec![self.row(0, self.axes.clone(), outcome, start.elapsed().as_secs_f64())];
        };
        let seeds = cfg.seeds.for_repetition(self.repetition);
        let shared = cache
            .get(cfg, &seeds)
            .and_then(|inputs| responses(cfg, &inputs, &seeds, self.mask_id).map(|r| (inputs, r)));
        let shared_time = start.elapsed().as_secs_f64();
        windows
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let t0 = Instant::now();
                let outcome = match &shared {
                    Ok((inputs, [train_resp, test_resp])) => match score_readout(
                        train_resp,
                        &inputs.train.bits,
                        test_resp,
                        &inputs.test.bits,
                        WindowSpec::centered(w),
                        &cfg.train,
                        &seeds.readout_rng(),
                    ) {
                        Ok(s) => RowOutcome::Scored(s),
                        Err(e) => RowOutcome::Failed(e.to_string()),
                    },
                    Err(e) => RowOutcome::Failed(e.to_string()),
                };
                self.row(i, vec![w as f64], outcome, shared_time + t0.elapsed().as_secs_f64())
            })
            .collect()
    }
}

/// Open `path` for appending rows, writing the schema line and header to a
/// new or empty file. Returns how many complete rows it already holds.
fn prepare_output(path: &Path, header_fields: &[String]) -> Result<(File, usize), HarnessError> {
    let mut head = Vec::new();
    csv::Writer::from_writer(&mut head)
        .write_record(header_fields)
        .map_err(|e| HarnessError::csv(path, e))?;
    let head = format!("{}\n{}", schema_line(), String::from_utf8(head).expect("header is UTF-8"));
    let mut existing = String::new();
    if path.exists() {
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut existing))
            .map_err(|e| HarnessError::io(path, e))?;
    }
    if existing.len() < head.len() && head.starts_with(&existing) {
        // absent, empty or interrupted inside the header
        let mut f = File::create(path).map_err(|e| HarnessError::io(path, e))?;
        f.write_all(head.as_bytes()).map_err(|e| HarnessError::io(path, e))?;
        return Ok((f, 0));
    }
    if !existing.starts_with(&head) {
        return Err(HarnessError::csv(
            path,
            "existing file has a different schema or columns; refusing to resume into it",
        ));
    }
    let complete = existing.rfind('\n').map_or(0, |i| i + 1).max(head.len());
    let body = &existing[head.len()..complete];
    let done = body.lines().count();
    for (i, line) in body.lines().enumerate() {
        if line.split(',').next() != Some(&i.to_string()) {
            return Err(HarnessError::csv(path, format!("line {} is not row {i}; cannot resume", i + 3)));
        }
    }
    let f = OpenOptions::new().write(true).open(path).map_err(|e| HarnessError::io(path, e))?;
    f.set_len(complete as u64).map_err(|e| HarnessError::io(path, e))?;
    let f = OpenOptions::new().append(true).open(path).map_err(|e| HarnessError::io(path, e))?;
    Ok((f, done))
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run_jobs(
    jobs: Vec<Job>,
    axis_names: Vec<String>,
    out: Option<&Path>,
    workers: Option<usize>,
    cache_capacity: usize,
) -> Result<SweepResult, HarnessError> {
    let (mut writer, done) = match out {
        Some(path) => {
            let (f, done) = prepare_output(path, &header(&axis_names))?;
            (Some((path, csv::Writer::from_writer(BufWriter::new(f)))), done)
        }
        None => (None, 0),
    };
    let pending: Vec<&Job> = jobs.iter().filter(|j| j.first_row + j.n_rows() > done).collect();
    let workers = workers.unwrap_or_else(default_workers).clamp(1, pending.len().max(1));
    let cache = LinkCache::new(cache_capacity + workers);
    let next = AtomicUsize::new(0);
    let mut rows = Vec::new();
    std::thread::scope(|scope| -> Result<(), HarnessError> {
        let (tx, rx) = mpsc::channel::<(usize, Vec<SweepRow>)>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (pending, cache, next) = (&pending, &cache, &next);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = pending.get(i) else { break };
                if tx.send((i, job.execute(cache))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut buffered = BTreeMap::new();
        let mut expected = 0;
        for (i, block) in rx {
            buffered.insert(i, block);
            while let Some(block) = buffered.remove(&expected) {
                expected += 1;
                for row in block.into_iter().filter(|r| r.row >= done) {
                    if let Some((path, w)) = writer.as_mut() {
                        w.write_record(row.fields()).map_err(|e| HarnessError::csv(path, e))?;
                    }
                    rows.push(row);
                }
                if let Some((path, w)) = writer.as_mut() {
                    w.flush().map_err(|e| HarnessError::io(path, e))?;
                }
            }
        }
        Ok(())
    })?;
    Ok(SweepResult {
        axis_names,
        rows,
        resumed_rows: done,
    })
}

/// Full Cartesian grid of `cfg.sweep` (last axis varying fastest) ×
/// repetitions × mask trials, one row each. Rows are appended to `out`
/// when given.
pub fn sweep(cfg: &ExperimentConfig, out: Option<&Path>, workers: Option<usize>) -> Result<SweepResult, HarnessError> {
    cfg.validate()?;
    if cfg.sweep.is_empty() {
        return Err(HarnessError::Config("sweep needs at least one axis".into()));
    }
    let axis_names: Vec<String> = cfg.sweep.iter().map(|a| a.name.clone()).collect();
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &cfg.sweep {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    let mut jobs = Vec::new();
    for point in points {
        let point_cfg = point
            .iter()
            .zip(&axis_names)
            .try_fold(cfg.clone(), |c, (&v, name)| c.with_axis(name, v))
            .and_then(|c| c.validate().map(|_| c))
            .map_err(|e| e.to_string());
        for repetition in 0..cfg.repetitions {
            for mask_id in 0..cfg.n_mask_trials {
                jobs.push(Job {
                    first_row: jobs.len(),
                    mode: cfg.mode,
                    cfg: point_cfg.clone(),
                    axes: point.clone(),
                    repetition,
                    mask_id,
                    windows: None,
                });
            }
        }
    }
    run_jobs(jobs, axis_names, out, workers, cfg.repetitions)
}

/// Bypass, NoMask, ELM and RC on identical streams and seeds, scored under
/// every window of `cfg.benchmark_windows`. Rows are ordered repetition,
/// mode, mask, window; each reservoir run is shared by its window series.
/// Masked modes draw `n_mask_trials` masks, the others one.
pub fn benchmark(cfg: &ExperimentConfig, out: Option<&Path>, workers: Option<usize>) -> Result<SweepResult, HarnessError> {
    cfg.validate()?;
    if cfg.benchmark_windows.is_empty() || cfg.benchmark_windows.contains(&0) {
        return Err(HarnessError::Config("benchmark windows must be positive bit counts".into()));
    }
    let mut jobs: Vec<Job> = Vec::new();
    let mut first_row = 0;
    for repetition in 0..cfg.repetitions {
        for mode in PipelineMode::BENCHMARK {
            let mut mode_cfg = cfg.clone();
            mode_cfg.mode = mode;
            let masks = if mode.uses_mask() { cfg.n_mask_trials } else { 1 };
            for mask_id in 0..masks {
                let job = Job {
                    first_row,
                    mode,
                    cfg: Ok(mode_cfg.clone()),
                    axes: Vec::new(),
                    repetition,
                    mask_id,
                    windows: Some(cfg.benchmark_windows.clone()),
                };
                first_row += job.n_rows();
                jobs.push(job);
            }
        }
    }
    run_jobs(jobs, vec!["window_bits".into()], out, workers, 1)
}
