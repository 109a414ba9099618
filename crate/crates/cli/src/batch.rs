//! Batch execution of a scenario over its sweep points and repetitions.
//!
//! Runs are computed in chunks on the worker pool and handed to a single
//! sink in run order, so artifacts never depend on scheduling.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use duojaw_core::parallel::{map_indexed, Execution};
use duojaw_core::search::TraceRow;
use duojaw_core::tasks::{run_task, TaskError, TaskKind, TaskReport};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::scenario::{Scenario, Settings};

pub const TRACE_HEADER: [&str; 10] = [
    "t_s",
    "x_mm",
    "y_mm",
    "z_mm",
    "tilt_deg",
    "fx_N",
    "fy_N",
    "fz_N",
    "phase",
    "contact_class",
];

const CHUNK: usize = 64;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("sweep point {index}: {message}")]
    Point { index: usize, message: String },
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("encoding {what}: {message}")]
    Encode { what: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// The task ran to its end, successfully or not.
    Finished,
    /// The task refused to continue: a precondition, hold or handover rule
    /// was violated. This is a task outcome, not a runner failure.
    Refused,
    /// The simulation itself failed.
    Error,
}

impl RunStatus {
    pub fn completed(self) -> bool {
        self != RunStatus::Error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: usize,
    pub point: usize,
    pub repetition: u32,
    pub seed: u64,
    pub settings: Settings,
    pub status: RunStatus,
    pub success: bool,
    pub error: Option<String>,
    pub trace_rows: usize,
    pub trace_end_s: Option<f64>,
    pub report: Option<TaskReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub point: usize,
    pub settings: Settings,
    pub runs: usize,
    pub successes: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub runs: usize,
    pub completed: usize,
    pub successes: usize,
    pub refused: usize,
    pub errors: usize,
    /// Stage name → outcome name → count, over all runs.
    pub stage_outcomes: BTreeMap<String, BTreeMap<String, usize>>,
    pub points: Vec<PointSummary>,
    pub trace_rows: usize,
    /// Trace rows per phase, over all runs.
    pub phase_rows: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario_sha256: String,
    pub task: TaskKind,
    pub base_seed: u64,
    pub repetitions: u32,
    pub sweep: Vec<String>,
    pub aggregates: Aggregates,
    pub runs: Vec<RunRecord>,
}

impl RunReport {
    pub fn all_completed(&self) -> bool {
        self.runs.iter().all(|r| r.status.completed())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    pub seed: Option<u64>,
    pub trace: bool,
    pub execution: Option<Execution>,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            seed: None,
            trace: true,
            execution: None,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Every trace row of a report, stage by stage.
pub fn report_trace(report: &TaskReport) -> Vec<TraceRow> {
    report
        .stages
        .iter()
        .filter_map(|s| s.result.as_ref())
        .flat_map(|r| r.trace.iter().copied())
        .collect()
}

/// Receives each finished run with its trace.
pub type Sink<'a> = dyn FnMut(&RunRecord, &[TraceRow]) -> Result<(), BatchError> + 'a;

struct Planned {
    point: usize,
    repetition: u32,
    seed: u64,
}

fn classify(err: &TaskError) -> RunStatus {
    match err {
        TaskError::Precondition { .. } | TaskError::HandoverBudget { .. } | TaskError::DualHold { .. } => {
            RunStatus::Refused
        }
        _ => RunStatus::Error,
    }
}

/// Runs every sweep point × repetition; run `i` uses seed `base + i`.
/// `sink` sees each run once, in index order, with its trace.
pub fn run_batch(
    scenario: &Scenario,
    scenario_sha256: String,
    opts: &BatchOptions,
    sink: &mut Sink<'_>,
) -> Result<RunReport, BatchError> {
    let base_seed = opts.seed.unwrap_or(scenario.seed);
    let execution = opts.execution.unwrap_or(scenario.execution);
    let points = scenario.points();
    let mut contexts = Vec::with_capacity(points.len());
    for (index, settings) in points.iter().enumerate() {
        let point = scenario
            .with_settings(settings)
            .and_then(|s| s.context())
            .map_err(|message| BatchError::Point { index, message })?;
        contexts.push(point);
    }
    let reps = scenario.repetitions;
    let plan: Vec<Planned> = (0..points.len())
        .flat_map(|point| (0..reps).map(move |repetition| (point, repetition)))
        .enumerate()
        .map(|(i, (point, repetition))| Planned {
            point,
            repetition,
            seed: base_seed.wrapping_add(i as u64),
        })
        .collect();

    let mut runs = Vec::with_capacity(plan.len());
    let mut agg = Aggregates::default();
    for start in (0..plan.len()).step_by(CHUNK) {
        let end = (start + CHUNK).min(plan.len());
        let chunk = map_indexed(end - start, execution, |k| {
            let p = &plan[start + k];
            let (script, base) = &contexts[p.point];
            let mut ctx = base.clone();
            ctx.seed = p.seed;
            run_task(script, &ctx)
        });
        for (k, outcome) in chunk.into_iter().enumerate() {
            let index = start + k;
            let p = &plan[index];
            let (status, report, error) = match outcome {
                Ok(r) => (RunStatus::Finished, Some(r), None),
                Err(e) => (classify(&e), None, Some(e.to_string())),
            };
            let trace = report.as_ref().map(report_trace).unwrap_or_default();
            let record = RunRecord {
                index,
                point: p.point,
                repetition: p.repetition,
                seed: p.seed,
                settings: points[p.point].clone(),
                status,
                success: report.as_ref().is_some_and(|r| r.success),
                error,
                trace_rows: trace.len(),
                trace_end_s: trace.last().map(|r| r.t_s),
                report,
            };
            sink(&record, &trace)?;
            tally(&mut agg, &record, &trace);
            runs.push(record);
        }
    }
    agg.points = points
        .iter()
        .enumerate()
        .map(|(point, settings)| {
            let of_point = runs.iter().filter(|r| r.point == point);
            PointSummary {
                point,
                settings: settings.clone(),
                runs: of_point.clone().count(),
                successes: of_point.filter(|r| r.success).count(),
            }
        })
        .collect();
    Ok(RunReport {
        scenario_sha256,
        task: scenario.task,
        base_seed,
        repetitions: reps,
        sweep: scenario.sweep.iter().map(|a| a.path.clone()).collect(),
        aggregates: agg,
        runs,
    })
}

fn tally(agg: &mut Aggregates, record: &RunRecord, trace: &[TraceRow]) {
    agg.runs += 1;
    match record.status {
        RunStatus::Finished => agg.completed += 1,
        RunStatus::Refused => {
            agg.completed += 1;
            agg.refused += 1;
        }
        RunStatus::Error => agg.errors += 1,
    }
    agg.successes += usize::from(record.success);
    if let Some(report) = &record.report {
        for stage in &report.stages {
            let outcome = match (stage.skipped, stage.outcome()) {
                (true, _) => "skipped".to_owned(),
                (false, Some(o)) => serde_json::to_value(o)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default(),
                (false, None) => "none".to_owned(),
            };
            *agg.stage_outcomes
                .entry(stage.name.as_str().to_owned())
                .or_default()
                .entry(outcome)
                .or_default() += 1;
        }
    }
    agg.trace_rows += trace.len();
    for row in trace {
        *agg.phase_rows.entry(row.phase.as_str().to_owned()).or_default() += 1;
    }
}

/// Writes one trace as CSV with the standard header.
pub fn write_trace<W: Write>(out: W, trace: &[TraceRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        let [x, y, z] = r.position_mm;
        let [fx, fy, fz] = r.force_n;
        let nums = [r.t_s, x, y, z, r.tilt_deg, fx, fy, fz];
        let mut fields: Vec<String> = nums.iter().map(|v| v.to_string()).collect();
        fields.push(r.phase.as_str().to_owned());
        fields.push(r.contact.as_str().to_owned());
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace_file_name(index: usize) -> String {
    format!("run_{index:04}.csv")
}

/// Files written by [`write_outputs`], relative to the output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub complete: bool,
    pub files: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_clock_s: f64,
    pub runs: usize,
    pub threaded: bool,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> BatchError + '_ {
    move |source| BatchError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BatchError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| BatchError::Encode {
        what: path.display().to_string(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Runs the batch and writes `report.json`, `timing.json`, `manifest.json`
/// and, with tracing on, `traces/run_NNNN.csv` under `out`. On an I/O error
/// the manifest lists what was written before the failure.
pub fn write_outputs(
    out: &Path,
    scenario: &Scenario,
    scenario_sha256: String,
    opts: &BatchOptions,
) -> Result<RunReport, BatchError> {
    let started = std::time::Instant::now();
    let traces_dir = out.join("traces");
    let mut manifest = Manifest::default();
    let result = (|| {
        fs::create_dir_all(out).map_err(io_err(out))?;
        if opts.trace {
            fs::create_dir_all(&traces_dir).map_err(io_err(&traces_dir))?;
        }
        let files = &mut manifest.files;
        let mut sink = |record: &RunRecord, trace: &[TraceRow]| {
            if !opts.trace {
                return Ok(());
            }
            let name = trace_file_name(record.index);
            let path: PathBuf = traces_dir.join(&name);
            let file = File::create(&path).map_err(io_err(&path))?;
            write_trace(BufWriter::new(file), trace).map_err(|e| BatchError::Io {
                path: path.display().to_string(),
                source: io::Error::other(e),
            })?;
            files.push(format!("traces/{name}"));
            Ok(())
        };
        let report = run_batch(scenario, scenario_sha256, opts, &mut sink)?;
        write_json(&out.join("report.json"), &report)?;
        files.push("report.json".into());
        let execution = opts.execution.unwrap_or(scenario.execution);
        let timing = Timing {
            wall_clock_s: started.elapsed().as_secs_f64(),
            runs: report.runs.len(),
            threaded: execution.is_threaded(),
        };
        write_json(&out.join("timing.json"), &timing)?;
        files.push("timing.json".into());
        Ok(report)
    })();
    manifest.complete = result.is_ok();
    manifest.error = result.as_ref().err().map(ToString::to_string);
    let written = write_json(&out.join("manifest.json"), &manifest);
    let report = result?;
    written?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use duojaw_core::search::Phase;
    use duojaw_core::world::ContactClass;

    fn scenario(src: &str) -> Scenario {
        Scenario::parse(src, "t").unwrap()
    }

    #[test]
    fn trace_csv_has_the_fixed_header() {
        let row = TraceRow {
            t_s: 0.5,
            position_mm: [1.0, -2.0, 3.25],
            tilt_deg: 0.0,
            force_n: [0.0, 0.0, -2.5],
            phase: Phase::PushOut,
            contact: ContactClass::RimTwoPoint,
        };
        let mut buf = Vec::new();
        write_trace(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("t_s,x_mm,y_mm,z_mm,tilt_deg,fx_N,fy_N,fz_N,phase,contact_class")
        );
        assert_eq!(lines.next(), Some("0.5,1,-2,3.25,0,0,0,-2.5,push_out,rim_two_point"));
    }

    #[test]
    fn seeds_follow_the_run_index() {
        let s = scenario(
            "task = \"one_hand\"\nseed = 7\nrepetitions = 2\n[[sweep]]\npath = \"noise.placement_offset_mm\"\nvalues = [0.0, 0.25]\n",
        );
        let mut seen = Vec::new();
        let report = run_batch(&s, "h".into(), &BatchOptions::default(), &mut |r, _| {
            seen.push(r.index);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![0, 1, 2, 3]);
        let seeds: Vec<u64> = report.runs.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![7, 8, 9, 10]);
        assert_eq!(report.runs[2].point, 1);
        assert_eq!(report.runs[3].repetition, 1);
        assert_eq!(report.aggregates.points[1].runs, 2);
    }

    #[test]
    fn precondition_failures_are_data() {
        let s = scenario(
            r#"
task = "idle_pulley"
seed = 1
[[script.stages]]
name = "a1"
peg = "retainer_pin"
target = "idle_pulley"
holder = "inner_jaw"
target_depth_mm = 8.0
[[script.stages]]
name = "a2"
peg = "retainer_pin"
target = "idle_pulley"
holder = "inner_jaw"
target_depth_mm = 26.5
approach_gap_mm = 0.0
scripted = true
skip = true
[[script.stages]]
name = "b"
peg = "retainer_pin"
target = "retainer_pin_spacer"
holder = "inner_jaw"
target_depth_mm = 15.0
[[script.stages]]
name = "c"
peg = "retainer_pin"
target = "base_slot"
holder = "inner_jaw"
target_depth_mm = 8.0
"#,
        );
        let report = run_batch(&s, "h".into(), &BatchOptions::default(), &mut |_, _| Ok(())).unwrap();
        assert_eq!(report.runs[0].status, RunStatus::Refused);
        assert!(report.all_completed());
        assert_eq!(report.aggregates.refused, 1);
        assert_eq!(report.aggregates.successes, 0);
    }

    #[test]
    fn execution_mode_does_not_change_results() {
        let s = scenario("task = \"one_hand\"\nseed = 3\nrepetitions = 4\n[noise]\nplacement_offset_mm = 0.5\n");
        let run = |execution| {
            let opts = BatchOptions {
                execution: Some(execution),
                ..BatchOptions::default()
            };
            let mut traces = Vec::new();
            let report = run_batch(&s, "h".into(), &opts, &mut |_, t| {
                traces.push(t.to_vec());
                Ok(())
            })
            .unwrap();
            (report, traces)
        };
        assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
    }

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
