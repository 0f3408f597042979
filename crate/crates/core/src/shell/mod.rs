//! Scenario files, the job runner and on-disk reports.
//!
//! A run writes `out/<scenario>/<job>/report.json` plus one CSV per table and any
//! field dumps. CSV output is bit-identical across runs: every job uses fixed seeds,
//! FFT plans are deterministic for a given length, and timings only go to JSON.

mod jobs;
mod scenario;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::plans_built;
use crate::verify::{CheckReport, Status};

pub use jobs::{
    Artifact, ClassicalMapJob, FlowJob, JacobianJob, JobKind, PacketSpec, PropagateJob, ScatterJob,
};
pub use scenario::{
    load_scenario, parse_scenario, BeamExtent, GridSettings, Job, JobFilter, Scenario, SolverSettings, SCHEMA,
    SUPPORT_FRACTION,
};

pub const OUT_ENV: &str = "SCATTERLAB_OUT";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    /// Multiplies every tolerance; acceptance runs use 1.
    pub tol_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            threads: 0,
            tol_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job: String,
    pub check: JobKind,
    pub control: bool,
    pub status: Status,
    /// Set when the job stopped with an error instead of producing measurements.
    pub error: Option<String>,
    pub tol_scale: f64,
    pub runtime_s: f64,
    pub report: CheckReport,
}

impl JobRecord {
    /// Controls are acceptable when they fail; everything else must pass.
    pub fn acceptable(&self) -> bool {
        (self.status == Status::Pass) != self.control
    }

    pub fn summary_line(&self) -> String {
        let verdict = match (self.control, self.status) {
            (false, Status::Pass) => "pass",
            (false, Status::Fail) => "FAIL",
            (true, Status::Fail) => "control failed as expected",
            (true, Status::Pass) => "CONTROL PASSED",
        };
        let mut line = format!("{} ({}): {verdict}", self.job, self.check.as_str());
        if let Some(e) = &self.error {
            line.push_str(&format!(" [{e}]"));
        }
        line
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub records: Vec<JobRecord>,
    /// Whether any FFT plan, and hence any quantum solver, was built during the run.
    pub quantum_solver_built: bool,
}

impl RunSummary {
    /// 0 iff every non-control job passed.
    pub fn exit_code(&self) -> i32 {
        if self.records.iter().all(|r| r.control || r.status == Status::Pass) {
            0
        } else {
            1
        }
    }
}

/// Runs the selected jobs in parallel and writes their outputs.
///
/// Job failures, including solver errors, are captured in the records; only I/O and
/// thread-pool errors abort the run.
pub fn run(scenario: &Scenario, filter: &JobFilter, opts: &RunOptions) -> Result<RunSummary> {
    let selected = scenario.select(filter)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let plans_before = plans_built();
    let outcomes: Vec<(JobRecord, Vec<Artifact>)> =
        pool.install(|| selected.par_iter().map(|job| run_job(scenario, job, opts.tol_scale)).collect());
    let quantum_solver_built = plans_built() > plans_before;
    let root = opts.out_dir.join(&scenario.name);
    for (record, artifacts) in &outcomes {
        write_job(&root.join(&record.job), record, artifacts)?;
    }
    let summary = RunSummary {
        scenario: scenario.name.clone(),
        records: outcomes.into_iter().map(|(r, _)| r).collect(),
        quantum_solver_built,
    };
    fs::create_dir_all(&root)?;
    fs::write(root.join("summary.json"), to_json(&summary)?)?;
    Ok(summary)
}

fn run_job(scenario: &Scenario, job: &Job, tol_scale: f64) -> (JobRecord, Vec<Artifact>) {
    let start = Instant::now();
    let (mut report, artifacts, error) = match jobs::execute(job.check, scenario, &job.params) {
        Ok(out) => (out.report, out.artifacts, None),
        Err(e) => {
            let mut report = CheckReport::new(job.check.as_str());
            report.note(format!("error: {e}"));
            (report, Vec::new(), Some(e.to_string()))
        }
    };
    if tol_scale != 1.0 {
        report.scale_tolerances(tol_scale);
        report.note(format!("tolerances scaled by {tol_scale}"));
    }
    let record = JobRecord {
        job: job.name.clone(),
        check: job.check,
        control: job.is_control(),
        status: if error.is_some() { Status::Fail } else { report.status },
        error,
        tol_scale,
        runtime_s: start.elapsed().as_secs_f64(),
        report,
    };
    (record, artifacts)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))
}

fn write_job(dir: &Path, record: &JobRecord, artifacts: &[Artifact]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut record = record.clone();
    for table in &record.report.tables {
        let name = format!("{}.csv", table.name);
        fs::write(dir.join(&name), table.to_csv())?;
        record.report.artifacts.push(name);
    }
    for a in artifacts {
        fs::write(dir.join(&a.file_name), &a.contents)?;
        record.report.artifacts.push(a.file_name.clone());
    }
    let mut f = fs::File::create(dir.join(REPORT_FILE))?;
    f.write_all(to_json(&record)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Reads every `<job>/report.json` under a scenario output directory, sorted by job name.
pub fn collect_reports(dir: impl AsRef<Path>) -> Result<Vec<JobRecord>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path().join(REPORT_FILE)))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                line: e.line(),
                column: e.column(),
                message: format!("{}: {e}", p.display()),
            })
        })
        .collect()
}

/// `job,check,control,status,error` rows for a set of records.
pub fn records_csv(records: &[JobRecord]) -> String {
    let mut out = String::from("job,check,control,status,failed_measurements,error\n");
    for r in records {
        let failed = r.report.measured.iter().filter(|m| !m.passes()).count();
        let status = if r.status == Status::Pass { "pass" } else { "fail" };
        let error = r.error.as_deref().unwrap_or("").replace(['"', ',', '\n'], " ");
        out.push_str(&format!("{},{},{},{status},{failed},{error}\n", r.job, r.check.as_str(), r.control));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario_text(body: &str) -> String {
        format!(
            r#"{{
  "schema": "{SCHEMA}",
  "name": "t",
  "dim": 1,
  "perturbation": {{"dim": 1}},
  "grid": {{"n_points": 512, "half_width": 30.0}}{body}
}}"#
        )
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_scenario("{\n  \"schema\": 3,\n}").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = scenario_text(r#", "jobs": [{"name": "a", "check": "scatter", "params": {"pakcet": {}}}]"#);
        assert!(matches!(parse_scenario(&text), Err(Error::Validation(_))));
        let text = scenario_text(r#", "extra": 1"#);
        assert!(matches!(parse_scenario(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn wrong_schema_is_a_validation_error() {
        let text = scenario_text("").replace(SCHEMA, "scatterlab.scenario/0");
        assert!(matches!(parse_scenario(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn packets_must_fit_the_box() {
        let ok = scenario_text(r#", "jobs": [{"name": "s", "check": "scatter", "params": {"packet": {"base": [0.5], "h": 0.5}}}]"#);
        assert!(parse_scenario(&ok).is_ok());
        let far = scenario_text(r#", "jobs": [{"name": "s", "check": "scatter", "params": {"packet": {"fiber": [27.0], "h": 0.5}}}]"#);
        assert!(matches!(parse_scenario(&far), Err(Error::Validation(_))));
    }

    #[test]
    fn support_must_leave_a_margin() {
        let text = scenario_text("").replace(
            r#""perturbation": {"dim": 1}"#,
            r#""perturbation": {"dim": 1, "bumps": [{"amplitude": 0.05, "center": [22.0], "time": 0.0, "radius": 2.0, "duration": 1.0, "pattern": [[1.0]]}]}"#,
        );
        assert!(matches!(parse_scenario(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn duplicate_and_unsafe_names_are_rejected() {
        let dup = scenario_text(r#", "jobs": [{"name": "a", "check": "chart"}, {"name": "a", "check": "flow"}]"#);
        assert!(matches!(parse_scenario(&dup), Err(Error::Validation(_))));
        let bad = scenario_text(r#", "jobs": [{"name": "../x", "check": "chart"}]"#);
        assert!(matches!(parse_scenario(&bad), Err(Error::Validation(_))));
    }

    #[test]
    fn filter_synthesizes_missing_kinds() {
        let s = parse_scenario(&scenario_text(r#", "jobs": [{"name": "a", "check": "chart"}]"#)).unwrap();
        let all = s.select(&JobFilter::default()).unwrap();
        assert_eq!(all.len(), 1);
        let jobs = s
            .select(&JobFilter { names: vec![], kinds: vec![JobKind::Flow, JobKind::Chart] })
            .unwrap();
        assert_eq!(jobs.iter().map(|j| j.name.as_str()).collect::<Vec<_>>(), ["a", "flow"]);
        assert!(s.select(&JobFilter { names: vec!["nope".into()], kinds: vec![] }).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in JobKind::ALL {
            assert_eq!(JobKind::parse(k.as_str()), Some(k));
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.as_str()));
        }
    }

    #[test]
    fn records_judge_controls_inversely() {
        let mut report = CheckReport::new("x");
        report.measure("v", 2.0, 1.0, crate::verify::Bound::Max);
        let rec = JobRecord {
            job: "x".into(),
            check: JobKind::Chart,
            control: true,
            status: report.status,
            error: None,
            tol_scale: 1.0,
            runtime_s: 0.0,
            report,
        };
        assert!(rec.acceptable());
        let summary = RunSummary { scenario: "s".into(), records: vec![rec.clone()], quantum_solver_built: false };
        assert_eq!(summary.exit_code(), 0);
        let summary = RunSummary {
            records: vec![JobRecord { control: false, ..rec }],
            ..summary
        };
        assert_eq!(summary.exit_code(), 1);
    }
}
