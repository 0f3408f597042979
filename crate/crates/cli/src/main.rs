use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use scatterlab_core::shell::{
    collect_reports, load_scenario, records_csv, run, Job, JobFilter, JobKind, JobRecord, RunOptions, OUT_ENV,
};

#[derive(Parser)]
#[command(name = "scatterlab", version, about = "Classical and quantum scattering experiments from scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Scenario file.
    #[arg(long, short)]
    scenario: PathBuf,
    /// Output root; results go to <out>/<scenario>/<job>/.
    #[arg(long, env = OUT_ENV, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Run only these scenario jobs.
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    /// Multiply every tolerance; acceptance runs use 1.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Args, Clone)]
struct JobArgs {
    #[command(flatten)]
    run: RunArgs,
    /// JSON object of job parameters; runs one job of this kind instead of the scenario's.
    #[arg(long)]
    params: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one bicharacteristic and write its samples.
    Flow(JobArgs),
    /// Classical scattering map for a set of beams.
    ClassicalMap(JobArgs),
    /// Finite-difference Jacobian of the classical map and its symplectic defect.
    Jacobian(JobArgs),
    /// Convergence of trajectories to the radial sets.
    Radial(JobArgs),
    /// Propagate a coherent packet through the scenario and dump fields.
    Propagate(JobArgs),
    /// Apply the quantum scattering map to a coherent packet.
    Scatter(JobArgs),
    /// Wavepacket moments against the classical map.
    Egorov(JobArgs),
    /// Pairing of forward and adjoint asymptotic data.
    Pairing(JobArgs),
    /// Norm preservation for real potentials.
    Unitarity(JobArgs),
    /// Phase of <Sf, f> against the integrated potential.
    Eikonal(JobArgs),
    /// Identity away from the perturbation at large fiber offset.
    Highfreq(JobArgs),
    /// Weakly null family with non-vanishing (S - Id) image.
    Noncompact(JobArgs),
    /// Symplecticity over random beams.
    Symplectic(JobArgs),
    /// Conservation of the principal symbol and the Galilean invariant.
    Conservation(JobArgs),
    /// Exact boundary chart round trips and leading-order agreement.
    Chart(JobArgs),
    /// Scattering map of the free equation.
    FreeIdentity(JobArgs),
    /// Large-time profile of free solutions.
    Profile(JobArgs),
    /// Run every job in the scenario.
    All(RunArgs),
    /// Summarize the reports under a scenario output directory.
    Report {
        /// Directory holding <job>/report.json.
        dir: PathBuf,
    },
}

impl Command {
    fn kind(&self) -> Option<JobKind> {
        Some(match self {
            Command::Flow(_) => JobKind::Flow,
            Command::ClassicalMap(_) => JobKind::ClassicalMap,
            Command::Jacobian(_) => JobKind::Jacobian,
            Command::Radial(_) => JobKind::Radial,
            Command::Propagate(_) => JobKind::Propagate,
            Command::Scatter(_) => JobKind::Scatter,
            Command::Egorov(_) => JobKind::Egorov,
            Command::Pairing(_) => JobKind::Pairing,
            Command::Unitarity(_) => JobKind::Unitarity,
            Command::Eikonal(_) => JobKind::Eikonal,
            Command::Highfreq(_) => JobKind::Highfreq,
            Command::Noncompact(_) => JobKind::Noncompact,
            Command::Symplectic(_) => JobKind::Symplectic,
            Command::Conservation(_) => JobKind::Conservation,
            Command::Chart(_) => JobKind::Chart,
            Command::FreeIdentity(_) => JobKind::FreeIdentity,
            Command::Profile(_) => JobKind::Profile,
            Command::All(_) | Command::Report { .. } => return None,
        })
    }

    fn job_args(&self) -> Option<&JobArgs> {
        match self {
            Command::Flow(a)
            | Command::ClassicalMap(a)
            | Command::Jacobian(a)
            | Command::Radial(a)
            | Command::Propagate(a)
            | Command::Scatter(a)
            | Command::Egorov(a)
            | Command::Pairing(a)
            | Command::Unitarity(a)
            | Command::Eikonal(a)
            | Command::Highfreq(a)
            | Command::Noncompact(a)
            | Command::Symplectic(a)
            | Command::Conservation(a)
            | Command::Chart(a)
            | Command::FreeIdentity(a)
            | Command::Profile(a) => Some(a),
            Command::All(_) | Command::Report { .. } => None,
        }
    }
}

fn print_records(records: &[JobRecord]) {
    for r in records {
        println!("{}", r.summary_line());
        for line in r.report.summary().lines().skip(1) {
            println!("  {line}");
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Command::Report { dir } = &cli.command {
        let records = collect_reports(dir)?;
        if records.is_empty() {
            bail!("no reports under {}", dir.display());
        }
        print_records(&records);
        let path = dir.join("summary.csv");
        std::fs::write(&path, records_csv(&records)).with_context(|| format!("writing {}", path.display()))?;
        let ok = records.iter().all(JobRecord::acceptable);
        return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE });
    }
    let (args, kind, params) = match (&cli.command, cli.command.job_args()) {
        (Command::All(a), _) => (a.clone(), None, None),
        (cmd, Some(j)) => (j.run.clone(), cmd.kind(), j.params.clone()),
        _ => unreachable!("report handled above"),
    };
    let mut scenario = load_scenario(&args.scenario).with_context(|| format!("loading {}", args.scenario.display()))?;
    let mut filter = JobFilter { names: args.only.clone(), kinds: kind.into_iter().collect() };
    if let (Some(kind), Some(text)) = (kind, params) {
        let params: Map<String, Value> = serde_json::from_str(&text).context("--params must be a JSON object")?;
        let job = Job { params, ..Job::new(kind) };
        filter.names = vec![job.name.clone()];
        scenario.insert_job(job)?;
    }
    let opts = RunOptions { out_dir: args.out.clone(), threads: args.jobs, tol_scale: args.tol_scale };
    let summary = run(&scenario, &filter, &opts)?;
    print_records(&summary.records);
    println!(
        "{} job(s) written to {}",
        summary.records.len(),
        args.out.join(&scenario.name).display()
    );
    Ok(if summary.exit_code() == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
