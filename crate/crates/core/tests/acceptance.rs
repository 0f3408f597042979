//! Runs every acceptance criterion at its stated tolerance, then the negative controls.
//! One line per criterion; the process exits non-zero if any criterion fails or any
//! control passes.

use std::process::ExitCode;
use std::time::Instant;

use scatterlab_core::verify::*;
use scatterlab_core::Result;

type Check = Box<dyn Fn(bool) -> Result<CheckReport>>;

fn criteria() -> Vec<(&'static str, Check)> {
    vec![
        (
            "free identity",
            Box::new(|control| check_free_identity(&FreeIdentityConfig { control, ..Default::default() })),
        ),
        (
            "p-conservation and Galilean invariance",
            Box::new(|control| check_conservation(&ConservationConfig { control, ..Default::default() })),
        ),
        (
            "symplecticity of the classical map",
            Box::new(|control| check_symplectic(&SymplecticConfig { control, ..Default::default() })),
        ),
        (
            "radial-set convergence",
            Box::new(|control| check_radial(&RadialConfig { control, ..Default::default() })),
        ),
        (
            "unitarity",
            Box::new(|control| check_unitarity(&UnitarityConfig { control, ..Default::default() })),
        ),
        (
            "pairing formula",
            Box::new(|control| check_pairing(&PairingConfig { control, ..Default::default() })),
        ),
        (
            "Egorov moments",
            Box::new(|control| check_egorov(&EgorovConfig { control, ..Default::default() })),
        ),
        (
            "eikonal phase",
            Box::new(|control| check_eikonal(&EikonalConfig { control, ..Default::default() })),
        ),
        (
            "identity at large frequency",
            Box::new(|control| check_highfreq(&HighFreqConfig { control, ..Default::default() })),
        ),
        (
            "noncompactness of S - Id",
            Box::new(|control| check_noncompact(&NoncompactConfig { control, ..Default::default() })),
        ),
        (
            "asymptotic profile",
            Box::new(|control| check_profile(&ProfileConfig { control, ..Default::default() })),
        ),
        (
            "boundary-chart consistency",
            Box::new(|control| check_chart(&ChartConfig { control, ..Default::default() })),
        ),
    ]
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as `--quiet`; a bare filter selects criteria by substring.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<(usize, &'static str, Check)> = criteria()
        .into_iter()
        .enumerate()
        .filter(|(_, (name, _))| filter.is_empty() || filter.iter().any(|f| name.contains(f.as_str())))
        .map(|(i, (name, check))| (i + 1, name, check))
        .collect();
    let mut failures = 0;
    println!("acceptance criteria");
    for (i, name, check) in &selected {
        let start = Instant::now();
        let outcome = check(false);
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(report) => {
                let verdict = if report.passed() { "PASS" } else { "FAIL" };
                if !report.passed() {
                    failures += 1;
                }
                println!("{verdict} {i:>2} {name} ({secs:.1} s)");
                for line in report.summary().lines().skip(1) {
                    println!("      {}", line.trim_start());
                }
            }
            Err(e) => {
                failures += 1;
                println!("FAIL {i:>2} {name} ({secs:.1} s): {e}");
            }
        }
    }
    println!("negative controls");
    for (i, name, check) in &selected {
        let start = Instant::now();
        let outcome = check(true);
        let secs = start.elapsed().as_secs_f64();
        let ok = !matches!(&outcome, Ok(r) if r.passed());
        if !ok {
            failures += 1;
        }
        let detail = match &outcome {
            Ok(r) => r
                .measured
                .iter()
                .filter(|m| !m.passes())
                .map(|m| m.label.clone())
                .collect::<Vec<_>>()
                .join("; "),
            Err(e) => e.to_string(),
        };
        let verdict = if ok { "ok  " } else { "FAIL" };
        println!("{verdict} {i:>2} {name} control ({secs:.1} s): {}", if ok { detail } else { "passed".into() });
    }
    if failures == 0 {
        println!("all {} criteria passed", selected.len());
        ExitCode::SUCCESS
    } else {
        println!("{failures} failure(s)");
        ExitCode::FAILURE
    }
}
