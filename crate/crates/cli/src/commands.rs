//! The three subcommands. Each writes into `out` (created if missing).

use std::fs;
use std::path::Path;

use fringebench_core::locality::local_commutator_scan;
use fringebench_core::measurement::conditional_fringe;
use fringebench_core::purification::{purified_double_slit, ScreenRegister};
use fringebench_core::{gaussian_packet, FringeReport, Scenario};
use serde::Serialize;

use crate::config::{load_commutator_spec, load_scenario, CommutatorSpec};
use crate::error::{CliError, CliResult};
use crate::output::{
    write_commutator_csv, write_fringe_csv, write_json, write_spread_csv, FringeSummary,
};
use crate::suites::{self, Suite, SuiteReport};

pub const FRINGE_CSV: &str = "fringe.csv";
pub const FRINGE_JSON: &str = "summary.json";
pub const VERIFY_JSON: &str = "verify.json";
pub const SPREAD_CSV: &str = "spread.csv";
pub const COMMUTATOR_CSV: &str = "commutators.csv";
pub const COMMUTATOR_JSON: &str = "commutators.json";

/// Projective pipeline, or the purified one when a register is configured.
pub fn run_scenario(sc: &Scenario) -> CliResult<FringeReport> {
    Ok(match sc.register {
        Some(r) => {
            let reg = ScreenRegister::for_screen(sc.grid, &sc.screen, r.k, r.theta)?;
            purified_double_slit(sc, &reg)?
        }
        None => conditional_fringe(sc)?,
    })
}

pub fn cmd_fringe(scenario: &Path, out: &Path) -> CliResult<FringeReport> {
    let sc = load_scenario(scenario)?;
    let rep = run_scenario(&sc)?;
    fs::create_dir_all(out)?;
    write_fringe_csv(&out.join(FRINGE_CSV), &rep)?;
    write_json(
        &out.join(FRINGE_JSON),
        &FringeSummary::new(&rep, sc.register.is_some()),
    )?;
    Ok(rep)
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

/// Runs the suites, writes `verify.json` (and `spread.csv` when the spread
/// suite ran), then fails with a verification error if any gating check
/// failed.
pub fn cmd_verify(suite: &str, seed: u64, out: &Path) -> CliResult<VerifyReport> {
    let list = Suite::parse_list(suite)
        .ok_or_else(|| CliError::validation("suite", format!("unknown suite {suite:?}")))?;
    fs::create_dir_all(out)?;
    let mut reports = Vec::new();
    for s in list {
        let outcome = suites::run(s, seed)?;
        if let Some(rows) = &outcome.spread {
            write_spread_csv(&out.join(SPREAD_CSV), rows)?;
        }
        reports.push(outcome.report);
    }
    let report = VerifyReport {
        seed,
        passed: reports.iter().all(|r| r.passed),
        suites: reports,
    };
    write_json(&out.join(VERIFY_JSON), &report)?;
    if !report.passed {
        let failed: Vec<String> = report
            .suites
            .iter()
            .flat_map(|r| {
                r.checks
                    .iter()
                    .filter(|c| c.failed())
                    .map(move |c| format!("{}/{} ({:e})", r.suite.name(), c.name, c.value))
            })
            .collect();
        return Err(CliError::Verification(failed.join(", ")));
    }
    Ok(report)
}

#[derive(Debug, Serialize)]
struct CommutatorSummary {
    width: f64,
    entries: usize,
    equal_time_max: f64,
    unequal_time_max_deviation: f64,
}

pub fn cmd_commutators(spec: &Path, out: &Path) -> CliResult<fringebench_core::CommutatorReport> {
    let spec = load_commutator_spec(spec)?;
    let rep = run_commutators(&spec)?;
    fs::create_dir_all(out)?;
    write_commutator_csv(&out.join(COMMUTATOR_CSV), &rep)?;
    write_json(
        &out.join(COMMUTATOR_JSON),
        &CommutatorSummary {
            width: rep.width,
            entries: rep.entries.len(),
            equal_time_max: rep.equal_time_max(),
            unequal_time_max_deviation: rep.unequal_time_max_deviation(),
        },
    )?;
    Ok(rep)
}

pub fn run_commutators(spec: &CommutatorSpec) -> CliResult<fringebench_core::CommutatorReport> {
    let p = spec.packet;
    let psi = gaussian_packet(spec.grid, p.x0, p.p0, p.sigma0, &spec.params)?;
    Ok(local_commutator_scan(
        &spec.centers,
        &spec.times,
        spec.width,
        &psi,
        &spec.params,
    )?)
}
