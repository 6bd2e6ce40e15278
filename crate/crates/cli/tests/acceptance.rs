//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use fringebench::commands::{cmd_commutators, cmd_fringe, run_scenario};
use fringebench::config::load_scenario;
use fringebench::suites::{self, Suite, SuiteReport};
use fringebench_core::measurement::conditional_fringe;
use fringebench_core::purification::{purified_double_slit, ScreenRegister};

const SEED: u64 = 7;

struct Tally {
    failed: Vec<&'static str>,
}

impl Tally {
    fn record(&mut self, name: &'static str, ok: bool, detail: String) {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(name);
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn value(rep: &SuiteReport, check: &str) -> f64 {
    rep.check(check)
        .unwrap_or_else(|| panic!("missing check {check}"))
        .value
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn suite(s: Suite) -> (SuiteReport, Duration) {
    let (out, dt) = timed(|| suites::run(s, SEED).expect("suite runs"));
    (out.report, dt)
}

fn three_forms(t: &mut Tally) {
    let (rep, dt) = suite(Suite::Forms);
    let d = value(&rep, "three_form_max_difference");
    t.record(
        "three-form equivalence",
        d <= 1e-12 && dt < Duration::from_secs(30),
        format!("100 instances n=64, max |Δp| = {d:.3e} (≤ 1e-12), {dt:.2?} (< 30 s)"),
    );
}

fn rank_one(t: &mut Tally) {
    let (d, dt) = timed(|| suites::rank_one_deviation(SEED).expect("rank-1 runs"));
    t.record(
        "rank-1 reduction",
        d <= 1e-9 && dt < Duration::from_secs(5),
        format!("max |product − trace| = {d:.3e} (≤ 1e-9), {dt:.2?} (< 5 s)"),
    );
}

fn fringe_law(t: &mut Tally) {
    let sc = load_scenario(&root().join("scenarios/reference.cfg")).expect("reference loads");
    let (rep, dt) = timed(|| run_scenario(&sc).expect("reference runs"));
    let law = rep.analytic_spacing;
    let rel = rep.spacing.map_or(f64::INFINITY, |s| (s - law).abs() / law);
    t.record(
        "fringe law",
        rel <= 0.02 && rep.correlation >= 0.98 && dt < Duration::from_secs(60),
        format!(
            "n={}, spacing {:.4} vs 2πħT/(md) = {law:.4} (rel {rel:.2e} ≤ 0.02), \
             correlation {:.5} (≥ 0.98), {dt:.2?} (< 60 s)",
            sc.grid.n(),
            rep.spacing.unwrap_or(f64::NAN),
            rep.correlation
        ),
    );
}

fn purification(t: &mut Tally) {
    let ((pixel, trace), dt) = timed(|| {
        let (rep, _) = suite(Suite::Purify);
        let trace = value(&rep, "postselected_trace_distance");
        let sc = load_scenario(&root().join("scenarios/reference.cfg")).unwrap();
        let reg = ScreenRegister::for_screen(sc.grid, &sc.screen, 4, std::f64::consts::FRAC_PI_2)
            .unwrap();
        let a = purified_double_slit(&sc, &reg).unwrap();
        let b = conditional_fringe(&sc).unwrap();
        let pixel = a
            .p_cond
            .iter()
            .zip(&b.p_cond)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        (pixel, trace)
    });
    t.record(
        "purification equals projection",
        pixel <= 1e-9 && trace <= 1e-10 && dt < Duration::from_secs(60),
        format!(
            "per-pixel {pixel:.3e} (≤ 1e-9), trace distance over 50 packets n=256 K=4 \
             {trace:.3e} (≤ 1e-10), {dt:.2?} (< 60 s)"
        ),
    );
}

fn spread(t: &mut Tally) {
    let (rep, _) = suite(Suite::Spread);
    let (law, slope) = (value(&rep, "spread_law"), value(&rep, "asymptotic_slope"));
    t.record(
        "spread law",
        law <= 1e-3 && slope <= 0.02,
        format!("max relative error {law:.3e} (≤ 1e-3), slope error {slope:.3e} (≤ 0.02)"),
    );
}

fn commutators(t: &mut Tally, rep: &SuiteReport) {
    let canonical = value(rep, "canonical_commutator");
    let two_time = value(rep, "two_time_commutator");
    let equal = value(rep, "equal_time_windows");
    let robertson = rep.check("robertson_bound").unwrap();
    t.record(
        "commutators",
        canonical <= 1e-6 && two_time <= 1e-6 && equal <= 1e-12 && robertson.passed == Some(true),
        format!(
            "[x,p] rel {canonical:.3e}, two-time rel {two_time:.3e} (≤ 1e-6), \
             equal-time windows {equal:.3e} (≤ 1e-12), min product − bound {:.3e} (≥ −1e-9); \
             reported: {}, unequal-time window deviation {:.3e}",
            robertson.value,
            rep.check("dispersion_below_hbar_t_over_m").unwrap().detail,
            value(rep, "unequal_time_window_deviation"),
        ),
    );
}

fn equation_of_motion(t: &mut Tally, rep: &SuiteReport) {
    let r = value(rep, "equation_of_motion");
    t.record(
        "equation of motion",
        r <= 1e-6,
        format!("max residual {r:.3e} (≤ 1e-6) for t ≤ {}", suites::T_MAX),
    );
}

fn run_bin(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_fringebench"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism(t: &mut Tally) {
    let tmp = tempfile::TempDir::new().unwrap();
    let scenario = root().join("scenarios/reference.cfg");
    let spec = root().join("scenarios/commutators.cfg");
    let mut runs = Vec::new();
    let mut ok = true;
    for i in 0..2 {
        let out = tmp.path().join(i.to_string());
        let o = |sub: &str| out.join(sub).to_string_lossy().into_owned();
        ok &= run_bin(&["fringe", scenario.to_str().unwrap(), "--out", &o("fringe")]);
        ok &= run_bin(&["verify", "all", "--seed", "7", "--out", &o("verify")]);
        ok &= run_bin(&[
            "commutators",
            spec.to_str().unwrap(),
            "--out",
            &o("commutators"),
        ]);
        // the library entry points must agree with the binary too
        cmd_fringe(&scenario, &out.join("lib-fringe")).unwrap();
        cmd_commutators(&spec, &out.join("lib-commutators")).unwrap();
        runs.push(
            [
                "fringe",
                "verify",
                "commutators",
                "lib-fringe",
                "lib-commutators",
            ]
            .map(|d| tree(&out.join(d))),
        );
    }
    let same = runs[0] == runs[1];
    let cross = runs[0][0] == runs[0][3] && runs[0][2] == runs[0][4];
    let files: usize = runs[0].iter().map(Vec::len).sum();
    t.record(
        "determinism",
        ok && same && cross,
        format!("{files} output files byte-identical across repeated runs: {same}, binary vs library: {cross}"),
    );
}

fn main() {
    let mut t = Tally { failed: Vec::new() };
    three_forms(&mut t);
    rank_one(&mut t);
    fringe_law(&mut t);
    purification(&mut t);
    spread(&mut t);
    let (locality, _) = suite(Suite::Locality);
    commutators(&mut t, &locality);
    equation_of_motion(&mut t, &locality);
    determinism(&mut t);
    if t.failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!(
            "acceptance: {} failed: {}",
            t.failed.len(),
            t.failed.join(", ")
        );
        std::process::exit(1);
    }
}
