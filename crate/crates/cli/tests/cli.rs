use std::path::{Path, PathBuf};
use std::process::Command;

use cim_cli::{exit, run_with, RunConfig};
use cim_core::dynamics::PumpSchedule;
use cim_core::dynamics::EngineParams;
use cim_core::frustration::{build_hyperspin, default_hyperspin_phases};
use cim_core::ising::IsingModel;
use cim_quantum::dark::{construct_dark_components, quantum_alpha};
use proptest::prelude::*;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cim(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_with(std::iter::once("cim").chain(args.iter().copied()), &mut out, &mut err);
    Run { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const TRIANGLE: &str = "[model]\ngenerator = \"afm-all-to-all\"\nn = 3\n";

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_exact_lists_levels() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", "[model]\ngenerator = \"afm-all-to-all\"\nn = 4\n");
    let r = cim(&["solve-exact", "--config", path(&cfg)]);
    assert_eq!(r.code, exit::OK, "{}", r.stderr);
    let rows: Vec<&str> = r.stdout.lines().skip(2).collect();
    let head: Vec<String> = rows.iter().map(|l| l.split(',').take(3).collect::<Vec<_>>().join(",")).collect();
    assert_eq!(head, ["-2,6,2", "0,8,3", "6,2,6"]);
}

#[test]
fn triangle_sweep_finds_ground_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", &format!("scheme = \"general_fe\"\nn_flip = 1\n{TRIANGLE}"));
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let r = cim(&["sweep", "--config", path(&cfg), "--samples", "4096", "--seed", "7", "--out", path(&a)]);
    assert_eq!(r.code, exit::OK, "{}", r.stderr);
    assert!(r.stderr.contains("best_energy=-1"), "{}", r.stderr);
    let r = cim(&["sweep", "--config", path(&cfg), "--samples", "4096", "--seed", "7", "--out", path(&b), "--workers", "3"]);
    assert_eq!(r.code, exit::OK);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn below_requirement_sweep_is_expected_to_find_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", &format!("n_flip = 0\nsamples = 256\nseed = 7\n{TRIANGLE}"));
    let r = cim(&["sweep", "--config", path(&cfg)]);
    assert_eq!(r.code, exit::OK, "{}", r.stderr);
    assert!(r.stderr.contains("accepted=0"));
    assert!(r.stdout.starts_with("# cim-sweep v1\n"));
}

#[test]
fn feasible_budget_without_acceptance_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    // Stopped long before the amplitudes settle.
    let cfg = write_config(dir.path(), "s.toml", &format!("n_flip = 1\nsamples = 8\n[sweep]\nt_end = 0.5\n{TRIANGLE}"));
    let r = cim(&["sweep", "--config", path(&cfg)]);
    assert_eq!(r.code, exit::INFEASIBLE, "{}", r.stderr);
}

#[test]
fn trajectory_from_the_dark_state_keeps_unit_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "q.toml",
        &format!("scheme = \"hyperspin\"\n[quantum]\ninitial = \"dark\"\nt_ramp = 0.0\nt_hold = 5.0\ntrajectories = 1\n{TRIANGLE}"),
    );
    let r = cim(&["trajectory", "--config", path(&cfg)]);
    assert_eq!(r.code, exit::OK, "{}", r.stderr);
    let fid: f64 = r.stderr.split_whitespace().find_map(|t| t.strip_prefix("fidelity=")).unwrap().parse().unwrap();
    assert!((fid - 1.0).abs() < 1e-3, "{}", r.stderr);
    assert!(r.stderr.contains("stderr=0.000000"));
    assert_eq!(r.stdout.lines().count(), 3);
}

#[test]
fn low_cutoff_trajectory_is_run_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q.toml", &format!("[quantum]\ncutoff = 4\ntrajectories = 2\n{TRIANGLE}"));
    let r = cim(&["trajectory", "--config", path(&cfg)]);
    assert_eq!(r.code, exit::INVALID_RUN, "{}", r.stderr);
}

#[test]
fn delayline_schedules() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d.toml", TRIANGLE);
    let out = dir.path().join("sched.txt");
    let r = cim(&["compile-delayline", "--check", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(r.code, exit::OK, "{}", r.stderr);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 6);
    assert!(r.stderr.contains("round-trip check passed"));

    let empty = write_config(dir.path(), "e.toml", "[model]\nn_spins = 2\ncouplings = []\n");
    let r = cim(&["compile-delayline", "--check", "--config", path(&empty)]);
    assert_eq!(r.code, exit::OK, "{}", r.stderr);
    assert_eq!(r.stdout.lines().count(), 1);
    assert!(r.stdout.starts_with('#'));

    let partial = write_config(dir.path(), "p.toml", &format!("phases = [{{ pair = [0, 1], phase = \"0\" }}]\n{TRIANGLE}"));
    assert_eq!(cim(&["compile-delayline", "--config", path(&partial)]).code, exit::USAGE);
}

#[test]
fn check_dark_on_a_dark_component() {
    let m = IsingModel::all_to_all_afm(3).unwrap();
    let fe = build_hyperspin(&m, &default_hyperspin_phases(&m), &EngineParams::default()).unwrap();
    let comp = &construct_dark_components(&fe, quantum_alpha(1.0, 1.0)).unwrap()[0];
    let amps: Vec<String> =
        comp.assignment.amplitudes().iter().map(|a| format!("[{:?}, {:?}]", a.re, a.im)).collect();
    let dir = tempfile::tempdir().unwrap();
    let dark = write_config(
        dir.path(),
        "k.toml",
        &format!("scheme = \"hyperspin\"\n[dark]\namplitudes = [{}]\n{TRIANGLE}", amps.join(", ")),
    );
    let r = cim(&["check-dark", "--require-dark", "--config", path(&dark)]);
    assert_eq!(r.code, exit::OK, "{}", r.stderr);
    assert_eq!(r.stdout.lines().count(), 4);
    let bright = write_config(
        dir.path(),
        "b.toml",
        &format!("scheme = \"hyperspin\"\n[dark]\namplitudes = [[1, 0], [1, 0], [1, 0], [0, 0], [0, 0]]\n{TRIANGLE}"),
    );
    assert_eq!(cim(&["check-dark", "--config", path(&bright)]).code, exit::OK);
    assert_eq!(cim(&["check-dark", "--require-dark", "--config", path(&bright)]).code, exit::INFEASIBLE);
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "u.toml", &format!("sampels = 3\n{TRIANGLE}"));
    let r = cim(&["solve-exact", "--config", path(&unknown)]);
    assert_eq!(r.code, exit::USAGE);
    assert!(r.stderr.contains("sampels"));
    assert_eq!(cim(&["no-such-command"]).code, exit::USAGE);
    assert_eq!(cim(&["solve-exact"]).code, exit::USAGE);
    assert_eq!(cim(&["sweep", "--config", path(&dir.path().join("missing.toml"))]).code, exit::USAGE);
    let cfg = write_config(dir.path(), "m.toml", TRIANGLE);
    assert_eq!(cim(&["sweep", "--config", path(&cfg), "--workers", "0"]).code, exit::USAGE);
    assert_eq!(cim(&["--help"]).code, exit::OK);
}

#[test]
fn binary_reports_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q.toml", &format!("[quantum]\ncutoff = 4\ntrajectories = 1\n{TRIANGLE}"));
    let bin = env!("CARGO_BIN_EXE_cim");
    let st = Command::new(bin).args(["trajectory", "--config", path(&cfg)]).output().unwrap();
    assert_eq!(st.status.code(), Some(exit::INVALID_RUN));
    let st = Command::new(bin).arg("frobnicate").output().unwrap();
    assert_eq!(st.status.code(), Some(exit::USAGE));
}

proptest! {
    #[test]
    fn schedule_survives_the_config_round_trip(p in 0.0f64..10.0, tr in 0.0f64..100.0, th in 0.0f64..100.0, ramp in any::<bool>()) {
        let schedule = if ramp { PumpSchedule::LinearRampThenHold { p_max: p, t_ramp: tr, t_hold: th } } else { PumpSchedule::Constant { p } };
        let cfg = RunConfig { schedule: Some(schedule), seed: Some(3), ..RunConfig::default() };
        let text = toml::to_string(&cfg).unwrap();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
