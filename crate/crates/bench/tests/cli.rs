//! End-to-end tests of the `tsd-bench` binary: exit codes, file outputs,
//! and byte-level determinism of rerun CSVs.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tsd-bench"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should launch")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tsd-bench-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn run_writes_deterministic_summary_and_aggregate() {
    let dir = temp_dir("run");
    let out = dir.join("runs.csv");
    let args = [
        "run",
        "--set",
        "1,2",
        "--n",
        "40",
        "--kappa",
        "1e2",
        "--eps",
        "1e-8",
        "--method",
        "tsd,sd,bb1",
        "--j",
        "5",
        "--seed",
        "7",
        "--starts",
        "2",
        "--max-iter",
        "50000",
        "--out",
        out.to_str().unwrap(),
    ];
    let first = run(&args);
    assert!(first.status.success(), "{:?}", first);
    let summary1 = std::fs::read_to_string(&out).unwrap();
    let aggregate1 = std::fs::read_to_string(dir.join("runs_aggregate.csv")).unwrap();
    assert!(summary1.starts_with('#'));
    assert!(summary1.contains("method,j_or_m,set_id,n,kappa,seed,eps_kind,eps,status"));
    // 2 sets x 2 starts x 3 methods = 12 data rows
    let rows = summary1.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 12);
    assert!(aggregate1.contains("mean_iters"));

    let second = run(&args);
    assert!(second.status.success());
    let summary2 = std::fs::read_to_string(&out).unwrap();
    let strip = |s: &str| {
        s.lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&summary1), strip(&summary2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn run_from_plan_file_with_flag_override() {
    let dir = temp_dir("plan");
    let plan_path = dir.join("plan.json");
    std::fs::write(
        &plan_path,
        r#"{
            "set_ids": [1],
            "dims": [10],
            "kappas": [50.0],
            "problem_seeds": [3],
            "methods": ["sd"],
            "eps": [1e-6],
            "starts": 1
        }"#,
    )
    .unwrap();
    let out = run(&[
        "run",
        "--plan",
        plan_path.to_str().unwrap(),
        "--method",
        "csd",
        "--m",
        "2",
    ]);
    assert!(out.status.success(), "{:?}", out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\ncsd,2,"));
    assert!(!text.contains("\nsd,"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn gen_problem_round_trips_through_json() {
    let out = run(&[
        "gen-problem",
        "--set",
        "4",
        "--n",
        "12",
        "--kappa",
        "1e3",
        "--seed",
        "99",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let (spec, problem) = tsd_core::quadprob::problem_from_json(&text).unwrap();
    assert_eq!(spec.set_id, 4);
    assert_eq!(spec.n, 12);
    let regenerated: tsd_core::QuadraticProblem64 =
        tsd_core::quadprob::generate_problem(&spec).unwrap();
    assert_eq!(problem.minimizer(), regenerated.minimizer());
    let again = run(&[
        "gen-problem", "--set", "4", "--n", "12", "--kappa", "1e3", "--seed", "99",
    ]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn general_subcommand_writes_record_and_trajectory() {
    let dir = temp_dir("general");
    let record = dir.join("rec.json");
    let traj = dir.join("traj.csv");
    let out = run(&[
        "general",
        "--objective",
        "rosenbrock2d",
        "--method",
        "tsd",
        "--j",
        "10",
        "--out",
        record.to_str().unwrap(),
        "--trajectory",
        traj.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{:?}", out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Converged"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&record).unwrap()).unwrap();
    assert_eq!(json["problem"]["label"], "rosenbrock2d");
    let traj_text = std::fs::read_to_string(&traj).unwrap();
    assert!(traj_text.starts_with("k,f,log10_gnorm2"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn usage_errors_exit_with_code_two() {
    for args in [
        vec!["verify", "nope"],
        vec!["run", "--set", "9", "--n", "10", "--kappa", "1e2", "--eps", "1e-6", "--method", "sd", "--seed", "1"],
        vec!["run", "--set", "1", "--n", "10", "--kappa", "1e2", "--eps", "1e-6", "--method", "newton", "--seed", "1"],
        vec!["general", "--objective", "unknown"],
        vec!["general", "--objective", "rosenbrock2d", "--method", "cabb"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}: {out:?}");
    }
}

#[test]
fn io_errors_exit_with_code_three() {
    let out = run(&[
        "gen-problem",
        "--set",
        "1",
        "--n",
        "4",
        "--kappa",
        "10",
        "--seed",
        "1",
        "--out",
        "/nonexistent-dir/problem.json",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let missing_plan = run(&["run", "--plan", "/nonexistent-dir/plan.json"]);
    assert_eq!(missing_plan.status.code(), Some(3));
}

#[test]
fn verify_reports_criterion_lines() {
    let out = run(&["verify", "baselines"]);
    assert!(out.status.success(), "{:?}", out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("A9 baselines: PASS"));
}
