use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rasched::corpus::{corpus, CorpusShape};
use rasched::reductions::formula::{random_formula, sat_brute_force, SatStarFormula};
use rasched_cli::files::InstanceFile;
use serde_json::Value;
use tempfile::TempDir;

fn rasched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rasched"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const RAI: &str = r#"{"format":"rai","machines":3,"jobs":[
  {"id":0,"size":5,"first":0,"last":1},
  {"id":1,"size":4,"first":1,"last":2},
  {"id":2,"size":3,"first":0,"last":2},
  {"id":3,"size":6,"first":2,"last":2}]}"#;

#[test]
fn solve_reports_schedule_and_checks() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "a.json", RAI);
    let out = rasched(&["solve", s(&inst)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["command"], "solve");
    assert_eq!(r["instance_digest"].as_str().unwrap().len(), 64);
    assert_eq!(r["schedule"].as_array().unwrap().len(), 4);
    assert!(r["t_star"].as_u64().unwrap() <= r["makespan"].as_u64().unwrap() * 2);
    assert!(r["lemma_checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert!(r["bound_L"].is_string());
}

#[test]
fn solve_batch_keeps_input_order() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let paths: Vec<PathBuf> = corpus(&CorpusShape::default(), 4, &mut rng)
        .iter()
        .enumerate()
        .map(|(x, inst)| write(&dir, &format!("{x}.json"), &InstanceFile::from_rai(inst).pretty()))
        .collect();
    let mut args = vec!["solve", "--jobs", "2"];
    args.extend(paths.iter().map(|p| s(p)));
    let batch = json(&rasched(&args));
    for (x, p) in paths.iter().enumerate() {
        assert_eq!(batch[x], json(&rasched(&["solve", s(p)])));
    }
}

#[test]
fn trace_is_optional() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "a.json", RAI);
    assert!(json(&rasched(&["solve", s(&inst)])).get("trace").is_none());
    assert!(json(&rasched(&["solve", "--trace", s(&inst)]))["trace"].is_array());
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "a.json", RAI);
    let bad = write(&dir, "bad.json", "{\"format\":\"rai\"");
    let holes = write(
        &dir,
        "holes.json",
        r#"{"format":"restricted","machines":3,"jobs":[{"id":0,"size":1,"eligible":[0,2]}]}"#,
    );
    let invalid = write(&dir, "invalid.json", r#"{"format":"rai","machines":2,"jobs":[{"id":0,"size":1,"first":1,"last":0}]}"#);
    assert_eq!(rasched(&["solve", s(&bad)]).status.code(), Some(1));
    assert_eq!(rasched(&["solve", "missing.json"]).status.code(), Some(1));
    assert_eq!(rasched(&["solve", s(&holes)]).status.code(), Some(2));
    assert_eq!(rasched(&["lff", s(&holes)]).status.code(), Some(2));
    assert_eq!(rasched(&["solve", s(&invalid)]).status.code(), Some(2));
    assert_eq!(rasched(&["solve", "--gamma", "1/8", s(&inst)]).status.code(), Some(3));
    assert_eq!(rasched(&["solve", "--xi", "0.1", s(&inst)]).status.code(), Some(3));
    let out = rasched(&["opt", s(&inst), "--budget", "1"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(json(&out)["status"], "budget_exhausted");
    let sched = write(&dir, "s.json", r#"{"schedule":[0,0,0,0]}"#);
    assert_eq!(rasched(&["verify", s(&inst), s(&sched), "--atmost", "100"]).status.code(), Some(6));
}

#[test]
fn opt_then_verify() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "a.json", RAI);
    let out = rasched(&["opt", s(&inst)]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    let opt = report["makespan"].as_u64().unwrap();
    assert_eq!(opt, 7);
    let saved = write(&dir, "opt.json", &String::from_utf8(out.stdout).unwrap());
    let t = opt.to_string();
    let below = (opt - 1).to_string();
    assert_eq!(rasched(&["verify", s(&inst), s(&saved), "--atmost", &t]).status.code(), Some(0));
    assert_eq!(rasched(&["verify", s(&inst), s(&saved), "--atmost", &below]).status.code(), Some(6));
    let minload = json(&rasched(&["opt", s(&inst), "--objective", "minload"]));
    assert_eq!(minload["min_load"], 5);
}

#[test]
fn verify_needs_one_target() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "a.json", RAI);
    let sched = write(&dir, "s.json", r#"{"schedule":[0,1,0,2]}"#);
    assert_eq!(rasched(&["verify", s(&inst), s(&sched)]).status.code(), Some(7));
    assert_eq!(
        rasched(&["verify", s(&inst), s(&sched), "--exact", "8", "--atmost", "8"]).status.code(),
        Some(7)
    );
}

#[test]
fn lff_load_stays_within_bound() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "a.json", RAI);
    let r = json(&rasched(&["lff", s(&inst)]));
    assert!(r["lemma_checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert_eq!(r["schedule"].as_array().unwrap().len(), 4);
}

#[test]
fn gen_writes_instance_names_and_witness() {
    let dir = TempDir::new().unwrap();
    let formula = write(&dir, "f.txt", &SatStarFormula::minimal().to_text());
    for kind in ["simple", "rar3", "rar2", "rai", "lrs3ra"] {
        let out = dir.path().join(format!("{kind}.json"));
        let witness = dir.path().join(format!("{kind}.witness.json"));
        let run = rasched(&["gen", "--reduction", kind, s(&formula), "--out", s(&out), "--witness", s(&witness)]);
        assert_eq!(run.status.code(), Some(0), "{kind}: {}", String::from_utf8_lossy(&run.stderr));
        let names: Value = serde_json::from_str(&fs::read_to_string(format!("{}.names.json", out.display())).unwrap()).unwrap();
        assert_eq!(names["reduction"], kind);
        let target = names["target_T"].as_u64().unwrap().to_string();
        let verified = rasched(&["verify", s(&out), s(&witness), "--exact", &target]);
        assert_eq!(verified.status.code(), Some(0), "{kind}");
    }
}

#[test]
fn gen_witness_of_unsatisfiable_formula_fails() {
    let dir = TempDir::new().unwrap();
    let f = (0..20_000u64)
        .map(|seed| random_formula(3, &mut ChaCha8Rng::seed_from_u64(seed)))
        .find(|f| matches!(sat_brute_force(f), Ok(None)))
        .expect("an unsatisfiable formula exists");
    let formula = write(&dir, "u.txt", &f.to_text());
    let out = dir.path().join("u.json");
    let witness = dir.path().join("w.json");
    let run = rasched(&["gen", "--reduction", "simple", s(&formula), "--out", s(&out), "--witness", s(&witness)]);
    assert_eq!(run.status.code(), Some(6));
    assert!(out.exists());
}

#[test]
fn malformed_formula_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let formula = write(&dir, "f.txt", "1: 1 2\n");
    let out = dir.path().join("g.json");
    assert_eq!(rasched(&["gen", "--reduction", "simple", s(&formula), "--out", s(&out)]).status.code(), Some(1));
    assert_eq!(rasched(&["lrs3-check", s(&formula)]).status.code(), Some(1));
}

#[test]
fn lrs3_check_rejects_bad_parameters() {
    let dir = TempDir::new().unwrap();
    let formula = write(&dir, "f.txt", &SatStarFormula::minimal().to_text());
    assert_eq!(rasched(&["lrs3-check", s(&formula), "--delta", "2"]).status.code(), Some(3));
    assert_eq!(rasched(&["lrs3-check", s(&formula), "--cap", "0"]).status.code(), Some(3));
}

#[test]
fn help_lists_exit_codes() {
    let out = rasched(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Exit codes"));
    assert!(text.contains("budget exhausted"));
}
