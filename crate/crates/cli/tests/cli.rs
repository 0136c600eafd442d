use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use oca_core::harness::FuzzSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

const THREE_CYCLE: &str = "\
states: q r s
guard q != 5
guard r != 30
guard s != 15
trans q +2 r
trans r +1 s
trans s +2 q
";

const THREE_CYCLE_REPORT: &str = "\
scc 0: q r s
qplus q 5 0 [0 1 2]
qplus r 5 0 [1 2 0]
qplus s 5 0 [2 0 1]
chain q 0 5 0 false
chain q 1 5 inf false
chain q 2 5 12 false
chain q 3 5 28 false
chain q 4 5 inf false
chain q 5 5 5 true
chain q 10 5 inf false
chain q 17 5 inf false
chain q 33 5 inf false
chain r 0 5 25 false
chain r 1 5 inf false
chain r 2 5 2 false
chain r 3 5 inf false
chain r 4 5 14 false
chain r 7 5 inf false
chain r 19 5 inf false
chain r 30 5 30 true
chain r 35 5 inf false
chain s 0 5 10 false
chain s 1 5 26 false
chain s 2 5 inf false
chain s 3 5 3 false
chain s 4 5 inf false
chain s 8 5 inf false
chain s 15 5 15 true
chain s 20 5 inf false
chain s 31 5 inf false
";

fn oca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oca")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_matches_golden_report() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "cycle.oca", THREE_CYCLE);
    let first = oca(&["analyze", s(&f)]);
    assert_eq!(code(&first), 0);
    assert_eq!(stdout(&first), THREE_CYCLE_REPORT);
    assert_eq!(stdout(&oca(&["analyze", s(&f)])), THREE_CYCLE_REPORT);
}

#[test]
fn analyze_acyclic_has_no_positive_states() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "line.oca", "states: a b c\ntrans a +1 b\ntrans b -1 c\n");
    let out = stdout(&oca(&["analyze", s(&f)]));
    assert_eq!(out, "scc 0: a\nscc 1: b\nscc 2: c\n");
}

#[test]
fn unreachable_decision_emits_verifiable_witness() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "cycle.oca", THREE_CYCLE);
    let w = dir.path().join("w.txt");
    let out = oca(&["decide", s(&f), "--src", "q:0", "--trg", "q:10", "--emit", s(&w)]);
    assert_eq!(code(&out), 1);
    let text = fs::read_to_string(&w).unwrap();
    assert!(text.starts_with("witness\n"));
    assert_eq!(code(&oca(&["verify", s(&f), s(&w)])), 0);
    assert_eq!(code(&oca(&["verify", s(&f), s(&w), "--src", "q:0", "--trg", "q:10"])), 0);
    assert_eq!(code(&oca(&["verify", s(&f), s(&w), "--trg", "q:11"])), 2);

    // r:2 is the top of its chain; r:7 starts an unbounded one
    assert!(text.contains("I r 5 2 2 2\n"));
    let raised = write(&dir, "raised.txt", &text.replace("I r 5 2 2 2\n", "I r 5 2 2 7\n"));
    let out = oca(&["verify", s(&f), s(&raised)]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("locally unbounded"), "{}", stdout(&out));

    let truncated = write(&dir, "trunc.txt", &text[..text.len() / 2]);
    assert_ne!(code(&oca(&["verify", s(&f), s(&truncated)])), 0);
    let cut = write(&dir, "cut.txt", "witness\nsrc q:0\n");
    assert_eq!(code(&oca(&["verify", s(&f), s(&cut)])), 2);
}

#[test]
fn trivial_query_has_empty_run() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "cycle.oca", THREE_CYCLE);
    let r = dir.path().join("r.txt");
    let out = oca(&["decide", s(&f), "--src", "q:0", "--trg", "q:0", "--emit", s(&r)]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(&r).unwrap(), "run\nsrc q:0\ntrg q:0\npath\n");
    assert_eq!(code(&oca(&["verify", s(&f), s(&r)])), 0);
}

#[test]
fn reachable_decision_emits_replayable_run() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "cycle.oca", THREE_CYCLE);
    let r = dir.path().join("r.txt");
    assert_eq!(code(&oca(&["decide", s(&f), "--src", "q:1", "--trg", "q:41", "--emit", s(&r)])), 0);
    assert_eq!(code(&oca(&["verify", s(&f), s(&r)])), 0);
    let text = fs::read_to_string(&r).unwrap();
    let tampered = write(&dir, "t.txt", &text.replace("trg q:41", "trg q:46"));
    assert_eq!(code(&oca(&["verify", s(&f), s(&tampered)])), 1);
}

#[test]
fn malformed_inputs_exit_with_error() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.oca", "states: q\ntrans q +1 nowhere\n");
    let out = oca(&["decide", s(&bad), "--src", "q:0", "--trg", "q:1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere"));
    let f = write(&dir, "cycle.oca", THREE_CYCLE);
    assert_eq!(code(&oca(&["decide", s(&f), "--src", "x:0", "--trg", "q:1"])), 2);
    assert_eq!(code(&oca(&["decide", s(&f), "--src", "q:0"])), 2);
}

#[test]
fn pessimistic_certificate_round_trip() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "p.oca", "states: p q r\nguard q != 4\ntrans p +5 q\ntrans q -2 r\ntrans r +1 q\ntrans q -3 r\n");
    let c = dir.path().join("c.txt");
    let out = oca(&["pessimistic", s(&f), "--src", "p:3", "--trg", "r:0", "--emit", s(&c)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = fs::read_to_string(&c).unwrap();
    assert!(text.starts_with("certificate\n"));
    assert_eq!(code(&oca(&["verify", s(&f), s(&c)])), 0);
    let shifted = write(&dir, "s.txt", &text.replace("src p:3", "src p:4").replace("p:3 ", "p:4 "));
    assert_eq!(code(&oca(&["verify", s(&f), s(&shifted)])), 1);
    assert_eq!(code(&oca(&["pessimistic", s(&f), "--src", "p:3", "--trg", "r:7"])), 1);
}

#[test]
fn subset_sum_instances_decide_from_directives() {
    let dir = TempDir::new().unwrap();
    for (target, values, expected) in [("5", ["2", "3"], 0), ("5", ["2", "4"], 1), ("0", ["2", "4"], 0)] {
        let f = dir.path().join(format!("ss{target}{}.oca", values.join("")));
        let mut args = vec!["gen-subset-sum", target];
        args.extend(values);
        args.extend(["--emit", s(&f)]);
        assert_eq!(code(&oca(&args)), 0);
        assert_eq!(code(&oca(&["decide", s(&f)])), expected, "{target} {values:?}");
    }
}

#[test]
fn fuzz_reports_are_deterministic() {
    let args = ["fuzz", "--count", "60", "--seed", "5", "--states", "4", "--equality-rate", "0.3"];
    let a = oca(&args);
    let b = oca(&args);
    assert_eq!(code(&a), 0, "{}", stdout(&a));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).contains("disagreements 0"));
}

#[test]
fn every_emitted_evidence_verifies() {
    let dir = TempDir::new().unwrap();
    let spec = FuzzSpec { max_states: 4, equality_rate: 0.25, ..FuzzSpec::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for i in 0..30 {
        let inst = spec.generate(&mut rng);
        let f = write(&dir, &format!("i{i}.oca"), &inst.to_string());
        let e = dir.path().join(format!("e{i}.txt"));
        let decided = code(&oca(&["decide", s(&f), "--emit", s(&e)]));
        assert!(decided == 0 || decided == 1);
        assert_eq!(code(&oca(&["verify", s(&f), s(&e)])), 0, "{inst}");
    }
}
