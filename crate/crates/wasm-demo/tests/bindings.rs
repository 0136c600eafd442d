use oca_wasm::{analyze_report, decide_json, reach_grid_json};
use serde_json::Value;

const THREE_CYCLE: &str = "states: q r s\nguard q != 5\nguard r != 30\nguard s != 15\ntrans q +2 r\ntrans r +1 s\ntrans s +2 q\n";

#[test]
fn analyze_lists_chains() {
    let report = analyze_report(THREE_CYCLE).unwrap();
    assert!(report.starts_with("scc 0: q r s\n"));
    assert!(report.contains("chain q 3 5 28 false\n"));
    assert!(analyze_report("states q").is_err());
}

#[test]
fn decide_reports_run_or_evidence() {
    let v: Value = serde_json::from_str(&decide_json(THREE_CYCLE, "q:1", "s:4").unwrap()).unwrap();
    assert_eq!(v["verdict"], "reachable");
    let run = v["run"].as_array().unwrap();
    assert_eq!(run.first().unwrap()["value"], 1);
    assert_eq!(run.last().unwrap()["state"], "s");

    let v: Value = serde_json::from_str(&decide_json(THREE_CYCLE, "q:0", "q:10").unwrap()).unwrap();
    assert_eq!(v["verdict"], "unreachable");
    assert!(v["evidence"].as_str().unwrap().starts_with("witness\n"));
    assert!(decide_json(THREE_CYCLE, "x:0", "q:1").is_err());
}

#[test]
fn grid_marks_reachable_cells() {
    let v: Value = serde_json::from_str(&reach_grid_json(THREE_CYCLE, "q:0", 12).unwrap()).unwrap();
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 3 * 13);
    let at = |state: u64, value: i64| {
        cells.iter().find(|c| c["state"] == state && c["value"] == value).unwrap()["reachable"].as_bool().unwrap()
    };
    assert!(at(0, 0) && at(1, 2) && at(2, 3));
    assert!(!at(0, 5) && !at(0, 10));
    assert!(reach_grid_json(THREE_CYCLE, "q:0", 5000).is_err());
}
