//! Browser bindings. Each entry point takes the automaton text and returns
//! either a report or a JSON document for the page in `www/`.

use oca_core::oracle::{post_star, ExplorationBudget};
use oca_core::solver::{decide_full, evidence_to_text, SolverOptions, Verdict};
use oca_core::structure::Analysis;
use oca_core::{Configuration, Oca};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Point {
    state: String,
    value: i64,
}

#[derive(Serialize)]
struct Decision {
    verdict: &'static str,
    run: Vec<Point>,
    evidence: String,
}

#[derive(Serialize)]
struct Cell {
    state: usize,
    value: i64,
    valid: bool,
    reachable: bool,
    positive: bool,
    locally_bounded: bool,
}

#[derive(Serialize)]
struct Grid {
    states: Vec<String>,
    max_value: i64,
    cells: Vec<Cell>,
}

fn parse(text: &str) -> Result<Oca, String> {
    Oca::parse(text).map_err(|e| e.to_string())
}

fn config(a: &Oca, literal: &str) -> Result<Configuration, String> {
    a.parse_configuration(literal.trim()).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

pub fn analyze_report(text: &str) -> Result<String, String> {
    Ok(Analysis::new(&parse(text)?).report())
}

pub fn decide_json(text: &str, src: &str, trg: &str) -> Result<String, String> {
    let a = parse(text)?;
    let (s, t) = (config(&a, src)?, config(&a, trg)?);
    let opts = SolverOptions { cross_check: false, budget: ExplorationBudget { node_cap: 400_000, ..Default::default() } };
    let decision = match decide_full(&a, s, t, &opts) {
        Verdict::Reachable(run) => Decision {
            verdict: "reachable",
            run: run
                .configs
                .iter()
                .map(|c| Point { state: a.state_name(c.state).to_string(), value: c.value })
                .collect(),
            evidence: String::new(),
        },
        Verdict::Unreachable(ev) => {
            Decision { verdict: "unreachable", run: Vec::new(), evidence: evidence_to_text(&a, s, t, &ev) }
        }
        Verdict::ResourceExceeded(e) => Decision { verdict: "resource", run: Vec::new(), evidence: e.to_string() },
    };
    to_json(&decision)
}

/// Configurations with values up to `max_value`, marking those reached from
/// `src` without exceeding `max_value`.
pub fn reach_grid_json(text: &str, src: &str, max_value: i64) -> Result<String, String> {
    let a = parse(text)?;
    let s = config(&a, src)?;
    if !(0..=2_000).contains(&max_value) {
        return Err("max value must lie in 0..=2000".to_string());
    }
    let an = Analysis::new(&a);
    let budget = ExplorationBudget { value_cap: max_value, ..Default::default() };
    let ex = post_star(&a, &[s], &budget, None).map_err(|e| e.to_string())?;
    let mut cells = Vec::new();
    for q in a.states() {
        for value in 0..=max_value {
            let c = Configuration::new(q, value);
            let valid = a.is_valid(c);
            cells.push(Cell {
                state: q,
                value,
                valid,
                reachable: ex.contains(c),
                positive: valid && an.conf_plus_contains(c),
                locally_bounded: valid && an.is_locally_bounded(c),
            });
        }
    }
    to_json(&Grid { states: a.state_names().to_vec(), max_value, cells })
}

#[wasm_bindgen]
pub fn analyze(text: &str) -> Result<String, JsValue> {
    analyze_report(text).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn decide(text: &str, src: &str, trg: &str) -> Result<String, JsValue> {
    decide_json(text, src, trg).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn reach_grid(text: &str, src: &str, max_value: i32) -> Result<String, JsValue> {
    reach_grid_json(text, src, i64::from(max_value)).map_err(|e| JsValue::from_str(&e))
}
