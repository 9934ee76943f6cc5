//! Browser bindings for the region-map demo in `www/`.
//!
//! Every export takes and returns JSON strings so the page needs no glue
//! beyond `JSON.parse`.

use serde_json::json;
use wasm_bindgen::prelude::*;
use wardrop_kit::diagnostics::{region_sweep, SweepPlan};
use wardrop_kit::singleton::break_points;
use wardrop_kit::solver::solve_mes;
use wardrop_kit::{fixtures, CongestionGame, DemandVector, SolverConfig};

type Res = Result<String, String>;

fn js(r: Res) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

fn parse_game(text: &str) -> Result<CongestionGame, String> {
    CongestionGame::from_json(text).map_err(|e| e.to_string())
}

/// Source of a bundled fixture (`ex41`, `ex45`, `fisk`, ...).
#[wasm_bindgen]
pub fn fixture(name: &str) -> Result<String, JsValue> {
    js(fixtures::by_name(name).map(str::to_owned).ok_or_else(|| format!("no fixture {name:?}")))
}

/// Classifies an `n × n` grid over `[lo, hi]²` for a two-commodity
/// singleton game. Samples are `[mu_1, mu_2, order_id, regime_id]`,
/// first commodity slowest.
#[wasm_bindgen]
pub fn region_map(game: &str, lo: f64, hi: f64, n: usize) -> Result<String, JsValue> {
    js(region_map_impl(game, lo, hi, n))
}

fn region_map_impl(game: &str, lo: f64, hi: f64, n: usize) -> Res {
    let g = parse_game(game)?;
    if g.num_commodities() != 2 {
        return Err("the region map needs exactly two commodities".into());
    }
    if !(2..=200).contains(&n) {
        return Err("grid size must be between 2 and 200".into());
    }
    let plan = SweepPlan::uniform(vec![(lo, hi); 2], n).map_err(|e| e.to_string())?;
    let map = region_sweep(&g, &plan, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let samples: Vec<_> = map
        .samples
        .iter()
        .map(|s| json!([s.demand[0], s.demand[1], s.order_id, s.regime_id]))
        .collect();
    let doc = json!({
        "commodities": map.commodity_ids,
        "order_labels": map.order_labels,
        "regime_labels": map.regime_labels,
        "failures": map.failures.len(),
        "samples": samples,
    });
    Ok(doc.to_string())
}

/// Break points of the water-filling curve over the union of the listed
/// commodities' resources.
#[wasm_bindgen]
pub fn class_break_points(game: &str, class: &str) -> Result<String, JsValue> {
    js(break_points_impl(game, class))
}

fn break_points_impl(game: &str, class: &str) -> Res {
    let g = parse_game(game)?;
    let mut rs = Vec::new();
    for id in class.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let h = g.commodity_index(id).ok_or_else(|| format!("unknown commodity {id:?}"))?;
        rs.extend(g.feasible_resources(h));
    }
    rs.sort_unstable();
    rs.dedup();
    let resources: Vec<_> = rs.iter().map(|&r| g.resources()[r].clone()).collect();
    let bp = break_points(&resources).map_err(|e| e.to_string())?;
    Ok(json!(bp).to_string())
}

/// Monotone equilibrium at one demand: loads, costs and active regime.
#[wasm_bindgen]
pub fn solve(game: &str, demand: &str) -> Result<String, JsValue> {
    js(solve_impl(game, demand))
}

fn solve_impl(game: &str, demand: &str) -> Res {
    let g = parse_game(game)?;
    let values = demand
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("not a number: {s:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    let mu = DemandVector::new(values).map_err(|e| e.to_string())?;
    let r = solve_mes(&g, &mu, &SolverConfig::default()).map_err(|e| e.to_string())?;
    Ok(r.to_json_value(&g).to_string())
}
