//! Browser bindings for the collapse explorer in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string, so the page
//! needs no generated TypeScript glue beyond `JSON.parse`. The `*_json`
//! functions are ordinary Rust and are what the tests exercise.

use bor_core::advisor::{self, CollapseDiagnostic, Recommendation};
use bor_core::evaluator::{query_baseline, report_from_aggregate, SuccessRule};
use bor_core::simulator::{boundary_map, log_grid, BoundaryRow};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn whole(name: &str, x: f64) -> Result<u64, String> {
    if x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x <= 2f64.powi(53) {
        Ok(x as u64)
    } else {
        Err(format!("{name} must be a non-negative integer, got {x}"))
    }
}

/// Ceilings and zones along a geometric grid of depths up to `k_max`.
pub fn boundary_json(n: f64, rq: f64, k_max: f64, points: u32) -> Result<String, String> {
    let n = whole("N", n)?;
    let k_max = whole("K max", k_max)?.min(n);
    let grid = log_grid(k_max, points as usize);
    let rows: Vec<BoundaryRow> = boundary_map(n, rq, &grid).map_err(|e| e.to_string())?;
    to_json(&rows)
}

#[derive(Serialize)]
struct Advice {
    diagnostic: CollapseDiagnostic,
    recommendation: Recommendation,
}

/// Diagnostic at one depth plus the largest depth still worth `min_bits`.
pub fn advise_json(n: f64, rq: f64, k: f64, min_bits: f64) -> Result<String, String> {
    let n = whole("N", n)?;
    let k = whole("K", k)?;
    let diagnostic = advisor::diagnose(n, rq, k).map_err(|e| e.to_string())?;
    let recommendation = advisor::recommend_k(n, rq, min_bits).map_err(|e| e.to_string())?;
    to_json(&Advice {
        diagnostic,
        recommendation,
    })
}

#[derive(Serialize)]
struct Calculation {
    bits: Option<f64>,
    enrichment: Option<f64>,
    baseline: f64,
    ceiling_bits: f64,
    bor_opt: f64,
}

/// BoR of a published success rate for queries with `rq` relevant items each.
pub fn calculator_json(p_obs: f64, n: f64, rq: f64, k: f64) -> Result<String, String> {
    let (n, rq, k) = (whole("N", n)?, whole("R", rq)?, whole("K", k)?);
    let rule = SuccessRule::coverage();
    let baseline = query_baseline(n, rq, k, rule).map_err(|e| e.to_string())?;
    let report = report_from_aggregate(p_obs, &[baseline], n, k, rule, false).map_err(|e| e.to_string())?;
    to_json(&Calculation {
        bits: report.bor.get(),
        enrichment: report.enrichment,
        baseline: baseline.value(),
        ceiling_bits: report.ceilings.bor_max_log_of_mean,
        bor_opt: report.ceilings.bor_opt,
    })
}

#[wasm_bindgen]
pub fn boundary(n: f64, rq: f64, k_max: f64, points: u32) -> Result<String, JsError> {
    boundary_json(n, rq, k_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn advise(n: f64, rq: f64, k: f64, min_bits: f64) -> Result<String, JsError> {
    advise_json(n, rq, k, min_bits).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn calculator(p_obs: f64, n: f64, rq: f64, k: f64) -> Result<String, JsError> {
    calculator_json(p_obs, n, rq, k).map_err(|e| JsError::new(&e))
}
