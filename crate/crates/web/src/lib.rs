//! Browser bindings. Every function takes and returns JSON strings so the
//! page needs no generated TypeScript types.
//!
//! The `*_json` functions are plain Rust and are what the tests exercise;
//! the `#[wasm_bindgen]` wrappers only convert errors into JS exceptions.

use serde::Serialize;
use sphp::format::read_model;
use sphp::simulator::{
    predict_expected_count, random_static, random_track, simulate_sequence, Conditioning,
    FeatureGeneratorConfig, ThinningConfig,
};
use sphp::{seeds, HawkesModel};
use wasm_bindgen::prelude::*;

/// Subject id used for every demo sequence.
const DEMO_SUBJECT: &str = "demo";

/// Accepts a fitted model file or a bare `{ "params", "basis" }` document.
fn parse_model(model_json: &str) -> Result<HawkesModel, String> {
    if model_json.contains("\"format\"") {
        let (report, _) = read_model(model_json.as_bytes()).map_err(|e| format!("model: {e}"))?;
        return Ok(report.model());
    }
    let m: HawkesModel = serde_json::from_str(model_json).map_err(|e| format!("model: {e}"))?;
    HawkesModel::new(m.params, m.basis).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Browser-sized thinning limits, so a bad model cannot freeze the tab.
fn demo_thinning() -> ThinningConfig {
    ThinningConfig { max_events: 20_000, ..ThinningConfig::default() }
}

#[derive(Serialize)]
struct Curve {
    dt: Vec<f64>,
    phi: Vec<f64>,
    branching_ratio: f64,
}

/// Samples the impact function φ on `points` evenly spaced lags in `[0, support]`.
pub fn impact_curve_json(model_json: &str, points: usize) -> Result<String, String> {
    let model = parse_model(model_json)?;
    if points < 2 {
        return Err("need at least 2 points".into());
    }
    let support = model.basis.support();
    let dt: Vec<f64> = (0..points).map(|i| support * i as f64 / (points - 1) as f64).collect();
    let phi = dt
        .iter()
        .map(|&x| sphp::model::impact_phi(x, &model.basis, &model.params.a))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    to_json(&Curve { dt, phi, branching_ratio: model.params.branching_ratio(&model.basis) })
}

#[derive(Serialize)]
struct Simulated {
    events: Vec<f64>,
    horizon: f64,
    static_features: Vec<f64>,
}

/// Simulates one sequence on `[0, horizon)` under randomly drawn features.
pub fn simulate_json(model_json: &str, horizon: f64, seed: u64) -> Result<String, String> {
    let model = parse_model(model_json)?;
    let mut rng = seeds::rng(seed, "web-features", 0);
    let statics = random_static(&mut rng);
    let track = random_track(&FeatureGeneratorConfig::default(), horizon, &mut rng).map_err(|e| e.to_string())?;
    let seq = simulate_sequence(&model, DEMO_SUBJECT, &statics, &track, horizon, seed, &demo_thinning())
        .map_err(|e| e.to_string())?;
    to_json(&Simulated { events: seq.events().to_vec(), horizon, static_features: statics.as_slice().to_vec() })
}

/// Expected event count in `[t0, t0 + window_hours)` given past events,
/// with features frozen at a random draw.
pub fn predict_json(
    model_json: &str,
    history_json: &str,
    t0: f64,
    window_hours: f64,
    trials: usize,
    seed: u64,
) -> Result<String, String> {
    let model = parse_model(model_json)?;
    let mut history: Vec<f64> = serde_json::from_str(history_json).map_err(|e| format!("history: {e}"))?;
    history.retain(|&t| t < t0);
    history.sort_by(f64::total_cmp);
    history.dedup();
    let mut rng = seeds::rng(seed, "web-features", 0);
    let statics = random_static(&mut rng);
    let track = random_track(&FeatureGeneratorConfig::default(), t0 + 1.0, &mut rng).map_err(|e| e.to_string())?;
    let frozen = *track.value_at(t0).map_err(|e| e.to_string())?;
    let cond = Conditioning { subject_id: DEMO_SUBJECT.into(), history, t0, static_features: statics, frozen };
    let result = predict_expected_count(&model, &cond, window_hours, trials, &demo_thinning(), seed)
        .map_err(|e| e.to_string())?;
    to_json(&result)
}

#[wasm_bindgen(js_name = impactCurve)]
pub fn impact_curve(model_json: &str, points: usize) -> Result<String, JsError> {
    impact_curve_json(model_json, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(model_json: &str, horizon: f64, seed: u64) -> Result<String, JsError> {
    simulate_json(model_json, horizon, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn predict(
    model_json: &str,
    history_json: &str,
    t0: f64,
    window_hours: f64,
    trials: usize,
    seed: u64,
) -> Result<String, JsError> {
    predict_json(model_json, history_json, t0, window_hours, trials, seed).map_err(|e| JsError::new(&e))
}
