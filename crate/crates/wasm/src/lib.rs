//! Browser bindings. Every function takes and returns JSON strings so the
//! page needs no generated TypeScript types.

use mess_restore::mip::MipSettings;
use mess_restore::oracle::{check_feasibility, numeric_cone_projection};
use mess_restore::report::{self, to_json_9};
use mess_restore::scenario::validate;
use mess_restore::socp::project_rotated_cone;
use mess_restore::{compile, instances, Scenario};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Built-in scenario as pretty JSON: `"desk"`, `"tiny"` or `"table1"`.
#[wasm_bindgen]
pub fn builtin_scenario(name: &str, seed: u32) -> Result<String, JsValue> {
    let scenario = match name {
        "desk" => instances::desk(),
        "tiny" => instances::tiny(u64::from(seed)),
        "table1" => instances::table1(u64::from(seed)),
        other => return Err(js_err(format!("unknown instance {other}"))),
    };
    Ok(scenario.to_json_pretty())
}

/// Validation report and, when it passes, the size of the compiled program.
#[wasm_bindgen]
pub fn validate_scenario(text: &str) -> Result<String, JsValue> {
    let scenario = Scenario::from_json(text).map_err(js_err)?;
    let report = validate(&scenario);
    let issues: Vec<_> = report
        .violations
        .iter()
        .map(|v| json!({ "field": v.field, "message": v.message }))
        .collect();
    let counts = if report.is_pass() {
        let c = compile(&scenario).map_err(js_err)?.counts;
        Some(json!({
            "columns": c.columns,
            "equalities": c.equalities,
            "inequalities": c.inequalities,
            "cones": c.cones,
            "binaries": c.binaries,
            "integers": c.integers,
            "trip_slots": c.trip_slots,
        }))
    } else {
        None
    };
    Ok(json!({ "name": scenario.name, "pass": report.is_pass(), "violations": issues, "model": counts }).to_string())
}

/// Routed against static solve of a scenario, with the oracle verdict on
/// both plans and the per-step pairs.
#[wasm_bindgen]
pub fn compare_scenario(text: &str, node_limit: u32) -> Result<String, JsValue> {
    let scenario = Scenario::from_json(text).map_err(js_err)?.validated().map_err(js_err)?;
    let settings = MipSettings {
        node_limit: node_limit.max(1) as usize,
        workers: 1,
        ..MipSettings::default()
    };
    let (routed, stat, comparison) = report::compare(&scenario, &settings).map_err(js_err)?;
    let verdict = |o: &report::SolveOutcome| {
        o.plan
            .as_ref()
            .map(|p| check_feasibility(&scenario, p, 1e-6).max_violation())
    };
    let trips = routed.plan.as_ref().map(|p| p.trips.clone()).unwrap_or_default();
    let out = json!({
        "comparison": comparison,
        "trips": trips,
        "oracle_worst": { "routed": verdict(&routed), "static": verdict(&stat) },
    });
    Ok(to_json_9(&out))
}

/// Closed-form projection of `(u, v, w1, w2)` onto the rotated cone next to
/// the search-based one.
#[wasm_bindgen]
pub fn project_point(u: f64, v: f64, w1: f64, w2: f64) -> String {
    let closed = project_rotated_cone(u, v, w1, w2);
    let numeric = numeric_cone_projection([u, v, w1, w2]);
    let gap = closed
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    json!({ "closed_form": closed, "numeric": numeric, "distance": gap }).to_string()
}
