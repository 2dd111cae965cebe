//! wasm-bindgen entry points for the browser demo. Inputs and outputs are
//! JSON strings so the page stays plain JavaScript.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use isolated_points::divergence::solve_velocity;
use isolated_points::dynamics::{train, TrainConfig};
use isolated_points::experiments::Scenario;
use isolated_points::stability::{classify_analytic, classify_collapsed, RegionSystem};
use isolated_points::KernelSpec;

fn js<E: std::fmt::Display>(e: E) -> JsError {
    JsError::new(&e.to_string())
}

/// The snake_case name an enum serializes to.
fn name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateRequest {
    seed: u64,
    kernel: KernelSpec,
    steps: usize,
    snapshot_every: usize,
    eta_d: f64,
    eta_g: f64,
    lambda: f64,
}

#[derive(Serialize)]
struct SimulateResponse {
    true_points: Vec<Vec<f64>>,
    /// `paths[j][s]` is generated point `j` at snapshot `s`.
    paths: Vec<Vec<Vec<f64>>>,
    steps: Vec<usize>,
    mmd2: Vec<f64>,
    w2: Vec<f64>,
    diverged_at: Option<usize>,
}

/// Trains on the four-point circle and returns the generated trajectories.
#[wasm_bindgen]
pub fn simulate(request: &str) -> Result<String, JsError> {
    let req: SimulateRequest = serde_json::from_str(request).map_err(js)?;
    let (p_r, p_g) = Scenario::Circle4D2.build(req.seed).map_err(js)?;
    let cfg = TrainConfig {
        eta_d: req.eta_d,
        eta_g: req.eta_g,
        lambda: req.lambda,
        steps: req.steps,
        snapshot_every: req.snapshot_every.max(1),
        ..TrainConfig::default()
    };
    let trace = train(&p_r, &p_g, &req.kernel, &cfg).map_err(js)?;
    let paths = (0..p_g.len())
        .map(|j| {
            trace
                .snapshots
                .iter()
                .map(|s| s.points[j].clone())
                .collect()
        })
        .collect();
    let resp = SimulateResponse {
        true_points: p_r.points().to_vec(),
        paths,
        steps: trace.metrics.iter().map(|m| m.step).collect(),
        mmd2: trace.metrics.iter().map(|m| m.mmd2).collect(),
        w2: trace.metrics.iter().map(|m| m.w2).collect(),
        diverged_at: trace.diverged_at,
    };
    serde_json::to_string(&resp).map_err(js)
}

#[derive(Serialize)]
struct StabilityResponse {
    analytic: String,
    condition: String,
    numeric: String,
    max_real_part: f64,
    eigenvalues: Vec<[f64; 2]>,
}

/// Classifies a region where all generated points sit on one true point.
#[wasm_bindgen]
pub fn classify_region(
    true_mass: f64,
    gen_masses: Vec<f64>,
    sigma: f64,
    lambda: f64,
    mu: f64,
) -> Result<String, JsError> {
    let sys = RegionSystem::new(
        vec![0.0, 0.0],
        true_mass,
        gen_masses,
        KernelSpec::exact(sigma),
        lambda,
        mu,
    )
    .map_err(js)?;
    let (verdict, condition) = classify_analytic(&sys).map_err(js)?;
    let report = classify_collapsed(&sys).map_err(js)?;
    let resp = StabilityResponse {
        analytic: name(&verdict),
        condition: name(&condition),
        numeric: name(&report.verdict),
        max_real_part: report.max_real_part,
        eigenvalues: report.eigenvalues,
    };
    serde_json::to_string(&resp).map_err(js)
}

/// Speed per step at which an isolated generated point of unit mass escapes
/// along a straight line, for an exact RBF discriminator.
#[wasm_bindgen]
pub fn escape_velocity(sigma: f64, eta_d: f64, eta_g: f64, lambda: f64) -> Result<f64, JsError> {
    let rho = 1.0 - eta_d * lambda;
    let (v, ..) = solve_velocity(rho, &KernelSpec::exact(sigma), eta_g, eta_d).map_err(js)?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulate_returns_paths() {
        let out = simulate(
            r#"{"seed":1,"kernel":{"variant":"rff","sigma":0.5,"features":50,"seed":2},
                "steps":20,"snapshot_every":10,"eta_d":0.001,"eta_g":0.001,"lambda":0.01}"#,
        )
        .map_err(|_| "simulate failed")
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["paths"].as_array().unwrap().len(), 4);
        assert_eq!(v["paths"][0].as_array().unwrap().len(), 3);
    }

    #[test]
    fn positive_excess_region_is_stable() {
        let out = classify_region(0.5, vec![0.2, 0.2], 1.0, 0.01, 1.0)
            .map_err(|_| "classify failed")
            .unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["analytic"], "stable");
        assert_eq!(v["numeric"], "stable");
        assert_eq!(v["condition"], "positive_excess");
    }

    #[test]
    fn escape_speed_is_near_the_small_lambda_limit() {
        let v = escape_velocity(1.0, 1e-3, 1e-3, 1e-3)
            .map_err(|_| "no root")
            .unwrap();
        assert!((v - 1e-3).abs() < 1e-5, "{v}");
    }
}
