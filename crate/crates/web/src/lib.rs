//! Browser bindings: success curves, homodyne outcome densities and single
//! protocol runs, each returned as a JSON string.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use rio_core::report::{sweep, SweepAxis};
use rio_core::{
    run_riho, run_ripuo, ChannelVariant, ForcedOutcomes, HomodyneModel, LumpOperator, ProtocolKind, QubitState, C64,
};

#[derive(Serialize)]
struct CurvePoint {
    x: f64,
    p1suc: f64,
    p2suc: f64,
    warning: bool,
}

pub fn success_curve_json(
    axis: &str,
    from: f64,
    to: f64,
    steps: usize,
    z: f64,
    theta: f64,
    d: f64,
) -> Result<String, String> {
    let axis = axis.parse::<SweepAxis>().map_err(|e| e.to_string())?;
    let base = HomodyneModel::new(z, theta, d).map_err(|e| e.to_string())?;
    let rows = sweep(&base, axis, from, to, steps).map_err(|e| e.to_string())?;
    let points: Vec<CurvePoint> = rows
        .iter()
        .map(|r| CurvePoint {
            x: r.value,
            p1suc: r.probabilities.p1suc,
            p2suc: r.probabilities.p2suc,
            warning: r.probabilities.warning,
        })
        .collect();
    serde_json::to_string(&points).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Curve {
    label: i32,
    mean: f64,
    density: Vec<f64>,
}

#[derive(Serialize)]
struct Mixture {
    x: Vec<f64>,
    curves: Vec<Curve>,
    errors: [f64; 4],
    warning: bool,
}

/// Outcome densities of the four step-4 probe labels, plus `P¹, P³¹, P³², P³³`.
pub fn homodyne_mixture_json(z: f64, theta: f64, d: f64, points: usize) -> Result<String, String> {
    let model = HomodyneModel::new(z, theta, d).map_err(|e| e.to_string())?;
    let points = points.clamp(2, 4000);
    let span = 2.0 * model.effective_amplitude() + 4.0;
    let x: Vec<f64> = (0..points).map(|i| -span + 2.0 * span * i as f64 / (points - 1) as f64).collect();
    let curves = (0..4)
        .map(|n| Curve {
            label: n,
            mean: model.gaussian_mean(n),
            density: x.iter().map(|&x| model.density(n, x)).collect(),
        })
        .collect();
    let (p31, p32, p33) = model.step4_error_triple();
    let mixture = Mixture {
        x,
        curves,
        errors: [model.pairwise_error(0, 1), p31, p32, p33],
        warning: model.distinguishability_warning(),
    };
    serde_json::to_string(&mixture).map_err(|e| e.to_string())
}

#[allow(clippy::too_many_arguments)]
pub fn run_protocol_json(
    protocol: &str,
    channel: &str,
    alpha_re: f64,
    alpha_im: f64,
    beta_re: f64,
    beta_im: f64,
    u_phase: f64,
    v_phase: f64,
    m: u8,
    z: f64,
    theta: f64,
    d: f64,
    seed: u64,
    force: &str,
) -> Result<String, String> {
    let kind = protocol.parse::<ProtocolKind>().map_err(|e| e.to_string())?;
    let channel = channel.parse::<ChannelVariant>().map_err(|e| e.to_string())?;
    let model = HomodyneModel::new(z, theta, d).map_err(|e| e.to_string())?;
    let (a, b) = (C64::new(alpha_re, alpha_im), C64::new(beta_re, beta_im));
    let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if norm == 0.0 {
        return Err("input state must be non-zero".into());
    }
    let psi = QubitState::new(a / norm, b / norm).map_err(|e| e.to_string())?;
    let forced = force.parse::<ForcedOutcomes>().map_err(|e| e.to_string())?;
    let lump = LumpOperator::from_phases(u_phase, v_phase);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let result = match kind {
        ProtocolKind::Riho => run_riho(&psi, &lump, channel, &model, &mut rng, &forced),
        ProtocolKind::Ripuo => run_ripuo(&psi, &lump.sub_operator(m & 1), m & 1, channel, &model, &mut rng, &forced),
    }
    .map_err(|e| e.to_string())?;
    serde_json::to_string(&serde_json::json!({
        "succeeded": result.succeeded(),
        "fidelity": result.achieved_fidelity,
        "outcomes": result.outcomes,
        "classical_log": result.classical_log,
        "corrections": result.corrections_applied,
        "trace": result.trace,
    }))
    .map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn success_curve(
    axis: &str,
    from: f64,
    to: f64,
    steps: usize,
    z: f64,
    theta: f64,
    d: f64,
) -> Result<String, JsError> {
    success_curve_json(axis, from, to, steps, z, theta, d).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn homodyne_mixture(z: f64, theta: f64, d: f64, points: usize) -> Result<String, JsError> {
    homodyne_mixture_json(z, theta, d, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn run_protocol(
    protocol: &str,
    channel: &str,
    alpha_re: f64,
    alpha_im: f64,
    beta_re: f64,
    beta_im: f64,
    u_phase: f64,
    v_phase: f64,
    m: u8,
    z: f64,
    theta: f64,
    d: f64,
    seed: u64,
    force: &str,
) -> Result<String, JsError> {
    run_protocol_json(
        protocol, channel, alpha_re, alpha_im, beta_re, beta_im, u_phase, v_phase, m, z, theta, d, seed, force,
    )
    .map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn curve_endpoints() {
        let v: Value =
            serde_json::from_str(&success_curve_json("D", 0.0, 1.0, 3, 1.0, std::f64::consts::PI, 1.0).unwrap())
                .unwrap();
        assert_eq!(v[0]["p1suc"], 0.625);
        assert!((v[2]["p2suc"].as_f64().unwrap() - 0.976732).abs() < 1e-6);
        assert!(success_curve_json("q", 0.0, 1.0, 3, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn mixture_shape() {
        let v: Value = serde_json::from_str(&homodyne_mixture_json(2.0, 0.5, 1.0, 50).unwrap()).unwrap();
        assert_eq!(v["x"].as_array().unwrap().len(), 50);
        assert_eq!(v["curves"].as_array().unwrap().len(), 4);
        assert_eq!(v["curves"][0]["mean"], 4.0);
        assert!(homodyne_mixture_json(0.0, 0.5, 1.0, 50).is_err());
    }

    #[test]
    fn forced_run() {
        let text =
            run_protocol_json("ripuo", "pi-", 0.6, 0.0, 0.0, 0.8, 0.3, 1.2, 1, 2.0, 0.6, 1.0, 7, "k=1,pq=10").unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["succeeded"], true);
        assert_eq!(v["outcomes"]["m"], 1);
        assert!(run_protocol_json("riho", "omega", 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 2.0, 0.6, 1.0, 0, "").is_err());
    }
}
