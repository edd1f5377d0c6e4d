//! Browser bindings: each export returns a JSON string for the page in `www/`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use qkd_core::baseline::bb84_run;
use qkd_core::metrics::evaluate;
use qkd_core::noise::{build_channel, ChannelKind, KrausChannel};
use qkd_core::qrl::{decode, encode, learn, LearnerConfig, QrlVersion};
use qkd_core::state::Readout;

fn channel(kind: &str, strength: f64) -> Result<Option<KrausChannel>, JsError> {
    if kind.is_empty() || kind == "none" {
        return Ok(None);
    }
    let kind: ChannelKind = kind
        .parse()
        .map_err(|e: qkd_core::Error| JsError::new(&e.to_string()))?;
    build_channel(kind, strength)
        .map(Some)
        .map_err(|e| JsError::new(&e.to_string()))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(|e| JsError::new(&e.to_string()))
}

#[derive(Serialize)]
struct Fringe {
    delta: Vec<f64>,
    p0: Vec<f64>,
    p1: Vec<f64>,
}

/// Outcome probabilities of the phase-encoding circuit as the phase gap sweeps `[0, 2pi]`.
#[wasm_bindgen]
pub fn fringe(kind: &str, strength: f64, points: usize) -> Result<String, JsError> {
    let ch = channel(kind, strength)?;
    let points = points.max(2);
    let mut out = Fringe {
        delta: Vec::with_capacity(points),
        p0: Vec::with_capacity(points),
        p1: Vec::with_capacity(points),
    };
    for i in 0..points {
        let delta = 2.0 * std::f64::consts::PI * i as f64 / (points - 1) as f64;
        let dist = decode(&encode(0, delta, ch.as_ref()), 0.0).probabilities();
        out.delta.push(delta);
        out.p0.push(dist.p(0));
        out.p1.push(dist.p(1));
    }
    to_json(&out)
}

/// Episode-by-episode interval of the phase learner for one secret phase.
#[wasm_bindgen]
pub fn learner_trajectory(
    version: &str,
    bit: u8,
    theta1: f64,
    kind: &str,
    strength: f64,
    seed: u64,
) -> Result<String, JsError> {
    let version: QrlVersion = version
        .parse()
        .map_err(|e: qkd_core::Error| JsError::new(&e.to_string()))?;
    let ch = channel(kind, strength)?;
    let config = LearnerConfig::for_version(version);
    let run = learn(version, bit.min(1), theta1, ch.as_ref(), &config, seed)
        .map_err(|e| JsError::new(&e.to_string()))?;
    to_json(&run)
}

#[derive(Serialize)]
struct SweepPoint {
    strength: f64,
    accuracy_raw: f64,
    accuracy_key: Option<f64>,
    qber_sifted: Option<f64>,
    sift_fraction: f64,
}

/// BB84 accuracy and QBER across channel strengths `0, 1/steps, ..., 1`.
#[wasm_bindgen]
pub fn bb84_sweep(
    kind: &str,
    steps: usize,
    bits: usize,
    eve: bool,
    seed: u64,
) -> Result<String, JsError> {
    let steps = steps.max(1);
    let mut points = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let strength = i as f64 / steps as f64;
        let ch = channel(kind, strength)?;
        let t = bb84_run(
            bits,
            ch.as_ref(),
            eve,
            Readout::default(),
            seed.wrapping_add(i as u64),
        )
        .map_err(|e| JsError::new(&e.to_string()))?;
        let m = evaluate(&t).map_err(|e| JsError::new(&e.to_string()))?;
        points.push(SweepPoint {
            strength,
            accuracy_raw: m.raw.scalars.accuracy,
            accuracy_key: m.key.as_ref().map(|k| k.scalars.accuracy),
            qber_sifted: m.qber_sifted,
            sift_fraction: m.sift_fraction,
        });
    }
    to_json(&points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fringe_is_a_cosine() {
        let v: serde_json::Value = serde_json::from_str(&fringe("none", 0.0, 5).unwrap()).unwrap();
        let p0: Vec<f64> = serde_json::from_value(v["p0"].clone()).unwrap();
        assert!((p0[0] - 1.0).abs() < 1e-12);
        assert!(p0[2].abs() < 1e-12);
        assert!((p0[4] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trajectory_converges() {
        let v: serde_json::Value =
            serde_json::from_str(&learner_trajectory("v1", 1, 0.8, "none", 0.0, 3).unwrap())
                .unwrap();
        assert!((v["theta2_final"].as_f64().unwrap() - 0.8).abs() < 0.01);
        assert!(v["episode_log"]["records"].as_array().unwrap().len() > 1);
    }

    #[test]
    fn sweep_has_one_point_per_step() {
        let v: serde_json::Value =
            serde_json::from_str(&bb84_sweep("depolarizing", 4, 64, false, 1).unwrap()).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 5);
    }
}
