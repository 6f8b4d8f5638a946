//! Browser bindings: sample small ensembles client side and hand the page
//! plain JSON it can draw. Parameters arrive as the same JSON object the CLI
//! config uses for `params`; coordinates are 0-based.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use minorspec::cayley::{cayley, eigen_angles};
use minorspec::limits::{norm_bound, sigma_limit};
use minorspec::params::{ErgodicParams, RawParams};
use minorspec::sampler::CoupledSample;
use minorspec::spectral::{eig_hermitian, sigma_measure};

/// Dense decompositions stay interactive in the browser up to here.
pub const MAX_DEMO_N: usize = 192;

fn parse(config: &str, n: usize) -> Result<(ErgodicParams, usize), String> {
    let raw: RawParams = serde_json::from_str(config).map_err(|e| e.to_string())?;
    let params = ErgodicParams::validate(&raw).map_err(|e| e.to_string())?;
    if n == 0 {
        return Err("n must be positive".into());
    }
    Ok((params, n.min(MAX_DEMO_N)))
}

#[derive(Serialize)]
struct SpectrumOut {
    n: usize,
    scaled: Vec<f64>,
    limit_points: Vec<f64>,
    gamma1: f64,
    bound: f64,
}

fn spectrum_impl(config: &str, n: usize, seed: u64) -> Result<String, String> {
    let (params, n) = parse(config, n)?;
    let sample = CoupledSample::new(params.clone(), seed);
    let dec = eig_hermitian(&sample.minor(n)).map_err(|e| e.to_string())?;
    let scaled = dec.eigenvalues().iter().map(|l| l / n as f64).collect();
    let out = SpectrumOut {
        n,
        scaled,
        limit_points: params.points().to_vec(),
        gamma1: params.gamma1(),
        bound: norm_bound(&params),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Atom {
    x: f64,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct SigmaOut {
    n: usize,
    a: usize,
    b: usize,
    empirical: Vec<Atom>,
    limit: Vec<Atom>,
}

fn atoms_of(measure: &minorspec::spectral::AtomicMeasure) -> Vec<Atom> {
    measure
        .atoms()
        .iter()
        .map(|&(x, w)| Atom {
            x,
            re: w.re,
            im: w.im,
        })
        .collect()
}

fn sigma_impl(config: &str, n: usize, seed: u64, a: usize, b: usize) -> Result<String, String> {
    let (params, n) = parse(config, n)?;
    if a >= n || b >= n {
        return Err(format!("coordinates ({a}, {b}) out of range for n = {n}"));
    }
    let sample = CoupledSample::new(params, seed);
    let dec = eig_hermitian(&sample.minor(n)).map_err(|e| e.to_string())?;
    let empirical = sigma_measure(&dec, a, b).map_err(|e| e.to_string())?;
    let limit = sigma_limit(&sample, a, b);
    let out = SigmaOut {
        n,
        a,
        b,
        empirical: atoms_of(&empirical),
        limit: atoms_of(&limit),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct AnglesOut {
    n: usize,
    lambda: Vec<f64>,
    theta: Vec<f64>,
    unitarity_defect: f64,
}

fn angles_impl(config: &str, n: usize, seed: u64) -> Result<String, String> {
    let (params, n) = parse(config, n)?;
    let sample = CoupledSample::new(params, seed);
    let minor = sample.minor(n);
    let dec = eig_hermitian(&minor).map_err(|e| e.to_string())?;
    let u = cayley(&minor).map_err(|e| e.to_string())?;
    let (lambda, theta) = eigen_angles(&dec)
        .into_iter()
        .map(|(th, idx)| (dec.eigenvalues()[idx], th))
        .unzip();
    let out = AnglesOut {
        n,
        lambda,
        theta,
        unitarity_defect: u.unitarity_defect(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Scaled spectrum of one sampled minor next to the limit points.
#[wasm_bindgen]
pub fn spectrum_json(config: &str, n: usize, seed: u64) -> Result<String, JsError> {
    spectrum_impl(config, n, seed).map_err(|e| JsError::new(&e))
}

/// Projection-measure atoms for the coordinate pair (a, b) next to their
/// limit values.
#[wasm_bindgen]
pub fn sigma_json(
    config: &str,
    n: usize,
    seed: u64,
    a: usize,
    b: usize,
) -> Result<String, JsError> {
    sigma_impl(config, n, seed, a, b).map_err(|e| JsError::new(&e))
}

/// Eigenvalues of one minor with their Cayley angles on the unit circle.
#[wasm_bindgen]
pub fn eigen_angles_json(config: &str, n: usize, seed: u64) -> Result<String, JsError> {
    angles_impl(config, n, seed).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"{"gamma1": 0.0, "gamma2": 0.0, "points": [2.0, -1.0]}"#;

    #[test]
    fn spectrum_shape_and_cap() {
        let text = spectrum_impl(CONFIG, 4000, 7).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["n"], MAX_DEMO_N);
        assert_eq!(v["scaled"].as_array().unwrap().len(), MAX_DEMO_N);
        assert_eq!(v["limit_points"], serde_json::json!([2.0, -1.0]));
        let b = v["bound"].as_f64().unwrap();
        assert!((b - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sigma_reports_both_measures() {
        let text = sigma_impl(CONFIG, 48, 7, 0, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["limit"].as_array().unwrap().len(), 2);
        assert!(!v["empirical"].as_array().unwrap().is_empty());
        assert!(sigma_impl(CONFIG, 8, 7, 9, 0).is_err(), "out of range");
    }

    #[test]
    fn angles_lie_on_the_principal_branch() {
        let text = angles_impl(CONFIG, 32, 7).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let thetas = v["theta"].as_array().unwrap();
        assert_eq!(thetas.len(), 32);
        for t in thetas {
            let t = t.as_f64().unwrap();
            assert!(t > -std::f64::consts::PI && t <= std::f64::consts::PI);
        }
        assert!(v["unitarity_defect"].as_f64().unwrap() <= 1e-10 * 32.0);
    }

    #[test]
    fn bad_config_is_reported() {
        assert!(spectrum_impl("{not json", 16, 1).is_err());
        assert!(spectrum_impl(r#"{"gamma2": -1.0}"#, 16, 1).is_err());
    }
}
