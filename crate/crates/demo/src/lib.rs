//! Browser bindings for three operations of `lie-poincare`. Every export
//! takes plain strings and numbers and returns a JSON report string.
//!
//! The `*_json` functions are the same operations without the JS boundary,
//! for native callers and tests.

use lie_poincare::diophantine::{curve_collapse_decades, decade_radii, lattice_minimum, margin_curve, parse_direction};
use lie_poincare::fourier::su2_dual_range;
use lie_poincare::poincare::{gate_scan, margin_trend};
use lie_poincare::report::Document;
use lie_poincare::spectral::{spectral_record, DEFAULT_RANK_TOL};
use lie_poincare::su2::{sigma_su2, su2_field_symbols};
use lie_poincare::tube::{constant_transfer, tube_gate, InnerField, Profile};
use serde_json::json;
use wasm_bindgen::prelude::*;

const MAX_TWO_ELL: u32 = 96;
const MAX_RADIUS: f64 = 1e5;
const MAX_KMAX: u64 = 1_000_000;

fn su2_alpha(s: &str) -> Result<[f64; 3], String> {
    let v = s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad coordinate {t:?}"))).collect::<Result<Vec<_>, _>>()?;
    match v[..] {
        [a, b, c] if v.iter().all(|x| x.is_finite()) => Ok([a, b, c]),
        _ => Err("alpha needs three finite coordinates".into()),
    }
}

fn check(cond: bool, msg: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Singular values of the su2 symbol at every 2ℓ ≤ `two_ell_max` and the
/// decay gate for the given δ.
pub fn su2_spectrum_json(alpha: &str, two_ell_max: u32, delta: f64) -> Result<String, String> {
    let a = su2_alpha(alpha)?;
    check(two_ell_max <= MAX_TWO_ELL, "two_ell_max is capped at 96 in the demo")?;
    check(delta.is_finite() && delta >= 1.0, "delta must be at least 1")?;
    let records = (0..=two_ell_max)
        .map(|t| spectral_record(&sigma_su2(t, &a), DEFAULT_RANK_TOL))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let sigma = su2_field_symbols(&a, two_ell_max);
    let gate = gate_scan(&sigma, delta, &su2_dual_range(two_ell_max), DEFAULT_RANK_TOL).map_err(|e| e.to_string())?;
    let verdict = margin_trend(&gate);
    Ok(Document::new("demo-su2", json!({ "records": records, "verdict": verdict, "gate": gate })).to_json())
}

/// Exact lattice minimum of |⟨ξ,α⟩|·|ξ|^(δ−1) and its decade curve.
pub fn lattice_json(alpha: &str, delta: f64, radius: f64) -> Result<String, String> {
    let spec = parse_direction(alpha).map_err(|e| e.to_string())?;
    check(delta.is_finite() && delta >= 1.0, "delta must be at least 1")?;
    check(radius.is_finite() && radius >= 1.0 && radius <= MAX_RADIUS, "radius must lie in [1, 1e5] in the demo")?;
    check(spec.direction.dim() <= 3 || radius <= 200.0, "radius is capped at 200 above three dimensions")?;
    let cert = lattice_minimum(&spec.direction, delta, radius).map_err(|e| e.to_string())?;
    let curve = margin_curve(&spec.direction, delta, &decade_radii(radius)).map_err(|e| e.to_string())?;
    let collapse = curve_collapse_decades(&curve);
    let body = json!({ "certificate": cert, "curve": curve, "collapse_decades": collapse, "rational": spec.rational });
    Ok(Document::new("demo-lattice", body).to_json())
}

/// Gate of ∂_t + a(t)∂_x on T² for a profile given as JSON.
pub fn tube_json(profile: &str, delta: f64, kmax: u64, radius: f64) -> Result<String, String> {
    let profile = Profile::from_json(profile).map_err(|e| e.to_string())?;
    check(delta.is_finite() && delta >= 1.0, "delta must be at least 1")?;
    check(kmax <= MAX_KMAX, "kmax is capped at 1e6 in the demo")?;
    check(radius.is_finite() && radius >= 1.0 && radius <= MAX_RADIUS, "radius must lie in [1, 1e5] in the demo")?;
    let dir = parse_direction("1").map_err(|e| e.to_string())?.direction;
    let gate = tube_gate(&profile, &InnerField::Torus { direction: &dir, radius }, delta, kmax, DEFAULT_RANK_TOL).map_err(|e| e.to_string())?;
    let var_a = profile.var_a();
    let body = json!({
        "a0": profile.a0(),
        "var_a": var_a,
        "verdict": margin_trend(&gate),
        "transferred_c": gate.derived_c.map(|c| constant_transfer(c, var_a, delta)),
        "gate": gate,
    });
    Ok(Document::new("demo-tube", body).to_json())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn su2_spectrum(alpha: &str, two_ell_max: u32, delta: f64) -> Result<String, JsError> {
    js(su2_spectrum_json(alpha, two_ell_max, delta))
}

#[wasm_bindgen]
pub fn lattice(alpha: &str, delta: f64, radius: f64) -> Result<String, JsError> {
    js(lattice_json(alpha, delta, radius))
}

#[wasm_bindgen]
pub fn tube(profile: &str, delta: f64, kmax: f64, radius: f64) -> Result<String, JsError> {
    if !(kmax.is_finite() && kmax >= 0.0) {
        return Err(JsError::new("kmax must be a non-negative number"));
    }
    js(tube_json(profile, delta, kmax as u64, radius))
}

#[wasm_bindgen]
pub fn schema_version() -> String {
    lie_poincare::report::report_schema_version().to_string()
}
