//! WebAssembly bindings for the static page in `www/`.
//!
//! Surfaces are passed as the nine coefficients of `F1 = a1 u + b1 v`, `F2 = a2 u + b2 v`,
//! `F3 = a3 u² + b3 v² + c3 uv`; results come back as JSON strings.

use chatelet::count::n_b_count;
use chatelet::densities::{sigma_p, Cutoffs};
use chatelet::forms::{SignVector, Surface};
use chatelet::peyre::c_s;
use serde_json::json;
use wasm_bindgen::prelude::*;

const MAX_DEMO_BOUND: u64 = 2_000_000;
const MAX_TABLE_PRIME: u64 = 2_000;

fn surface(c: &[i64]) -> Result<Surface, JsError> {
    if c.len() != 7 {
        return Err(JsError::new("expected seven coefficients a1 b1 a2 b2 a3 b3 c3"));
    }
    Surface::from_coeffs([c[0], c[1]], [c[2], c[3]], [c[4], c[5], c[6]]).map_err(|e| JsError::new(&e.to_string()))
}

fn signs(e2: i8, e3: i8) -> Result<SignVector, JsError> {
    SignVector::new(1, e2, e3).map_err(|e| JsError::new(&e.to_string()))
}

/// Area of `{|u|, |v| ≤ 1 : ε_i F_i(u, v) > 0}` with `ε = (1, e2, e3)`, and `π³` times it.
#[wasm_bindgen]
pub fn region_volume(coeffs: &[i64], e2: i8, e3: i8) -> Result<String, JsError> {
    let s = surface(coeffs)?;
    let eps = signs(e2, e3)?;
    let vol = s.region_volume(eps);
    Ok(json!({ "eps": eps, "volume": vol, "omega_infty": std::f64::consts::PI.powi(3) * vol }).to_string())
}

/// `σ_p` for the odd primes up to `p_max`, with the change at the last exponent refinement.
#[wasm_bindgen]
pub fn sigma_table(coeffs: &[i64], p_max: u32, nu_max: u32) -> Result<String, JsError> {
    let s = surface(coeffs)?;
    let p_max = (p_max as u64).min(MAX_TABLE_PRIME);
    let rows: Vec<_> = (3..=p_max)
        .filter(|&p| chatelet::arith::is_prime(p))
        .map(|p| {
            sigma_p(p, &s, nu_max.clamp(1, 16))
                .map(|v| json!({ "p": p, "sigma": v.value, "delta": v.stabilization_delta }))
                .map_err(|e| JsError::new(&e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    Ok(serde_json::Value::Array(rows).to_string())
}

/// `N(B)`, `c_S` (primes up to 2000) and the ratio `N(B) / (c_S B log B)`.
#[wasm_bindgen]
pub fn point_count_ratio(coeffs: &[i64], bound: u32) -> Result<String, JsError> {
    let s = surface(coeffs)?;
    let b = (bound as u64).clamp(2, MAX_DEMO_BOUND);
    let cutoffs = Cutoffs { prime_cutoff: 2_000, ..Default::default() };
    let c = c_s(&s, &cutoffs).map_err(|e| JsError::new(&e.to_string()))?.c_s.value;
    let n = n_b_count(b, &s).map_err(|e| JsError::new(&e.to_string()))?;
    let main = c * b as f64 * (b as f64).ln();
    Ok(json!({ "bound": b, "count": n as u64, "c_s": c, "main": main, "ratio": n as f64 / main }).to_string())
}
