//! WebAssembly bindings for the demo page in `www/`.
//!
//! Each export takes a model family with its two parameters and a grid, and
//! returns plain numbers or a `Float64Array` over slice `t = 0`.

use wasm_bindgen::prelude::*;
use wkam_core::barriers::{BarrierConfig, BarrierEngine};
use wkam_core::critical_value::alpha_karp_for;
use wkam_core::grid::{GridFunction, TorusGrid};
use wkam_core::hamiltonian::{HamiltonianModel, ModelParams, ModelSpec};
use wkam_core::lax_oleinik::{Dynamics, OperatorConfig};
use wkam_core::weak_kam::{backward_fixed_point, FixedPointConfig};

/// Largest grid the page accepts; keeps a request under a few seconds.
pub const MAX_NQ: usize = 256;
pub const MAX_NT: usize = 32;

/// `family` is `free`, `pendulum`, `forced_pendulum`, `pair_d1_1` or `pair_d1_2`.
pub fn build_model(family: &str, amplitude: f64, epsilon: f64) -> Result<HamiltonianModel, String> {
    let (name, member) = match family {
        "pair_d1_1" => ("pair_d1", Some(1)),
        "pair_d1_2" => ("pair_d1", Some(2)),
        other => (other, None),
    };
    let spec = ModelSpec {
        params: ModelParams {
            amplitude: Some(amplitude),
            epsilon: Some(epsilon),
            member,
            ..ModelParams::default()
        },
        ..ModelSpec::named(name)
    };
    spec.build().map_err(|e| e.to_string())
}

fn normalized(family: &str, amplitude: f64, epsilon: f64, n_q: usize, n_t: usize) -> Result<Dynamics, String> {
    if n_q > MAX_NQ || n_t > MAX_NT {
        return Err(format!("grid {n_q}x{n_t} is larger than {MAX_NQ}x{MAX_NT}"));
    }
    let grid = TorusGrid::new(n_q, n_t).map_err(|e| e.to_string())?;
    let model = build_model(family, amplitude, epsilon)?;
    let raw = Dynamics::new(&model, grid, OperatorConfig::default()).map_err(|e| e.to_string())?;
    let alpha = alpha_karp_for(&raw).map_err(|e| e.to_string())?.value;
    Ok(raw.with_alpha(alpha))
}

/// Critical value by minimum mean cycle of the period kernel.
pub fn critical_value(family: &str, amplitude: f64, epsilon: f64, n_q: usize, n_t: usize) -> Result<f64, String> {
    Ok(normalized(family, amplitude, epsilon, n_q, n_t)?.alpha_shift())
}

/// Backward weak KAM solution on slice 0, zero at `q = 0`.
pub fn weak_kam_profile(family: &str, amplitude: f64, epsilon: f64, n_q: usize, n_t: usize) -> Result<Vec<f64>, String> {
    let d = normalized(family, amplitude, epsilon, n_q, n_t)?;
    let start = GridFunction::constant(d.grid(), 0, 0.0);
    let sol = backward_fixed_point(&d, &start, &FixedPointConfig::default()).map_err(|e| e.to_string())?;
    Ok(sol.slice0().values)
}

/// Peierls barrier on slice 0.
pub fn barrier_profile(family: &str, amplitude: f64, epsilon: f64, n_q: usize, n_t: usize) -> Result<Vec<f64>, String> {
    let d = normalized(family, amplitude, epsilon, n_q, n_t)?;
    let engine = BarrierEngine::new(&d, BarrierConfig::default()).map_err(|e| e.to_string())?;
    engine.require_settled().map_err(|e| e.to_string())?;
    Ok(engine.first_barrier().slice(0).values)
}

#[wasm_bindgen]
pub fn alpha(family: &str, amplitude: f64, epsilon: f64, n_q: usize, n_t: usize) -> Result<f64, JsError> {
    critical_value(family, amplitude, epsilon, n_q, n_t).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn weak_kam(family: &str, amplitude: f64, epsilon: f64, n_q: usize, n_t: usize) -> Result<Vec<f64>, JsError> {
    weak_kam_profile(family, amplitude, epsilon, n_q, n_t).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn barrier(family: &str, amplitude: f64, epsilon: f64, n_q: usize, n_t: usize) -> Result<Vec<f64>, JsError> {
    barrier_profile(family, amplitude, epsilon, n_q, n_t).map_err(|e| JsError::new(&e))
}
