//! Three small operations for the static page in `www/`, each returning a
//! JSON string. The `demo_*` functions are plain Rust so they can be tested
//! natively; the exported wrappers only translate errors.

use flatchain::chain::chain_integral;
use flatchain::forms::builtin;
use flatchain::kernel::MollifierKernel;
use flatchain::oracle::young_value;
use flatchain::paths::{generate_bm, generate_fbm, Extension, SampledPath};
use flatchain::sheet::{SheetGrid, DEFAULT_RATIO};
use flatchain::spectral::{compute_zk_pair, WaveGrid};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Points sent to the page per curve.
const MAX_POINTS: usize = 512;

fn fbm(hurst: f64, steps: usize, seed: u64) -> Result<SampledPath, String> {
    generate_fbm(hurst, 2, steps, 1.0, seed).map_err(|e| e.to_string())
}

fn thin(n: usize) -> usize {
    n.div_ceil(MAX_POINTS).max(1)
}

#[derive(Serialize)]
struct SheetPreview {
    raw: Vec<[f64; 2]>,
    /// One polyline per requested scale.
    smoothed: Vec<(f64, Vec<[f64; 2]>)>,
}

/// A planar fBm path together with its smoothings at a few scales.
pub fn demo_sheet_preview(hurst: f64, steps: usize, seed: u64) -> Result<String, String> {
    let p = fbm(hurst, steps, seed)?;
    let alpha_min = 4.0 * p.step();
    let grid = SheetGrid::new(&p, MollifierKernel::Epanechnikov, Extension::Reflect, (hurst - 0.05).max(0.05), alpha_min, 2.0)
        .map_err(|e| e.to_string())?;
    let every = thin(p.n_steps());
    let raw = p.points().step_by(every).map(|x| [x[0], x[1]]).collect();
    let smoothed = (0..grid.alphas().len())
        .step_by(2)
        .map(|m| {
            let pts = (0..grid.n_times()).step_by(every).map(|j| {
                let v = grid.value(m, j);
                [v[0], v[1]]
            });
            (grid.alphas()[m], pts.collect())
        })
        .collect();
    serde_json::to_string(&SheetPreview { raw, smoothed }).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Convergence {
    alphas: Vec<f64>,
    curve_integrals: Vec<f64>,
    value: f64,
    extrapolated: bool,
    stokes_residual: f64,
    young: Option<f64>,
}

/// Curve integrals of `form` along the smoothed path as the scale shrinks.
pub fn demo_chain_convergence(hurst: f64, steps: usize, seed: u64, form: &str) -> Result<String, String> {
    let p = fbm(hurst, steps, seed)?;
    let gamma = hurst - 0.05;
    let grid = SheetGrid::new(&p, MollifierKernel::Epanechnikov, Extension::Reflect, gamma, 4.0 * p.step(), DEFAULT_RATIO)
        .map_err(|e| e.to_string())?;
    let phi = builtin(form, 2).and_then(|d| d.as_one_form()).map_err(|e| e.to_string())?;
    let r = chain_integral(&grid, phi.as_ref()).map_err(|e| e.to_string())?;
    let young = (gamma > 0.5).then(|| young_value(&p, phi.as_ref(), gamma).ok()).flatten().map(|y| y.value);
    let out = Convergence {
        alphas: r.alphas.clone(),
        curve_integrals: r.curve_integrals.clone(),
        value: r.extrapolated_value,
        extrapolated: r.extrapolated,
        stokes_residual: r.stokes_residual,
        young,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct ZkProfile {
    k: Vec<f64>,
    left: Vec<f64>,
    midpoint: Vec<f64>,
}

/// `|Z_k|²` of one planar Brownian path along the positive first axis for
/// both Riemann schemes.
pub fn demo_zk_profile(steps: usize, seed: u64, cutoff: f64, resolution: usize) -> Result<String, String> {
    let p = generate_bm(2, steps, 1.0, seed).map_err(|e| e.to_string())?;
    let grid = WaveGrid::new(2, cutoff, resolution).map_err(|e| e.to_string())?;
    let (left, mid) = compute_zk_pair(&p, &grid).map_err(|e| e.to_string())?;
    let c = grid.center();
    let half = resolution / 2;
    // axis 0 is the slow index, so stepping along k₁ moves by `resolution`
    let idx: Vec<usize> = (0..=half).map(|i| c + i * resolution).collect();
    let out = ZkProfile {
        k: idx.iter().map(|&i| grid.node(i)[0]).collect(),
        left: idx.iter().map(|&i| left.norm_sqr(i)).collect(),
        midpoint: idx.iter().map(|&i| mid.norm_sqr(i)).collect(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn sheet_preview(hurst: f64, steps: usize, seed: u32) -> Result<String, JsError> {
    demo_sheet_preview(hurst, steps, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn chain_convergence(hurst: f64, steps: usize, seed: u32, form: &str) -> Result<String, JsError> {
    demo_chain_convergence(hurst, steps, seed.into(), form).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn zk_profile(steps: usize, seed: u32, cutoff: f64, resolution: usize) -> Result<String, JsError> {
    demo_zk_profile(steps, seed.into(), cutoff, resolution).map_err(|e| JsError::new(&e))
}
