//! The line integral as a flat chain: on the truncated domain
//! `[0,T] × [α_min, 1]` Stokes gives
//!
//! `∫⟨φ(X_{t,α_min}), ∂_t X⟩dt = T(dφ) + top − right + left`
//!
//! where `top` is the curve integral at `α = 1` and `right`/`left` integrate
//! `⟨φ(X), ∂_α X⟩` along `t = T` and `t = 0`. The curve integrals at the
//! smallest scales are then extrapolated to `α → 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::OneForm;
use crate::quad::fit_line;
use crate::sheet::SheetGrid;

/// Number of smallest scales used by the extrapolation fit.
pub const FIT_WINDOW: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainTerms {
    pub t_dphi: f64,
    pub top_edge: f64,
    pub right_edge: f64,
    pub left_edge: f64,
}

impl ChainTerms {
    pub fn assembled(&self) -> f64 {
        self.t_dphi + self.top_edge - self.right_edge + self.left_edge
    }

    pub fn magnitude(&self) -> f64 {
        self.t_dphi.abs() + self.top_edge.abs() + self.right_edge.abs() + self.left_edge.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainIntegralResult {
    pub value_at_alpha_min: f64,
    pub terms: ChainTerms,
    pub stokes_residual: f64,
    pub stokes_tolerance: f64,
    pub extrapolated_value: f64,
    pub extrapolation_exponent: f64,
    /// False when the fit was rejected and `extrapolated_value` is the
    /// value at `α_min`.
    pub extrapolated: bool,
    pub fit_alphas: Vec<f64>,
    pub fit_values: Vec<f64>,
    pub fit_slope: f64,
    pub fit_residual: f64,
    /// Curve integral at every scale of the grid.
    pub alphas: Vec<f64>,
    pub curve_integrals: Vec<f64>,
    pub graph_lift: bool,
}

impl ChainIntegralResult {
    pub fn stokes_ok(&self) -> bool {
        self.stokes_residual.abs() <= self.stokes_tolerance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainOptions {
    /// Exponent `p` of the model `a + b·α^p`; defaults to `2γ − 1`.
    pub exponent: Option<f64>,
    pub window: usize,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self { exponent: None, window: FIT_WINDOW }
    }
}

/// Per-scale pieces gathered in one sweep over a level.
struct LevelSums {
    curve: f64,
    area: f64,
    left: f64,
    right: f64,
}

fn level_sums(grid: &SheetGrid, phi: &dyn OneForm, m: usize, graph: bool) -> LevelSums {
    let d = grid.dim();
    let big = if graph { d + 1 } else { d };
    let off = big - d;
    let mut y = vec![0.0; big];
    let mut u = vec![0.0; big];
    let mut v = vec![0.0; big];
    let mut f = vec![0.0; big];
    let mut jac = vec![0.0; big * big];
    let n = grid.n_times();
    let mut curve = 0.0;
    let mut area = 0.0;
    let mut ends = [0.0; 2];
    for j in 0..n {
        if graph {
            y[0] = grid.path().time(j);
            u[0] = 1.0;
            v[0] = 0.0;
        }
        y[off..].copy_from_slice(grid.value(m, j));
        u[off..].copy_from_slice(grid.dt(m, j));
        v[off..].copy_from_slice(grid.dalpha(m, j));
        phi.eval(&y, &mut f);
        phi.jacobian(&y, &mut jac);
        let mut c = 0.0;
        let mut a = 0.0;
        for i in 0..big {
            c += f[i] * u[i];
            let row = &jac[i * big..(i + 1) * big];
            let ju: f64 = row.iter().zip(&u).map(|(r, x)| r * x).sum();
            let jv: f64 = row.iter().zip(&v).map(|(r, x)| r * x).sum();
            a += ju * v[i] - jv * u[i];
        }
        let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        curve += w * c;
        area += w * a;
        if j == 0 || j == n - 1 {
            ends[(j != 0) as usize] = f.iter().zip(&v).map(|(a, b)| a * b).sum();
        }
    }
    let h = grid.step();
    LevelSums { curve: h * curve, area: h * area, left: ends[0], right: ends[1] }
}

fn check_dim(grid: &SheetGrid, phi: &dyn OneForm, graph: bool) -> Result<()> {
    let expected = grid.dim() + graph as usize;
    if phi.dim() != expected {
        return Err(Error::DimensionMismatch { expected, got: phi.dim() });
    }
    Ok(())
}

/// `∫_0^T ⟨φ(X_{t,α}), ∂_t X_{t,α}⟩ dt` at a grid scale.
pub fn smoothed_curve_integral(grid: &SheetGrid, phi: &dyn OneForm, alpha: f64) -> Result<f64> {
    check_dim(grid, phi, false)?;
    let m = grid.node_index(alpha)?;
    Ok(curve_at(grid, phi, m, false))
}

/// The graph-lift counterpart of [`smoothed_curve_integral`].
pub fn smoothed_curve_integral_graph(grid: &SheetGrid, phi: &dyn OneForm, alpha: f64) -> Result<f64> {
    check_dim(grid, phi, true)?;
    let m = grid.node_index(alpha)?;
    Ok(curve_at(grid, phi, m, true))
}

fn curve_at(grid: &SheetGrid, phi: &dyn OneForm, m: usize, graph: bool) -> f64 {
    let off = graph as usize;
    let mut y = vec![0.0; grid.dim() + off];
    let mut f = vec![0.0; grid.dim() + off];
    let n = grid.n_times();
    let mut acc = 0.0;
    for j in 0..n {
        if graph {
            y[0] = grid.path().time(j);
        }
        y[off..].copy_from_slice(grid.value(m, j));
        phi.eval(&y, &mut f);
        let time = if graph { f[0] } else { 0.0 };
        let space: f64 = f[off..].iter().zip(grid.dt(m, j)).map(|(a, b)| a * b).sum();
        let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        acc += w * (time + space);
    }
    grid.step() * acc
}

pub fn chain_integral(grid: &SheetGrid, phi: &dyn OneForm) -> Result<ChainIntegralResult> {
    chain_integral_with(grid, phi, ChainOptions::default())
}

pub fn chain_integral_graph(grid: &SheetGrid, phi: &dyn OneForm) -> Result<ChainIntegralResult> {
    chain_integral_graph_with(grid, phi, ChainOptions::default())
}

pub fn chain_integral_with(grid: &SheetGrid, phi: &dyn OneForm, opts: ChainOptions) -> Result<ChainIntegralResult> {
    check_dim(grid, phi, false)?;
    assemble(grid, phi, opts, false)
}

pub fn chain_integral_graph_with(
    grid: &SheetGrid,
    phi: &dyn OneForm,
    opts: ChainOptions,
) -> Result<ChainIntegralResult> {
    check_dim(grid, phi, true)?;
    assemble(grid, phi, opts, true)
}

fn assemble(grid: &SheetGrid, phi: &dyn OneForm, opts: ChainOptions, graph: bool) -> Result<ChainIntegralResult> {
    let count = grid.alphas().len();
    let sweep = |m: usize| level_sums(grid, phi, m, graph);
    #[cfg(feature = "parallel")]
    let sums: Vec<LevelSums> = {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(sweep).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let sums: Vec<LevelSums> = (0..count).map(sweep).collect();

    let wa = grid.alpha_weights();
    let weighted = |f: &dyn Fn(&LevelSums) -> f64| -> f64 { wa.iter().zip(&sums).map(|(w, s)| w * f(s)).sum() };
    let terms = ChainTerms {
        t_dphi: weighted(&|s| s.area),
        top_edge: sums[count - 1].curve,
        right_edge: weighted(&|s| s.right),
        left_edge: weighted(&|s| s.left),
    };
    let curve: Vec<f64> = sums.iter().map(|s| s.curve).collect();
    let value = curve[0];
    let stokes_residual = value - terms.assembled();
    let stokes_tolerance = (0.01 * terms.magnitude()).max(1e-6);

    let exponent = opts.exponent.unwrap_or(2.0 * grid.gamma() - 1.0);
    let window = opts.window.clamp(2, count.max(2)).min(count);
    let fit_alphas = grid.alphas()[..window].to_vec();
    let fit_values = curve[..window].to_vec();
    let fit = extrapolate(grid.alphas(), &curve, exponent, window);

    let (extrapolated_value, extrapolated, fit_slope, fit_residual) = match fit {
        Some(f) => (f.value, true, f.slope, f.residual),
        None => (value, false, f64::NAN, f64::NAN),
    };
    Ok(ChainIntegralResult {
        value_at_alpha_min: value,
        terms,
        stokes_residual,
        stokes_tolerance,
        extrapolated_value,
        extrapolation_exponent: exponent,
        extrapolated,
        fit_alphas,
        fit_values,
        fit_slope,
        fit_residual,
        alphas: grid.alphas().to_vec(),
        curve_integrals: curve,
        graph_lift: graph,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    pub value: f64,
    pub slope: f64,
    pub residual: f64,
}

/// Largest tolerated `Σ|c_i|` for an extrapolated value `Σ c_i y_i`.
pub const MAX_INTERCEPT_GAIN: f64 = 20.0;

/// Largest factor by which an observed local convergence exponent may
/// differ from the model exponent.
pub const EXPONENT_SLACK: f64 = 2.0;

/// Least-squares fit of `a + b·α^p` over the leading `window` nodes,
/// returning `a`.
///
/// Rejected when the fit is ill-conditioned (intercept gain above
/// [`MAX_INTERCEPT_GAIN`]), when its residual exceeds 20%
/// of the correction `|b|·α_min^p`, when successive differences of the
/// data do not decay like those of `α^p` (same sign, log-ratios within
/// [`EXPONENT_SLACK`]), or when the same fit on the window shifted up by
/// one node moves the intercept by more than 20% of the correction.
/// A negligible correction is always accepted.
pub fn extrapolate(alphas: &[f64], values: &[f64], exponent: f64, window: usize) -> Option<Extrapolation> {
    let window = window.min(alphas.len());
    if !(exponent > 0.0) || window < 2 || alphas.len() != values.len() {
        return None;
    }
    let x: Vec<f64> = alphas.iter().map(|a| a.powf(exponent)).collect();
    let fit = fit_line(&x[..window], &values[..window])?;
    let accepted = Extrapolation { value: fit.intercept, slope: fit.slope, residual: fit.max_residual };
    let correction = (fit.slope * x[0]).abs();
    if correction <= 1e-9 * (1.0 + fit.intercept.abs()) {
        return Some(accepted);
    }
    if !(fit.intercept_gain <= MAX_INTERCEPT_GAIN) {
        return None;
    }
    if fit.max_residual > 0.2 * correction || !power_law_consistent(&x[..window], &values[..window]) {
        return None;
    }
    if alphas.len() > window {
        let shifted = fit_line(&x[1..=window], &values[1..=window])?;
        if (shifted.intercept - fit.intercept).abs() > 0.2 * correction {
            return None;
        }
    }
    Some(accepted)
}

/// Whether consecutive differences of `y` grow the way those of `x` do,
/// with log-ratios agreeing within [`EXPONENT_SLACK`].
pub fn power_law_consistent(x: &[f64], y: &[f64]) -> bool {
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let dx: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    dy.windows(2).zip(dx.windows(2)).all(|(a, b)| ratio_consistent(a[1] / a[0], b[1] / b[0]))
}

/// Whether an observed ratio of successive differences matches an expected
/// one in the sense `ln(observed)/ln(expected) ∈ [1/s, s]`.
pub fn ratio_consistent(observed: f64, expected: f64) -> bool {
    if !(observed > 0.0 && expected > 0.0) || expected == 1.0 {
        return false;
    }
    let q = observed.ln() / expected.ln();
    (1.0 / EXPONENT_SLACK..=EXPONENT_SLACK).contains(&q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{builtin, Constant, Rotation, TimeOnly};
    use crate::kernel::MollifierKernel;
    use crate::paths::{generate_analytic, AnalyticCurve, Extension, SampledPath};
    use crate::sheet::DEFAULT_RATIO;
    use std::f64::consts::PI;

    const EPA: MollifierKernel = MollifierKernel::Epanechnikov;

    fn circle(n: usize) -> SampledPath {
        generate_analytic(&AnalyticCurve::Circle { radius: 1.0 }, n, 2.0 * PI).unwrap()
    }

    #[test]
    fn constant_path_integrates_to_zero() {
        let p = generate_analytic(&AnalyticCurve::Constant { point: vec![0.5, 1.5] }, 256, 1.0).unwrap();
        let g = SheetGrid::new(&p, EPA, Extension::Reflect, 0.7, 0.05, 2.0).unwrap();
        let phi = Rotation { dim: 2, decay: 0.0 };
        assert_eq!(smoothed_curve_integral(&g, &phi, g.alpha_min()).unwrap(), 0.0);
        let r = chain_integral(&g, &phi).unwrap();
        assert_eq!(r.extrapolated_value, 0.0);
        assert!(r.stokes_ok());
    }

    #[test]
    fn line_with_constant_form() {
        let v = vec![0.7, -0.4];
        let p = generate_analytic(&AnalyticCurve::Line { velocity: v.clone() }, 512, 2.0).unwrap();
        let g = SheetGrid::new(&p, EPA, Extension::Reflect, 1.0, 0.02, DEFAULT_RATIO).unwrap();
        let phi = Constant::one_form(vec![2.0, 3.0]);
        let target = (2.0 * v[0] + 3.0 * v[1]) * 2.0;
        for &a in g.alphas() {
            let c = smoothed_curve_integral(&g, &phi, a).unwrap();
            assert!((c - target).abs() < 1e-8, "{c} vs {target}");
        }
        let r = chain_integral(&g, &phi).unwrap();
        assert!((r.extrapolated_value - target).abs() < 1e-8);
        assert!(r.stokes_ok());
    }

    #[test]
    fn curve_off_the_grid_is_rejected() {
        let p = circle(1024);
        let g = SheetGrid::new(&p, EPA, Extension::Reflect, 1.0, 0.05, 2.0).unwrap();
        let phi = Rotation { dim: 2, decay: 0.0 };
        assert!(matches!(smoothed_curve_integral(&g, &phi, 0.07), Err(Error::NotAGridNode(_))));
    }

    #[test]
    fn smoothed_circle_encloses_twice_its_area() {
        let p = circle(1 << 12);
        let g = SheetGrid::with_alphas(&p, EPA, Extension::Reflect, 1.0, vec![0.02, 1.0]).unwrap();
        let phi = Rotation { dim: 2, decay: 0.0 };
        let c = smoothed_curve_integral(&g, &phi, 0.02).unwrap();
        // radius away from the ends, where the smoothed curve is a circle
        let mid = g.n_times() / 2;
        let r = g.value(0, mid).iter().map(|x| x * x).sum::<f64>().sqrt();
        let expect = 2.0 * PI * r * r;
        assert!((c - expect).abs() < 0.01 * expect, "{c} vs {expect}");
    }

    #[test]
    fn green_theorem_on_the_circle() {
        let p = circle(1 << 12);
        let g = SheetGrid::new(&p, EPA, Extension::Reflect, 1.0, 4.0 * p.step(), DEFAULT_RATIO).unwrap();
        let phi = builtin("rotation", 2).unwrap().as_one_form().unwrap();
        let r = chain_integral(&g, phi.as_ref()).unwrap();
        assert!((r.extrapolated_value - 2.0 * PI).abs() < 1e-3 * 2.0 * PI, "{r:?}");
        assert!(r.stokes_ok());
        let assembled = r.terms.assembled() + r.stokes_residual;
        assert!((assembled - r.value_at_alpha_min).abs() < 1e-12);
    }

    #[test]
    fn time_only_form_integrates_in_time() {
        let p = generate_analytic(&AnalyticCurve::Line { velocity: vec![1.0] }, 512, 2.0).unwrap();
        let g = SheetGrid::new(&p, EPA, Extension::Reflect, 0.7, 0.02, DEFAULT_RATIO).unwrap();
        let r = chain_integral_graph(&g, &TimeOnly { space_dim: 1 }).unwrap();
        // trapezoid on 512 steps of cos over [0, 2]
        assert!((r.extrapolated_value - 2f64.sin()).abs() < 1e-5, "{}", r.extrapolated_value);
        assert!(r.stokes_ok());
    }

    #[test]
    fn graph_lift_of_a_constant_path_without_time_part() {
        let p = generate_analytic(&AnalyticCurve::Constant { point: vec![0.3] }, 256, 1.0).unwrap();
        let g = SheetGrid::new(&p, EPA, Extension::Reflect, 0.7, 0.05, DEFAULT_RATIO).unwrap();
        let phi = builtin("subgraph", 1).unwrap().as_one_form().unwrap();
        let r = chain_integral_graph(&g, phi.as_ref()).unwrap();
        assert!(r.extrapolated_value.abs() < 1e-10);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = circle(256);
        let g = SheetGrid::new(&p, EPA, Extension::Reflect, 1.0, 0.1, 2.0).unwrap();
        let phi = Rotation { dim: 2, decay: 0.0 };
        assert!(matches!(chain_integral_graph(&g, &phi), Err(Error::DimensionMismatch { expected: 3, got: 2 })));
    }

    #[test]
    fn extrapolation_recovers_power_law_intercept() {
        let alphas: Vec<f64> = (0..8).map(|m| 0.01 * DEFAULT_RATIO.powi(m)).collect();
        let values: Vec<f64> = alphas.iter().map(|a| 1.5 - 0.8 * a.powf(0.4)).collect();
        let e = extrapolate(&alphas, &values, 0.4, 4).unwrap();
        assert!((e.value - 1.5).abs() < 1e-10);
        assert!((e.slope + 0.8).abs() < 1e-10);
    }

    #[test]
    fn extrapolation_rejects_noise() {
        let alphas: Vec<f64> = (0..8).map(|m| 0.01 * DEFAULT_RATIO.powi(m)).collect();
        let values = [1.0, 1.01, 0.99, 1.02, 1.0, 0.98, 1.0, 1.01];
        assert!(extrapolate(&alphas, &values, 0.4, 4).is_none());
        // flat data needs no correction
        assert!(extrapolate(&alphas, &[2.0; 8], 0.4, 4).is_some());
    }

    #[test]
    fn ratio_consistency_bounds() {
        assert!(ratio_consistent(0.5, 0.5));
        assert!(ratio_consistent(0.3, 0.5));
        assert!(!ratio_consistent(0.9, 0.5));
        assert!(!ratio_consistent(-0.5, 0.5));
    }
}
