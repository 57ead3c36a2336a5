//! The truncated parameter domain `[0,T] × [α_min, 1]` sampled at the path's
//! time nodes and a geometric sequence of smoothing scales, with the sheet
//! and both partials cached at every node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{pair_count, TwoForm};
use crate::kernel::{KernelConstants, MollifierKernel};
use crate::mollify::{alpha_floor, check_alpha, SheetPoint, Stencil};
use crate::paths::{estimate_holder, ExtendedPath, Extension, SampledPath};
use crate::quad::{simpson_weights, trapezoid_weights};

pub const DEFAULT_RATIO: f64 = 1.189_207_115_002_721; // 2^{1/4}

/// Sheet values and partials at every time node for one smoothing scale.
#[derive(Debug, Clone)]
struct Level {
    value: Vec<f64>,
    dt: Vec<f64>,
    da: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SheetGrid {
    ext: ExtendedPath,
    kernel: MollifierKernel,
    gamma: f64,
    alphas: Vec<f64>,
    levels: Vec<Level>,
}

/// `α_min·ρ^m` while below one, then one.
pub fn geometric_alphas(alpha_min: f64, rho: f64) -> Result<Vec<f64>> {
    if !(rho > 1.0) {
        return Err(Error::InvalidParameter(format!("ratio {rho} must exceed 1")));
    }
    if !(alpha_min > 0.0 && alpha_min <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha_min {alpha_min} outside (0, 1]")));
    }
    let steps = ((1.0 / alpha_min).ln() / rho.ln() - 1e-9).ceil().max(0.0) as i32;
    let mut nodes: Vec<f64> = (0..steps).map(|m| alpha_min * rho.powi(m)).collect();
    nodes.push(1.0);
    Ok(nodes)
}

impl SheetGrid {
    pub fn new(
        path: &SampledPath,
        kernel: MollifierKernel,
        extension: Extension,
        gamma: f64,
        alpha_min: f64,
        rho: f64,
    ) -> Result<Self> {
        Self::with_alphas(path, kernel, extension, gamma, geometric_alphas(alpha_min, rho)?)
    }

    /// Build on an explicit increasing list of scales.
    pub fn with_alphas(
        path: &SampledPath,
        kernel: MollifierKernel,
        extension: Extension,
        gamma: f64,
        alphas: Vec<f64>,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!("gamma {gamma} outside (0, 1]")));
        }
        if alphas.is_empty() || alphas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("alpha nodes must be strictly increasing".into()));
        }
        let h = path.step();
        for &a in &alphas {
            check_alpha(a, h)?;
        }
        let ext = ExtendedPath::new(path, extension);
        let columns: Vec<Vec<f64>> = (0..ext.dim()).map(|c| ext.column(c)).collect();
        let build = |alpha: &f64| level(&ext, &columns, kernel, *alpha);
        #[cfg(feature = "parallel")]
        let levels = {
            use rayon::prelude::*;
            alphas.par_iter().map(build).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let levels = alphas.iter().map(build).collect();
        Ok(Self { ext, kernel, gamma, alphas, levels })
    }

    /// The same grid restricted to the scales from node `first` upwards.
    pub fn truncated(&self, first: usize) -> Result<Self> {
        if first >= self.alphas.len() {
            return Err(Error::InvalidParameter(format!("no alpha node {first}")));
        }
        Ok(Self {
            ext: self.ext.clone(),
            kernel: self.kernel,
            gamma: self.gamma,
            alphas: self.alphas[first..].to_vec(),
            levels: self.levels[first..].to_vec(),
        })
    }

    pub fn path(&self) -> &SampledPath {
        self.ext.base()
    }

    pub fn extended(&self) -> &ExtendedPath {
        &self.ext
    }

    pub fn kernel(&self) -> MollifierKernel {
        self.kernel
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.ext.dim()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn alpha_min(&self) -> f64 {
        self.alphas[0]
    }

    pub fn n_times(&self) -> usize {
        self.path().n_steps() + 1
    }

    pub fn step(&self) -> f64 {
        self.path().step()
    }

    pub fn horizon(&self) -> f64 {
        self.path().horizon()
    }

    /// Index of the node equal to `alpha` (relative tolerance 1e-9).
    pub fn node_index(&self, alpha: f64) -> Result<usize> {
        self.alphas
            .iter()
            .position(|&a| (a - alpha).abs() <= 1e-9 * a)
            .ok_or(Error::NotAGridNode(alpha))
    }

    pub fn value(&self, m: usize, j: usize) -> &[f64] {
        let d = self.dim();
        &self.levels[m].value[j * d..(j + 1) * d]
    }

    pub fn dt(&self, m: usize, j: usize) -> &[f64] {
        let d = self.dim();
        &self.levels[m].dt[j * d..(j + 1) * d]
    }

    pub fn dalpha(&self, m: usize, j: usize) -> &[f64] {
        let d = self.dim();
        &self.levels[m].da[j * d..(j + 1) * d]
    }

    pub fn point(&self, m: usize, j: usize) -> SheetPoint {
        SheetPoint {
            t: self.path().time(j),
            alpha: self.alphas[m],
            value: self.value(m, j).to_vec(),
            dt: self.dt(m, j).to_vec(),
            dalpha: self.dalpha(m, j).to_vec(),
        }
    }

    /// Trapezoid weights in `t` at the time nodes.
    pub fn time_weights(&self) -> Vec<f64> {
        let n = self.n_times();
        let h = self.step();
        let mut w = vec![h; n];
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
        w
    }

    /// Quadrature weights in `α`: composite Simpson, since the integrands
    /// are smooth in `α` away from zero. Falls back to the trapezoid rule on
    /// node sets so uneven that a Simpson weight turns negative.
    pub fn alpha_weights(&self) -> Vec<f64> {
        if self.alphas.len() == 1 {
            return vec![0.0];
        }
        let w = simpson_weights(&self.alphas);
        if w.iter().all(|&v| v > 0.0) {
            w
        } else {
            trapezoid_weights(&self.alphas)
        }
    }

    /// Trapezoid in `t` of `f(m, j)` at level `m`.
    pub fn integrate_level<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        let n = self.n_times();
        let h = self.step();
        let inner: f64 = (1..n - 1).map(&f).sum();
        h * (inner + 0.5 * (f(0) + f(n - 1)))
    }

    /// Integral of `f(m, j)` over the grid (trapezoid in `t`, [`Self::alpha_weights`]
    /// in `α`) and its per-level `t`-integrals.
    pub fn integrate<F: Fn(usize, usize) -> f64 + Sync>(&self, f: F) -> (f64, Vec<f64>) {
        let per_level = |m: usize| self.integrate_level(|j| f(m, j));
        #[cfg(feature = "parallel")]
        let rows: Vec<f64> = {
            use rayon::prelude::*;
            (0..self.alphas.len()).into_par_iter().map(per_level).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let rows: Vec<f64> = (0..self.alphas.len()).map(per_level).collect();
        let total = self.alpha_weights().iter().zip(&rows).map(|(w, r)| w * r).sum();
        (total, rows)
    }
}

fn level(ext: &ExtendedPath, columns: &[Vec<f64>], kernel: MollifierKernel, alpha: f64) -> Level {
    let d = ext.dim();
    let n = ext.base().n_steps() + 1;
    let stencil = Stencil::new(kernel, alpha, ext.step());
    let mut lvl = Level { value: vec![0.0; n * d], dt: vec![0.0; n * d], da: vec![0.0; n * d] };
    for (c, col) in columns.iter().enumerate() {
        for j in 0..n {
            let [v, dt, da] = stencil.apply_column(col, j + ext.pad());
            lvl.value[j * d + c] = v;
            lvl.dt[j * d + c] = dt;
            lvl.da[j * d + c] = da;
        }
    }
    lvl
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn clamp_radicand(radicand: f64, scale: f64) -> Result<f64> {
    if radicand >= 0.0 {
        Ok(radicand.sqrt())
    } else if radicand >= -1e-12 * scale {
        Ok(0.0)
    } else {
        Err(Error::CorruptedJacobian(radicand))
    }
}

/// Area element `√(|∂_α|²|∂_t|² − ⟨∂_t, ∂_α⟩²)` of the sheet.
pub fn jacobian(dt: &[f64], dalpha: &[f64]) -> Result<f64> {
    let tt = dot(dt, dt);
    let aa = dot(dalpha, dalpha);
    let ta = dot(dt, dalpha);
    clamp_radicand(aa * tt - ta * ta, aa * tt)
}

/// Area element of the graph sheet `(t, X_{t,α})`.
pub fn jacobian_graph(dt: &[f64], dalpha: &[f64]) -> Result<f64> {
    let tt = dot(dt, dt);
    let aa = dot(dalpha, dalpha);
    let ta = dot(dt, dalpha);
    clamp_radicand(aa * (1.0 + tt) - ta * ta, aa * (1.0 + tt))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandMass {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub mass: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub total: f64,
    pub bands: Vec<BandMass>,
    /// Same quadrature applied to `C²κ₁κ₂·α^{2(γ−1)}` over `[0, T]`.
    pub bound_prediction: f64,
    pub holder_constant: f64,
    pub constants: KernelConstants,
}

impl MassReport {
    pub fn within_bound(&self, slack: f64) -> bool {
        self.total <= slack * self.bound_prediction
    }
}

/// Hölder constant of the extended path over the window the sheet reads.
pub fn sheet_holder_constant(grid: &SheetGrid) -> Result<f64> {
    let ext = grid.extended();
    let reach = (grid.alphas.last().copied().unwrap_or(1.0) / ext.step() - 1e-9).ceil() as usize + 1;
    let lo = ext.pad().saturating_sub(reach);
    let hi = (ext.pad() + grid.n_times() - 1 + reach).min(ext.len() - 1);
    let d = ext.dim();
    let window = ext.samples()[lo * d..(hi + 1) * d].to_vec();
    let path = SampledPath::new(d, (hi - lo) as f64 * ext.step(), window, grid.path().meta.clone())?;
    Ok(estimate_holder(&path, grid.gamma)?.constant)
}

/// `∫J_f` with the grid's quadrature; the bound prediction applies the same
/// positive weights to `C²κ₁κ₂·α^{2(γ−1)}`, so the pointwise bound carries
/// over. Bands are integrated by the trapezoid rule between neighbouring
/// scales.
pub fn surface_mass(grid: &SheetGrid) -> Result<MassReport> {
    let (total, rows) = grid.integrate(|m, j| jacobian(grid.dt(m, j), grid.dalpha(m, j)).unwrap_or(f64::NAN));
    if let Some(m) = rows.iter().position(|r| r.is_nan()) {
        let j = (0..grid.n_times()).find(|&j| jacobian(grid.dt(m, j), grid.dalpha(m, j)).is_err()).unwrap_or(0);
        return Err(jacobian(grid.dt(m, j), grid.dalpha(m, j)).err().unwrap_or(Error::CorruptedJacobian(f64::NAN)));
    }
    let constants = grid.kernel.constants(grid.gamma);
    let c = sheet_holder_constant(grid)?;
    let scale = c * c * constants.kappa_1 * constants.kappa_2 * grid.horizon();
    let g2 = 2.0 * (grid.gamma - 1.0);
    let bound_at = |a: f64| scale * a.powf(g2);
    let mut bands = Vec::with_capacity(grid.alphas.len().saturating_sub(1));
    for (m, w) in grid.alphas.windows(2).enumerate() {
        let width = w[1] - w[0];
        let mass = 0.5 * width * (rows[m] + rows[m + 1]);
        let bound = 0.5 * width * (bound_at(w[0]) + bound_at(w[1]));
        bands.push(BandMass { alpha_lo: w[0], alpha_hi: w[1], mass, bound });
    }
    let bound_prediction = grid.alpha_weights().iter().zip(&grid.alphas).map(|(w, &a)| w * bound_at(a)).sum();
    Ok(MassReport { total, bands, bound_prediction, holder_constant: c, constants })
}

/// `Σ_{i<j} ψ_ij(x)(u_i v_j − u_j v_i)`.
fn pair_action(psi: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let d = u.len();
    let mut acc = 0.0;
    let mut p = 0;
    for i in 0..d {
        for j in i + 1..d {
            acc += psi[p] * (u[i] * v[j] - u[j] * v[i]);
            p += 1;
        }
    }
    acc
}

/// `T(ψ) = ∫⟨ψ(X_{t,α}), ∂_t X ∧ ∂_α X⟩ dt dα` over the grid.
pub fn eval_two_current(grid: &SheetGrid, psi: &dyn TwoForm) -> Result<f64> {
    let d = grid.dim();
    if psi.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: psi.dim() });
    }
    let np = pair_count(d);
    let (total, _) = grid.integrate(|m, j| {
        let mut comp = vec![0.0; np];
        psi.eval(grid.value(m, j), &mut comp);
        pair_action(&comp, grid.dt(m, j), grid.dalpha(m, j))
    });
    Ok(total)
}

/// The same action on the graph sheet `Y = (t, X_{t,α})` with
/// `∂_t Y = (1, ∂_t X)` and `∂_α Y = (0, ∂_α X)`.
pub fn eval_two_current_graph(grid: &SheetGrid, psi: &dyn TwoForm) -> Result<f64> {
    let d = grid.dim();
    if psi.dim() != d + 1 {
        return Err(Error::DimensionMismatch { expected: d + 1, got: psi.dim() });
    }
    let np = pair_count(d + 1);
    let (total, _) = grid.integrate(|m, j| {
        let mut comp = vec![0.0; np];
        let (y, u, v) = lift(grid, m, j);
        psi.eval(&y, &mut comp);
        pair_action(&comp, &u, &v)
    });
    Ok(total)
}

/// Graph-lifted point and tangents at node `(m, j)`.
pub(crate) fn lift(grid: &SheetGrid, m: usize, j: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut y = Vec::with_capacity(grid.dim() + 1);
    y.push(grid.path().time(j));
    y.extend_from_slice(grid.value(m, j));
    let mut u = vec![1.0];
    u.extend_from_slice(grid.dt(m, j));
    let mut v = vec![0.0];
    v.extend_from_slice(grid.dalpha(m, j));
    (y, u, v)
}

/// Smallest admissible `α_min` for a path.
pub fn min_alpha(path: &SampledPath) -> f64 {
    alpha_floor(path.step())
}
