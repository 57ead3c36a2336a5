//! Monte Carlo study of the Brownian sheet Jacobian over dyadic strips
//! `S_n = [t₀, t₀+1] × (2^{−n−1}, 2^{−n}]`: strip totals stay constant in
//! `n`, square means halve, and the partial sums over strips grow
//! linearly, so `E∫J_f dt dα` diverges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::MollifierKernel;
use crate::mollify::{check_alpha, smooth_point, Stencil};
use crate::paths::{generate_bm, ExtendedPath, Extension, SampledPath};
use crate::quad::{fit_line, mean_stderr, trapezoid_weights, GL3};
use crate::sheet::jacobian;

/// α nodes per strip, uniform over the strip's α range.
pub const STRIP_ALPHA_NODES: usize = 5;
/// t intervals per unit length for strip `n` are `2^{n + T_REFINE}`.
pub const T_REFINE: u32 = 5;
pub const DEFAULT_HORIZON: f64 = 4.0;
pub const DEFAULT_STEPS: usize = 1 << 15;
pub const DEFAULT_N_MAX: usize = 4;
/// Start of the shifted strip used for the time-shift check.
pub const SHIFTED_START: f64 = 1.3;

/// Quadrature layout of one strip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripGeometry {
    pub n: usize,
    pub t_start: f64,
    /// Number of t intervals over the unit-length strip.
    pub t_intervals: usize,
    pub alpha_nodes: usize,
}

impl StripGeometry {
    pub fn standard(n: usize) -> Self {
        Self { n, t_start: 1.0, t_intervals: 1 << (n as u32 + T_REFINE), alpha_nodes: STRIP_ALPHA_NODES }
    }

    pub fn alpha_range(&self) -> (f64, f64) {
        let hi = 0.5f64.powi(self.n as i32);
        (0.5 * hi, hi)
    }

    pub fn alphas(&self) -> Vec<f64> {
        let (lo, hi) = self.alpha_range();
        let m = self.alpha_nodes - 1;
        (0..=m).map(|i| lo + (hi - lo) * i as f64 / m as f64).collect()
    }

    pub fn squares(&self) -> usize {
        1 << (self.n + 1)
    }
}

/// Strip integral and its split into the dyadic squares `S_{n,k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripMass {
    pub geometry: StripGeometry,
    pub total: f64,
    pub squares: Vec<f64>,
}

/// Stencils of one strip, reusable across paths with the same step.
#[derive(Debug, Clone)]
pub struct StripPlan {
    geometry: StripGeometry,
    first: usize,
    stride: usize,
    stencils: Vec<Stencil>,
    alpha_w: Vec<f64>,
}

fn node_of(t: f64, step: f64) -> Result<usize> {
    let j = (t / step).round();
    if (t / step - j).abs() > 1e-9 || j < 0.0 {
        return Err(Error::NotAGridNode(t));
    }
    Ok(j as usize)
}

impl StripPlan {
    pub fn new(geometry: StripGeometry, kernel: MollifierKernel, step: f64, horizon: f64) -> Result<Self> {
        if geometry.alpha_nodes < 2 {
            return Err(Error::InvalidParameter("a strip needs at least two alpha nodes".into()));
        }
        let squares = geometry.squares();
        if geometry.t_intervals == 0 || !geometry.t_intervals.is_multiple_of(squares) {
            return Err(Error::InvalidParameter(format!(
                "{} t intervals do not split into {squares} squares",
                geometry.t_intervals
            )));
        }
        let (lo, hi) = geometry.alpha_range();
        check_alpha(lo, step)?;
        if geometry.t_start - hi < -1e-12 || geometry.t_start + 1.0 + hi > horizon + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "strip at t = {} with alpha up to {hi} needs samples beyond [0, {horizon}]",
                geometry.t_start
            )));
        }
        let first = node_of(geometry.t_start, step)?;
        let dt = 1.0 / geometry.t_intervals as f64;
        let stride = (dt / step).round() as usize;
        if stride == 0 || (stride as f64 * step - dt).abs() > 1e-9 * dt {
            return Err(Error::BadStride { stride: geometry.t_intervals, n: (1.0 / step).round() as usize });
        }
        let alphas = geometry.alphas();
        let stencils = alphas.iter().map(|&a| Stencil::new(kernel, a, step)).collect();
        let alpha_w = trapezoid_weights(&alphas);
        Ok(Self { geometry, first, stride, stencils, alpha_w })
    }

    pub fn geometry(&self) -> &StripGeometry {
        &self.geometry
    }

    /// Integrate `J_f` over the strip for a path whose coordinate columns are given.
    pub fn integrate(&self, columns: &[Vec<f64>]) -> Result<StripMass> {
        let g = &self.geometry;
        let d = columns.len();
        let nt = g.t_intervals + 1;
        let per_square = g.t_intervals / g.squares();
        let h_t = 1.0 / g.t_intervals as f64;
        let mut dt = vec![0.0; d];
        let mut da = vec![0.0; d];
        // α-integrated Jacobian at every t node
        let mut profile = vec![0.0; nt];
        for (st, &wa) in self.stencils.iter().zip(&self.alpha_w) {
            for (i, p) in profile.iter_mut().enumerate() {
                let j = self.first + i * self.stride;
                for c in 0..d {
                    let r = st.apply_column(&columns[c], j);
                    dt[c] = r[1];
                    da[c] = r[2];
                }
                *p += wa * jacobian(&dt, &da)?;
            }
        }
        let squares: Vec<f64> = (0..g.squares())
            .map(|k| {
                let seg = &profile[k * per_square..=(k + 1) * per_square];
                let inner: f64 = seg[1..seg.len() - 1].iter().sum();
                h_t * (inner + 0.5 * (seg[0] + seg[seg.len() - 1]))
            })
            .collect();
        let total = squares.iter().sum();
        Ok(StripMass { geometry: *g, total, squares })
    }
}

fn columns(path: &SampledPath) -> Vec<Vec<f64>> {
    (0..path.dim()).map(|c| path.points().map(|p| p[c]).collect()).collect()
}

/// `∫_{S_n} J_f` on the standard strip over `[1, 2]`, trapezoid in both
/// directions with `t_intervals` t intervals.
pub fn strip_mass(path: &SampledPath, kernel: MollifierKernel, n: usize, t_intervals: usize) -> Result<f64> {
    let geometry = StripGeometry { t_intervals, ..StripGeometry::standard(n) };
    strip_mass_at(path, kernel, geometry).map(|m| m.total)
}

pub fn strip_mass_at(path: &SampledPath, kernel: MollifierKernel, geometry: StripGeometry) -> Result<StripMass> {
    let plan = StripPlan::new(geometry, kernel, path.step(), path.horizon())?;
    plan.integrate(&columns(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftCheck {
    pub t_start: f64,
    pub total: f64,
    pub stderr: f64,
    /// `|Â_0(shifted) − Â_0|` in units of the standard error of `Â_0`.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripReport {
    pub n_max: usize,
    pub replicas: usize,
    pub dim: usize,
    pub kernel: MollifierKernel,
    pub base_seed: u64,
    /// `Â_n`, `n = 0..=n_max`.
    pub totals: Vec<f64>,
    pub total_stderr: Vec<f64>,
    /// `â_n`: mean over replicas and squares of `A_{n,k}`.
    pub square_means: Vec<f64>,
    pub square_stderr: Vec<f64>,
    /// `Â_n / Â_0`.
    pub total_ratios: Vec<f64>,
    /// `â_n / â_{n−1}` for `n ≥ 1`.
    pub square_ratios: Vec<f64>,
    /// `Σ_{m≤n} Â_m`.
    pub partial_sums: Vec<f64>,
    /// Slope of the partial sums against `n`.
    pub partial_slope: f64,
    pub shift: ShiftCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl StripReport {
    pub fn checks(&self) -> Vec<Check> {
        let mut out = Vec::new();
        let band = |v: &[f64], lo: f64, hi: f64| v.iter().all(|r| (lo..=hi).contains(r));
        out.push(Check {
            name: "strip totals constant".into(),
            passed: band(&self.total_ratios[1..], 0.8, 1.2),
            detail: format!("ratios {:?} within [0.8, 1.2]", &self.total_ratios[1..]),
        });
        out.push(Check {
            name: "square means halve".into(),
            passed: band(&self.square_ratios, 0.4, 0.6),
            detail: format!("ratios {:?} within [0.4, 0.6]", self.square_ratios),
        });
        let a0 = self.totals[0];
        out.push(Check {
            name: "partial sums grow linearly".into(),
            passed: (self.partial_slope - a0).abs() <= 0.25 * a0,
            detail: format!("slope {} against A_0 {a0}", self.partial_slope),
        });
        out.push(Check {
            name: "time shift invariance".into(),
            passed: self.shift.deviation < 3.0,
            detail: format!("shifted A_0 {} differs by {:.2} standard errors", self.shift.total, self.shift.deviation),
        });
        out
    }

    pub fn passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingOptions {
    pub replicas: usize,
    pub n_max: usize,
    pub base_seed: u64,
    pub dim: usize,
    pub kernel: MollifierKernel,
    pub n_steps: usize,
    pub horizon: f64,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            replicas: 200,
            n_max: DEFAULT_N_MAX,
            base_seed: 0,
            dim: 2,
            kernel: MollifierKernel::Epanechnikov,
            n_steps: DEFAULT_STEPS,
            horizon: DEFAULT_HORIZON,
        }
    }
}

/// Strip totals, square means, partial sums and the time-shift check for
/// `replicas` Brownian paths with seeds `base_seed + r`.
pub fn scaling_experiment(opts: &ScalingOptions) -> Result<StripReport> {
    if opts.replicas < 50 {
        return Err(Error::InvalidParameter(format!("{} replicas; at least 50 are needed", opts.replicas)));
    }
    let step = opts.horizon / opts.n_steps as f64;
    let mut plans = (0..=opts.n_max)
        .map(|n| StripPlan::new(StripGeometry::standard(n), opts.kernel, step, opts.horizon))
        .collect::<Result<Vec<_>>>()?;
    // the shifted strip starts on the sample node closest to SHIFTED_START
    let shifted_start = (SHIFTED_START / step).round() * step;
    let shifted = StripGeometry { t_start: shifted_start, ..StripGeometry::standard(0) };
    plans.push(StripPlan::new(shifted, opts.kernel, step, opts.horizon)?);

    let seeds: Vec<u64> = (0..opts.replicas as u64).map(|r| opts.base_seed.wrapping_add(r)).collect();
    let per = crate::par::map(&seeds, |&seed| -> Result<Vec<(f64, f64)>> {
        let path = generate_bm(opts.dim, opts.n_steps, opts.horizon, seed)?;
        let cols = columns(&path);
        plans
            .iter()
            .map(|p| {
                let m = p.integrate(&cols)?;
                let mean = m.squares.iter().sum::<f64>() / m.squares.len() as f64;
                Ok((m.total, mean))
            })
            .collect()
    });
    let per: Vec<Vec<(f64, f64)>> = per.into_iter().collect::<Result<_>>()?;

    let stat = |i: usize, q: usize| {
        let v: Vec<f64> = per.iter().map(|r| if q == 0 { r[i].0 } else { r[i].1 }).collect();
        mean_stderr(&v)
    };
    let levels = opts.n_max + 1;
    let (totals, total_stderr): (Vec<f64>, Vec<f64>) = (0..levels).map(|n| stat(n, 0)).unzip();
    let (square_means, square_stderr): (Vec<f64>, Vec<f64>) = (0..levels).map(|n| stat(n, 1)).unzip();
    let total_ratios = totals.iter().map(|t| t / totals[0]).collect();
    let square_ratios = square_means.windows(2).map(|w| w[1] / w[0]).collect();
    let partial_sums: Vec<f64> = totals
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    let xs: Vec<f64> = (0..levels).map(|n| n as f64).collect();
    let partial_slope = fit_line(&xs, &partial_sums).map_or(totals[0], |f| f.slope);
    let (s_total, s_err) = stat(levels, 0);
    let shift = ShiftCheck {
        t_start: shifted_start,
        total: s_total,
        stderr: s_err,
        deviation: (s_total - totals[0]).abs() / total_stderr[0],
    };
    Ok(StripReport {
        n_max: opts.n_max,
        replicas: opts.replicas,
        dim: opts.dim,
        kernel: opts.kernel,
        base_seed: opts.base_seed,
        totals,
        total_stderr,
        square_means,
        square_stderr,
        total_ratios,
        square_ratios,
        partial_sums,
        partial_slope,
        shift,
    })
}

/// Sheet partials written as stochastic integrals against the path,
/// next to the same partials from the convolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationByParts {
    pub t: f64,
    pub alpha: f64,
    pub dt_integral: Vec<f64>,
    pub dt_convolution: Vec<f64>,
    pub dalpha_integral: Vec<f64>,
    pub dalpha_convolution: Vec<f64>,
}

impl IntegrationByParts {
    pub fn max_relative_gap(&self) -> f64 {
        let gap = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).map(|(x, y)| (x - y).abs() / (1.0 + y.abs())).fold(0.0, f64::max)
        };
        gap(&self.dt_integral, &self.dt_convolution).max(gap(&self.dalpha_integral, &self.dalpha_convolution))
    }
}

/// `∂_t X_{t,α} = ∫η_α(t−s)dX_s` and `∂_α X_{t,α} = −∫η_α(t−s)(t−s)/α dX_s`,
/// with `dX` the increments of the piecewise-linear path, compared with the
/// convolution derivatives. `t ± α` must stay inside the sampled window.
pub fn integration_by_parts(
    path: &SampledPath,
    kernel: MollifierKernel,
    t: f64,
    alpha: f64,
) -> Result<IntegrationByParts> {
    let h = path.step();
    check_alpha(alpha, h)?;
    if t - alpha < 0.0 || t + alpha > path.horizon() {
        return Err(Error::InvalidParameter(format!("support of ({t}, {alpha}) leaves the sampled window")));
    }
    let d = path.dim();
    let kinks: Vec<f64> = kernel.interior_kinks().iter().map(|k| t - alpha * k).collect();
    let mut di = vec![0.0; d];
    let mut ai = vec![0.0; d];
    let j_lo = ((t - alpha) / h).floor() as usize;
    let j_hi = (((t + alpha) / h).ceil() as usize).min(path.n_steps());
    let mut pieces = Vec::with_capacity(4);
    for j in j_lo..j_hi {
        let a = (j as f64 * h).max(t - alpha);
        let b = ((j + 1) as f64 * h).min(t + alpha);
        if b <= a {
            continue;
        }
        pieces.clear();
        pieces.push(a);
        pieces.extend(kinks.iter().copied().filter(|&k| k > a && k < b));
        pieces.push(b);
        let (mut wd, mut wa) = (0.0, 0.0);
        for p in pieces.windows(2) {
            let half = 0.5 * (p[1] - p[0]);
            let mid = 0.5 * (p[0] + p[1]);
            for &(node, gw) in &GL3 {
                let v = t - (mid + half * node);
                let e = kernel.eval(v / alpha) / alpha;
                wd += half * gw * e;
                wa -= half * gw * e * v / alpha;
            }
        }
        let (x0, x1) = (path.point(j), path.point(j + 1));
        for c in 0..d {
            let rate = (x1[c] - x0[c]) / h;
            di[c] += wd * rate;
            ai[c] += wa * rate;
        }
    }
    let ext = ExtendedPath::new(path, Extension::Constant);
    let pt = smooth_point(&ext, kernel, t, alpha)?;
    Ok(IntegrationByParts {
        t,
        alpha,
        dt_integral: di,
        dt_convolution: pt.dt,
        dalpha_integral: ai,
        dalpha_convolution: pt.dalpha,
    })
}
