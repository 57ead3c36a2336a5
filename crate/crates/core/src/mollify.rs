//! The mollified sheet `X_{t,α} = (η_α ∗ X̃)_t` and its two partials.
//!
//! The extended path is taken piecewise linear between samples, so on every
//! sub-interval between sample nodes, kernel kinks and support ends the
//! integrand is a polynomial times a linear function. Three-point
//! Gauss–Legendre integrates both shipped kernels exactly there.
//!
//! Both partials are computed from the centered integrand
//! `∫ ∂η_α(t−s) (X̃_s − X̃_t) ds`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::MollifierKernel;
use crate::paths::ExtendedPath;
use crate::quad::GL3;

/// Sheet samples closer than this many path steps are rejected.
pub const FLOOR_STEPS: f64 = 4.0;

/// Smallest admissible smoothing scale for a path with step `h`.
pub fn alpha_floor(step: f64) -> f64 {
    FLOOR_STEPS * step
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SheetPoint {
    pub t: f64,
    pub alpha: f64,
    pub value: Vec<f64>,
    pub dt: Vec<f64>,
    pub dalpha: Vec<f64>,
}

pub(crate) fn check_alpha(alpha: f64, step: f64) -> Result<()> {
    let floor = alpha_floor(step);
    if !(alpha >= floor * (1.0 - 1e-12)) {
        return Err(Error::UnderResolved { alpha, floor });
    }
    if alpha > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!("alpha {alpha} exceeds 1")));
    }
    Ok(())
}

/// Kernel weights at lag `v = t − s` for the value and the two partials.
#[inline]
fn weights(kernel: MollifierKernel, v: f64, alpha: f64) -> [f64; 3] {
    let r = v / alpha;
    let e = kernel.eval(r);
    let de = kernel.deriv(r);
    let inv = 1.0 / alpha;
    [e * inv, de * inv * inv, -(e + r * de) * inv * inv]
}

/// Evaluate the sheet and both partials at an arbitrary `(t, α)`.
pub fn smooth_point(ext: &ExtendedPath, kernel: MollifierKernel, t: f64, alpha: f64) -> Result<SheetPoint> {
    let h = ext.step();
    check_alpha(alpha, h)?;
    let horizon = ext.base().horizon();
    if !(t >= -1e-12 && t <= horizon + 1e-12) {
        return Err(Error::InvalidParameter(format!("t = {t} outside [0, {horizon}]")));
    }
    let d = ext.dim();
    let lo = t - alpha;
    let hi = t + alpha;

    let mut breaks: Vec<f64> = Vec::with_capacity((2.0 * alpha / h) as usize + 8);
    breaks.push(lo);
    let t0 = ext.first_time();
    let first = ((lo - t0) / h).floor() as i64 + 1;
    let mut j = first.max(0);
    loop {
        let s = t0 + j as f64 * h;
        if s >= hi {
            break;
        }
        if s > lo {
            breaks.push(s);
        }
        j += 1;
    }
    for &k in kernel.interior_kinks() {
        breaks.push(t - alpha * k);
    }
    breaks.push(hi);
    breaks.sort_by(|a, b| a.total_cmp(b));

    let mut center = vec![0.0; d];
    ext.value_at(t, &mut center);
    let mut acc = [vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut xs = vec![0.0; d];
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= 0.0 {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for &(node, gw) in &GL3 {
            let s = mid + half * node;
            ext.value_at(s, &mut xs);
            let kw = weights(kernel, t - s, alpha);
            for c in 0..d {
                let dx = xs[c] - center[c];
                for q in 0..3 {
                    acc[q][c] += half * gw * kw[q] * dx;
                }
            }
        }
    }
    let [mut value, dt, dalpha] = acc;
    for c in 0..d {
        value[c] += center[c];
    }
    Ok(SheetPoint { t, alpha, value, dt, dalpha })
}

pub fn smooth_value(ext: &ExtendedPath, kernel: MollifierKernel, t: f64, alpha: f64) -> Result<Vec<f64>> {
    smooth_point(ext, kernel, t, alpha).map(|p| p.value)
}

pub fn smooth_dt(ext: &ExtendedPath, kernel: MollifierKernel, t: f64, alpha: f64) -> Result<Vec<f64>> {
    smooth_point(ext, kernel, t, alpha).map(|p| p.dt)
}

pub fn smooth_dalpha(ext: &ExtendedPath, kernel: MollifierKernel, t: f64, alpha: f64) -> Result<Vec<f64>> {
    smooth_point(ext, kernel, t, alpha).map(|p| p.dalpha)
}

/// Convolution weights against the samples for an evaluation point that is
/// itself a sample node. Lags run over `-reach..=reach` samples.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub alpha: f64,
    reach: usize,
    /// Interleaved `[value, dt, dalpha]` per lag.
    w: Vec<[f64; 3]>,
}

impl Stencil {
    pub fn new(kernel: MollifierKernel, alpha: f64, step: f64) -> Self {
        let h = step;
        let reach = (alpha / h - 1e-9).ceil() as usize;
        let r = reach as i64;
        let mut w = vec![[0.0; 3]; 2 * reach + 1];
        // kink positions in u = s − t
        let kinks: Vec<f64> = kernel.interior_kinks().iter().map(|k| -alpha * k).collect();
        let mut pieces = Vec::with_capacity(4);
        for j in -r..r {
            let a = (j as f64 * h).max(-alpha);
            let b = ((j + 1) as f64 * h).min(alpha);
            if b <= a {
                continue;
            }
            pieces.clear();
            pieces.push(a);
            pieces.extend(kinks.iter().copied().filter(|&k| k > a && k < b));
            pieces.push(b);
            let base = j as f64 * h;
            let il = (j + r) as usize;
            for p in pieces.windows(2) {
                let half = 0.5 * (p[1] - p[0]);
                let mid = 0.5 * (p[0] + p[1]);
                for &(node, gw) in &GL3 {
                    let u = mid + half * node;
                    let kw = weights(kernel, -u, alpha);
                    let right = (u - base) / h;
                    let left = 1.0 - right;
                    for q in 0..3 {
                        let m = half * gw * kw[q];
                        w[il][q] += m * left;
                        w[il + 1][q] += m * right;
                    }
                }
            }
        }
        Self { alpha, reach, w }
    }

    pub fn reach(&self) -> usize {
        self.reach
    }

    /// Apply to one coordinate column at sample index `center`.
    #[inline]
    pub fn apply_column(&self, column: &[f64], center: usize) -> [f64; 3] {
        let x0 = column[center];
        let lo = center - self.reach;
        let window = &column[lo..=center + self.reach];
        let (mut v, mut dt, mut da) = (0.0, 0.0, 0.0);
        for (x, w) in window.iter().zip(&self.w) {
            let dx = x - x0;
            v += w[0] * dx;
            dt += w[1] * dx;
            da += w[2] * dx;
        }
        [x0 + v, dt, da]
    }
}
