//! Random Fourier coefficients `Z_k = ∫e^{i⟨k,X_t⟩}dX_t` of the current
//! carried by a path, on a cubic lattice of wavevectors: reconstruction of
//! line integrals, `H^{−s}` norm estimates and the second-moment growth
//! table for the midpoint scheme.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::OneForm;
use crate::oracle::RiemannScheme;
use crate::paths::SampledPath;
use crate::quad::{fit_line, mean_stderr};

/// Uniform lattice of `M^d` wavevectors in `[−K, K]^d`, `M` odd.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveGrid {
    pub dim: usize,
    pub cutoff: f64,
    pub resolution: usize,
}

impl WaveGrid {
    pub fn new(dim: usize, cutoff: f64, resolution: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::InvalidParameter(format!("cutoff {cutoff} must be positive")));
        }
        if resolution < 3 || resolution.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("resolution {resolution} must be odd and at least 3")));
        }
        Ok(Self { dim, cutoff, resolution })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.cutoff / (self.resolution - 1) as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of `k = 0`.
    pub fn center(&self) -> usize {
        (self.len() - 1) / 2
    }

    /// Flat index of `−k`.
    pub fn negated(&self, i: usize) -> usize {
        self.len() - 1 - i
    }

    /// Per-axis lattice indices, axis 0 slowest.
    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let m = self.resolution;
        let mut idx = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            idx[a] = i % m;
            i /= m;
        }
        idx
    }

    pub fn node(&self, i: usize) -> Vec<f64> {
        let half = (self.resolution - 1) / 2;
        let dk = self.spacing();
        self.multi_index(i).iter().map(|&m| (m as f64 - half as f64) * dk).collect()
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.node(i).iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficients {
    pub grid: WaveGrid,
    pub scheme: RiemannScheme,
    /// `len × d` row-major.
    pub z: Vec<Complex64>,
}

impl FourierCoefficients {
    pub fn at(&self, i: usize) -> &[Complex64] {
        let d = self.grid.dim;
        &self.z[i * d..(i + 1) * d]
    }

    pub fn norm_sqr(&self, i: usize) -> f64 {
        self.at(i).iter().map(|c| c.norm_sqr()).sum()
    }
}

/// `e^{i k_m x_j}` for every lattice index `m` of one axis and every sample.
/// Negative frequencies are conjugates of the positive ones, so the
/// coefficients are exactly conjugate-symmetric.
fn axis_table(path: &SampledPath, grid: &WaveGrid, axis: usize) -> Vec<Vec<Complex64>> {
    let m = grid.resolution;
    let half = (m - 1) / 2;
    let dk = grid.spacing();
    let n = path.n_steps() + 1;
    let mut table = vec![Vec::new(); m];
    for idx in half..m {
        let k = (idx - half) as f64 * dk;
        table[idx] = (0..n)
            .map(|j| {
                let (s, c) = (k * path.point(j)[axis]).sin_cos();
                Complex64::new(c, s)
            })
            .collect();
    }
    for idx in 0..half {
        table[idx] = table[m - 1 - idx].iter().map(|z| z.conj()).collect();
    }
    table
}

fn check_path(path: &SampledPath, grid: &WaveGrid) -> Result<()> {
    if path.dim() != grid.dim {
        return Err(Error::DimensionMismatch { expected: grid.dim, got: path.dim() });
    }
    Ok(())
}

/// Left- and midpoint-scheme coefficients in one pass.
pub fn compute_zk_pair(path: &SampledPath, grid: &WaveGrid) -> Result<(FourierCoefficients, FourierCoefficients)> {
    check_path(path, grid)?;
    let d = grid.dim;
    let n = path.n_steps();
    let tables: Vec<_> = (0..d).map(|a| axis_table(path, grid, a)).collect();
    let incr: Vec<f64> = (0..n)
        .flat_map(|j| (0..d).map(move |c| (j, c)))
        .map(|(j, c)| path.point(j + 1)[c] - path.point(j)[c])
        .collect();
    let zero = Complex64::new(0.0, 0.0);
    let mut left = vec![zero; grid.len() * d];
    let mut mid = vec![zero; grid.len() * d];
    let mut phase = vec![zero; n + 1];
    let center = grid.center();
    for i in center + 1..grid.len() {
        let idx = grid.multi_index(i);
        phase.copy_from_slice(&tables[0][idx[0]]);
        for a in 1..d {
            for (p, t) in phase.iter_mut().zip(&tables[a][idx[a]]) {
                *p *= t;
            }
        }
        let mut zl = vec![zero; d];
        let mut zm = vec![zero; d];
        for j in 0..n {
            let e = phase[j];
            let avg = 0.5 * (phase[j] + phase[j + 1]);
            for c in 0..d {
                let dx = incr[j * d + c];
                zl[c] += e * dx;
                zm[c] += avg * dx;
            }
        }
        let neg = grid.negated(i);
        for c in 0..d {
            left[i * d + c] = zl[c];
            mid[i * d + c] = zm[c];
            left[neg * d + c] = zl[c].conj();
            mid[neg * d + c] = zm[c].conj();
        }
    }
    for c in 0..d {
        let total = Complex64::new(path.end()[c] - path.start()[c], 0.0);
        left[center * d + c] = total;
        mid[center * d + c] = total;
    }
    Ok((
        FourierCoefficients { grid: *grid, scheme: RiemannScheme::Left, z: left },
        FourierCoefficients { grid: *grid, scheme: RiemannScheme::Midpoint, z: mid },
    ))
}

/// `Z_k = Σ_j w_j(k)·ΔX_j` with `w_j` the scheme's evaluation of `e^{i⟨k,X⟩}`.
pub fn compute_zk(path: &SampledPath, grid: &WaveGrid, scheme: RiemannScheme) -> Result<FourierCoefficients> {
    let (left, mid) = compute_zk_pair(path, grid)?;
    match scheme {
        RiemannScheme::Left => Ok(left),
        RiemannScheme::Midpoint => Ok(mid),
        RiemannScheme::Right => Err(Error::InvalidParameter("Fourier coefficients use the left or midpoint scheme".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub value: f64,
    pub imag: f64,
}

impl Reconstruction {
    /// `|imag| / |value|`.
    pub fn relative_imag(&self) -> f64 {
        if self.imag == 0.0 {
            0.0
        } else {
            self.imag.abs() / self.value.abs()
        }
    }
}

/// `(2π)^{−d} Σ_k ⟨φ̂(k), Z_k⟩·ΔV` over the lattice.
pub fn reconstruct(phi: &dyn OneForm, coeffs: &FourierCoefficients) -> Result<Reconstruction> {
    let grid = &coeffs.grid;
    let d = grid.dim;
    if phi.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: phi.dim() });
    }
    let mut hat = vec![Complex64::new(0.0, 0.0); d];
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..grid.len() {
        let k = grid.node(i);
        if !phi.fourier(&k, &mut hat) {
            return Err(Error::InvalidParameter("form has no closed-form Fourier transform".into()));
        }
        for (h, z) in hat.iter().zip(coeffs.at(i)) {
            acc += h * z;
        }
    }
    let scale = grid.cell_volume() / (2.0 * std::f64::consts::PI).powi(d as i32);
    let out = Reconstruction { value: acc.re * scale, imag: acc.im * scale };
    if out.imag.abs() > 0.05 * out.value.abs() {
        return Err(Error::Reconstruction { value: out.value, imag: out.imag });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevEstimate {
    pub s: f64,
    pub value: f64,
    pub stderr: f64,
    pub per_replica: Vec<f64>,
    /// Share of the ensemble mean coming from `K/2 < |k| ≤ K`.
    pub tail_trend: f64,
}

/// Monte Carlo mean of `∫_{|k|≤K} |Z_k|²(1+|k|²)^{−s} dk` over an ensemble.
pub fn sobolev_estimate(
    paths: &[SampledPath],
    grid: &WaveGrid,
    s: f64,
    scheme: RiemannScheme,
) -> Result<SobolevEstimate> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("s = {s} must be positive")));
    }
    if paths.len() < 2 {
        return Err(Error::InvalidParameter("ensemble needs at least two paths".into()));
    }
    let k_max = grid.cutoff;
    let weights: Vec<(f64, bool)> = (0..grid.len())
        .map(|i| {
            let r = grid.norm(i);
            let w = if r <= k_max * (1.0 + 1e-12) { (1.0 + r * r).powf(-s) } else { 0.0 };
            (w, r > 0.5 * k_max)
        })
        .collect();
    let vol = grid.cell_volume();
    let parts = crate::par::map(paths, |p| -> Result<(f64, f64)> {
        let z = compute_zk(p, grid, scheme)?;
        let mut total = 0.0;
        let mut outer = 0.0;
        for (i, &(w, is_outer)) in weights.iter().enumerate() {
            let v = w * z.norm_sqr(i) * vol;
            total += v;
            if is_outer {
                outer += v;
            }
        }
        Ok((total, outer))
    });
    let parts: Vec<(f64, f64)> = parts.into_iter().collect::<Result<_>>()?;
    let per_replica: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let (value, stderr) = mean_stderr(&per_replica);
    let outer: f64 = parts.iter().map(|p| p.1).sum();
    let total: f64 = per_replica.iter().sum();
    let tail_trend = if total > 0.0 { outer / total } else { 0.0 };
    Ok(SobolevEstimate { s, value, stderr, per_replica, tail_trend })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgassRow {
    /// Bin centre: `|k|` rounded to the lattice spacing.
    pub k_norm: f64,
    pub nodes: usize,
    /// `Ê|Z_k|²` for the midpoint scheme, averaged over the bin.
    pub mean_sq: f64,
    pub stderr: f64,
    /// `Ê|Z_k|²` for the left scheme.
    pub left_mean_sq: f64,
    pub left_stderr: f64,
    /// `Ê|Z_k^{mid} − Z_k^{left}|²`.
    pub gap: f64,
    pub gap_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgassReport {
    pub rows: Vec<AlgassRow>,
    /// Log-log slope of the midpoint moments over `fit_range`.
    pub slope: f64,
    pub fit_range: (f64, f64),
    pub replicas: usize,
}

impl AlgassReport {
    pub fn row_at(&self, k_norm: f64) -> Option<&AlgassRow> {
        self.rows.iter().find(|r| (r.k_norm - k_norm).abs() < 1e-9)
    }
}

/// Binned second moments of the midpoint and left coefficients, the
/// midpoint-versus-left gap, and the log-log slope of the midpoint moments
/// over `|k| ∈ [4, K]`.
pub fn algass_growth_test(paths: &[SampledPath], grid: &WaveGrid) -> Result<AlgassReport> {
    algass_growth_test_over(paths, grid, (4.0, grid.cutoff))
}

pub fn algass_growth_test_over(paths: &[SampledPath], grid: &WaveGrid, fit_range: (f64, f64)) -> Result<AlgassReport> {
    if paths.len() < 2 {
        return Err(Error::InvalidParameter("ensemble needs at least two paths".into()));
    }
    let dk = grid.spacing();
    let k_max = grid.cutoff;
    let bins: Vec<Option<usize>> = (0..grid.len())
        .map(|i| {
            let r = grid.norm(i);
            (r <= k_max * (1.0 + 1e-12)).then(|| (r / dk).round() as usize)
        })
        .collect();
    let n_bins = bins.iter().flatten().max().map_or(0, |b| b + 1);
    let mut counts = vec![0usize; n_bins];
    for b in bins.iter().flatten() {
        counts[*b] += 1;
    }
    // per replica: bin averages of |Z_mid|², |Z_left|², |Z_mid − Z_left|²
    let per = crate::par::map(paths, |p| -> Result<Vec<[f64; 3]>> {
        let (left, mid) = compute_zk_pair(p, grid)?;
        let mut acc = vec![[0.0; 3]; n_bins];
        for (i, b) in bins.iter().enumerate() {
            let Some(b) = b else { continue };
            let (zl, zm) = (left.at(i), mid.at(i));
            let diff: f64 = zl.iter().zip(zm).map(|(a, b)| (b - a).norm_sqr()).sum();
            acc[*b][0] += mid.norm_sqr(i);
            acc[*b][1] += left.norm_sqr(i);
            acc[*b][2] += diff;
        }
        for (a, &c) in acc.iter_mut().zip(&counts) {
            if c > 0 {
                for v in a.iter_mut() {
                    *v /= c as f64;
                }
            }
        }
        Ok(acc)
    });
    let per: Vec<Vec<[f64; 3]>> = per.into_iter().collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for b in 0..n_bins {
        if counts[b] == 0 {
            continue;
        }
        let col = |q: usize| mean_stderr(&per.iter().map(|r| r[b][q]).collect::<Vec<_>>());
        let (m, se) = col(0);
        let (lm, lse) = col(1);
        let (g, gse) = col(2);
        rows.push(AlgassRow {
            k_norm: b as f64 * dk,
            nodes: counts[b],
            mean_sq: m,
            stderr: se,
            left_mean_sq: lm,
            left_stderr: lse,
            gap: g,
            gap_stderr: gse,
        });
    }
    let (lo, hi) = fit_range;
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.k_norm >= lo - 1e-9 && r.k_norm <= hi + 1e-9 && r.mean_sq > 0.0)
        .map(|r| (r.k_norm.ln(), r.mean_sq.ln()))
        .unzip();
    let slope = fit_line(&xs, &ys).map_or(f64::NAN, |f| f.slope);
    Ok(AlgassReport { rows, slope, fit_range, replicas: paths.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::builtin;
    use crate::oracle::riemann_sum;
    use crate::paths::{generate_analytic, generate_bm, AnalyticCurve};

    #[test]
    fn grid_geometry() {
        let g = WaveGrid::new(2, 12.0, 49).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.node(g.center()), vec![0.0, 0.0]);
        for i in [0, 7, 100, 2400] {
            let (a, b) = (g.node(i), g.node(g.negated(i)));
            assert_eq!(a[0], -b[0]);
            assert_eq!(a[1], -b[1]);
        }
        assert!(WaveGrid::new(2, 12.0, 48).is_err());
    }

    #[test]
    fn coefficients_are_conjugate_symmetric_and_telescope() {
        let p = generate_bm(2, 512, 1.0, 5).unwrap();
        let g = WaveGrid::new(2, 6.0, 13).unwrap();
        for scheme in [RiemannScheme::Left, RiemannScheme::Midpoint] {
            let z = compute_zk(&p, &g, scheme).unwrap();
            for i in 0..g.len() {
                let (a, b) = (z.at(i), z.at(g.negated(i)));
                for c in 0..2 {
                    assert_eq!(a[c], b[c].conj());
                }
            }
            let z0 = z.at(g.center());
            assert_eq!(z0[0].re, p.end()[0] - p.start()[0]);
            assert_eq!(z0[1].im, 0.0);
        }
    }

    #[test]
    fn constant_path_has_no_coefficients() {
        let p = generate_analytic(&AnalyticCurve::Constant { point: vec![0.3, -1.0] }, 64, 1.0).unwrap();
        let g = WaveGrid::new(2, 4.0, 9).unwrap();
        let z = compute_zk(&p, &g, RiemannScheme::Left).unwrap();
        assert!(z.z.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn left_coefficient_matches_direct_sum() {
        let p = generate_bm(2, 256, 1.0, 8).unwrap();
        let g = WaveGrid::new(2, 3.0, 7).unwrap();
        let z = compute_zk(&p, &g, RiemannScheme::Left).unwrap();
        let i = 30;
        let k = g.node(i);
        let mut direct = [Complex64::new(0.0, 0.0); 2];
        for j in 0..256 {
            let x = p.point(j);
            let e = Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1]);
            for c in 0..2 {
                direct[c] += e * (p.point(j + 1)[c] - x[c]);
            }
        }
        for c in 0..2 {
            assert!((direct[c] - z.at(i)[c]).norm() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_of_the_gaussian_form() {
        let p = generate_bm(2, 1024, 1.0, 5).unwrap();
        let g = WaveGrid::new(2, 12.0, 49).unwrap();
        let phi = builtin("gaussian", 2).unwrap().as_one_form().unwrap();
        let z = compute_zk(&p, &g, RiemannScheme::Left).unwrap();
        let r = reconstruct(phi.as_ref(), &z).unwrap();
        let direct = riemann_sum(&p, phi.as_ref(), RiemannScheme::Left, 1).unwrap();
        assert!((r.value - direct).abs() < 1e-6 * (1.0 + direct.abs()), "{} vs {direct}", r.value);
        assert!(r.relative_imag() < 1e-10);
    }
}
