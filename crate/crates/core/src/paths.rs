//! Uniformly sampled paths in ℝ^d: fractional Brownian motion, Brownian
//! motion, analytic test curves, their extensions past the endpoints, and a
//! dyadic-lag Hölder diagnostic.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Provenance carried along with every path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMeta {
    pub generator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<String>,
}

impl PathMeta {
    pub fn tagged(generator: &str) -> Self {
        Self { generator: generator.to_owned(), seed: None, hurst: None, descriptor: None }
    }
}

/// A curve in ℝ^d sampled at `t_j = j·T/N`, `j = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    dim: usize,
    horizon: f64,
    n_steps: usize,
    /// Row-major `(N+1) × d`.
    data: Vec<f64>,
    pub meta: PathMeta,
}

impl SampledPath {
    pub fn new(dim: usize, horizon: f64, data: Vec<f64>, meta: PathMeta) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon {horizon} must be positive")));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter("sample buffer is not a multiple of the dimension".into()));
        }
        let rows = data.len() / dim;
        if rows < 3 {
            return Err(Error::InvalidParameter(format!("need at least 2 steps, got {}", rows.saturating_sub(1))));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite sample".into()));
        }
        Ok(Self { dim, horizon, n_steps: rows - 1, data, meta })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.horizon / self.n_steps as f64
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn start(&self) -> &[f64] {
        self.point(0)
    }

    pub fn end(&self) -> &[f64] {
        self.point(self.n_steps)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Linear interpolation of the samples; `t` is clamped into `[0, T]`.
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let h = self.step();
        let x = (t / h).clamp(0.0, self.n_steps as f64);
        let j = (x.floor() as usize).min(self.n_steps - 1);
        let w = x - j as f64;
        let (a, b) = (self.point(j), self.point(j + 1));
        for c in 0..self.dim {
            out[c] = a[c] + w * (b[c] - a[c]);
        }
    }

    /// Every `stride`-th sample, keeping the horizon.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 || !self.n_steps.is_multiple_of(stride) || self.n_steps / stride < 2 {
            return Err(Error::BadStride { stride, n: self.n_steps });
        }
        let data = (0..=self.n_steps)
            .step_by(stride)
            .flat_map(|j| self.point(j).iter().copied())
            .collect();
        Self::new(self.dim, self.horizon, data, self.meta.clone())
    }

    /// The time-reversed path `t ↦ X_{T−t}`.
    pub fn reversed(&self) -> Self {
        let data = (0..=self.n_steps)
            .rev()
            .flat_map(|j| self.point(j).iter().copied())
            .collect();
        Self { data, ..self.clone() }
    }

    /// Resample the piecewise-linear curve at `n_steps` uniform steps.
    pub fn resample(&self, n_steps: usize) -> Result<Self> {
        self.time_changed(n_steps, |t| t)
    }

    /// Samples of `t ↦ X(τ(t))` for an increasing map `τ` of `[0,T]` onto itself.
    pub fn time_changed<F: Fn(f64) -> f64>(&self, n_steps: usize, tau: F) -> Result<Self> {
        let h = self.horizon / n_steps as f64;
        let mut data = vec![0.0; (n_steps + 1) * self.dim];
        for (j, row) in data.chunks_exact_mut(self.dim).enumerate() {
            self.interpolate(tau(j as f64 * h), row);
        }
        let mut meta = self.meta.clone();
        meta.generator = format!("{}+resampled", self.meta.generator);
        Self::new(self.dim, self.horizon, data, meta)
    }
}

/// Fractional Brownian motion with independent coordinates, `X_0 = 0`.
///
/// Increments are synthesized by circulant embedding of the fractional
/// Gaussian noise covariance; if the embedding has materially negative
/// eigenvalues the covariance of the path itself is factorized densely.
pub fn generate_fbm(hurst: f64, dim: usize, n_steps: usize, horizon: f64, seed: u64) -> Result<SampledPath> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::HurstOutOfRange(hurst));
    }
    check_grid(dim, n_steps, horizon)?;
    let h = horizon / n_steps as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let noise: Vec<Vec<f64>> = if hurst == 0.5 {
        let sd = h.sqrt();
        (0..dim)
            .map(|_| (0..n_steps).map(|_| sd * { let z: f64 = StandardNormal.sample(&mut rng); z }).collect::<Vec<_>>())
            .collect()
    } else {
        match circulant_eigenvalues(hurst, n_steps, h) {
            Some(lambda) => circulant_noise(&lambda, n_steps, dim, &mut rng),
            None => dense_noise(hurst, n_steps, h, dim, &mut rng)?,
        }
    };

    let mut data = vec![0.0; (n_steps + 1) * dim];
    for (c, incs) in noise.iter().enumerate() {
        let mut acc = 0.0;
        for (j, dx) in incs.iter().enumerate() {
            acc += dx;
            data[(j + 1) * dim + c] = acc;
        }
    }
    let meta = PathMeta {
        generator: if hurst == 0.5 { "bm".into() } else { "fbm".into() },
        seed: Some(seed),
        hurst: Some(hurst),
        descriptor: None,
    };
    SampledPath::new(dim, horizon, data, meta)
}

/// Standard Brownian motion (the `H = 1/2` case of [`generate_fbm`]).
pub fn generate_bm(dim: usize, n_steps: usize, horizon: f64, seed: u64) -> Result<SampledPath> {
    generate_fbm(0.5, dim, n_steps, horizon, seed)
}

fn check_grid(dim: usize, n_steps: usize, horizon: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if n_steps < 2 {
        return Err(Error::InvalidParameter(format!("n_steps = {n_steps} < 2")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon {horizon} must be positive")));
    }
    Ok(())
}

fn fgn_autocov(hurst: f64, h: f64, k: usize) -> f64 {
    let two_h = 2.0 * hurst;
    let k = k as f64;
    let up = (k + 1.0).powf(two_h);
    let mid = k.powf(two_h);
    let down = if k == 0.0 { 1.0 } else { (k - 1.0).powf(two_h) };
    0.5 * h.powf(two_h) * (up - 2.0 * mid + down)
}

/// Eigenvalues of the circulant of size `2N` embedding the noise covariance,
/// or `None` when the embedding is not nonnegative definite.
fn circulant_eigenvalues(hurst: f64, n: usize, h: f64) -> Option<Vec<f64>> {
    let m = 2 * n;
    let mut row: Vec<Complex64> = (0..m)
        .map(|k| {
            let lag = if k <= n { k } else { m - k };
            Complex64::new(fgn_autocov(hurst, h, lag), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut row);
    let scale = row.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let mut out = Vec::with_capacity(m);
    for z in row {
        if z.re < -1e-10 * scale {
            return None;
        }
        out.push(z.re.max(0.0));
    }
    Some(out)
}

/// Real and imaginary parts of one FFT give two independent noise vectors.
fn circulant_noise(lambda: &[f64], n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let m = lambda.len();
    let fft = FftPlanner::new().plan_fft_forward(m);
    let mut out = Vec::with_capacity(dim);
    while out.len() < dim {
        let mut v: Vec<Complex64> = lambda
            .iter()
            .map(|&l| {
                let s = (l / m as f64).sqrt();
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(s * re, s * im)
            })
            .collect();
        fft.process(&mut v);
        out.push(v[..n].iter().map(|z| z.re).collect());
        if out.len() < dim {
            out.push(v[..n].iter().map(|z| z.im).collect());
        }
    }
    out
}

const DENSE_LIMIT: usize = 4096;

fn dense_noise(hurst: f64, n: usize, h: f64, dim: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    if n > DENSE_LIMIT {
        return Err(Error::Synthesis(format!(
            "circulant embedding not nonnegative definite and N = {n} exceeds the dense fallback limit"
        )));
    }
    let cov = nalgebra::DMatrix::from_fn(n, n, |i, j| fgn_autocov(hurst, h, i.abs_diff(j)));
    let chol = nalgebra::Cholesky::new(cov)
        .ok_or_else(|| Error::Synthesis("dense covariance is not positive definite".into()))?;
    let l = chol.l();
    Ok((0..dim)
        .map(|_| {
            let z = nalgebra::DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
            (&l * z).iter().copied().collect()
        })
        .collect())
}

/// Named deterministic test curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticCurve {
    Constant { point: Vec<f64> },
    Line { velocity: Vec<f64> },
    /// `(r cos t, r sin t)`.
    Circle { radius: f64 },
    /// Explicit samples, one row per time node.
    Table { rows: Vec<Vec<f64>> },
}

impl AnalyticCurve {
    pub fn parse(name: &str, dim: usize) -> Result<Self> {
        match name {
            "circle" => Ok(Self::Circle { radius: 1.0 }),
            "constant" => Ok(Self::Constant { point: vec![1.0; dim] }),
            "line" => {
                let mut v = vec![0.0; dim];
                v[0] = 1.0;
                Ok(Self::Line { velocity: v })
            }
            other => Err(Error::Unknown { kind: "curve", name: other.to_owned() }),
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::Line { .. } => "line",
            Self::Circle { .. } => "circle",
            Self::Table { .. } => "table",
        }
    }
}

/// Exact samples of an analytic curve. For a table the row count fixes `N`.
pub fn generate_analytic(curve: &AnalyticCurve, n_steps: usize, horizon: f64) -> Result<SampledPath> {
    let (dim, data) = match curve {
        AnalyticCurve::Constant { point } => {
            check_grid(point.len(), n_steps, horizon)?;
            (point.len(), point.iter().copied().cycle().take(point.len() * (n_steps + 1)).collect())
        }
        AnalyticCurve::Line { velocity } => {
            check_grid(velocity.len(), n_steps, horizon)?;
            let h = horizon / n_steps as f64;
            let data = (0..=n_steps)
                .flat_map(|j| velocity.iter().map(move |v| v * (j as f64 * h)))
                .collect();
            (velocity.len(), data)
        }
        AnalyticCurve::Circle { radius } => {
            check_grid(2, n_steps, horizon)?;
            let h = horizon / n_steps as f64;
            let data = (0..=n_steps)
                .flat_map(|j| {
                    let t = j as f64 * h;
                    [radius * t.cos(), radius * t.sin()]
                })
                .collect();
            (2, data)
        }
        AnalyticCurve::Table { rows } => {
            let dim = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != dim) {
                return Err(Error::InvalidParameter("ragged table".into()));
            }
            check_grid(dim, rows.len().saturating_sub(1), horizon)?;
            (dim, rows.concat())
        }
    };
    let meta = PathMeta {
        generator: curve.tag().to_owned(),
        seed: None,
        hurst: None,
        descriptor: serde_json::to_string(curve).ok(),
    };
    SampledPath::new(dim, horizon, data, meta)
}

/// How the path is continued onto `[-1, 0)` and `(T, T+1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// Freeze the endpoint values.
    #[default]
    Constant,
    /// Point reflection through the endpoints, `X̃_{T+u} = 2X_T − X_{T−u}`.
    /// With a symmetric kernel the sheet then pins both endpoints for every
    /// `α`. Falls back to a constant beyond one path length.
    Reflect,
}

impl std::str::FromStr for Extension {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Self::Constant),
            "reflect" => Ok(Self::Reflect),
            other => Err(Error::Unknown { kind: "extension", name: other.to_owned() }),
        }
    }
}

/// The base path padded on both sides at the same step.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedPath {
    base: SampledPath,
    kind: Extension,
    pad: usize,
    /// Row-major samples at times `(j − pad)·h`, `j = 0..N + 2·pad`.
    data: Vec<f64>,
}

impl ExtendedPath {
    pub fn new(base: &SampledPath, kind: Extension) -> Self {
        let h = base.step();
        let pad = (1.0 / h - 1e-9).ceil() as usize;
        let (d, n) = (base.dim(), base.n_steps());
        let mut data = Vec::with_capacity((n + 1 + 2 * pad) * d);
        let x0 = base.start();
        let xt = base.end();
        for m in (1..=pad).rev() {
            match kind {
                Extension::Constant => data.extend_from_slice(x0),
                Extension::Reflect => {
                    let mirror = base.point(m.min(n));
                    data.extend(x0.iter().zip(mirror).map(|(a, b)| 2.0 * a - b));
                }
            }
        }
        data.extend_from_slice(base.data());
        for m in 1..=pad {
            match kind {
                Extension::Constant => data.extend_from_slice(xt),
                Extension::Reflect => {
                    let mirror = base.point(n - m.min(n));
                    data.extend(xt.iter().zip(mirror).map(|(a, b)| 2.0 * a - b));
                }
            }
        }
        Self { base: base.clone(), kind, pad, data }
    }

    pub fn base(&self) -> &SampledPath {
        &self.base
    }

    pub fn kind(&self) -> Extension {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn step(&self) -> f64 {
        self.base.step()
    }

    /// Number of padding samples on each side.
    pub fn pad(&self) -> usize {
        self.pad
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Sample at extended index `j`, time `(j − pad)·h`.
    pub fn sample(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.data[j * d..(j + 1) * d]
    }

    pub fn samples(&self) -> &[f64] {
        &self.data
    }

    /// Coordinate `c` of every padded sample, contiguous.
    pub fn column(&self, c: usize) -> Vec<f64> {
        self.data.iter().skip(c).step_by(self.dim()).copied().collect()
    }

    pub fn first_time(&self) -> f64 {
        -(self.pad as f64) * self.step()
    }

    pub fn last_time(&self) -> f64 {
        self.base.horizon() + self.pad as f64 * self.step()
    }

    /// Piecewise-linear value at time `t`, clamped to the padded range.
    pub fn value_at(&self, t: f64, out: &mut [f64]) {
        let h = self.step();
        let last = (self.len() - 1) as f64;
        let x = ((t - self.first_time()) / h).clamp(0.0, last);
        let j = (x.floor() as usize).min(self.len() - 2);
        let w = x - j as f64;
        let (a, b) = (self.sample(j), self.sample(j + 1));
        for c in 0..self.dim() {
            out[c] = a[c] + w * (b[c] - a[c]);
        }
    }

    /// The padded samples viewed as a path over `[-pad·h, T + pad·h]`
    /// (time origin shifted to zero).
    pub fn as_path(&self) -> SampledPath {
        let horizon = self.last_time() - self.first_time();
        SampledPath::new(self.dim(), horizon, self.data.clone(), self.base.meta.clone())
            .expect("extension of a valid path is valid")
    }
}

/// Pad with `X_0` on `[-1, 0)` and `X_T` on `(T, T+1]`.
pub fn extend_constant(path: &SampledPath) -> ExtendedPath {
    ExtendedPath::new(path, Extension::Constant)
}

pub fn extend_reflect(path: &SampledPath) -> ExtendedPath {
    ExtendedPath::new(path, Extension::Reflect)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub gamma: f64,
    pub constant: f64,
    pub pairs_tested: usize,
}

/// `max |X_t − X_s| / |t − s|^γ` over sample pairs at dyadic lags `2^k·h`.
pub fn estimate_holder(path: &SampledPath, gamma: f64) -> Result<HolderEstimate> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!("gamma {gamma} outside (0, 1]")));
    }
    let n = path.n_steps();
    let h = path.step();
    let mut constant: f64 = 0.0;
    let mut pairs = 0;
    let mut lag = 1;
    while lag <= n {
        let scale = (lag as f64 * h).powf(gamma);
        for j in 0..=(n - lag) {
            let dist = euclid(path.point(j), path.point(j + lag));
            constant = constant.max(dist / scale);
        }
        pairs += n - lag + 1;
        lag *= 2;
    }
    Ok(HolderEstimate { gamma, constant, pairs_tested: pairs })
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
