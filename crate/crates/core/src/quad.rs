//! Small quadrature and fitting helpers shared by the integrators.

/// Three-point Gauss–Legendre nodes and weights on [-1, 1].
pub(crate) const GL3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Trapezoid weights for a strictly increasing, possibly nonuniform node set.
pub fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let half = 0.5 * (nodes[i + 1] - nodes[i]);
        w[i] += half;
        w[i + 1] += half;
    }
    w
}

/// Composite trapezoid on a uniform grid with spacing `h`.
pub fn trapezoid_uniform(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            h * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Integrate `f` over `[a, b]`, splitting at the interior `breaks`.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(|x, y| x.total_cmp(y));
    let pieces = (pts.len() - 1) as f64;
    pts.windows(2)
        .map(|w| adaptive_simpson(f, w[0], w[1], tol / pieces))
        .sum()
}

/// Weights of `∫_a^b` applied to the quadratic through three nodes.
pub fn quadratic_weights(x: [f64; 3], a: f64, b: f64) -> [f64; 3] {
    let mut w = [0.0; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        // Lagrange basis (s − x_j)(s − x_k) / ((x_i − x_j)(x_i − x_k)) integrated exactly
        let denom = (x[i] - x[j]) * (x[i] - x[k]);
        let prim = |s: f64| s * s * s / 3.0 - (x[j] + x[k]) * s * s / 2.0 + x[j] * x[k] * s;
        w[i] = (prim(b) - prim(a)) / denom;
    }
    w
}

/// Composite Simpson weights on arbitrary increasing nodes: quadratic
/// interpolation over consecutive interval pairs, with a trailing odd
/// interval integrated against the quadratic through its last three nodes.
pub fn simpson_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    if n < 3 {
        return trapezoid_weights(nodes);
    }
    let mut w = vec![0.0; n];
    let mut i = 0;
    while i + 2 < n {
        let x = [nodes[i], nodes[i + 1], nodes[i + 2]];
        let q = quadratic_weights(x, x[0], x[2]);
        for k in 0..3 {
            w[i + k] += q[k];
        }
        i += 2;
    }
    if i + 1 < n {
        let x = [nodes[n - 3], nodes[n - 2], nodes[n - 1]];
        let q = quadratic_weights(x, x[1], x[2]);
        for k in 0..3 {
            w[n - 3 + k] += q[k];
        }
    }
    w
}

/// Least-squares fit of `y ≈ a + b·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    /// Largest absolute residual over the fitted points.
    pub max_residual: f64,
    /// Ratio of the spread of `x` to its mean magnitude; small means ill-conditioned.
    pub spread: f64,
    /// `Σ|c_i|` where `intercept = Σ c_i y_i`: how much scatter in the data
    /// can be amplified into the intercept.
    pub intercept_gain: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).abs())
        .fold(0.0, f64::max);
    let spread = (sxx / nf).sqrt() / mx.abs().max(f64::MIN_POSITIVE);
    let intercept_gain = x.iter().map(|a| (1.0 / nf - mx * (a - mx) / sxx).abs()).sum();
    Some(LinearFit { intercept, slope, max_residual, spread, intercept_gain })
}

/// Mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    (mean, (var / nf).sqrt())
}
