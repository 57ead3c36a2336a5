//! Brute-force reference integrators on the sample grid: Riemann sums, a
//! refined midpoint (Young) value, the forward/backward Lyons–Zheng
//! combination, and exact values for gradient forms.

use serde::{Deserialize, Serialize};

use crate::chain::{ratio_consistent, MAX_INTERCEPT_GAIN};
use crate::error::{Error, Result};
use crate::forms::{OneForm, Potential};
use crate::paths::SampledPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiemannScheme {
    /// Itô: integrand at the left end.
    Left,
    /// Backward: integrand at the right end.
    Right,
    /// Stratonovich: average of both ends.
    Midpoint,
}

impl std::str::FromStr for RiemannScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" | "ito" => Ok(Self::Left),
            "right" | "backward" => Ok(Self::Right),
            "midpoint" | "stratonovich" => Ok(Self::Midpoint),
            other => Err(Error::Unknown { kind: "scheme", name: other.to_owned() }),
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn check_stride(path: &SampledPath, stride: usize) -> Result<()> {
    let n = path.n_steps();
    if stride == 0 || !n.is_multiple_of(stride) {
        return Err(Error::BadStride { stride, n });
    }
    Ok(())
}

fn check_form(path: &SampledPath, phi: &dyn OneForm) -> Result<()> {
    if phi.dim() != path.dim() {
        return Err(Error::DimensionMismatch { expected: path.dim(), got: phi.dim() });
    }
    Ok(())
}

/// Left and right sums over the partition of the given stride.
fn left_right(path: &SampledPath, phi: &dyn OneForm, stride: usize) -> (f64, f64) {
    let d = path.dim();
    let mut a = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut left = CompensatedSum::default();
    let mut right = CompensatedSum::default();
    phi.eval(path.point(0), &mut a);
    let mut j = 0;
    while j < path.n_steps() {
        let (x, y) = (path.point(j), path.point(j + stride));
        phi.eval(y, &mut b);
        let mut l = 0.0;
        let mut r = 0.0;
        for c in 0..d {
            let dx = y[c] - x[c];
            l += a[c] * dx;
            r += b[c] * dx;
        }
        left.add(l);
        right.add(r);
        std::mem::swap(&mut a, &mut b);
        j += stride;
    }
    (left.value(), right.value())
}

/// `Σ_j ⟨w_j, X_{t_{j+stride}} − X_{t_j}⟩` with the scheme's evaluation point.
pub fn riemann_sum(path: &SampledPath, phi: &dyn OneForm, scheme: RiemannScheme, stride: usize) -> Result<f64> {
    check_stride(path, stride)?;
    check_form(path, phi)?;
    let (l, r) = left_right(path, phi, stride);
    Ok(match scheme {
        RiemannScheme::Left => l,
        RiemannScheme::Right => r,
        RiemannScheme::Midpoint => 0.5 * (l + r),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungValue {
    pub value: f64,
    pub error_estimate: f64,
    /// Midpoint sums at strides 4, 2 and 1.
    pub sums: [f64; 3],
    /// Whether the Richardson step was applied.
    pub richardson: bool,
    pub exponent: f64,
}

/// Midpoint sums at strides 4, 2, 1 and a Richardson step assuming an error
/// proportional to `stride^{2γ−1}`.
///
/// The step is only taken when it amplifies the sums by at most
/// [`MAX_INTERCEPT_GAIN`] and both refinements move the same way and
/// contract like `2^{−(2γ−1)}` in the sense of
/// [`ratio_consistent`]; otherwise the finest sum is
/// returned and the error estimate is the total movement over the two
/// refinements.
pub fn young_value(path: &SampledPath, phi: &dyn OneForm, gamma: f64) -> Result<YoungValue> {
    if !path.n_steps().is_multiple_of(8) {
        return Err(Error::BadStride { stride: 8, n: path.n_steps() });
    }
    if !(gamma > 0.5 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!("gamma {gamma} must lie in (1/2, 1]")));
    }
    let s4 = riemann_sum(path, phi, RiemannScheme::Midpoint, 4)?;
    let s2 = riemann_sum(path, phi, RiemannScheme::Midpoint, 2)?;
    let s1 = riemann_sum(path, phi, RiemannScheme::Midpoint, 1)?;
    let p = 2.0 * gamma - 1.0;
    let (d1, d2) = (s2 - s4, s1 - s2);
    let contraction = 2f64.powf(-p);
    let gain = 1.0 + 2.0 / (2f64.powf(p) - 1.0);
    let consistent = gain <= MAX_INTERCEPT_GAIN && ratio_consistent(d2 / d1, contraction);
    let floor = 1e-12 * (1.0 + s1.abs());
    let (value, error_estimate, richardson) = if consistent {
        let v = s1 + d2 / (2f64.powf(p) - 1.0);
        (v, (v - s1).abs() + floor, true)
    } else {
        (s1, d1.abs() + d2.abs() + floor, false)
    };
    Ok(YoungValue { value, error_estimate, sums: [s4, s2, s1], richardson, exponent: p })
}

/// Negated pullback `−φ` used on the reversed path.
struct Negated<'a>(&'a dyn OneForm);

impl OneForm for Negated<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        self.0.eval(x, out);
        for v in out.iter_mut() {
            *v = -*v;
        }
    }
}

/// Half the sum of the forward Itô sum along the path and the Itô sum of
/// `−φ` along the time-reversed path. The backward sum equals the forward
/// right-point sum, so this reproduces the midpoint sum.
pub fn lyons_zheng_value(path: &SampledPath, phi: &dyn OneForm) -> Result<f64> {
    check_form(path, phi)?;
    let forward = riemann_sum(path, phi, RiemannScheme::Left, 1)?;
    let backward = riemann_sum(&path.reversed(), &Negated(phi), RiemannScheme::Left, 1)?;
    Ok(0.5 * (forward + backward))
}

/// `F(X_T) − F(X_0)`.
pub fn gradient_exact(potential: &dyn Potential, path: &SampledPath) -> Result<f64> {
    if potential.dim() != path.dim() {
        return Err(Error::DimensionMismatch { expected: path.dim(), got: potential.dim() });
    }
    Ok(potential.value(path.end()) - potential.value(path.start()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{builtin, Constant};
    use crate::paths::{generate_analytic, generate_fbm, AnalyticCurve};

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut s = CompensatedSum::default();
        for v in [1e16, 1.0, -1e16, 1.0] {
            s.add(v);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn constant_form_telescopes() {
        let p = generate_fbm(0.7, 3, 256, 1.0, 5).unwrap();
        let c = Constant::one_form(vec![0.5, -2.0, 1.0]);
        let target: f64 = (0..3).map(|i| c.coeffs[i] * (p.end()[i] - p.start()[i])).sum();
        for scheme in [RiemannScheme::Left, RiemannScheme::Right, RiemannScheme::Midpoint] {
            for stride in [1, 2, 4, 256] {
                let v = riemann_sum(&p, &c, scheme, stride).unwrap();
                assert!((v - target).abs() < 1e-13, "{scheme:?} {stride}");
            }
        }
    }

    #[test]
    fn stride_must_divide() {
        let p = generate_fbm(0.7, 2, 100, 1.0, 5).unwrap();
        let rot = builtin("rotation", 2).unwrap().as_one_form().unwrap();
        assert!(matches!(riemann_sum(&p, rot.as_ref(), RiemannScheme::Left, 3), Err(Error::BadStride { .. })));
        assert!(matches!(young_value(&p, rot.as_ref(), 0.65), Err(Error::BadStride { .. })));
    }

    #[test]
    fn circle_area_by_young_refinement() {
        let c = generate_analytic(&AnalyticCurve::Circle { radius: 1.0 }, 4096, 2.0 * std::f64::consts::PI).unwrap();
        let rot = builtin("rotation", 2).unwrap().as_one_form().unwrap();
        let y = young_value(&c, rot.as_ref(), 1.0).unwrap();
        assert!((y.value - 2.0 * std::f64::consts::PI).abs() < 1e-4, "{y:?}");
    }

    #[test]
    fn gradient_exact_on_a_line() {
        let l = generate_analytic(&AnalyticCurve::Line { velocity: vec![1.0, 0.0] }, 16, 1.0).unwrap();
        let f = crate::forms::Coordinate(2);
        assert_eq!(gradient_exact(&f, &l).unwrap(), 1.0);
    }
}
