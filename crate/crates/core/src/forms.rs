//! Differential forms with closed-form derivatives: 1-forms, 2-forms and
//! scalar potentials, plus the registry of shipped test forms.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A 1-form `φ = Σ φ_i dx^i` on ℝ^d.
pub trait OneForm: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64], out: &mut [f64]);

    /// Row-major `∂φ_i/∂x_j`. Defaults to centered differences with step
    /// `1e-5·(1 + |x|)`.
    fn jacobian(&self, x: &[f64], out: &mut [f64]) {
        fd_jacobian(self, x, out);
    }

    fn has_closed_jacobian(&self) -> bool {
        false
    }

    /// `φ̂(k) = ∫ e^{−i⟨k,x⟩} φ(x) dx`, when known in closed form.
    fn fourier(&self, _k: &[f64], _out: &mut [Complex64]) -> bool {
        false
    }
}

pub fn fd_jacobian<F: OneForm + ?Sized>(form: &F, x: &[f64], out: &mut [f64]) {
    let d = form.dim();
    let step = 1e-5 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt());
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; d];
    let mut fm = vec![0.0; d];
    for j in 0..d {
        xp[j] = x[j] + step;
        form.eval(&xp, &mut fp);
        xp[j] = x[j] - step;
        form.eval(&xp, &mut fm);
        xp[j] = x[j];
        for i in 0..d {
            out[i * d + j] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }
}

/// A 2-form `ψ = Σ_{i<j} ψ_ij dx^i ∧ dx^j`; components in lexicographic
/// order of `(i, j)`.
pub trait TwoForm: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], out: &mut [f64]);
}

pub fn pair_count(d: usize) -> usize {
    d * (d - 1) / 2
}

/// A scalar potential `F` with gradient.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    /// Row-major Hessian.
    fn hessian(&self, x: &[f64], out: &mut [f64]);
}

/// `dF` as a 1-form.
#[derive(Clone)]
pub struct Gradient<P>(pub P);

impl<P: Potential> OneForm for Gradient<P> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        self.0.gradient(x, out);
    }
    fn jacobian(&self, x: &[f64], out: &mut [f64]) {
        self.0.hessian(x, out);
    }
    fn has_closed_jacobian(&self) -> bool {
        true
    }
}

/// `dφ` of a 1-form: components `∂φ_j/∂x_i − ∂φ_i/∂x_j` for `i < j`.
pub struct Exterior<F: ?Sized>(pub Arc<F>);

impl<F: OneForm + ?Sized> TwoForm for Exterior<F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let d = self.0.dim();
        let mut jac = vec![0.0; d * d];
        self.0.jacobian(x, &mut jac);
        let mut p = 0;
        for i in 0..d {
            for j in i + 1..d {
                out[p] = jac[j * d + i] - jac[i * d + j];
                p += 1;
            }
        }
    }
}

/// Constant coefficients, either a 1-form or a 2-form.
#[derive(Debug, Clone)]
pub struct Constant {
    pub coeffs: Vec<f64>,
    dim: usize,
}

impl Constant {
    pub fn one_form(coeffs: Vec<f64>) -> Self {
        let dim = coeffs.len();
        Self { coeffs, dim }
    }

    /// The basis 2-form `dx^i ∧ dx^j` (zero-based, `i < j`).
    pub fn basis_two_form(dim: usize, i: usize, j: usize) -> Self {
        let mut coeffs = vec![0.0; pair_count(dim)];
        coeffs[pair_index(dim, i, j)] = 1.0;
        Self { coeffs, dim }
    }
}

pub fn pair_index(d: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < d);
    i * (2 * d - i - 1) / 2 + (j - i - 1)
}

impl OneForm for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.coeffs);
    }
    fn jacobian(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn has_closed_jacobian(&self) -> bool {
        true
    }
}

impl TwoForm for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.coeffs);
    }
}

/// `x₁ dx² − x₂ dx¹`, optionally modulated by `exp(−a|x|²)`.
#[derive(Debug, Clone, Copy)]
pub struct Rotation {
    pub dim: usize,
    /// Gaussian modulation rate `a`; zero for the plain rotation form.
    pub decay: f64,
}

impl OneForm for Rotation {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let g = (-self.decay * norm2(x)).exp();
        out[0] = -x[1] * g;
        out[1] = x[0] * g;
    }
    fn jacobian(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        out.fill(0.0);
        let a = self.decay;
        let g = (-a * norm2(x)).exp();
        // φ_1 = −x₂ g, φ_2 = x₁ g, ∂g/∂x_j = −2a x_j g
        for j in 0..d {
            let dg = -2.0 * a * x[j] * g;
            out[j] = -x[1] * dg;
            out[d + j] = x[0] * dg;
        }
        out[1] -= g;
        out[d] += g;
    }
    fn has_closed_jacobian(&self) -> bool {
        true
    }
    fn fourier(&self, k: &[f64], out: &mut [Complex64]) -> bool {
        if self.decay <= 0.0 {
            return false;
        }
        // FT[x_j e^{−a|x|²}](k) = −i k_j/(2a) · (π/a)^{d/2} e^{−|k|²/(4a)}
        let a = self.decay;
        let base = (std::f64::consts::PI / a).powf(self.dim as f64 / 2.0) * (-norm2(k) / (4.0 * a)).exp();
        let ft = |j: usize| Complex64::new(0.0, -k[j] / (2.0 * a) * base);
        out.fill(Complex64::new(0.0, 0.0));
        out[0] = -ft(1);
        out[1] = ft(0);
        true
    }
}

/// `φ = exp(−|x|²/2) dx^{axis}`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianBump {
    pub dim: usize,
    pub axis: usize,
}

impl OneForm for GaussianBump {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[self.axis] = (-0.5 * norm2(x)).exp();
    }
    fn jacobian(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let g = (-0.5 * norm2(x)).exp();
        for j in 0..self.dim {
            out[self.axis * self.dim + j] = -x[j] * g;
        }
    }
    fn has_closed_jacobian(&self) -> bool {
        true
    }
    fn fourier(&self, k: &[f64], out: &mut [Complex64]) -> bool {
        out.fill(Complex64::new(0.0, 0.0));
        let tau = 2.0 * std::f64::consts::PI;
        out[self.axis] = Complex64::new(tau.powf(self.dim as f64 / 2.0) * (-0.5 * norm2(k)).exp(), 0.0);
        true
    }
}

/// `|x|²/2`.
#[derive(Debug, Clone, Copy)]
pub struct HalfNormSquared(pub usize);

impl Potential for HalfNormSquared {
    fn dim(&self) -> usize {
        self.0
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * norm2(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn hessian(&self, _x: &[f64], out: &mut [f64]) {
        let d = self.0;
        out.fill(0.0);
        for i in 0..d {
            out[i * d + i] = 1.0;
        }
    }
}

/// `exp(−|x|²)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianPotential(pub usize);

impl Potential for GaussianPotential {
    fn dim(&self) -> usize {
        self.0
    }
    fn value(&self, x: &[f64]) -> f64 {
        (-norm2(x)).exp()
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let g = (-norm2(x)).exp();
        for (o, v) in out.iter_mut().zip(x) {
            *o = -2.0 * v * g;
        }
    }
    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let d = self.0;
        let g = (-norm2(x)).exp();
        for i in 0..d {
            for j in 0..d {
                let delta = if i == j { 1.0 } else { 0.0 };
                out[i * d + j] = (4.0 * x[i] * x[j] - 2.0 * delta) * g;
            }
        }
    }
}

/// The first coordinate `x₁`.
#[derive(Debug, Clone, Copy)]
pub struct Coordinate(pub usize);

impl Potential for Coordinate {
    fn dim(&self) -> usize {
        self.0
    }
    fn value(&self, x: &[f64]) -> f64 {
        x[0]
    }
    fn gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[0] = 1.0;
    }
    fn hessian(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Time-dependent form on ℝ^{1+d} (slot 0 is time) used with the graph lift:
/// `φ = (1 + t) e^{x₁} dx¹`. Its `x₁`-antiderivative from `λ` is
/// `Φ(t, x) = (1 + t)(e^{x₁} − e^{λ})`.
#[derive(Debug, Clone, Copy)]
pub struct SubgraphForm {
    pub space_dim: usize,
}

impl SubgraphForm {
    /// `Φ_x(t, x)` with `λ = 0`.
    pub fn antiderivative(&self, t: f64, x: &[f64]) -> f64 {
        (1.0 + t) * (x[0].exp() - 1.0)
    }

    /// `∂Φ_x/∂t`.
    pub fn antiderivative_dt(&self, _t: f64, x: &[f64]) -> f64 {
        x[0].exp() - 1.0
    }
}

impl OneForm for SubgraphForm {
    fn dim(&self) -> usize {
        self.space_dim + 1
    }
    fn eval(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[1] = (1.0 + y[0]) * y[1].exp();
    }
    fn jacobian(&self, y: &[f64], out: &mut [f64]) {
        let n = self.dim();
        out.fill(0.0);
        out[n] = y[1].exp();
        out[n + 1] = (1.0 + y[0]) * y[1].exp();
    }
    fn has_closed_jacobian(&self) -> bool {
        true
    }
}

/// `φ = cos(t) dt` on ℝ^{1+d}: a pure time component.
#[derive(Debug, Clone, Copy)]
pub struct TimeOnly {
    pub space_dim: usize,
}

impl OneForm for TimeOnly {
    fn dim(&self) -> usize {
        self.space_dim + 1
    }
    fn eval(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[0] = y[0].cos();
    }
    fn jacobian(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[0] = -y[0].sin();
    }
    fn has_closed_jacobian(&self) -> bool {
        true
    }
}

/// Adapts a closure into a 1-form (finite-difference jacobian).
pub struct FnForm<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Send + Sync> OneForm for FnForm<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
}

/// Linear combination `a·ψ₁ + b·ψ₂`.
pub struct Combination<'a> {
    pub terms: Vec<(f64, &'a dyn TwoForm)>,
}

impl TwoForm for Combination<'_> {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let mut tmp = vec![0.0; out.len()];
        for (c, f) in &self.terms {
            f.eval(x, &mut tmp);
            for (o, v) in out.iter_mut().zip(&tmp) {
                *o += c * v;
            }
        }
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    OneForm,
    TwoForm,
    Potential,
}

/// A registered form together with whatever closed forms it carries.
#[derive(Clone)]
pub struct FormDescriptor {
    pub name: String,
    pub dim: usize,
    pub kind: FormKind,
    pub one_form: Option<Arc<dyn OneForm>>,
    pub two_form: Option<Arc<dyn TwoForm>>,
    pub potential: Option<Arc<dyn Potential>>,
    /// Whether slot 0 is time (graph-lift forms).
    pub time_dependent: bool,
    /// Known line integral along the unit circle traversed once.
    pub circle_integral: Option<f64>,
}

impl fmt::Debug for FormDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormDescriptor")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("time_dependent", &self.time_dependent)
            .finish()
    }
}

impl FormDescriptor {
    fn one(name: &str, dim: usize, form: Arc<dyn OneForm>) -> Self {
        Self {
            name: name.to_owned(),
            dim,
            kind: FormKind::OneForm,
            one_form: Some(form),
            two_form: None,
            potential: None,
            time_dependent: false,
            circle_integral: None,
        }
    }

    fn potential<P: Potential + Clone + 'static>(name: &str, p: P) -> Self {
        let dim = p.dim();
        let mut desc = Self::one(name, dim, Arc::new(Gradient(p.clone())));
        desc.kind = FormKind::Potential;
        desc.potential = Some(Arc::new(p));
        desc.circle_integral = Some(0.0);
        desc
    }

    fn two(name: &str, dim: usize, form: Arc<dyn TwoForm>) -> Self {
        Self {
            name: name.to_owned(),
            dim,
            kind: FormKind::TwoForm,
            one_form: None,
            two_form: Some(form),
            potential: None,
            time_dependent: false,
            circle_integral: None,
        }
    }

    pub fn as_one_form(&self) -> Result<Arc<dyn OneForm>> {
        self.one_form.clone().ok_or_else(|| Error::Registration {
            name: self.name.clone(),
            reason: "not a 1-form".into(),
        })
    }

    pub fn as_two_form(&self) -> Result<Arc<dyn TwoForm>> {
        self.two_form.clone().ok_or_else(|| Error::Registration {
            name: self.name.clone(),
            reason: "not a 2-form".into(),
        })
    }

    /// Registration checks: closed-form jacobian against centered
    /// differences at 10 probes, and closed-form Fourier transform against a
    /// numerical transform at 5 wavevectors.
    pub fn verify(&self) -> Result<()> {
        let Some(form) = &self.one_form else { return Ok(()) };
        let d = form.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        if form.has_closed_jacobian() {
            let mut closed = vec![0.0; d * d];
            let mut fd = vec![0.0; d * d];
            for _ in 0..10 {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect();
                form.jacobian(&x, &mut closed);
                fd_jacobian(form.as_ref(), &x, &mut fd);
                let scale = closed.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for (a, b) in closed.iter().zip(&fd) {
                    if (a - b).abs() > 1e-4 * scale {
                        return Err(Error::Registration {
                            name: self.name.clone(),
                            reason: format!("jacobian {a} vs finite difference {b} at {x:?}"),
                        });
                    }
                }
            }
        }
        let mut probe = vec![Complex64::new(0.0, 0.0); d];
        if d <= 3 && form.fourier(&vec![0.0; d], &mut probe) {
            for _ in 0..5 {
                let k: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect();
                form.fourier(&k, &mut probe);
                let numeric = numerical_fourier(form.as_ref(), &k);
                let scale = probe.iter().fold(0.0f64, |m, z| m.max(z.norm()));
                for (a, b) in probe.iter().zip(&numeric) {
                    if (a - b).norm() > 0.01 * scale {
                        return Err(Error::Registration {
                            name: self.name.clone(),
                            reason: format!("fourier transform {a} vs numerical {b} at {k:?}"),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Trapezoid approximation of `∫_{[-8,8]^d} e^{−i⟨k,x⟩} φ(x) dx`.
pub fn numerical_fourier(form: &dyn OneForm, k: &[f64]) -> Vec<Complex64> {
    let d = form.dim();
    let n = if d <= 2 { 161 } else { 61 };
    let half = 8.0;
    let h = 2.0 * half / (n - 1) as f64;
    let mut acc = vec![Complex64::new(0.0, 0.0); d];
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut phi = vec![0.0; d];
    loop {
        let mut w = 1.0;
        for a in 0..d {
            x[a] = -half + idx[a] as f64 * h;
            if idx[a] == 0 || idx[a] == n - 1 {
                w *= 0.5;
            }
        }
        form.eval(&x, &mut phi);
        let phase: f64 = k.iter().zip(&x).map(|(a, b)| a * b).sum();
        let e = Complex64::from_polar(w, -phase);
        for c in 0..d {
            acc[c] += e * phi[c];
        }
        let mut a = 0;
        loop {
            idx[a] += 1;
            if idx[a] < n {
                break;
            }
            idx[a] = 0;
            a += 1;
            if a == d {
                let vol = h.powi(d as i32);
                return acc.into_iter().map(|z| z * vol).collect();
            }
        }
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &[
    "zero",
    "constant",
    "rotation",
    "rotation-bump",
    "gaussian",
    "grad-half-norm2",
    "grad-gauss",
    "grad-x1",
    "subgraph",
    "time-only",
    "dx1^dx2",
    "d(rotation)",
    "d(rotation-bump)",
    "d(gaussian)",
    "d(grad-half-norm2)",
    "d(grad-gauss)",
    "d(grad-x1)",
];

/// Look up a shipped form by name for a given spatial dimension.
///
/// Also accepts `dx<i>^dx<j>` for any basis 2-form and `d(<name>)` for the
/// exterior derivative of any shipped spatial 1-form.
pub fn builtin(name: &str, dim: usize) -> Result<FormDescriptor> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let need_plane = |n: &str| -> Result<()> {
        if dim < 2 {
            Err(Error::InvalidParameter(format!("{n} needs dimension ≥ 2")))
        } else {
            Ok(())
        }
    };
    let desc = match name {
        "zero" => {
            let mut d = FormDescriptor::one(name, dim, Arc::new(Constant::one_form(vec![0.0; dim])));
            d.circle_integral = Some(0.0);
            d
        }
        "constant" => {
            let coeffs: Vec<f64> = (0..dim).map(|i| 1.0 + i as f64).collect();
            let mut d = FormDescriptor::one(name, dim, Arc::new(Constant::one_form(coeffs)));
            d.circle_integral = Some(0.0);
            d
        }
        "rotation" => {
            need_plane(name)?;
            let mut d = FormDescriptor::one(name, dim, Arc::new(Rotation { dim, decay: 0.0 }));
            d.circle_integral = Some(2.0 * std::f64::consts::PI);
            d
        }
        "rotation-bump" => {
            need_plane(name)?;
            let mut d = FormDescriptor::one(name, dim, Arc::new(Rotation { dim, decay: 1.0 }));
            d.circle_integral = Some(2.0 * std::f64::consts::PI * (-1.0f64).exp());
            d
        }
        "gaussian" => FormDescriptor::one(name, dim, Arc::new(GaussianBump { dim, axis: 0 })),
        "grad-half-norm2" => FormDescriptor::potential(name, HalfNormSquared(dim)),
        "grad-gauss" => FormDescriptor::potential(name, GaussianPotential(dim)),
        "grad-x1" => FormDescriptor::potential(name, Coordinate(dim)),
        "subgraph" => {
            let mut d = FormDescriptor::one(name, dim + 1, Arc::new(SubgraphForm { space_dim: dim }));
            d.time_dependent = true;
            d
        }
        "time-only" => {
            let mut d = FormDescriptor::one(name, dim + 1, Arc::new(TimeOnly { space_dim: dim }));
            d.time_dependent = true;
            d
        }
        _ => {
            if let Some(inner) = name.strip_prefix("d(").and_then(|s| s.strip_suffix(')')) {
                let base = builtin(inner, dim)?;
                if base.time_dependent {
                    return Err(Error::Unknown { kind: "form", name: name.to_owned() });
                }
                let phi = base.as_one_form()?;
                FormDescriptor::two(name, dim, Arc::new(Exterior(phi)))
            } else if let Some((i, j)) = parse_basis(name) {
                if !(i < j && j < dim) {
                    return Err(Error::InvalidParameter(format!("{name} invalid in dimension {dim}")));
                }
                FormDescriptor::two(name, dim, Arc::new(Constant::basis_two_form(dim, i, j)))
            } else {
                return Err(Error::Unknown { kind: "form", name: name.to_owned() });
            }
        }
    };
    desc.verify()?;
    Ok(desc)
}

/// `dx<i>^dx<j>` with one-based indices.
fn parse_basis(name: &str) -> Option<(usize, usize)> {
    let (a, b) = name.split_once('^')?;
    let i: usize = a.strip_prefix("dx")?.parse().ok()?;
    let j: usize = b.strip_prefix("dx")?.parse().ok()?;
    (i >= 1 && j >= 1).then(|| (i - 1, j - 1))
}
