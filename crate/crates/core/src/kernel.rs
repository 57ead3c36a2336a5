//! Compactly supported bump functions used to mollify paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// A nonnegative, piecewise-C¹ bump supported in `[-1, 1]` with unit mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierKernel {
    /// `(3/4)(1 − t²)` on `[-1, 1]`.
    Epanechnikov,
    /// `(1 − |t|)₊`.
    Triangle,
}

/// `κ₁ = ∫|η′(r)||r|^γ dr` and `κ₂ = ∫|η(r) + rη′(r)||r|^γ dr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub gamma: f64,
    pub kappa_1: f64,
    pub kappa_2: f64,
}

impl MollifierKernel {
    pub const ALL: [MollifierKernel; 2] = [Self::Epanechnikov, Self::Triangle];

    pub fn name(self) -> &'static str {
        match self {
            Self::Epanechnikov => "epanechnikov",
            Self::Triangle => "triangle",
        }
    }

    #[inline]
    pub fn eval(self, t: f64) -> f64 {
        let a = t.abs();
        if a >= 1.0 {
            return 0.0;
        }
        match self {
            Self::Epanechnikov => 0.75 * (1.0 - t * t),
            Self::Triangle => 1.0 - a,
        }
    }

    /// Derivative; at a kink the mean of the one-sided limits.
    #[inline]
    pub fn deriv(self, t: f64) -> f64 {
        let a = t.abs();
        if a > 1.0 {
            return 0.0;
        }
        let inside = match self {
            Self::Epanechnikov => -1.5 * t,
            Self::Triangle => {
                if t == 0.0 {
                    0.0
                } else {
                    -t.signum()
                }
            }
        };
        if a == 1.0 {
            0.5 * inside
        } else {
            inside
        }
    }

    /// Points of `(-1, 1)` where `η′` jumps. The support ends are always kinks.
    pub fn interior_kinks(self) -> &'static [f64] {
        match self {
            Self::Epanechnikov => &[],
            Self::Triangle => &[0.0],
        }
    }

    /// `∫η`, by Richardson-refined composite trapezoid split at the kinks.
    pub fn mass(self) -> f64 {
        let mut pts = vec![-1.0];
        pts.extend_from_slice(self.interior_kinks());
        pts.push(1.0);
        pts.windows(2)
            .map(|w| {
                let coarse = trapezoid_fn(|x| self.eval(x), w[0], w[1], 512);
                let fine = trapezoid_fn(|x| self.eval(x), w[0], w[1], 1024);
                (4.0 * fine - coarse) / 3.0
            })
            .sum()
    }

    /// Check support, positivity and unit mass.
    pub fn certify(self) -> Result<()> {
        let mass = self.mass();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("{} has mass {mass}", self.name())));
        }
        for i in 0..=400 {
            let t = -2.0 + i as f64 * 0.01;
            let v = self.eval(t);
            if v < 0.0 || (t.abs() >= 1.0 && v != 0.0) {
                return Err(Error::InvalidParameter(format!("{} violates support/positivity at {t}", self.name())));
            }
        }
        Ok(())
    }

    pub fn constants(self, gamma: f64) -> KernelConstants {
        let mut breaks = vec![0.0];
        breaks.extend_from_slice(self.interior_kinks());
        // |η + rη′| also changes sign inside the support
        breaks.extend_from_slice(self.radial_sign_changes());
        let k1 = quad::integrate_piecewise(&|r| self.deriv(r).abs() * r.abs().powf(gamma), -1.0, 1.0, &breaks, 1e-13);
        let k2 = quad::integrate_piecewise(
            &|r| (self.eval(r) + r * self.deriv(r)).abs() * r.abs().powf(gamma),
            -1.0,
            1.0,
            &breaks,
            1e-13,
        );
        KernelConstants { gamma, kappa_1: k1, kappa_2: k2 }
    }

    fn radial_sign_changes(self) -> &'static [f64] {
        // zeros of η(r) + rη′(r)
        match self {
            Self::Epanechnikov => &[-0.577_350_269_189_625_8, 0.577_350_269_189_625_8],
            Self::Triangle => &[-0.5, 0.5],
        }
    }
}

impl std::str::FromStr for MollifierKernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epanechnikov" | "epa" => Ok(Self::Epanechnikov),
            "triangle" | "tri" => Ok(Self::Triangle),
            other => Err(Error::Unknown { kind: "kernel", name: other.to_owned() }),
        }
    }
}

fn trapezoid_fn<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let vals: Vec<f64> = (0..=n).map(|i| f(a + i as f64 * h)).collect();
    quad::trapezoid_uniform(&vals, h)
}
