//! Pathwise line integrals `∫⟨φ(X_t), ∘dX_t⟩` along Hölder paths with
//! exponent above one half, realized as flat chains: the path is the
//! boundary of the mollification sheet `(t, α) ↦ X_{t,α}` up to three
//! explicit edges, so the integral is a sheet integral of `dφ` plus edge
//! integrals. Also: Fourier coefficients of stochastic currents and Monte
//! Carlo experiments on the Brownian sheet Jacobian.

// `!(x > 0.0)` is used on purpose since it also rejects NaN, and index
// loops over coordinates read closer to the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chain;
pub mod error;
pub mod forms;
pub mod io;
pub mod kernel;
pub mod mollify;
pub mod oracle;
pub(crate) mod par;
pub mod paths;
pub mod quad;
pub mod scaling;
pub mod sheet;
pub mod spectral;

pub use error::{Error, Result};
