//! Numerical laboratory for a complex-valued blow-up solution of
//! `u_t = u_xx + u^2` in one space dimension.
//!
//! The solution is studied in self-similar variables `y = x / sqrt(T - t)`,
//! `s = -log(T - t)`, where the rescaled solution `W = w + i w~` is written as
//! `W = phi + q + i q~` around the explicit profile
//! `phi(y, s) = f(y / sqrt(s)) + 1/(4s)`, `f(z) = 8 / (8 + z^2)`.
//!
//! Layout:
//! - [`hermite`]: Gaussian-weighted Hermite basis and quadrature.
//! - [`profile`]: closed forms for `f`, `phi`, `V`, `R` and the cutoff `chi`.
//! - [`kernel`]: Mehler kernel of `exp(psi L)`, used as an exact linear oracle.
//! - [`solver`]: IMEX finite-difference stepper for the perturbation system.
//! - [`decomposition`]: five-component split and shrinking-set membership.
//! - [`shooting`]: initial-data family, trajectories, exit classification, search.
//! - [`reconstruction`]: maps back to `(x, t)` and the profile checks.
//! - [`config`], [`io`], [`cli`]: configuration, CSV formats and commands.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod cli;
pub mod config;
pub mod decomposition;
pub mod error;
pub mod hermite;
pub mod io;
pub mod kernel;
pub mod profile;
pub mod reconstruction;
pub mod shooting;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
