//! Energy-conserving HBVM(k,s) Runge–Kutta integrators for separable Hamiltonian
//! systems `q' = p`, `p' = -∇U(q)`.
//!
//! The nonlinear stage equations of an HBVM(k,s) step are reduced to an
//! `s·m`-dimensional problem in the Legendre coefficients `γ` of the stage
//! gradients, independently of `k`. That problem is solved by a simplified
//! Newton iteration whose linear systems are handled either directly or by an
//! inner iteration built on a triangular splitting with constant diagonal, so
//! that a single `m×m` factorization per step suffices.
//!
//! Module map:
//!
//! * [`legendre`]: orthonormal shifted Legendre polynomials and Gauss rules.
//! * [`tableau`]: the HBVM coefficient matrices and their identities.
//! * [`splitting`]: auxiliary abscissae, Crout factors and the linear
//!   convergence analysis of the inner iteration.
//! * [`linalg`]: small dense LU, eigenvalues and Kronecker-structured solves.
//! * [`solvers`]: fixed-point, simplified Newton and outer–inner stage solvers.
//! * [`problems`]: Fermi–Pasta–Ulam, harmonic oscillator and pendulum.
//! * [`integrator`]: fixed-step trajectory driver and order measurement.
//!
//! The crate is `no_std` and needs only `alloc`.
#![cfg_attr(not(test), no_std)]
#![warn(missing_docs)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod integrator;
pub mod legendre;
pub mod linalg;
pub mod problems;
pub mod solvers;
pub mod splitting;
pub mod tableau;

pub(crate) mod float;

pub use error::{Error, Result};
pub use linalg::Matrix;
