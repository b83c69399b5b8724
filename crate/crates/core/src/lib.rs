//! Solvers and verification machinery for the fractional Dirichlet problem
//! `Δˢu = 0` in a bounded domain `Ω` with exterior data `u = F` on `Ωᶜ`.
//!
//! Three independent routes to `u` are provided:
//!
//! - [`galerkin`]: solve `(I_{2s} φ̃)|_{Ωᶜ} = F` for an exterior density `φ` and
//!   set `u = I_{2s} φ̃`;
//! - [`stable_walk`]: walk-on-spheres with exact ball-exit sampling of the
//!   isotropic 2s-stable process, estimating `u(x) = E_x F(X_{τ_Ω})`;
//! - [`poisson_kernel`]: quadrature against the closed-form Poisson kernel of a ball.
//!
//! The periodic-grid modules ([`grid`], [`lp_norms`], [`frac_ops`]) supply the
//! homogeneous Sobolev norms and both definitions of `Δˢ` and `I_σ`.

pub mod constants;
pub mod error;
pub mod exterior;
pub mod frac_ops;
pub mod galerkin;
pub mod geometry;
pub mod grid;
pub mod lp_norms;
pub mod params;
pub mod poisson_kernel;
pub mod quadrature;
pub mod spectral;
pub mod stable_walk;

pub use error::{Error, Result};
pub use grid::GridFunction;
pub use params::SolverParams;
