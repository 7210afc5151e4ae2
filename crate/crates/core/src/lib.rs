//! Spectral-Galerkin analysis of global dynamic bifurcation for
//! `−Δu = f_λ(u)` with Dirichlet boundary conditions.
//!
//! The pipeline:
//!
//! 1. [`spectral`] builds the sine eigenbasis and quadrature.
//! 2. [`nonlinearity`] describes `f_λ`, locates the bifurcation values
//!    `β(γ_k) = μ_k` and checks the growth hypotheses.
//! 3. [`flow`] integrates the Galerkin truncation of
//!    `u_t − Δu_t − Δu = f_λ(u)`, whose Lyapunov function is
//!    `J(u) = ½||u||² − ∫F_λ(u)`.
//! 4. [`equilibria`] solves for steady states, computes Morse indices and
//!    continues branches in `λ`.
//! 5. [`conley`] handles the index algebra `0̄`, `Σ^p`, wedges.
//! 6. [`branch`] assembles equilibria and heteroclinic orbits into a graph
//!    approximating the global branch and classifies it.
//! 7. [`runner`] drives everything from a TOML configuration.

pub mod branch;
pub mod conley;
pub mod equilibria;
pub mod error;
pub mod flow;
pub mod galerkin;
pub mod nonlinearity;
mod ode;
pub mod runner;
pub mod spectral;

pub use error::{Error, Result};
pub use galerkin::Problem;
pub use nonlinearity::NonlinearityFamily;
pub use spectral::{DomainShape, SpectralDomain, Truncation};
