//! Radial solutions of `-Δu = λ f(u)` on a ball with Robin, Neumann or
//! Dirichlet boundary conditions, for bistable `f` with zeros `0 < alpha < beta`.
//!
//! The crate covers parsing and certifying `f`, finite differences, monotone
//! iteration, shooting and Newton solvers, the principal eigenvalue of the
//! linearization, threshold searches and parameter sweeps, and a few
//! diagnostics built on the Pohozaev identity.

pub mod continuation;
pub mod diagnostics;
pub mod discretization;
pub mod expr;
pub mod nonlinearity;
pub mod quadrature;
pub mod report;
pub mod solvers;
pub mod spectral;
