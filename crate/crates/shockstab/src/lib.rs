//! Numerical laboratory for the stability of two-shock Riemann fans under the
//! 1D barotropic Navier–Stokes equations in Lagrangian coordinates.
//!
//! The crate builds the constructive objects of the a-contraction method with
//! shifts (viscous shock profiles, composite waves, weights, shift ODEs, the
//! weighted relative-entropy budget) and lets each identity or inequality of
//! the method be checked on discrete data.
//!
//! Module map:
//!
//! * [`gas_core`]: pressure law, entropies, relative functionals, inequality suite.
//! * [`riemann`]: two-shock fans satisfying Rankine–Hugoniot and Lax conditions.
//! * [`wave_profiles`]: viscous shock profiles, composite waves, BD transform.
//! * [`weights_shifts`]: weight functions and the shift ODE.
//! * [`ns_solver`]: explicit finite-difference solver for the (v,h) and (v,u) systems.
//! * [`entropy_functionals`]: Y_i, the bad/good budget, truncation, localized functionals.
//! * [`simulation`]: the solver coupled to the shift ODE, initial data.
//! * [`poincare_check`]: falsification harness for the weighted Poincaré-type inequality.

pub mod entropy_functionals;
pub mod error;
pub mod gas_core;
pub mod ns_solver;
pub mod poincare_check;
pub mod quadrature;
pub mod riemann;
pub mod simulation;
pub mod wave_profiles;
pub mod weights_shifts;

pub use error::{Error, Result};
