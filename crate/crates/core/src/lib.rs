//! Numerical laboratory for superlinear parabolic problems.
//!
//! Spectral Dirichlet evolution of `u_t + A u = F(u)` on intervals and radial
//! 3-balls, with energy dissipation and multiplier identities, blow-up rate
//! and decay fits, similarity-variable rescalings, critical-exponent
//! calculus with its bootstrap ledger, and the explicit constructions
//! (1D steady states, sign-changing periodic data, concentrating bump
//! families) used to probe where universal estimates fail.

pub mod energy;
pub mod blowup;
pub mod constructions;
pub mod error;
pub mod exponents;
pub mod grid;
pub mod harness;
pub mod integrate;
pub mod nonlinear;
pub mod operators;

pub use energy::EnergyBreakdown;
pub use error::{Error, Result};
pub use grid::{Field, Grid, GridKind};
pub use integrate::{Outcome, ProblemSpec, Scheme, StepperConfig, Trajectory};
pub use nonlinear::{NonlinearitySpec, SpsSign};
pub use operators::{OperatorFlavor, OperatorSpec, SpectralBasis};
