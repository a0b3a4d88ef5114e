//! Laboratory for a four-dimensional equivariant vector field carrying a
//! heteroclinic cycle between two equilibria on an invariant axis.
//!
//! The crate evaluates the cubic field and its Jacobian exactly, computes the
//! axis equilibria and their eigenvalues in closed form, checks the full set
//! of coefficient inequalities and stability hypotheses (in both their printed
//! and eigenvalue-based forms), integrates trajectories with an adaptive
//! embedded Runge-Kutta pair, and runs seeded Monte Carlo experiments that
//! decide which of the two competing planar subcycles, if any, attracts
//! nearby initial conditions.

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod manifest;
pub mod model;

pub use error::{AnalysisError, ExperimentError, IntegratorError, ModelError};
pub use model::{CoefficientSet, StateVector, SubspaceId, SymmetryElement};
