//! Error types shared across the crate.

use thiserror::Error;

/// Errors from field / Jacobian evaluation and coefficient handling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("invalid coefficient set: {0}")]
    InvalidCoefficients(String),
}

/// Errors from equilibrium, condition and search computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("no real equilibria on the axis: discriminant b11^2 - 4 c1 = {discriminant} <= 0")]
    NoRealEquilibria { discriminant: f64 },
    #[error("axis equilibria do not straddle the origin (roots {x_first} and {x_second})")]
    SignPatternViolation { x_first: f64, x_second: f64 },
    #[error("degenerate coefficient: {0}")]
    DegenerateCoefficient(String),
    #[error("equilibrium is not a saddle in the invariant 3-space: lambda3 = {lambda3}, lambda4 = {lambda4}")]
    NotASaddleInS134 { lambda3: f64, lambda4: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Errors from trajectory integration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("invalid integrator configuration: {0}")]
    ConfigError(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Errors from connection verification and Monte Carlo experiments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("no unstable direction: eigenvalue {eigenvalue} along the shooting axis is not positive")]
    NoUnstableDirection { eigenvalue: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
}
