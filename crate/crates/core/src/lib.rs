//! Finite-dimensional computational model of semi-finite von Neumann algebras
//! (finite direct sums of complex matrix blocks with weighted traces) and the
//! extension machinery that turns a projection mapping of the form
//! `p -> support(U(p))` into a certified Jordan *-homomorphism.

pub mod algebra;
pub mod battery;
pub mod counterexample;
pub mod extension;
pub mod generators;
pub mod linmap;
pub mod report;
pub mod sample;
pub mod spectral;
pub mod surjectivity;
pub mod tol;

pub use algebra::{AlgebraDescriptor, Operator, ProjectionChain};
pub use battery::BatteryReport;
pub use extension::{CertificateReport, CornerInverse, ExtensionProblem, ExtensionResult};
pub use linmap::LinearMapMatrix;
pub use spectral::SpectralForm;
pub use tol::Tolerances;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("hypothesis violated: {name} (residual {residual:.3e} > tolerance {tolerance:.3e}) [{context}]")]
    Hypothesis {
        name: String,
        residual: f64,
        tolerance: f64,
        context: String,
    },
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
