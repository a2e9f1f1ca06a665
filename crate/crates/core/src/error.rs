//! Error type shared by all numerical modules.

use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the linear-algebra substrate and the GBDT pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A square matrix was expected.
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    /// Incompatible shapes for the requested operation.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Sylvester equation A X - X B = C has no unique solution because the
    /// spectra of A and B (nearly) overlap.
    #[error("singular Sylvester equation: spectra separated by only {separation:.3e}")]
    SpectraOverlap { separation: f64 },

    /// A matrix that must be invertible was (numerically) singular.
    #[error("singular matrix while {context}")]
    Singular { context: String },

    /// An evaluation point fell too close to a pole of a resolvent.
    #[error("evaluation point {point} lies within {distance:.3e} of a pole")]
    NearPole { point: Complex64, distance: f64 },

    /// A matrix in the sequence {S_k} stopped being positive definite.
    #[error("S_{step} lost positive definiteness (pivot {pivot:.3e})")]
    PositivityLoss { step: usize, pivot: f64 },

    /// An iteration did not reach the requested tolerance.
    #[error("no convergence after {iterations} steps (last increment {last_increment:.3e})")]
    NoConvergence {
        iterations: usize,
        last_increment: f64,
    },

    /// Rejection sampling ran out of attempts.
    #[error("triple generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    /// The eigenvalue iteration failed to converge.
    #[error("eigenvalue computation failed for a {dim}x{dim} matrix")]
    EigenFailure { dim: usize },

    /// Anything that violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
