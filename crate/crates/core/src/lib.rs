//! Discrete Dirac systems with pseudo-exponential potentials.
//!
//! A generalized Bäcklund–Darboux transformation (GBDT) turns a finite
//! parameter triple {A, S₀, Π₀} into an explicit discrete Dirac system:
//! self-adjoint (`y_{k+1} = (I + izjC_k) y_k`) or skew-self-adjoint
//! (`y_{k+1} = (I + (i/z)C_k) y_k`). For such systems the Weyl function and
//! the reflection coefficient are the same rational matrix function, and
//! every object involved (fundamental solutions, Jost solutions, transfer
//! matrix functions, the closed-form reflection coefficient) is computable
//! by at least two independent routes. This crate builds all of those
//! routes and certifies numerically that they agree.
//!
//! Module layout:
//!
//! * [`matcore`]: dense complex-matrix substrate (Cholesky, Sylvester,
//!   spectra, controllability ranks).
//! * [`triples`]: admissible / strongly admissible parameter triples:
//!   validation, derivation of S₀, seeded random generation.
//! * [`gbdt`]: the recursions for {Π_k}, {S_k}, the potentials {C_k}, the
//!   auxiliary matrices R_k, Q_k and their limits.
//! * [`transfer`]: transfer matrix function, fundamental and Jost
//!   solutions, asymptotic block structure.
//! * [`spectral`]: Weyl functions, reflection coefficients (closed form
//!   and truncation oracle), Weyl summability checks and the equality
//!   certification.
//! * [`cli`]: JSON/CSV front end used by the `dirac-gbdt` binary.

pub mod cli;
pub mod error;
pub mod gbdt;
pub mod matcore;
pub mod spectral;
pub mod transfer;
pub mod triples;

pub use error::{Error, Result};
pub use matcore::CMatrix;
pub use triples::{ParameterTriple, Signature, SystemKind};
