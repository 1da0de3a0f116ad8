//! Estimation of mixed membership stochastic blockmodels from one observed
//! graph.
//!
//! The crate implements the full path from model sampling to parameter
//! recovery:
//!
//! 1. [`model`] — samplers for the blockmodel and its random dot product
//!    representation, plus the exact latent-position factorization;
//! 2. [`embedding`] — adjacency spectral embedding, the projection frame used
//!    by the fitting step, and orthogonal alignment utilities;
//! 3. [`polytope`] — minimum-volume enclosing polytope fitting with the
//!    sample-size-driven shrinkage correction;
//! 4. [`estimation`] — the end-to-end estimator producing the connectivity
//!    matrix, per-node memberships, and Dirichlet concentration estimates;
//! 5. [`io`] — deterministic edge-list, CSV, and JSON interchange.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases at the crate root fix the precision the command line tool uses.

#![forbid(unsafe_code)]

pub mod embedding;
pub mod error;
pub mod estimation;
pub mod io;
pub mod linalg;
pub mod model;
pub mod polytope;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision model specification.
pub type ModelSpec64 = model::ModelSpec<f64>;
/// Double-precision membership matrix.
pub type MembershipMatrix64 = model::MembershipMatrix<f64>;
/// Double-precision latent positions.
pub type LatentPositions64 = model::LatentPositions<f64>;
/// Double-precision graph sample.
pub type GraphSample64 = model::GraphSample<f64>;
/// Double-precision spectral embedding.
pub type Embedding64 = embedding::Embedding<f64>;
/// Double-precision projection frame.
pub type PcaFrame64 = embedding::PcaFrame<f64>;
/// Double-precision polytope.
pub type Polytope64 = polytope::Polytope<f64>;
/// Double-precision shrink policy.
pub type ShrinkPolicy64 = estimation::ShrinkPolicy<f64>;
/// Double-precision estimation result.
pub type EstimationResult64 = estimation::EstimationResult<f64>;
