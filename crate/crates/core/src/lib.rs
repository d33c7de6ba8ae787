//! Structured sparse nonnegative low-rank factorization of bipartite count
//! data under imperfect detection.
//!
//! Observed counts are modeled as binomial thinnings of latent Poisson
//! counts whose intensities factor through nonnegative embeddings, with the
//! detection probabilities driven by pair-level features. Square-root
//! penalties on the within-group similarity and cross-group connectivity
//! matrices are handled by an augmented-Lagrangian splitting whose auxiliary
//! blocks admit exact half-thresholding updates, while the factor blocks use
//! projected gradient descent and the detection block stays convex.
//!
//! The crate also ships the two count-model baselines, the synthetic data
//! generator, evaluation metrics, and dataset serialization used by the
//! experiment harness.

pub mod alpha;
pub mod assignment;
pub mod baselines;
pub mod datagen;
pub mod driver;
pub mod error;
pub mod init;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod prox;
pub mod types;
pub mod uv;

pub use error::{Error, Result};
pub use types::{
    AuxBlock, AuxState, Block, CountData, DetectionState, FactorPair, FeatureMatrix, FitResult,
    KktResiduals, PerBlock, SolverConfig, StopReason, Trace,
};
