//! Online distributed principal component analysis.
//!
//! The crate simulates a star topology of `m` nodes that receive streaming
//! batches over `T` rounds. Each round, nodes send their local top-K
//! eigenvectors to a center which averages the projectors, truncates to
//! rank K, and folds the result into a running projector accumulator. The
//! final estimate is the top-K eigenspace of that accumulator.
//!
//! Alongside the online estimator the crate provides one-shot distributed
//! PCA, pooled PCA, an all-eigenvector baseline, synthetic spiked-covariance
//! data, the projection distance between subspaces, and the downstream
//! low-rank and k-means evaluations used to compare the estimators.

pub mod algorithms;
pub mod datagen;
mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod stats;
pub mod subspace;
pub mod tasks;

pub use algorithms::{
    aggregate_local, baseline_all_eigenvectors, dpca, full_pca, local_top_k, odpca, OdpcaState,
};
pub use datagen::{make_spiked_model, SeededStream, SpikedModel};
pub use error::{Error, Result};
pub use linalg::{DenseMatrix, EigenDecomposition, SymmetricMatrix};
pub use subspace::{projection_distance, OrthonormalBasis, SpectrumStats};
