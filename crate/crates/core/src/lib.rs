//! Tools for measuring how hard nearest-neighbor search is in a dataset.
//!
//! The central quantity is the *relative contrast* of a dataset: the ratio of
//! the expected query-to-random-point distance to the expected
//! query-to-nearest-neighbor distance. A contrast near 1 means the nearest
//! neighbor is barely distinguishable from a random point; a large contrast
//! means search is easy. The crate provides:
//!
//! - [`data`]: datasets (dense or sparse), `L_p` distances, brute-force
//!   k-NN ground truth, and file I/O,
//! - [`moments`]: per-dimension absolute moments feeding the contrast model,
//! - [`contrast`]: empirical and predicted relative contrast and the
//!   normalized variance `sigma'` that links data properties to contrast,
//! - [`synth`]: seeded synthetic data generators,
//! - [`linalg`]: covariance, symmetric and generalized eigensolvers, and the
//!   standard normal CDF/quantile,
//! - [`intrinsic`]: effective and intrinsic dimensionality estimators,
//! - [`hashing`]: p-stable LSH, PCA / MRC binary hashing, and a recall
//!   evaluation harness against brute-force ground truth.

pub mod contrast;
pub mod data;
pub mod error;
pub mod hashing;
pub mod intrinsic;
pub mod linalg;
pub mod moments;
pub mod rng;
pub mod synth;

pub use data::{brute_force_knn, lp_distance, DataFormat, Dataset, Metric, NeighborList};
pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
