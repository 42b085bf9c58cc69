//! Differentially private learning of Gaussian mixtures.
//!
//! Per-chunk list decoding feeds a private common-member selector that picks
//! from a data-independent, locally small cover of dense mixtures.

pub mod covers;
pub mod error;
pub mod listdecode;
pub mod mde;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod private_select;
pub mod provenance;
pub mod rng;

pub use error::{Error, Result};
pub use model::{dense_decompose, gaussian_delta, Dataset, DenseDecomposition, Gaussian, Mixture};
