//! Gaussians, mixtures, datasets and the dense/negligible split.

mod dataset;
mod dense;
mod gaussian;
mod json;
mod mixture;

pub use dataset::Dataset;
pub use dense::{dense_decompose, DenseDecomposition};
pub(crate) use gaussian::sym_sqrt;
pub use gaussian::{gaussian_delta, Gaussian, PIVOT_REL_TOL, SYMMETRY_TOL};
pub use json::{ComponentJson, ModelJson};
pub use mixture::{Mixture, WEIGHT_SUM_TOL};
