//! Spectral clustering for nonuniform hypergraphs built on the nonbacktracking
//! operator and the linearised belief-propagation Jacobian.
//!
//! The numeric kernels (sparse operators, eigensolvers, k-means) are generic
//! over [`Scalar`] (`f32` or `f64`); the aliases below fix `f64`, which is what
//! the samplers, estimators and algorithms use.

pub mod clustering;
pub mod eigen;
pub mod error;
pub mod hsbm;
pub mod hypergraph;
pub mod scalar;
pub mod sparse;
pub mod spectral_ops;

pub use error::{Error, Result};
pub use hypergraph::{Hypergraph, LabelVector, PointedEdge};
pub use scalar::Scalar;

/// Double-precision sparse operator.
pub type SparseOp = sparse::SparseLinearOperator<f64>;
/// Double-precision spectrum.
pub type Spectrum = eigen::Spectrum<f64>;
/// Double-precision parameter matrices.
pub type GroupMatrices = spectral_ops::GroupMatrixSet<f64>;
