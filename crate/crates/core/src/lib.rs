//! Signed graph and tree operads of graph-based deformation quantization.
//!
//! Exact rational arithmetic throughout. Graph and tree compositions, twisted differentials,
//! actions on polynomial polyvector fields and Hochschild cochains, and cohomology of finite
//! slices of graph complexes.

pub mod graph_core;
pub mod graph_operads;
pub mod homology;
pub mod lincomb;
pub mod representations;
pub mod scalar_linalg;
pub mod suites;
pub mod tree_operads;
pub mod twisting;

pub use lincomb::LinComb;
pub use scalar_linalg::Rational;
