//! Multi-view Laplacian support vector machines.
//!
//! Two-view semi-supervised classification that combines graph-Laplacian
//! manifold regularization with a penalty on disagreement between the views.
//! Training reduces to a convex quadratic program over kernel expansion
//! coefficients; this crate solves its box-constrained dual by projected
//! gradient ascent and certifies the result with the duality gap.
//!
//! Modules:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`data`] | two-view datasets, synthetic two-moons/two-lines data, splits, CSV I/O |
//! | [`kernel`] | linear and Gaussian kernels, Gram matrices, median width heuristic |
//! | [`graph`] | k-NN adjacency, Laplacians, manifold energy |
//! | [`qp`] | quadratic form assembly, dual solver, primal recovery |
//! | [`model`] | training, prediction, LapSVM and co-SVM specializations, persistence |
//! | [`theory`] | Rademacher complexity bounds, Monte-Carlo estimate, generalization bound |
//! | [`experiment`] | grid search, repeated-split experiments, reports, config files |

pub mod data;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod kernel;
pub(crate) mod linalg;
pub mod model;
pub mod qp;
pub mod theory;

pub use error::{Error, Result};

pub use nalgebra::{DMatrix, DVector};
