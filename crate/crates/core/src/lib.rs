//! Numerical continuation for the one-dimensional Kirchhoff problem
//!
//! ```text
//! -(a ∫|u'|² + 1) u'' = λ f(x) u + g(x) |u|^{p-2} u   on (0, 1),   u(0) = u(1) = 0
//! ```
//!
//! discretized with second-order finite differences.

pub mod error;
pub mod grid;
pub mod linalg;
pub mod eigen;
pub mod kirchhoff;
pub mod solver;
pub mod continuation;
pub mod thresholds;

pub use error::{Error, Result};
pub use grid::{dirichlet_energy, neg_laplacian, weighted_integral, Field, Mesh, Weight};
