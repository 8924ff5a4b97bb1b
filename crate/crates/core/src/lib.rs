//! Heat conduction with memory: forward solvers, kernel recovery from
//! boundary flux, and the numerical experiments built on them.

pub mod experiments;
pub mod forward;
pub mod inverse;
pub mod kernel;
pub mod laplace;
pub mod quadrature;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
