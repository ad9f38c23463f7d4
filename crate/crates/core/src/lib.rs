//! Integral-equation solvers for the FitzHugh-Nagumo system on a bounded interval.

pub mod certificate;
pub mod error;
pub mod estimates;
pub mod field;
pub mod kernel;
pub mod linear;
pub mod nonlinear;
pub mod oracle;
pub mod params;
pub mod pointwise;
mod propagator;
pub mod quadrature;
pub mod scenarios;
pub mod theta;
pub mod special;

pub use certificate::{BoundCertificate, BoundId};
pub use error::{FhnError, Result};
pub use params::FhnParams;
pub use propagator::SolverOptions;
