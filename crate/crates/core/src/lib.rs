//! Zero density and expected nodal length of boundary-adapted random
//! spherical harmonics on the Dirichlet hemisphere, with Monte Carlo
//! validation by direct nodal-line extraction.

pub mod config;
pub mod covariance;
pub mod density;
pub mod error;
pub mod kac_rice;
pub mod nodal;
pub mod oracles;
pub mod sampler;
pub mod special;

pub use error::{Error, Result};
