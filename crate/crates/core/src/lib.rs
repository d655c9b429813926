//! Near-field beamfocusing for integrated sensing and communication:
//! channels, communication metrics, sensing bounds, penalty-SCA design,
//! hybrid factorization and estimator baselines.

pub mod bounds;
pub mod comm;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod hybrid;
pub mod linalg;
pub mod sca;
pub mod scenario;

pub use error::{Error, Result};
