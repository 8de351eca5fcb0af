//! Isothermal fully-symmetric Gaussian probes for private distributed phase
//! sensing: state construction, quantum and homodyne Fisher information,
//! precision, privacy, and optimisation over the state family.

pub mod error;
pub mod fsg;
pub mod homodyne;
pub mod metrology;
pub mod optimizer;
pub mod search;
pub mod symplectic;

pub use error::{Error, Result};
