pub mod error;
pub mod forward;
pub mod frackernel;
pub mod gamma;
pub mod inverse;
pub mod mlf;
pub mod mode_solver;
pub mod oracle;
pub mod profile;
pub mod quad;
pub mod scenarios;
pub mod selftest;
pub mod spectral;

pub use error::{Error, Result};
