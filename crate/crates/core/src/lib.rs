//! Multiwavelet filter banks, wavelet-based multigrid, GMRES preconditioning
//! and a trainable multiwavelet multigrid neural operator.

pub mod error;
pub mod io;
pub mod krylov;
pub mod m2no;
pub mod multigrid;
pub mod mwtransform;
pub mod pdegrid;
pub mod polywavelet;
pub mod spectral;
pub mod trace;

pub use error::{Error, Result};
pub use trace::ResidualTrace;
