//! Time-dependent Dyson maps and metric operators for one-site
//! non-Hermitian PT-symmetric spin Hamiltonians, with numerical checks of
//! the identities that tie the non-Hermitian and Hermitian pictures
//! together.

pub mod cli;
pub mod dyson;
pub mod ermakov;
pub mod error;
pub mod evolution;
pub mod linalg;
pub mod spin;

pub use error::{Error, Result};
pub use linalg::{CVector, EigenStatus, EigenSystem, Matrix};
pub use spin::{ModelParams, Regime, Spin};
