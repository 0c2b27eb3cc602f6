//! Exact two-body reduced density matrices, free-energy identities and
//! finite-size scaling for the Lipkin-Meshkov-Glick model and general
//! pairwise qudit Hamiltonians.

pub mod cli;
pub mod entanglement;
pub mod error;
pub mod lmg;
pub mod qudit;
pub mod scaling;
pub mod spectra;
pub mod sweep;

pub use error::{Error, Result};
