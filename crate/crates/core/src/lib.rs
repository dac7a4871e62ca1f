//! Quantized Dirac field in a classical electromagnetic potential over a
//! momentum-truncated plane-wave basis, in the Heisenberg and Schrödinger
//! pictures.

pub mod error;
pub mod linalg;
pub mod modes;
pub mod observables;
pub mod fock;
pub mod gaussian;
pub mod onebody;
pub mod report;
pub mod config;
pub mod experiments;
pub mod cli;

pub use error::{Error, Result};
