//! Reflection-positivity certification for bipartite operators and Levin-Wen
//! string-net Hamiltonians.

pub mod cli;
pub mod error;
pub mod fusion;
pub mod lattice;
pub mod linalg;
pub mod lwmodel;
pub mod rp;
pub mod sft;
pub mod suite;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, C64};
