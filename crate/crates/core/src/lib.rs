//! Spectral regularization of linear ill-posed problems.

pub mod asc;
pub mod choice;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod ops;
pub mod problems;
pub mod regularizers;

pub use error::{Error, Result};
