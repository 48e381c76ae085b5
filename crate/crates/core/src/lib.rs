//! Operator geometric means, quantum Renyi divergences and error-exponent
//! bounds for composite quantum hypothesis testing.

pub mod channels;
pub mod classical;
pub mod config;
pub mod divergences;
pub mod error;
pub mod exponents;
pub mod matcore;
pub mod means;
pub mod membership;
pub mod projections;
pub mod random;
pub mod reproduce;

pub use error::{Error, Result};
pub use matcore::{CMat, ExtReal, PsdMatrix};
