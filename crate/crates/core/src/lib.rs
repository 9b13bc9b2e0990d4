//! Monte Carlo laboratory for the parabolic Anderson model
//! `∂u = ½u'' + uξ` started from `δ₀`.

pub mod cli;
pub mod config;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod kernel;
pub mod noise;
pub mod normal;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
