//! Simulation and analysis toolkit for an economy in which production
//! disruptions spread contagiously through an input-output network.
//!
//! - [`numerics`]: binomial tails, Lambert W, Student-t tails.
//! - [`strategy`]: utility, candidate best responses, best response.
//! - [`meanfield`]: the deterministic dynamics of the functional fraction.
//! - [`abm`]: finite-population stochastic simulation with sticky links and
//!   preferential attachment.
//! - [`analysis`]: quadratic least-squares fits with inference.
//! - [`cli`]: the `ctrap` command-line front end.

pub mod abm;
pub mod analysis;
pub mod cli;
pub mod error;
pub mod meanfield;
pub mod numerics;
pub mod strategy;

pub use error::{Error, Result};
pub use numerics::Probability;
pub use strategy::{ModelParams, Strategy};
