//! Single-excitation dynamics of a quasiperiodic chain coupled to a lattice bath.
//!
//! The chain is an Aubry-Andre-Harper model; each atom couples to one site of a
//! d-dimensional tight-binding bath along its body diagonal. Units are 2J = 1.

pub mod bath;
pub mod cli;
pub mod config;
pub mod error;
pub mod export;
pub mod green;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod presets;
pub mod propagator;
pub mod spectrum;

pub use config::{ModelConfig, RunSettings, Scenario};
pub use error::{Error, Result};
