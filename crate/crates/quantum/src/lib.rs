//! Truncated-Fock quantum models of frustration-eliminated oscillator
//! networks: dark-state algebra, quantum trajectories and a dense Lindblad
//! reference propagator.

pub mod dark;
pub mod dense;
pub mod error;
pub mod fidelity;
pub mod fock;
pub mod mcwf;
pub mod network;

pub use error::{QuantumError, Result};
