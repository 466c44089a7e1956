//! Ising problems, coherent-Ising-machine network dynamics, frustration
//! elimination networks and delay-line compilation.

pub mod delayline;
pub mod dynamics;
pub mod error;
pub mod frustration;
pub mod ising;
pub mod seed;

pub use error::{Error, Result};
