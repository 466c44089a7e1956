//! Semiclassical (mean-field) dynamics of DOPO/NDOPO networks.

mod integrate;
mod network;
mod params;
mod rhs;

pub use integrate::{
    integrate, random_initial_state, IntegrateOptions, Method, NetworkState, Tolerances, Trajectory,
};
pub use network::{DissipativeChannel, FeedbackCoupling, ModeKind, ModeSpec, OscillatorNetwork};
pub use params::{EngineParams, PumpSchedule};
pub use rhs::{dopo_rhs, feedback_rhs, fixed_point_residual, ndopo_rhs};
