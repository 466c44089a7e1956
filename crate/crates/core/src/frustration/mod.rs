//! Frustration-eliminated networks and solution-search sweeps.

mod build;
mod sweep;

pub use build::{
    build_feedback, build_general_fe, build_hyperspin, build_plain, default_hyperspin_phases, ControlForce,
    FeLayout, FeNetwork, Scheme,
};
pub use sweep::{
    amplitude_stats, excited_search, flag_readout, max_channel_residual, readout, run_sweep, summarize,
    write_sweep_csv, RunStatus, SweepConfig, SweepRecord, SweepSummary, DEFAULT_ACCEPTANCE_RATIO,
    SWEEP_CSV_HEADER, UNDECIDED_RELATIVE,
};
