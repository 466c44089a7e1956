//! End-to-end dark-state fidelity run on a hyperspin network.

use std::collections::BTreeMap;

use cim_core::dynamics::{EngineParams, PumpSchedule};
use cim_core::frustration::build_hyperspin;
use cim_core::ising::IsingModel;
use num_complex::Complex64;

use crate::dark::{construct_dark_components, dark_state_vector, gram_normalize, quantum_alpha, DarkComponent};
use crate::error::{QuantumError, Result};
use crate::fock::{inner, FockSpace};
use crate::mcwf::{mean_and_stderr, trajectory_map, TrajectoryConfig};
use crate::network::{default_cutoff, FockNetwork};

/// Ratio between the validity threshold and the stationary shell weight the
/// default cap aims for. Single trajectories overshoot the stationary
/// weight by up to about 100× while the pump ramps, so a margin of only 2
/// left a third of triangle runs flagged.
pub const CAP_MARGIN: f64 = 500.0;

/// Smallest total-photon cap whose shell holds less than
/// `threshold / CAP_MARGIN` of a Poisson distribution with mean
/// `n_modes·|α|²`, the total-number law of a product of coherent states with
/// that mean.
pub fn default_total_cap(n_modes: usize, alpha_sq: f64, threshold: f64) -> usize {
    let mean = n_modes as f64 * alpha_sq;
    let mut k = 0usize;
    // log P(k) = −mean + k ln(mean) − ln k!
    let mut log_p = -mean;
    loop {
        if k as f64 > mean && log_p.exp() < threshold / CAP_MARGIN {
            return k;
        }
        k += 1;
        log_p += mean.ln() - (k as f64).ln();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    Vacuum,
    /// The target dark state itself.
    Dark,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelitySetup {
    pub alpha_sq: f64,
    /// Two-photon rate of every DOPO and of the NDOPO pair.
    pub gamma: f64,
    /// Channel rate.
    pub gamma_c: f64,
    /// Per-mode cutoff; `None` uses [`default_cutoff`].
    pub cutoff: Option<usize>,
    /// Total-photon cap; `None` uses [`default_total_cap`].
    pub total_cap: Option<usize>,
    pub t_ramp: f64,
    pub t_hold: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub initial: InitialState,
    pub trajectory: TrajectoryConfig,
}

impl Default for FidelitySetup {
    fn default() -> Self {
        Self {
            alpha_sq: 2.0,
            gamma: 1.0,
            gamma_c: 3.0,
            cutoff: None,
            total_cap: None,
            t_ramp: 20.0,
            t_hold: 30.0,
            n_traj: 200,
            seed: 1,
            initial: InitialState::Vacuum,
            trajectory: TrajectoryConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub id: usize,
    pub jumps: usize,
    pub fidelity: f64,
    pub max_boundary: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityReport {
    pub mean: f64,
    pub stderr: f64,
    pub rows: Vec<TrajectoryRow>,
    pub components: Vec<DarkComponent>,
    pub delta: f64,
    pub dim: usize,
    pub cutoff: usize,
    pub total_cap: usize,
}

impl FidelityReport {
    pub fn n_invalid(&self) -> usize {
        self.rows.iter().filter(|r| !r.valid).count()
    }

    pub fn csv_rows(&self) -> Vec<(usize, usize, f64, bool)> {
        self.rows.iter().map(|r| (r.id, r.jumps, r.fidelity, r.valid)).collect()
    }
}

/// Builds the hyperspin network for `model`, runs the trajectory ensemble
/// and scores each final state against the equal-weight dark superposition.
pub fn hyperspin_fidelity(
    model: &IsingModel,
    phases: &BTreeMap<(usize, usize), f64>,
    setup: &FidelitySetup,
) -> Result<FidelityReport> {
    if !(setup.alpha_sq > 0.0 && setup.gamma > 0.0 && setup.gamma_c >= 0.0) {
        return Err(QuantumError::InvalidParameter("alpha_sq and gamma must be positive".into()));
    }
    if setup.n_traj == 0 {
        return Err(QuantumError::InvalidParameter("n_traj must be at least 1".into()));
    }
    let params = EngineParams { gamma_d: setup.gamma, gamma_c: setup.gamma_c, ..EngineParams::default() };
    let fe = build_hyperspin(model, phases, &params)?;
    let n_modes = fe.n_modes();
    let cutoff = setup.cutoff.unwrap_or_else(|| default_cutoff(setup.alpha_sq));
    let total_cap =
        setup.total_cap.unwrap_or_else(|| default_total_cap(n_modes, setup.alpha_sq, setup.trajectory.validity_threshold));
    let space = FockSpace::uniform(n_modes, cutoff, Some(total_cap))?;
    let s_final = 0.5 * setup.alpha_sq * setup.gamma;
    let schedule = PumpSchedule::LinearRampThenHold { p_max: s_final, t_ramp: setup.t_ramp, t_hold: setup.t_hold };
    let network = FockNetwork::from_network(&fe.network, space, setup.gamma, schedule)?;
    let components = construct_dark_components(&fe, quantum_alpha(s_final, setup.gamma))?;
    let sup = gram_normalize(&components)?;
    let dark = dark_state_vector(network.space(), &components, &sup.coefficients)?;
    let initial = match setup.initial {
        InitialState::Vacuum => network.space().vacuum(),
        InitialState::Dark => dark.clone(),
    };
    let rows = trajectory_map(&network, &initial, &setup.trajectory, setup.n_traj, setup.seed, |o| TrajectoryRow {
        id: o.id,
        jumps: o.jumps,
        fidelity: inner(&dark, &o.state).norm_sqr(),
        max_boundary: o.max_boundary,
        valid: o.valid,
    })?;
    let fids: Vec<f64> = rows.iter().map(|r| r.fidelity).collect();
    let (mean, stderr) = mean_and_stderr(&fids);
    Ok(FidelityReport {
        mean,
        stderr,
        rows,
        components,
        delta: sup.delta,
        dim: network.dim(),
        cutoff,
        total_cap,
    })
}

/// Population of the span of `vectors` in `psi` (normalized).
pub fn manifold_population(vectors: &[Vec<Complex64>], psi: &[Complex64]) -> f64 {
    crate::dense::orthonormalize(vectors).iter().map(|e| inner(e, psi).norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_cap_for_the_triangle() {
        // Mean 10: P(27) ≈ 4.2e−6 is too much, P(28) ≈ 1.5e−6 is not.
        assert_eq!(default_total_cap(5, 2.0, 1e-3), 28);
        assert!(default_total_cap(1, 0.5, 1e-3) >= 1);
    }
}
