//! TOML run configuration. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cim_core::delayline::PiPhase;
use cim_core::dynamics::{EngineParams, Method, PumpSchedule};
use cim_core::frustration::{default_hyperspin_phases, ControlForce, Scheme};
use cim_core::ising::{IsingModel, ModelSource};
use cim_quantum::fidelity::{FidelitySetup, InitialState};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelSource>,
    /// Defaults to `general_fe`.
    pub scheme: Option<Scheme>,
    /// Defaults to the flip count of the ground state.
    pub n_flip: Option<usize>,
    #[serde(default)]
    pub control: ControlForce,
    #[serde(default)]
    pub engine: EngineParams,
    pub schedule: Option<PumpSchedule>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub sweep: SweepSection,
    /// Hyperspin phases in units of π; defaults per model otherwise.
    pub phases: Option<Vec<PhaseEntry>>,
    #[serde(default)]
    pub quantum: QuantumSection,
    pub dark: Option<DarkSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub acceptance_ratio: Option<f64>,
    pub init_radius: Option<f64>,
    pub t_end: Option<f64>,
    pub method: Option<Method>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseEntry {
    pub pair: (usize, usize),
    /// Multiple of π, e.g. `"1/4"`.
    pub phase: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantumSection {
    pub alpha_sq: f64,
    pub gamma: f64,
    pub gamma_c: f64,
    pub cutoff: Option<usize>,
    pub total_cap: Option<usize>,
    pub t_ramp: f64,
    pub t_hold: f64,
    pub trajectories: usize,
    pub initial: String,
    pub validity_threshold: f64,
}

impl Default for QuantumSection {
    fn default() -> Self {
        let d = FidelitySetup::default();
        Self {
            alpha_sq: d.alpha_sq,
            gamma: d.gamma,
            gamma_c: d.gamma_c,
            cutoff: d.cutoff,
            total_cap: d.total_cap,
            t_ramp: d.t_ramp,
            t_hold: d.t_hold,
            trajectories: d.n_traj,
            initial: "vacuum".into(),
            validity_threshold: d.trajectory.validity_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarkSection {
    /// One `[re, im]` per mode of the built network.
    pub amplitudes: Vec<[f64; 2]>,
    #[serde(default = "default_dark_tolerance")]
    pub tolerance: f64,
}

fn default_dark_tolerance() -> f64 {
    1e-9
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn build_model(&self) -> Result<IsingModel, CliError> {
        let src = self.model.as_ref().ok_or_else(|| CliError::Usage("config has no [model] section".into()))?;
        Ok(src.build()?)
    }

    pub fn phases(&self, model: &IsingModel) -> Result<BTreeMap<(usize, usize), f64>, CliError> {
        let Some(list) = &self.phases else {
            return Ok(default_hyperspin_phases(model));
        };
        let mut out = BTreeMap::new();
        for e in list {
            let p: PiPhase = e.phase.parse().map_err(|m| CliError::Usage(format!("phase for {:?}: {m}", e.pair)))?;
            let key = (e.pair.0.min(e.pair.1), e.pair.0.max(e.pair.1));
            if out.insert(key, p.radians()).is_some() {
                return Err(CliError::Usage(format!("phase for {key:?} given twice")));
            }
        }
        Ok(out)
    }

    pub fn fidelity_setup(&self) -> Result<FidelitySetup, CliError> {
        let q = &self.quantum;
        let initial = match q.initial.as_str() {
            "vacuum" => InitialState::Vacuum,
            "dark" => InitialState::Dark,
            other => return Err(CliError::Usage(format!("quantum.initial = {other:?}, expected vacuum or dark"))),
        };
        let mut setup = FidelitySetup {
            alpha_sq: q.alpha_sq,
            gamma: q.gamma,
            gamma_c: q.gamma_c,
            cutoff: q.cutoff,
            total_cap: q.total_cap,
            t_ramp: q.t_ramp,
            t_hold: q.t_hold,
            n_traj: self.samples.unwrap_or(q.trajectories),
            initial,
            ..FidelitySetup::default()
        };
        if let Some(s) = self.seed {
            setup.seed = s;
        }
        setup.trajectory.validity_threshold = q.validity_threshold;
        Ok(setup)
    }

    pub fn dark_amplitudes(&self) -> Result<(Vec<Complex64>, f64), CliError> {
        let d = self.dark.as_ref().ok_or_else(|| CliError::Usage("config has no [dark] section".into()))?;
        Ok((d.amplitudes.iter().map(|&[re, im]| Complex64::new(re, im)).collect(), d.tolerance))
    }
}
