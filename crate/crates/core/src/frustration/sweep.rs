use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::build::{build_general_fe, ControlForce, FeNetwork};
use crate::dynamics::{
    integrate, random_initial_state, EngineParams, IntegrateOptions, Method, NetworkState, PumpSchedule,
};
use crate::error::{Error, Result};
use crate::ising::{energy, required_flips, solve_exact, IsingModel, SpinConfig};
use crate::seed::{sample_rng, sub_seed};

/// Undecided-spin threshold relative to the mean amplitude.
pub const UNDECIDED_RELATIVE: f64 = 1e-9;
/// Default per-mode acceptance threshold on `F / Ā²`.
pub const DEFAULT_ACCEPTANCE_RATIO: f64 = 1e-4;

/// Spin readout from the sign of the in-phase quadrature.
pub fn readout(amplitudes: &[Complex64], fe: &FeNetwork) -> Result<SpinConfig> {
    if amplitudes.len() != fe.n_modes() {
        return Err(Error::DimensionMismatch { expected: fe.n_modes(), got: amplitudes.len() });
    }
    let (mean, _) = amplitude_stats(amplitudes);
    let floor = (UNDECIDED_RELATIVE * mean).max(UNDECIDED_RELATIVE);
    let mut spins = Vec::with_capacity(fe.layout.signals.len());
    for &m in &fe.layout.signals {
        let re = amplitudes[m].re;
        if re.abs() < floor {
            return Err(Error::Undecided { mode: m, value: re.abs() });
        }
        spins.push(if re > 0.0 { 1 } else { -1 });
    }
    SpinConfig::new(spins)
}

/// Which couplings the general scheme flipped: `Re(B_nm)·Re(B_control) < 0`.
pub fn flag_readout(amplitudes: &[Complex64], fe: &FeNetwork) -> Result<Vec<bool>> {
    let bc = fe
        .layout
        .control
        .ok_or_else(|| Error::InvalidNetwork("network has no control mode".into()))?;
    if amplitudes.len() != fe.n_modes() {
        return Err(Error::DimensionMismatch { expected: fe.n_modes(), got: amplitudes.len() });
    }
    let rc = amplitudes[bc].re;
    Ok(fe.layout.flags.iter().map(|&f| amplitudes[f].re * rc < 0.0).collect())
}

/// `(Ā, F)` with `Ā` the mean magnitude over every mode and
/// `F = Σ (|A_k| − Ā)²`.
pub fn amplitude_stats(amplitudes: &[Complex64]) -> (f64, f64) {
    if amplitudes.is_empty() {
        return (0.0, 0.0);
    }
    let mags: Vec<f64> = amplitudes.iter().map(|a| a.norm()).collect();
    let mean = mags.iter().sum::<f64>() / mags.len() as f64;
    let fl = mags.iter().map(|m| (m - mean).powi(2)).sum();
    (mean, fl)
}

/// Largest `|L|` over the channels, for dark-state checks.
pub fn max_channel_residual(fe: &FeNetwork, amplitudes: &[Complex64]) -> f64 {
    fe.network
        .channels()
        .iter()
        .map(|ch| ch.residual(amplitudes).norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Settled,
    Undecided,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub index: u64,
    pub seed: u64,
    pub readout: Option<SpinConfig>,
    pub ising_energy: Option<f64>,
    pub mean_amp: f64,
    pub fluctuation: f64,
    pub accepted: bool,
    pub status: RunStatus,
    pub final_state: Vec<Complex64>,
}

impl SweepRecord {
    /// Per-mode fluctuation ratio `F / (Ā² · modes)`.
    pub fn ratio(&self) -> f64 {
        let modes = self.final_state.len().max(1) as f64;
        if self.mean_amp > 0.0 {
            self.fluctuation / (self.mean_amp * self.mean_amp * modes)
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub samples: usize,
    pub seed: u64,
    /// `None` uses the protocol for unit steady amplitude.
    pub schedule: Option<PumpSchedule>,
    /// `None` runs to the end of the schedule.
    pub t_end: Option<f64>,
    /// Radius of the initial-condition disk, relative to `√(P_max/γ_d)`.
    pub init_radius: f64,
    pub acceptance_ratio: f64,
    pub method: Method,
    /// `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            samples: 256,
            seed: 0,
            schedule: None,
            t_end: None,
            init_radius: 0.1,
            acceptance_ratio: DEFAULT_ACCEPTANCE_RATIO,
            method: Method::default(),
            workers: None,
        }
    }
}

impl SweepConfig {
    pub fn resolved_schedule(&self, params: &EngineParams) -> PumpSchedule {
        self.schedule.unwrap_or_else(|| PumpSchedule::for_amplitude(params, 1.0))
    }
}

fn run_one(fe: &FeNetwork, params: &EngineParams, cfg: &SweepConfig, schedule: &PumpSchedule, t_end: f64, index: u64) -> SweepRecord {
    let seed = sub_seed(cfg.seed, index);
    let mut rng = sample_rng(cfg.seed, index);
    let radius = cfg.init_radius * (schedule.peak().max(0.0) / params.gamma_d).sqrt();
    let init = NetworkState::new(0.0, random_initial_state(fe.n_modes(), radius, &mut rng));
    let opts = IntegrateOptions { method: cfg.method, ..Default::default() };
    let failed = |status, state: Vec<Complex64>| {
        let (mean_amp, fluctuation) = amplitude_stats(&state);
        SweepRecord {
            index,
            seed,
            readout: None,
            ising_energy: None,
            mean_amp,
            fluctuation,
            accepted: false,
            status,
            final_state: state,
        }
    };
    let state = match integrate(&fe.network, params, schedule, &init, t_end, &opts) {
        Ok(tr) => tr.final_state().amplitudes.clone(),
        Err(_) => return failed(RunStatus::Diverged, vec![Complex64::new(f64::NAN, f64::NAN); fe.n_modes()]),
    };
    let spins = match readout(&state, fe) {
        Ok(s) => s,
        Err(_) => return failed(RunStatus::Undecided, state),
    };
    let (mean_amp, fluctuation) = amplitude_stats(&state);
    let modes = fe.n_modes() as f64;
    let accepted = mean_amp > 0.0 && fluctuation < cfg.acceptance_ratio * mean_amp * mean_amp * modes;
    let e = energy(&fe.model, &spins).ok();
    SweepRecord {
        index,
        seed,
        readout: Some(spins),
        ising_energy: e,
        mean_amp,
        fluctuation,
        accepted,
        status: RunStatus::Settled,
        final_state: state,
    }
}

/// Integrates `cfg.samples` random initial conditions; records come back in
/// sample order regardless of the worker count.
pub fn run_sweep(fe: &FeNetwork, params: &EngineParams, cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    params.validate()?;
    if cfg.samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
    }
    if !(cfg.acceptance_ratio.is_finite() && cfg.acceptance_ratio > 0.0) {
        return Err(Error::InvalidParameter(format!("acceptance ratio {}", cfg.acceptance_ratio)));
    }
    if !(cfg.init_radius.is_finite() && cfg.init_radius > 0.0) {
        return Err(Error::InvalidParameter(format!("initial radius {}", cfg.init_radius)));
    }
    let schedule = cfg.resolved_schedule(params);
    schedule.validate()?;
    let t_end = match (cfg.t_end, schedule.duration()) {
        (Some(t), _) | (None, Some(t)) => t,
        (None, None) => return Err(Error::InvalidParameter("constant pump needs an explicit t_end".into())),
    };
    let work = || -> Vec<SweepRecord> {
        (0..cfg.samples as u64)
            .into_par_iter()
            .map(|i| run_one(fe, params, cfg, &schedule, t_end, i))
            .collect()
    };
    match cfg.workers {
        None => Ok(work()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(work))
        }
    }
}

/// Targets spectrum level `level_index` of `model` with the general scheme.
pub fn excited_search(
    model: &IsingModel,
    level_index: usize,
    params: &EngineParams,
    control: ControlForce,
    cfg: &SweepConfig,
) -> Result<(f64, Vec<SweepRecord>)> {
    let spectrum = solve_exact(model)?;
    let level = spectrum.levels.get(level_index).ok_or_else(|| {
        Error::InvalidParameter(format!("level {level_index} of {} levels", spectrum.levels.len()))
    })?;
    let n_flip = required_flips(model, level.energy)?;
    let fe = build_general_fe(model, n_flip, params, control)?;
    Ok((level.energy, run_sweep(&fe, params, cfg)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub samples: usize,
    pub accepted: usize,
    pub best_accepted_energy: Option<f64>,
    pub min_log10_fluctuation: f64,
}

pub fn summarize(records: &[SweepRecord]) -> SweepSummary {
    let accepted: Vec<&SweepRecord> = records.iter().filter(|r| r.accepted).collect();
    SweepSummary {
        samples: records.len(),
        accepted: accepted.len(),
        best_accepted_energy: accepted.iter().filter_map(|r| r.ising_energy).reduce(f64::min),
        min_log10_fluctuation: records
            .iter()
            .filter(|r| r.fluctuation.is_finite())
            .map(|r| r.fluctuation.log10())
            .fold(f64::INFINITY, f64::min),
    }
}

impl std::fmt::Display for SweepSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "samples={} accepted={}", self.samples, self.accepted)?;
        match self.best_accepted_energy {
            Some(e) => write!(f, " best_energy={e}")?,
            None => write!(f, " best_energy=none")?,
        }
        write!(f, " min_log10_F={:.3}", self.min_log10_fluctuation)
    }
}

pub const SWEEP_CSV_HEADER: &str = "seed,energy,mean_amp,fluctuation,log10_fluctuation,accepted,spins";

/// Writes the record table; floats use a fixed exponent format so reruns are byte-identical.
pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "# cim-sweep v1")?;
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in records {
        let energy = r.ising_energy.map_or_else(|| "nan".to_string(), |e| format!("{e}"));
        let spins = match (&r.readout, &r.status) {
            (Some(s), _) => s.to_string(),
            (None, RunStatus::Undecided) => "undecided".to_string(),
            (None, _) => "diverged".to_string(),
        };
        writeln!(
            w,
            "{},{},{:.12e},{:.12e},{:.6},{},{}",
            r.seed,
            energy,
            r.mean_amp,
            r.fluctuation,
            r.fluctuation.log10(),
            u8::from(r.accepted),
            spins
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frustration::build::build_plain;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn stats_examples() {
        let (m, f) = amplitude_stats(&[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(1.1, 0.0)]);
        assert!((m - 1.025).abs() < 1e-15);
        assert!((f - 0.0075).abs() < 1e-15);
        assert_eq!(amplitude_stats(&[c(0.3, 0.4)]).1, 0.0);
        assert_eq!(amplitude_stats(&[c(2.0, 0.0), c(0.0, -2.0)]).1, 0.0);
    }

    #[test]
    fn readout_examples() {
        let m = IsingModel::all_to_all_afm(3).unwrap();
        let fe = build_plain(&m, &EngineParams::default()).unwrap();
        let s = readout(&[c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)], &fe).unwrap();
        assert_eq!(s.spins(), &[1, -1, 1]);
        let m2 = IsingModel::new(2, &[(0, 1, 1)], 1.0).unwrap();
        let fe2 = build_plain(&m2, &EngineParams::default()).unwrap();
        assert_eq!(readout(&[c(-0.9, 0.0), c(-1.1, 0.0)], &fe2).unwrap().spins(), &[-1, -1]);
        assert!(matches!(readout(&[c(1e-12, 1.0), c(1.0, 0.0)], &fe2), Err(Error::Undecided { mode: 0, .. })));
        assert!(readout(&[c(1.0, 0.0)], &fe2).is_err());
    }
}
