use std::fs::File;
use std::io::{BufWriter, Write};

use cim_core::delayline::{compile_multiport, PortSchedule};
use cim_core::frustration::{
    build_feedback, build_general_fe, build_hyperspin, build_plain, run_sweep, summarize, write_sweep_csv, FeNetwork,
    RunStatus, Scheme, SweepConfig,
};
use cim_core::ising::{required_flips, solve_exact, IsingModel};
use cim_quantum::dark::{channel_residual, CoherentAssignment};
use cim_quantum::fidelity::hyperspin_fidelity;
use cim_quantum::mcwf::write_ensemble_csv;
use num_complex::Complex64;

use crate::config::RunConfig;
use crate::{CliError, Command};

pub fn dispatch(cmd: &Command, cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::SolveExact => solve_exact_cmd(cfg, out, err),
        Command::Sweep => sweep_cmd(cfg, out, err),
        Command::Trajectory => trajectory_cmd(cfg, out, err),
        Command::CompileDelayline { check } => compile_delayline_cmd(cfg, *check, out, err),
        Command::CheckDark { require_dark } => check_dark_cmd(cfg, *require_dark, out),
    }
}

/// Runs `f` on a dedicated pool when a worker count is configured.
fn in_pool<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn io_err(path: &str) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_string(), source }
}

/// Writes the primary output to the configured file, or to `out`.
fn emit(cfg: &RunConfig, out: &mut dyn Write, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
    match &cfg.output {
        Some(p) => {
            let name = p.display().to_string();
            let f = File::create(p).map_err(io_err(&name))?;
            let mut w = BufWriter::new(f);
            body(&mut w).map_err(io_err(&name))?;
            w.flush().map_err(io_err(&name))
        }
        None => body(out).map_err(io_err("<stdout>")),
    }
}

fn build_network(cfg: &RunConfig, model: &IsingModel) -> Result<FeNetwork, CliError> {
    let params = &cfg.engine;
    Ok(match cfg.scheme.unwrap_or(Scheme::GeneralFe) {
        Scheme::Plain => build_plain(model, params)?,
        Scheme::Feedback => build_feedback(model, params)?,
        Scheme::Hyperspin => {
            if cfg.n_flip.is_some_and(|n| n != 1) {
                return Err(CliError::Usage("the hyperspin scheme flips exactly one coupling".into()));
            }
            build_hyperspin(model, &cfg.phases(model)?, params)?
        }
        Scheme::GeneralFe => {
            let n_flip = match cfg.n_flip {
                Some(n) => n,
                None => required_flips(model, solve_exact(model)?.ground_energy())?,
            };
            build_general_fe(model, n_flip, params, cfg.control)?
        }
    })
}

fn solve_exact_cmd(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let model = cfg.build_model()?;
    let spectrum = solve_exact(&model)?;
    let mut rows = Vec::with_capacity(spectrum.levels.len());
    for l in &spectrum.levels {
        let flips = required_flips(&model, l.energy)?;
        let configs: Vec<String> = l.configs.iter().map(ToString::to_string).collect();
        rows.push(format!("{},{},{},{}", l.energy, l.degeneracy(), flips, configs.join(";")));
    }
    emit(cfg, out, |w| {
        writeln!(w, "# cim-spectrum v1")?;
        writeln!(w, "energy,degeneracy,required_flips,configs")?;
        rows.iter().try_for_each(|r| writeln!(w, "{r}"))
    })?;
    let _ = writeln!(
        err,
        "ground_energy={} degeneracy={} levels={}",
        spectrum.ground_energy(),
        spectrum.ground().degeneracy(),
        spectrum.levels.len()
    );
    Ok(())
}

fn sweep_cmd(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let model = cfg.build_model()?;
    let fe = build_network(cfg, &model)?;
    let defaults = SweepConfig::default();
    let sweep = SweepConfig {
        samples: cfg.samples.unwrap_or(defaults.samples),
        seed: cfg.seed.unwrap_or(defaults.seed),
        schedule: cfg.schedule,
        t_end: cfg.sweep.t_end,
        init_radius: cfg.sweep.init_radius.unwrap_or(defaults.init_radius),
        acceptance_ratio: cfg.sweep.acceptance_ratio.unwrap_or(defaults.acceptance_ratio),
        method: cfg.sweep.method.unwrap_or(defaults.method),
        workers: None,
    };
    let records = in_pool(cfg.workers, || run_sweep(&fe, &cfg.engine, &sweep))??;
    emit(cfg, out, |w| write_sweep_csv(&records, w))?;
    let summary = summarize(&records);
    let _ = writeln!(err, "{summary}");
    if records.iter().all(|r| r.status == RunStatus::Diverged) {
        return Err(CliError::Invalid("every sample diverged".into()));
    }
    let ground_flips = required_flips(&model, solve_exact(&model)?.ground_energy())?;
    if summary.accepted == 0 && fe.n_flip.is_some_and(|n| n >= ground_flips) {
        return Err(CliError::Infeasible(format!(
            "no accepted record although n_flip = {} reaches the ground-state requirement {ground_flips}",
            fe.n_flip.unwrap_or_default()
        )));
    }
    Ok(())
}

fn trajectory_cmd(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    if cfg.scheme.is_some_and(|s| s != Scheme::Hyperspin) {
        return Err(CliError::Usage("trajectory runs need the hyperspin scheme".into()));
    }
    let model = cfg.build_model()?;
    let phases = cfg.phases(&model)?;
    let setup = cfg.fidelity_setup()?;
    let report = in_pool(cfg.workers, || hyperspin_fidelity(&model, &phases, &setup))??;
    emit(cfg, out, |w| write_ensemble_csv(&report.csv_rows(), w))?;
    let _ = writeln!(
        err,
        "fidelity={:.6} stderr={:.6} trajectories={} invalid={} components={} delta={:.3e} dim={} cutoff={} total_cap={}",
        report.mean,
        report.stderr,
        report.rows.len(),
        report.n_invalid(),
        report.components.len(),
        report.delta,
        report.dim,
        report.cutoff,
        report.total_cap
    );
    if report.n_invalid() > 0 {
        return Err(CliError::Invalid(format!(
            "{} trajectories exceeded the truncation-boundary threshold",
            report.n_invalid()
        )));
    }
    Ok(())
}

/// `Σ e^{±iφ}(a_n + s a_m)` straight from the model.
fn expected_coupling_vector(model: &IsingModel, phases: &std::collections::BTreeMap<(usize, usize), f64>, conj: bool) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); model.n_spins()];
    for cp in model.couplings() {
        let phi = phases[&cp.pair()];
        let e = Complex64::from_polar(1.0, if conj { -phi } else { phi });
        v[cp.n] += e;
        v[cp.m] += e * f64::from(cp.sign);
    }
    v
}

fn close(a: &[Complex64], b: &[Complex64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-12)
}

fn compile_delayline_cmd(cfg: &RunConfig, check: bool, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let model = cfg.build_model()?;
    let phases = cfg.phases(&model)?;
    let schedule = compile_multiport(&model, &phases)?;
    let text = schedule.to_text();
    emit(cfg, out, |w| w.write_all(text.as_bytes()))?;
    let _ = writeln!(err, "entries={}", schedule.entries.len());
    if !check {
        return Ok(());
    }
    let reread = match &cfg.output {
        Some(p) => std::fs::read_to_string(p).map_err(io_err(&p.display().to_string()))?,
        None => text,
    };
    let parsed = PortSchedule::parse(&reread)?;
    for conj in [false, true] {
        if !close(&parsed.coupling_vector(model.n_spins(), conj)?, &expected_coupling_vector(&model, &phases, conj)) {
            return Err(CliError::Invalid("rebuilt coupling vector differs from the model".into()));
        }
    }
    if let Ok(fe) = build_hyperspin(&model, &phases, &cfg.engine) {
        let rebuilt = parsed.hyperspin_channels(model.n_spins())?;
        for (ch, want) in fe.network.channels().iter().zip(&rebuilt) {
            if !close(&ch.dense(fe.n_modes()), want) {
                return Err(CliError::Invalid(format!("rebuilt {} differs from the network channel", ch.label)));
            }
        }
    }
    let _ = writeln!(err, "round-trip check passed");
    Ok(())
}

fn check_dark_cmd(cfg: &RunConfig, require_dark: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let model = cfg.build_model()?;
    let fe = build_network(cfg, &model)?;
    let (amps, tol) = cfg.dark_amplitudes()?;
    if amps.len() != fe.n_modes() {
        return Err(CliError::Usage(format!("[dark] has {} amplitudes, the network has {} modes", amps.len(), fe.n_modes())));
    }
    let assignment = CoherentAssignment::new(amps)?;
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for ch in fe.network.channels() {
        let r = channel_residual(ch, &assignment);
        worst = worst.max(r.norm());
        lines.push(format!("{},{:.12e},{:.12e},{:.12e}", ch.label, r.re, r.im, r.norm()));
    }
    emit(cfg, out, |w| {
        writeln!(w, "# cim-dark v1")?;
        writeln!(w, "channel,re,im,abs")?;
        lines.iter().try_for_each(|l| writeln!(w, "{l}"))
    })?;
    if require_dark && worst > tol {
        return Err(CliError::Infeasible(format!("largest residual {worst:e} exceeds {tol:e}")));
    }
    Ok(())
}
