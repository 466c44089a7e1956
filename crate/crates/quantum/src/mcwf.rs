//! Monte-Carlo wave-function trajectories.
//!
//! Between jumps the unnormalized state obeys `dψ/dt = −½ Σ J†J ψ`, a
//! Hermitian negative semidefinite generator. Each step is propagated in a
//! Lanczos basis; the squared norm is monotone in the step length, so the
//! jump time where it crosses the drawn threshold is located exactly by
//! bisection on the small projected problem.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{QuantumError, Result};
use crate::fock::{inner, norm_sqr, normalize};
use crate::network::{FockNetwork, SparseGenerator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    /// `None` runs to the end of the pump schedule.
    pub t_end: Option<f64>,
    /// Largest propagation step while the pump is constant.
    pub h_max: f64,
    /// Largest fourth-order step while the pump changes.
    pub h_max_ramp: f64,
    /// Frozen-pump step used to locate a jump inside a ramp step.
    pub h_fine: f64,
    /// Krylov truncation tolerance per step.
    pub krylov_tol: f64,
    pub krylov_max: usize,
    /// Boundary population above which a run is flagged invalid.
    pub validity_threshold: f64,
    /// Hard cap on jumps per trajectory.
    pub max_jumps: usize,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            t_end: None,
            h_max: 4.0,
            h_max_ramp: 1.0,
            h_fine: 0.05,
            krylov_tol: 1e-7,
            krylov_max: 150,
            validity_threshold: 1e-3,
            max_jumps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOutcome {
    pub id: usize,
    pub seed: u64,
    /// Normalized final state.
    pub state: Vec<Complex64>,
    pub jumps: usize,
    pub steps: usize,
    /// Largest normalized population seen on the truncation boundary.
    pub max_boundary: f64,
    pub valid: bool,
}

struct Krylov {
    basis: Vec<Vec<Complex64>>,
    weights: Vec<f64>,
    evals: Vec<f64>,
    evecs: DMatrix<f64>,
    norm0: f64,
}

impl Krylov {
    /// Squared norm of `exp(τT) ψ₀`.
    fn norm_sqr_at(&self, tau: f64) -> f64 {
        let n0 = self.norm0 * self.norm0;
        self.weights.iter().zip(&self.evals).map(|(w, l)| w * (2.0 * tau * l).exp()).sum::<f64>() * n0
    }

    fn coefficients(&self, tau: f64) -> Vec<f64> {
        let m = self.evals.len();
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| self.evecs[(i, j)] * (tau * self.evals[j]).exp() * self.evecs[(0, j)])
                    .sum::<f64>()
                    * self.norm0
            })
            .collect()
    }

    fn state_at(&self, tau: f64, out: &mut [Complex64]) {
        out.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for (c, v) in self.coefficients(tau).iter().zip(&self.basis) {
            for (o, x) in out.iter_mut().zip(v) {
                *o += *c * x;
            }
        }
    }
}

fn tridiag_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let e = SymmetricEigen::new(t);
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}

/// Lanczos basis (local reorthogonalization only) for `generator` from `psi`, grown until the step `h` is
/// resolved to `tol`. Returns `None` if `m_max` vectors do not suffice.
fn lanczos<F>(generator: &mut F, psi: &[Complex64], h: f64, tol: f64, m_max: usize) -> Option<Krylov>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    let n = psi.len();
    let norm0 = norm_sqr(psi).sqrt();
    let mut v0 = psi.to_vec();
    for x in &mut v0 {
        *x /= norm0;
    }
    let mut basis = vec![v0];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    loop {
        let j = basis.len() - 1;
        generator(&basis[j], &mut w);
        // Three-term recurrence.
        let a = inner(&basis[j], &w).re;
        let (vj, vprev, bprev) = (&basis[j], j.checked_sub(1).map(|i| &basis[i]), beta.last().copied().unwrap_or(0.0));
        match vprev {
            Some(vp) => {
                for ((x, y), z) in w.iter_mut().zip(vj).zip(vp) {
                    *x -= a * y + bprev * z;
                }
            }
            None => {
                for (x, y) in w.iter_mut().zip(vj) {
                    *x -= a * y;
                }
            }
        }
        alpha.push(a);
        let b = norm_sqr(&w).sqrt();
        let m = alpha.len();
        let scale = alpha.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
        let breakdown = b < 1e-13 * scale;
        // The projected eigenproblem is only solved every few vectors.
        if !(breakdown || m >= m_max || m <= 8 || m % 4 == 0) {
            beta.push(b);
            let next: Vec<Complex64> = w.iter().map(|x| x / b).collect();
            basis.push(next);
            continue;
        }
        let (evals, evecs) = tridiag_eigen(&alpha, &beta);
        // Generalized residual `β h [φ₁(hT)]_{m,1}` with φ₁(z) = (eᶻ − 1)/z.
        // Unlike the plain `β [exp(hT)]_{m,1}` it does not vanish when
        // every Ritz value is strongly negative at small m.
        let phi1 = |z: f64| if z.abs() < 1e-8 { 1.0 + 0.5 * z } else { z.exp_m1() / z };
        let est: f64 = b * h * (0..m).map(|k| evecs[(m - 1, k)] * phi1(h * evals[k]) * evecs[(0, k)]).sum::<f64>().abs();
        let converged = breakdown || est < tol;
        if converged {
            let weights = (0..m).map(|k| evecs[(0, k)] * evecs[(0, k)]).collect();
            return Some(Krylov { basis, weights, evals, evecs, norm0 });
        }
        if m >= m_max {
            return None;
        }
        beta.push(b);
        let next: Vec<Complex64> = w.iter().map(|x| x / b).collect();
        basis.push(next);
    }
}

/// Parity sector holding all of `psi`, or the whole space if it has both.
fn active_range(network: &FockNetwork, psi: &[Complex64]) -> std::ops::Range<usize> {
    let sp = network.space();
    for p in 0..2 {
        if psi[sp.sector(p + 1)].iter().all(|x| *x == Complex64::new(0.0, 0.0)) {
            return sp.sector(p);
        }
    }
    0..psi.len()
}

/// Krylov propagator for `exp(h·G)` with `G = G₀ + lin·G₁ + c₂·quad` on
/// the active sector(s).
fn krylov_at(
    generator: &SparseGenerator,
    range: &std::ops::Range<usize>,
    lin: f64,
    quad: f64,
    psi: &[Complex64],
    h: f64,
    cfg: &TrajectoryConfig,
) -> Option<Krylov> {
    let frozen: Vec<_> = (0..2)
        .map(|p| generator.freeze_affine(lin, quad, p))
        .filter(|f| range.start <= f.start() && f.start() + f.len() <= range.end)
        .collect();
    let mut gen = |x: &[Complex64], out: &mut [Complex64]| {
        for f in &frozen {
            let lo = f.start() - range.start;
            f.apply(&x[lo..lo + f.len()], &mut out[lo..lo + f.len()]);
        }
    };
    lanczos(&mut gen, psi, h, cfg.krylov_tol, cfg.krylov_max)
}

/// Gauss nodes and weights of the fourth-order commutator-free Magnus step
/// `exp(h(β₂G(t₁) + β₁G(t₂))) exp(h(β₁G(t₁) + β₂G(t₂)))`, right factor first.
const CF4_NODES: [f64; 2] = [0.5 - 0.288_675_134_594_812_9, 0.5 + 0.288_675_134_594_812_9];
const CF4_WEIGHTS: [f64; 2] = [0.25 + 0.288_675_134_594_812_9, 0.25 - 0.288_675_134_594_812_9];

/// Runs one trajectory from `initial` (normalized) with its own RNG;
/// `generator` is `network.sparse_generator()`.
///
/// Constant-pump segments take single exact exponentials. Ramp segments
/// take fourth-order Magnus steps; when a jump falls inside one, the step is
/// redone with short frozen-pump steps so the jump time can be bisected.
pub fn run_trajectory<R: Rng + ?Sized>(
    network: &FockNetwork,
    generator: &SparseGenerator,
    initial: &[Complex64],
    cfg: &TrajectoryConfig,
    rng: &mut R,
) -> Result<(Vec<Complex64>, usize, usize, f64)> {
    let dim = network.dim();
    if initial.len() != dim {
        return Err(QuantumError::Dimension { expected: dim, got: initial.len() });
    }
    let t_end = match (cfg.t_end, network.schedule().duration()) {
        (Some(t), _) | (None, Some(t)) => t,
        (None, None) => return Err(QuantumError::InvalidParameter("constant pump needs t_end".into())),
    };
    if !(cfg.h_max > 0.0 && cfg.h_max_ramp > 0.0 && cfg.h_fine > 0.0 && cfg.krylov_tol > 0.0 && cfg.krylov_max >= 2)
    {
        return Err(QuantumError::InvalidParameter("bad trajectory configuration".into()));
    }
    let mut breaks: Vec<f64> = network.schedule().breakpoints().into_iter().filter(|&b| b > 0.0 && b < t_end).collect();
    breaks.push(t_end);

    let mut psi = initial.to_vec();
    normalize(&mut psi);
    let mut scratch = vec![Complex64::new(0.0, 0.0); dim];
    let mut next = vec![Complex64::new(0.0, 0.0); dim];
    let mut t = 0.0;
    let mut h = cfg.h_max.min(0.05);
    let mut fine_until = 0.0;
    let mut threshold: f64 = rng.random();
    let (mut jumps, mut steps) = (0usize, 0usize);
    let mut max_boundary = network.space().boundary_population(&psi);
    let mut range = active_range(network, &psi);
    let shrink = |h: &mut f64, h_try: f64| -> Result<()> {
        *h = 0.5 * h_try;
        if *h < 1e-12 {
            return Err(QuantumError::InvalidParameter("Krylov step underflow".into()));
        }
        Ok(())
    };
    while t < t_end {
        let stop = *breaks.iter().find(|&&b| b > t).unwrap_or(&t_end);
        let ramping = network.pump(t) != network.pump(stop);
        let fine = ramping && t < fine_until;
        let mut h_try = h.min(stop - t);
        if fine {
            h_try = h_try.min(cfg.h_fine).min(fine_until - t);
        } else if ramping {
            h_try = h_try.min(cfg.h_max_ramp);
        }
        let end = if stop - t <= h_try { stop } else { t + h_try };

        if ramping && !fine {
            // Two-exponential Magnus step.
            let s: Vec<f64> = CF4_NODES.iter().map(|c| network.pump(t + c * h_try)).collect();
            next.copy_from_slice(&psi);
            let mut m = 0;
            let mut ok = true;
            for (w1, w2) in [(CF4_WEIGHTS[0], CF4_WEIGHTS[1]), (CF4_WEIGHTS[1], CF4_WEIGHTS[0])] {
                // h(w1 G(t1) + w2 G(t2)) = (h/2)·G̃ with w1 + w2 = 1/2.
                let lin = 2.0 * (w1 * s[0] + w2 * s[1]);
                let quad = 2.0 * (w1 * s[0] * s[0] + w2 * s[1] * s[1]);
                let Some(kr) = krylov_at(generator, &range, lin, quad, &next[range.clone()], 0.5 * h_try, cfg) else {
                    ok = false;
                    break;
                };
                m = m.max(kr.evals.len());
                kr.state_at(0.5 * h_try, &mut next[range.clone()]);
            }
            if !ok {
                shrink(&mut h, h_try)?;
                continue;
            }
            steps += 1;
            if norm_sqr(&next[range.clone()]) > threshold {
                std::mem::swap(&mut psi, &mut next);
                t = end;
                max_boundary = max_boundary.max(network.space().boundary_population(&psi));
            } else {
                fine_until = end;
            }
            adapt(&mut h, h_try, m, cfg);
            continue;
        }

        let s_mid = network.pump(t + 0.5 * h_try);
        let Some(kr) = krylov_at(generator, &range, s_mid, s_mid * s_mid, &psi[range.clone()], h_try, cfg) else {
            shrink(&mut h, h_try)?;
            continue;
        };
        let m = kr.evals.len();
        steps += 1;
        if kr.norm_sqr_at(h_try) > threshold {
            kr.state_at(h_try, &mut psi[range.clone()]);
            t = end;
        } else {
            // Bisection for the crossing time.
            let (mut lo, mut hi) = (0.0, h_try);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if kr.norm_sqr_at(mid) > threshold {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let tau = 0.5 * (lo + hi);
            next.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
            kr.state_at(tau, &mut next[range.clone()]);
            t += tau;
            let weights = network.jump_weights(t, &next, &mut scratch);
            let total: f64 = weights.iter().sum();
            if total > 0.0 {
                let mut pick = rng.random::<f64>() * total;
                let mut k = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    if pick < *w {
                        k = i;
                        break;
                    }
                    pick -= w;
                }
                network.apply_jump(k, t, &next, &mut psi);
                normalize(&mut psi);
                jumps += 1;
                range = active_range(network, &psi);
            } else {
                std::mem::swap(&mut psi, &mut next);
            }
            threshold = rng.random();
            if jumps > cfg.max_jumps {
                return Err(QuantumError::InvalidParameter("jump budget exhausted".into()));
            }
        }
        max_boundary = max_boundary.max(network.space().boundary_population(&psi));
        adapt(&mut h, h_try, m, cfg);
    }
    normalize(&mut psi);
    Ok((psi, jumps, steps, max_boundary))
}

/// Step-size update from the Krylov dimension the last step needed.
fn adapt(h: &mut f64, h_try: f64, m: usize, cfg: &TrajectoryConfig) {
    if m <= cfg.krylov_max / 2 {
        *h = (1.5 * h_try).max(*h).min(cfg.h_max);
    } else if m >= cfg.krylov_max * 3 / 4 {
        *h = 0.7 * h_try;
    } else {
        *h = h_try.max(*h);
    }
}

/// Runs `n_traj` trajectories and maps each outcome through `f`; outcome
/// order matches trajectory ids.
pub fn trajectory_map<T, F>(
    network: &FockNetwork,
    initial: &[Complex64],
    cfg: &TrajectoryConfig,
    n_traj: usize,
    seed: u64,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(TrajectoryOutcome) -> T + Sync,
{
    if n_traj == 0 {
        return Err(QuantumError::InvalidParameter("n_traj must be at least 1".into()));
    }
    let generator = network.sparse_generator();
    (0..n_traj)
        .into_par_iter()
        .map(|id| {
            let mut rng = cim_core::seed::sample_rng(seed, id as u64);
            let (state, jumps, steps, max_boundary) = run_trajectory(network, &generator, initial, cfg, &mut rng)?;
            Ok(f(TrajectoryOutcome {
                id,
                seed: cim_core::seed::sub_seed(seed, id as u64),
                state,
                jumps,
                steps,
                max_boundary,
                valid: max_boundary <= cfg.validity_threshold,
            }))
        })
        .collect()
}

/// Final states of `n_traj` trajectories started from vacuum.
pub fn trajectory_simulate(
    network: &FockNetwork,
    cfg: &TrajectoryConfig,
    n_traj: usize,
    seed: u64,
) -> Result<Vec<TrajectoryOutcome>> {
    trajectory_map(network, &network.space().vacuum(), cfg, n_traj, seed, |o| o)
}

/// Mean of `|⟨ψ_dark|ψ_traj⟩|²` over the ensemble.
pub fn fidelity_to_dark(ensemble: &[TrajectoryOutcome], dark: &[Complex64]) -> f64 {
    let n = norm_sqr(dark);
    let total: f64 = ensemble.iter().map(|o| inner(dark, &o.state).norm_sqr() / n).sum();
    total / ensemble.len().max(1) as f64
}

/// Mean and standard error of per-trajectory values.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One row per trajectory: id, jumps, fidelity contribution, validity.
pub fn write_ensemble_csv<W: Write>(rows: &[(usize, usize, f64, bool)], mut w: W) -> std::io::Result<()> {
    writeln!(w, "# cim-trajectory v1")?;
    writeln!(w, "trajectory,jumps,fidelity,valid")?;
    for (id, jumps, fid, valid) in rows {
        writeln!(w, "{id},{jumps},{fid:.12e},{}", u8::from(*valid))?;
    }
    Ok(())
}
