//! Mean-field right-hand sides.
//!
//! DOPO:  dA/dt  = P A* − γ_s A − γ_d A|A|² − C
//! NDOPO: dA_s/dt = P A_i* − γ_s A_s − γ_d A_s|A_i|² − C_s   (and s ↔ i)
//!
//! where `C` collects the channel forces `rate · w · L` and, for the
//! feedback backend, the measured-quadrature drive.

use num_complex::Complex64;

use super::network::{DissipativeChannel, OscillatorNetwork};
use super::params::EngineParams;
use crate::error::{Error, Result};
use crate::ising::IsingModel;

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn channel_span(channels: &[DissipativeChannel]) -> usize {
    channels
        .iter()
        .flat_map(|c| c.coefficients().iter().map(|(k, _)| k + 1))
        .max()
        .unwrap_or(0)
}

#[inline]
fn dopo_local(a: Complex64, params: &EngineParams, pump: f64) -> Complex64 {
    pump * a.conj() - params.gamma_s * a - params.gamma_d * a * a.norm_sqr()
}

#[inline]
fn ndopo_local(a: Complex64, partner: Complex64, params: &EngineParams, pump: f64) -> Complex64 {
    pump * partner.conj() - params.gamma_s * a - params.gamma_d * a * partner.norm_sqr()
}

/// Full derivative with every mode treated as a DOPO.
pub fn dopo_rhs(
    state: &[Complex64],
    params: &EngineParams,
    pump: f64,
    channels: &[DissipativeChannel],
) -> Result<Vec<Complex64>> {
    if channel_span(channels) > state.len() {
        return Err(Error::DimensionMismatch { expected: channel_span(channels), got: state.len() });
    }
    let mut out: Vec<Complex64> = state.iter().map(|&a| dopo_local(a, params, pump)).collect();
    for ch in channels {
        ch.apply_force(state, &mut out);
    }
    Ok(out)
}

/// Derivative for NDOPO pairs `(idler, signal)`; modes not listed in `pairs`
/// are left at zero.
pub fn ndopo_rhs(
    state: &[Complex64],
    params: &EngineParams,
    pump: f64,
    pairs: &[(usize, usize)],
    channels: &[DissipativeChannel],
) -> Result<Vec<Complex64>> {
    let n = state.len();
    let mut partner = vec![None; n];
    for &(i, s) in pairs {
        if i >= n || s >= n {
            return Err(Error::DimensionMismatch { expected: i.max(s) + 1, got: n });
        }
        if i == s || partner[i].is_some() || partner[s].is_some() {
            return Err(Error::InvalidNetwork(format!("NDOPO pair ({i}, {s}) is not a distinct pairing")));
        }
        partner[i] = Some(s);
        partner[s] = Some(i);
    }
    if channel_span(channels) > n {
        return Err(Error::DimensionMismatch { expected: channel_span(channels), got: n });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (k, p) in partner.iter().enumerate() {
        if let Some(p) = *p {
            out[k] = ndopo_local(state[k], state[p], params, pump);
        }
    }
    let mut forces = vec![Complex64::new(0.0, 0.0); n];
    for ch in channels {
        ch.apply_force(state, &mut forces);
    }
    for (k, p) in partner.iter().enumerate() {
        if p.is_some() {
            out[k] += forces[k];
        }
    }
    Ok(out)
}

/// Feedback drive on signal mode `n`: `−Ω Σ_m sign(J_nm) · 2 Re A_m`.
fn feedback_drive(model: &IsingModel, omega: f64, state: &[Complex64], out: &mut [Complex64]) {
    for c in model.couplings() {
        let s = f64::from(c.sign);
        out[c.n] -= omega * s * 2.0 * state[c.m].re;
        out[c.m] -= omega * s * 2.0 * state[c.n].re;
    }
}

/// DOPO derivative for a measurement-feedback CIM on `model`.
pub fn feedback_rhs(
    state: &[Complex64],
    params: &EngineParams,
    pump: f64,
    model: &IsingModel,
) -> Result<Vec<Complex64>> {
    check_dim(model.n_spins(), state.len())?;
    let mut out: Vec<Complex64> = state.iter().map(|&a| dopo_local(a, params, pump)).collect();
    feedback_drive(model, params.omega_fb, state, &mut out);
    Ok(out)
}

impl OscillatorNetwork {
    /// Writes the full mean-field derivative into `out`.
    pub fn rhs_into(&self, params: &EngineParams, pump: f64, state: &[Complex64], out: &mut [Complex64]) {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = match self.partner(k) {
                None => dopo_local(state[k], params, pump),
                Some(p) => ndopo_local(state[k], state[p], params, pump),
            };
        }
        for ch in self.channels() {
            ch.apply_force(state, out);
        }
        if let Some(fb) = self.feedback() {
            feedback_drive(&fb.model, fb.omega, state, out);
        }
    }

    pub fn rhs(&self, params: &EngineParams, pump: f64, state: &[Complex64]) -> Result<Vec<Complex64>> {
        check_dim(self.n_modes(), state.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); state.len()];
        self.rhs_into(params, pump, state, &mut out);
        Ok(out)
    }
}

/// Max-norm of the derivative at `state`; zero exactly at fixed points.
pub fn fixed_point_residual(
    network: &OscillatorNetwork,
    params: &EngineParams,
    state: &[Complex64],
    pump: f64,
) -> Result<f64> {
    Ok(network
        .rhs(params, pump, state)?
        .iter()
        .map(|d| d.norm())
        .fold(0.0, f64::max))
}
