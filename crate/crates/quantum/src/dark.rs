//! Dark states of the hyperspin network as superpositions of multimode
//! coherent states.

use std::fmt;

use cim_core::dynamics::DissipativeChannel;
use cim_core::frustration::FeNetwork;
use cim_core::ising::{solve_exact, SpinConfig};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{QuantumError, Result};
use crate::fock::{normalize, FockSpace};

/// Product coherent state, one complex amplitude per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentAssignment {
    amplitudes: Vec<Complex64>,
}

impl CoherentAssignment {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(QuantumError::InvalidParameter("non-finite coherent amplitude".into()));
        }
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// `⟨self|other⟩` for product coherent states.
    pub fn overlap(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(&b, &a)| coherent_overlap(b, a))
            .product()
    }

    /// Same state seen in a frame rotated by `angle`.
    pub fn rotated(&self, angle: f64) -> Self {
        let r = Complex64::from_polar(1.0, angle);
        Self { amplitudes: self.amplitudes.iter().map(|a| a * r).collect() }
    }
}

/// `⟨β|α⟩ = exp(−(|α|² + |β|²)/2 + β*α)`.
pub fn coherent_overlap(beta: Complex64, alpha: Complex64) -> Complex64 {
    (-(alpha.norm_sqr() + beta.norm_sqr()) / 2.0 + beta.conj() * alpha).exp()
}

/// Steady amplitude of a pumped mode at pump `s` and two-photon rate `gamma`
/// in the operator convention: `i√(2S/Γ)`.
pub fn quantum_alpha(s: f64, gamma: f64) -> Complex64 {
    Complex64::new(0.0, (2.0 * s / gamma).sqrt())
}

/// Angle taking the real-axis (semiclassical) frame to the operator frame.
pub const QUANTUM_FRAME: f64 = std::f64::consts::FRAC_PI_2;

/// Eigenvalue `Σ c_k α_k` of a linear channel on a coherent product state.
pub fn channel_residual(channel: &DissipativeChannel, assignment: &CoherentAssignment) -> Complex64 {
    channel.coefficients().iter().map(|&(k, c)| c * assignment.amplitudes[k]).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DarkComponent {
    /// 1-based.
    pub label: usize,
    pub signal_config: SpinConfig,
    /// Coupling left unsatisfied by `signal_config`.
    pub unsatisfied: (usize, usize),
    pub assignment: CoherentAssignment,
}

/// One component per degenerate ground configuration of a hyperspin
/// network. Signals sit at `s_n α`; the NDOPO pair absorbs the unsatisfied
/// coupling `(n, m)` with `a_ani = −e^{iφ} s_n α` and `a_ans = −e^{−iφ} s_n α`,
/// so both channels vanish and `a_ani a_ans = α²`.
pub fn construct_dark_components(fe: &FeNetwork, alpha: Complex64) -> Result<Vec<DarkComponent>> {
    let (Some(&ani), Some(&ans)) = (fe.layout.ani.first(), fe.layout.ans.first()) else {
        return Err(QuantumError::InvalidParameter("network has no hyperspin NDOPO pair".into()));
    };
    if fe.layout.ani.len() != 1 || !fe.layout.flags.is_empty() {
        return Err(QuantumError::InvalidParameter("expected the hyperspin layout".into()));
    }
    let model = &fe.model;
    let find = |anc: usize| {
        fe.network
            .channels()
            .iter()
            .find(|ch| ch.coefficient(anc) != Complex64::new(0.0, 0.0))
            .ok_or_else(|| QuantumError::InvalidParameter("no channel touches the NDOPO pair".into()))
    };
    let (ani_channel, ans_channel) = (find(ani)?, find(ans)?);
    let spectrum = solve_exact(model)?;
    let mut out = Vec::new();
    for (idx, config) in spectrum.ground().configs.iter().enumerate() {
        let bad = model.unsatisfied(config)?;
        if bad.len() != 1 {
            return Err(QuantumError::NotSingleFlip { config: config.to_string(), count: bad.len() });
        }
        let cp = model.couplings()[bad[0]];
        let mut amps = vec![Complex64::new(0.0, 0.0); fe.n_modes()];
        for (k, &s) in config.spins().iter().enumerate() {
            amps[fe.layout.signals[k]] = alpha * f64::from(s);
        }
        // Each ancilla cancels the signal part of its own channel.
        let signal_part = |ch: &DissipativeChannel| {
            let a = CoherentAssignment { amplitudes: amps.clone() };
            channel_residual(ch, &a)
        };
        let r_ani = signal_part(ani_channel);
        let r_ans = signal_part(ans_channel);
        amps[ani] = -r_ani / ani_channel.coefficient(ani);
        amps[ans] = -r_ans / ans_channel.coefficient(ans);
        if (amps[ani] * amps[ans] - alpha * alpha).norm() > 1e-9 * alpha.norm_sqr().max(1.0) {
            return Err(QuantumError::InvalidParameter(format!(
                "ancilla product for {config} misses the pumped value"
            )));
        }
        out.push(DarkComponent {
            label: idx + 1,
            signal_config: config.clone(),
            unsatisfied: cp.pair(),
            assignment: CoherentAssignment::new(amps)?,
        });
    }
    Ok(out)
}

/// Largest channel residual of a component across all network channels.
pub fn max_residual(fe: &FeNetwork, component: &DarkComponent) -> f64 {
    fe.network
        .channels()
        .iter()
        .map(|ch| channel_residual(ch, &component.assignment).norm())
        .fold(0.0, f64::max)
}

/// Equal-weight superposition `c Σ_k |φ_k⟩` normalized with the analytic Gram
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Superposition {
    pub coefficients: Vec<Complex64>,
    /// `√(Σ_kl G_kl)`, the inverse of the common coefficient.
    pub normalization: f64,
    /// `normalization − √n`.
    pub delta: f64,
    pub gram: DMatrix<Complex64>,
}

pub fn gram_matrix(components: &[DarkComponent]) -> DMatrix<Complex64> {
    let n = components.len();
    DMatrix::from_fn(n, n, |i, j| components[i].assignment.overlap(&components[j].assignment))
}

pub fn gram_normalize(components: &[DarkComponent]) -> Result<Superposition> {
    if components.is_empty() {
        return Err(QuantumError::InvalidParameter("no components".into()));
    }
    let gram = gram_matrix(components);
    let eig = SymmetricEigen::new(gram.clone());
    if eig.eigenvalues.min() < 1e-10 {
        return Err(QuantumError::SingularGram);
    }
    let total: f64 = gram.iter().sum::<Complex64>().re;
    if total <= 0.0 {
        return Err(QuantumError::SingularGram);
    }
    let normalization = total.sqrt();
    let n = components.len();
    Ok(Superposition {
        coefficients: vec![Complex64::new(1.0 / normalization, 0.0); n],
        normalization,
        delta: normalization - (n as f64).sqrt(),
        gram,
    })
}

/// Truncated state vector of `Σ_k c_k |φ_k⟩`, renormalized on the basis.
pub fn dark_state_vector(
    space: &FockSpace,
    components: &[DarkComponent],
    coefficients: &[Complex64],
) -> Result<Vec<Complex64>> {
    if components.len() != coefficients.len() {
        return Err(QuantumError::Dimension { expected: components.len(), got: coefficients.len() });
    }
    let mut psi = vec![Complex64::new(0.0, 0.0); space.dim()];
    for (comp, &c) in components.iter().zip(coefficients) {
        let v = space.coherent(comp.assignment.amplitudes())?;
        for (p, x) in psi.iter_mut().zip(&v) {
            *p += c * x;
        }
    }
    if normalize(&mut psi) == 0.0 {
        return Err(QuantumError::SingularGram);
    }
    Ok(psi)
}

/// `(2√n_det / n_solution, 1 / n_solution)`.
pub fn coherence_advantage(n_det: usize, n_solution: usize) -> Result<(f64, f64)> {
    if n_det == 0 || n_det > n_solution {
        return Err(QuantumError::Counting { n_det, n_solution });
    }
    let ns = n_solution as f64;
    Ok((2.0 * (n_det as f64).sqrt() / ns, 1.0 / ns))
}

/// Plain-text listing, one block per component.
pub struct ComponentListing<'a>(pub &'a [DarkComponent], pub &'a [String]);

impl fmt::Display for ComponentListing<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for comp in self.0 {
            writeln!(f, "component {}", comp.label)?;
            writeln!(f, "  spins {}", comp.signal_config)?;
            writeln!(f, "  unsatisfied {} {}", comp.unsatisfied.0, comp.unsatisfied.1)?;
            for (k, a) in comp.assignment.amplitudes().iter().enumerate() {
                let label = self.1.get(k).map_or("?", String::as_str);
                writeln!(f, "  {label} {:+.9} {:+.9}", a.re, a.im)?;
            }
        }
        Ok(())
    }
}
