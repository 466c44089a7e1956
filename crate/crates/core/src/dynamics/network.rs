use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::IsingModel;

/// Role of an oscillator mode in a compiled network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    /// DOPO encoding one Ising spin.
    DopoSignal,
    /// DOPO ancilla `b_control` counting the flipped couplings.
    DopoAncillaControl,
    /// DOPO ancilla `b_{n,m}` flagging whether coupling `(n, m)` is flipped.
    DopoAncillaFlag,
    /// Idler half of an NDOPO pair.
    NdopoIdler,
    /// Signal half of an NDOPO pair.
    NdopoSignal,
}

impl ModeKind {
    pub fn is_ndopo(self) -> bool {
        matches!(self, ModeKind::NdopoIdler | ModeKind::NdopoSignal)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    pub id: usize,
    pub kind: ModeKind,
    /// NDOPO idler/signal partner.
    pub partner: Option<usize>,
    pub label: String,
}

impl ModeSpec {
    pub fn dopo(id: usize, kind: ModeKind, label: impl Into<String>) -> Self {
        Self { id, kind, partner: None, label: label.into() }
    }

    /// `n` spin-encoding DOPOs labelled `a0..`.
    pub fn signals(n: usize) -> Vec<ModeSpec> {
        (0..n).map(|i| ModeSpec::dopo(i, ModeKind::DopoSignal, format!("a{i}"))).collect()
    }
}

/// A linear Lindblad channel `L = Σ c_k a_k` with rate `rate`.
///
/// In the mean-field equations the channel pushes mode `i` with
/// `-rate * w_i * L`, where the weights `w_i` default to `conj(c_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipativeChannel {
    pub label: String,
    coefficients: Vec<(usize, Complex64)>,
    rate: f64,
    back_action: Option<Vec<(usize, Complex64)>>,
}

fn merge_terms(terms: impl IntoIterator<Item = (usize, Complex64)>) -> Vec<(usize, Complex64)> {
    let mut v: Vec<(usize, Complex64)> = Vec::new();
    for (k, c) in terms {
        match v.iter_mut().find(|(j, _)| *j == k) {
            Some((_, acc)) => *acc += c,
            None => v.push((k, c)),
        }
    }
    v.retain(|(_, c)| c.norm() > 1e-15);
    v.sort_by_key(|(k, _)| *k);
    v
}

impl DissipativeChannel {
    pub fn new(
        label: impl Into<String>,
        coefficients: impl IntoIterator<Item = (usize, Complex64)>,
        rate: f64,
    ) -> Result<Self> {
        let label = label.into();
        let coefficients = merge_terms(coefficients);
        if coefficients.is_empty() {
            return Err(Error::InvalidNetwork(format!("channel {label} has no nonzero coefficient")));
        }
        if coefficients.iter().any(|(_, c)| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidNetwork(format!("channel {label} has a non-finite coefficient")));
        }
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidNetwork(format!("channel {label} has rate {rate}")));
        }
        Ok(Self { label, coefficients, rate, back_action: None })
    }

    /// Replaces the mean-field force weights (default `conj(c_i)`).
    pub fn with_back_action(mut self, weights: impl IntoIterator<Item = (usize, Complex64)>) -> Self {
        self.back_action = Some(merge_terms(weights));
        self
    }

    pub fn coefficients(&self) -> &[(usize, Complex64)] {
        &self.coefficients
    }

    pub fn coefficient(&self, mode: usize) -> Complex64 {
        self.coefficients
            .iter()
            .find(|(k, _)| *k == mode)
            .map_or(Complex64::new(0.0, 0.0), |(_, c)| *c)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn has_back_action_override(&self) -> bool {
        self.back_action.is_some()
    }

    /// Dense coefficient vector over `n_modes` modes.
    pub fn dense(&self, n_modes: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); n_modes];
        for &(k, c) in &self.coefficients {
            v[k] = c;
        }
        v
    }

    /// `Σ_k c_k A_k`.
    pub fn residual(&self, amplitudes: &[Complex64]) -> Complex64 {
        self.coefficients.iter().map(|&(k, c)| c * amplitudes[k]).sum()
    }

    /// Adds this channel's mean-field force to `out`.
    #[inline]
    pub fn apply_force(&self, amplitudes: &[Complex64], out: &mut [Complex64]) {
        let l = self.residual(amplitudes) * self.rate;
        match &self.back_action {
            None => {
                for &(k, c) in &self.coefficients {
                    out[k] -= c.conj() * l;
                }
            }
            Some(w) => {
                for &(k, c) in w {
                    out[k] -= c * l;
                }
            }
        }
    }

    fn max_mode(&self) -> usize {
        let a = self.coefficients.iter().map(|(k, _)| *k).max().unwrap_or(0);
        let b = self.back_action.iter().flatten().map(|(k, _)| *k).max().unwrap_or(0);
        a.max(b)
    }
}

/// Measurement-feedback coupling: each signal mode receives a real drive
/// computed from the measured in-phase quadratures of its neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackCoupling {
    pub model: IsingModel,
    pub omega: f64,
}

/// A compiled optical network: mode registry plus dissipative channels and an
/// optional measurement-feedback backend.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorNetwork {
    modes: Vec<ModeSpec>,
    channels: Vec<DissipativeChannel>,
    feedback: Option<FeedbackCoupling>,
    partners: Vec<Option<usize>>,
}

impl OscillatorNetwork {
    pub fn new(modes: Vec<ModeSpec>, channels: Vec<DissipativeChannel>) -> Result<Self> {
        for (i, m) in modes.iter().enumerate() {
            if m.id != i {
                return Err(Error::InvalidNetwork(format!("mode at position {i} has id {}", m.id)));
            }
            match (m.kind.is_ndopo(), m.partner) {
                (false, Some(_)) => {
                    return Err(Error::InvalidNetwork(format!("DOPO mode {i} has an NDOPO partner")))
                }
                (true, None) => {
                    return Err(Error::InvalidNetwork(format!("NDOPO mode {i} is unpaired")))
                }
                (true, Some(p)) => {
                    let other = modes.get(p).ok_or_else(|| {
                        Error::InvalidNetwork(format!("NDOPO mode {i} points at missing mode {p}"))
                    })?;
                    let complementary = matches!(
                        (m.kind, other.kind),
                        (ModeKind::NdopoIdler, ModeKind::NdopoSignal)
                            | (ModeKind::NdopoSignal, ModeKind::NdopoIdler)
                    );
                    if other.partner != Some(i) || !complementary {
                        return Err(Error::InvalidNetwork(format!(
                            "NDOPO modes {i} and {p} are not a mutual idler/signal pair"
                        )));
                    }
                }
                (false, None) => {}
            }
        }
        for ch in &channels {
            if ch.max_mode() >= modes.len() {
                return Err(Error::InvalidNetwork(format!(
                    "channel {} references mode {} of {}",
                    ch.label,
                    ch.max_mode(),
                    modes.len()
                )));
            }
        }
        let partners = modes.iter().map(|m| m.partner).collect();
        Ok(Self { modes, channels, feedback: None, partners })
    }

    /// Conventional CIM: one DOPO per spin, channel `a_n + sign(J) a_m` per coupling.
    pub fn plain_cim(model: &IsingModel, gamma_c: f64) -> Result<Self> {
        let modes = ModeSpec::signals(model.n_spins());
        let channels = model
            .couplings()
            .iter()
            .map(|c| {
                DissipativeChannel::new(
                    format!("L_{}_{}", c.n, c.m),
                    [(c.n, Complex64::new(1.0, 0.0)), (c.m, Complex64::new(f64::from(c.sign), 0.0))],
                    gamma_c,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(modes, channels)
    }

    /// Measurement-feedback CIM: DOPOs coupled only through feedback gain `omega`.
    pub fn feedback_cim(model: &IsingModel, omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega >= 0.0) {
            return Err(Error::InvalidParameter(format!("feedback gain {omega}")));
        }
        let mut net = Self::new(ModeSpec::signals(model.n_spins()), Vec::new())?;
        net.feedback = Some(FeedbackCoupling { model: model.clone(), omega });
        Ok(net)
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn channels(&self) -> &[DissipativeChannel] {
        &self.channels
    }

    pub fn feedback(&self) -> Option<&FeedbackCoupling> {
        self.feedback.as_ref()
    }

    pub fn partner(&self, mode: usize) -> Option<usize> {
        self.partners[mode]
    }

    /// Ids of the spin-encoding modes, in spin order.
    pub fn signal_modes(&self) -> Vec<usize> {
        self.modes_of_kind(ModeKind::DopoSignal)
    }

    pub fn modes_of_kind(&self, kind: ModeKind) -> Vec<usize> {
        self.modes.iter().filter(|m| m.kind == kind).map(|m| m.id).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.modes.iter().map(|m| m.label.as_str()).collect()
    }
}

impl fmt::Display for OscillatorNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OscillatorNetwork({} modes, {} channels", self.modes.len(), self.channels.len())?;
        if let Some(fb) = &self.feedback {
            write!(f, ", feedback Ω={}", fb.omega)?;
        }
        write!(f, ")")
    }
}
