use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DissipativeChannel, EngineParams, ModeKind, ModeSpec, OscillatorNetwork};
use crate::error::{Error, Result};
use crate::ising::{minimum_possible_energy, required_flips, solve_exact, IsingModel, MAX_EXACT_SPINS};

/// Network family used to embed an Ising model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Plain,
    Hyperspin,
    GeneralFe,
    Feedback,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Scheme::Plain),
            "hyperspin" => Ok(Scheme::Hyperspin),
            "general_fe" => Ok(Scheme::GeneralFe),
            "feedback" => Ok(Scheme::Feedback),
            other => Err(Error::InvalidParameter(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Force weights of the control channel of the general scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlForce {
    /// Rate `γ_c`, weight ½ on each flag and `2N_F − N_c` on the control mode.
    #[default]
    AsWritten,
    /// Rate `γ_c/2` with conjugate-coefficient weights, as a plain Lindblad term.
    Lindblad,
}

/// Where each role lives in the compiled mode registry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeLayout {
    pub signals: Vec<usize>,
    /// Per coupling: flag mode `b_{n,m}`.
    pub flags: Vec<usize>,
    /// Per coupling (general scheme) or single entry (hyperspin): NDOPO signal `a_ans`.
    pub ans: Vec<usize>,
    /// Per coupling (general scheme) or single entry (hyperspin): NDOPO idler `a_ani`.
    pub ani: Vec<usize>,
    pub control: Option<usize>,
}

/// Ising model compiled into an oscillator network.
#[derive(Debug, Clone, PartialEq)]
pub struct FeNetwork {
    pub scheme: Scheme,
    pub model: IsingModel,
    pub n_flip: Option<usize>,
    pub network: OscillatorNetwork,
    pub layout: FeLayout,
}

impl FeNetwork {
    pub fn n_modes(&self) -> usize {
        self.network.n_modes()
    }

    /// Energy this network is designed to reach (`E_MPE + 2J N_F`).
    pub fn target_energy(&self) -> Option<f64> {
        self.n_flip
            .map(|nf| minimum_possible_energy(&self.model) + 2.0 * self.model.j() * nf as f64)
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn build_plain(model: &IsingModel, params: &EngineParams) -> Result<FeNetwork> {
    params.validate()?;
    let network = OscillatorNetwork::plain_cim(model, 0.5 * params.gamma_c)?;
    Ok(FeNetwork {
        scheme: Scheme::Plain,
        model: model.clone(),
        n_flip: None,
        network,
        layout: FeLayout { signals: (0..model.n_spins()).collect(), ..Default::default() },
    })
}

pub fn build_feedback(model: &IsingModel, params: &EngineParams) -> Result<FeNetwork> {
    params.validate()?;
    let network = OscillatorNetwork::feedback_cim(model, params.omega_fb)?;
    Ok(FeNetwork {
        scheme: Scheme::Feedback,
        model: model.clone(),
        n_flip: None,
        network,
        layout: FeLayout { signals: (0..model.n_spins()).collect(), ..Default::default() },
    })
}

/// Default hyperspin phases: on the triangle `(0,1) → 0`, `(1,2) → π/2`,
/// `(0,2) → π/4`; otherwise `k·π/(2N_c)` for coupling index `k`.
pub fn default_hyperspin_phases(model: &IsingModel) -> BTreeMap<(usize, usize), f64> {
    let nc = model.n_couplings();
    let triangle = model.n_spins() == 3 && nc == 3;
    model
        .couplings()
        .iter()
        .enumerate()
        .map(|(k, cp)| {
            let phi = match (triangle, cp.pair()) {
                (true, (0, 1)) => 0.0,
                (true, (1, 2)) => FRAC_PI_2,
                (true, (0, 2)) => FRAC_PI_4,
                _ => k as f64 * PI / (2.0 * nc as f64),
            };
            (cp.pair(), phi)
        })
        .collect()
}

fn ground_flip_count(model: &IsingModel) -> Result<usize> {
    if model.n_spins() > MAX_EXACT_SPINS {
        return Err(Error::TooLarge(model.n_spins()));
    }
    let spectrum = solve_exact(model)?;
    required_flips(model, spectrum.ground_energy())
}

/// Single-flip scheme: one NDOPO pair absorbs the unsatisfied coupling through
/// the conjugate channels `L_ani = Σ e^{iφ}(a_n + s a_m) + 2 a_ani` and
/// `L_ans = Σ e^{−iφ}(a_n + s a_m) + 2 a_ans`.
pub fn build_hyperspin(
    model: &IsingModel,
    phases: &BTreeMap<(usize, usize), f64>,
    params: &EngineParams,
) -> Result<FeNetwork> {
    params.validate()?;
    if model.n_couplings() == 0 {
        return Err(Error::InvalidModel("model has no couplings to flip".into()));
    }
    let flips = ground_flip_count(model)?;
    if flips != 1 {
        return Err(Error::InvalidModel(format!(
            "hyperspin scheme needs a single-flip ground state, this model needs {flips}"
        )));
    }
    let mut phis = Vec::with_capacity(model.n_couplings());
    for cp in model.couplings() {
        let phi = *phases.get(&cp.pair()).ok_or(Error::MissingPhase(cp.n, cp.m))?;
        if !phi.is_finite() {
            return Err(Error::InvalidParameter(format!("phase {phi} for ({}, {})", cp.n, cp.m)));
        }
        phis.push(phi.rem_euclid(TAU));
    }
    for i in 0..phis.len() {
        for j in i + 1..phis.len() {
            if (phis[i] - phis[j]).abs() < 1e-12 {
                return Err(Error::InvalidParameter(format!("phases of couplings {i} and {j} coincide")));
            }
        }
    }
    if phases.len() != model.n_couplings() {
        return Err(Error::InvalidParameter("phase map names a pair that is not a coupling".into()));
    }
    let n = model.n_spins();
    let ani = n;
    let ans = n + 1;
    let mut modes = crate::dynamics::ModeSpec::signals(n);
    modes.push(ModeSpec { id: ani, kind: ModeKind::NdopoIdler, partner: Some(ans), label: "a_ani".into() });
    modes.push(ModeSpec { id: ans, kind: ModeKind::NdopoSignal, partner: Some(ani), label: "a_ans".into() });

    let mut channels = Vec::new();
    for (conj, anc, label) in [(false, ani, "L_ani"), (true, ans, "L_ans")] {
        let mut terms = Vec::new();
        for (cp, &phi) in model.couplings().iter().zip(&phis) {
            let e = Complex64::from_polar(1.0, if conj { -phi } else { phi });
            terms.push((cp.n, e));
            terms.push((cp.m, e * f64::from(cp.sign)));
        }
        terms.push((anc, c(2.0, 0.0)));
        channels.push(DissipativeChannel::new(label, terms, 0.5 * params.gamma_c)?);
    }
    let network = OscillatorNetwork::new(modes, channels)?;
    Ok(FeNetwork {
        scheme: Scheme::Hyperspin,
        model: model.clone(),
        n_flip: Some(1),
        network,
        layout: FeLayout { signals: (0..n).collect(), ans: vec![ans], ani: vec![ani], ..Default::default() },
    })
}

/// General scheme for `n_flip` flipped couplings: per coupling a flag DOPO
/// `b_{n,m}` and an NDOPO pair, plus one control DOPO.
pub fn build_general_fe(
    model: &IsingModel,
    n_flip: usize,
    params: &EngineParams,
    control: ControlForce,
) -> Result<FeNetwork> {
    params.validate()?;
    let n = model.n_spins();
    let nc = model.n_couplings();
    if nc == 0 {
        return Err(Error::InvalidModel("model has no couplings".into()));
    }
    if n_flip > nc {
        return Err(Error::InvalidParameter(format!("n_flip = {n_flip} exceeds the {nc} couplings")));
    }
    let flag = |k: usize| n + 3 * k;
    let ans = |k: usize| n + 3 * k + 1;
    let ani = |k: usize| n + 3 * k + 2;
    let bc = n + 3 * nc;

    let mut modes = ModeSpec::signals(n);
    for (k, cp) in model.couplings().iter().enumerate() {
        let tag = format!("{}_{}", cp.n, cp.m);
        modes.push(ModeSpec::dopo(flag(k), ModeKind::DopoAncillaFlag, format!("b_{tag}")));
        modes.push(ModeSpec {
            id: ans(k),
            kind: ModeKind::NdopoSignal,
            partner: Some(ani(k)),
            label: format!("a_ans_{tag}"),
        });
        modes.push(ModeSpec {
            id: ani(k),
            kind: ModeKind::NdopoIdler,
            partner: Some(ans(k)),
            label: format!("a_ani_{tag}"),
        });
    }
    modes.push(ModeSpec::dopo(bc, ModeKind::DopoAncillaControl, "b_control"));

    let half = 0.5 * params.gamma_c;
    let mut channels = Vec::with_capacity(2 * nc + 1);
    for (k, cp) in model.couplings().iter().enumerate() {
        let s = f64::from(cp.sign);
        for (phase, anc, name) in [(c(0.0, 1.0), ans(k), "L_ans"), (c(0.0, -1.0), ani(k), "L_ani")] {
            channels.push(DissipativeChannel::new(
                format!("{name}_{}_{}", cp.n, cp.m),
                [(cp.n, c(1.0, 0.0)), (cp.m, c(s, 0.0)), (bc, phase), (flag(k), phase), (anc, c(2.0, 0.0))],
                half,
            )?);
        }
    }
    let kc = 2.0 * n_flip as f64 - nc as f64;
    let mut terms: Vec<(usize, Complex64)> = (0..nc).map(|k| (flag(k), c(1.0, 0.0))).collect();
    terms.push((bc, c(kc, 0.0)));
    let control_channel = match control {
        ControlForce::Lindblad => DissipativeChannel::new("L_control", terms, half)?,
        ControlForce::AsWritten => {
            let mut w: Vec<(usize, Complex64)> = (0..nc).map(|k| (flag(k), c(0.5, 0.0))).collect();
            w.push((bc, c(kc, 0.0)));
            DissipativeChannel::new("L_control", terms, params.gamma_c)?.with_back_action(w)
        }
    };
    channels.push(control_channel);
    let network = OscillatorNetwork::new(modes, channels)?;
    Ok(FeNetwork {
        scheme: Scheme::GeneralFe,
        model: model.clone(),
        n_flip: Some(n_flip),
        network,
        layout: FeLayout {
            signals: (0..n).collect(),
            flags: (0..nc).map(flag).collect(),
            ans: (0..nc).map(ans).collect(),
            ani: (0..nc).map(ani).collect(),
            control: Some(bc),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperspin_triangle_coefficients() {
        let model = IsingModel::all_to_all_afm(3).unwrap();
        let phases = default_hyperspin_phases(&model);
        let fe = build_hyperspin(&model, &phases, &EngineParams::default()).unwrap();
        assert_eq!(fe.n_modes(), 5);
        assert_eq!(fe.network.channels().len(), 2);
        let e = Complex64::from_polar(1.0, FRAC_PI_4);
        let i = c(0.0, 1.0);
        let want = [c(1.0, 0.0) + e, c(1.0, 0.0) + i, i + e, c(2.0, 0.0)];
        let ani = fe.network.channels().iter().find(|ch| ch.label == "L_ani").unwrap();
        let got = ani.dense(5);
        for (k, w) in [0, 1, 2, 3].into_iter().zip(want) {
            assert!((got[k] - w).norm() < 1e-15, "{k}: {} vs {w}", got[k]);
        }
        let ans = fe.network.channels().iter().find(|ch| ch.label == "L_ans").unwrap();
        let got = ans.dense(5);
        for k in 0..3 {
            assert!((got[k] - want[k].conj()).norm() < 1e-15);
        }
        assert_eq!(got[4], c(2.0, 0.0));
    }

    #[test]
    fn hyperspin_errors() {
        let p = EngineParams::default();
        let empty = IsingModel::new(2, &[], 1.0).unwrap();
        assert!(build_hyperspin(&empty, &BTreeMap::new(), &p).is_err());
        let tri = IsingModel::all_to_all_afm(3).unwrap();
        let mut ph = default_hyperspin_phases(&tri);
        ph.remove(&(0, 2));
        assert!(matches!(build_hyperspin(&tri, &ph, &p), Err(Error::MissingPhase(0, 2))));
        let mut ph = default_hyperspin_phases(&tri);
        ph.insert((0, 2), 0.0);
        assert!(build_hyperspin(&tri, &ph, &p).is_err());
        let four = IsingModel::all_to_all_afm(4).unwrap();
        assert!(build_hyperspin(&four, &default_hyperspin_phases(&four), &p).is_err());
    }

    #[test]
    fn general_mode_counts_and_control_coefficient() {
        let p = EngineParams::default();
        let m3 = IsingModel::all_to_all_afm(3).unwrap();
        let fe = build_general_fe(&m3, 1, &p, ControlForce::AsWritten).unwrap();
        assert_eq!(fe.n_modes(), 3 + 10);
        let m4 = IsingModel::all_to_all_afm(4).unwrap();
        let fe = build_general_fe(&m4, 2, &p, ControlForce::AsWritten).unwrap();
        assert_eq!(fe.n_modes(), 4 + 19);
        let ctl = fe.network.channels().last().unwrap();
        assert_eq!(ctl.coefficient(fe.layout.control.unwrap()), c(-2.0, 0.0));
        assert!(build_general_fe(&m4, 7, &p, ControlForce::AsWritten).is_err());
        let fe0 = build_general_fe(&m3, 0, &p, ControlForce::Lindblad).unwrap();
        let ctl = fe0.network.channels().last().unwrap();
        assert_eq!(ctl.coefficient(fe0.layout.control.unwrap()), c(-3.0, 0.0));
        assert!(!ctl.has_back_action_override());
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("general_fe".parse::<Scheme>().unwrap(), Scheme::GeneralFe);
        assert!("bogus".parse::<Scheme>().is_err());
    }
}
