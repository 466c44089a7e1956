//! Open-port delay lines: beam-splitter algebra, dark-mode order checks and
//! compilation of coupling sets into multi-port schedules.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::IsingModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitterParams {
    r: f64,
    t: f64,
}

impl SplitterParams {
    pub fn new(r: f64) -> Result<Self> {
        if !(r.is_finite() && (0.0..1.0).contains(&r)) {
            return Err(Error::InvalidParameter(format!("reflection amplitude {r} outside [0, 1)")));
        }
        Ok(Self { r, t: (1.0 - r * r).sqrt() })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

/// One splitter: `a' = T a − R b`, `b' = T b + R a`.
pub fn beam_splitter(p: &SplitterParams, a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    (p.t * a - p.r * b, p.t * b + p.r * a)
}

/// Delay line passing pulse 1 then pulse 2:
/// `a₁' = T a₁ − R b`, `a₂' = T a₂ − RT b − R² a₁`, `b'' = T² b + RT a₁ + R a₂`.
pub fn single_pass(
    p: &SplitterParams,
    a1: Complex64,
    a2: Complex64,
    b_in: Complex64,
) -> (Complex64, Complex64, Complex64) {
    let (t, r) = (p.t, p.r);
    (
        t * a1 - r * b_in,
        t * a2 - r * t * b_in - r * r * a1,
        t * t * b_in + r * t * a1 + r * a2,
    )
}

/// Opposite-order line: `a₂'' = T a₂' − R b_op`, `a₁'' = T a₁' − RT b_op − R² a₂'`.
pub fn reverse_pass(p: &SplitterParams, a1: Complex64, a2: Complex64, b_op: Complex64) -> (Complex64, Complex64) {
    let (t, r) = (p.t, p.r);
    (t * a1 - r * t * b_op - r * r * a2, t * a2 - r * b_op)
}

/// Forward line followed by the opposite-order line.
pub fn double_pass(
    p: &SplitterParams,
    a1: Complex64,
    a2: Complex64,
    b_in: Complex64,
    b_op: Complex64,
) -> (Complex64, Complex64) {
    let (x1, x2, _) = single_pass(p, a1, a2, b_in);
    reverse_pass(p, x1, x2, b_op)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineVariant {
    /// One direction only.
    Single,
    /// Forward plus opposite-order line.
    Double,
}

/// Collective-mode coefficients of a line with vacuum inputs.
///
/// `dark` and `bright` are the gains of `a₁ − a₂` and `a₁ + a₂` with the
/// remainder proportional to `a₁` split off (probe with `a₁ = 0`);
/// `cross` is the weight of `a₁ + a₂` in the output `a₁ − a₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoefficients {
    pub dark: f64,
    pub bright: f64,
    pub cross: f64,
}

impl ModeCoefficients {
    pub fn dark_deviation(&self) -> f64 {
        (self.dark - 1.0).abs()
    }

    pub fn bright_loss(&self) -> f64 {
        1.0 - self.bright.abs()
    }
}

fn apply(variant: LineVariant, p: &SplitterParams, a1: f64, a2: f64) -> (f64, f64) {
    let z = Complex64::new(0.0, 0.0);
    let (x1, x2) = match variant {
        LineVariant::Single => {
            let (x1, x2, _) = single_pass(p, a1.into(), a2.into(), z);
            (x1, x2)
        }
        LineVariant::Double => double_pass(p, a1.into(), a2.into(), z, z),
    };
    (x1.re, x2.re)
}

pub fn mode_coefficients(variant: LineVariant, p: &SplitterParams) -> ModeCoefficients {
    let (x1, x2) = apply(variant, p, 0.0, -1.0);
    let dark = x1 - x2;
    let (x1, x2) = apply(variant, p, 0.0, 1.0);
    let bright = x1 + x2;
    // a₁ = a₂ = ½ is the pure bright input of unit weight.
    let (x1, x2) = apply(variant, p, 0.5, 0.5);
    ModeCoefficients { dark, bright, cross: x1 - x2 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderRow {
    pub r: f64,
    pub coefficients: ModeCoefficients,
    pub dark_ok: bool,
    pub cross_ok: bool,
    pub bright_ok: bool,
}

impl OrderRow {
    pub fn passed(&self) -> bool {
        self.dark_ok && self.cross_ok && self.bright_ok
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub variant: LineVariant,
    pub rows: Vec<OrderRow>,
}

impl OrderReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(OrderRow::passed)
    }

    pub fn failing(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| !r.passed()).map(|r| r.r).collect()
    }
}

/// Tabulates the order checks without failing.
pub fn dark_order_report(variant: LineVariant, r_values: &[f64]) -> Result<OrderReport> {
    let mut rows = Vec::with_capacity(r_values.len());
    for &r in r_values {
        if !(r > 0.0 && r <= 0.3) {
            return Err(Error::InvalidParameter(format!("r = {r} outside (0, 0.3]")));
        }
        let c = mode_coefficients(variant, &SplitterParams::new(r)?);
        let r2 = r * r;
        let r4 = r2 * r2;
        rows.push(OrderRow {
            r,
            coefficients: c,
            dark_ok: c.dark_deviation() <= r4,
            cross_ok: c.cross.abs() <= r4,
            bright_ok: (1.5 * r2..=2.5 * r2).contains(&c.bright_loss()),
        });
    }
    Ok(OrderReport { variant, rows })
}

/// Checks `|dark − 1| ≤ r⁴`, `|cross| ≤ r⁴` and bright loss in `[1.5r², 2.5r²]`.
pub fn verify_dark_order(variant: LineVariant, r_values: &[f64]) -> Result<OrderReport> {
    let report = dark_order_report(variant, r_values)?;
    if report.passed() {
        Ok(report)
    } else {
        Err(Error::OrderCheck(format!("bounds violated at r = {:?}", report.failing())))
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// A phase stored as a multiple of π; exact rationals print as `p/q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiPhase(pub f64);

impl PiPhase {
    pub fn from_radians(phi: f64) -> Self {
        PiPhase(phi / PI)
    }

    pub fn radians(self) -> f64 {
        self.0 * PI
    }

    fn as_rational(self) -> Option<(i64, i64)> {
        (1..=720i64).find_map(|q| {
            let p = (self.0 * q as f64).round();
            ((self.0 * q as f64 - p).abs() < 1e-9 * q as f64).then_some((p as i64, q))
        })
    }
}

impl fmt::Display for PiPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_rational() {
            Some((p, 1)) => write!(f, "{p}"),
            Some((p, q)) => write!(f, "{p}/{q}"),
            None => write!(f, "{:?}", self.0),
        }
    }
}

impl FromStr for PiPhase {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        match s.split_once('/') {
            Some((p, q)) => {
                let p: i64 = p.trim().parse().map_err(|e| format!("numerator {p:?}: {e}"))?;
                let q: i64 = q.trim().parse().map_err(|e| format!("denominator {q:?}: {e}"))?;
                if q <= 0 {
                    return Err(format!("denominator {q} must be positive"));
                }
                Ok(PiPhase(p as f64 / q as f64))
            }
            None => s.parse::<f64>().map(PiPhase).map_err(|e| format!("phase {s:?}: {e}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortEntry {
    pub coupling: usize,
    pub pulses: (usize, usize),
    /// Modulator phase `φ` applied to the coupling term.
    pub phase: PiPhase,
    /// Extra phase on the second pulse; `π` realises a ferromagnetic sign.
    pub relative: PiPhase,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PortSchedule {
    pub entries: Vec<PortEntry>,
}

/// One forward and one backward entry per coupling, carrying `e^{iφ}`.
pub fn compile_multiport(model: &IsingModel, phases: &BTreeMap<(usize, usize), f64>) -> Result<PortSchedule> {
    let mut entries = Vec::with_capacity(2 * model.n_couplings());
    for (k, cp) in model.couplings().iter().enumerate() {
        let phi = *phases.get(&cp.pair()).ok_or(Error::MissingPhase(cp.n, cp.m))?;
        if !phi.is_finite() {
            return Err(Error::InvalidParameter(format!("phase {phi} for ({}, {})", cp.n, cp.m)));
        }
        let relative = PiPhase(if cp.sign > 0 { 0.0 } else { 1.0 });
        for direction in [Direction::Forward, Direction::Backward] {
            entries.push(PortEntry {
                coupling: k,
                pulses: (cp.n, cp.m),
                phase: PiPhase::from_radians(phi),
                relative,
                direction,
            });
        }
    }
    Ok(PortSchedule { entries })
}

impl PortSchedule {
    /// Coupling part `Σ e^{iφ}(a_n + e^{iθ} a_m)` (conjugated phases when
    /// `conjugate`), over `n_spins` signal modes.
    pub fn coupling_vector(&self, n_spins: usize, conjugate: bool) -> Result<Vec<Complex64>> {
        let mut per: BTreeMap<usize, (Option<&PortEntry>, Option<&PortEntry>)> = BTreeMap::new();
        for e in &self.entries {
            let slot = per.entry(e.coupling).or_default();
            let dir = match e.direction {
                Direction::Forward => &mut slot.0,
                Direction::Backward => &mut slot.1,
            };
            if dir.replace(e).is_some() {
                return Err(Error::InvalidNetwork(format!("coupling {} has two {} entries", e.coupling, e.direction)));
            }
        }
        let mut v = vec![Complex64::new(0.0, 0.0); n_spins];
        for (k, (fw, bw)) in per {
            let (Some(fw), Some(bw)) = (fw, bw) else {
                return Err(Error::InvalidNetwork(format!("coupling {k} lacks a forward/backward pair")));
            };
            if fw.pulses != bw.pulses || fw.phase != bw.phase || fw.relative != bw.relative {
                return Err(Error::InvalidNetwork(format!("coupling {k} has mismatched directions")));
            }
            let (n, m) = fw.pulses;
            if n >= n_spins || m >= n_spins {
                return Err(Error::InvalidNetwork(format!("coupling {k} addresses pulse outside {n_spins}")));
            }
            let s = if conjugate { -1.0 } else { 1.0 };
            let e = Complex64::from_polar(1.0, s * fw.phase.radians());
            let rel = Complex64::from_polar(1.0, fw.relative.radians());
            v[n] += e;
            v[m] += e * rel;
        }
        Ok(v)
    }

    /// Rebuilds `(L_ani, L_ans)` in the hyperspin layout: signals, then
    /// `a_ani`, then `a_ans`, each ancilla with coefficient 2.
    pub fn hyperspin_channels(&self, n_spins: usize) -> Result<[Vec<Complex64>; 2]> {
        let mut ani = self.coupling_vector(n_spins, false)?;
        let mut ans = self.coupling_vector(n_spins, true)?;
        ani.extend([Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)]);
        ans.extend([Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0)]);
        Ok([ani, ans])
    }

    /// Text form, one entry per line: `coupling n m phase relative direction`.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# coupling pulse_n pulse_m phase/pi relative/pi direction\n");
        for e in &self.entries {
            s.push_str(&format!(
                "{} {} {} {} {} {}\n",
                e.coupling, e.pulses.0, e.pulses.1, e.phase, e.relative, e.direction
            ));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { line: i + 1, msg };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(err(format!("expected 6 fields, found {}", f.len())));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|e| err(format!("{s:?}: {e}")));
            let direction = match f[5] {
                "forward" => Direction::Forward,
                "backward" => Direction::Backward,
                other => return Err(err(format!("unknown direction {other:?}"))),
            };
            entries.push(PortEntry {
                coupling: int(f[0])?,
                pulses: (int(f[1])?, int(f[2])?),
                phase: f[3].parse().map_err(err)?,
                relative: f[4].parse().map_err(err)?,
                direction,
            });
        }
        Ok(Self { entries })
    }
}
