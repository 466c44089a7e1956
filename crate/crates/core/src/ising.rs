//! Uniform-magnitude (±J) Ising instances.
//!
//! Energies are tracked internally as integer multiples of `J`
//! (`Σ sign · s_n · s_m`), so grouping configurations into levels never
//! depends on floating-point comparisons.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest instance [`solve_exact`] will enumerate.
pub const MAX_EXACT_SPINS: usize = 24;

/// One `J_{n,m} σ_z^n σ_z^m` term; `n < m` after normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coupling {
    pub n: usize,
    pub m: usize,
    /// `+1` antiferromagnetic, `-1` ferromagnetic.
    pub sign: i8,
}

impl Coupling {
    pub fn pair(&self) -> (usize, usize) {
        (self.n, self.m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    n_spins: usize,
    couplings: Vec<Coupling>,
    j: f64,
}

impl IsingModel {
    /// Builds a model from `(n, m, sign)` triples with uniform magnitude `j`.
    pub fn new(n_spins: usize, couplings: &[(usize, usize, i8)], j: f64) -> Result<Self> {
        if n_spins == 0 {
            return Err(Error::InvalidModel("n_spins must be positive".into()));
        }
        if !(j.is_finite() && j > 0.0) {
            return Err(Error::InvalidModel(format!("J must be positive, got {j}")));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::with_capacity(couplings.len());
        for (k, &(a, b, sign)) in couplings.iter().enumerate() {
            if a == b {
                return Err(Error::InvalidModel(format!(
                    "coupling #{k} connects spin {a} to itself"
                )));
            }
            if a >= n_spins || b >= n_spins {
                return Err(Error::InvalidModel(format!(
                    "coupling #{k} ({a}, {b}) references a spin outside 0..{n_spins}"
                )));
            }
            if sign != 1 && sign != -1 {
                return Err(Error::InvalidModel(format!(
                    "coupling #{k} has sign {sign}; expected +1 or -1"
                )));
            }
            let (n, m) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((n, m)) {
                return Err(Error::InvalidModel(format!(
                    "duplicate coupling between spins {n} and {m}"
                )));
            }
            out.push(Coupling { n, m, sign });
        }
        Ok(Self { n_spins, couplings: out, j })
    }

    /// Builds a model from a dense symmetric coupling matrix. Zero entries are
    /// absent couplings; every nonzero entry must have the same magnitude.
    pub fn from_matrix(matrix: &[Vec<f64>]) -> Result<Self> {
        let n = matrix.len();
        let mut j: Option<f64> = None;
        let mut triples = Vec::new();
        for (a, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidModel(format!("row {a} has {} entries, expected {n}", row.len())));
            }
            if row[a] != 0.0 {
                return Err(Error::InvalidModel(format!("diagonal entry ({a}, {a}) is nonzero")));
            }
            for b in a + 1..n {
                let v = row[b];
                if v != matrix[b][a] {
                    return Err(Error::InvalidModel(format!("matrix is not symmetric at ({a}, {b})")));
                }
                if v == 0.0 {
                    continue;
                }
                match j {
                    None => j = Some(v.abs()),
                    Some(mag) if (mag - v.abs()).abs() > 1e-12 * mag => {
                        return Err(Error::InvalidModel(format!(
                            "non-uniform coupling magnitude {} at ({a}, {b}); expected {mag}",
                            v.abs()
                        )))
                    }
                    _ => {}
                }
                triples.push((a, b, if v > 0.0 { 1 } else { -1 }));
            }
        }
        Self::new(n, &triples, j.unwrap_or(1.0))
    }

    /// All-to-all antiferromagnet on `n` spins (every sign `+1`).
    pub fn all_to_all_afm(n: usize) -> Result<Self> {
        let triples: Vec<_> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b, 1i8)))
            .collect();
        Self::new(n, &triples, 1.0)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    /// Number of coupling terms `N_c`.
    pub fn n_couplings(&self) -> usize {
        self.couplings.len()
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    /// Index of the coupling on the unordered pair `(a, b)`.
    pub fn coupling_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.couplings.iter().position(|c| c.pair() == key)
    }

    fn energy_units_unchecked(&self, spins: &[i8]) -> i64 {
        self.couplings
            .iter()
            .map(|c| i64::from(c.sign) * i64::from(spins[c.n]) * i64::from(spins[c.m]))
            .sum()
    }

    fn energy_units_mask(&self, mask: u32) -> i64 {
        self.couplings
            .iter()
            .map(|c| {
                let aligned = ((mask >> c.n) ^ (mask >> c.m)) & 1 == 0;
                if aligned {
                    i64::from(c.sign)
                } else {
                    -i64::from(c.sign)
                }
            })
            .sum()
    }

    /// Energy in units of `J`.
    pub fn energy_units(&self, config: &SpinConfig) -> Result<i64> {
        self.check_len(config)?;
        Ok(self.energy_units_unchecked(config.spins()))
    }

    /// Couplings left unsatisfied by `config` (those contributing `+J`).
    pub fn unsatisfied(&self, config: &SpinConfig) -> Result<Vec<usize>> {
        self.check_len(config)?;
        let s = config.spins();
        Ok(self
            .couplings
            .iter()
            .enumerate()
            .filter(|(_, c)| i64::from(c.sign) * i64::from(s[c.n]) * i64::from(s[c.m]) > 0)
            .map(|(k, _)| k)
            .collect())
    }

    fn check_len(&self, config: &SpinConfig) -> Result<()> {
        if config.len() != self.n_spins {
            return Err(Error::LengthMismatch { expected: self.n_spins, got: config.len() });
        }
        Ok(())
    }
}

impl fmt::Display for IsingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IsingModel(N={}, N_c={}, J={})", self.n_spins, self.couplings.len(), self.j)
    }
}

/// A vector of `±1` spins.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidModel(format!("spin value {bad} is not ±1")));
        }
        Ok(Self(spins))
    }

    /// Bit `i` set means spin `i` is down.
    pub fn from_mask(mask: u32, n: usize) -> Self {
        Self((0..n).map(|i| if (mask >> i) & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(if *s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// Energy of `config` under `model`, in energy units (`J` included).
pub fn energy(model: &IsingModel, config: &SpinConfig) -> Result<f64> {
    Ok(model.energy_units(config)? as f64 * model.j)
}

/// `E_MPE = -J N_c`, attained only when every coupling is satisfied.
pub fn minimum_possible_energy(model: &IsingModel) -> f64 {
    -(model.n_couplings() as f64) * model.j
}

/// Number of couplings that must be flipped for `target_energy` to become the
/// lossless point: `(E_target - E_MPE) / 2J`.
pub fn required_flips(model: &IsingModel, target_energy: f64) -> Result<usize> {
    let mpe = minimum_possible_energy(model);
    let q = (target_energy - mpe) / (2.0 * model.j);
    if q < -1e-9 {
        return Err(Error::BelowMinimum { target: target_energy, mpe });
    }
    let rounded = q.round();
    if (q - rounded).abs() > 1e-9 {
        return Err(Error::NonIntegerFlips(q));
    }
    Ok(rounded.max(0.0) as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    /// Energy in units of `J`.
    pub units: i64,
    pub energy: f64,
    /// Configurations at this level, lexicographic by spin vector.
    pub configs: Vec<SpinConfig>,
}

impl Level {
    pub fn degeneracy(&self) -> usize {
        self.configs.len()
    }
}

/// Complete energy spectrum of a model, levels in increasing energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub n_spins: usize,
    pub levels: Vec<Level>,
}

impl Spectrum {
    pub fn ground(&self) -> &Level {
        &self.levels[0]
    }

    pub fn ground_energy(&self) -> f64 {
        self.levels[0].energy
    }

    pub fn total_states(&self) -> usize {
        self.levels.iter().map(Level::degeneracy).sum()
    }

    pub fn level_with_energy(&self, energy: f64) -> Option<&Level> {
        self.levels.iter().find(|l| (l.energy - energy).abs() < 1e-9)
    }
}

/// Enumerates all `2^N` configurations and groups them by energy.
pub fn solve_exact(model: &IsingModel) -> Result<Spectrum> {
    let n = model.n_spins();
    if n > MAX_EXACT_SPINS {
        return Err(Error::TooLarge(n));
    }
    let total: u32 = 1u32 << n;
    const CHUNK: u32 = 1 << 14;
    let n_chunks = total.div_ceil(CHUNK);
    let partials: Vec<BTreeMap<i64, Vec<u32>>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut map: BTreeMap<i64, Vec<u32>> = BTreeMap::new();
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(total);
            for mask in lo..hi {
                map.entry(model.energy_units_mask(mask)).or_default().push(mask);
            }
            map
        })
        .collect();

    let mut merged: BTreeMap<i64, Vec<u32>> = BTreeMap::new();
    for part in partials {
        for (units, masks) in part {
            merged.entry(units).or_default().extend(masks);
        }
    }
    let levels = merged
        .into_iter()
        .map(|(units, masks)| {
            let mut configs: Vec<SpinConfig> =
                masks.into_iter().map(|m| SpinConfig::from_mask(m, n)).collect();
            configs.sort();
            Level { units, energy: units as f64 * model.j, configs }
        })
        .collect();
    Ok(Spectrum { n_spins: n, levels })
}

/// Model description as it appears in run configuration files: either an
/// explicit coupling list or a generator keyword.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSource {
    /// Generator keyword; currently only `"afm-all-to-all"`.
    #[serde(default)]
    pub generator: Option<String>,
    /// Spin count for the generator.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub n_spins: Option<usize>,
    /// `(n, m, sign)` triples.
    #[serde(default)]
    pub couplings: Option<Vec<(usize, usize, i8)>>,
    #[serde(default)]
    pub j: Option<f64>,
}

impl ModelSource {
    pub fn afm(n: usize) -> Self {
        Self {
            generator: Some("afm-all-to-all".into()),
            n: Some(n),
            n_spins: None,
            couplings: None,
            j: None,
        }
    }

    pub fn build(&self) -> Result<IsingModel> {
        match (&self.generator, &self.couplings) {
            (Some(_), Some(_)) => Err(Error::InvalidModel(
                "model.generator and model.couplings are mutually exclusive".into(),
            )),
            (Some(g), None) => {
                let n = self.n.or(self.n_spins).ok_or_else(|| {
                    Error::InvalidModel(format!("model.generator = \"{g}\" needs model.n"))
                })?;
                match g.as_str() {
                    "afm-all-to-all" | "all-to-all-afm" => {
                        let base = IsingModel::all_to_all_afm(n)?;
                        match self.j {
                            Some(j) => IsingModel::new(n, &base.triples(), j),
                            None => Ok(base),
                        }
                    }
                    other => Err(Error::InvalidModel(format!("unknown model generator \"{other}\""))),
                }
            }
            (None, Some(c)) => {
                let n = self.n_spins.or(self.n).ok_or_else(|| {
                    Error::InvalidModel("model.couplings needs model.n_spins".into())
                })?;
                IsingModel::new(n, c, self.j.unwrap_or(1.0))
            }
            (None, None) => Err(Error::InvalidModel(
                "model needs either a generator or a coupling list".into(),
            )),
        }
    }
}

impl IsingModel {
    pub fn triples(&self) -> Vec<(usize, usize, i8)> {
        self.couplings.iter().map(|c| (c.n, c.m, c.sign)).collect()
    }
}
