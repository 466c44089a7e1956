use num_complex::Complex64;

use crate::error::{QuantumError, Result};

const NONE: u32 = u32::MAX;

/// Truncated multimode Fock basis: per-mode cutoffs `d_k` (levels
/// `0..d_k`) and an optional cap on the total photon number.
#[derive(Debug, Clone)]
pub struct FockSpace {
    cutoffs: Vec<usize>,
    cap: Option<usize>,
    occ: Vec<u8>,
    lower: Vec<Vec<u32>>,
    raise: Vec<Vec<u32>>,
    sqrt_n: Vec<f64>,
    boundary: Vec<u32>,
    even: usize,
}

/// Largest basis the simulator will allocate.
pub const MAX_DIMENSION: usize = 1_000_000;

impl FockSpace {
    pub fn new(cutoffs: Vec<usize>, cap: Option<usize>) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(QuantumError::InvalidSpace("no modes".into()));
        }
        if cutoffs.iter().any(|&d| !(2..=255).contains(&d)) {
            return Err(QuantumError::InvalidSpace(format!("cutoffs {cutoffs:?} must lie in 2..=255")));
        }
        let m = cutoffs.len();
        let full: usize = cutoffs.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).unwrap_or(usize::MAX);
        if full > 16 * MAX_DIMENSION {
            return Err(QuantumError::TooLarge(full));
        }
        // Mixed-radix lookup over the full product space. States with an
        // even total photon number come first so the two parity sectors are
        // contiguous index ranges.
        let mut lookup = vec![NONE; full];
        let mut occ = Vec::new();
        let mut dim = 0u32;
        let mut even = 0usize;
        for parity in 0..2 {
            let mut cur = vec![0usize; m];
            for code in 0..full {
                let total: usize = cur.iter().sum();
                if total % 2 == parity && cap.is_none_or(|k| total <= k) {
                    lookup[code] = dim;
                    occ.extend(cur.iter().map(|&n| n as u8));
                    dim += 1;
                    if dim as usize > MAX_DIMENSION {
                        return Err(QuantumError::TooLarge(dim as usize));
                    }
                }
                for k in (0..m).rev() {
                    cur[k] += 1;
                    if cur[k] < cutoffs[k] {
                        break;
                    }
                    cur[k] = 0;
                }
            }
            if parity == 0 {
                even = dim as usize;
            }
        }
        let dim = dim as usize;
        let mut stride = vec![1usize; m];
        for k in (0..m.saturating_sub(1)).rev() {
            stride[k] = stride[k + 1] * cutoffs[k + 1];
        }
        let code_of = |s: &[u8]| s.iter().zip(&stride).map(|(&n, &st)| n as usize * st).sum::<usize>();
        let mut lower = vec![vec![NONE; dim]; m];
        let mut raise = vec![vec![NONE; dim]; m];
        let mut boundary = Vec::new();
        for i in 0..dim {
            let s = &occ[i * m..(i + 1) * m];
            let code = code_of(s);
            let total: usize = s.iter().map(|&n| n as usize).sum();
            let mut on_boundary = cap == Some(total);
            for k in 0..m {
                if s[k] > 0 {
                    lower[k][i] = lookup[code - stride[k]];
                }
                if (s[k] as usize) + 1 < cutoffs[k] {
                    raise[k][i] = lookup[code + stride[k]];
                } else {
                    on_boundary = true;
                }
            }
            if on_boundary {
                boundary.push(i as u32);
            }
        }
        let max_d = *cutoffs.iter().max().unwrap_or(&1);
        let sqrt_n = (0..=max_d).map(|n| (n as f64).sqrt()).collect();
        Ok(Self { cutoffs, cap, occ, lower, raise, sqrt_n, boundary, even })
    }

    /// Same cutoff on every mode, optional total cap.
    pub fn uniform(n_modes: usize, cutoff: usize, cap: Option<usize>) -> Result<Self> {
        Self::new(vec![cutoff; n_modes], cap)
    }

    pub fn n_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn dim(&self) -> usize {
        self.occ.len() / self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn cap(&self) -> Option<usize> {
        self.cap
    }

    /// Index range of the states whose total photon number has `parity`
    /// (0 even, 1 odd).
    pub fn sector(&self, parity: usize) -> std::ops::Range<usize> {
        if parity % 2 == 0 {
            0..self.even
        } else {
            self.even..self.dim()
        }
    }

    /// Ladder factor `√n`.
    pub(crate) fn sqrt(&self, n: usize) -> f64 {
        self.sqrt_n[n]
    }

    /// Index reached by `a_k` from basis state `i`.
    pub(crate) fn lowered(&self, k: usize, i: usize) -> Option<usize> {
        let j = self.lower[k][i];
        (j != NONE).then_some(j as usize)
    }

    /// Index reached by `a_k†` from basis state `i`.
    pub(crate) fn raised(&self, k: usize, i: usize) -> Option<usize> {
        let j = self.raise[k][i];
        (j != NONE).then_some(j as usize)
    }

    pub fn occupation(&self, index: usize) -> &[u8] {
        let m = self.n_modes();
        &self.occ[index * m..(index + 1) * m]
    }

    pub fn index_of(&self, occupation: &[usize]) -> Option<usize> {
        if occupation.len() != self.n_modes() {
            return None;
        }
        // Walk down from vacuum with raising tables.
        let mut i = 0usize;
        for (k, &n) in occupation.iter().enumerate() {
            for _ in 0..n {
                let j = self.raise[k][i];
                if j == NONE {
                    return None;
                }
                i = j as usize;
            }
        }
        Some(i)
    }

    pub fn vacuum(&self) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.dim()];
        v[0] = Complex64::new(1.0, 0.0);
        v
    }

    /// `out += c · a_k ψ`.
    #[inline]
    pub fn add_lower(&self, k: usize, c: Complex64, psi: &[Complex64], out: &mut [Complex64]) {
        let m = self.n_modes();
        let low = &self.lower[k];
        for (i, &a) in psi.iter().enumerate() {
            let j = low[i];
            if j != NONE {
                out[j as usize] += c * self.sqrt_n[self.occ[i * m + k] as usize] * a;
            }
        }
    }

    /// `out += c · a_k† ψ` (drops amplitude pushed past the truncation).
    #[inline]
    pub fn add_raise(&self, k: usize, c: Complex64, psi: &[Complex64], out: &mut [Complex64]) {
        let m = self.n_modes();
        let up = &self.raise[k];
        for (i, &a) in psi.iter().enumerate() {
            let j = up[i];
            if j != NONE {
                out[j as usize] += c * self.sqrt_n[self.occ[i * m + k] as usize + 1] * a;
            }
        }
    }

    /// `out += c · a_k a_l ψ`.
    #[inline]
    pub fn add_lower_pair(&self, k: usize, l: usize, c: Complex64, psi: &[Complex64], out: &mut [Complex64]) {
        let m = self.n_modes();
        let (lk, ll) = (&self.lower[k], &self.lower[l]);
        for (i, &a) in psi.iter().enumerate() {
            let j = ll[i];
            if j == NONE {
                continue;
            }
            let j = j as usize;
            let h = lk[j];
            if h != NONE {
                let f = self.sqrt_n[self.occ[i * m + l] as usize] * self.sqrt_n[self.occ[j * m + k] as usize];
                out[h as usize] += c * f * a;
            }
        }
    }

    /// `out += c · a_k† a_l† ψ`.
    #[inline]
    pub fn add_raise_pair(&self, k: usize, l: usize, c: Complex64, psi: &[Complex64], out: &mut [Complex64]) {
        let m = self.n_modes();
        let (rk, rl) = (&self.raise[k], &self.raise[l]);
        for (i, &a) in psi.iter().enumerate() {
            let j = rl[i];
            if j == NONE {
                continue;
            }
            let j = j as usize;
            let h = rk[j];
            if h != NONE {
                let f = self.sqrt_n[self.occ[i * m + l] as usize + 1] * self.sqrt_n[self.occ[j * m + k] as usize + 1];
                out[h as usize] += c * f * a;
            }
        }
    }

    /// `⟨a_k† a_k⟩` for a normalized state.
    pub fn mean_photons(&self, psi: &[Complex64], k: usize) -> f64 {
        let m = self.n_modes();
        psi.iter().enumerate().map(|(i, a)| a.norm_sqr() * self.occ[i * m + k] as f64).sum()
    }

    /// Population on any mode's top level or on the total-cap shell.
    pub fn boundary_population(&self, psi: &[Complex64]) -> f64 {
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if norm == 0.0 {
            return 0.0;
        }
        self.boundary.iter().map(|&i| psi[i as usize].norm_sqr()).sum::<f64>() / norm
    }

    /// Product coherent state `⊗|α_k⟩` projected on the truncated basis
    /// (not renormalized).
    pub fn coherent(&self, alphas: &[Complex64]) -> Result<Vec<Complex64>> {
        if alphas.len() != self.n_modes() {
            return Err(QuantumError::Dimension { expected: self.n_modes(), got: alphas.len() });
        }
        let max_d = *self.cutoffs.iter().max().unwrap_or(&1);
        // Per-mode amplitude tables e^{−|α|²/2} α^n / √n!.
        let tables: Vec<Vec<Complex64>> = alphas
            .iter()
            .map(|&al| {
                let mut t = Vec::with_capacity(max_d);
                let mut v = Complex64::new((-0.5 * al.norm_sqr()).exp(), 0.0);
                for n in 0..max_d {
                    t.push(v);
                    v = v * al / ((n + 1) as f64).sqrt();
                }
                t
            })
            .collect();
        let m = self.n_modes();
        Ok((0..self.dim())
            .map(|i| {
                (0..m).fold(Complex64::new(1.0, 0.0), |acc, k| acc * tables[k][self.occ[i * m + k] as usize])
            })
            .collect())
    }
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn normalize(a: &mut [Complex64]) -> f64 {
    let n = norm_sqr(a).sqrt();
    if n > 0.0 {
        for x in a.iter_mut() {
            *x /= n;
        }
    }
    n
}
