use cim_core::dynamics::{ModeKind, OscillatorNetwork, PumpSchedule};
use num_complex::Complex64;

use crate::error::{QuantumError, Result};
use crate::fock::FockSpace;

/// Pumped two-photon process on modes `(i, j)` (`i == j` for a DOPO).
///
/// Pump `H = −iS(a_i†a_j† − a_i a_j)` with loss `Γ a_i a_j`. The pump is
/// absorbed into the shifted jump `√Γ (a_i a_j + 2S/Γ)`, which leaves the
/// Lindbladian unchanged and makes the remaining Hamiltonian vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpedJump {
    pub modes: (usize, usize),
    pub gamma: f64,
}

impl PumpedJump {
    /// Dark value of `a_i a_j` at pump `s`: `−2S/Γ`.
    pub fn shift(&self, s: f64) -> f64 {
        -2.0 * s / self.gamma
    }
}

/// Linear collective jump `√Γ Σ c_k a_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearJump {
    pub label: String,
    pub coeffs: Vec<(usize, Complex64)>,
    pub gamma: f64,
}

/// Truncated-Fock model of a DOPO/NDOPO network.
#[derive(Debug, Clone)]
pub struct FockNetwork {
    space: FockSpace,
    pumped: Vec<PumpedJump>,
    linear: Vec<LinearJump>,
    schedule: PumpSchedule,
    labels: Vec<String>,
}

/// Default cutoff `ceil(|α|² + 6|α| + 4)`.
pub fn default_cutoff(alpha_sq: f64) -> usize {
    (alpha_sq + 6.0 * alpha_sq.sqrt() + 4.0).ceil() as usize
}

impl FockNetwork {
    pub fn new(
        space: FockSpace,
        pumped: Vec<PumpedJump>,
        linear: Vec<LinearJump>,
        schedule: PumpSchedule,
        labels: Vec<String>,
    ) -> Result<Self> {
        let m = space.n_modes();
        if labels.len() != m {
            return Err(QuantumError::Dimension { expected: m, got: labels.len() });
        }
        if space.cutoffs().iter().any(|&d| d < 4) {
            return Err(QuantumError::InvalidSpace("cutoffs must be at least 4".into()));
        }
        for p in &pumped {
            if p.modes.0 >= m || p.modes.1 >= m {
                return Err(QuantumError::InvalidParameter(format!("pumped modes {:?} out of range", p.modes)));
            }
            if !(p.gamma.is_finite() && p.gamma > 0.0) {
                return Err(QuantumError::InvalidParameter(format!("two-photon rate {}", p.gamma)));
            }
        }
        for l in &linear {
            if l.coeffs.iter().any(|(k, _)| *k >= m) {
                return Err(QuantumError::InvalidParameter(format!("channel {} out of range", l.label)));
            }
            if !(l.gamma.is_finite() && l.gamma >= 0.0) {
                return Err(QuantumError::InvalidParameter(format!("channel rate {}", l.gamma)));
            }
        }
        schedule.validate()?;
        Ok(Self { space, pumped, linear, schedule, labels })
    }

    /// One DOPO.
    pub fn single_dopo(cutoff: usize, gamma: f64, schedule: PumpSchedule) -> Result<Self> {
        Self::new(
            FockSpace::uniform(1, cutoff, None)?,
            vec![PumpedJump { modes: (0, 0), gamma }],
            vec![],
            schedule,
            vec!["a0".into()],
        )
    }

    /// Two DOPOs with the antiferromagnetic channel `a₁ + a₂`.
    pub fn afm_pair(cutoff: usize, gamma: f64, gamma_c: f64, schedule: PumpSchedule) -> Result<Self> {
        let one = Complex64::new(1.0, 0.0);
        Self::new(
            FockSpace::uniform(2, cutoff, None)?,
            vec![PumpedJump { modes: (0, 0), gamma }, PumpedJump { modes: (1, 1), gamma }],
            vec![LinearJump { label: "L".into(), coeffs: vec![(0, one), (1, one)], gamma: gamma_c }],
            schedule,
            vec!["a0".into(), "a1".into()],
        )
    }

    /// Operator form of a compiled oscillator network: each DOPO gets a
    /// pumped `a²` jump, each NDOPO pair one pumped `a_i a_j` jump, and each
    /// channel a linear jump. A semiclassical channel force `−rate·c_i*·L`
    /// is the mean field of a jump at rate `2·rate`.
    pub fn from_network(
        net: &OscillatorNetwork,
        space: FockSpace,
        gamma: f64,
        schedule: PumpSchedule,
    ) -> Result<Self> {
        if net.feedback().is_some() {
            return Err(QuantumError::InvalidParameter("measurement feedback has no operator form here".into()));
        }
        if space.n_modes() != net.n_modes() {
            return Err(QuantumError::Dimension { expected: net.n_modes(), got: space.n_modes() });
        }
        let mut pumped = Vec::new();
        for m in net.modes() {
            match (m.kind, m.partner) {
                (ModeKind::NdopoIdler, Some(p)) => pumped.push(PumpedJump { modes: (m.id, p), gamma }),
                (ModeKind::NdopoSignal, _) => {}
                _ => pumped.push(PumpedJump { modes: (m.id, m.id), gamma }),
            }
        }
        if let Some(ch) = net.channels().iter().find(|ch| ch.has_back_action_override()) {
            return Err(QuantumError::InvalidParameter(format!(
                "channel {} has a non-Lindblad back-action",
                ch.label
            )));
        }
        let linear = net
            .channels()
            .iter()
            .map(|ch| LinearJump { label: ch.label.clone(), coeffs: ch.coefficients().to_vec(), gamma: 2.0 * ch.rate() })
            .collect();
        let labels = net.labels().into_iter().map(String::from).collect();
        Self::new(space, pumped, linear, schedule, labels)
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn pumped(&self) -> &[PumpedJump] {
        &self.pumped
    }

    pub fn linear(&self) -> &[LinearJump] {
        &self.linear
    }

    pub fn schedule(&self) -> &PumpSchedule {
        &self.schedule
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_jumps(&self) -> usize {
        self.pumped.len() + self.linear.len()
    }

    /// Pump strength `S(t)`.
    pub fn pump(&self, t: f64) -> f64 {
        self.schedule.value(t)
    }

    /// `out = J_idx ψ` at time `t`.
    pub fn apply_jump(&self, idx: usize, t: f64, psi: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        self.add_jump(idx, self.pump(t), Complex64::new(1.0, 0.0), psi, out);
    }

    fn add_jump(&self, idx: usize, s: f64, scale: Complex64, psi: &[Complex64], out: &mut [Complex64]) {
        if idx < self.pumped.len() {
            let p = &self.pumped[idx];
            let g = scale * p.gamma.sqrt();
            self.space.add_lower_pair(p.modes.0, p.modes.1, g, psi, out);
            let b = g * p.shift(s);
            for (o, a) in out.iter_mut().zip(psi) {
                *o -= b * a;
            }
        } else {
            let l = &self.linear[idx - self.pumped.len()];
            let g = scale * l.gamma.sqrt();
            for &(k, c) in &l.coeffs {
                self.space.add_lower(k, g * c, psi, out);
            }
        }
    }

    fn add_jump_dagger(&self, idx: usize, s: f64, scale: Complex64, psi: &[Complex64], out: &mut [Complex64]) {
        if idx < self.pumped.len() {
            let p = &self.pumped[idx];
            let g = scale * p.gamma.sqrt();
            self.space.add_raise_pair(p.modes.0, p.modes.1, g, psi, out);
            let b = g * p.shift(s);
            for (o, a) in out.iter_mut().zip(psi) {
                *o -= b * a;
            }
        } else {
            let l = &self.linear[idx - self.pumped.len()];
            let g = scale * l.gamma.sqrt();
            for &(k, c) in &l.coeffs {
                self.space.add_raise(k, g * c.conj(), psi, out);
            }
        }
    }

    /// `out = −½ Σ_k J_k†J_k ψ` at pump strength `s`; `scratch` has length `dim`.
    pub fn apply_generator(&self, s: f64, psi: &[Complex64], out: &mut [Complex64], scratch: &mut [Complex64]) {
        out.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        let one = Complex64::new(1.0, 0.0);
        for idx in 0..self.n_jumps() {
            scratch.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
            self.add_jump(idx, s, one, psi, scratch);
            self.add_jump_dagger(idx, s, Complex64::new(-0.5, 0.0), scratch, out);
        }
    }

    /// Sparse form of the no-jump generator, `G(s) = G₀ + s G₁ + c₂ s²`.
    pub fn sparse_generator(&self) -> SparseGenerator {
        let sp = &self.space;
        let m = sp.n_modes();
        // Hopping Σ_ch Γ Σ_kl c_k* c_l a_k† a_l, merged across channels.
        let mut hop = vec![vec![Complex64::new(0.0, 0.0); m]; m];
        for l in &self.linear {
            for &(k, ck) in &l.coeffs {
                for &(q, cq) in &l.coeffs {
                    hop[k][q] += l.gamma * ck.conj() * cq;
                }
            }
        }
        let zero = Complex64::new(0.0, 0.0);
        let blocks = [0, 1].map(|parity| {
            let range = sp.sector(parity);
            let start = range.start;
            let mut rows: Vec<Vec<(u32, Complex64, f64)>> = vec![Vec::new(); range.len()];
            for j in range {
                let col = (j - start) as u32;
                let n = sp.occupation(j);
                let mut diag = 0.0;
                for p in &self.pumped {
                    let (a, b) = p.modes;
                    let (na, nb) = (n[a] as f64, n[b] as f64);
                    diag += p.gamma * if a == b { na * (na - 1.0) } else { na * nb };
                    // −(A + A†), with A = a_a a_b.
                    if let Some(x) = sp.lowered(b, j) {
                        if let Some(h) = sp.lowered(a, x) {
                            let f = sp.sqrt(n[b] as usize) * sp.sqrt(sp.occupation(x)[a] as usize);
                            rows[h - start].push((col, zero, -f));
                        }
                    }
                    if let Some(x) = sp.raised(b, j) {
                        if let Some(h) = sp.raised(a, x) {
                            let f = sp.sqrt(n[b] as usize + 1) * sp.sqrt(sp.occupation(x)[a] as usize + 1);
                            rows[h - start].push((col, zero, -f));
                        }
                    }
                }
                rows[j - start].push((col, Complex64::new(-0.5 * diag, 0.0), 0.0));
                for (k, row) in hop.iter().enumerate() {
                    for (q, &w) in row.iter().enumerate() {
                        if w == zero {
                            continue;
                        }
                        let Some(x) = sp.lowered(q, j) else { continue };
                        let Some(h) = sp.raised(k, x) else { continue };
                        let f = sp.sqrt(n[q] as usize) * sp.sqrt(sp.occupation(x)[k] as usize + 1);
                        rows[h - start].push((col, -0.5 * w * f, 0.0));
                    }
                }
            }
            Block::new(start, rows)
        });
        let c2 = -2.0 * self.pumped.iter().map(|p| 1.0 / p.gamma).sum::<f64>();
        SparseGenerator { blocks, c2 }
    }

    /// `‖J_k ψ‖²` for every jump.
    pub fn jump_weights(&self, t: f64, psi: &[Complex64], scratch: &mut [Complex64]) -> Vec<f64> {
        (0..self.n_jumps())
            .map(|idx| {
                self.apply_jump(idx, t, psi, scratch);
                crate::fock::norm_sqr(scratch)
            })
            .collect()
    }
}

/// One parity block of the generator: rows of the sector, columns relative
/// to the sector start, with the pump-independent and pump-linear parts on
/// a shared pattern.
#[derive(Debug, Clone)]
struct Block {
    start: usize,
    ptr: Vec<usize>,
    cols: Vec<u32>,
    v0: Vec<Complex64>,
    v1: Vec<f64>,
    diag: Vec<usize>,
}

impl Block {
    fn new(start: usize, rows: Vec<Vec<(u32, Complex64, f64)>>) -> Self {
        let mut ptr = vec![0];
        let (mut cols, mut v0, mut v1, mut diag) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|e| e.0);
            let begin = cols.len();
            let mut d = None;
            for (c, a, b) in row {
                if cols.len() > begin && *cols.last().unwrap() == c {
                    *v0.last_mut().unwrap() += a;
                    *v1.last_mut().unwrap() += b;
                } else {
                    cols.push(c);
                    v0.push(a);
                    v1.push(b);
                }
                if c as usize == r {
                    d = Some(cols.len() - 1);
                }
            }
            diag.push(d.expect("diagonal entry present"));
            ptr.push(cols.len());
        }
        Self { start, ptr, cols, v0, v1, diag }
    }
}

/// No-jump generator `G(s) = G₀ + s G₁ + c₂ s²` in sparse form. Every term
/// keeps the total photon parity, so it is stored as two diagonal blocks.
#[derive(Debug, Clone)]
pub struct SparseGenerator {
    blocks: [Block; 2],
    c2: f64,
}

/// [`SparseGenerator`] at a fixed pump value, restricted to one sector.
#[derive(Debug, Clone)]
pub struct FrozenGenerator<'a> {
    block: &'a Block,
    vals: Vec<Complex64>,
}

impl SparseGenerator {
    pub fn nnz(&self) -> usize {
        self.blocks.iter().map(|b| b.cols.len()).sum()
    }

    /// Values of `G(s)` on the block of `parity`.
    pub fn freeze(&self, s: f64, parity: usize) -> FrozenGenerator<'_> {
        self.freeze_affine(s, s * s, parity)
    }

    /// `G₀ + lin·G₁ + c₂·quad`: a weighted sum of `G` at several pump values
    /// has this form with `lin`, `quad` the weighted sums of `s` and `s²`.
    pub fn freeze_affine(&self, lin: f64, quad: f64, parity: usize) -> FrozenGenerator<'_> {
        let block = &self.blocks[parity % 2];
        let mut vals: Vec<Complex64> = block.v0.iter().zip(&block.v1).map(|(a, b)| a + lin * b).collect();
        for &d in &block.diag {
            vals[d] += self.c2 * quad;
        }
        FrozenGenerator { block, vals }
    }

    /// `out = G(s) x` on the rows and columns in `range`, which must be a
    /// parity sector or the whole space; `x` and `out` cover `range`.
    pub fn apply(&self, s: f64, range: std::ops::Range<usize>, x: &[Complex64], out: &mut [Complex64]) {
        for parity in 0..2 {
            let b = &self.blocks[parity];
            let len = b.ptr.len() - 1;
            if range.start <= b.start && b.start + len <= range.end {
                let lo = b.start - range.start;
                self.freeze(s, parity).apply(&x[lo..lo + len], &mut out[lo..lo + len]);
            }
        }
    }
}

impl FrozenGenerator<'_> {
    pub fn start(&self) -> usize {
        self.block.start
    }

    pub fn len(&self) -> usize {
        self.block.ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `out = G x` with `x`, `out` over this sector.
    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        let b = self.block;
        for (r, o) in out.iter_mut().enumerate() {
            let (lo, hi) = (b.ptr[r], b.ptr[r + 1]);
            let mut acc = Complex64::new(0.0, 0.0);
            for (&c, v) in b.cols[lo..hi].iter().zip(&self.vals[lo..hi]) {
                acc += v * x[c as usize];
            }
            *o = acc;
        }
    }
}
