//! Density-matrix reference propagator for one or two modes.
//!
//! Uses its own Kronecker-product basis (`n₀·d₁ + n₁`) and the unshifted
//! pump Hamiltonian `H = −iS(a_i†a_j† − a_i a_j)` with jumps `√Γ a_i a_j`,
//! so it shares no operator code with the trajectory engine.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{QuantumError, Result};
use crate::network::FockNetwork;

type Mat = DMatrix<Complex64>;

/// Triplet-list sparse matrix.
#[derive(Debug, Clone)]
struct Sparse {
    entries: Vec<(usize, usize, Complex64)>,
}

impl Sparse {
    fn from_dense(m: &Mat) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v.norm() > 1e-15 {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }

    /// `out += self · x`.
    fn mul_add(&self, x: &Mat, out: &mut Mat) {
        let n = x.ncols();
        for &(i, j, v) in &self.entries {
            for c in 0..n {
                out[(i, c)] += v * x[(j, c)];
            }
        }
    }

    /// `out += x · self†`.
    fn mul_adjoint_right_add(&self, x: &Mat, out: &mut Mat) {
        let n = x.nrows();
        for &(i, j, v) in &self.entries {
            let vc = v.conj();
            for r in 0..n {
                out[(r, i)] += x[(r, j)] * vc;
            }
        }
    }
}

fn ladder(d: usize) -> Mat {
    let mut a = Mat::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Dense Lindblad model built from the same physical description as a
/// [`FockNetwork`].
#[derive(Debug, Clone)]
pub struct DenseModel {
    cutoffs: Vec<usize>,
    /// `−iH` per unit pump.
    k_pump: Sparse,
    /// `−½ Σ L†L`.
    k_loss: Sparse,
    jumps: Vec<Sparse>,
    number: Vec<Vec<f64>>,
    dim: usize,
}

/// Largest density matrix side the oracle accepts.
pub const MAX_DENSE_DIM: usize = 400;

impl DenseModel {
    pub fn from_network(net: &FockNetwork) -> Result<Self> {
        let space = net.space();
        let m = space.n_modes();
        if m > 2 {
            return Err(QuantumError::TooLarge(m));
        }
        if space.cap().is_some() {
            return Err(QuantumError::InvalidSpace("dense oracle needs a plain product basis".into()));
        }
        let cutoffs = space.cutoffs().to_vec();
        let dim: usize = cutoffs.iter().product();
        if dim > MAX_DENSE_DIM {
            return Err(QuantumError::TooLarge(dim));
        }
        let eye = |d: usize| Mat::identity(d, d);
        let a: Vec<Mat> = (0..m)
            .map(|k| {
                let mut op = Mat::identity(1, 1);
                for (q, &d) in cutoffs.iter().enumerate() {
                    let f = if q == k { ladder(d) } else { eye(d) };
                    op = op.kronecker(&f);
                }
                op
            })
            .collect();
        let mut h1 = Mat::zeros(dim, dim);
        let mut ldl = Mat::zeros(dim, dim);
        let mut jumps = Vec::new();
        for p in net.pumped() {
            let pair = &a[p.modes.0] * &a[p.modes.1];
            // H per unit S: −i(A† − A).
            h1 += (pair.adjoint() - &pair) * Complex64::new(0.0, -1.0);
            let l = pair * Complex64::new(p.gamma.sqrt(), 0.0);
            ldl += l.adjoint() * &l;
            jumps.push(Sparse::from_dense(&l));
        }
        for lin in net.linear() {
            let mut l = Mat::zeros(dim, dim);
            for &(k, c) in &lin.coeffs {
                l += &a[k] * c;
            }
            l *= Complex64::new(lin.gamma.sqrt(), 0.0);
            ldl += l.adjoint() * &l;
            jumps.push(Sparse::from_dense(&l));
        }
        let k_pump = Sparse::from_dense(&(h1 * Complex64::new(0.0, -1.0)));
        let k_loss = Sparse::from_dense(&(ldl * Complex64::new(-0.5, 0.0)));
        let number = (0..m).map(|k| (0..dim).map(|i| (&a[k].adjoint() * &a[k])[(i, i)].re).collect()).collect();
        Ok(Self { cutoffs, k_pump, k_loss, jumps, number, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index of an occupation tuple in this model's basis.
    pub fn index_of(&self, occupation: &[usize]) -> usize {
        occupation.iter().zip(&self.cutoffs).fold(0, |acc, (&n, &d)| acc * d + n)
    }

    pub fn vacuum(&self) -> Mat {
        let mut rho = Mat::zeros(self.dim, self.dim);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        rho
    }

    /// `dρ/dt = Kρ + ρK† + Σ LρL†`, `K = −iH − ½ΣL†L`. Both products with
    /// `K` are formed explicitly; taking `ρK† = (Kρ)†` would let roundoff in
    /// the anti-Hermitian part grow.
    fn derivative(&self, s: f64, rho: &Mat) -> Mat {
        let mut out = Mat::zeros(self.dim, self.dim);
        self.k_loss.mul_add(rho, &mut out);
        self.k_loss.mul_adjoint_right_add(rho, &mut out);
        let mut xp = Mat::zeros(self.dim, self.dim);
        self.k_pump.mul_add(rho, &mut xp);
        self.k_pump.mul_adjoint_right_add(rho, &mut xp);
        out += xp * Complex64::new(s, 0.0);
        for l in &self.jumps {
            let mut lr = Mat::zeros(self.dim, self.dim);
            l.mul_add(rho, &mut lr);
            l.mul_adjoint_right_add(&lr, &mut out);
        }
        out
    }

    /// Fixed-step RK4 from `rho` at `t0` to `t1` under `pump(t)`. Returns
    /// the largest trace deviation seen.
    pub fn propagate<F: Fn(f64) -> f64>(&self, rho: &mut Mat, pump: F, t0: f64, t1: f64, dt: f64) -> Result<f64> {
        if !(dt > 0.0 && t1 >= t0) {
            return Err(QuantumError::InvalidParameter("bad propagation interval".into()));
        }
        let steps = ((t1 - t0) / dt).ceil().max(1.0) as usize;
        let h = (t1 - t0) / steps as f64;
        let mut worst: f64 = 0.0;
        for k in 0..steps {
            let t = t0 + k as f64 * h;
            let k1 = self.derivative(pump(t), rho);
            let k2 = self.derivative(pump(t + 0.5 * h), &(&*rho + &k1 * Complex64::new(0.5 * h, 0.0)));
            let k3 = self.derivative(pump(t + 0.5 * h), &(&*rho + &k2 * Complex64::new(0.5 * h, 0.0)));
            let k4 = self.derivative(pump(t + h), &(&*rho + &k3 * Complex64::new(h, 0.0)));
            *rho += (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(h / 6.0, 0.0);
            worst = worst.max((rho.trace() - 1.0).norm());
        }
        Ok(worst)
    }

    pub fn mean_photons(&self, rho: &Mat, k: usize) -> f64 {
        self.number[k].iter().enumerate().map(|(i, n)| n * rho[(i, i)].re).sum()
    }

    /// `Σ_k ⟨e_k|ρ|e_k⟩` for an orthonormal set given in this basis.
    pub fn projection(&self, rho: &Mat, basis: &[Vec<Complex64>]) -> f64 {
        basis
            .iter()
            .map(|e| {
                let v = nalgebra::DVector::from_column_slice(e);
                (v.adjoint() * rho * &v)[(0, 0)].re
            })
            .sum()
    }

    /// Truncated product coherent state in this basis (not renormalized).
    pub fn coherent(&self, alphas: &[Complex64]) -> Vec<Complex64> {
        let single = |al: Complex64, d: usize| {
            let mut v = Vec::with_capacity(d);
            let mut x = Complex64::new((-0.5 * al.norm_sqr()).exp(), 0.0);
            for n in 0..d {
                v.push(x);
                x = x * al / ((n + 1) as f64).sqrt();
            }
            v
        };
        let mut out = vec![Complex64::new(1.0, 0.0)];
        for (&al, &d) in alphas.iter().zip(&self.cutoffs) {
            let f = single(al, d);
            out = out.iter().flat_map(|&x| f.iter().map(move |&y| x * y)).collect();
        }
        out
    }
}

/// Gram–Schmidt orthonormal basis of the span of `vectors`.
pub fn orthonormalize(vectors: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for e in &out {
            let p = crate::fock::inner(e, &w);
            for (x, y) in w.iter_mut().zip(e) {
                *x -= p * y;
            }
        }
        if crate::fock::normalize(&mut w) > 1e-12 {
            out.push(w);
        }
    }
    out
}
