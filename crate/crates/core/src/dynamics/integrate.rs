use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::OscillatorNetwork;
use super::params::{EngineParams, PumpSchedule};
use crate::error::{Error, Result};

/// Mode amplitudes at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub time: f64,
    pub amplitudes: Vec<Complex64>,
}

impl NetworkState {
    pub fn new(time: f64, amplitudes: Vec<Complex64>) -> Self {
        Self { time, amplitudes }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Method {
    /// Dormand–Prince 5(4) with error control.
    Adaptive { rtol: f64, atol: f64 },
    /// Classical RK4 with a fixed step.
    FixedRk4 { dt: f64 },
}

impl Default for Method {
    fn default() -> Self {
        let t = Tolerances::default();
        Method::Adaptive { rtol: t.rtol, atol: t.atol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub method: Method,
    /// Spacing of recorded samples; `None` keeps only the endpoints.
    pub sample_interval: Option<f64>,
    pub max_steps: usize,
    /// Amplitudes above this magnitude count as divergence.
    pub blowup: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { method: Method::default(), sample_interval: None, max_steps: 5_000_000, blowup: 1e8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<NetworkState>,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &NetworkState {
        self.samples.last().expect("trajectory always holds the initial sample")
    }

    /// CSV with one row per sample: `time,<label>_re,<label>_im,...`.
    pub fn write_csv<W: Write>(&self, labels: &[&str], mut w: W) -> std::io::Result<()> {
        write!(w, "time")?;
        for l in labels {
            write!(w, ",{l}_re,{l}_im")?;
        }
        writeln!(w)?;
        for s in &self.samples {
            write!(w, "{:.10e}", s.time)?;
            for a in &s.amplitudes {
                write!(w, ",{:.12e},{:.12e}", a.re, a.im)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Amplitudes drawn uniformly from a disk of radius `radius`.
pub fn random_initial_state<R: Rng + ?Sized>(n_modes: usize, radius: f64, rng: &mut R) -> Vec<Complex64> {
    (0..n_modes)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let th = std::f64::consts::TAU * rng.random::<f64>();
            Complex64::from_polar(r, th)
        })
        .collect()
}

/// Integrates the network from `initial.time` to `t_end` under `schedule`.
pub fn integrate(
    network: &OscillatorNetwork,
    params: &EngineParams,
    schedule: &PumpSchedule,
    initial: &NetworkState,
    t_end: f64,
    options: &IntegrateOptions,
) -> Result<Trajectory> {
    params.validate()?;
    schedule.validate()?;
    if initial.amplitudes.len() != network.n_modes() {
        return Err(Error::DimensionMismatch { expected: network.n_modes(), got: initial.amplitudes.len() });
    }
    if !(t_end.is_finite() && t_end >= initial.time) {
        return Err(Error::InvalidParameter(format!("t_end {t_end} precedes start {}", initial.time)));
    }
    let f = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        network.rhs_into(params, schedule.value(t), y, dy);
    };
    let mut stops: Vec<f64> =
        schedule.breakpoints().into_iter().filter(|&b| b > initial.time && b < t_end).collect();
    if let Some(dt) = options.sample_interval {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("sample interval {dt}")));
        }
        let mut k = 1.0;
        while initial.time + k * dt < t_end - 1e-12 * t_end.abs().max(1.0) {
            stops.push(initial.time + k * dt);
            k += 1.0;
        }
    }
    stops.push(t_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    let record_all = options.sample_interval.is_some();

    let mut samples = vec![initial.clone()];
    let mut y = initial.amplitudes.clone();
    let mut t = initial.time;
    let mut steps = 0usize;
    let mut solver = Dopri5::new(y.len());
    let mut h = None;
    for &stop in &stops {
        if stop <= t {
            continue;
        }
        match options.method {
            Method::Adaptive { rtol, atol } => {
                let tol = Tolerances { rtol, atol };
                h = Some(solver.run(&f, &mut t, &mut y, stop, tol, h, options, &mut steps)?);
            }
            Method::FixedRk4 { dt } => rk4_run(&f, &mut t, &mut y, stop, dt, options, &mut steps)?,
        }
        if record_all || stop == t_end {
            samples.push(NetworkState::new(t, y.clone()));
        }
    }
    if t_end == initial.time {
        samples.push(initial.clone());
    }
    Ok(Trajectory { samples, steps })
}

fn check_state(t: f64, y: &[Complex64], blowup: f64) -> Result<()> {
    for a in y {
        if !a.re.is_finite() || !a.im.is_finite() {
            return Err(Error::Divergence { time: t, reason: "non-finite amplitude".into() });
        }
        if a.norm() > blowup {
            return Err(Error::Divergence { time: t, reason: format!("amplitude {:.3e} exceeds bound", a.norm()) });
        }
    }
    Ok(())
}

fn axpy(out: &mut [Complex64], y: &[Complex64], h: f64, terms: &[(f64, &[Complex64])]) {
    for i in 0..out.len() {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

fn rk4_run<F>(
    f: &F,
    t: &mut f64,
    y: &mut Vec<Complex64>,
    stop: f64,
    dt: f64,
    options: &IntegrateOptions,
    steps: &mut usize,
) -> Result<()>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("RK4 step {dt}")));
    }
    let n = y.len();
    let z = Complex64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![z; n], vec![z; n], vec![z; n], vec![z; n], vec![z; n]);
    while *t < stop {
        let h = dt.min(stop - *t);
        f(*t, y, &mut k1);
        axpy(&mut tmp, y, h, &[(0.5, &k1)]);
        f(*t + 0.5 * h, &tmp, &mut k2);
        axpy(&mut tmp, y, h, &[(0.5, &k2)]);
        f(*t + 0.5 * h, &tmp, &mut k3);
        axpy(&mut tmp, y, h, &[(1.0, &k3)]);
        f(*t + h, &tmp, &mut k4);
        axpy(&mut tmp, y, h, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]);
        std::mem::swap(y, &mut tmp);
        *t = if stop - *t <= dt { stop } else { *t + h };
        *steps += 1;
        check_state(*t, y, options.blowup)?;
        if *steps > options.max_steps {
            return Err(Error::Divergence { time: *t, reason: "step budget exhausted".into() });
        }
    }
    Ok(())
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Dopri5 {
    k: [Vec<Complex64>; 7],
    tmp: Vec<Complex64>,
    y_new: Vec<Complex64>,
    fsal_valid: bool,
}

impl Dopri5 {
    fn new(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self {
            k: [z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z.clone()],
            tmp: z.clone(),
            y_new: z,
            fsal_valid: false,
        }
    }

    fn initial_step<F>(&mut self, f: &F, t: f64, y: &[Complex64], tol: Tolerances) -> f64
    where
        F: Fn(f64, &[Complex64], &mut [Complex64]),
    {
        let n = y.len().max(1) as f64;
        let sc = |a: Complex64| tol.atol + tol.rtol * a.norm();
        let d0 = (y.iter().map(|a| (a.norm() / sc(*a)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (self.k[0].iter().zip(y).map(|(d, a)| (d.norm() / sc(*a)).powi(2)).sum::<f64>() / n).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        for i in 0..y.len() {
            self.tmp[i] = y[i] + h0 * self.k[0][i];
        }
        f(t + h0, &self.tmp, &mut self.k[1]);
        let d2 = (self.k[1]
            .iter()
            .zip(&self.k[0])
            .zip(y)
            .map(|((a, b), yy)| ((a - b).norm() / sc(*yy)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        (100.0 * h0).min(h1)
    }

    #[allow(clippy::too_many_arguments)]
    fn run<F>(
        &mut self,
        f: &F,
        t: &mut f64,
        y: &mut Vec<Complex64>,
        stop: f64,
        tol: Tolerances,
        h_prev: Option<f64>,
        options: &IntegrateOptions,
        steps: &mut usize,
    ) -> Result<f64>
    where
        F: Fn(f64, &[Complex64], &mut [Complex64]),
    {
        if !(tol.rtol > 0.0 && tol.atol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerances rtol={} atol={}", tol.rtol, tol.atol)));
        }
        let n = y.len();
        // Pump is only piecewise smooth, so refresh the first stage at each stop.
        f(*t, y, &mut self.k[0]);
        self.fsal_valid = true;
        let mut h = match h_prev {
            Some(h) => h,
            None => self.initial_step(f, *t, y, tol),
        };
        let h_min = 1e-14 * stop.abs().max(1.0);
        let mut last_accepted_h = h;
        while *t < stop {
            let mut last = false;
            if *t + h >= stop || stop - (*t + h) < h_min {
                h = stop - *t;
                last = true;
            }
            if h < h_min && !last {
                return Err(Error::Divergence { time: *t, reason: format!("step size {h:e} underflow") });
            }
            let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
            let tt = *t;
            for i in 0..n {
                self.tmp[i] = y[i] + h * A21 * k1[i];
            }
            f(tt + C2 * h, &self.tmp, k2);
            for i in 0..n {
                self.tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(tt + C3 * h, &self.tmp, k3);
            for i in 0..n {
                self.tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(tt + C4 * h, &self.tmp, k4);
            for i in 0..n {
                self.tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(tt + C5 * h, &self.tmp, k5);
            for i in 0..n {
                self.tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(tt + h, &self.tmp, k6);
            for i in 0..n {
                self.y_new[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            f(tt + h, &self.y_new, k7);
            let mut err = 0.0;
            for i in 0..n {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = tol.atol + tol.rtol * y[i].norm().max(self.y_new[i].norm());
                err += (e.norm() / sc).powi(2);
            }
            let err = (err / n.max(1) as f64).sqrt();
            *steps += 1;
            if *steps > options.max_steps {
                return Err(Error::Divergence { time: *t, reason: "step budget exhausted".into() });
            }
            if !err.is_finite() {
                h *= 0.2;
                continue;
            }
            if err <= 1.0 {
                std::mem::swap(y, &mut self.y_new);
                self.k.swap(0, 6);
                *t = if last { stop } else { tt + h };
                check_state(*t, y, options.blowup)?;
                if !last {
                    last_accepted_h = h;
                }
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h *= fac;
            } else {
                h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
        }
        Ok(last_accepted_h)
    }
}
