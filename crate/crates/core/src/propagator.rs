//! Time evolution of the chain amplitudes under the bath memory kernel.
//!
//! i dα_n/dt = Σ_m (H_s)_nm α_m − i g² Σ_m i^{d|n−m|} ∫₀^t K_{|n−m|}(t−s) α_m(s) ds,
//! K_Δ(τ) = J_Δ(τ)^d.
//!
//! The memory integral is a trapezoid sum over the stored history. Time stepping
//! is Heun's predictor-corrector applied in the interaction picture of H_s, so the
//! closed chain is propagated exactly by U = exp(−i H_s dt) and only the memory
//! term is discretised.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::green::special::bessel_j_seq;
use crate::model::{build_system_hamiltonian, closed_spectrum};

/// Memory kernel values K_Δ(i dt) for Δ = 0..N_s−1 and i = 0..=steps.
#[derive(Debug, Clone)]
pub struct KernelTable {
    /// `k[Δ][i]`
    pub k: Vec<Vec<f64>>,
    /// i^{dΔ}
    pub phase: Vec<Complex64>,
    pub dt: f64,
    pub d: usize,
    pub steps: usize,
}

impl KernelTable {
    pub fn value(&self, delta: usize, i: usize) -> f64 {
        self.k[delta][i]
    }
}

pub(crate) fn ipow(p: usize) -> Complex64 {
    match p % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

pub fn build_kernel_table(cfg: &ModelConfig) -> KernelTable {
    kernel_table(cfg.n_s, cfg.d, cfg.dt, cfg.steps())
}

pub fn kernel_table(n_s: usize, d: usize, dt: f64, steps: usize) -> KernelTable {
    let nmax = n_s.saturating_sub(1);
    let cols: Vec<Vec<f64>> = (0..=steps).into_par_iter().map(|i| bessel_j_seq(nmax, i as f64 * dt)).collect();
    let mut k = vec![vec![0.0; steps + 1]; nmax + 1];
    for (i, col) in cols.iter().enumerate() {
        for (delta, row) in k.iter_mut().enumerate() {
            row[i] = col[delta].powi(d as i32);
        }
    }
    let phase = (0..=nmax).map(|delta| ipow(d * delta)).collect();
    KernelTable { k, phase, dt, d, steps }
}

/// Initial chain state.
#[derive(Debug, Clone)]
pub enum Initial {
    /// Excitation on one atom, 1-based.
    Site(usize),
    Vector(DVector<Complex64>),
}

impl Initial {
    pub fn vector(&self, n_s: usize) -> Result<DVector<Complex64>> {
        match self {
            Initial::Site(n0) => {
                if *n0 < 1 || *n0 > n_s {
                    return Err(Error::Config(format!("initial site {n0} outside 1..={n_s}")));
                }
                let mut v = DVector::zeros(n_s);
                v[n0 - 1] = Complex64::new(1.0, 0.0);
                Ok(v)
            }
            Initial::Vector(v) => {
                if v.len() != n_s {
                    return Err(Error::Config(format!("initial vector has length {}, expected {n_s}", v.len())));
                }
                if (v.norm() - 1.0).abs() > 1e-10 {
                    return Err(Error::Config(format!("initial vector norm {} is not 1", v.norm())));
                }
                Ok(v.clone())
            }
        }
    }
}

/// Chain amplitudes on a uniform time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub n_s: usize,
    /// Row-major (steps + 1) × N_s.
    pub amps: Vec<Complex64>,
    pub cfg: ModelConfig,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.cfg.dt
    }

    /// α(t_i) as a slice over sites.
    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.amps[i * self.n_s..(i + 1) * self.n_s]
    }

    /// α_n(t_i) with 1-based `n`.
    pub fn amp(&self, i: usize, n: usize) -> Complex64 {
        self.amps[i * self.n_s + n - 1]
    }

    /// History of one site (1-based) as a vector over time.
    pub fn site(&self, n: usize) -> Vec<Complex64> {
        (0..self.len()).map(|i| self.amp(i, n)).collect()
    }

    /// Index of the grid time closest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        ((t / self.dt()).round() as usize).min(self.len() - 1)
    }
}

/// Σ_n |α_n(t_i)|² per step.
pub fn system_norm(traj: &Trajectory) -> Vec<f64> {
    (0..traj.len()).map(|i| traj.row(i).iter().map(|a| a.norm_sqr()).sum()).collect()
}

/// Σ_j a_j x_j and Σ_j a_j y_j with a fixed summation order.
#[inline]
fn dot2(a: &[f64], x: &[f64], y: &[f64]) -> (f64, f64) {
    const L: usize = 8;
    let n = a.len();
    let (a, x, y) = (&a[..n], &x[..n], &y[..n]);
    let mut sx = [0.0f64; L];
    let mut sy = [0.0f64; L];
    let chunks = n / L;
    for c in 0..chunks {
        let o = c * L;
        let (ac, xc, yc) = (&a[o..o + L], &x[o..o + L], &y[o..o + L]);
        for l in 0..L {
            sx[l] += ac[l] * xc[l];
            sy[l] += ac[l] * yc[l];
        }
    }
    let mut rx = 0.0;
    let mut ry = 0.0;
    for j in chunks * L..n {
        rx += a[j] * x[j];
        ry += a[j] * y[j];
    }
    let fold = |s: [f64; L]| ((s[0] + s[4]) + (s[1] + s[5])) + ((s[2] + s[6]) + (s[3] + s[7]));
    (fold(sx) + rx, fold(sy) + ry)
}

/// exp(−i H dt) from the eigendecomposition of the real symmetric H.
fn closed_propagator(h: &DMatrix<f64>, dt: f64) -> Result<DMatrix<Complex64>> {
    let s = closed_spectrum(h)?;
    let n = h.nrows();
    let mut u = DMatrix::zeros(n, n);
    for q in 0..n {
        let ph = Complex64::from_polar(1.0, -s.energies[q] * dt);
        for i in 0..n {
            let vi = s.states[(i, q)];
            for j in 0..n {
                u[(i, j)] += ph * (vi * s.states[(j, q)]);
            }
        }
    }
    Ok(u)
}

pub fn propagate(cfg: &ModelConfig, init: &Initial) -> Result<Trajectory> {
    let kernel = build_kernel_table(cfg);
    propagate_with(cfg, init, &kernel)
}

/// Evolves `init` to `cfg.t_max` using a prebuilt kernel table.
pub fn propagate_with(cfg: &ModelConfig, init: &Initial, kernel: &KernelTable) -> Result<Trajectory> {
    cfg.validate()?;
    let n = cfg.n_s;
    let steps = cfg.steps();
    let dt = cfg.dt;
    if kernel.steps < steps || kernel.k.len() < n || kernel.d != cfg.d || kernel.dt != dt {
        return Err(Error::Config("kernel table does not cover this configuration".into()));
    }
    let a0 = init.vector(n)?;
    let u = closed_propagator(&build_system_hamiltonian(cfg), dt)?;
    let g2 = cfg.g * cfg.g;
    let tk = kernel.steps;

    // Reversed kernel rows: krev[Δ][tk − i] = K_Δ(i dt), so the history sum is a
    // contiguous dot product against the stored amplitudes.
    let krev: Vec<Vec<f64>> = kernel.k.iter().take(n).map(|row| row.iter().rev().copied().collect()).collect();

    let mut hre = vec![vec![0.0; steps + 1]; n];
    let mut him = vec![vec![0.0; steps + 1]; n];
    let mut amps = Vec::with_capacity((steps + 1) * n);
    for m in 0..n {
        hre[m][0] = a0[m].re;
        him[m][0] = a0[m].im;
    }
    amps.extend(a0.iter().copied());

    let mut cur = a0.clone();
    let mut force = DVector::<Complex64>::zeros(n);
    // Only (Δ, m) combinations with a partner site n = m ± Δ inside the chain contribute.
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|delta| (0..n).filter(move |&m| m >= delta || m + delta < n).map(move |m| (delta, m))).collect();
    let half = Complex64::new(0.5 * dt, 0.0);

    for k in 0..steps {
        // Past part of the memory integral at t_{k+1}: dt Σ_{j=0}^{k} K(t_{k+1} − t_j) α(t_j)
        // with half weight on j = 0. The endpoint j = k+1 is added below.
        let past = if g2 != 0.0 {
            let lo = tk - (k + 1);
            let hi = lo + k + 1;
            let dots: Vec<Complex64> = pairs
                .par_iter()
                .map(|&(delta, m)| {
                    let kr = &krev[delta][lo..hi];
                    let (sr, si) = dot2(kr, &hre[m][..=k], &him[m][..=k]);
                    let first = 0.5 * kr[0];
                    Complex64::new(dt * (sr - first * hre[m][0]), dt * (si - first * him[m][0]))
                })
                .collect();
            let mut sums = vec![Complex64::new(0.0, 0.0); n * n];
            for (&(delta, m), v) in pairs.iter().zip(&dots) {
                sums[delta * n + m] = *v;
            }
            let mut p = DVector::<Complex64>::zeros(n);
            for nn in 0..n {
                let mut acc = sums[nn];
                for delta in 1..n {
                    let mut s = Complex64::new(0.0, 0.0);
                    if nn >= delta {
                        s += sums[delta * n + nn - delta];
                    }
                    if nn + delta < n {
                        s += sums[delta * n + nn + delta];
                    }
                    acc += kernel.phase[delta] * s;
                }
                p[nn] = acc;
            }
            p
        } else {
            DVector::zeros(n)
        };

        let predicted = &u * (&cur + &force * Complex64::new(dt, 0.0));
        let f_pred = (&past + &predicted * half) * Complex64::new(-g2, 0.0);
        let next = &u * (&cur + &force * half) + &f_pred * half;
        if next.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Numerics(format!("non-finite amplitude at step {} (t = {})", k + 1, (k + 1) as f64 * dt)));
        }
        force = (&past + &next * half) * Complex64::new(-g2, 0.0);
        for m in 0..n {
            hre[m][k + 1] = next[m].re;
            him[m][k + 1] = next[m].im;
        }
        amps.extend(next.iter().copied());
        cur = next;
    }

    let times = (0..=steps).map(|i| i as f64 * dt).collect();
    Ok(Trajectory { times, n_s: n, amps, cfg: cfg.clone() })
}

/// Final-state norms at dt and dt/2; flagged when they differ by more than 1e-4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtCheck {
    pub norm_dt: f64,
    pub norm_half: f64,
    pub flagged: bool,
}

pub fn dt_check(cfg: &ModelConfig, init: &Initial) -> Result<DtCheck> {
    let a = propagate(cfg, init)?;
    let half = ModelConfig { dt: cfg.dt / 2.0, ..cfg.clone() };
    let b = propagate(&half, init)?;
    let na = *system_norm(&a).last().unwrap();
    let nb = *system_norm(&b).last().unwrap();
    Ok(DtCheck { norm_dt: na, norm_half: nb, flagged: (na - nb).abs() > 1e-4 })
}
