//! Exact reference dynamics on a finite periodic bath.
//!
//! The chain and every bath site are kept explicitly, so the single-excitation
//! problem is a sparse real symmetric matrix of size N_s + N_b^d, propagated by a
//! Chebyshev expansion of exp(−iHt).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::green::special::bessel_j_seq;
use crate::model::{build_system_hamiltonian, center_offset};
use crate::spectrum::find_all_bound_states;

pub const MAX_BATH_SITES: usize = 200_000;

/// Sparse symmetric Hamiltonian in CSR form.
///
/// Index 0..N_s are the atoms; bath sites follow, row-major over [−h, h]^d.
#[derive(Debug, Clone)]
pub struct FullHamiltonian {
    pub n_s: usize,
    pub n_b: usize,
    pub d: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl FullHamiltonian {
    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// Flat index of the bath site `r`, with periodic wraparound.
    pub fn bath_index(&self, r: &[i64]) -> usize {
        let nb = self.n_b as i64;
        let h = (nb - 1) / 2;
        let mut i = 0usize;
        for &x in r {
            i = i * self.n_b + (x + h).rem_euclid(nb) as usize;
        }
        self.n_s + i
    }

    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (i, out) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.cols[p]] * self.vals[p];
            }
            *out = acc;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        (self.row_ptr[i]..self.row_ptr[i + 1]).find(|&p| self.cols[p] == j).map(|p| self.vals[p]).unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[p])] += self.vals[p];
            }
        }
        m
    }

    /// Gershgorin interval containing the spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim() {
            let mut diag = 0.0;
            let mut off = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[p] == i {
                    diag += self.vals[p];
                } else {
                    off += self.vals[p].abs();
                }
            }
            lo = lo.min(diag - off);
            hi = hi.max(diag + off);
        }
        (lo, hi)
    }
}

/// Chain block H_s, bath hopping −1/2 with periodic wraparound, coupling g between
/// atom n and the bath site (c_n, …, c_n).
pub fn build_full(cfg: &ModelConfig) -> Result<FullHamiltonian> {
    cfg.validate()?;
    let (n_s, n_b, d) = (cfg.n_s, cfg.n_b, cfg.d);
    let sites = n_b.checked_pow(d as u32).filter(|&v| v <= MAX_BATH_SITES).ok_or_else(|| {
        Error::SizeCap(format!("N_b^d = {n_b}^{d} exceeds the oracle cap of {MAX_BATH_SITES} bath sites"))
    })?;
    if n_b % 2 == 0 {
        return Err(Error::Config(format!("N_b = {n_b} must be odd so the bath is centred on the origin")));
    }
    let h = (n_b as i64 - 1) / 2;
    let hs = build_system_hamiltonian(cfg);
    let offs: Vec<i64> = (1..=n_s).map(|n| center_offset(n, cfg)).collect::<Result<_>>()?;
    if offs.iter().any(|c| c.abs() > h) {
        return Err(Error::Config(format!("N_b = {n_b} is too small for a chain of {n_s} atoms")));
    }

    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_s + sites];
    for i in 0..n_s {
        for j in 0..n_s {
            if hs[(i, j)] != 0.0 {
                rows[i].push((j, hs[(i, j)]));
            }
        }
    }
    let mut shell = FullHamiltonian { n_s, n_b, d, row_ptr: vec![0], cols: vec![], vals: vec![] };
    if cfg.g != 0.0 {
        for (n, &c) in offs.iter().enumerate() {
            let b = shell.bath_index(&vec![c; d]);
            rows[n].push((b, cfg.g));
            rows[b].push((n, cfg.g));
        }
    }
    let mut r = vec![0i64; d];
    for flat in 0..sites {
        let mut rem = flat;
        for q in (0..d).rev() {
            r[q] = (rem % n_b) as i64 - h;
            rem /= n_b;
        }
        let me = n_s + flat;
        for q in 0..d {
            for step in [-1i64, 1] {
                let mut nb = r.clone();
                nb[q] += step;
                let j = shell.bath_index(&nb);
                // N_b = 1 or 2 would fold both neighbours onto one site.
                rows[me].push((j, -0.5));
            }
        }
    }
    for row in rows.iter_mut() {
        row.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for &(c, v) in row.iter() {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        for (c, v) in merged {
            shell.cols.push(c);
            shell.vals.push(v);
        }
        shell.row_ptr.push(shell.cols.len());
    }
    Ok(shell)
}

/// States at the requested times.
#[derive(Debug, Clone)]
pub struct OracleRun {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    /// Largest |‖ψ(t)‖ − 1| seen.
    pub norm_drift: f64,
    /// Spectral half-width used after any inflation.
    pub half_width: f64,
}

impl OracleRun {
    /// Chain amplitude α_n(t_i) with 1-based `n`.
    pub fn chain_amp(&self, i: usize, n: usize) -> Complex64 {
        self.states[i][n - 1]
    }
}

const CHEB_TOL: f64 = 1e-15;
const MAX_ARG: f64 = 40.0;
const NORM_TOL: f64 = 1e-10;

/// Chebyshev propagation of `psi0` to each of the ascending `times`.
pub fn exact_propagate(h: &FullHamiltonian, psi0: &[Complex64], times: &[f64]) -> Result<OracleRun> {
    let n = h.dim();
    if psi0.len() != n {
        return Err(Error::Config(format!("initial state has length {}, Hamiltonian has dimension {n}", psi0.len())));
    }
    let norm0: f64 = psi0.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm0 - 1.0).abs() > 1e-10 {
        return Err(Error::Config(format!("initial state norm {norm0} is not 1")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::Config("oracle times must be ascending and nonnegative".into()));
    }
    let (lo, hi) = h.spectral_bounds();
    let center = 0.5 * (lo + hi);
    let mut half = (0.5 * (hi - lo)).max(1e-12) * 1.01;

    let mut psi = psi0.to_vec();
    let mut now = 0.0;
    let mut states = Vec::with_capacity(times.len());
    let mut drift: f64 = 0.0;
    for &target in times {
        while now < target {
            let mut tau = (target - now).min(MAX_ARG / half);
            if target - now - tau < 1e-12 {
                tau = target - now;
            }
            let mut attempts = 0;
            loop {
                let next = cheb_step(h, &psi, tau, center, half);
                let nn: f64 = next.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                if (nn - 1.0).abs() <= NORM_TOL || attempts >= 5 {
                    drift = drift.max((nn - 1.0).abs());
                    psi = next;
                    break;
                }
                attempts += 1;
                half *= 1.1;
            }
            now += tau;
        }
        states.push(psi.clone());
    }
    if drift > NORM_TOL {
        return Err(Error::Numerics(format!("oracle norm drift {drift:e} exceeds {NORM_TOL:e}")));
    }
    Ok(OracleRun { times: times.to_vec(), states, norm_drift: drift, half_width: half })
}

/// exp(−iHτ)ψ = e^{−icτ} Σ_k (2 − δ_k0) (−i)^k J_k(aτ) T_k((H − c)/a) ψ.
fn cheb_step(h: &FullHamiltonian, psi: &[Complex64], tau: f64, c: f64, a: f64) -> Vec<Complex64> {
    let n = psi.len();
    let x = a * tau;
    let kmax = (x + 30.0 + 10.0 * x.cbrt()).ceil() as usize;
    let j = bessel_j_seq(kmax, x);
    let order = (1..=kmax).rev().find(|&k| j[k].abs() > CHEB_TOL).map(|k| k + 2).unwrap_or(1).min(kmax);

    let apply = |v: &[Complex64], out: &mut [Complex64]| {
        h.matvec(v, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = (*o - vi * c) / a;
        }
    };
    let mut t0 = psi.to_vec();
    let mut t1 = vec![Complex64::new(0.0, 0.0); n];
    apply(&t0, &mut t1);
    let mut out: Vec<Complex64> = t0.iter().map(|v| v * j[0]).collect();
    let mi = Complex64::new(0.0, -1.0);
    let mut coef = mi * (2.0 * j[1]);
    for (o, v) in out.iter_mut().zip(&t1) {
        *o += coef * v;
    }
    let mut t2 = vec![Complex64::new(0.0, 0.0); n];
    let mut phase = mi;
    for k in 2..=order {
        apply(&t1, &mut t2);
        for (t2i, t0i) in t2.iter_mut().zip(&t0) {
            *t2i = *t2i * 2.0 - t0i;
        }
        phase *= mi;
        coef = phase * (2.0 * j[k]);
        for (o, v) in out.iter_mut().zip(&t2) {
            *o += coef * v;
        }
        std::mem::swap(&mut t0, &mut t1);
        std::mem::swap(&mut t1, &mut t2);
    }
    let global = Complex64::from_polar(1.0, -c * tau);
    out.iter_mut().for_each(|o| *o *= global);
    out
}

/// Dense eigendecomposition route, for small baths only.
pub fn dense_propagate(h: &FullHamiltonian, psi0: &[Complex64], times: &[f64]) -> Result<OracleRun> {
    let n = h.dim();
    if n > 2000 {
        return Err(Error::SizeCap(format!("dense propagation of dimension {n}")));
    }
    let eig = SymmetricEigen::try_new(h.to_dense(), 1e-15, 10_000).ok_or_else(|| Error::Eigen("full Hamiltonian".into()))?;
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let coeffs = v.adjoint() * DVector::from_column_slice(psi0);
    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        let ph = DVector::from_iterator(n, (0..n).map(|q| coeffs[q] * Complex64::from_polar(1.0, -eig.eigenvalues[q] * t)));
        states.push((&v * ph).as_slice().to_vec());
    }
    Ok(OracleRun { times: times.to_vec(), states, norm_drift: 0.0, half_width: 0.0 })
}

/// Single excitation on atom `n0`.
pub fn site_state(h: &FullHamiltonian, n0: usize) -> Result<Vec<Complex64>> {
    if n0 < 1 || n0 > h.n_s {
        return Err(Error::Config(format!("initial site {n0} outside 1..={}", h.n_s)));
    }
    let mut psi = vec![Complex64::new(0.0, 0.0); h.dim()];
    psi[n0 - 1] = Complex64::new(1.0, 0.0);
    Ok(psi)
}

/// Time before a wavefront leaving the chain can wrap around the bath: N_b / (2d).
pub fn recurrence_time(cfg: &ModelConfig) -> f64 {
    cfg.n_b as f64 / (2.0 * cfg.d as f64)
}

/// Long-time revival predicted by the bound states: Σ_b (Z_b |v_b(n0)|²)².
///
/// Z_b is the chain weight of the dressed bound state, 1/(1 + g² v†(−∂f/∂e)v).
pub fn bound_state_revival(cfg: &ModelConfig, n0: usize) -> Result<f64> {
    use crate::green::{green_row, ContourRule, Sheet};
    let states = find_all_bound_states(cfg)?;
    let rule = ContourRule::default();
    let n = cfg.n_s;
    let mut total = 0.0;
    for b in &states {
        let h = 1e-5;
        let fp = green_row(Complex64::new(b.e + h, 0.0), n - 1, cfg.d, Sheet::Physical, &rule)?;
        let fm = green_row(Complex64::new(b.e - h, 0.0), n - 1, cfg.d, Sheet::Physical, &rule)?;
        let v = &b.vector / Complex64::new(b.vector.norm(), 0.0);
        let mut q = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let df = (fp[i.abs_diff(j)] - fm[i.abs_diff(j)]) / (2.0 * h);
                q -= v[i].conj() * df * v[j];
            }
        }
        let z = 1.0 / (1.0 + cfg.g * cfg.g * q.re);
        total += (z * v[n0 - 1].norm_sqr()).powi(2);
    }
    Ok(total)
}
