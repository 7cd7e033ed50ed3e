//! The isolated chain and the bath geometry.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::config::ModelConfig;
use crate::error::{Error, Result};

/// On-site energy Δ cos(2πβn + φ) of the 1-based site `n`.
pub fn onsite_potential(n: i64, cfg: &ModelConfig) -> f64 {
    cfg.delta * (2.0 * PI * cfg.beta * n as f64 + cfg.phi).cos()
}

/// Open-boundary tridiagonal chain Hamiltonian.
pub fn build_system_hamiltonian(cfg: &ModelConfig) -> DMatrix<f64> {
    let n = cfg.n_s;
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = onsite_potential(i as i64 + 1, cfg);
        if i + 1 < n {
            h[(i, i + 1)] = cfg.lambda;
            h[(i + 1, i)] = cfg.lambda;
        }
    }
    h
}

/// Eigenpairs of the closed chain, energies ascending.
#[derive(Debug, Clone)]
pub struct ClosedSpectrum {
    pub energies: DVector<f64>,
    /// Columns are the eigenvectors.
    pub states: DMatrix<f64>,
}

impl ClosedSpectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Σ_n v_n⁴ for eigenvector `q`.
    pub fn ipr(&self, q: usize) -> f64 {
        self.states.column(q).iter().map(|v| v.powi(4)).sum()
    }

    /// Index of the eigenvalue nearest to `e`.
    pub fn nearest(&self, e: f64) -> usize {
        let mut best = 0;
        for q in 1..self.len() {
            if (self.energies[q] - e).abs() < (self.energies[best] - e).abs() {
                best = q;
            }
        }
        best
    }
}

/// Full eigendecomposition of a real symmetric matrix.
///
/// Energies are sorted ascending, and each eigenvector is signed so that its
/// first component that is not negligible is positive.
pub fn closed_spectrum(h: &DMatrix<f64>) -> Result<ClosedSpectrum> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::Eigen(format!("non-square {}x{}", n, h.ncols())));
    }
    let eig = SymmetricEigen::try_new(h.clone(), 1e-15, 10_000).ok_or_else(|| Error::Eigen(format!("{h}")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut energies = DVector::zeros(n);
    let mut states = DMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        energies[k] = eig.eigenvalues[src];
        let mut col = eig.eigenvectors.column(src).into_owned();
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-12) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        states.set_column(k, &col);
    }
    Ok(ClosedSpectrum { energies, states })
}

/// Bath dispersion Σ_q cos k_q in units 2J = 1.
pub fn dispersion(k: &[f64]) -> f64 {
    k.iter().map(|x| x.cos()).sum()
}

/// Lattice site coupled to atom `n`: (n_c − n)(1, …, 1) with n_c = (N_s + 1)/2.
pub fn atom_site_map(n: usize, cfg: &ModelConfig) -> Result<Vec<i64>> {
    let c = center_offset(n, cfg)?;
    Ok(vec![c; cfg.d])
}

/// The common coordinate n_c − n of the coupled site.
pub fn center_offset(n: usize, cfg: &ModelConfig) -> Result<i64> {
    if cfg.n_s % 2 == 0 {
        return Err(Error::Config(format!("N_s = {} is even, the chain centre is undefined", cfg.n_s)));
    }
    if n < 1 || n > cfg.n_s {
        return Err(Error::Config(format!("atom index {n} outside 1..={}", cfg.n_s)));
    }
    let nc = (cfg.n_s as i64 + 1) / 2;
    Ok(nc - n as i64)
}
