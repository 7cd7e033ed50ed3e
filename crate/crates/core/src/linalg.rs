//! Small dense complex linear algebra helpers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// log|det M| and arg(det M).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub log_abs: f64,
    pub arg: f64,
}

impl LogDet {
    pub fn is_singular(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }

    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.log_abs.exp(), self.arg)
    }
}

fn wrap(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = (a + std::f64::consts::PI).rem_euclid(tau) - std::f64::consts::PI;
    if r == -std::f64::consts::PI { std::f64::consts::PI } else { r }
}

/// Determinant through row-pivoted LU, accumulated as logarithm and phase.
pub fn log_det(m: &DMatrix<Complex64>) -> LogDet {
    let n = m.nrows();
    let lu = m.clone().lu();
    let mut log_abs = 0.0;
    let mut arg = 0.0;
    let u = lu.u();
    for i in 0..n {
        let v = u[(i, i)];
        if v.norm() == 0.0 {
            return LogDet { log_abs: f64::NEG_INFINITY, arg: 0.0 };
        }
        log_abs += v.norm().ln();
        arg += v.arg();
    }
    let p: Complex64 = lu.p().determinant();
    if p.re < 0.0 {
        arg += std::f64::consts::PI;
    }
    LogDet { log_abs, arg: wrap(arg) }
}

/// Plain determinant; matrices here are small enough not to overflow.
pub fn det(m: &DMatrix<Complex64>) -> Complex64 {
    m.clone().lu().determinant()
}

/// Product of the Euclidean row norms, an upper bound for |det M| (Hadamard).
pub fn hadamard_scale(m: &DMatrix<Complex64>) -> f64 {
    m.row_iter().map(|r| r.norm()).product()
}

/// Null vector of a (nearly) singular matrix by inverse iteration.
///
/// Returns the unit vector and the residual ‖M v‖.
pub fn inverse_iteration(m: &DMatrix<Complex64>, seed: &DVector<Complex64>, max_iter: usize) -> (DVector<Complex64>, f64) {
    let n = m.nrows();
    let scale = m.norm().max(1e-300);
    let mut shifted = m.clone();
    // A tiny shift keeps the factorisation usable when M is exactly singular.
    for i in 0..n {
        shifted[(i, i)] += Complex64::new(scale * 1e-14, 0.0);
    }
    let lu = shifted.lu();
    let mut v = seed.normalize();
    let mut best = (v.clone(), (m * &v).norm());
    for _ in 0..max_iter {
        let next = match lu.solve(&v) {
            Some(x) => x,
            None => break,
        };
        let nrm = next.norm();
        if !nrm.is_finite() || nrm == 0.0 {
            break;
        }
        v = next / Complex64::new(nrm, 0.0);
        let res = (m * &v).norm();
        let improved = res < best.1 * 0.999;
        if res < best.1 {
            best = (v.clone(), res);
        }
        if !improved && res < 1e-8 * scale {
            break;
        }
    }
    best
}

/// Rotates a vector so that its largest component is real and positive.
pub fn fix_phase(v: &mut DVector<Complex64>) {
    let k = v.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).map(|x| x.0).unwrap_or(0);
    let p = v[k];
    if p.norm() > 0.0 {
        let rot = p.conj() / p.norm();
        for x in v.iter_mut() {
            *x *= rot;
        }
    }
}
