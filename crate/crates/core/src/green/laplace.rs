//! One-dimensional Laplace-Bessel representation of the lattice Green function.
//!
//! For Im e > 0, f_d(m; e) = −i ∫₀^∞ e^{ies} [i^m J_m(s)]^d ds. When |Re e| > d the
//! path can be turned onto the imaginary axis, which gives the exponentially
//! convergent form ±∫₀^∞ e^{∓eρ} [(±1)^m I_m(ρ)]^d dρ.

use num_complex::Complex64;

use super::quad::Rule;
use super::special::{bessel_i_scaled_seq, bessel_j_seq};
use crate::error::{Error, Result};

const TAIL_TOL: f64 = 1e-13;
const MAX_NODES: usize = 20_000_000;

fn ipow(i: usize) -> Complex64 {
    match i % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Values f_d(0..=mmax; e) in the closed upper half plane together with an error estimate.
///
/// Requires Im e > 0, or Im e ≥ 0 with |Re e| > d.
pub(crate) fn upper_row(e: Complex64, mmax: usize, d: usize) -> Result<(Vec<Complex64>, f64)> {
    if e.im < 0.0 {
        return Err(Error::Domain("upper_row needs Im e >= 0".into()));
    }
    let df = d as f64;
    if e.re.abs() > df {
        rotated(e, mmax, d)
    } else if e.im > 0.0 {
        direct(e, mmax, d)
    } else {
        Err(Error::Domain(format!("real energy {} inside the band needs a limiting prescription", e.re)))
    }
}

fn rotated(e: Complex64, mmax: usize, d: usize) -> Result<(Vec<Complex64>, f64)> {
    let df = d as f64;
    let a = e.re.abs() - df;
    let right = e.re > 0.0;
    // e^{-eρ} I^d = e^{-(e∓d)ρ}(e^{-ρ}I)^d
    let shifted = if right { e - df } else { -e - df };
    let rule = Rule::new(24);
    let mut sum = vec![Complex64::new(0.0, 0.0); mmax + 1];
    let mut abs_sum = 0.0;
    let cap = (4.0 / a).min(6.0 / e.im.abs().max(1e-300)).clamp(0.05, 8.0);
    let mut lo = 0.0;
    let mut len = cap.min(0.5);
    let mut nodes = 0usize;
    loop {
        for (rho, w) in rule.composite(lo, lo + len, 1) {
            let iv = bessel_i_scaled_seq(mmax, rho);
            let ex = (-shifted * rho).exp() * w;
            for (m, s) in sum.iter_mut().enumerate() {
                let mut v = iv[m].powi(d as i32);
                if right && (m * d) % 2 == 1 {
                    v = -v;
                }
                let c = ex * v;
                abs_sum += c.norm();
                *s += c;
            }
        }
        nodes += rule.x.len();
        lo += len;
        len = (len * 1.3).min(cap);
        let tail = (-a * lo).exp() / a;
        if tail < TAIL_TOL * sum[0].norm().max(1e-300) {
            let sign = if right { 1.0 } else { -1.0 };
            for s in sum.iter_mut() {
                *s *= sign;
            }
            return Ok((sum, tail + 1e-15 * abs_sum));
        }
        if nodes > MAX_NODES {
            return Err(Error::Numerics(format!("rotated Laplace integral did not converge at e = {e}")));
        }
    }
}

fn direct(e: Complex64, mmax: usize, d: usize) -> Result<(Vec<Complex64>, f64)> {
    let b = e.im;
    let rule = Rule::new(24);
    let len = (2.0f64).min(4.0 / b);
    let phase: Vec<Complex64> = (0..=mmax).map(|m| ipow(m * d)).collect();
    let mut sum = vec![Complex64::new(0.0, 0.0); mmax + 1];
    let mut abs_sum = 0.0;
    let mut lo = 0.0;
    let mut nodes = 0usize;
    let minus_i = Complex64::new(0.0, -1.0);
    loop {
        for (s, w) in rule.composite(lo, lo + len, 1) {
            let jv = bessel_j_seq(mmax, s);
            let ex = (Complex64::new(0.0, 1.0) * e * s).exp() * w * minus_i;
            for (m, acc) in sum.iter_mut().enumerate() {
                let c = ex * phase[m] * jv[m].powi(d as i32);
                abs_sum += c.norm();
                *acc += c;
            }
        }
        nodes += rule.x.len();
        lo += len;
        let tail = (-b * lo).exp() / b;
        if tail < TAIL_TOL * sum[0].norm().max(1e-300) {
            return Ok((sum, tail + 1e-15 * abs_sum));
        }
        if nodes > MAX_NODES {
            return Err(Error::Numerics(format!("Laplace-Bessel integral did not converge at e = {e}")));
        }
    }
}
