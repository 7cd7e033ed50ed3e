//! Bessel functions of integer order and hypergeometric series.

use num_complex::Complex64;

use crate::error::{Error, Result};

const RESCALE_AT: f64 = 1e250;
const SERIES_TERM_CAP: usize = 100_000;

/// Starting order for the downward Miller recurrence of J.
fn miller_start_j(nmax: usize, x: f64) -> usize {
    let base = (nmax as f64).max(x.ceil());
    let m = base + 30.0 + 15.0 * x.cbrt();
    let m = m as usize;
    m + (m & 1)
}

/// Ascending power series for J_n(x), used for small arguments.
fn bessel_j_series(n: usize, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut lead = 1.0;
    for k in 1..=n {
        lead *= h / k as f64;
        if lead == 0.0 {
            return 0.0;
        }
    }
    let q = h * h;
    let mut term = lead;
    let mut sum = lead;
    let mut k = 0usize;
    loop {
        term *= -q / ((k + 1) as f64 * (n + k + 1) as f64);
        sum += term;
        k += 1;
        if term.abs() <= 1e-17 * sum.abs() || k > 200 {
            break;
        }
    }
    sum
}

/// J_0(x), …, J_nmax(x) for real x.
///
/// Uses the ascending series below x = 1 and Miller's downward recurrence,
/// normalised with J_0 + 2 Σ J_2k = 1, above. Negative x is handled with
/// J_n(-x) = (-1)^n J_n(x).
pub fn bessel_j_seq(nmax: usize, x: f64) -> Vec<f64> {
    if x < 0.0 {
        let mut v = bessel_j_seq(nmax, -x);
        for (n, val) in v.iter_mut().enumerate() {
            if n % 2 == 1 {
                *val = -*val;
            }
        }
        return v;
    }
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x < 1.0 {
        for (n, val) in out.iter_mut().enumerate() {
            *val = bessel_j_series(n, x);
            if *val == 0.0 {
                break;
            }
        }
        return out;
    }

    let start = miller_start_j(nmax, x);
    let two_over_x = 2.0 / x;
    let mut above = 0.0; // j_{k+1}
    let mut cur = 1e-30; // j_k
    let mut norm = 0.0;
    let mut k = start;
    loop {
        if k <= nmax {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += if k == 0 { cur } else { 2.0 * cur };
        }
        if k == 0 {
            break;
        }
        let below = (k as f64) * two_over_x * cur - above;
        above = cur;
        cur = below;
        k -= 1;
        if cur.abs() > RESCALE_AT {
            let s = 1.0 / RESCALE_AT;
            cur *= s;
            above *= s;
            norm *= s;
            for v in out.iter_mut().skip(k + 1) {
                *v *= s;
            }
        }
    }
    let inv = 1.0 / norm;
    for v in out.iter_mut() {
        *v *= inv;
    }
    out
}

/// J_n(x) for a single order.
pub fn bessel_j(n: usize, x: f64) -> f64 {
    if (0.0..1.0).contains(&x) {
        return if x == 0.0 {
            if n == 0 { 1.0 } else { 0.0 }
        } else {
            bessel_j_series(n, x)
        };
    }
    bessel_j_seq(n, x)[n]
}

/// Exponentially scaled modified Bessel functions e^{-ρ} I_k(ρ), k = 0..=nmax, ρ ≥ 0.
pub fn bessel_i_scaled_seq(nmax: usize, rho: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if rho <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = nmax + 30 + (12.0 * rho.sqrt()).ceil() as usize;
    let two_over = 2.0 / rho;
    let mut above = 0.0;
    let mut cur = 1e-30;
    let mut norm = 0.0;
    let mut k = start;
    loop {
        if k <= nmax {
            out[k] = cur;
        }
        norm += if k == 0 { cur } else { 2.0 * cur };
        if k == 0 {
            break;
        }
        let below = (k as f64) * two_over * cur + above;
        above = cur;
        cur = below;
        k -= 1;
        if cur > RESCALE_AT {
            let s = 1.0 / RESCALE_AT;
            cur *= s;
            above *= s;
            norm *= s;
            for v in out.iter_mut().skip(k + 1) {
                *v *= s;
            }
        }
    }
    let inv = 1.0 / norm;
    for v in out.iter_mut() {
        *v *= inv;
    }
    out
}

/// A summed series with the magnitude of its last retained term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: Complex64,
    pub est_error: f64,
}

fn is_nonpositive_integer(c: f64) -> bool {
    c <= 0.0 && c.fract() == 0.0
}

/// Generalised hypergeometric series pFq(upper; lower; z) for |z| < 1.
pub fn hyp_pfq(upper: &[f64], lower: &[f64], z: Complex64) -> Result<SeriesSum> {
    if z.norm() >= 1.0 {
        return Err(Error::Domain(format!("hypergeometric series needs |z| < 1, got |z| = {}", z.norm())));
    }
    if let Some(b) = lower.iter().find(|b| is_nonpositive_integer(**b)) {
        return Err(Error::Domain(format!("lower parameter {b} is a non-positive integer")));
    }
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 0..SERIES_TERM_CAP {
        let kf = k as f64;
        let mut ratio = 1.0;
        for a in upper {
            ratio *= a + kf;
        }
        for b in lower {
            ratio /= b + kf;
        }
        ratio /= kf + 1.0;
        term *= z * ratio;
        sum += term;
        let t = term.norm();
        if t == 0.0 || t < 1e-15 * sum.norm() {
            return Ok(SeriesSum { value: sum, est_error: t });
        }
    }
    Err(Error::NonConvergence { terms: SERIES_TERM_CAP, partial: sum })
}

/// Gauss hypergeometric function 2F1(a, b; c; z) for |z| < 1.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: Complex64) -> Result<SeriesSum> {
    hyp_pfq(&[a, b], &[c], z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Integral representation (1/π)∫₀^π cos(nτ − x sin τ) dτ; the trapezoid rule is
    /// spectrally accurate for this periodic integrand.
    fn bessel_trapezoid(n: usize, x: f64) -> f64 {
        let pts = 2 * (n + x as usize) + 400;
        let h = PI / pts as f64;
        let mut s = 0.5 * (1.0 + (n as f64 * PI).cos());
        for k in 1..pts {
            let t = k as f64 * h;
            s += (n as f64 * t - x * t.sin()).cos();
        }
        s * h / PI
    }

    #[test]
    fn j_at_zero() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(3, 0.0), 0.0);
    }

    #[test]
    fn j0_first_zero() {
        assert!(bessel_j(0, 2.404825557695773).abs() < 1e-10);
    }

    #[test]
    fn j_matches_integral_representation() {
        for &x in &[0.3, 0.99, 1.0, 2.5, 7.3, 19.9, 55.0, 200.0, 1234.5] {
            let seq = bessel_j_seq(60, x);
            for n in [0usize, 1, 2, 5, 13, 30, 60] {
                let oracle = bessel_trapezoid(n, x);
                assert!((seq[n] - oracle).abs() < 1e-12, "n={n} x={x} {} vs {oracle}", seq[n]);
                assert!((bessel_j(n, x) - oracle).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn j_large_argument_and_order() {
        let x = 9876.5;
        for n in [0usize, 1, 500, 9000, 9990, 10_000] {
            let oracle = bessel_trapezoid(n, x);
            assert!((bessel_j(n, x) - oracle).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn j_sum_rule() {
        for &x in &[1.0, 10.0, 100.0] {
            let v = bessel_j_seq(x as usize + 80, x);
            let s: f64 = v[0] * v[0] + 2.0 * v[1..].iter().map(|j| j * j).sum::<f64>();
            assert!((s - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn j_negative_argument_parity() {
        let a = bessel_j_seq(5, 3.3);
        let b = bessel_j_seq(5, -3.3);
        for n in 0..=5 {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((a[n] - sign * b[n]).abs() < 1e-15);
        }
    }

    #[test]
    fn i_scaled_matches_integral() {
        // e^{-ρ} I_n(ρ) = (1/π)∫₀^π e^{ρ(cos τ - 1)} cos(nτ) dτ
        for &rho in &[0.01, 0.7, 3.0, 40.0, 900.0] {
            let v = bessel_i_scaled_seq(12, rho);
            for n in [0usize, 1, 4, 12] {
                let pts = 4000;
                let h = PI / pts as f64;
                let f = |t: f64| (rho * (t.cos() - 1.0)).exp() * (n as f64 * t).cos();
                let mut s = 0.5 * (f(0.0) + f(PI));
                for k in 1..pts {
                    s += f(k as f64 * h);
                }
                let oracle = s * h / PI;
                assert!((v[n] - oracle).abs() < 1e-13, "n={n} rho={rho}");
            }
        }
    }

    #[test]
    fn hyp2f1_log_identity() {
        let z = Complex64::new(0.5, 0.0);
        let r = hyp2f1(1.0, 1.0, 2.0, z).unwrap();
        assert!((r.value.re - 2.0 * 2f64.ln()).abs() < 1e-13);
        let z = Complex64::new(0.3, -0.4);
        let r = hyp2f1(1.0, 1.0, 2.0, z).unwrap();
        let expect = -(Complex64::new(1.0, 0.0) - z).ln() / z;
        assert!((r.value - expect).norm() < 1e-13);
    }

    #[test]
    fn hyp_trivial_cases() {
        assert_eq!(hyp2f1(0.3, 0.2, 1.5, Complex64::new(0.0, 0.0)).unwrap().value, Complex64::new(1.0, 0.0));
        let g = hyp_pfq(&[1.0], &[], Complex64::new(0.25, 0.0)).unwrap();
        assert!((g.value.re - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn hyp_domain_errors() {
        assert!(matches!(hyp2f1(1.0, 1.0, -2.0, Complex64::new(0.1, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(hyp2f1(1.0, 1.0, 2.0, Complex64::new(1.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn hyp_nonconvergence_carries_partial_sum() {
        let r = hyp_pfq(&[1.0], &[], Complex64::new(0.999_999_9, 0.0));
        match r {
            Err(Error::NonConvergence { terms, partial }) => {
                assert_eq!(terms, SERIES_TERM_CAP);
                assert!(partial.re > 1.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
