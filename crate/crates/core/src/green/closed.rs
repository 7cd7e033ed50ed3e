//! Closed-form expressions for the lattice Green function, transcribed literally.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::special::{hyp2f1, hyp_pfq};
use crate::error::{Error, Result};

/// d = 1: π sign(e) / √(e²−1) / (|e| + √(e²−1))^|n|, real |e| > 1 only.
pub fn f1(e: Complex64, n: i64) -> Result<(Complex64, f64)> {
    if e.im != 0.0 || e.re.abs() <= 1.0 {
        return Err(Error::Domain(format!("the one-dimensional closed form needs real |e| > 1, got {e}; use green_quadrature")));
    }
    let x = e.re;
    let s = (x * x - 1.0).sqrt();
    let v = PI * x.signum() / s / (x.abs() + s).powi(n.unsigned_abs() as i32);
    Ok((Complex64::new(v, 0.0), 0.0))
}

/// d = 2: the printed 5F4 expression with argument 4/e².
pub fn f2(e: Complex64, n: i64) -> Result<(Complex64, f64)> {
    let z = 4.0 / (e * e);
    if z.norm() >= 1.0 {
        return Err(Error::Domain(format!("the two-dimensional closed form needs |4/e²| < 1, got e = {e}; use green_quadrature")));
    }
    let nf = n as f64;
    let pre = -16.0 * (nf * PI).cos() / (PI * PI * (4.0 * nf * nf - 1.0) * e * e);
    let s = hyp_pfq(&[1.0, 1.0, 1.0, 1.5, 1.5], &[1.5 + nf, 1.5 - nf, 1.5, 1.5], z)?;
    Ok((pre * s.value, pre.norm() * s.est_error))
}

/// The parameters η± of the three-dimensional form.
pub fn eta(e: Complex64) -> (Complex64, Complex64) {
    let one = Complex64::new(1.0, 0.0);
    let e2 = e * e;
    let r9 = (one - 9.0 / e2).sqrt();
    let r1 = (one - 1.0 / e2).sqrt();
    let base = 4.0 * e2 + (9.0 - 4.0 * e2) * r9;
    let scale = 1.0 / (8.0 * e2);
    ((base + 27.0 * r1) * scale, (base - 27.0 * r1) * scale)
}

/// d = 3: product of two Gauss functions 2F1(1/3, 2/3; n+1; η±).
pub fn f3(e: Complex64, n: i64) -> Result<(Complex64, f64)> {
    let n = n.unsigned_abs();
    let (ep, em) = eta(e);
    if ep.norm() >= 1.0 || em.norm() >= 1.0 {
        return Err(Error::Domain(format!("the three-dimensional closed form needs |η±| < 1, got e = {e}; use green_quadrature")));
    }
    let one = Complex64::new(1.0, 0.0);
    let mut ratio = 1.0;
    for k in 1..=n {
        let k = k as f64;
        ratio *= (3.0 * k) * (3.0 * k - 1.0) * (3.0 * k - 2.0) / (27.0 * k * k * k);
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let inner = e / 3.0 * (one - (one - 9.0 / (e * e)).sqrt());
    let pre = sign / e * ratio * inner.powi(3 * n as i32);
    let c = n as f64 + 1.0;
    let a = hyp2f1(1.0 / 3.0, 2.0 / 3.0, c, ep)?;
    let b = hyp2f1(1.0 / 3.0, 2.0 / 3.0, c, em)?;
    let v = pre * a.value * b.value;
    let err = pre.norm() * (a.est_error * b.value.norm() + b.est_error * a.value.norm());
    Ok((v, err))
}
