//! Lattice Green function continued from the upper half plane through the band.
//!
//! In one dimension the function is explicit. Writing w = √(u−1)√(u+1) and
//! z = w − u, the value above the band is z^m / w; below the band, between the
//! branch points, the continuation is −z^{−m} / w. Branch cuts of the continued
//! function hang vertically downwards from u = ±1.
//!
//! Higher dimensions are obtained by convolving with the one-dimensional density
//! ρ(m; ε) = T_m(−ε) / (π √(1−ε²)):
//!
//! f_d(m; e) = ∫ ρ(m; ε) f_{d−1}(m; e − ε) dε,
//!
//! where the ε path is pushed below the real segment [−1, 1] along the three
//! sides of a rectangle deep enough that e − ε stays above its own band.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::quad::Rule;
use crate::error::{Error, Result};

/// Discretisation of the rectangular ε path.
#[derive(Debug, Clone)]
pub struct ContourRule {
    pub side_panels: usize,
    pub bottom_panels: usize,
    pub order: usize,
    /// Extra depth below max(−Im e, 0).
    pub depth: f64,
}

impl Default for ContourRule {
    fn default() -> Self {
        ContourRule { side_panels: 4, bottom_panels: 8, order: 24, depth: 0.5 }
    }
}

impl ContourRule {
    /// A cheaper rule used for the nested three-dimensional inner level.
    pub fn coarse() -> Self {
        ContourRule { side_panels: 3, bottom_panels: 6, order: 20, depth: 0.5 }
    }

    pub fn fine() -> Self {
        ContourRule { side_panels: 8, bottom_panels: 16, order: 32, depth: 0.5 }
    }

    /// Nodes ε_k with weights dε_k for a given depth D.
    fn path(&self, depth: f64) -> Vec<(Complex64, Complex64)> {
        let rule = Rule::new(self.order);
        let sd = depth.sqrt();
        let i = Complex64::new(0.0, 1.0);
        let mut out = Vec::new();
        // left side ε = −1 − i s², s: 0 → √D
        for (s, w) in rule.composite(0.0, sd, self.side_panels) {
            out.push((Complex64::new(-1.0, -s * s), -2.0 * i * s * w));
        }
        // bottom ε = x − iD, x: −1 → 1
        for (x, w) in rule.composite(-1.0, 1.0, self.bottom_panels) {
            out.push((Complex64::new(x, -depth), Complex64::new(w, 0.0)));
        }
        // right side ε = 1 − i s², s: √D → 0
        for (s, w) in rule.composite(0.0, sd, self.side_panels) {
            out.push((Complex64::new(1.0, -s * s), 2.0 * i * s * w));
        }
        out
    }
}

/// One-dimensional continued values for m = 0..=mmax.
pub fn r1_row(u: Complex64, mmax: usize) -> Result<Vec<Complex64>> {
    let one = Complex64::new(1.0, 0.0);
    let inside = u.re.abs() < 1.0;
    let w = if u.im == 0.0 && inside {
        Complex64::new(0.0, (1.0 - u.re * u.re).sqrt())
    } else {
        (u - one).sqrt() * (u + one).sqrt()
    };
    if w.norm() == 0.0 {
        return Err(Error::Singular(format!("band edge u = {u}")));
    }
    let z = w - u;
    let second = u.im < 0.0 && inside;
    let (step, scale) = if second { (1.0 / z, -1.0 / w) } else { (z, 1.0 / w) };
    let mut out = Vec::with_capacity(mmax + 1);
    let mut p = scale;
    for _ in 0..=mmax {
        out.push(p);
        p *= step;
    }
    Ok(out)
}

/// ρ(m; ε) = T_m(−ε) / (π √(1 − ε²)) for m = 0..=mmax.
pub fn rho1_row(eps: Complex64, mmax: usize) -> Vec<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let inv = 1.0 / (PI * (one - eps * eps).sqrt());
    let x = -eps;
    let mut out = Vec::with_capacity(mmax + 1);
    let mut t_prev = one;
    let mut t = x;
    out.push(inv);
    if mmax >= 1 {
        out.push(t * inv);
    }
    for _ in 2..=mmax {
        let next = 2.0 * x * t - t_prev;
        t_prev = t;
        t = next;
        out.push(t * inv);
    }
    out
}

/// Continued f_d(0..=mmax; e).
pub fn continued_row(e: Complex64, mmax: usize, d: usize, rule: &ContourRule) -> Result<Vec<Complex64>> {
    match d {
        1 => r1_row(e, mmax),
        2 | 3 => {
            let depth = (-e.im).max(0.0) + rule.depth;
            let inner = if d == 3 { ContourRule::coarse() } else { rule.clone() };
            let mut acc = vec![Complex64::new(0.0, 0.0); mmax + 1];
            for (eps, w) in rule.path(depth) {
                let rho = rho1_row(eps, mmax);
                let f = continued_row(e - eps, mmax, d - 1, &inner)?;
                for m in 0..=mmax {
                    acc[m] += w * rho[m] * f[m];
                }
            }
            Ok(acc)
        }
        _ => Err(Error::Config(format!("bath dimension {d} not supported"))),
    }
}
