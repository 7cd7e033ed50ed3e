//! Lattice Green function f_d(m; e) of the d-dimensional simple lattice bath.
//!
//! Energies are in units 2J = 1 and the atom offset m is taken along the body
//! diagonal, r = m(1, …, 1).

pub mod closed;
pub mod continued;
pub mod laplace;
pub mod quad;
pub mod special;

use num_complex::Complex64;

use crate::error::{Error, Result};
pub use continued::ContourRule;

/// How a Green value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Quadrature,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenValue {
    pub value: Complex64,
    pub method: Method,
    pub est_error: f64,
}

/// Which Riemann sheet to evaluate below the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sheet {
    /// Im e < 0 is the mirror image of the upper half plane; real in-band
    /// energies take the limit from below.
    Physical,
    /// Analytic continuation of the upper half plane through the band.
    Continued,
}

fn check_dim(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(Error::Config(format!("bath dimension {d} not supported")))
    }
}

fn check_edge(e: Complex64, d: usize) -> Result<()> {
    if e.im == 0.0 && e.re.abs() == d as f64 {
        return Err(Error::Singular(format!("e = {} lies on the band edge, where the integral diverges", e.re)));
    }
    if !e.re.is_finite() || !e.im.is_finite() {
        return Err(Error::Domain(format!("non-finite energy {e}")));
    }
    Ok(())
}

/// Ground-truth evaluation by the Laplace-Bessel integral on the physical sheet.
pub fn green_quadrature(e: Complex64, m: i64, d: usize) -> Result<GreenValue> {
    check_dim(d)?;
    check_edge(e, d)?;
    let mm = m.unsigned_abs() as usize;
    let (value, est_error) = if e.im > 0.0 || (e.im == 0.0 && e.re.abs() > d as f64) {
        let (row, err) = laplace::upper_row(e, mm, d)?;
        (row[mm], err)
    } else if e.im < 0.0 {
        let (row, err) = laplace::upper_row(e.conj(), mm, d)?;
        (row[mm].conj(), err)
    } else {
        // Real energy inside the band: the value from below is the mirror of
        // the boundary value from above, which the continued form reaches directly.
        let row = continued::continued_row(e, mm, d, &ContourRule::fine())?;
        let coarse = continued::continued_row(e, mm, d, &ContourRule::default())?;
        (row[mm].conj(), (row[mm] - coarse[mm]).norm())
    };
    Ok(GreenValue { value, method: Method::Quadrature, est_error })
}

/// The closed forms, literally as printed; valid only where their series converge.
pub fn green_closed(e: Complex64, m: i64, d: usize) -> Result<GreenValue> {
    check_dim(d)?;
    check_edge(e, d)?;
    let (value, est_error) = match d {
        1 => closed::f1(e, m)?,
        2 => closed::f2(e, m)?,
        _ => closed::f3(e, m)?,
    };
    Ok(GreenValue { value, method: Method::ClosedForm, est_error })
}

const LAPLACE_GAP: f64 = 0.01;

/// f_d(0..=mmax; e) for the reduced chain equation.
///
/// Evaluated through the contour representation, which agrees with
/// [`green_quadrature`] on the physical sheet and also reaches the continued sheet.
pub fn green_row(e: Complex64, mmax: usize, d: usize, sheet: Sheet, rule: &ContourRule) -> Result<Vec<Complex64>> {
    check_dim(d)?;
    check_edge(e, d)?;
    match sheet {
        Sheet::Continued => continued::continued_row(e, mmax, d, rule),
        Sheet::Physical => {
            if e.im == 0.0 && e.re.abs() > d as f64 + LAPLACE_GAP {
                // The rotated Laplace integral converges exponentially here and is far cheaper.
                Ok(laplace::upper_row(e, mmax, d)?.0)
            } else if e.im > 0.0 || (e.im == 0.0 && e.re.abs() > d as f64) {
                continued::continued_row(e, mmax, d, rule)
            } else if e.im < 0.0 {
                Ok(continued::continued_row(e.conj(), mmax, d, rule)?.into_iter().map(|v| v.conj()).collect())
            } else {
                Ok(continued::continued_row(e, mmax, d, rule)?.into_iter().map(|v| v.conj()).collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn band_edge_is_singular() {
        assert!(matches!(green_quadrature(c(2.0, 0.0), 0, 2), Err(Error::Singular(_))));
        assert!(matches!(green_closed(c(-3.0, 0.0), 1, 3), Err(Error::Singular(_))));
    }

    #[test]
    fn reflection_and_conjugation() {
        for (e, d) in [(c(0.3, 0.4), 1), (c(-1.1, 0.5), 2), (c(2.2, -0.6), 3)] {
            for m in [1i64, 3] {
                let a = green_quadrature(e, m, d).unwrap().value;
                let b = green_quadrature(e, -m, d).unwrap().value;
                assert_eq!(a, b);
                let cj = green_quadrature(e.conj(), m, d).unwrap().value;
                assert!((cj - a.conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn contour_matches_quadrature_on_physical_sheet() {
        let rule = ContourRule::default();
        for (e, d) in [(c(0.4, 0.3), 2), (c(3.0, 0.5), 2), (c(-0.7, 0.45), 3), (c(3.6, 0.0), 3), (c(2.5, 0.0), 2)] {
            let row = green_row(e, 6, d, Sheet::Physical, &rule).unwrap();
            for m in 0..=6 {
                let q = green_quadrature(e, m as i64, d).unwrap();
                assert!((row[m] - q.value).norm() < 1e-9, "e={e} d={d} m={m}: {} vs {}", row[m], q.value);
            }
        }
    }

    #[test]
    fn physical_sheet_below_axis_is_mirror() {
        let rule = ContourRule::default();
        let e = c(0.2, -0.3);
        let a = green_row(e, 4, 2, Sheet::Physical, &rule).unwrap();
        let b = green_row(e.conj(), 4, 2, Sheet::Physical, &rule).unwrap();
        for m in 0..=4 {
            assert!((a[m] - b[m].conj()).norm() < 1e-14);
        }
        // The continued sheet differs there.
        let cont = green_row(e, 4, 2, Sheet::Continued, &rule).unwrap();
        assert!((cont[0] - a[0]).norm() > 1e-3);
    }

    #[test]
    fn in_band_real_takes_limit_from_below() {
        let x = 0.35;
        let q = green_quadrature(c(x, 0.0), 0, 1).unwrap().value;
        let w = (1.0 - x * x).sqrt();
        // f_1(0; x − i0) = +i / √(1 − x²)
        assert!((q - c(0.0, 1.0 / w)).norm() < 1e-12, "{q}");
    }
}
