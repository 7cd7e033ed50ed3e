//! Reduced eigenproblem of the chain with the bath eliminated.
//!
//! The chain amplitudes of a stationary state satisfy M(e) α = 0 with
//! M_nj = λ(δ_{j,n+1} + δ_{j,n−1}) + Δ cos(2πβn + φ) δ_nj + g² f_d(n − j; e) − e δ_nj.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::green::{green_row, ContourRule, Sheet};
use crate::linalg::{self, LogDet};
use crate::model::{build_system_hamiltonian, closed_spectrum, ClosedSpectrum};

/// M(e) for one energy.
#[derive(Debug, Clone)]
pub struct ReducedMatrix {
    pub entries: DMatrix<Complex64>,
    pub e: Complex64,
}

/// Everything that does not change from one energy to the next.
#[derive(Debug, Clone)]
pub struct Reducer {
    pub cfg: ModelConfig,
    pub hs: DMatrix<f64>,
    pub sheet: Sheet,
    pub rule: ContourRule,
}

impl Reducer {
    pub fn new(cfg: &ModelConfig, sheet: Sheet) -> Reducer {
        Reducer { cfg: cfg.clone(), hs: build_system_hamiltonian(cfg), sheet, rule: ContourRule::default() }
    }

    pub fn matrix(&self, e: Complex64) -> Result<ReducedMatrix> {
        let n = self.cfg.n_s;
        let g2 = self.cfg.g * self.cfg.g;
        let f = if g2 != 0.0 { green_row(e, n - 1, self.cfg.d, self.sheet, &self.rule)? } else { vec![Complex64::new(0.0, 0.0); n] };
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut v = Complex64::new(self.hs[(i, j)], 0.0) + g2 * f[i.abs_diff(j)];
                if i == j {
                    v -= e;
                }
                m[(i, j)] = v;
            }
        }
        Ok(ReducedMatrix { entries: m, e })
    }

    pub fn det(&self, e: Complex64) -> Result<Complex64> {
        Ok(linalg::det(&self.matrix(e)?.entries))
    }
}

/// M(e) on the physical sheet.
pub fn reduced_matrix(e: Complex64, cfg: &ModelConfig) -> Result<ReducedMatrix> {
    Reducer::new(cfg, Sheet::Physical).matrix(e)
}

pub fn log_det(m: &ReducedMatrix) -> LogDet {
    linalg::log_det(&m.entries)
}

/// |⟨closed_q | v⟩|² for every closed eigenstate q.
pub fn overlaps(vector: &DVector<Complex64>, closed: &ClosedSpectrum) -> Vec<f64> {
    let norm = vector.norm();
    (0..closed.len())
        .map(|q| {
            let c: Complex64 = closed.states.column(q).iter().zip(vector.iter()).map(|(a, b)| *a * b).sum();
            (c.norm() / norm).powi(2)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct BoundState {
    pub e: f64,
    pub vector: DVector<Complex64>,
    pub overlaps: Vec<f64>,
    /// |det M(e)| divided by the Hadamard bound of M(e).
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct Resonance {
    pub e: Complex64,
    pub vector: DVector<Complex64>,
    pub overlaps: Vec<f64>,
    pub residual: f64,
}

/// A grid cell whose Newton refinement did not converge.
#[derive(Debug, Clone)]
pub struct Unresolved {
    pub cell_lo: Complex64,
    pub cell_hi: Complex64,
    pub last: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Region {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Region {
    /// Re e ∈ [−d, d], Im e ∈ [−0.5, 0].
    pub fn default_for(d: usize) -> Region {
        Region { re: (-(d as f64), d as f64), im: (-0.5, 0.0) }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub bound_states: Vec<BoundState>,
    pub resonances: Vec<Resonance>,
    pub unresolved: Vec<Unresolved>,
    pub scan_region: Region,
    pub grid: (usize, usize),
    /// Number of grid cells that were subdivided in the real scan.
    pub refinements: usize,
}

pub const RESIDUAL_TOL: f64 = 1e-10;

fn scaled_residual(m: &DMatrix<Complex64>) -> f64 {
    linalg::det(m).norm() / linalg::hadamard_scale(m).max(1e-300)
}

fn null_vector(m: &DMatrix<Complex64>, closed: &ClosedSpectrum, e_re: f64) -> DVector<Complex64> {
    let q = closed.nearest(e_re);
    let seed = closed.states.column(q).map(|x| Complex64::new(x, 0.0));
    let (mut v, _) = linalg::inverse_iteration(m, &seed, 50);
    linalg::fix_phase(&mut v);
    v
}

/// Default real search ranges on both sides of the band.
pub fn default_bound_ranges(cfg: &ModelConfig) -> [(f64, f64); 2] {
    let d = cfg.d as f64;
    let reach = 2.0 * cfg.lambda.abs() + cfg.delta.abs() + 1.0 + 2.0 * cfg.g * cfg.g;
    let outer = reach.max(d + 0.5);
    [(-outer, -d - 1e-3), (d + 1e-3, outer)]
}

/// Real roots of det M(e) on an interval outside the band.
///
/// The determinant is real there. A uniform grid brackets sign changes, cells
/// adjacent to another sign change are subdivided, and every bracket is refined
/// by bisection to |Δe| < 1e-12.
pub fn find_bound_states(cfg: &ModelConfig, e_range: (f64, f64), grid: usize) -> Result<(Vec<BoundState>, usize)> {
    let d = cfg.d as f64;
    let (a, b) = e_range;
    if !(a < b) {
        return Err(Error::Config(format!("empty energy range [{a}, {b}]")));
    }
    let margin = 1e-3 * (1.0 - 1e-9);
    if !(b < -d - margin || a > d + margin) {
        return Err(Error::Config(format!("range [{a}, {b}] must stay at least 1e-3 outside [-{d}, {d}]")));
    }
    let red = Reducer::new(cfg, Sheet::Physical);
    let closed = closed_spectrum(&red.hs)?;
    let f = |x: f64| -> Result<f64> { Ok(red.det(Complex64::new(x, 0.0))?.re) };

    let n = grid.max(2);
    let xs: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = xs.par_iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let changes: Vec<usize> = (0..n).filter(|&i| vals[i] == 0.0 || vals[i].signum() != vals[i + 1].signum()).collect();

    let mut brackets: Vec<(f64, f64, f64, f64)> = Vec::new();
    let mut refinements = 0;
    for &i in &changes {
        let crowded = changes.contains(&(i + 1)) || (i > 0 && changes.contains(&(i - 1)));
        if crowded {
            refinements += 1;
            let sub = 64;
            let sx: Vec<f64> = (0..=sub).map(|k| xs[i] + (xs[i + 1] - xs[i]) * k as f64 / sub as f64).collect();
            let sv: Vec<f64> = sx.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
            for k in 0..sub {
                if sv[k] == 0.0 || sv[k].signum() != sv[k + 1].signum() {
                    brackets.push((sx[k], sx[k + 1], sv[k], sv[k + 1]));
                }
            }
        } else {
            brackets.push((xs[i], xs[i + 1], vals[i], vals[i + 1]));
        }
    }

    let mut out: Vec<BoundState> = Vec::new();
    for (mut lo, mut hi, mut flo, _) in brackets {
        if flo == 0.0 {
            hi = lo;
        }
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid)?;
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        let e = 0.5 * (lo + hi);
        if out.iter().any(|s| (s.e - e).abs() < 1e-10) {
            continue;
        }
        let m = red.matrix(Complex64::new(e, 0.0))?.entries;
        let residual = scaled_residual(&m);
        let vector = null_vector(&m, &closed, e);
        let ov = overlaps(&vector, &closed);
        out.push(BoundState { e, vector, overlaps: ov, residual });
    }
    out.sort_by(|x, y| x.e.total_cmp(&y.e));
    Ok((out, refinements))
}

/// Bound states on both sides of the band with the default ranges and a 2000-point grid.
pub fn find_all_bound_states(cfg: &ModelConfig) -> Result<Vec<BoundState>> {
    let mut all = Vec::new();
    for r in default_bound_ranges(cfg) {
        all.extend(find_bound_states(cfg, r, 2000)?.0);
    }
    Ok(all)
}

/// Outcome of one Newton refinement.
enum Newton {
    Converged(Complex64),
    Failed(Complex64),
}

/// Damped Newton on det with a central-difference derivative. Converged once the
/// scaled residual is below [`RESIDUAL_TOL`] and the last step is below 1e-9, or
/// the step alone falls below 1e-12; abandoned when the iterate leaves `bounds`.
fn newton(red: &Reducer, start: Complex64, bounds: Region) -> Newton {
    let h = 1e-7;
    let mut e = start;
    for _ in 0..80 {
        let m = match red.matrix(e) {
            Ok(m) => m.entries,
            Err(_) => return Newton::Failed(e),
        };
        let f = linalg::det(&m);
        let residual = f.norm() / linalg::hadamard_scale(&m).max(1e-300);
        let fp = match (red.det(e + h), red.det(e - h)) {
            (Ok(a), Ok(b)) => (a - b) / (2.0 * h),
            _ => return Newton::Failed(e),
        };
        if fp.norm() == 0.0 || !fp.re.is_finite() || !fp.im.is_finite() {
            return Newton::Failed(e);
        }
        let mut step = f / fp;
        if step.norm() > 0.05 {
            step *= 0.05 / step.norm();
        }
        e -= step;
        if (residual < RESIDUAL_TOL && step.norm() < 1e-9) || step.norm() < 1e-12 {
            return Newton::Converged(e);
        }
        if e.re < bounds.re.0 || e.re > bounds.re.1 || e.im < bounds.im.0 || e.im > bounds.im.1 {
            return Newton::Failed(e);
        }
    }
    let ok = red.matrix(e).map(|m| scaled_residual(&m.entries) < RESIDUAL_TOL).unwrap_or(false);
    if ok {
        Newton::Converged(e)
    } else {
        Newton::Failed(e)
    }
}

/// Argument-principle test on the corner values taken counter-clockwise, each
/// edge's phase change wrapped into (−π, π]. A net change of 2π means a zero
/// inside the cell; about π means a zero on its boundary, which is kept too.
/// `c` holds the (lo, lo), (hi, lo), (lo, hi), (hi, hi) corners.
fn encloses_zero(c: &[Complex64]) -> bool {
    let ring = [c[0], c[1], c[3], c[2]];
    let mut total = 0.0;
    for k in 0..4 {
        let (a, b) = (ring[k], ring[(k + 1) % 4]);
        if a.norm() == 0.0 || b.norm() == 0.0 {
            return true;
        }
        let step = (b / a).arg();
        if step.abs() > 0.99 * PI {
            // Opposite phases at the two ends: the zero lies on this edge.
            return true;
        }
        total += step;
    }
    total.abs() > 0.9 * PI
}

/// Complex roots of det M(e) on the continued sheet inside `region`.
///
/// The determinant is tabulated on a `grid.0 × grid.1` mesh (cell-centred in
/// Re e, end points included in Im e); every cell whose corners show sign
/// changes of both Re det and Im det and a nonzero winding of det seeds a
/// damped Newton iteration.
pub fn scan_complex_roots(cfg: &ModelConfig, region: Region, grid: (usize, usize)) -> Result<SpectrumResult> {
    let d = cfg.d as f64;
    if region.im.1 > 0.0 || region.re.0 < -d || region.re.1 > d || region.re.0 >= region.re.1 || region.im.0 >= region.im.1 {
        return Err(Error::Config(format!("scan region {region:?} must lie in |Re e| <= {d}, Im e <= 0")));
    }
    let (nx, ny) = (grid.0.max(2), grid.1.max(2));
    let red = Reducer::new(cfg, Sheet::Continued);
    let closed = closed_spectrum(&red.hs)?;
    let xs: Vec<f64> = (0..nx).map(|i| region.re.0 + (region.re.1 - region.re.0) * (i as f64 + 0.5) / nx as f64).collect();
    let ys: Vec<f64> = (0..ny).map(|j| region.im.0 + (region.im.1 - region.im.0) * j as f64 / (ny - 1) as f64).collect();
    let points: Vec<Complex64> = ys.iter().flat_map(|&y| xs.iter().map(move |&x| Complex64::new(x, y))).collect();
    let vals: Vec<Option<Complex64>> = points.par_iter().map(|&e| red.det(e).ok().filter(|v| v.re.is_finite() && v.im.is_finite())).collect();

    let at = |i: usize, j: usize| vals[j * nx + i];
    let mut seeds = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let c = [at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)];
            if c.iter().any(|v| v.is_none()) {
                continue;
            }
            let c: Vec<Complex64> = c.iter().map(|v| v.unwrap()).collect();
            // An exact zero at a corner counts as both signs.
            let re_change = c.iter().any(|v| v.re >= 0.0) && c.iter().any(|v| v.re <= 0.0);
            let im_change = c.iter().any(|v| v.im >= 0.0) && c.iter().any(|v| v.im <= 0.0);
            if re_change && im_change && encloses_zero(&c) {
                let lo = Complex64::new(xs[i], ys[j]);
                let hi = Complex64::new(xs[i + 1], ys[j + 1]);
                seeds.push((lo, hi));
            }
        }
    }

    let bounds = Region { re: (region.re.0 - 0.1, region.re.1 + 0.1), im: (region.im.0 - 0.1, 0.05) };
    let n_seeds = seeds.len();
    let refined: Vec<(Complex64, Complex64, Newton)> =
        seeds.par_iter().map(|&(lo, hi)| (lo, hi, newton(&red, 0.5 * (lo + hi), bounds))).collect();
    let mut roots: Vec<Complex64> = Vec::new();
    let mut unresolved = Vec::new();
    for (lo, hi, r) in refined {
        match r {
            Newton::Converged(e) => {
                let inside = e.re.abs() < d && e.im <= 1e-12 && e.im >= region.im.0 - 0.05;
                if inside && !roots.iter().any(|q| (q - e).norm() < 1e-8) {
                    roots.push(e);
                }
            }
            Newton::Failed(last) => unresolved.push(Unresolved { cell_lo: lo, cell_hi: hi, last }),
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let mut resonances = Vec::with_capacity(roots.len());
    for e in roots {
        let m = red.matrix(e)?.entries;
        let residual = scaled_residual(&m);
        let vector = null_vector(&m, &closed, e.re);
        let ov = overlaps(&vector, &closed);
        resonances.push(Resonance { e, vector, overlaps: ov, residual });
    }
    Ok(SpectrumResult { bound_states: Vec::new(), resonances, unresolved, scan_region: region, grid: (nx, ny), refinements: n_seeds })
}

/// Top `k` overlap components as (closed index, weight), largest first.
pub fn top_overlaps(ov: &[f64], k: usize) -> Vec<(usize, f64)> {
    let mut idx: Vec<usize> = (0..ov.len()).collect();
    idx.sort_by(|&a, &b| ov[b].total_cmp(&ov[a]).then(a.cmp(&b)));
    idx.into_iter().take(k).map(|q| (q, ov[q])).collect()
}
