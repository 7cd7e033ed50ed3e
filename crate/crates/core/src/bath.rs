//! Bath amplitudes reconstructed from a chain trajectory.
//!
//! Position space: β_r(t) = −i g ∫₀^t ds Σ_n α_n(s) Π_q i^{|c_n − r_q|} J_{|c_n − r_q|}(t − s),
//! where every coordinate of the coupled site of atom n equals c_n = n_c − n.
//! Momentum space: β_k(t) = −i g (2π)^{−d/2} ∫₀^t ds e^{i(t−s)ω(k)} Σ_n e^{−ik·r_n} α_n(s).
//! Both integrals use the trapezoid rule on the stored grid.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::green::special::bessel_j_seq;
use crate::model::{center_offset, dispersion};
use crate::propagator::{ipow, Trajectory};

/// Axis-aligned integer box, bounds inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BathRegion {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl BathRegion {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<BathRegion> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Region(format!("bounds {lo:?} and {hi:?} have different dimensions")));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::Region(format!("empty region {lo:?}..{hi:?}")));
        }
        Ok(BathRegion { lo, hi })
    }

    /// The cube [−h, h]^d.
    pub fn centered(d: usize, h: i64) -> BathRegion {
        BathRegion { lo: vec![-h; d], hi: vec![h; d] }
    }

    /// The whole bath of N_b sites per axis, centred on the origin.
    pub fn full(cfg: &ModelConfig) -> BathRegion {
        BathRegion::centered(cfg.d, (cfg.n_b as i64 - 1) / 2)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn extent(&self, q: usize) -> usize {
        (self.hi[q] - self.lo[q] + 1) as usize
    }

    pub fn len(&self) -> usize {
        (0..self.dim()).map(|q| self.extent(q)).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of the flat index `i` (row-major, last axis fastest).
    pub fn point(&self, mut i: usize) -> Vec<i64> {
        let mut r = vec![0; self.dim()];
        for q in (0..self.dim()).rev() {
            let e = self.extent(q);
            r[q] = self.lo[q] + (i % e) as i64;
            i /= e;
        }
        r
    }

    pub fn index(&self, r: &[i64]) -> Option<usize> {
        if r.len() != self.dim() {
            return None;
        }
        let mut i = 0;
        for q in 0..self.dim() {
            if r[q] < self.lo[q] || r[q] > self.hi[q] {
                return None;
            }
            i = i * self.extent(q) + (r[q] - self.lo[q]) as usize;
        }
        Some(i)
    }

    pub fn contains(&self, other: &BathRegion) -> bool {
        self.dim() == other.dim() && (0..self.dim()).all(|q| self.lo[q] <= other.lo[q] && other.hi[q] <= self.hi[q])
    }
}

#[derive(Debug, Clone)]
pub struct BathSnapshot {
    pub t: f64,
    pub region: BathRegion,
    /// Row-major over `region`.
    pub field: Vec<Complex64>,
    pub norm_in_region: f64,
}

impl BathSnapshot {
    pub fn density(&self) -> Vec<f64> {
        self.field.iter().map(|b| b.norm_sqr()).collect()
    }

    pub fn at(&self, r: &[i64]) -> Option<Complex64> {
        self.region.index(r).map(|i| self.field[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumSample {
    pub k: Vec<f64>,
    pub t: f64,
    pub beta_k: Complex64,
}

/// Quadrature nodes of the history integral up to `t`.
///
/// For `t` between grid points the final partial interval uses α linearly
/// interpolated between its neighbours.
struct History {
    s: Vec<f64>,
    w: Vec<f64>,
    /// Row per node.
    alpha: Vec<Vec<Complex64>>,
}

fn history(traj: &Trajectory, t: f64) -> Result<History> {
    let dt = traj.dt();
    let horizon = *traj.times.last().unwrap_or(&0.0);
    if !(t >= 0.0) || t > horizon * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("time {t} outside the trajectory horizon [0, {horizon}]")));
    }
    let x = t / dt;
    let kf = x.round();
    let on_grid = (x - kf).abs() < 1e-9;
    let k = if on_grid { kf as usize } else { x.floor() as usize };
    let mut s: Vec<f64> = (0..=k).map(|j| j as f64 * dt).collect();
    let mut w = vec![dt; k + 1];
    if k == 0 {
        w[0] = 0.0;
    } else {
        w[0] = 0.5 * dt;
        w[k] = 0.5 * dt;
    }
    let mut alpha: Vec<Vec<Complex64>> = (0..=k).map(|j| traj.row(j).to_vec()).collect();
    if !on_grid {
        let h = t - k as f64 * dt;
        let f = h / dt;
        let a = traj.row(k);
        let b = traj.row((k + 1).min(traj.len() - 1));
        let mid: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x * (1.0 - f) + y * f).collect();
        w[k] = if k == 0 { 0.5 * h } else { 0.5 * dt + 0.5 * h };
        s.push(t);
        w.push(0.5 * h);
        alpha.push(mid);
    }
    Ok(History { s, w, alpha })
}

fn offsets(cfg: &ModelConfig) -> Result<Vec<i64>> {
    (1..=cfg.n_s).map(|n| center_offset(n, cfg)).collect()
}

/// β_k(t) at one momentum.
pub fn beta_k(k: &[f64], t: f64, traj: &Trajectory) -> Result<Complex64> {
    let cfg = &traj.cfg;
    if k.len() != cfg.d {
        return Err(Error::Domain(format!("momentum has {} components, bath has d = {}", k.len(), cfg.d)));
    }
    let h = history(traj, t)?;
    let c = offsets(cfg)?;
    let ksum: f64 = k.iter().sum();
    let phases: Vec<Complex64> = c.iter().map(|&cn| Complex64::from_polar(1.0, -ksum * cn as f64)).collect();
    let om = dispersion(k);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..h.s.len() {
        let src: Complex64 = h.alpha[j].iter().zip(&phases).map(|(a, p)| a * p).sum();
        acc += Complex64::from_polar(h.w[j], (t - h.s[j]) * om) * src;
    }
    let pref = cfg.g / (2.0 * std::f64::consts::PI).powf(cfg.d as f64 / 2.0);
    Ok(Complex64::new(0.0, -pref) * acc)
}

pub fn momentum_sample(k: &[f64], t: f64, traj: &Trajectory) -> Result<MomentumSample> {
    Ok(MomentumSample { k: k.to_vec(), t, beta_k: beta_k(k, t, traj)? })
}

/// β_r(t) at one lattice site.
pub fn beta_r(r: &[i64], t: f64, traj: &Trajectory) -> Result<Complex64> {
    let region = BathRegion::new(r.to_vec(), r.to_vec())?;
    Ok(field_over(t, &region, traj)?.field[0])
}

/// Snapshot of β over `region`, which must lie inside the configured bath.
pub fn bath_snapshot(t: f64, region: &BathRegion, traj: &Trajectory) -> Result<BathSnapshot> {
    let full = BathRegion::full(&traj.cfg);
    if !full.contains(region) {
        return Err(Error::Region(format!(
            "region {:?}..{:?} exceeds the bath extent {:?}..{:?}",
            region.lo, region.hi, full.lo, full.hi
        )));
    }
    field_over(t, region, traj)
}

/// Box that contains the light cone of every coupled site at time `t`.
///
/// The Bessel kernel J_m(τ) is negligible once m exceeds τ by a few τ^{1/3}.
pub fn cone_region(t: f64, cfg: &ModelConfig) -> BathRegion {
    let foot = (cfg.n_s as i64 - 1) / 2;
    let reach = (t + 12.0 + 4.0 * t.cbrt()).ceil() as i64;
    BathRegion::centered(cfg.d, foot + reach)
}

/// Snapshot of β over any region, with no bath-extent check.
///
/// The bath is treated as infinite, so this is valid wherever the light cone has
/// not wrapped around the finite bath.
pub fn field_over(t: f64, region: &BathRegion, traj: &Trajectory) -> Result<BathSnapshot> {
    let cfg = &traj.cfg;
    if region.dim() != cfg.d {
        return Err(Error::Region(format!("region has dimension {}, bath has d = {}", region.dim(), cfg.d)));
    }
    let h = history(traj, t)?;
    let c = offsets(cfg)?;
    let nodes = h.s.len();

    let cmin = *c.iter().min().unwrap();
    let cmax = *c.iter().max().unwrap();
    let kmax = (0..region.dim()).map(|q| (cmax - region.lo[q]).abs().max((region.hi[q] - cmin).abs())).max().unwrap_or(0) as usize;
    // P[j][m] = i^m J_m(t − s_j)
    let phase: Vec<Complex64> = (0..=kmax).map(ipow).collect();
    let bessel: Vec<Vec<Complex64>> = (0..nodes)
        .map(|j| bessel_j_seq(kmax, t - h.s[j]).iter().zip(&phase).map(|(v, p)| p * v).collect())
        .collect();

    let minus_ig = Complex64::new(0.0, -cfg.g);
    // Flattened source index (j, n) with its coefficient.
    let src: Vec<(usize, i64, Complex64)> = (0..nodes)
        .flat_map(|j| {
            let w = h.w[j];
            let row = &h.alpha[j];
            c.iter().enumerate().map(move |(n, &cn)| (j, cn, row[n] * w))
        })
        .filter(|(_, _, a)| a.norm_sqr() != 0.0)
        .map(|(j, cn, a)| (j, cn, a * minus_ig))
        .collect();

    let axis = |q: usize, block: &[(usize, i64, Complex64)]| -> Array2<Complex64> {
        let e = region.extent(q);
        Array2::from_shape_fn((block.len(), e), |(b, x)| {
            let (j, cn, _) = block[b];
            bessel[j][(cn - (region.lo[q] + x as i64)).unsigned_abs() as usize]
        })
    };

    let total = region.len();
    let field: Vec<Complex64> = match cfg.d {
        1 => {
            let e = region.extent(0);
            let mut out = vec![Complex64::new(0.0, 0.0); e];
            for &(j, cn, a) in &src {
                for (x, o) in out.iter_mut().enumerate() {
                    *o += a * bessel[j][(cn - (region.lo[0] + x as i64)).unsigned_abs() as usize];
                }
            }
            out
        }
        2 => {
            let (e0, e1) = (region.extent(0), region.extent(1));
            let mut acc = Array2::<Complex64>::zeros((e0, e1));
            for block in src.chunks(BLOCK) {
                let mut x0 = axis(0, block);
                for (b, mut row) in x0.rows_mut().into_iter().enumerate() {
                    let a = block[b].2;
                    row.map_inplace(|v| *v *= a);
                }
                let x1 = axis(1, block);
                general_mat_mul(Complex64::new(1.0, 0.0), &x0.t(), &x1, Complex64::new(1.0, 0.0), &mut acc);
            }
            acc.iter().copied().collect()
        }
        3 => {
            let (e0, e1, e2) = (region.extent(0), region.extent(1), region.extent(2));
            let mut acc = Array2::<Complex64>::zeros((e0 * e1, e2));
            let block_len = (BLOCK_ELEMS / (e0 * e1).max(1)).clamp(16, BLOCK);
            for block in src.chunks(block_len) {
                let x0 = axis(0, block);
                let x1 = axis(1, block);
                let x2 = axis(2, block);
                let mut lhs = Array2::<Complex64>::zeros((e0 * e1, block.len()));
                for a in 0..e0 {
                    for b in 0..e1 {
                        let mut row = lhs.row_mut(a * e1 + b);
                        for (s, v) in row.iter_mut().enumerate() {
                            *v = block[s].2 * x0[(s, a)] * x1[(s, b)];
                        }
                    }
                }
                let rhs: ArrayView2<Complex64> = x2.view();
                general_mat_mul(Complex64::new(1.0, 0.0), &lhs, &rhs, Complex64::new(1.0, 0.0), &mut acc);
            }
            acc.iter().copied().collect()
        }
        d => return Err(Error::Config(format!("bath dimension {d} is not supported"))),
    };
    debug_assert_eq!(field.len(), total);
    if field.iter().any(|b| !b.re.is_finite() || !b.im.is_finite()) {
        return Err(Error::Numerics(format!("non-finite bath amplitude at t = {t}")));
    }
    let norm_in_region = field.iter().map(|b| b.norm_sqr()).sum();
    Ok(BathSnapshot { t, region: region.clone(), field, norm_in_region })
}

const BLOCK: usize = 4096;
const BLOCK_ELEMS: usize = 1 << 22;

/// Σ_n |α_n(t)|² + Σ_r |β_r(t)|² with β summed over the light-cone box.
pub fn norm_balance(t: f64, traj: &Trajectory) -> Result<f64> {
    let i = traj.index_of(t);
    let chain: f64 = traj.row(i).iter().map(|a| a.norm_sqr()).sum();
    let snap = field_over(traj.times[i], &cone_region(traj.times[i], &traj.cfg), traj)?;
    Ok(chain + snap.norm_in_region)
}
