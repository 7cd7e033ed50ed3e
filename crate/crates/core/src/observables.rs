//! Quantities derived from trajectories and bath snapshots.

use serde::Serialize;

use crate::bath::BathSnapshot;
use crate::error::{Error, Result};
use crate::propagator::Trajectory;

/// Least-squares line y = slope·x + intercept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Range of x actually used.
    pub window: (f64, f64),
    pub points: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<FitResult> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Numerics(format!("fit inputs have lengths {n} and {}", y.len())));
    }
    if n < 2 {
        return Err(Error::Numerics("a fit needs at least two points".into()));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Numerics("fit abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(FitResult { slope, intercept, r_squared, window: (lo, hi), points: n })
}

/// |α_{n0}(t_i)|².
pub fn revival_probability(traj: &Trajectory, n0: usize) -> Result<Vec<f64>> {
    if n0 < 1 || n0 > traj.n_s {
        return Err(Error::Config(format!("site {n0} outside 1..={}", traj.n_s)));
    }
    Ok((0..traj.len()).map(|i| traj.amp(i, n0).norm_sqr()).collect())
}

/// Σ_n |α_n|⁴, not divided by the surviving norm.
pub fn ipr(traj: &Trajectory) -> Vec<f64> {
    (0..traj.len()).map(|i| traj.row(i).iter().map(|a| a.norm_sqr().powi(2)).sum()).collect()
}

/// Σ_n |α_n|⁴ / (Σ_n |α_n|²)², the participation ratio of the surviving state.
pub fn ipr_normalized(traj: &Trajectory) -> Vec<Option<f64>> {
    (0..traj.len())
        .map(|i| {
            let p: f64 = traj.row(i).iter().map(|a| a.norm_sqr()).sum();
            let q: f64 = traj.row(i).iter().map(|a| a.norm_sqr().powi(2)).sum();
            (p > 1e-12).then(|| q / (p * p))
        })
        .collect()
}

/// Conditional variance of the atom index under weights |α_n|².
///
/// `None` where the chain has fully leaked (Σ|α|² ≤ 1e-12).
pub fn position_variance(traj: &Trajectory) -> Vec<Option<f64>> {
    (0..traj.len())
        .map(|i| {
            let w: Vec<f64> = traj.row(i).iter().map(|a| a.norm_sqr()).collect();
            weighted_variance(&w, |n| (n + 1) as f64)
        })
        .collect()
}

fn weighted_variance(w: &[f64], coord: impl Fn(usize) -> f64) -> Option<f64> {
    let total: f64 = w.iter().sum();
    if !(total > 1e-12) {
        return None;
    }
    let mean = w.iter().enumerate().map(|(n, p)| coord(n) * p).sum::<f64>() / total;
    let var = w.iter().enumerate().map(|(n, p)| (coord(n) - mean).powi(2) * p).sum::<f64>() / total;
    Some(var.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstPeak {
    pub p_f: f64,
    pub tau_f: f64,
}

pub const PEAK_FLOOR: f64 = 1e-8;

/// Earliest strict local maximum of `series` above [`PEAK_FLOOR`].
///
/// The first sample counts as a maximum when it exceeds the second. Interior peaks
/// are refined by a parabola through the three samples around them.
pub fn first_peak(series: &[f64], times: &[f64]) -> Option<FirstPeak> {
    let n = series.len().min(times.len());
    if n < 2 {
        return None;
    }
    if series[0] > PEAK_FLOOR && series[0] > series[1] {
        return Some(FirstPeak { p_f: series[0], tau_f: times[0] });
    }
    for i in 1..n - 1 {
        let (a, b, c) = (series[i - 1], series[i], series[i + 1]);
        if b > PEAK_FLOOR && b > a && b > c {
            let denom = a - 2.0 * b + c;
            let h = times[i + 1] - times[i];
            let (shift, peak) = if denom != 0.0 {
                let x = 0.5 * (a - c) / denom;
                (x, b - 0.25 * (a - c) * x)
            } else {
                (0.0, b)
            };
            return Some(FirstPeak { p_f: peak, tau_f: times[i] + shift * h });
        }
    }
    None
}

pub fn first_peak_at(traj: &Trajectory, n: usize) -> Result<Option<FirstPeak>> {
    let series = revival_probability(traj, n)?;
    Ok(first_peak(&series, &traj.times))
}

/// Wavefront fit of τ_f against |n − n0| over `sites`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Wavefront {
    /// (|n − n0|, τ_f, p_f) for every site with a peak.
    pub peaks: Vec<(usize, f64, f64)>,
    pub fit: FitResult,
    /// Reciprocal of the fitted slope, sites per unit time.
    pub velocity: f64,
}

pub fn wavefront(traj: &Trajectory, n0: usize, sites: &[usize]) -> Result<Wavefront> {
    let mut peaks = Vec::new();
    for &n in sites {
        if let Some(p) = first_peak_at(traj, n)? {
            peaks.push((n.abs_diff(n0), p.tau_f, p.p_f));
        }
    }
    let x: Vec<f64> = peaks.iter().map(|p| p.0 as f64).collect();
    let y: Vec<f64> = peaks.iter().map(|p| p.1).collect();
    let fit = linear_fit(&x, &y)?;
    Ok(Wavefront { peaks, velocity: 1.0 / fit.slope, fit })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayShape {
    Stable,
    Exponential,
    SuperExponential,
    /// None of the above criteria hold.
    Irregular,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub shape: DecayShape,
    /// Straight-line fit of ln p against t.
    pub fit: FitResult,
    /// 1 − (mean of the last tenth)/(mean of the first tenth) of the window.
    pub relative_drop: f64,
    /// Curvature of ln p and its standard error.
    pub curvature: (f64, f64),
    /// Set when nonpositive samples forced the window to be cut short.
    pub shrunk: bool,
}

pub const STABLE_DROP: f64 = 0.05;
pub const EXPONENTIAL_R2: f64 = 0.98;

/// Classifies a revival series on the time window `window`.
pub fn decay_shape(series: &[f64], times: &[f64], window: (f64, f64)) -> Result<DecayReport> {
    let idx: Vec<usize> = (0..series.len().min(times.len())).filter(|&i| times[i] >= window.0 && times[i] <= window.1).collect();
    let mut shrunk = false;
    let mut used = Vec::with_capacity(idx.len());
    for &i in &idx {
        if !(series[i] > 0.0) {
            shrunk = true;
            break;
        }
        used.push(i);
    }
    if used.len() < 20 {
        return Err(Error::Numerics(format!("decay window holds {} positive samples, need 20", used.len())));
    }
    let t: Vec<f64> = used.iter().map(|&i| times[i]).collect();
    let p: Vec<f64> = used.iter().map(|&i| series[i]).collect();
    let y: Vec<f64> = p.iter().map(|v| v.ln()).collect();

    let tenth = (p.len() / 10).max(1);
    let head = p[..tenth].iter().sum::<f64>() / tenth as f64;
    let tail = p[p.len() - tenth..].iter().sum::<f64>() / tenth as f64;
    let relative_drop = 1.0 - tail / head;

    let fit = linear_fit(&t, &y)?;
    let curvature = quadratic_curvature(&t, &y);

    let shape = if relative_drop.abs() < STABLE_DROP {
        DecayShape::Stable
    } else if fit.r_squared >= EXPONENTIAL_R2 {
        DecayShape::Exponential
    } else if curvature.0 < 0.0 && -curvature.0 > 3.0 * curvature.1 {
        DecayShape::SuperExponential
    } else {
        DecayShape::Irregular
    };
    Ok(DecayReport { shape, fit, relative_drop, curvature, shrunk })
}

/// Coefficient c of the least-squares parabola a + b t + c t² and its standard error.
fn quadratic_curvature(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len();
    let t0 = t.iter().sum::<f64>() / n as f64;
    let scale = t.iter().map(|v| (v - t0).abs()).fold(0.0, f64::max).max(1e-300);
    let x: Vec<f64> = t.iter().map(|v| (v - t0) / scale).collect();
    let a = nalgebra::DMatrix::from_fn(n, 3, |i, j| x[i].powi(j as i32));
    let b = nalgebra::DVector::from_column_slice(y);
    let ata = a.transpose() * &a;
    let inv = match ata.clone().try_inverse() {
        Some(m) => m,
        None => return (0.0, f64::INFINITY),
    };
    let coef = &inv * a.transpose() * &b;
    let resid = &b - &a * &coef;
    let dof = (n as f64 - 3.0).max(1.0);
    let s2 = resid.norm_squared() / dof;
    let se = (s2 * inv[(2, 2)]).sqrt();
    (coef[2] / (scale * scale), se / (scale * scale))
}

/// (1/N_b²) times the variance of the first coordinate under weights |β_r|².
pub fn bath_variance_one(snap: &BathSnapshot, n_b: usize) -> Option<f64> {
    let region = &snap.region;
    let e0 = region.extent(0);
    let stride = region.len() / e0;
    let mut w = vec![0.0; e0];
    for (i, b) in snap.field.iter().enumerate() {
        w[i / stride] += b.norm_sqr();
    }
    let lo = region.lo[0];
    weighted_variance(&w, |x| (lo + x as i64) as f64).map(|v| v / (n_b as f64).powi(2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BathVariance {
    pub times: Vec<f64>,
    pub values: Vec<Option<f64>>,
    /// Fit of ln⟨δ²x⟩_b against ln t; the slope is ν.
    pub fit: FitResult,
}

pub fn bath_variance(snaps: &[BathSnapshot], n_b: usize, window: (f64, f64)) -> Result<BathVariance> {
    if snaps.len() < 4 {
        return Err(Error::Numerics(format!("{} snapshots given, the exponent fit needs 4", snaps.len())));
    }
    let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let values: Vec<Option<f64>> = snaps.iter().map(|s| bath_variance_one(s, n_b)).collect();
    let fit = fit_exponent(&times, &values, window)?;
    Ok(BathVariance { times, values, fit })
}

/// Log-log fit of positive values whose time lies in `window`.
pub fn fit_exponent(times: &[f64], values: &[Option<f64>], window: (f64, f64)) -> Result<FitResult> {
    let (x, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter_map(|(&t, v)| match v {
            Some(v) if *v > 0.0 && t > 0.0 && t >= window.0 && t <= window.1 => Some((t.ln(), v.ln())),
            _ => None,
        })
        .unzip();
    let mut fit = linear_fit(&x, &y)?;
    fit.window = (fit.window.0.exp(), fit.window.1.exp());
    Ok(fit)
}

/// Mean of `series` over samples with time in `window`.
pub fn window_mean(series: &[f64], times: &[f64], window: (f64, f64)) -> Option<f64> {
    let v: Vec<f64> = series.iter().zip(times).filter(|(_, t)| **t >= window.0 && **t <= window.1).map(|(s, _)| *s).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}
