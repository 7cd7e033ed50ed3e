//! Model parameters and the flat key-value scenario file.
//!
//! A scenario file is TOML without tables:
//!
//! ```toml
//! N_s = 21
//! Delta = 1.0
//! phi = "-0.6pi"
//! d = 1
//! g = 0.1
//! N_b = 201
//! dt = 0.02
//! t_max = 200.0
//! n0 = 1
//! ```
//!
//! Keys that are not physical parameters (`n0`, `times`, `fit_window`, ...) are
//! run settings and do not enter the configuration hash.

use std::f64::consts::PI;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const GOLDEN: f64 = 1.618_033_988_749_895;

/// Physical parameters in units where 2J = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub n_s: usize,
    pub lambda: f64,
    pub delta: f64,
    pub beta: f64,
    pub phi: f64,
    pub d: usize,
    pub g: f64,
    pub n_b: usize,
    pub dt: f64,
    pub t_max: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n_s: 21,
            lambda: 1.0,
            delta: 1.0,
            beta: GOLDEN,
            phi: -0.6 * PI,
            d: 1,
            g: 0.1,
            n_b: 201,
            dt: 0.02,
            t_max: 200.0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_s < 1 {
            return Err(Error::Config("N_s must be at least 1".into()));
        }
        if self.n_b < 1 {
            return Err(Error::Config("N_b must be at least 1".into()));
        }
        if !(1..=3).contains(&self.d) {
            return Err(Error::Config(format!("d must be 1, 2 or 3, got {}", self.d)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::Config(format!("t_max must be positive, got {}", self.t_max)));
        }
        for (name, v) in [("lambda", self.lambda), ("Delta", self.delta), ("beta", self.beta), ("phi", self.phi), ("g", self.g)] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Number of time steps covering `t_max`.
    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    /// Canonical text form; parsing it back gives an identical config.
    pub fn canonical(&self) -> String {
        format!(
            "N_s = {}\nlambda = {:?}\nDelta = {:?}\nbeta = {:?}\nphi = {:?}\nd = {}\ng = {:?}\nN_b = {}\ndt = {:?}\nt_max = {:?}\n",
            self.n_s, self.lambda, self.delta, self.beta, self.phi, self.d, self.g, self.n_b, self.dt, self.t_max
        )
    }

    /// Stable content hash (first 16 hex digits of SHA-256 of the canonical form).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Settings that steer a run but do not change the physics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSettings {
    pub n0: Option<usize>,
    /// Several initial sites, one trajectory each.
    pub n0_list: Option<Vec<usize>>,
    pub times: Option<Vec<f64>>,
    pub fit_window: Option<(f64, f64)>,
    pub half_width: Option<usize>,
    pub grid: Option<(usize, usize)>,
    pub im_min: Option<f64>,
}

/// A parsed scenario file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub model: ModelConfig,
    pub run: RunSettings,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Real {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Real {
    fn value(self, key: &str) -> Result<f64> {
        match self {
            Real::Num(v) => Ok(v),
            Real::Int(v) => Ok(v as f64),
            Real::Text(s) => parse_real_text(&s).ok_or_else(|| Error::Parse(format!("cannot read {key} = {s:?}"))),
        }
    }
}

/// Accepts plain numbers, multiples of pi such as `-0.6pi`, and `golden`.
fn parse_real_text(s: &str) -> Option<f64> {
    let t = s.trim().to_ascii_lowercase();
    if t == "golden" {
        return Some(GOLDEN);
    }
    if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let k = match head {
            "" | "+" => 1.0,
            "-" => -1.0,
            h => h.parse::<f64>().ok()?,
        };
        return Some(k * PI);
    }
    t.parse::<f64>().ok()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(rename = "N_s")]
    n_s: Option<usize>,
    lambda: Option<Real>,
    #[serde(rename = "Delta")]
    delta: Option<Real>,
    beta: Option<Real>,
    phi: Option<Real>,
    d: Option<usize>,
    g: Option<Real>,
    #[serde(rename = "N_b")]
    n_b: Option<usize>,
    dt: Option<Real>,
    t_max: Option<Real>,
    n0: Option<usize>,
    n0_list: Option<Vec<usize>>,
    times: Option<Vec<f64>>,
    fit_window: Option<[f64; 2]>,
    half_width: Option<usize>,
    grid: Option<[usize; 2]>,
    im_min: Option<f64>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut m = ModelConfig::default();
        if let Some(v) = raw.n_s {
            m.n_s = v;
        }
        if let Some(v) = raw.lambda {
            m.lambda = v.value("lambda")?;
        }
        if let Some(v) = raw.delta {
            m.delta = v.value("Delta")?;
        }
        if let Some(v) = raw.beta {
            m.beta = v.value("beta")?;
        }
        if let Some(v) = raw.phi {
            m.phi = v.value("phi")?;
        }
        if let Some(v) = raw.d {
            m.d = v;
        }
        if let Some(v) = raw.g {
            m.g = v.value("g")?;
        }
        if let Some(v) = raw.n_b {
            m.n_b = v;
        }
        if let Some(v) = raw.dt {
            m.dt = v.value("dt")?;
        }
        if let Some(v) = raw.t_max {
            m.t_max = v.value("t_max")?;
        }
        m.validate()?;
        let run = RunSettings {
            n0: raw.n0,
            n0_list: raw.n0_list,
            times: raw.times,
            fit_window: raw.fit_window.map(|[a, b]| (a, b)),
            half_width: raw.half_width,
            grid: raw.grid.map(|[a, b]| (a, b)),
            im_min: raw.im_min,
        };
        for &n0 in run.n0.iter().chain(run.n0_list.iter().flatten()) {
            if n0 < 1 || n0 > m.n_s {
                return Err(Error::Config(format!("n0 = {n0} outside 1..={}", m.n_s)));
            }
        }
        Ok(Scenario { model: m, run })
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        Scenario::parse(&text)
    }
}

impl std::str::FromStr for ModelConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(Scenario::parse(s)?.model)
    }
}
