//! Command-line experiment runner.
//!
//! `quasibath <command> --config <file> --out <dir> [--threads N] [--dt X] [--tmax X]`
//! and `quasibath figure <name> --out <dir>`. Exit status 0 on success, 1 for a
//! physics or numerics failure, 2 for a usage error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bath::{bath_snapshot, norm_balance, BathRegion, BathSnapshot};
use crate::config::{ModelConfig, Scenario};
use crate::error::{Error, Result};
use crate::export::{export, export_json, series_table, snapshot_table, trajectory_table, Table};
use crate::model::{build_system_hamiltonian, closed_spectrum};
use crate::observables::{self, DecayReport, FirstPeak, FitResult, Wavefront};
use crate::oracle::{build_full, exact_propagate, recurrence_time, site_state};
use crate::presets::{figure_plan, preset, Task};
use crate::propagator::{propagate, system_norm, Initial, Trajectory};
use crate::spectrum::{default_bound_ranges, find_bound_states, scan_complex_roots, top_overlaps, Reducer, Region};
use crate::green::Sheet;

#[derive(Debug, Parser)]
#[command(name = "quasibath", version, about = "Quasiperiodic chain coupled to a lattice bath")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Scenario file (flat TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Overrides the time step of the config file.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Overrides t_max of the config file.
    #[arg(long)]
    pub tmax: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound states and complex roots of the reduced determinant.
    Spectrum(Common),
    /// Chain trajectories.
    Evolve(Common),
    /// Bath snapshots at the configured times.
    Bath(Common),
    /// Revival, IPR, variances, first peaks, decay shape and bath exponent.
    Observe(Common),
    /// Kernel propagator against the exact finite-bath oracle.
    OracleCheck(Common),
    /// Regenerates the data behind one figure from the shipped presets.
    Figure {
        name: String,
        /// Run only the sub-runs whose preset name contains this text.
        #[arg(long)]
        only: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub cfg: String,
    pub cfg_hash: String,
    pub outputs: Vec<PathBuf>,
    /// (phase, seconds)
    pub timings: Vec<(String, f64)>,
}

#[derive(Debug, Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    kind: &'a str,
    exit_code: i32,
}

fn exit_code(e: &Error) -> i32 {
    if e.is_usage() {
        2
    } else {
        1
    }
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::Singular(_) => "singular",
        Error::Domain(_) => "domain",
        Error::NonConvergence { .. } => "non_convergence",
        Error::Numerics(_) => "numerics",
        Error::Eigen(_) => "eigen",
        Error::Region(_) => "region",
        Error::SizeCap(_) => "size_cap",
        Error::Io(_) => "io",
        Error::Parse(_) => "parse",
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let out = match &cli.command {
        Command::Figure { common, .. } => common.out.clone(),
        Command::Spectrum(c) | Command::Evolve(c) | Command::Bath(c) | Command::Observe(c) | Command::OracleCheck(c) => c.out.clone(),
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            let msg = e.to_string();
            let rec = ErrorRecord { error: &msg, kind: kind(&e), exit_code: code };
            eprintln!("{}", serde_json::to_string(&rec).unwrap_or(msg.clone()));
            let _ = export_json(&rec, &out.join("error.json"));
            code
        }
    }
}

fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    match threads {
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| Error::Config(e.to_string()))?;
            pool.install(f)
        }
        None => f(),
    }
}

fn load(common: &Common) -> Result<Scenario> {
    let path = common.config.as_ref().ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    let mut sc = Scenario::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("cannot read {}: {io}", path.display())),
        other => other,
    })?;
    apply_overrides(&mut sc, common)?;
    Ok(sc)
}

fn apply_overrides(sc: &mut Scenario, common: &Common) -> Result<()> {
    if let Some(dt) = common.dt {
        sc.model.dt = dt;
    }
    if let Some(t) = common.tmax {
        sc.model.t_max = t;
    }
    sc.model.validate()
}

fn execute(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Figure { name, only, common } => {
            let plan = figure_plan(name)?;
            let plan: Vec<(String, Task)> = plan.into_iter().filter(|(n, _)| only.as_ref().is_none_or(|o| n.contains(o.as_str()))).collect();
            if plan.is_empty() {
                return Err(Error::Config(format!("no sub-run of {name} matches the filter")));
            }
            with_threads(common.threads, || run_figure(name, &plan, common))
        }
        Command::Spectrum(c) => single("spectrum", c, Task::Spectrum),
        Command::Evolve(c) => {
            let sc = load(c)?;
            with_threads(c.threads, || finish("evolve", &sc, &c.out, run_evolve(&sc, &c.out)?))
        }
        Command::Bath(c) => single("bath", c, Task::Bath),
        Command::Observe(c) => single("observe", c, Task::Observe),
        Command::OracleCheck(c) => {
            let sc = load(c)?;
            with_threads(c.threads, || finish("oracle-check", &sc, &c.out, run_oracle_check(&sc, &c.out)?))
        }
    }
}

type Outcome = (Vec<PathBuf>, Vec<(String, f64)>);

fn single(command: &str, c: &Common, task: Task) -> Result<()> {
    let sc = load(c)?;
    with_threads(c.threads, || finish(command, &sc, &c.out, run_task(task, &sc, &c.out)?))
}

fn run_task(task: Task, sc: &Scenario, out: &Path) -> Result<Outcome> {
    match task {
        Task::Spectrum => run_spectrum(sc, out),
        Task::Observe => run_observe(sc, out),
        Task::Bath => run_bath(sc, out, false),
        Task::Diagonal => run_bath(sc, out, true),
    }
}

fn finish(command: &str, sc: &Scenario, out: &Path, (mut outputs, timings): Outcome) -> Result<()> {
    let manifest_path = out.join("manifest.json");
    outputs.push(manifest_path.clone());
    let m = RunManifest { command: command.into(), cfg: sc.model.canonical(), cfg_hash: sc.model.hash(), outputs, timings };
    export_json(&m, &manifest_path)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SubRunStatus {
    preset: String,
    cfg_hash: Option<String>,
    ok: bool,
    error: Option<String>,
    exit_code: i32,
}

fn run_figure(name: &str, plan: &[(String, Task)], common: &Common) -> Result<()> {
    let statuses: Vec<SubRunStatus> = plan
        .par_iter()
        .map(|(preset_name, task)| {
            let dir = common.out.join(preset_name);
            let res = (|| -> Result<String> {
                let mut sc = preset(preset_name)?;
                apply_overrides(&mut sc, common)?;
                let outcome = run_task(*task, &sc, &dir)?;
                finish(&format!("figure {name}"), &sc, &dir, outcome)?;
                Ok(sc.model.hash())
            })();
            match res {
                Ok(h) => SubRunStatus { preset: preset_name.clone(), cfg_hash: Some(h), ok: true, error: None, exit_code: 0 },
                Err(e) => SubRunStatus {
                    preset: preset_name.clone(),
                    cfg_hash: None,
                    ok: false,
                    error: Some(e.to_string()),
                    exit_code: exit_code(&e),
                },
            }
        })
        .collect();
    export_json(&statuses, &common.out.join("figure.json"))?;
    let failed: Vec<&SubRunStatus> = statuses.iter().filter(|s| !s.ok).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        let list: Vec<String> = failed.iter().map(|s| format!("{}: {}", s.preset, s.error.as_deref().unwrap_or(""))).collect();
        Err(Error::Numerics(format!("{} of {} sub-runs failed: {}", failed.len(), statuses.len(), list.join("; "))))
    }
}

fn file(out: &Path, stem: &str, hash: &str, ext: &str) -> PathBuf {
    out.join(format!("{stem}_{hash}.{ext}"))
}

fn initial_sites(sc: &Scenario) -> Vec<usize> {
    if let Some(list) = &sc.run.n0_list {
        list.clone()
    } else {
        vec![sc.run.n0.unwrap_or(1)]
    }
}

fn default_grid(d: usize) -> (usize, usize) {
    match d {
        1 => (400, 51),
        2 => (200, 51),
        _ => (100, 26),
    }
}

#[derive(Debug, Serialize)]
struct RootRecord {
    re: f64,
    im: f64,
    residual: f64,
    top_state: usize,
    top_energy: f64,
    top_overlap: f64,
}

#[derive(Debug, Serialize)]
struct SpectrumSummary {
    bound_states: Vec<RootRecord>,
    resonances: Vec<RootRecord>,
    unresolved_cells: Vec<[f64; 4]>,
    grid: (usize, usize),
    region: Region,
    refinements: usize,
}

fn run_spectrum(sc: &Scenario, out: &Path) -> Result<Outcome> {
    let cfg = &sc.model;
    let hash = cfg.hash();
    let mut timings = Vec::new();
    let closed = closed_spectrum(&build_system_hamiltonian(cfg))?;
    let record = |e: Complex64, residual: f64, ov: &[f64]| {
        let (q, w) = top_overlaps(ov, 1)[0];
        RootRecord { re: e.re, im: e.im, residual, top_state: q + 1, top_energy: closed.energies[q], top_overlap: w }
    };

    let clock = Instant::now();
    let mut bound = Vec::new();
    let mut refinements = 0;
    for r in default_bound_ranges(cfg) {
        let (b, k) = find_bound_states(cfg, r, 2000)?;
        bound.extend(b);
        refinements += k;
    }
    timings.push(("bound_states".to_string(), clock.elapsed().as_secs_f64()));

    let clock = Instant::now();
    let red = Reducer::new(cfg, Sheet::Physical);
    let mut logdet = Table::new(["e", "log_abs_det"]);
    for (a, b) in default_bound_ranges(cfg) {
        let pts: Vec<f64> = (0..=400).map(|i| a + (b - a) * i as f64 / 400.0).collect();
        let vals: Vec<f64> = pts.par_iter().map(|&x| red.det(Complex64::new(x, 0.0)).map(|v| v.norm().ln())).collect::<Result<_>>()?;
        for (x, v) in pts.into_iter().zip(vals) {
            logdet.push(vec![x, v]);
        }
    }
    timings.push(("real_axis".to_string(), clock.elapsed().as_secs_f64()));

    let clock = Instant::now();
    let d = cfg.d as f64;
    let region = Region { re: (-d, d), im: (sc.run.im_min.unwrap_or(-0.5), 0.0) };
    let grid = sc.run.grid.unwrap_or_else(|| default_grid(cfg.d));
    let scan = scan_complex_roots(cfg, region, grid)?;
    timings.push(("complex_scan".to_string(), clock.elapsed().as_secs_f64()));

    let mut roots = Table::new(["re", "im", "residual", "top_state", "top_overlap"]);
    let mut bound_tab = Table::new(["e", "residual", "top_state", "top_overlap"]);
    let summary = SpectrumSummary {
        bound_states: bound.iter().map(|b| record(Complex64::new(b.e, 0.0), b.residual, &b.overlaps)).collect(),
        resonances: scan.resonances.iter().map(|r| record(r.e, r.residual, &r.overlaps)).collect(),
        unresolved_cells: scan.unresolved.iter().map(|u| [u.cell_lo.re, u.cell_lo.im, u.cell_hi.re, u.cell_hi.im]).collect(),
        grid: scan.grid,
        region,
        refinements,
    };
    for r in &summary.bound_states {
        bound_tab.push(vec![r.re, r.residual, r.top_state as f64, r.top_overlap]);
    }
    for r in &summary.resonances {
        roots.push(vec![r.re, r.im, r.residual, r.top_state as f64, r.top_overlap]);
    }
    let outputs = vec![
        export(&bound_tab, &hash, "spectrum", &file(out, "bound_states", &hash, "csv"))?,
        export(&roots, &hash, "spectrum", &file(out, "roots", &hash, "csv"))?,
        export(&logdet, &hash, "spectrum", &file(out, "logdet_real", &hash, "csv"))?,
        export_json(&summary, &file(out, "spectrum", &hash, "json"))?,
    ];
    Ok((outputs, timings))
}

fn trajectories(sc: &Scenario, timings: &mut Vec<(String, f64)>) -> Result<Vec<(usize, Trajectory)>> {
    let clock = Instant::now();
    let kernel = crate::propagator::build_kernel_table(&sc.model);
    let sites = initial_sites(sc);
    let trs = sites
        .iter()
        .map(|&n0| crate::propagator::propagate_with(&sc.model, &Initial::Site(n0), &kernel).map(|t| (n0, t)))
        .collect::<Result<Vec<_>>>()?;
    timings.push(("propagate".to_string(), clock.elapsed().as_secs_f64()));
    Ok(trs)
}

fn run_evolve(sc: &Scenario, out: &Path) -> Result<Outcome> {
    let hash = sc.model.hash();
    let mut timings = Vec::new();
    let mut outputs = Vec::new();
    for (n0, tr) in trajectories(sc, &mut timings)? {
        outputs.push(export(&trajectory_table(&tr), &hash, "kernel", &file(out, &format!("trajectory_n{n0}"), &hash, "csv"))?);
        let norm: Vec<Option<f64>> = system_norm(&tr).into_iter().map(Some).collect();
        outputs.push(export(&series_table(&tr.times, &[("system_norm", norm)]), &hash, "kernel", &file(out, &format!("norm_n{n0}"), &hash, "csv"))?);
    }
    Ok((outputs, timings))
}

fn snapshot_times(sc: &Scenario) -> Vec<f64> {
    sc.run.times.clone().unwrap_or_else(|| vec![sc.model.t_max])
}

fn snapshot_region(sc: &Scenario) -> BathRegion {
    match sc.run.half_width {
        Some(h) => BathRegion::centered(sc.model.d, h as i64),
        None => BathRegion::full(&sc.model),
    }
}

fn snapshots(sc: &Scenario, tr: &Trajectory) -> Result<Vec<BathSnapshot>> {
    let region = snapshot_region(sc);
    snapshot_times(sc).iter().map(|&t| bath_snapshot(t, &region, tr)).collect()
}

#[derive(Debug, Serialize)]
struct BathSummary {
    n0: usize,
    times: Vec<f64>,
    norm_in_region: Vec<f64>,
}

fn run_bath(sc: &Scenario, out: &Path, diagonal: bool) -> Result<Outcome> {
    let hash = sc.model.hash();
    let mut timings = Vec::new();
    let mut outputs = Vec::new();
    for (n0, tr) in trajectories(sc, &mut timings)? {
        let clock = Instant::now();
        let snaps = snapshots(sc, &tr)?;
        timings.push((format!("snapshots_n{n0}"), clock.elapsed().as_secs_f64()));
        let mut table = Table::default();
        for s in &snaps {
            let t = if diagonal { diagonal_table(s) } else { snapshot_table(s) };
            if table.columns.is_empty() {
                table.columns = std::iter::once("t".to_string()).chain(t.columns).collect();
            }
            for row in t.rows {
                table.rows.push(std::iter::once(s.t).chain(row).collect());
            }
        }
        let stem = if diagonal { format!("diagonal_n{n0}") } else { format!("bath_n{n0}") };
        outputs.push(export(&table, &hash, "kernel", &file(out, &stem, &hash, "csv"))?);
        let summary = BathSummary { n0, times: snaps.iter().map(|s| s.t).collect(), norm_in_region: snaps.iter().map(|s| s.norm_in_region).collect() };
        outputs.push(export_json(&summary, &file(out, &format!("{stem}_summary"), &hash, "json"))?);
    }
    Ok((outputs, timings))
}

/// |β|² at (s, s, s) for every s in the region.
fn diagonal_table(snap: &BathSnapshot) -> Table {
    let mut t = Table::new(["s", "abs2"]);
    let lo = *snap.region.lo.iter().max().unwrap_or(&0);
    let hi = *snap.region.hi.iter().min().unwrap_or(&-1);
    for s in lo..=hi {
        if let Some(b) = snap.at(&vec![s; snap.region.dim()]) {
            t.push(vec![s as f64, b.norm_sqr()]);
        }
    }
    t
}

#[derive(Debug, Serialize)]
struct ObserveSummary {
    n0: usize,
    decay: Option<DecayReport>,
    decay_error: Option<String>,
    ipr_long_time_mean: Option<f64>,
    long_time_window: (f64, f64),
    wavefront: Option<Wavefront>,
    bath_variance_fit: Option<FitResult>,
}

fn run_observe(sc: &Scenario, out: &Path) -> Result<Outcome> {
    let cfg = &sc.model;
    let hash = cfg.hash();
    let mut timings = Vec::new();
    let mut outputs = Vec::new();
    let window = sc.run.fit_window.unwrap_or(if cfg.d == 3 { (5.0, 30.0) } else { (5.0, 100.0) });
    for (n0, tr) in trajectories(sc, &mut timings)? {
        let clock = Instant::now();
        let revival = observables::revival_probability(&tr, n0)?;
        let ipr = observables::ipr(&tr);
        let series = [
            ("revival", revival.iter().map(|v| Some(*v)).collect()),
            ("ipr", ipr.iter().map(|v| Some(*v)).collect()),
            ("ipr_normalized", observables::ipr_normalized(&tr)),
            ("position_variance", observables::position_variance(&tr)),
        ];
        outputs.push(export(&series_table(&tr.times, &series), &hash, "kernel", &file(out, &format!("observables_n{n0}"), &hash, "csv"))?);

        let mut peaks = Table::new(["n", "distance", "tau_f", "p_f"]);
        for n in 1..=cfg.n_s {
            if let Some(FirstPeak { p_f, tau_f }) = observables::first_peak_at(&tr, n)? {
                peaks.push(vec![n as f64, n.abs_diff(n0) as f64, tau_f, p_f]);
            }
        }
        outputs.push(export(&peaks, &hash, "kernel", &file(out, &format!("first_peak_n{n0}"), &hash, "csv"))?);
        let others: Vec<usize> = (1..=cfg.n_s).filter(|&n| n != n0).collect();
        let wavefront = observables::wavefront(&tr, n0, &others).ok();

        let (decay, decay_error) = match observables::decay_shape(&revival, &tr.times, window) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let long = (0.5 * cfg.t_max, cfg.t_max);
        let ipr_long_time_mean = observables::window_mean(&ipr, &tr.times, long);
        timings.push((format!("chain_observables_n{n0}"), clock.elapsed().as_secs_f64()));

        let mut bath_variance_fit = None;
        if sc.run.times.as_ref().is_some_and(|t| t.len() >= 4) {
            let clock = Instant::now();
            let snaps = snapshots(sc, &tr)?;
            let bv = observables::bath_variance(&snaps, cfg.n_b, window)?;
            outputs.push(export(
                &series_table(&bv.times, &[("bath_variance", bv.values.clone())]),
                &hash,
                "kernel",
                &file(out, &format!("bath_variance_n{n0}"), &hash, "csv"),
            )?);
            bath_variance_fit = Some(bv.fit);
            timings.push((format!("bath_variance_n{n0}"), clock.elapsed().as_secs_f64()));
        }
        let summary = ObserveSummary { n0, decay, decay_error, ipr_long_time_mean, long_time_window: long, wavefront, bath_variance_fit };
        outputs.push(export_json(&summary, &file(out, &format!("summary_n{n0}"), &hash, "json"))?);
    }
    Ok((outputs, timings))
}

#[derive(Debug, Serialize)]
pub struct OracleComparison {
    pub n0: usize,
    pub t_window: f64,
    pub max_deviation: f64,
    pub norm_drift: f64,
    pub norm_balance_end: f64,
}

pub const ORACLE_TOL: f64 = 1e-3;

/// Kernel against oracle for one initial site, over t ≤ min(t_max, 0.8 recurrence time).
pub fn compare_with_oracle(cfg: &ModelConfig, n0: usize) -> Result<(OracleComparison, Trajectory, Vec<Vec<Complex64>>)> {
    let window = cfg.t_max.min(0.8 * recurrence_time(cfg));
    let run_cfg = ModelConfig { t_max: (window / cfg.dt).floor() * cfg.dt, ..cfg.clone() };
    let tr = propagate(&run_cfg, &Initial::Site(n0))?;
    let h = build_full(&run_cfg)?;
    let exact = exact_propagate(&h, &site_state(&h, n0)?, &tr.times)?;
    let mut dev: f64 = 0.0;
    for i in 0..tr.len() {
        for n in 1..=cfg.n_s {
            dev = dev.max((tr.amp(i, n) - exact.chain_amp(i, n)).norm());
        }
    }
    let balance = norm_balance(run_cfg.t_max, &tr)?;
    let chain: Vec<Vec<Complex64>> = exact.states.iter().map(|s| s[..cfg.n_s].to_vec()).collect();
    Ok((OracleComparison { n0, t_window: run_cfg.t_max, max_deviation: dev, norm_drift: exact.norm_drift, norm_balance_end: balance }, tr, chain))
}

#[derive(Debug, Serialize)]
struct OracleReport {
    tolerance: f64,
    max_deviation: f64,
    pass: bool,
    runs: Vec<OracleComparison>,
}

fn run_oracle_check(sc: &Scenario, out: &Path) -> Result<Outcome> {
    let cfg = &sc.model;
    let hash = cfg.hash();
    let mut timings = Vec::new();
    let mut outputs = Vec::new();
    let mut runs = Vec::new();
    for n0 in initial_sites(sc) {
        let clock = Instant::now();
        let (cmp, tr, chain) = compare_with_oracle(cfg, n0)?;
        timings.push((format!("oracle_n{n0}"), clock.elapsed().as_secs_f64()));
        let oracle_traj = Trajectory { amps: chain.concat(), ..tr };
        outputs.push(export(&trajectory_table(&oracle_traj), &hash, "oracle", &file(out, &format!("oracle_trajectory_n{n0}"), &hash, "csv"))?);
        runs.push(cmp);
    }
    let max_deviation = runs.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    let report = OracleReport { tolerance: ORACLE_TOL, max_deviation, pass: max_deviation < ORACLE_TOL, runs };
    outputs.push(export_json(&report, &file(out, "oracle_check", &hash, "json"))?);
    if !report.pass {
        return Err(Error::Numerics(format!("kernel deviates from the oracle by {max_deviation:e} (tolerance {ORACLE_TOL:e})")));
    }
    Ok((outputs, timings))
}
