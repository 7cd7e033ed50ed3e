//! Plain-text tables and JSON records written atomically.
//!
//! A table file starts with a comment line carrying the config hash and the
//! producing method, then a comma-separated header, then one row per record.
//! Numbers are printed in `{:.16e}` form, which round-trips every f64.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bath::BathSnapshot;
use crate::error::{Error, Result};
use crate::propagator::Trajectory;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Table {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, cfg_hash: &str, method: &str) -> String {
        let mut s = format!("# cfg_hash={cfg_hash} method={method}\n{}\n", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| fmt_num(*v)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// 17 significant digits; NaN marks a gap in a series.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

/// Writes to a sibling temporary file, then renames over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let name = path.file_name().ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn export(table: &Table, cfg_hash: &str, method: &str, path: &Path) -> Result<PathBuf> {
    write_atomic(path, table.render(cfg_hash, method).as_bytes())?;
    Ok(path.to_path_buf())
}

pub fn export_json<T: Serialize>(value: &T, path: &Path) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(path.to_path_buf())
}

/// (t, Re α_1, Im α_1, …, Re α_N, Im α_N).
pub fn trajectory_table(traj: &Trajectory) -> Table {
    let mut cols = vec!["t".to_string()];
    for n in 1..=traj.n_s {
        cols.push(format!("re_a{n}"));
        cols.push(format!("im_a{n}"));
    }
    let mut t = Table::new(cols);
    for i in 0..traj.len() {
        let mut row = Vec::with_capacity(1 + 2 * traj.n_s);
        row.push(traj.times[i]);
        for a in traj.row(i) {
            row.push(a.re);
            row.push(a.im);
        }
        t.push(row);
    }
    t
}

/// Coordinates followed by |β_r|², one row per site of the region.
pub fn snapshot_table(snap: &BathSnapshot) -> Table {
    let axes = ["x", "y", "z"];
    let mut cols: Vec<String> = (0..snap.region.dim()).map(|q| axes.get(q).map(|s| s.to_string()).unwrap_or(format!("x{q}"))).collect();
    cols.push("abs2".into());
    let mut t = Table::new(cols);
    for (i, b) in snap.field.iter().enumerate() {
        let mut row: Vec<f64> = snap.region.point(i).iter().map(|&v| v as f64).collect();
        row.push(b.norm_sqr());
        t.push(row);
    }
    t
}

/// A time column followed by named series; `None` entries become NaN.
pub fn series_table(times: &[f64], series: &[(&str, Vec<Option<f64>>)]) -> Table {
    let mut cols = vec!["t".to_string()];
    cols.extend(series.iter().map(|(n, _)| n.to_string()));
    let mut t = Table::new(cols);
    for (i, &time) in times.iter().enumerate() {
        let mut row = vec![time];
        row.extend(series.iter().map(|(_, v)| v.get(i).copied().flatten().unwrap_or(f64::NAN)));
        t.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathRegion;
    use crate::config::ModelConfig;
    use num_complex::Complex64;

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(["t", "value"]);
        assert_eq!(t.render("abc", "kernel"), "# cfg_hash=abc method=kernel\nt,value\n");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02e23, std::f64::consts::PI] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_num(f64::NAN), "nan");
    }

    #[test]
    fn trajectory_and_snapshot_shapes() {
        let cfg = ModelConfig { n_s: 3, t_max: 2.0, dt: 1.0, ..ModelConfig::default() };
        let traj = Trajectory { times: vec![0.0, 1.0, 2.0], n_s: 3, amps: vec![Complex64::new(0.5, 0.0); 9], cfg };
        let t = trajectory_table(&traj);
        assert_eq!(t.rows.len(), 3);
        assert!(t.rows.iter().all(|r| r.len() == 7));
        let region = BathRegion::centered(2, 1);
        let snap = BathSnapshot { t: 1.0, field: vec![Complex64::new(0.0, 1.0); region.len()], region, norm_in_region: 9.0 };
        let s = snapshot_table(&snap);
        assert_eq!(s.columns, ["x", "y", "abs2"]);
        assert_eq!(s.rows.len(), 9);
        assert_eq!(s.rows[0], vec![-1.0, -1.0, 1.0]);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("a.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
