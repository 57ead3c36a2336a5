//! CSV and JSON formats for paths, sheets and experiment tables.
//!
//! Floats are written with 17 significant digits, enough to round-trip
//! every `f64` exactly.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chain::ChainIntegralResult;
use crate::error::{Error, Result};
use crate::paths::{PathMeta, SampledPath};
use crate::scaling::StripReport;
use crate::sheet::{jacobian, SheetGrid};
use crate::spectral::AlgassReport;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Metadata written next to a path CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSidecar {
    pub generator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(rename = "N")]
    pub n_steps: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<String>,
}

impl PathSidecar {
    pub fn of(path: &SampledPath) -> Self {
        Self {
            generator: path.meta.generator.clone(),
            seed: path.meta.seed,
            hurst: path.meta.hurst,
            n_steps: path.n_steps(),
            horizon: path.horizon(),
            dim: path.dim(),
            descriptor: path.meta.descriptor.clone(),
        }
    }

    pub fn meta(&self) -> PathMeta {
        PathMeta {
            generator: self.generator.clone(),
            seed: self.seed,
            hurst: self.hurst,
            descriptor: self.descriptor.clone(),
        }
    }
}

pub fn write_path_csv<W: Write>(path: &SampledPath, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_owned()];
    header.extend((1..=path.dim()).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for (j, p) in path.points().enumerate() {
        let mut row = vec![fmt_f64(path.time(j))];
        row.extend(p.iter().map(|&v| fmt_f64(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a path CSV. Times must be `j·T/N` up to rounding.
pub fn read_path_csv<R: Read>(input: R, meta: PathMeta) -> Result<SampledPath> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let dim = header.len().saturating_sub(1);
    if header.get(0) != Some("t") || dim == 0 {
        return Err(Error::InvalidParameter("path CSV header must be t,x1,...,xd".into()));
    }
    let mut times = Vec::new();
    let mut data = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::InvalidParameter(format!("bad number {s:?}: {e}")));
        times.push(parse(&rec[0])?);
        for c in 1..=dim {
            data.push(parse(&rec[c])?);
        }
    }
    let n = times.len().saturating_sub(1);
    let horizon = *times.last().ok_or_else(|| Error::InvalidParameter("empty path CSV".into()))?;
    for (j, &t) in times.iter().enumerate() {
        let expect = horizon * j as f64 / n.max(1) as f64;
        if (t - expect).abs() > 1e-9 * horizon.abs().max(1.0) {
            return Err(Error::InvalidParameter(format!("row {j}: time {t} is not on a uniform grid from 0")));
        }
    }
    SampledPath::new(dim, horizon, data, meta)
}

/// Write `stem.csv` and the `stem.json` sidecar; returns both paths.
pub fn save_path(path: &SampledPath, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    let csv_path = stem.with_extension("csv");
    let json_path = stem.with_extension("json");
    write_path_csv(path, File::create(&csv_path)?)?;
    write_json(&PathSidecar::of(path), &json_path)?;
    Ok((csv_path, json_path))
}

/// Load a path CSV, taking metadata from the sidecar when one exists.
pub fn load_path(csv_path: &Path) -> Result<SampledPath> {
    let json_path = csv_path.with_extension("json");
    let meta = if json_path.exists() {
        let side: PathSidecar = serde_json::from_reader(File::open(&json_path)?)?;
        side.meta()
    } else {
        PathMeta::tagged("file")
    };
    let path = read_path_csv(File::open(csv_path)?, meta)?;
    Ok(path)
}

pub fn write_json<T: Serialize>(value: &T, file: &Path) -> Result<()> {
    let mut f = File::create(file)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// One row per cached node: `t,alpha,x1..xd,dt1..dtd,da1..dad,Jf`.
pub fn write_sheet_csv<W: Write>(grid: &SheetGrid, out: W) -> Result<()> {
    let d = grid.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_owned(), "alpha".to_owned()];
    for prefix in ["x", "dt", "da"] {
        header.extend((1..=d).map(|i| format!("{prefix}{i}")));
    }
    header.push("Jf".into());
    w.write_record(&header)?;
    let h = grid.step();
    for (m, &alpha) in grid.alphas().iter().enumerate() {
        for j in 0..grid.n_times() {
            let (dt, da) = (grid.dt(m, j), grid.dalpha(m, j));
            let mut row = vec![fmt_f64(j as f64 * h), fmt_f64(alpha)];
            row.extend(grid.value(m, j).iter().chain(dt).chain(da).map(|&v| fmt_f64(v)));
            row.push(fmt_f64(jacobian(dt, da)?));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `alpha,curve_integral` pairs of a chain integral.
pub fn write_convergence_csv<W: Write>(result: &ChainIntegralResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "curve_integral"])?;
    for (a, v) in result.alphas.iter().zip(&result.curve_integrals) {
        w.write_record([fmt_f64(*a), fmt_f64(*v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_algass_csv<W: Write>(report: &AlgassReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "moment", "stderr", "left_moment", "left_stderr", "gap", "gap_stderr", "nodes"])?;
    for r in &report.rows {
        let mut row: Vec<String> = [r.k_norm, r.mean_sq, r.stderr, r.left_mean_sq, r.left_stderr, r.gap, r.gap_stderr]
            .iter()
            .map(|&v| fmt_f64(v))
            .collect();
        row.push(r.nodes.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `n,total,stderr,square_mean,square_stderr`, one row per strip.
pub fn write_strip_csv<W: Write>(report: &StripReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "total", "stderr", "square_mean", "square_stderr"])?;
    for n in 0..report.totals.len() {
        let vals = [report.totals[n], report.total_stderr[n], report.square_means[n], report.square_stderr[n]];
        let mut row = vec![n.to_string()];
        row.extend(vals.iter().map(|&v| fmt_f64(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
