//! File formats: tabulated charts, current-source polylines, operator
//! triplet dumps, and report writers. Every writer goes through
//! [`atomic_write`] (temp file + rename) so partially written artifacts
//! never appear under their final name.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assembly::{DiscreteOperator, OperatorMetadata, SurfaceGrid};
use crate::em::CurrentSource;
use crate::err::{Error, Result};
use crate::geometry::SurfaceChart;
use crate::solve::SpectrumResult;
use crate::sparse::CsrMatrix;

type C = Complex64;

/// Write `bytes` to `path` atomically (same-directory temp + rename).
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, &e))?;
    let mut tmp: PathBuf = path.to_path_buf();
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    tmp.set_file_name(name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, &e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, &e))?;
    Ok(())
}

/// Serialize pretty JSON to `path` atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::io(path, &e))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

fn parse_field(raw: &str, path: &Path, line: usize, col: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| {
        Error::io(path, &format!("line {line}: column {col} is not a number: {raw:?}"))
    })?;
    if !v.is_finite() {
        return Err(Error::io(path, &format!("line {line}: column {col} is not finite")));
    }
    Ok(v)
}

/// Load a tabulated chart from CSV with columns `u,v,x,y,z`.
///
/// Rows may appear in any order but must fill a complete regular
/// lattice in `(u, v)`; coordinates that are supposed to coincide must
/// be written identically. `periodic` marks directions that wrap (the
/// last lattice column/row is then one step short of the first).
pub fn load_chart_csv(path: &Path, periodic: [bool; 2], label: &str) -> Result<SurfaceChart> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, &e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::io(path, &e))?.clone();
    let want = ["u", "v", "x", "y", "z"];
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(want) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::io(path, &format!("missing column {name:?}")))?;
    }
    let mut rows: Vec<(f64, f64, Vector3<f64>)> = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::io(path, &e))?;
        let line = n + 2;
        let mut vals = [0.0f64; 5];
        for (slot, &col) in vals.iter_mut().zip(&idx) {
            let raw = record
                .get(col)
                .ok_or_else(|| Error::io(path, &format!("line {line}: short record")))?;
            *slot = parse_field(raw, path, line, want[idx.iter().position(|&c| c == col).unwrap()])?;
        }
        rows.push((vals[0], vals[1], Vector3::new(vals[2], vals[3], vals[4])));
    }
    if rows.is_empty() {
        return Err(Error::io(path, &"no data rows"));
    }

    let axis = |pick: fn(&(f64, f64, Vector3<f64>)) -> f64| -> Vec<f64> {
        let mut vals: Vec<f64> = rows.iter().map(pick).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        vals
    };
    let us = axis(|r| r.0);
    let vs = axis(|r| r.1);
    let (n_u, n_v) = (us.len(), vs.len());
    if n_u * n_v != rows.len() {
        return Err(Error::GridMismatch(format!(
            "{} rows do not fill a {n_u} x {n_v} lattice",
            rows.len()
        )));
    }
    for (name, vals) in [("u", &us), ("v", &vs)] {
        if vals.len() < 4 {
            return Err(Error::GridTooCoarse(format!(
                "chart table needs at least 4 distinct {name} values, got {}",
                vals.len()
            )));
        }
        let h = vals[1] - vals[0];
        let span = vals[vals.len() - 1] - vals[0];
        for w in vals.windows(2) {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * span.abs().max(1.0) {
                return Err(Error::GridMismatch(format!(
                    "{name} values are not uniformly spaced"
                )));
            }
        }
    }
    let mut points = vec![Vector3::zeros(); n_u * n_v];
    let mut seen = vec![false; n_u * n_v];
    for (u, v, p) in rows {
        let iu = us.binary_search_by(|x| x.partial_cmp(&u).unwrap()).map_err(|_| {
            Error::GridMismatch(format!("u = {u} does not sit on the lattice"))
        })?;
        let iv = vs.binary_search_by(|x| x.partial_cmp(&v).unwrap()).map_err(|_| {
            Error::GridMismatch(format!("v = {v} does not sit on the lattice"))
        })?;
        let i = iv * n_u + iu;
        if seen[i] {
            return Err(Error::GridMismatch(format!("duplicate lattice point ({u}, {v})")));
        }
        seen[i] = true;
        points[i] = p;
    }
    let table = crate::geometry::ChartTable {
        n_u,
        n_v,
        u0: us[0],
        v0: vs[0],
        du: us[1] - us[0],
        dv: vs[1] - vs[0],
        points,
    };
    SurfaceChart::from_table(label, table, periodic)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceSidecar {
    current: f64,
    #[serde(default)]
    closed: bool,
}

/// Load a polyline current source: CSV with columns `x,y,z` plus a JSON
/// sidecar (same stem, `.json`) holding `{"current": I, "closed": bool}`.
pub fn load_current_source(csv_path: &Path) -> Result<CurrentSource> {
    let text = fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, &e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::io(csv_path, &e))?.clone();
    let mut idx = [0usize; 3];
    for (slot, name) in idx.iter_mut().zip(["x", "y", "z"]) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::io(csv_path, &format!("missing column {name:?}")))?;
    }
    let mut points = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::io(csv_path, &e))?;
        let line = n + 2;
        let mut p = [0.0f64; 3];
        for (k, (slot, &col)) in p.iter_mut().zip(&idx).enumerate() {
            let raw = record
                .get(col)
                .ok_or_else(|| Error::io(csv_path, &format!("line {line}: short record")))?;
            *slot = parse_field(raw, csv_path, line, ["x", "y", "z"][k])?;
        }
        points.push(Vector3::new(p[0], p[1], p[2]));
    }
    let sidecar_path = csv_path.with_extension("json");
    let sidecar_text =
        fs::read_to_string(&sidecar_path).map_err(|e| Error::io(&sidecar_path, &e))?;
    let sidecar: SourceSidecar = serde_json::from_str(&sidecar_text)
        .map_err(|e| Error::io(&sidecar_path, &e))?;
    if !sidecar.current.is_finite() {
        return Err(Error::io(&sidecar_path, &"current must be finite"));
    }
    let source =
        CurrentSource { points, current: sidecar.current, closed: sidecar.closed };
    source.validate()?;
    Ok(source)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorHeader {
    dim: usize,
    nnz: usize,
    weights: Vec<f64>,
    meta: OperatorMetadata,
}

/// Dump an operator as `<stem>.json` (header) + `<stem>.csv`
/// (triplets `row,col,re,im`).
pub fn write_operator(op: &DiscreteOperator, dir: &Path, stem: &str) -> Result<()> {
    let header = OperatorHeader {
        dim: op.dim(),
        nnz: op.matrix.nnz(),
        weights: op.weights.clone(),
        meta: op.meta.clone(),
    };
    write_json(&dir.join(format!("{stem}.json")), &header)?;
    let mut text = String::from("row,col,re,im\n");
    for i in 0..op.dim() {
        let (cols, vals) = op.matrix.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            text.push_str(&format!("{i},{j},{:e},{:e}\n", v.re, v.im));
        }
    }
    atomic_write(&dir.join(format!("{stem}.csv")), text.as_bytes())
}

/// Read an operator triplet dump back (inverse of [`write_operator`]).
pub fn read_operator(dir: &Path, stem: &str) -> Result<DiscreteOperator> {
    let json_path = dir.join(format!("{stem}.json"));
    let text = fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, &e))?;
    let header: OperatorHeader =
        serde_json::from_str(&text).map_err(|e| Error::io(&json_path, &e))?;
    if header.weights.len() != header.dim {
        return Err(Error::ShapeMismatch(format!(
            "header lists {} weights for dimension {}",
            header.weights.len(),
            header.dim
        )));
    }
    if header.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::ShapeMismatch("weights must be positive and finite".into()));
    }
    let csv_path = dir.join(format!("{stem}.csv"));
    let body = fs::read_to_string(&csv_path).map_err(|e| Error::io(&csv_path, &e))?;
    let mut reader =
        csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
    let mut triplets = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::io(&csv_path, &e))?;
        let line = n + 2;
        if record.len() < 4 {
            return Err(Error::io(&csv_path, &format!("line {line}: short record")));
        }
        let row: usize = record[0]
            .parse()
            .map_err(|_| Error::io(&csv_path, &format!("line {line}: bad row index")))?;
        let col: usize = record[1]
            .parse()
            .map_err(|_| Error::io(&csv_path, &format!("line {line}: bad col index")))?;
        let re = parse_field(&record[2], &csv_path, line, "re")?;
        let im = parse_field(&record[3], &csv_path, line, "im")?;
        triplets.push((row, col, C::new(re, im)));
    }
    let matrix = CsrMatrix::from_triplets(header.dim, triplets)?;
    Ok(DiscreteOperator { matrix, weights: header.weights, meta: header.meta })
}

/// `spectrum.csv`: one row per eigenvalue.
pub fn write_spectrum_csv(result: &SpectrumResult, path: &Path) -> Result<()> {
    let mut text = String::from("index,re,im,residual,converged,cluster\n");
    let mut cluster_of = vec![0usize; result.eigenvalues.len()];
    for (c, group) in result.clusters.iter().enumerate() {
        for &i in group {
            cluster_of[i] = c;
        }
    }
    for (i, v) in result.eigenvalues.iter().enumerate() {
        text.push_str(&format!(
            "{i},{:.17e},{:.17e},{:.3e},{},{}\n",
            v.re, v.im, result.residuals[i], result.converged[i], cluster_of[i]
        ));
    }
    atomic_write(path, text.as_bytes())
}

/// One eigenvector as a CSV grid; `coords` supplies the per-node
/// coordinate columns (already formatted), matching `header`.
pub fn write_eigenvector_csv(
    path: &Path,
    header: &str,
    coords: &[String],
    vector: &[C],
) -> Result<()> {
    if coords.len() != vector.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} coordinate rows for {} amplitudes",
            coords.len(),
            vector.len()
        )));
    }
    let mut text = format!("{header},re,im\n");
    for (c, v) in coords.iter().zip(vector) {
        text.push_str(&format!("{c},{:.17e},{:.17e}\n", v.re, v.im));
    }
    atomic_write(path, text.as_bytes())
}

/// `geometry.csv`: per-node curvature data, plus a summary with
/// min/max/mean per column.
pub fn write_geometry_csv(grid: &SurfaceGrid, mass: f64, path: &Path) -> Result<()> {
    let mut text = String::from("u,v,M,K_gauss,V0,det_g\n");
    for s in &grid.samples {
        let v0 = crate::geometry::geometric_potential(s, mass);
        text.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            s.u, s.v, s.mean_curv, s.gauss_curv, v0, s.det_g
        ));
    }
    atomic_write(path, text.as_bytes())
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

pub fn summarize(values: impl Iterator<Item = f64>) -> ColumnSummary {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        min = min.min(v);
        max = max.max(v);
        sum += v;
        n += 1;
    }
    ColumnSummary { min, max, mean: if n > 0 { sum / n as f64 } else { f64::NAN } }
}

/// Hex SHA-256 of a file's bytes (manifest bookkeeping).
pub fn file_digest(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    let bytes = fs::read(path).map_err(|e| Error::io(path, &e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex::encode(&hasher.finalize()[..16]))
}
