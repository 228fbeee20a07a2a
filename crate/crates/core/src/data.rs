//! Spectra, reference targets, CSV ingestion and cross-validation folds.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const TARGET_NAMES: [&str; 3] = ["water", "protein", "lipids_yield"];
pub const N_TARGETS: usize = 3;

/// Strictly monotonic wavenumber axis in cm⁻¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WavenumberAxis(Vec<f64>);

impl WavenumberAxis {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "wavenumber axis needs at least 3 points, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "wavenumber axis contains non-finite value {v}"
            )));
        }
        let increasing = values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::InvalidArgument(
                "wavenumber axis must be strictly monotonic".into(),
            ));
        }
        Ok(Self(values))
    }

    /// `n` evenly spaced points from `start` to `end` inclusive.
    pub fn linspace(start: f64, end: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Self::new(vec![start; n]);
        }
        let step = (end - start) / (n - 1) as f64;
        let mut v: Vec<f64> = (0..n).map(|i| start + step * i as f64).collect();
        v[n - 1] = end;
        Self::new(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for WavenumberAxis {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WavenumberAxis> for Vec<f64> {
    fn from(a: WavenumberAxis) -> Self {
        a.0
    }
}

/// `n_samples × n_features` intensities stored row-major, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMatrix {
    axis: WavenumberAxis,
    data: Vec<f64>,
    sample_ids: Vec<String>,
}

impl SpectralMatrix {
    pub fn new(axis: WavenumberAxis, data: Vec<f64>, sample_ids: Vec<String>) -> Result<Self> {
        let f = axis.len();
        if data.len() != f * sample_ids.len() {
            return Err(Error::Shape(format!(
                "{} values for {} samples × {} features",
                data.len(),
                sample_ids.len(),
                f
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite intensity at sample {}, feature {}",
                pos / f,
                pos % f
            )));
        }
        let mut seen = HashSet::with_capacity(sample_ids.len());
        for id in &sample_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate sample id `{id}`")));
            }
        }
        Ok(Self {
            axis,
            data,
            sample_ids,
        })
    }

    pub fn from_rows(axis: WavenumberAxis, rows: &[Vec<f64>], sample_ids: Vec<String>) -> Result<Self> {
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != axis.len()) {
            return Err(Error::Shape(format!(
                "row {i} has {} values, axis has {}",
                r.len(),
                axis.len()
            )));
        }
        Self::new(axis, rows.concat(), sample_ids)
    }

    pub fn axis(&self) -> &WavenumberAxis {
        &self.axis
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.axis.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let f = self.n_features();
        &self.data[i * f..(i + 1) * f]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.n_features())
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.n_features());
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            axis: self.axis.clone(),
            data,
            sample_ids: indices.iter().map(|&i| self.sample_ids[i].clone()).collect(),
        }
    }

    /// Same samples and axis, new values. Values are validated for finiteness.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Self::new(self.axis.clone(), data, self.sample_ids.clone())
    }

    /// Applies `f` to every row; output rows must keep the feature count.
    pub fn map_rows<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        let mut data = Vec::with_capacity(self.data.len());
        for (i, row) in self.rows().enumerate() {
            let out = f(row)?;
            if out.len() != self.n_features() {
                return Err(Error::Shape(format!(
                    "row transform changed length of row {i}: {} → {}",
                    row.len(),
                    out.len()
                )));
            }
            data.extend(out);
        }
        self.with_data(data)
    }
}

/// Reference values (water, protein, lipids yield) in percent of total weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetMatrix {
    rows: Vec<[f64; N_TARGETS]>,
}

impl TargetMatrix {
    pub fn new(rows: Vec<[f64; N_TARGETS]>) -> Result<Self> {
        if let Some(i) = rows.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidArgument(format!("non-finite target in row {i}")));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[[f64; N_TARGETS]] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            rows: indices.iter().map(|&i| self.rows[i]).collect(),
        }
    }
}

/// Spectra paired with their reference targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: SpectralMatrix,
    pub y: TargetMatrix,
}

impl Dataset {
    pub fn new(x: SpectralMatrix, y: TargetMatrix) -> Result<Self> {
        if x.n_samples() != y.len() {
            return Err(Error::Shape(format!(
                "{} spectra but {} target rows",
                x.n_samples(),
                y.len()
            )));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            x: self.x.select(indices),
            y: self.y.select(indices),
        }
    }
}

fn parse_cell(path: &str, line: u64, col: usize, cell: &str) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
        path: path.to_string(),
        line,
        message: format!("column {}: `{cell}` is not a number", col + 1),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            path: path.to_string(),
            line,
            message: format!("column {}: non-finite value `{cell}`", col + 1),
        });
    }
    Ok(v)
}

struct CsvTable {
    header: Vec<String>,
    /// (line number, id, numeric cells)
    rows: Vec<(u64, String, Vec<f64>)>,
}

fn read_table(path: &Path) -> Result<CsvTable> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let mut records = reader.records();
    let header: Vec<String> = match records.next() {
        Some(rec) => rec?.iter().map(|s| s.trim().to_string()).collect(),
        None => return Err(Error::EmptyDataset),
    };
    if header.first().map(String::as_str) != Some("sample_id") {
        return Err(Error::Parse {
            path: display,
            line: 1,
            message: "header must start with `sample_id`".into(),
        });
    }
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::Parse {
                path: display,
                line,
                message: format!("expected {} columns, found {}", header.len(), rec.len()),
            });
        }
        let id = rec[0].trim().to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                path: display,
                line,
                message: "empty sample_id".into(),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId {
                path: display,
                line,
                id,
            });
        }
        let values = rec
            .iter()
            .enumerate()
            .skip(1)
            .map(|(c, cell)| parse_cell(&display, line, c, cell))
            .collect::<Result<Vec<_>>>()?;
        rows.push((line, id, values));
    }
    Ok(CsvTable { header, rows })
}

/// Reads an X/Y CSV pair and pairs rows by `sample_id` in X file order.
pub fn load_dataset(x_path: impl AsRef<Path>, y_path: impl AsRef<Path>) -> Result<Dataset> {
    let (x_path, y_path) = (x_path.as_ref(), y_path.as_ref());
    let xt = read_table(x_path)?;
    let axis_values = xt.header[1..]
        .iter()
        .enumerate()
        .map(|(c, h)| parse_cell(&x_path.display().to_string(), 1, c + 1, h))
        .collect::<Result<Vec<_>>>()?;
    let axis = WavenumberAxis::new(axis_values).map_err(|e| Error::Parse {
        path: x_path.display().to_string(),
        line: 1,
        message: e.to_string(),
    })?;
    if xt.rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let yt = read_table(y_path)?;
    let expected = ["sample_id", "water", "protein", "lipids_yield"];
    if yt.header != expected {
        return Err(Error::Parse {
            path: y_path.display().to_string(),
            line: 1,
            message: format!("header must be `{}`", expected.join(",")),
        });
    }
    let mut by_id: HashMap<&str, [f64; N_TARGETS]> = HashMap::with_capacity(yt.rows.len());
    for (_, id, v) in &yt.rows {
        by_id.insert(id.as_str(), [v[0], v[1], v[2]]);
    }

    let mut ids = Vec::with_capacity(xt.rows.len());
    let mut data = Vec::with_capacity(xt.rows.len() * axis.len());
    let mut targets = Vec::with_capacity(xt.rows.len());
    for (_, id, values) in &xt.rows {
        let t = by_id
            .remove(id.as_str())
            .ok_or_else(|| Error::MissingTarget(id.clone()))?;
        targets.push(t);
        data.extend_from_slice(values);
        ids.push(id.clone());
    }
    if let Some((_, id, _)) = yt.rows.iter().find(|(_, id, _)| by_id.contains_key(id.as_str())) {
        return Err(Error::UnmatchedTarget(id.clone()));
    }
    Dataset::new(
        SpectralMatrix::new(axis, data, ids)?,
        TargetMatrix::new(targets)?,
    )
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_spectra(x: &SpectralMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    write!(w, "sample_id").map_err(io)?;
    for v in x.axis().values() {
        write!(w, ",{}", fmt_f64(*v)).map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for (id, row) in x.sample_ids().iter().zip(x.rows()) {
        write!(w, "{id}").map_err(io)?;
        for v in row {
            write!(w, ",{}", fmt_f64(*v)).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_targets(ids: &[String], y: &TargetMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "sample_id,{}", TARGET_NAMES.join(",")).map_err(io)?;
    for (id, r) in ids.iter().zip(y.rows()) {
        writeln!(w, "{id},{},{},{}", fmt_f64(r[0]), fmt_f64(r[1]), fmt_f64(r[2])).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_dataset(ds: &Dataset, x_path: impl AsRef<Path>, y_path: impl AsRef<Path>) -> Result<()> {
    write_spectra(&ds.x, x_path)?;
    write_targets(ds.x.sample_ids(), &ds.y, y_path)
}

/// Assignment of samples to `k` cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldSplit {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &a in &self.assignments {
            s[a] += 1;
        }
        s
    }
}

/// Shuffles `0..n` with the seeded stream and deals positions round-robin, so
/// the first `n % k` folds hold one extra sample.
pub fn split_folds(n_samples: usize, k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("fold count must be ≥ 2, got {k}")));
    }
    if k > n_samples {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n_samples} samples into {k} folds"
        )));
    }
    let perm = rng::permutation(n_samples, seed);
    let mut assignments = vec![0; n_samples];
    for (pos, &sample) in perm.iter().enumerate() {
        assignments[sample] = pos % k;
    }
    Ok(FoldSplit {
        k,
        assignments,
        seed,
    })
}
