//! Row-wise spectral preprocessing, global scaling and the preprocessing
//! design matrix.
//!
//! A [`Pipeline`] holds at most one step from each family, always in the
//! order baseline → scatter → derivative → scaling. Row steps are stateless;
//! global scaling is fitted on the training partition only.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::SpectralMatrix;
use crate::error::{Error, Result};

/// Rows whose sample standard deviation is at or below this are rejected by SNV.
pub const SNV_MIN_STD: f64 = 1e-12;

pub const FIRST_DERIVATIVE_WINDOWS: [usize; 6] = [5, 9, 13, 17, 21, 25];
pub const SECOND_DERIVATIVE_WINDOWS: [usize; 8] = [13, 15, 17, 19, 21, 23, 25, 31];

/// Savitzky–Golay derivative parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SgDerivative {
    pub order: usize,
    pub window: usize,
    pub polyorder: usize,
}

impl SgDerivative {
    /// Uses polyorder 2 for first and 3 for second derivatives.
    pub fn with_default_polyorder(order: usize, window: usize) -> Result<Self> {
        let polyorder = match order {
            1 => 2,
            2 => 3,
            _ => return Err(Error::InvalidArgument(format!("derivative order must be 1 or 2, got {order}"))),
        };
        Self::new(order, window, polyorder)
    }

    pub fn new(order: usize, window: usize, polyorder: usize) -> Result<Self> {
        if !(order == 1 || order == 2) {
            return Err(Error::InvalidArgument(format!("derivative order must be 1 or 2, got {order}")));
        }
        if window % 2 == 0 {
            return Err(Error::InvalidArgument(format!("window must be odd, got {window}")));
        }
        if polyorder < order {
            return Err(Error::InvalidArgument(format!(
                "polyorder {polyorder} is below derivative order {order}"
            )));
        }
        if window < polyorder + 1 {
            return Err(Error::InvalidArgument(format!(
                "window {window} too small for polyorder {polyorder}"
            )));
        }
        Ok(Self {
            order,
            window,
            polyorder,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum PreprocStep {
    LinearBaseline,
    Snv,
    Derivative(SgDerivative),
    GlobalScale,
}

impl PreprocStep {
    fn family(&self) -> usize {
        match self {
            PreprocStep::LinearBaseline => 0,
            PreprocStep::Snv => 1,
            PreprocStep::Derivative(_) => 2,
            PreprocStep::GlobalScale => 3,
        }
    }

    pub fn is_row_step(&self) -> bool {
        !matches!(self, PreprocStep::GlobalScale)
    }

    /// Applies a row-wise step to every row. Global scaling is not a row step.
    pub fn apply_rows(&self, x: &SpectralMatrix) -> Result<SpectralMatrix> {
        match self {
            PreprocStep::LinearBaseline => x.map_rows(linear_baseline),
            PreprocStep::Snv => x.map_rows(snv),
            PreprocStep::Derivative(d) => savgol_derivative(x, d.order, d.window, d.polyorder),
            PreprocStep::GlobalScale => Err(Error::InvalidArgument(
                "global scaling must be fitted, not applied row-wise".into(),
            )),
        }
    }
}

impl fmt::Display for PreprocStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreprocStep::LinearBaseline => f.write_str("LB"),
            PreprocStep::Snv => f.write_str("SNV"),
            PreprocStep::Derivative(d) => write!(f, "D{}w{}p{}", d.order, d.window, d.polyorder),
            PreprocStep::GlobalScale => f.write_str("GS"),
        }
    }
}

impl FromStr for PreprocStep {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "LB" => Ok(PreprocStep::LinearBaseline),
            "SNV" => Ok(PreprocStep::Snv),
            "GS" => Ok(PreprocStep::GlobalScale),
            t if t.starts_with('D') => {
                let bad = || Error::InvalidArgument(format!("malformed derivative step `{t}`"));
                let rest = &t[1..];
                let (order, rest) = rest.split_once('w').ok_or_else(bad)?;
                let order: usize = order.parse().map_err(|_| bad())?;
                match rest.split_once('p') {
                    Some((w, p)) => SgDerivative::new(
                        order,
                        w.parse().map_err(|_| bad())?,
                        p.parse().map_err(|_| bad())?,
                    ),
                    None => SgDerivative::with_default_polyorder(order, rest.parse().map_err(|_| bad())?),
                }
                .map(PreprocStep::Derivative)
            }
            other => Err(Error::InvalidArgument(format!("unknown preprocessing step `{other}`"))),
        }
    }
}

impl From<PreprocStep> for String {
    fn from(s: PreprocStep) -> Self {
        s.to_string()
    }
}

impl TryFrom<String> for PreprocStep {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// An ordered preprocessing procedure. `id` is the design-matrix row, if any.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pipeline {
    pub id: Option<u32>,
    steps: Vec<PreprocStep>,
}

impl Pipeline {
    pub fn new(id: Option<u32>, steps: Vec<PreprocStep>) -> Result<Self> {
        for w in steps.windows(2) {
            if w[0].family() >= w[1].family() {
                return Err(Error::InvalidArgument(format!(
                    "step `{}` cannot follow `{}`: order is baseline, scatter, derivative, scaling with one step per family",
                    w[1], w[0]
                )));
            }
        }
        Ok(Self { id, steps })
    }

    pub fn raw() -> Self {
        Self {
            id: Some(1),
            steps: Vec::new(),
        }
    }

    pub fn steps(&self) -> &[PreprocStep] {
        &self.steps
    }

    pub fn has_global_scale(&self) -> bool {
        self.steps.contains(&PreprocStep::GlobalScale)
    }

    /// Row-wise steps only (everything except global scaling).
    pub fn row_steps(&self) -> impl Iterator<Item = &PreprocStep> {
        self.steps.iter().filter(|s| s.is_row_step())
    }

    /// Pipeline from its design-matrix id (1..=64) or its text form.
    pub fn resolve(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if let Ok(id) = spec.parse::<u32>() {
            return design_matrix()
                .into_iter()
                .find(|p| p.id == Some(id))
                .ok_or_else(|| Error::InvalidArgument(format!("pipeline id must be in 1..=64, got {id}")));
        }
        spec.parse()
    }
}

/// Text form `LB|SNV|D1w5p2|GS`; the empty pipeline prints as `raw`.
impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            return f.write_str("raw");
        }
        let parts: Vec<String> = self.steps.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("|"))
    }
}

impl FromStr for Pipeline {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s.eq_ignore_ascii_case("raw") {
            return Pipeline::new(None, Vec::new());
        }
        let steps = s.split('|').map(str::parse).collect::<Result<Vec<_>>>()?;
        Pipeline::new(None, steps)
    }
}

/// Subtracts the straight line through the first and last points.
pub fn linear_baseline(row: &[f64]) -> Result<Vec<f64>> {
    let n = row.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "linear baseline needs at least 2 points, got {n}"
        )));
    }
    let (a, b) = (row[0], row[n - 1]);
    let last = (n - 1) as f64;
    Ok(row
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let t = i as f64 / last;
            x - (a * (1.0 - t) + b * t)
        })
        .collect())
}

/// Standard normal variate: centre on the row mean, divide by the sample
/// standard deviation (n − 1 divisor).
pub fn snv(row: &[f64]) -> Result<Vec<f64>> {
    let n = row.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("SNV needs at least 2 points, got {n}")));
    }
    let mean = row.iter().sum::<f64>() / n as f64;
    let ss: f64 = row.iter().map(|x| (x - mean).powi(2)).sum();
    let std = (ss / (n - 1) as f64).sqrt();
    if !(std > SNV_MIN_STD) {
        return Err(Error::ZeroVariance(format!("row standard deviation {std:e}")));
    }
    Ok(row.iter().map(|x| (x - mean) / std).collect())
}

/// Convolution weights of a Savitzky–Golay derivative filter.
///
/// `weights[z]` evaluates the derivative of the window's least-squares
/// polynomial at offset `z − half` from the window centre, so
/// `weights[half]` is the classic central filter and the other offsets serve
/// the edges.
#[derive(Debug, Clone)]
pub struct SavgolKernel {
    window: usize,
    weights: Vec<Vec<f64>>,
}

impl SavgolKernel {
    pub fn new(order: usize, window: usize, polyorder: usize) -> Result<Self> {
        SgDerivative::new(order, window, polyorder)?;
        let half = window / 2;
        let scale = half.max(1) as f64;
        let xs: Vec<f64> = (0..window).map(|r| (r as f64 - half as f64) / scale).collect();
        let m = polyorder + 1;

        // Orthonormal polynomials over the window points by modified
        // Gram–Schmidt on the monomials, tracking monomial coefficients.
        let mut values: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(m);
        for q in 0..m {
            let mut v: Vec<f64> = xs.iter().map(|x| x.powi(q as i32)).collect();
            let mut c = vec![0.0; m];
            c[q] = 1.0;
            for _pass in 0..2 {
                for (vj, cj) in values.iter().zip(&coeffs) {
                    let proj: f64 = v.iter().zip(vj).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(vj).for_each(|(a, b)| *a -= proj * b);
                    c.iter_mut().zip(cj).for_each(|(a, b)| *a -= proj * b);
                }
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
            c.iter_mut().for_each(|a| *a /= norm);
            values.push(v);
            coeffs.push(c);
        }

        let falling = |q: usize| -> f64 { ((q - order + 1)..=q).map(|k| k as f64).product() };
        let index_scale = scale.powi(-(order as i32));
        let weights = (0..window)
            .map(|z| {
                let x = xs[z];
                // Derivative of each orthonormal polynomial at x.
                let dq: Vec<f64> = coeffs
                    .iter()
                    .map(|c| {
                        (order..m)
                            .map(|q| c[q] * falling(q) * x.powi((q - order) as i32))
                            .sum::<f64>()
                    })
                    .collect();
                (0..window)
                    .map(|r| {
                        values.iter().zip(&dq).map(|(v, d)| v[r] * d).sum::<f64>() * index_scale
                    })
                    .collect()
            })
            .collect();
        Ok(Self { window, weights })
    }

    pub fn central(&self) -> &[f64] {
        &self.weights[self.window / 2]
    }

    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        let (n, w, half) = (row.len(), self.window, self.window / 2);
        if w > n {
            return Err(Error::InvalidArgument(format!(
                "window {w} exceeds the {n} available features"
            )));
        }
        let dot = |weights: &[f64], start: usize| -> f64 {
            weights.iter().zip(&row[start..start + w]).map(|(a, b)| a * b).sum()
        };
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            *o = if i < half {
                dot(&self.weights[i], 0)
            } else if i + half >= n {
                dot(&self.weights[i + w - n], n - w)
            } else {
                dot(self.central(), i - half)
            };
        }
        Ok(out)
    }
}

/// Savitzky–Golay derivative of every row, unit channel spacing.
pub fn savgol_derivative(
    matrix: &SpectralMatrix,
    order: usize,
    window: usize,
    polyorder: usize,
) -> Result<SpectralMatrix> {
    let kernel = SavgolKernel::new(order, window, polyorder)?;
    matrix.map_rows(|r| kernel.apply(r))
}

/// Single min–max pair learned from a training matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedScaler {
    pub global_min: f64,
    pub global_max: f64,
}

impl FittedScaler {
    pub fn apply(&self, matrix: &SpectralMatrix) -> Result<SpectralMatrix> {
        let range = self.global_max - self.global_min;
        matrix.with_data(matrix.data().iter().map(|x| (x - self.global_min) / range).collect())
    }
}

pub fn fit_global_scaler(train: &SpectralMatrix) -> Result<FittedScaler> {
    if train.n_samples() == 0 {
        return Err(Error::EmptyDataset);
    }
    let (lo, hi) = train
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !(hi > lo) {
        return Err(Error::ZeroVariance("training matrix is constant".into()));
    }
    Ok(FittedScaler {
        global_min: lo,
        global_max: hi,
    })
}

pub fn apply_scaler(scaler: &FittedScaler, matrix: &SpectralMatrix) -> Result<SpectralMatrix> {
    scaler.apply(matrix)
}

/// Applies the row steps to both partitions, then fits global scaling (if
/// present) on the transformed training partition and applies it to both.
pub fn apply_pipeline(
    pipeline: &Pipeline,
    train: &SpectralMatrix,
    eval: &SpectralMatrix,
) -> Result<(SpectralMatrix, SpectralMatrix, Option<FittedScaler>)> {
    if train.axis() != eval.axis() {
        return Err(Error::Shape("train and eval spectra use different axes".into()));
    }
    let (mut tr, mut ev) = (train.clone(), eval.clone());
    let mut scaler = None;
    for step in pipeline.steps() {
        if step.is_row_step() {
            tr = step.apply_rows(&tr)?;
            ev = step.apply_rows(&ev)?;
        } else {
            let s = fit_global_scaler(&tr)?;
            tr = s.apply(&tr)?;
            ev = s.apply(&ev)?;
            scaler = Some(s);
        }
    }
    Ok((tr, ev, scaler))
}

/// The 64 preprocessing procedures: raw, four families of 15–16 procedures
/// built from LB / SNV / derivative combinations with and without global
/// scaling, and global scaling alone.
pub fn design_matrix() -> Vec<Pipeline> {
    let derivatives: Vec<PreprocStep> = FIRST_DERIVATIVE_WINDOWS
        .iter()
        .map(|&w| (1, w))
        .chain(SECOND_DERIVATIVE_WINDOWS.iter().map(|&w| (2, w)))
        .map(|(o, w)| PreprocStep::Derivative(SgDerivative::with_default_polyorder(o, w).expect("valid grid")))
        .collect();

    use PreprocStep::{GlobalScale as GS, LinearBaseline as LB, Snv as SNV};
    let lb_family = || {
        let mut v = vec![vec![LB], vec![LB, SNV]];
        v.extend(derivatives.iter().map(|&d| vec![LB, SNV, d]));
        v
    };
    let snv_family = || {
        let mut v = vec![vec![SNV]];
        v.extend(derivatives.iter().map(|&d| vec![SNV, d]));
        v
    };
    let with_gs = |rows: Vec<Vec<PreprocStep>>| {
        rows.into_iter()
            .map(|mut r| {
                r.push(GS);
                r
            })
            .collect::<Vec<_>>()
    };

    let mut rows: Vec<Vec<PreprocStep>> = vec![vec![]];
    rows.extend(lb_family());
    rows.extend(snv_family());
    rows.extend(with_gs(lb_family()));
    rows.extend(with_gs(snv_family()));
    rows.push(vec![GS]);

    rows.into_iter()
        .enumerate()
        .map(|(i, steps)| Pipeline::new(Some(i as u32 + 1), steps).expect("design rows are ordered"))
        .collect()
}

/// Alias kept for symmetry with the other operation names.
pub fn build_design_matrix() -> Vec<Pipeline> {
    design_matrix()
}

/// CSV export with columns `ID,Baseline,Scatter,Derivative,Scaling`; `-`
/// marks a step that is not applied.
pub fn design_matrix_csv(pipelines: &[Pipeline]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["ID", "Baseline", "Scatter", "Derivative", "Scaling"])
        .expect("in-memory write");
    for p in pipelines {
        let mut cells = [
            p.id.map_or_else(|| "-".to_string(), |i| i.to_string()),
            "-".into(),
            "-".into(),
            "-".into(),
            "-".into(),
        ];
        for s in p.steps() {
            match s {
                PreprocStep::LinearBaseline => cells[1] = "LB".into(),
                PreprocStep::Snv => cells[2] = "SNV".into(),
                PreprocStep::Derivative(d) => {
                    let ord = if d.order == 1 { "1st" } else { "2nd" };
                    cells[3] = format!("{ord}, w={}", d.window);
                }
                PreprocStep::GlobalScale => cells[4] = "GS".into(),
            }
        }
        w.write_record(&cells).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
