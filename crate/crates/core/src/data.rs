//! Value types for joint counting data and their file formats.
//!
//! Histograms travel as CSV (`frames,<F>` header followed by the dense count
//! matrix, row index = signal count, column index = idler count) or JSON.
//! Distributions and reports travel as JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

/// Absolute tolerance on the total probability of a [`JointDistribution`].
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy + Default> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::default(); rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let nrows = rows.len();
        if nrows == 0 {
            return Err(Error::Invalid("matrix has no rows".into()));
        }
        let ncols = rows[0].len();
        if ncols == 0 {
            return Err(Error::Invalid("matrix has no columns".into()));
        }
        let mut data = Vec::with_capacity(nrows * ncols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::Invalid(format!(
                    "row {r} has {} entries, expected {ncols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: nrows, cols: ncols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.cols).map(|c| c.to_vec()).collect()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    /// Entry or `None` outside the stored grid.
    #[inline]
    pub fn try_get(&self, r: usize, c: usize) -> Option<T> {
        (r < self.rows && c < self.cols).then(|| self.data[r * self.cols + c])
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn map<U: Copy + Default>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

impl<T> Matrix<T> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Raw joint photocount counts `f(c_s, c_i)` and the number of frames.
#[derive(Debug, Clone, PartialEq)]
pub struct JointHistogram {
    counts: Matrix<u64>,
    frames: u64,
}

#[derive(Serialize, Deserialize)]
struct HistogramJson {
    frames: u64,
    counts: Vec<Vec<i64>>,
}

impl JointHistogram {
    pub fn new(counts: Matrix<u64>, frames: u64) -> Result<Self> {
        if frames == 0 {
            return Err(Error::Invalid("frames must be positive".into()));
        }
        let sum = counts.as_slice().iter().sum::<u64>();
        if sum > frames {
            return Err(Error::CountsExceedFrames { sum, frames });
        }
        Ok(JointHistogram { counts, frames })
    }

    fn from_signed(rows: Vec<Vec<i64>>, frames: u64) -> Result<Self> {
        let mut unsigned = Vec::with_capacity(rows.len());
        for (r, row) in rows.iter().enumerate() {
            let mut out = Vec::with_capacity(row.len());
            for (c, &v) in row.iter().enumerate() {
                if v < 0 {
                    return Err(Error::NegativeCount { row: r, col: c });
                }
                out.push(v as u64);
            }
            unsigned.push(out);
        }
        JointHistogram::new(Matrix::from_rows(&unsigned)?, frames)
    }

    pub fn counts(&self) -> &Matrix<u64> {
        &self.counts
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    pub fn total(&self) -> u64 {
        self.counts.as_slice().iter().sum()
    }

    /// Fraction of frames without a recorded cell.
    pub fn deficit(&self) -> f64 {
        1.0 - self.total() as f64 / self.frames as f64
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty histogram file".into()))?;
        let frames = header
            .trim()
            .strip_prefix("frames,")
            .ok_or_else(|| Error::Parse(format!("expected `frames,<F>` header, got `{header}`")))?
            .trim()
            .parse::<u64>()
            .map_err(|e| Error::Parse(format!("bad frame count: {e}")))?;
        let mut rows = Vec::new();
        for (r, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|tok| tok.trim().parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("row {r}: {e}")))?;
            rows.push(row);
        }
        JointHistogram::from_signed(rows, frames)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "frames,{}", self.frames).unwrap();
        for r in 0..self.counts.rows() {
            let row: Vec<String> = self.counts.row(r).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let doc: HistogramJson = serde_json::from_str(text)?;
        JointHistogram::from_signed(doc.counts, doc.frames)
    }

    pub fn to_json(&self) -> String {
        let doc = HistogramJson {
            frames: self.frames,
            counts: self.counts.to_rows().into_iter().map(|r| r.into_iter().map(|v| v as i64).collect()).collect(),
        };
        serde_json::to_string(&doc).expect("histogram serializes")
    }

    /// Empirical frequencies `counts / frames`, renormalized to unit mass.
    pub fn to_distribution(&self) -> Result<JointDistribution> {
        let total = self.total();
        if total == 0 {
            return Err(Error::Invalid("histogram holds no counts".into()));
        }
        let deficit = self.deficit();
        if deficit > 0.0 {
            log::info!("renormalizing histogram: deficit {deficit:e} of the frames");
        }
        let probs = self.counts.map(|c| c as f64 / total as f64);
        JointDistribution::new(probs, DistributionKind::Photocount)
    }
}

/// Loads a histogram from `.csv` or `.json`, by extension.
pub fn load_histogram(path: impl AsRef<Path>) -> Result<JointHistogram> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        JointHistogram::parse_json(&text)
    } else {
        JointHistogram::parse_csv(&text)
    }
}

pub fn save_histogram(h: &JointHistogram, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        h.to_json()
    } else {
        h.to_csv()
    };
    fs::write(path, text).map_err(io_err(path))
}

pub fn histogram_to_distribution(h: &JointHistogram) -> Result<JointDistribution> {
    h.to_distribution()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    PhotonNumber,
    Photocount,
}

/// Normalized joint probabilities on a finite rectangular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    probs: Matrix<f64>,
    kind: DistributionKind,
}

#[derive(Serialize, Deserialize)]
struct DistributionJson {
    kind: DistributionKind,
    probs: Vec<Vec<f64>>,
}

impl JointDistribution {
    pub fn new(probs: Matrix<f64>, kind: DistributionKind) -> Result<Self> {
        if let Some(pos) = probs.as_slice().iter().position(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Invalid(format!(
                "probability at ({}, {}) is negative or not finite",
                pos / probs.cols(),
                pos % probs.cols()
            )));
        }
        let total = crate::numeric::neumaier_sum(probs.as_slice().iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(JointDistribution { probs, kind })
    }

    /// Scales non-negative weights to unit mass; returns the distribution and
    /// the mass deficit `1 - sum` of the input.
    pub fn normalized(mut weights: Matrix<f64>, kind: DistributionKind) -> Result<(Self, f64)> {
        let total = crate::numeric::neumaier_sum(weights.as_slice().iter().copied());
        if !(total > 0.0) {
            return Err(Error::Invalid("weights have no positive mass".into()));
        }
        for v in weights.as_mut_slice() {
            *v = v.max(0.0) / total;
        }
        Ok((JointDistribution::new(weights, kind)?, 1.0 - total))
    }

    /// Point mass at `(0, 0)`.
    pub fn vacuum(rows: usize, cols: usize, kind: DistributionKind) -> Self {
        let mut probs = Matrix::zeros(rows.max(1), cols.max(1));
        probs.set(0, 0, 1.0);
        JointDistribution { probs, kind }
    }

    pub fn probs(&self) -> &Matrix<f64> {
        &self.probs
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.probs.rows()
    }

    pub fn cols(&self) -> usize {
        self.probs.cols()
    }

    #[inline]
    pub fn p(&self, ns: usize, ni: usize) -> f64 {
        self.probs.try_get(ns, ni).unwrap_or(0.0)
    }

    pub fn marginal_signal(&self) -> Vec<f64> {
        (0..self.rows()).map(|r| self.probs.row(r).iter().sum()).collect()
    }

    pub fn marginal_idler(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols()];
        for r in 0..self.rows() {
            for (c, v) in self.probs.row(r).iter().enumerate() {
                out[c] += v;
            }
        }
        out
    }

    pub fn means(&self) -> (f64, f64) {
        let mean = |m: Vec<f64>| m.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>();
        (mean(self.marginal_signal()), mean(self.marginal_idler()))
    }

    pub fn total_variation(&self, other: &JointDistribution) -> f64 {
        let rows = self.rows().max(other.rows());
        let cols = self.cols().max(other.cols());
        let mut acc = 0.0;
        for r in 0..rows {
            for c in 0..cols {
                acc += (self.p(r, c) - other.p(r, c)).abs();
            }
        }
        0.5 * acc
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let doc: DistributionJson = serde_json::from_str(text)?;
        JointDistribution::new(Matrix::from_rows(&doc.probs)?, doc.kind)
    }

    pub fn to_json(&self) -> String {
        let doc = DistributionJson { kind: self.kind, probs: self.probs.to_rows() };
        serde_json::to_string(&doc).expect("distribution serializes")
    }
}

pub fn load_distribution(path: impl AsRef<Path>) -> Result<JointDistribution> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    JointDistribution::parse_json(&text)
}

pub fn save_distribution(d: &JointDistribution, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, d.to_json()).map_err(io_err(path))
}

/// Multi-pixel intensified camera arm: `N` pixels, efficiency `eta`, mean
/// dark count per pixel `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub pixels: u32,
    pub efficiency: f64,
    pub dark_mean_per_pixel: f64,
}

impl DetectorModel {
    pub fn new(pixels: u32, efficiency: f64, dark_mean_per_pixel: f64) -> Result<Self> {
        let d = DetectorModel { pixels, efficiency, dark_mean_per_pixel };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pixels == 0 {
            return Err(Error::Invalid("detector needs at least one pixel".into()));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::Invalid(format!("efficiency {} outside [0, 1]", self.efficiency)));
        }
        if !(0.0..1.0).contains(&self.dark_mean_per_pixel) {
            return Err(Error::Invalid(format!(
                "dark count per pixel {} outside [0, 1)",
                self.dark_mean_per_pixel
            )));
        }
        Ok(())
    }

    /// Mean dark counts over the whole arm, `N * D`.
    pub fn dark_total(&self) -> f64 {
        self.pixels as f64 * self.dark_mean_per_pixel
    }
}

/// Three-component multi-mode Gaussian twin beam: paired photons plus
/// independent signal and idler noise, each Mandel-Rice distributed with
/// `M` modes of mean `B` per mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwinBeamModel {
    #[serde(rename = "M_p")]
    pub m_p: f64,
    #[serde(rename = "B_p")]
    pub b_p: f64,
    #[serde(rename = "M_s")]
    pub m_s: f64,
    #[serde(rename = "B_s")]
    pub b_s: f64,
    #[serde(rename = "M_i")]
    pub m_i: f64,
    #[serde(rename = "B_i")]
    pub b_i: f64,
}

impl TwinBeamModel {
    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("M_p", self.m_p), ("M_s", self.m_s), ("M_i", self.m_i)] {
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::Invalid(format!("{name} = {m} must be positive")));
            }
        }
        for (name, b) in [("B_p", self.b_p), ("B_s", self.b_s), ("B_i", self.b_i)] {
            if !(b >= 0.0) || !b.is_finite() {
                return Err(Error::Invalid(format!("{name} = {b} must be non-negative")));
            }
        }
        Ok(())
    }

    pub fn mean_pairs(&self) -> f64 {
        self.m_p * self.b_p
    }

    /// Mean photon numbers `(<n_s>, <n_i>)`.
    pub fn means(&self) -> (f64, f64) {
        let pairs = self.mean_pairs();
        (pairs + self.m_s * self.b_s, pairs + self.m_i * self.b_i)
    }
}

/// Record of how a report was produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input: Option<String>,
    pub distribution_kind: Option<DistributionKind>,
    pub order: usize,
    pub ordering: String,
    pub bootstrap_replicas: usize,
    pub seed: u64,
    pub normalization_deficit: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Criterion results of one analysis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub results: Vec<crate::criteria::CriterionResult>,
    pub provenance: Provenance,
}

impl AnalysisReport {
    pub fn new(results: Vec<crate::criteria::CriterionResult>, provenance: Provenance) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for r in &results {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Invalid(format!("duplicate criterion id {}", r.id)));
            }
        }
        Ok(AnalysisReport { results, provenance })
    }

    pub fn get(&self, id: &str) -> Option<&crate::criteria::CriterionResult> {
        self.results.iter().find(|r| r.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let report: AnalysisReport = serde_json::from_str(text)?;
        AnalysisReport::new(report.results, report.provenance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_csv() {
        let h = JointHistogram::parse_csv("frames,4\n1,1,0\n1,1,0\n0,0,0\n").unwrap();
        assert_eq!(h.total(), 4);
        assert_eq!(h.counts().rows(), 3);
        assert_eq!(h.counts().cols(), 3);
        assert_eq!(h.to_csv(), "frames,4\n1,1,0\n1,1,0\n0,0,0\n");
    }

    #[test]
    fn negative_count_rejected() {
        let err = JointHistogram::parse_csv("frames,4\n1,-1\n0,0\n").unwrap_err();
        assert!(err.to_string().contains("negative count"), "{err}");
    }

    #[test]
    fn counts_exceeding_frames_rejected() {
        let err = JointHistogram::parse_csv("frames,2\n1,1\n1,0\n").unwrap_err();
        assert!(matches!(err, Error::CountsExceedFrames { sum: 3, frames: 2 }));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(JointHistogram::parse_csv("frames,2\n1,1\n1\n").is_err());
        assert!(JointHistogram::parse_csv("").is_err());
        assert!(JointHistogram::parse_csv("frame,2\n1\n").is_err());
    }

    #[test]
    fn direct_division() {
        let h = JointHistogram::new(Matrix::from_rows(&[vec![2, 2], vec![4, 0]]).unwrap(), 8).unwrap();
        let d = h.to_distribution().unwrap();
        assert_eq!(d.probs().to_rows(), vec![vec![0.25, 0.25], vec![0.5, 0.0]]);
        assert_eq!(d.kind(), DistributionKind::Photocount);
    }

    #[test]
    fn degenerate_delta() {
        let h = JointHistogram::new(Matrix::from_rows(&[vec![7, 0], vec![0, 0]]).unwrap(), 7).unwrap();
        let d = h.to_distribution().unwrap();
        assert_eq!(d.p(0, 0), 1.0);
        assert_eq!(d.p(1, 1), 0.0);
    }

    #[test]
    fn deficit_renormalized() {
        let h = JointHistogram::new(Matrix::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap(), 8).unwrap();
        assert!((h.deficit() - 0.5).abs() < 1e-15);
        let d = h.to_distribution().unwrap();
        assert!((d.p(1, 0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn distribution_json_round_trip() {
        let d = JointDistribution::new(
            Matrix::from_rows(&[vec![0.5, 0.125], vec![0.125, 0.25]]).unwrap(),
            DistributionKind::PhotonNumber,
        )
        .unwrap();
        let text = d.to_json();
        assert!(text.contains("\"photon_number\""));
        assert_eq!(JointDistribution::parse_json(&text).unwrap(), d);
    }

    #[test]
    fn unnormalized_distribution_rejected() {
        let m = Matrix::from_rows(&[vec![0.5, 0.4]]).unwrap();
        assert!(JointDistribution::new(m.clone(), DistributionKind::Photocount).is_err());
        let (d, deficit) = JointDistribution::normalized(m, DistributionKind::Photocount).unwrap();
        assert!((deficit - 0.1).abs() < 1e-12);
        assert!((d.p(0, 0) - 5.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn detector_validation() {
        assert!(DetectorModel::new(0, 0.5, 0.0).is_err());
        assert!(DetectorModel::new(10, 1.5, 0.0).is_err());
        assert!(DetectorModel::new(10, 0.5, -0.1).is_err());
        assert!(DetectorModel::new(10, 0.5, 0.0).is_ok());
    }
}
