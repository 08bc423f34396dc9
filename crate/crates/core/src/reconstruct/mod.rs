//! Photon-number reconstruction from photocount data: maximum-likelihood
//! expectation-maximization and the parametric calibration fit.

mod calibrate;
mod em;

pub use calibrate::{calibrate, CalibrationOptions, CalibrationParams, CalibrationResult, PARAM_NAMES};
pub use em::{em_grid, em_reconstruct, em_with, EmOptions, EmOutput, StopReason};

use crate::data::{JointDistribution, JointHistogram, Matrix};
use crate::error::{Error, Result};

/// Empirical frequencies cropped to the last non-empty row and column.
pub fn observed_frequencies(h: &JointHistogram) -> Result<Matrix<f64>> {
    let total = h.total();
    if total == 0 {
        return Err(Error::Invalid("histogram holds no counts".into()));
    }
    let (rows, cols) = support(h.counts().rows(), h.counts().cols(), |r, c| h.counts().get(r, c) > 0);
    Ok(Matrix::from_fn(rows, cols, |r, c| h.counts().get(r, c) as f64 / total as f64))
}

/// The same cropping for an exact photocount distribution.
pub fn cropped(f: &JointDistribution) -> Matrix<f64> {
    let (rows, cols) = support(f.rows(), f.cols(), |r, c| f.p(r, c) > 0.0);
    Matrix::from_fn(rows, cols, |r, c| f.p(r, c))
}

fn support(rows: usize, cols: usize, nonzero: impl Fn(usize, usize) -> bool) -> (usize, usize) {
    let (mut r_max, mut c_max) = (0, 0);
    for r in 0..rows {
        for c in 0..cols {
            if nonzero(r, c) {
                r_max = r_max.max(r);
                c_max = c_max.max(c);
            }
        }
    }
    (r_max + 1, c_max + 1)
}
