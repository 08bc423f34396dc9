use serde::{Deserialize, Serialize};

use super::observed_frequencies;
use crate::data::{DetectorModel, DistributionKind, JointDistribution, JointHistogram, Matrix};
use crate::error::{Error, Result};
use crate::sim::{povm, PovmMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmOptions {
    /// Photon-number grid; chosen from the data when absent.
    pub n_max: Option<usize>,
    /// Upper bound for the automatic grid.
    pub n_cap: usize,
    /// Stop when no element moves by more than this.
    pub tol: f64,
    /// Or when the log-likelihood changes by less than this, relatively.
    pub rel_ll_tol: f64,
    pub max_iter: usize,
    /// Squared-extrapolation acceleration (SQUAREM); each accepted step
    /// still never lowers the likelihood.
    pub accelerate: bool,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions { n_max: None, n_cap: 160, tol: 1e-9, rel_ll_tol: 1e-12, max_iter: 100_000, accelerate: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ElementChange,
    LikelihoodChange,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct EmOutput {
    pub distribution: JointDistribution,
    pub iterations: usize,
    pub log_likelihood: f64,
    pub max_change: f64,
    pub stop: StopReason,
    pub converged: bool,
}

/// Grid covering de-thinned counts: largest observed count over the
/// smaller efficiency plus five standard deviations, capped.
pub fn em_grid(c_obs: usize, det_s: &DetectorModel, det_i: &DetectorModel, cap: usize) -> usize {
    let eta = det_s.efficiency.min(det_i.efficiency).max(1e-3);
    let n0 = c_obs as f64 / eta;
    let n = (n0 + 5.0 * n0.sqrt()).ceil() as usize + 1;
    n.max(c_obs).min(cap.max(c_obs))
}

pub fn em_reconstruct(h: &JointHistogram, det_s: &DetectorModel, det_i: &DetectorModel, opts: &EmOptions) -> Result<EmOutput> {
    let f = observed_frequencies(h)?;
    let c_obs = f.rows().max(f.cols()) - 1;
    let n_max = opts.n_max.unwrap_or_else(|| em_grid(c_obs, det_s, det_i, opts.n_cap));
    let ts = povm(det_s, (n_max + 20).max(c_obs).min(det_s.pixels as usize), n_max)?;
    let ti = povm(det_i, (n_max + 20).max(c_obs).min(det_i.pixels as usize), n_max)?;
    em_with(&f, &ts, &ti, opts)
}

/// Iterates from the uniform distribution. `f` holds frequencies over
/// photocounts `0..rows` and `0..cols`; only those POVM rows are used.
pub fn em_with(f: &Matrix<f64>, ts: &PovmMatrix, ti: &PovmMatrix, opts: &EmOptions) -> Result<EmOutput> {
    if !(opts.tol > 0.0) {
        return Err(Error::Invalid(format!("EM tolerance must be positive, got {}", opts.tol)));
    }
    if f.rows() > ts.c_max() + 1 || f.cols() > ti.c_max() + 1 {
        return Err(Error::Invalid(format!(
            "histogram grid {}x{} exceeds the POVM rows {}x{}",
            f.rows(),
            f.cols(),
            ts.c_max() + 1,
            ti.c_max() + 1
        )));
    }
    let mass: f64 = f.as_slice().iter().sum();
    if !(mass > 0.0) {
        return Err(Error::Invalid("histogram holds no counts".into()));
    }
    let f = f.map(|v| v / mass);
    let ts = ts.rows_upto(f.rows() - 1);
    let ti = ti.rows_upto(f.cols() - 1);
    let (ns, ni) = (ts.n_max() + 1, ti.n_max() + 1);
    let mut p = Matrix::from_fn(ns, ni, |_, _| 1.0 / (ns * ni) as f64);

    // one multiplicative update; also returns the log-likelihood of `p`
    let step = |p: &Matrix<f64>| -> Result<(Matrix<f64>, f64)> {
        let model = ts.forward(p, &ti);
        let mut ratio = Matrix::zeros(f.rows(), f.cols());
        let mut ll = 0.0;
        for (k, (&fe, &fm)) in f.as_slice().iter().zip(model.as_slice()).enumerate() {
            if fe > 0.0 {
                if !(fm > 0.0) {
                    let (r, c) = (k / f.cols(), k % f.cols());
                    return Err(Error::Numerical(format!(
                        "photocount cell ({r}, {c}) has data but zero model probability; enlarge the grid"
                    )));
                }
                ll += fe * fm.ln();
                ratio.as_mut_slice()[k] = fe / fm;
            }
        }
        let g = ts.backward(&ratio, &ti);
        let mut next = Matrix::zeros(p.rows(), p.cols());
        let mut total = 0.0;
        for ((n, &pv), &gv) in next.as_mut_slice().iter_mut().zip(p.as_slice()).zip(g.as_slice()) {
            let v = pv * gv;
            // keeps the iteration out of subnormal arithmetic
            *n = if v < 1e-250 { 0.0 } else { v };
            total += *n;
        }
        for v in next.as_mut_slice() {
            *v /= total;
        }
        Ok((next, ll))
    };

    let mut ll_prev = f64::NEG_INFINITY;
    let mut stop = StopReason::MaxIter;
    let mut last_change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let (p1, ll) = step(&p)?;
        if ll < ll_prev - 1e-12 * ll_prev.abs().max(1.0) {
            return Err(Error::Numerical(format!(
                "EM log-likelihood decreased from {ll_prev} to {ll} at iteration {iterations}"
            )));
        }
        if iterations > 0 && (ll - ll_prev).abs() <= opts.rel_ll_tol * ll.abs() {
            stop = StopReason::LikelihoodChange;
            break;
        }
        ll_prev = ll;
        let next = if opts.accelerate { squarem(&p, p1, ll, &step)? } else { p1 };
        last_change = max_abs_diff(&next, &p);
        p = next;
        iterations += 1;
        if last_change < opts.tol {
            stop = StopReason::ElementChange;
            break;
        }
    }
    if stop == StopReason::MaxIter {
        log::warn!("EM stopped at max_iter = {} with max change {last_change:e}", opts.max_iter);
    }
    let ll = log_likelihood(&f, &ts.forward(&p, &ti));
    let distribution = JointDistribution::new(p, DistributionKind::PhotonNumber)?;
    Ok(EmOutput {
        distribution,
        iterations,
        log_likelihood: ll,
        max_change: last_change,
        stop,
        converged: stop != StopReason::MaxIter,
    })
}

fn max_abs_diff(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// One squared extrapolation from `p0` given its update `p1`. Falls back
/// to two plain updates when the extrapolated point is worse than `p1`.
fn squarem(
    p0: &Matrix<f64>,
    p1: Matrix<f64>,
    ll0: f64,
    step: &impl Fn(&Matrix<f64>) -> Result<(Matrix<f64>, f64)>,
) -> Result<Matrix<f64>> {
    let (p2, ll1) = step(&p1)?;
    debug_assert!(ll1 >= ll0 - 1e-12 * ll0.abs().max(1.0));
    let (mut rr, mut vv) = (0.0, 0.0);
    for ((a, b), c) in p0.as_slice().iter().zip(p1.as_slice()).zip(p2.as_slice()) {
        let r = b - a;
        let v = c - 2.0 * b + a;
        rr += r * r;
        vv += v * v;
    }
    if vv == 0.0 {
        return Ok(p2);
    }
    let alpha = -(rr / vv).sqrt();
    if alpha >= -1.0 {
        return Ok(p2);
    }
    let mut x = Matrix::zeros(p0.rows(), p0.cols());
    let mut total = 0.0;
    for (k, xv) in x.as_mut_slice().iter_mut().enumerate() {
        let (a, b, c) = (p0.as_slice()[k], p1.as_slice()[k], p2.as_slice()[k]);
        let r = b - a;
        let v = c - 2.0 * b + a;
        *xv = (a - 2.0 * alpha * r + alpha * alpha * v).max(0.0);
        total += *xv;
    }
    for v in x.as_mut_slice() {
        *v /= total;
    }
    match step(&x) {
        Ok((x1, llx)) if llx >= ll1 => Ok(x1),
        _ => Ok(p2),
    }
}

fn log_likelihood(f: &Matrix<f64>, model: &Matrix<f64>) -> f64 {
    f.as_slice().iter().zip(model.as_slice()).filter(|(fe, _)| **fe > 0.0).map(|(fe, fm)| fe * fm.ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_detector_is_immediate() {
        let f = Matrix::from_rows(&[vec![0.5, 0.1], vec![0.1, 0.3]]).unwrap();
        let id = PovmMatrix::identity(1);
        let out = em_with(&f, &id, &id, &EmOptions::default()).unwrap();
        assert!(out.converged && out.iterations <= 2, "{out:?}");
        for (a, b) in out.distribution.probs().as_slice().iter().zip(f.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_stays_uniform() {
        let det = DetectorModel::new(1_000_000, 1.0, 0.0).unwrap();
        let counts = Matrix::from_fn(3, 3, |_, _| 100u64);
        let h = JointHistogram::new(counts, 900).unwrap();
        let opts = EmOptions { n_max: Some(2), ..EmOptions::default() };
        let out = em_reconstruct(&h, &det, &det, &opts).unwrap();
        for v in out.distribution.probs().as_slice() {
            assert!((v - 1.0 / 9.0).abs() < 1e-5, "{v}");
        }
    }

    #[test]
    fn grid_too_small_is_reported() {
        // counts at c = 2 cannot come from at most one photon without dark counts
        let det = DetectorModel::new(100, 0.5, 0.0).unwrap();
        let counts = Matrix::from_fn(3, 1, |r, _| if r == 2 { 5u64 } else { 1 });
        let h = JointHistogram::new(counts, 7).unwrap();
        let opts = EmOptions { n_max: Some(1), ..EmOptions::default() };
        assert!(matches!(em_reconstruct(&h, &det, &det, &opts), Err(Error::Numerical(_))));
    }
}
