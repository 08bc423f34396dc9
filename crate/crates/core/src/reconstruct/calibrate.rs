use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::observed_frequencies;
use crate::data::{DetectorModel, DistributionKind, JointDistribution, JointHistogram, Matrix, TwinBeamModel};
use crate::error::{Error, Result};
use crate::sim::{choose_n_max, povm_rows, twinbeam_distribution, twinbeam_weights};

pub const PARAM_NAMES: [&str; 8] = ["eta_s", "eta_i", "M_p", "B_p", "M_s", "B_s", "M_i", "B_i"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    pub eta_s: f64,
    pub eta_i: f64,
    pub twinbeam: TwinBeamModel,
}

impl CalibrationParams {
    pub fn to_array(&self) -> [f64; 8] {
        let t = &self.twinbeam;
        [self.eta_s, self.eta_i, t.m_p, t.b_p, t.m_s, t.b_s, t.m_i, t.b_i]
    }

    pub fn from_array(v: [f64; 8]) -> Self {
        CalibrationParams {
            eta_s: v[0],
            eta_i: v[1],
            twinbeam: TwinBeamModel { m_p: v[2], b_p: v[3], m_s: v[4], b_s: v[5], m_i: v[6], b_i: v[7] },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, eta) in [("eta_s", self.eta_s), ("eta_i", self.eta_i)] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::Invalid(format!("{name} = {eta} outside [0, 1]")));
            }
        }
        self.twinbeam.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub starts: usize,
    pub seed: u64,
    /// Nelder-Mead iterations per start and restart.
    pub max_iter: u64,
    pub restarts: usize,
    /// Spread of the random starts in transformed coordinates.
    pub start_spread: f64,
    /// Weight squared deviations by the inverse empirical frequency.
    pub weighted: bool,
    pub n_max: Option<usize>,
    pub n_cap: usize,
    /// Parameters varied by the fit, in the order of [`PARAM_NAMES`].
    pub free: [bool; 8],
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            starts: 8,
            seed: 0x5eed,
            max_iter: 2000,
            restarts: 4,
            start_spread: 0.3,
            weighted: false,
            n_max: None,
            n_cap: 200,
            free: [true; 8],
        }
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub params: CalibrationParams,
    pub residual: f64,
    pub initial_residual: f64,
    /// Residual reached from each start.
    pub start_residuals: Vec<f64>,
    pub at_bounds: Vec<&'static str>,
    pub evaluations: u64,
    pub n_max: usize,
    /// Photon-number distribution of the fitted model.
    pub distribution: JointDistribution,
}

fn to_free(p: f64, k: usize) -> f64 {
    if k < 2 {
        let e = p.clamp(1e-12, 1.0 - 1e-12);
        (e / (1.0 - e)).ln()
    } else {
        p.max(1e-300).ln()
    }
}

fn from_free(x: f64, k: usize) -> f64 {
    if k < 2 {
        1.0 / (1.0 + (-x).exp())
    } else {
        x.exp()
    }
}

#[derive(Clone)]
struct Objective<'a> {
    f: &'a Matrix<f64>,
    weights: Option<Matrix<f64>>,
    base: [f64; 8],
    free: Vec<usize>,
    det_s: DetectorModel,
    det_i: DetectorModel,
    n_max: usize,
}

impl Objective<'_> {
    fn params(&self, x: &[f64]) -> [f64; 8] {
        let mut v = self.base;
        for (j, &k) in self.free.iter().enumerate() {
            v[k] = from_free(x[j], k);
        }
        v
    }

    fn residual(&self, v: [f64; 8]) -> Result<f64> {
        let p = CalibrationParams::from_array(v);
        let model = model_photocounts(&p, &self.det_s, &self.det_i, self.n_max, self.f.rows() - 1, self.f.cols() - 1)?;
        let mut acc = 0.0;
        for (k, (&m, &e)) in model.as_slice().iter().zip(self.f.as_slice()).enumerate() {
            let w = self.weights.as_ref().map_or(1.0, |w| w.as_slice()[k]);
            acc += w * (m - e) * (m - e);
        }
        Ok(acc)
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        // parameters the model cannot take map to an infinite cost
        Ok(self.residual(self.params(x)).unwrap_or(f64::INFINITY))
    }
}

/// Model photocount probabilities on `0..=c_s` by `0..=c_i`.
pub fn model_photocounts(
    p: &CalibrationParams,
    det_s: &DetectorModel,
    det_i: &DetectorModel,
    n_max: usize,
    c_s: usize,
    c_i: usize,
) -> Result<Matrix<f64>> {
    let w = twinbeam_weights(&p.twinbeam, n_max)?;
    let ds = DetectorModel { efficiency: p.eta_s, ..*det_s };
    let di = DetectorModel { efficiency: p.eta_i, ..*det_i };
    let ts = povm_rows(&ds, c_s.min(ds.pixels as usize), n_max)?;
    let ti = povm_rows(&di, c_i.min(di.pixels as usize), n_max)?;
    Ok(ts.forward(&w, &ti))
}

fn at_bounds(v: &[f64; 8]) -> Vec<&'static str> {
    (0..8)
        .filter(|&k| {
            let x = v[k];
            if k < 2 {
                !(1e-6..=1.0 - 1e-6).contains(&x)
            } else {
                !(1e-8..=1e8).contains(&x)
            }
        })
        .map(|k| PARAM_NAMES[k])
        .collect()
}

/// Least-squares fit of the twin-beam model seen through both detector
/// arms. Pixel counts and dark levels come from `det_s` and `det_i`; their
/// efficiencies are ignored in favour of the fitted ones.
pub fn calibrate(
    h: &JointHistogram,
    init: &CalibrationParams,
    det_s: &DetectorModel,
    det_i: &DetectorModel,
    opts: &CalibrationOptions,
) -> Result<CalibrationResult> {
    init.validate()?;
    if opts.starts == 0 {
        return Err(Error::Invalid("at least one start is needed".into()));
    }
    let f = observed_frequencies(h)?;
    let free: Vec<usize> = (0..8).filter(|&k| opts.free[k]).collect();
    if free.is_empty() {
        return Err(Error::Invalid("no free parameters".into()));
    }
    let c_obs = f.rows().max(f.cols()) - 1;
    let n_max = match opts.n_max {
        Some(n) => n,
        None => choose_n_max(&init.twinbeam, 1e-10)?.max(c_obs + 10).min(opts.n_cap.max(c_obs + 10)),
    };
    let weights = opts.weighted.then(|| {
        let floor = 1.0 / h.total().max(1) as f64;
        f.map(|e| 1.0 / e.max(floor))
    });
    let objective = Objective { f: &f, weights, base: init.to_array(), free: free.clone(), det_s: *det_s, det_i: *det_i, n_max };
    let x_init: Vec<f64> = free.iter().map(|&k| to_free(objective.base[k], k)).collect();
    let initial_residual = objective.residual(objective.base)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let jitter = Normal::new(0.0, opts.start_spread.max(0.0)).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut start_residuals = Vec::with_capacity(opts.starts);
    let mut evaluations = 0u64;
    for start in 0..opts.starts {
        let mut x: Vec<f64> = if start == 0 {
            x_init.clone()
        } else {
            x_init.iter().map(|v| v + jitter.sample(&mut rng)).collect()
        };
        let mut cost = objective.cost(&x).unwrap_or(f64::INFINITY);
        for _ in 0..=opts.restarts {
            let (nx, nc, evals) = nelder_mead(&objective, &x, opts.max_iter)?;
            evaluations += evals;
            let improved = nc < cost && (cost - nc) > 1e-9 * nc.abs();
            if nc < cost {
                x = nx;
                cost = nc;
            }
            if !improved {
                break;
            }
        }
        log::debug!("calibration start {start}: residual {cost:e}");
        start_residuals.push(cost);
        if best.as_ref().is_none_or(|b| cost < b.1) {
            best = Some((x, cost));
        }
    }
    let (x, residual) = best.expect("at least one start");
    if !(residual < initial_residual) && initial_residual > 0.0 {
        return Err(Error::Numerical(format!(
            "calibration did not improve on the initial residual {initial_residual:e} from any start"
        )));
    }
    let v = objective.params(&x);
    let params = CalibrationParams::from_array(v);
    let flagged = at_bounds(&v);
    if !flagged.is_empty() {
        log::warn!("calibration parameters at bounds: {}", flagged.join(", "));
    }
    let distribution = match twinbeam_distribution(&params.twinbeam, n_max) {
        Ok(d) => d,
        Err(Error::TailMass { mass, .. }) => {
            log::warn!("fitted model loses {mass:e} beyond n = {n_max}");
            JointDistribution::normalized(twinbeam_weights(&params.twinbeam, n_max)?, DistributionKind::PhotonNumber)?.0
        }
        Err(e) => return Err(e),
    };
    Ok(CalibrationResult {
        params,
        residual,
        initial_residual,
        start_residuals,
        at_bounds: flagged,
        evaluations,
        n_max,
        distribution,
    })
}

fn nelder_mead(objective: &Objective<'_>, x0: &[f64], max_iter: u64) -> Result<(Vec<f64>, f64, u64)> {
    let mut simplex = vec![x0.to_vec()];
    for j in 0..x0.len() {
        let mut v = x0.to_vec();
        v[j] += 0.2;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-22)
        .map_err(|e| Error::Numerical(format!("Nelder-Mead setup: {e}")))?;
    let res = Executor::new(objective.clone(), solver)
        .configure(|s| s.max_iters(max_iter))
        .run()
        .map_err(|e| Error::Numerical(format!("Nelder-Mead: {e}")))?;
    let state = res.state();
    let evals = state.get_func_counts().values().sum();
    let x = state.get_best_param().cloned().unwrap_or_else(|| x0.to_vec());
    Ok((x, state.get_best_cost(), evals))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transforms_round_trip() {
        for (k, v) in [(0, 0.23), (1, 0.9), (3, 0.032), (5, 7.6)] {
            assert!((from_free(to_free(v, k), k) - v).abs() < 1e-14);
        }
    }

    #[test]
    fn bounds_are_flagged() {
        let mut v = [0.5, 1.0, 1.0, 1.0, 1e-10, 1.0, 1.0, 1.0];
        assert_eq!(at_bounds(&v), vec!["eta_i", "M_s"]);
        v[1] = 0.5;
        v[4] = 0.1;
        assert!(at_bounds(&v).is_empty());
    }
}
