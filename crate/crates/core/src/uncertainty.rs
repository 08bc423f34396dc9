//! Bootstrap standard errors by multinomial resampling of the histogram.
//!
//! Replica `r` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to
//! stream `r`, so every replica has its own reproducible generator no
//! matter which others are run.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::Pipeline;
use crate::criteria::CriterionResult;
use crate::data::{JointHistogram, Matrix};
use crate::error::{Error, Result};
use crate::sim::multinomial;

pub const DEFAULT_REPLICAS: usize = 200;
/// Largest fraction of replicas allowed to fail.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSummary {
    pub replicas: usize,
    pub failures: usize,
    /// Sample standard deviation of each criterion value.
    pub stderr: BTreeMap<String, f64>,
    /// Standard deviation of the normalized value.
    pub normalized_stderr: BTreeMap<String, f64>,
    /// Over the replicas in which a depth was found.
    pub ncd_stderr: BTreeMap<String, f64>,
}

pub fn replica_rng(seed: u64, replica: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica as u64);
    rng
}

/// A histogram with the same frame count and the same number of recorded
/// events, drawn from the observed frequencies.
pub fn resample(h: &JointHistogram, rng: &mut ChaCha8Rng) -> Result<JointHistogram> {
    let total = h.total();
    if total == 0 {
        return Err(Error::Invalid("cannot resample an empty histogram".into()));
    }
    let probs: Vec<f64> = h.counts().as_slice().iter().map(|&c| c as f64 / total as f64).collect();
    let counts = multinomial(&probs, total, rng)?;
    let m = Matrix::from_fn(h.counts().rows(), h.counts().cols(), |r, c| counts[r * h.counts().cols() + c]);
    JointHistogram::new(m, h.frames())
}

pub fn bootstrap(h: &JointHistogram, pipeline: &Pipeline, replicas: usize, seed: u64) -> Result<BootstrapSummary> {
    bootstrap_with(h, replicas, seed, |sample| pipeline.run(sample))
}

/// Runs `analyze` on each resampled histogram.
pub fn bootstrap_with(
    h: &JointHistogram,
    replicas: usize,
    seed: u64,
    analyze: impl Fn(&JointHistogram) -> Result<Vec<CriterionResult>>,
) -> Result<BootstrapSummary> {
    if replicas < 2 {
        return Err(Error::Invalid(format!("bootstrap needs at least 2 replicas, got {replicas}")));
    }
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut normalized: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut depths: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut errors: Vec<(usize, Error)> = Vec::new();
    for r in 0..replicas {
        let sample = resample(h, &mut replica_rng(seed, r))?;
        match analyze(&sample) {
            Ok(results) => {
                for c in results {
                    values.entry(c.id.clone()).or_default().push(c.value);
                    normalized.entry(c.id.clone()).or_default().push(c.normalized);
                    if let Some(t) = c.ncd {
                        depths.entry(c.id).or_default().push(t);
                    }
                }
            }
            Err(e) => {
                log::debug!("bootstrap replica {r} failed: {e}");
                errors.push((r, e));
            }
        }
    }
    if errors.len() as f64 > MAX_FAILURE_FRACTION * replicas as f64 {
        let shown: Vec<String> = errors.iter().take(3).map(|(r, e)| format!("replica {r}: {e}")).collect();
        return Err(Error::Numerical(format!(
            "{} of {replicas} bootstrap replicas failed; first failures: {}",
            errors.len(),
            shown.join("; ")
        )));
    }
    Ok(BootstrapSummary {
        replicas,
        failures: errors.len(),
        stderr: spreads(values),
        normalized_stderr: spreads(normalized),
        ncd_stderr: spreads(depths),
    })
}

fn spreads(samples: BTreeMap<String, Vec<f64>>) -> BTreeMap<String, f64> {
    samples.into_iter().filter_map(|(id, v)| sample_sd(&v).map(|s| (id, s))).collect()
}

/// Standard deviation with the `n - 1` denominator.
pub fn sample_sd(v: &[f64]) -> Option<f64> {
    if v.len() < 2 {
        return None;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    Some((ss / (n - 1.0)).sqrt())
}

pub fn attach_stderr(results: &mut [CriterionResult], summary: &BootstrapSummary) {
    for r in results {
        r.stderr = summary.stderr.get(&r.id).copied();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_histogram_has_zero_spread() {
        let h = JointHistogram::new(Matrix::from_rows(&[vec![0, 0], vec![0, 50]]).unwrap(), 50).unwrap();
        let s = bootstrap_with(&h, 2, 7, |x| {
            let d = x.to_distribution()?;
            let t = crate::moments::factorial_moments(&d, 5)?;
            Ok(crate::criteria::eval_e(&t)?)
        })
        .unwrap();
        assert!(!s.stderr.is_empty());
        assert!(s.stderr.values().all(|v| *v == 0.0));
    }

    #[test]
    fn resample_keeps_totals() {
        let h = JointHistogram::new(Matrix::from_rows(&[vec![10, 5], vec![3, 2]]).unwrap(), 25).unwrap();
        let r = resample(&h, &mut replica_rng(1, 0)).unwrap();
        assert_eq!((r.total(), r.frames()), (20, 25));
        let again = resample(&h, &mut replica_rng(1, 0)).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn failures_abort() {
        let h = JointHistogram::new(Matrix::from_rows(&[vec![10, 5]]).unwrap(), 15).unwrap();
        let err = bootstrap_with(&h, 10, 0, |_| Err(Error::Numerical("no".into()))).unwrap_err();
        assert!(err.to_string().contains("10 of 10"), "{err}");
        assert!(bootstrap_with(&h, 1, 0, |_| Ok(vec![])).is_err());
    }

    #[test]
    fn sd_oracle() {
        assert_eq!(sample_sd(&[1.0]), None);
        assert!((sample_sd(&[1.0, 2.0, 3.0, 4.0]).unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
