//! Nonclassicality depth: the ordering parameter at which a violation is lost.

use serde::{Deserialize, Serialize};

use crate::criteria::{CriterionResult, CriterionSpec, Family, Registry, Tables};
use crate::error::{Error, Result};
use crate::moments::{add_noise, MomentTable, OrderingConvention};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const SCAN_POINTS: usize = 33;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcdResult {
    pub id: String,
    pub tau: f64,
    pub s_threshold: f64,
    /// Whether a sign change was found in `[-1, 1]`.
    pub bracketed: bool,
    /// Sign changes seen on the scan grid.
    pub crossings: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NcdOptions {
    pub tol: f64,
    pub scan_points: usize,
    pub convention: OrderingConvention,
    /// Largest depth searched. The physical range ends at 1 (`s = -1`);
    /// bright multi-mode beams can stay violated well beyond it.
    pub tau_max: f64,
}

impl Default for NcdOptions {
    fn default() -> Self {
        NcdOptions { tol: DEFAULT_TOL, scan_points: SCAN_POINTS, convention: OrderingConvention::default(), tau_max: 1.0 }
    }
}

/// Criterion value at depth `t = (1 - s)/2`, with values within rounding
/// of zero snapped to zero.
fn value_at(table: &MomentTable, spec: &CriterionSpec, t: f64, conv: OrderingConvention) -> Result<f64> {
    let ordered = add_noise(table, t, conv)?;
    let tables = Tables::new(&ordered)?;
    let v = spec.evaluate(&tables)?;
    let scale = spec.expr.eval_abs(tables.select(spec.basis));
    Ok(if v.abs() <= 1e-12 * scale { 0.0 } else { v })
}

pub fn ncd(table: &MomentTable, spec: &CriterionSpec, tol: f64) -> Result<NcdResult> {
    ncd_with(table, spec, &NcdOptions { tol, ..NcdOptions::default() })
}

pub fn ncd_with(table: &MomentTable, spec: &CriterionSpec, opts: &NcdOptions) -> Result<NcdResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::Invalid(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if !(opts.tau_max > 0.0) || !opts.tau_max.is_finite() {
        return Err(Error::Invalid(format!("tau_max must be positive, got {}", opts.tau_max)));
    }
    if opts.convention == OrderingConvention::LaguerreUnscaled {
        return Err(Error::Invalid("the unscaled Laguerre form has no value at s = 1".into()));
    }
    if spec.order() > table.order() {
        return Err(Error::InsufficientOrder { needed: spec.order(), available: table.order() });
    }
    let v0 = value_at(table, spec, 0.0, opts.convention)?;
    if v0 >= 0.0 {
        return Err(Error::NotViolated(spec.id.clone()));
    }
    let n = opts.scan_points.max(2);
    let grid: Vec<f64> = (0..n).map(|j| opts.tau_max * j as f64 / (n - 1) as f64).collect();
    let mut values = vec![v0];
    for &t in &grid[1..] {
        values.push(value_at(table, spec, t, opts.convention)?);
    }
    let crossings = values.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count();
    let done = |tau: f64, bracketed: bool| NcdResult {
        id: spec.id.clone(),
        tau,
        s_threshold: 1.0 - 2.0 * tau,
        bracketed,
        crossings,
    };
    let Some(j) = values.iter().position(|&v| v >= 0.0) else {
        return Ok(done(opts.tau_max, false));
    };
    if values[j] == 0.0 {
        return Ok(done(grid[j], true));
    }
    // violated at lo, not at hi
    let (mut lo, mut hi) = (grid[j - 1], grid[j]);
    // tolerance is on s, twice the depth
    while 2.0 * (hi - lo) > opts.tol {
        let mid = 0.5 * (hi + lo);
        if value_at(table, spec, mid, opts.convention)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(done(0.5 * (hi + lo), true))
}

/// Fills in the depth for every violated moment criterion.
pub fn attach_ncd(results: &mut [CriterionResult], table: &MomentTable, opts: &NcdOptions) -> Result<()> {
    let reg = Registry::standard();
    for r in results.iter_mut().filter(|r| r.violated && r.family != Family::F) {
        let Some(spec) = reg.get(&r.id) else { continue };
        match ncd_with(table, spec, opts) {
            Ok(n) => {
                r.ncd = Some(n.tau);
                r.ncd_bracketed = Some(n.bracketed);
            }
            // rounding can leave a result marginally negative but zero at s = 1
            Err(Error::NotViolated(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::MomentBasis;

    /// Paired single-mode thermal intensity moments: `<Ws^k Wi^l> = sum_j ...`,
    /// here taken from the photon-number brute force.
    fn paired_thermal(b: f64) -> MomentTable {
        let n = 400;
        MomentTable::from_fn(5, MomentBasis::Intensity, |k, l| {
            (0..n)
                .map(|m| {
                    let p = b.powi(m as i32) / (1.0 + b).powi(m as i32 + 1);
                    crate::numeric::falling_factorial(m, k) * crate::numeric::falling_factorial(m, l) * p
                })
                .sum()
        })
    }

    #[test]
    fn e001_depth_is_sqrt_b() {
        let spec = Registry::standard().get("E_001").unwrap();
        let r = ncd(&paired_thermal(0.25), spec, 1e-6).unwrap();
        assert!((r.tau - 0.5).abs() < 1e-6, "{r:?}");
        let r = ncd(&paired_thermal(1.0), spec, 1e-6).unwrap();
        assert_eq!(r.tau, 1.0);
        assert!(r.bracketed);
    }

    #[test]
    fn depth_beyond_one() {
        let spec = Registry::standard().get("E_001").unwrap();
        let table = paired_thermal(4.0);
        let r = ncd(&table, spec, 1e-6).unwrap();
        assert_eq!((r.tau, r.bracketed), (1.0, false));
        let opts = NcdOptions { tau_max: 4.0, ..NcdOptions::default() };
        let r = ncd_with(&table, spec, &opts).unwrap();
        assert!((r.tau - 2.0).abs() < 1e-6 && r.bracketed, "{r:?}");
        assert_eq!(r.s_threshold, 1.0 - 2.0 * r.tau);
    }

    #[test]
    fn not_violated() {
        let spec = Registry::standard().get("aL_20_11.s").unwrap();
        assert!(matches!(ncd(&paired_thermal(0.5), spec, 1e-6), Err(Error::NotViolated(_))));
    }
}
