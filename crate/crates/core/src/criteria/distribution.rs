//! Criteria evaluated directly on distribution elements.

use statrs::function::gamma::ln_gamma;

use super::{CriterionResult, Family, Scope};
use crate::data::JointDistribution;
use crate::error::{Error, Result};

/// `n_s! n_i! p(n_s, n_i) / p(0, 0)`.
pub fn modified_element(d: &JointDistribution, ns: usize, ni: usize) -> Result<f64> {
    let p00 = d.p(0, 0);
    if p00 <= 0.0 {
        return Err(Error::Unevaluable("F".into(), "p(0,0) = 0, modified elements undefined".into()));
    }
    let p = d.p(ns, ni);
    if p <= 0.0 {
        return Ok(0.0);
    }
    Ok((ln_gamma(ns as f64 + 1.0) + ln_gamma(ni as f64 + 1.0) + p.ln() - p00.ln()).exp())
}

/// `F_kl1` from modified elements.
pub fn f_value(d: &JointDistribution, k: usize, l: usize) -> Result<f64> {
    Ok(modified_element(d, k + 2, l)? + modified_element(d, k, l + 2)? - 2.0 * modified_element(d, k + 1, l + 1)?)
}

fn poisson_unit(mean: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if mean <= 0.0 {
        return 0.0;
    }
    (n as f64 * mean.ln() - ln_gamma(n as f64 + 1.0)).exp()
}

/// Normalized form with the Poissonian reference of equal means,
/// `p^P(0) = 1`.
pub fn f_normalized(d: &JointDistribution, k: usize, l: usize) -> Result<f64> {
    if d.p(0, 0) <= 0.0 {
        return Err(Error::Unevaluable(f_id(k, l), "p(0,0) = 0".into()));
    }
    let (ms, mi) = d.means();
    let (kf, lf) = (k as f64, l as f64);
    let a = (kf + 1.0) * (kf + 2.0);
    let b = (lf + 1.0) * (lf + 2.0);
    let c = 2.0 * (kf + 1.0) * (lf + 1.0);
    let num = a * d.p(k + 2, l) + b * d.p(k, l + 2) - c * d.p(k + 1, l + 1);
    let pr = [
        a * poisson_unit(ms, k + 2) * poisson_unit(mi, l),
        b * poisson_unit(ms, k) * poisson_unit(mi, l + 2),
        c * poisson_unit(ms, k + 1) * poisson_unit(mi, l + 1),
    ];
    let den = pr[0] + pr[1] - pr[2];
    let abs_den = pr[0] + pr[1] + pr[2];
    // equal means make the reference vanish; fall back to the size of its terms
    let scale = if den.abs() > 1e-9 * abs_den { den } else { abs_den };
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Unevaluable(f_id(k, l), "Poissonian reference vanishes".into()));
    }
    Ok(num / scale)
}

pub fn f_id(k: usize, l: usize) -> String {
    format!("F_{k}_{l}_1")
}

/// The five lines near the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FLine {
    Diagonal,
    SignalPlus(usize),
    IdlerPlus(usize),
}

impl FLine {
    pub const ALL: [FLine; 5] =
        [FLine::Diagonal, FLine::SignalPlus(1), FLine::SignalPlus(2), FLine::IdlerPlus(1), FLine::IdlerPlus(2)];

    pub fn point(&self, k: usize) -> (usize, usize) {
        match *self {
            FLine::Diagonal => (k, k),
            FLine::SignalPlus(j) => (k + j, k),
            FLine::IdlerPlus(j) => (k, k + j),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            FLine::Diagonal => "kk".into(),
            FLine::SignalPlus(j) => format!("(k+{j})k"),
            FLine::IdlerPlus(j) => format!("k(k+{j})"),
        }
    }
}

/// Indices `(k, l)` allowed by the grid, keeping a two-cell margin.
#[derive(Debug, Clone, Copy)]
pub struct FRegion {
    pub k_max: usize,
    pub l_max: usize,
}

impl FRegion {
    pub fn for_distribution(d: &JointDistribution) -> FRegion {
        FRegion { k_max: d.rows().saturating_sub(3), l_max: d.cols().saturating_sub(3) }
    }

    pub fn contains(&self, k: usize, l: usize) -> bool {
        k <= self.k_max && l <= self.l_max
    }
}

#[derive(Debug, Clone)]
pub struct FProfile {
    pub line: FLine,
    /// `(k, F, normalized F)` along the line.
    pub points: Vec<(usize, f64, f64)>,
}

impl FProfile {
    /// `k` at which the normalized value is smallest.
    pub fn argmin(&self) -> Option<(usize, f64)> {
        self.points.iter().filter(|p| p.2.is_finite()).min_by(|a, b| a.2.total_cmp(&b.2)).map(|p| (p.0, p.2))
    }

    /// Among negative normalized values, the `k` closest to zero. The
    /// Poissonian reference falls off faster than a thermal-like
    /// distribution on both sides of its peak, so the normalized
    /// profile turns there.
    pub fn turning_point(&self) -> Option<(usize, f64)> {
        self.points
            .iter()
            .filter(|p| p.2.is_finite() && p.2 < 0.0)
            .min_by(|a, b| a.2.abs().total_cmp(&b.2.abs()))
            .map(|p| (p.0, p.2))
    }
}

/// Profiles of `F` along each of the five lines.
pub fn f_lines(d: &JointDistribution, region: FRegion) -> Result<Vec<FProfile>> {
    if d.rows() < 3 || d.cols() < 3 {
        return Err(Error::Unevaluable("F".into(), "grid smaller than 3x3".into()));
    }
    let mut out = Vec::new();
    for line in FLine::ALL {
        let mut points = Vec::new();
        for k in 0.. {
            let (a, b) = line.point(k);
            if !region.contains(a, b) {
                break;
            }
            let raw = f_value(d, a, b)?;
            let norm = f_normalized(d, a, b).unwrap_or(f64::NAN);
            points.push((k, raw, norm));
        }
        out.push(FProfile { line, points });
    }
    Ok(out)
}

/// `F` criteria on the diagonal and the nearest parallel lines.
pub fn eval_f(d: &JointDistribution, region: FRegion) -> Result<Vec<CriterionResult>> {
    let profiles = f_lines(d, region)?;
    let mut out = Vec::new();
    for p in profiles {
        for (k, raw, norm) in p.points {
            let (a, b) = p.line.point(k);
            if !raw.is_finite() || !norm.is_finite() {
                log::debug!("skipping {}: not representable", f_id(a, b));
                continue;
            }
            out.push(CriterionResult {
                id: f_id(a, b),
                family: Family::F,
                scope: Scope::Global,
                order: a + b + 2,
                value: raw,
                normalized: norm,
                stderr: None,
                violated: raw < 0.0,
                ncd: None,
                ncd_bracketed: None,
                redundant: false,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DistributionKind, Matrix};

    fn paired_thermal(b: f64, n: usize) -> JointDistribution {
        let probs = Matrix::from_fn(n, n, |r, c| if r == c { (b / (1.0 + b)).powi(r as i32) / (1.0 + b) } else { 0.0 });
        JointDistribution::normalized(probs, DistributionKind::PhotonNumber).unwrap().0
    }

    #[test]
    fn paired_thermal_f001() {
        let d = paired_thermal(1.0, 60);
        assert!((f_value(&d, 0, 0).unwrap() + 1.0).abs() < 1e-10);
    }

    #[test]
    fn vacuum_corner_missing() {
        let probs = Matrix::from_fn(4, 4, |r, c| if r == 1 && c == 1 { 1.0 } else { 0.0 });
        let d = JointDistribution::new(probs, DistributionKind::PhotonNumber).unwrap();
        assert!(matches!(f_value(&d, 0, 0), Err(Error::Unevaluable(..))));
        assert!(eval_f(&d, FRegion::for_distribution(&d)).is_err());
    }

    #[test]
    fn poisson_product_is_classical() {
        let (ms, mi) = (1.5, 0.7);
        let n = 40;
        let pois = |m: f64, k: usize| (-m + k as f64 * f64::ln(m) - ln_gamma(k as f64 + 1.0)).exp();
        let probs = Matrix::from_fn(n, n, |r, c| pois(ms, r) * pois(mi, c));
        let d = JointDistribution::normalized(probs, DistributionKind::PhotonNumber).unwrap().0;
        for (k, l) in [(0, 0), (2, 1), (3, 5)] {
            let expect = ms.powi(k as i32) * mi.powi(l as i32) * (ms - mi).powi(2);
            let got = f_value(&d, k, l).unwrap();
            assert!((got - expect).abs() < 1e-9 * expect.max(1.0), "{k},{l}: {got} vs {expect}");
            // the reference carries p(0,0) = 1 while the distribution does not
            assert!((f_normalized(&d, k, l).unwrap() - d.p(0, 0)).abs() < 1e-6);
        }
    }
}
